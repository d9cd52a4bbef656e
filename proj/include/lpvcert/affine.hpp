#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace lpvcert {

/// Matrix-valued affine function of a scheduling vector p:
///
///   M(p) = coeffs[0] + sum_i coeffs[i] * p_i,   i = 1..np
///
/// All coefficients share one shape; index 0 is the constant term.
class AffineMatrixFamily {
 public:
  AffineMatrixFamily() = default;

  explicit AffineMatrixFamily(std::vector<Eigen::MatrixXd> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw std::invalid_argument("AffineMatrixFamily: needs a constant term");
    for (const auto& m : coeffs_) {
      if (m.rows() != coeffs_[0].rows() || m.cols() != coeffs_[0].cols())
        throw std::invalid_argument("AffineMatrixFamily: coefficient shapes differ");
    }
  }

  /// Family of np+1 zero coefficients of the given shape.
  static AffineMatrixFamily zero(int rows, int cols, int np) {
    std::vector<Eigen::MatrixXd> c(static_cast<size_t>(np) + 1, Eigen::MatrixXd::Zero(rows, cols));
    return AffineMatrixFamily(std::move(c));
  }

  [[nodiscard]] int np() const { return static_cast<int>(coeffs_.size()) - 1; }
  [[nodiscard]] Eigen::Index rows() const { return coeffs_[0].rows(); }
  [[nodiscard]] Eigen::Index cols() const { return coeffs_[0].cols(); }

  [[nodiscard]] const Eigen::MatrixXd& coeff(int i) const { return coeffs_.at(static_cast<size_t>(i)); }
  [[nodiscard]] const std::vector<Eigen::MatrixXd>& coeffs() const { return coeffs_; }

  /// M(p) = M_0 + sum_i M_i p_i.
  [[nodiscard]] Eigen::MatrixXd eval(const Eigen::VectorXd& p) const {
    if (p.size() != np()) throw std::invalid_argument("AffineMatrixFamily::eval: p has wrong length");
    Eigen::MatrixXd out = coeffs_[0];
    for (int i = 1; i <= np(); ++i) out += coeffs_[static_cast<size_t>(i)] * p(i - 1);
    return out;
  }

  /// True when every coefficient is symmetric to the given relative tolerance.
  [[nodiscard]] bool is_symmetric(double rel_tol = 1e-12) const {
    for (const auto& m : coeffs_) {
      if (m.rows() != m.cols()) return false;
      const double scale = 1.0 + m.norm();
      if ((m - m.transpose()).norm() > rel_tol * scale) return false;
    }
    return true;
  }

 private:
  std::vector<Eigen::MatrixXd> coeffs_;
};

inline Eigen::MatrixXd eval_affine(const AffineMatrixFamily& fam, const Eigen::VectorXd& p) {
  return fam.eval(p);
}

/// Affine family with symmetric square coefficients (houses the Lyapunov
/// matrices K_0..K_np). Construction enforces symmetry to 1e-12 relative.
class SymmetricAffineFamily : public AffineMatrixFamily {
 public:
  SymmetricAffineFamily() = default;

  explicit SymmetricAffineFamily(std::vector<Eigen::MatrixXd> coeffs)
      : AffineMatrixFamily(std::move(coeffs)) {
    if (rows() != cols()) throw std::invalid_argument("SymmetricAffineFamily: coefficients not square");
    if (!is_symmetric()) throw std::invalid_argument("SymmetricAffineFamily: coefficients not symmetric");
  }
};

}  // namespace lpvcert
