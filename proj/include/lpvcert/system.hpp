#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "lpvcert/affine.hpp"

namespace lpvcert {

enum class TimeDomain { CT, DT };

/// Axis-aligned hyper-rectangle for the scheduling value set P or rate set V.
/// Degenerate coordinates (lower_i == upper_i) are allowed; the point box at
/// the origin encodes the time-invariant (robust) mode.
class ParamBox {
 public:
  ParamBox() = default;

  ParamBox(Eigen::VectorXd lower, Eigen::VectorXd upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size()) throw std::invalid_argument("ParamBox: size mismatch");
    for (Eigen::Index i = 0; i < lower_.size(); ++i)
      if (lower_(i) > upper_(i)) throw std::invalid_argument("ParamBox: lower > upper");
  }

  /// Symmetric box [-r_1,r_1] x ... x [-r_n,r_n].
  static ParamBox symmetric(const Eigen::VectorXd& radius) { return {-radius, radius}; }

  /// Point box {0}^n.
  static ParamBox origin(int n) {
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  }

  [[nodiscard]] int dim() const { return static_cast<int>(lower_.size()); }
  [[nodiscard]] const Eigen::VectorXd& lower() const { return lower_; }
  [[nodiscard]] const Eigen::VectorXd& upper() const { return upper_; }

  [[nodiscard]] Eigen::VectorXd center() const { return 0.5 * (lower_ + upper_); }

  [[nodiscard]] bool contains(const Eigen::VectorXd& p, double tol = 0.0) const {
    if (p.size() != lower_.size()) return false;
    for (Eigen::Index i = 0; i < p.size(); ++i)
      if (p(i) < lower_(i) - tol || p(i) > upper_(i) + tol) return false;
    return true;
  }

  [[nodiscard]] bool is_point() const { return lower_ == upper_; }

 private:
  Eigen::VectorXd lower_, upper_;
};

/// All corner points in binary-counting order (coordinate 1 toggles fastest),
/// with exact duplicates from degenerate coordinates removed. The order is
/// deterministic so downstream LMI constraint ordering is reproducible.
std::vector<Eigen::VectorXd> vertices(const ParamBox& box);

inline Eigen::VectorXd center(const ParamBox& box) { return box.center(); }

/// lambda*box, scaling about the origin.
ParamBox scale_box(const ParamBox& box, double lambda);

/// LPV state-space representation with affine dependence:
///   xi x = A(p) x + B(p) w,   z = C(p) x + D(p) w,
/// where xi is d/dt (CT) or the time shift (DT).
class LpvSystem {
 public:
  LpvSystem() = default;

  LpvSystem(TimeDomain domain, AffineMatrixFamily A, AffineMatrixFamily B, AffineMatrixFamily C,
            AffineMatrixFamily D);

  /// Autonomous system (n_w = n_z = 0).
  static LpvSystem autonomous(TimeDomain domain, AffineMatrixFamily A);

  [[nodiscard]] TimeDomain domain() const { return domain_; }
  [[nodiscard]] const AffineMatrixFamily& A() const { return A_; }
  [[nodiscard]] const AffineMatrixFamily& B() const { return B_; }
  [[nodiscard]] const AffineMatrixFamily& C() const { return C_; }
  [[nodiscard]] const AffineMatrixFamily& D() const { return D_; }

  [[nodiscard]] int nx() const { return static_cast<int>(A_.rows()); }
  [[nodiscard]] int nw() const { return static_cast<int>(B_.cols()); }
  [[nodiscard]] int nz() const { return static_cast<int>(C_.rows()); }
  [[nodiscard]] int np() const { return A_.np(); }

 private:
  TimeDomain domain_ = TimeDomain::DT;
  AffineMatrixFamily A_, B_, C_, D_;
};

/// First-order discretization A_d = I + T_s A_c, B_d = T_s B_c; C, D are kept.
/// Affinity in p is preserved exactly.
LpvSystem discretize_first_order(const LpvSystem& ct, double ts);

/// The mass-spring-damper benchmark: CT dynamics
///   A_c(p) = [0 1; -k -c],  k = k0 (1 + p1),  c = c0 (1 + p2),
/// force input through B = [0; 1], position output C = [1 0], D = 0.
LpvSystem msd_continuous(double k0 = 1.0, double c0 = 1.0);

/// msd_continuous discretized with T_s (default 1/20).
LpvSystem msd_discrete(double ts = 0.05, double k0 = 1.0, double c0 = 1.0);

}  // namespace lpvcert
