#include "lpvcert/system.hpp"

#include <algorithm>

namespace lpvcert {

std::vector<Eigen::VectorXd> vertices(const ParamBox& box) {
  const int n = box.dim();
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<size_t>(1) << std::min(n, 20));
  for (long code = 0; code < (1L << n); ++code) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = ((code >> i) & 1) ? box.upper()(i) : box.lower()(i);
    bool dup = false;
    for (const auto& w : out)
      if (w == v) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(std::move(v));
  }
  return out;
}

ParamBox scale_box(const ParamBox& box, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("scale_box: negative scale");
  return {lambda * box.lower(), lambda * box.upper()};
}

LpvSystem::LpvSystem(TimeDomain domain, AffineMatrixFamily A, AffineMatrixFamily B,
                     AffineMatrixFamily C, AffineMatrixFamily D)
    : domain_(domain), A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)) {
  if (A_.rows() != A_.cols()) throw std::invalid_argument("LpvSystem: A not square");
  if (B_.rows() != A_.rows()) throw std::invalid_argument("LpvSystem: B row count != n_x");
  if (C_.cols() != A_.cols()) throw std::invalid_argument("LpvSystem: C column count != n_x");
  if (D_.rows() != C_.rows() || D_.cols() != B_.cols())
    throw std::invalid_argument("LpvSystem: D shape inconsistent with B, C");
  if (B_.np() != A_.np() || C_.np() != A_.np() || D_.np() != A_.np())
    throw std::invalid_argument("LpvSystem: families disagree on n_p");
}

LpvSystem LpvSystem::autonomous(TimeDomain domain, AffineMatrixFamily A) {
  const int nx = static_cast<int>(A.rows());
  const int np = A.np();
  return {domain, std::move(A), AffineMatrixFamily::zero(nx, 0, np),
          AffineMatrixFamily::zero(0, nx, np), AffineMatrixFamily::zero(0, 0, np)};
}

LpvSystem discretize_first_order(const LpvSystem& ct, double ts) {
  if (ct.domain() != TimeDomain::CT)
    throw std::invalid_argument("discretize_first_order: system is not continuous-time");
  if (!(ts > 0.0)) throw std::invalid_argument("discretize_first_order: T_s must be positive");

  std::vector<Eigen::MatrixXd> a, b;
  a.reserve(static_cast<size_t>(ct.np()) + 1);
  b.reserve(static_cast<size_t>(ct.np()) + 1);
  for (int i = 0; i <= ct.np(); ++i) {
    Eigen::MatrixXd ai = ts * ct.A().coeff(i);
    if (i == 0) ai += Eigen::MatrixXd::Identity(ct.nx(), ct.nx());
    a.push_back(std::move(ai));
    b.push_back(ts * ct.B().coeff(i));
  }
  return {TimeDomain::DT, AffineMatrixFamily(std::move(a)), AffineMatrixFamily(std::move(b)),
          ct.C(), ct.D()};
}

LpvSystem msd_continuous(double k0, double c0) {
  Eigen::MatrixXd a0(2, 2), a1(2, 2), a2(2, 2);
  a0 << 0, 1, -k0, -c0;
  a1 << 0, 0, -k0, 0;
  a2 << 0, 0, 0, -c0;
  Eigen::MatrixXd b0(2, 1), z21 = Eigen::MatrixXd::Zero(2, 1);
  b0 << 0, 1;
  Eigen::MatrixXd c(1, 2), zc = Eigen::MatrixXd::Zero(1, 2);
  c << 1, 0;
  const Eigen::MatrixXd d = Eigen::MatrixXd::Zero(1, 1);
  return {TimeDomain::CT, AffineMatrixFamily({a0, a1, a2}), AffineMatrixFamily({b0, z21, z21}),
          AffineMatrixFamily({c, zc, zc}), AffineMatrixFamily({d, d, d})};
}

LpvSystem msd_discrete(double ts, double k0, double c0) {
  return discretize_first_order(msd_continuous(k0, c0), ts);
}

}  // namespace lpvcert
