#include "lpvcert/lmi.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace lpvcert::lmi {

void AffineMatrixExpr::add_term(int var, const Eigen::MatrixXd& coeff) {
  assert(coeff.rows() == rows() && coeff.cols() == cols());
  auto it = std::lower_bound(terms_.begin(), terms_.end(), var,
                             [](const auto& t, int v) { return t.first < v; });
  if (it != terms_.end() && it->first == var)
    it->second += coeff;
  else
    terms_.insert(it, {var, coeff});
}

Eigen::MatrixXd AffineMatrixExpr::eval(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd out = c0_;
  for (const auto& [q, m] : terms_) out += v(q) * m;
  return out;
}

AffineMatrixExpr& AffineMatrixExpr::operator+=(const AffineMatrixExpr& other) {
  c0_ += other.c0_;
  for (const auto& [q, m] : other.terms_) add_term(q, m);
  return *this;
}

AffineMatrixExpr& AffineMatrixExpr::operator-=(const AffineMatrixExpr& other) {
  c0_ -= other.c0_;
  for (const auto& [q, m] : other.terms_) add_term(q, -m);
  return *this;
}

AffineMatrixExpr operator*(double s, const AffineMatrixExpr& e) {
  AffineMatrixExpr out(s * e.c0_);
  out.terms_.reserve(e.terms_.size());
  for (const auto& [q, m] : e.terms_) out.terms_.emplace_back(q, s * m);
  return out;
}

AffineMatrixExpr AffineMatrixExpr::transpose() const {
  AffineMatrixExpr out(c0_.transpose());
  out.terms_.reserve(terms_.size());
  for (const auto& [q, m] : terms_) out.terms_.emplace_back(q, m.transpose());
  return out;
}

AffineMatrixExpr AffineMatrixExpr::congruence(const Eigen::MatrixXd& m) const {
  AffineMatrixExpr out(m.transpose() * c0_ * m);
  out.terms_.reserve(terms_.size());
  for (const auto& [q, c] : terms_) out.terms_.emplace_back(q, m.transpose() * c * m);
  return out;
}

AffineMatrixExpr AffineMatrixExpr::left_mul(const Eigen::MatrixXd& l) const {
  AffineMatrixExpr out(l * c0_);
  out.terms_.reserve(terms_.size());
  for (const auto& [q, c] : terms_) out.terms_.emplace_back(q, l * c);
  return out;
}

AffineMatrixExpr AffineMatrixExpr::right_mul(const Eigen::MatrixXd& r) const {
  AffineMatrixExpr out(c0_ * r);
  out.terms_.reserve(terms_.size());
  for (const auto& [q, c] : terms_) out.terms_.emplace_back(q, c * r);
  return out;
}

AffineMatrixExpr AffineMatrixExpr::bmat(const std::vector<std::vector<AffineMatrixExpr>>& blocks) {
  assert(!blocks.empty() && !blocks[0].empty());
  Eigen::Index rows = 0, cols = 0;
  for (const auto& row : blocks) rows += row[0].rows();
  for (const auto& e : blocks[0]) cols += e.cols();

  AffineMatrixExpr out(rows, cols);
  Eigen::Index r0 = 0;
  for (const auto& row : blocks) {
    Eigen::Index c0 = 0;
    const Eigen::Index h = row[0].rows();
    for (const auto& e : row) {
      assert(e.rows() == h);
      out.c0_.block(r0, c0, h, e.cols()) = e.constant();
      for (const auto& [q, m] : e.terms()) {
        Eigen::MatrixXd wide = Eigen::MatrixXd::Zero(rows, cols);
        wide.block(r0, c0, h, e.cols()) = m;
        out.add_term(q, wide);
      }
      c0 += e.cols();
    }
    r0 += h;
  }
  return out;
}

std::string Provenance::describe() const {
  std::ostringstream os;
  os << equation;
  auto vec = [&os](const char* name, const Eigen::VectorXd& x) {
    os << " " << name << "=(";
    for (Eigen::Index k = 0; k < x.size(); ++k) os << (k ? "," : "") << x(k);
    os << ")";
  };
  if (u) vec("u", *u);
  if (v) vec("v", *v);
  if (i) os << " i=" << *i;
  return os.str();
}

int SdpProblem::add_symmetric_var(const std::string& name, int dim) {
  if (dim < 1) throw std::invalid_argument("add_symmetric_var: dim must be positive");
  VariableSpec spec{name, dim, true, ncoords_};
  ncoords_ += spec.size();
  vars_.push_back(std::move(spec));
  return static_cast<int>(vars_.size()) - 1;
}

int SdpProblem::add_scalar_var(const std::string& name) {
  VariableSpec spec{name, 1, false, ncoords_};
  ncoords_ += 1;
  vars_.push_back(std::move(spec));
  return static_cast<int>(vars_.size()) - 1;
}

AffineMatrixExpr SdpProblem::var_expr(int var) const {
  const VariableSpec& s = vars_.at(static_cast<size_t>(var));
  if (!s.matrix) throw std::invalid_argument("var_expr: not a matrix variable");
  AffineMatrixExpr e(s.dim, s.dim);
  int q = s.offset;
  for (int j = 0; j < s.dim; ++j)
    for (int i = j; i < s.dim; ++i) {
      Eigen::MatrixXd el = Eigen::MatrixXd::Zero(s.dim, s.dim);
      el(i, j) = 1.0;
      el(j, i) = 1.0;  // i == j leaves a single 1 on the diagonal
      e.add_term(q++, el);
    }
  return e;
}

AffineMatrixExpr SdpProblem::scalar_expr(int var) const {
  const VariableSpec& s = vars_.at(static_cast<size_t>(var));
  if (s.matrix) throw std::invalid_argument("scalar_expr: not a scalar variable");
  AffineMatrixExpr e(1, 1);
  e.add_term(s.offset, Eigen::MatrixXd::Ones(1, 1));
  return e;
}

void SdpProblem::add_psd(AffineMatrixExpr expr, Provenance origin) {
  if (expr.rows() != expr.cols()) throw std::invalid_argument("add_psd: expression not square");
  psd_.push_back({std::move(expr), std::move(origin)});
}

void SdpProblem::add_eq(AffineMatrixExpr expr, Provenance origin) {
  eqs_.push_back({std::move(expr), std::move(origin)});
}

Eigen::MatrixXd SdpProblem::extract_matrix(int var, const Eigen::VectorXd& v) const {
  const VariableSpec& s = vars_.at(static_cast<size_t>(var));
  if (!s.matrix) throw std::invalid_argument("extract_matrix: not a matrix variable");
  Eigen::MatrixXd m(s.dim, s.dim);
  int q = s.offset;
  for (int j = 0; j < s.dim; ++j)
    for (int i = j; i < s.dim; ++i) {
      m(i, j) = v(q);
      m(j, i) = v(q);
      ++q;
    }
  return m;
}

double SdpProblem::extract_scalar(int var, const Eigen::VectorXd& v) const {
  const VariableSpec& s = vars_.at(static_cast<size_t>(var));
  if (s.matrix) throw std::invalid_argument("extract_scalar: not a scalar variable");
  return v(s.offset);
}

void SdpProblem::pack_matrix(int var, const Eigen::MatrixXd& value, Eigen::VectorXd& v) const {
  const VariableSpec& s = vars_.at(static_cast<size_t>(var));
  if (!s.matrix) throw std::invalid_argument("pack_matrix: not a matrix variable");
  if (value.rows() != s.dim || value.cols() != s.dim)
    throw std::invalid_argument("pack_matrix: wrong shape");
  int q = s.offset;
  for (int j = 0; j < s.dim; ++j)
    for (int i = j; i < s.dim; ++i) v(q++) = 0.5 * (value(i, j) + value(j, i));
}

DecayRate DecayRate::epsilon_dt(double eps) {
  if (eps < 0.0 || eps >= 1.0) throw std::invalid_argument("epsilon must lie in [0,1)");
  return {Kind::EpsilonDT, eps};
}

DecayRate DecayRate::alpha_ct(double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
  return {Kind::AlphaCT, alpha};
}

DecayRate DecayRate::alpha_dt(double alpha) {
  if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must lie in (0,1]");
  return {Kind::AlphaDT, alpha};
}

std::string k_var_name(int i) { return "K" + std::to_string(i); }

namespace {

struct Workspace {
  SdpProblem problem;
  std::vector<AffineMatrixExpr> K;  // K[0..np], each nx x nx
  int gamma_var = -1;

  AffineMatrixExpr K_at(const Eigen::VectorXd& p) const {
    AffineMatrixExpr out = K[0];
    for (int i = 1; i < static_cast<int>(K.size()); ++i) out += p(i - 1) * K[i];
    return out;
  }
};

Workspace make_workspace(const LpvSystem& sys) {
  Workspace w;
  for (int i = 0; i <= sys.np(); ++i) {
    const int var = w.problem.add_symmetric_var(k_var_name(i), sys.nx());
    w.K.push_back(w.problem.var_expr(var));
  }
  return w;
}

double default_strict_margin(const LpvSystem& sys, const ParamBox& P) {
  double amax = 0.0;
  for (const auto& u : vertices(P)) {
    const Eigen::MatrixXd a = sys.A().eval(u);
    amax = std::max(amax, a.jacobiSvd().singularValues()(0));
  }
  return 1e-7 * (1.0 + amax);
}

void add_common_k_equalities(Workspace& w) {
  for (int i = 1; i < static_cast<int>(w.K.size()); ++i)
    w.problem.add_eq(w.K[static_cast<size_t>(i)], {"common-k", {}, {}, i});
}

void add_normalization(Workspace& w, const std::vector<Eigen::VectorXd>& pverts, double knorm,
                       int nx) {
  for (const auto& u : pverts) {
    AffineMatrixExpr e = w.K_at(u);
    e -= AffineMatrixExpr(knorm * Eigen::MatrixXd::Identity(nx, nx));
    w.problem.add_psd(std::move(e), {"lyapunov-positivity", u, {}, {}});
  }
}

/// A^T(u) K_i A_i + A_i^T K_i A(u), the rate-theorem convexity block.
AffineMatrixExpr dt_convexity_block(const Workspace& w, const LpvSystem& sys,
                                    const Eigen::VectorXd& u, int i) {
  const Eigen::MatrixXd au = sys.A().eval(u);
  const AffineMatrixExpr t =
      w.K[static_cast<size_t>(i)].left_mul(au.transpose()).right_mul(sys.A().coeff(i));
  return t + t.transpose();
}

/// K_i A_i + A_i^T K_i, the CT convexity block.
AffineMatrixExpr ct_convexity_block(const Workspace& w, const LpvSystem& sys, int i) {
  const AffineMatrixExpr t = w.K[static_cast<size_t>(i)].right_mul(sys.A().coeff(i));
  return t + t.transpose();
}

/// The stability expression required <= 0 at a vertex pair:
///   DT: A^T(u)[K(u) + K(v) - K0]A(u) - decay_factor * K(u)
///   CT: A^T(u)K(u) + K(u)A(u) + 2*alpha*K(u) + K(v) - K0
/// where decay_factor is (1 - eps) or alpha^2.
AffineMatrixExpr stability_block(const Workspace& w, const LpvSystem& sys,
                                 const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                 double rate_coef) {
  const Eigen::MatrixXd au = sys.A().eval(u);
  if (sys.domain() == TimeDomain::DT) {
    AffineMatrixExpr inner = w.K_at(u) + (w.K_at(v) - w.K[0]);
    return inner.congruence(au) + (-rate_coef) * w.K_at(u);
  }
  const AffineMatrixExpr t = w.K_at(u).right_mul(au);
  AffineMatrixExpr out = t + t.transpose();
  if (rate_coef != 0.0) out += (2.0 * rate_coef) * w.K_at(u);
  out += w.K_at(v) - w.K[0];
  return out;
}

/// decay_factor entering stability_block: (1-eps) / alpha^2 for DT, alpha for CT.
double rate_coefficient(const LpvSystem& sys, const DecayRate& rate) {
  if (!rate.matches(sys.domain()))
    throw std::invalid_argument("decay rate kind does not match the system time domain");
  switch (rate.kind) {
    case DecayRate::Kind::EpsilonDT:
      return 1.0 - rate.value;
    case DecayRate::Kind::AlphaDT:
      return rate.value * rate.value;
    case DecayRate::Kind::AlphaCT:
      return rate.value;
  }
  return 0.0;
}

}  // namespace

SdpProblem assemble_aqs_dt(const LpvSystem& sys, const ParamBox& P, const ParamBox& V, double eps,
                           const AssemblyOptions& opts) {
  if (sys.domain() != TimeDomain::DT)
    throw std::invalid_argument("assemble_aqs_dt: system must be discrete-time");
  if (eps < 0.0 || eps >= 1.0) throw std::invalid_argument("assemble_aqs_dt: eps must lie in [0,1)");
  if (P.dim() != sys.np() || V.dim() != sys.np())
    throw std::invalid_argument("assemble_aqs_dt: box dimension != n_p");

  Workspace w = make_workspace(sys);
  const auto pverts = vertices(P);
  const auto vverts = vertices(V);

  for (const auto& u : pverts) {
    const Eigen::MatrixXd au = sys.A().eval(u);
    for (const auto& v : vverts) {
      AffineMatrixExpr inner = (w.K_at(u) + w.K_at(v)) - w.K[0];
      AffineMatrixExpr ld = inner.congruence(au) - (1.0 - eps) * w.K_at(u);
      w.problem.add_psd(-1.0 * ld, {"dt-rate-stability", u, v, {}});
    }
  }
  for (int i = 1; i <= sys.np(); ++i)
    for (const auto& u : pverts)
      w.problem.add_psd(dt_convexity_block(w, sys, u, i), {"dt-convexity", u, {}, i});

  add_normalization(w, pverts, opts.k_normalization, sys.nx());
  if (opts.common_k) add_common_k_equalities(w);
  return std::move(w.problem);
}

SdpProblem assemble_aqs_dt_simple(const LpvSystem& sys, const ParamBox& P, double eps,
                                  const AssemblyOptions& opts) {
  if (sys.domain() != TimeDomain::DT)
    throw std::invalid_argument("assemble_aqs_dt_simple: system must be discrete-time");
  if (eps < 0.0 || eps >= 1.0)
    throw std::invalid_argument("assemble_aqs_dt_simple: eps must lie in [0,1)");
  if (P.dim() != sys.np())
    throw std::invalid_argument("assemble_aqs_dt_simple: box dimension != n_p");

  Workspace w = make_workspace(sys);
  const auto pverts = vertices(P);
  const double margin =
      opts.strict_margin >= 0.0 ? opts.strict_margin : default_strict_margin(sys, P);
  const Eigen::MatrixXd margin_eye = margin * Eigen::MatrixXd::Identity(sys.nx(), sys.nx());

  for (const auto& u : pverts) {
    const Eigen::MatrixXd au = sys.A().eval(u);
    for (const auto& l : pverts) {
      AffineMatrixExpr l1 = w.K_at(l).congruence(au) - (1.0 - eps) * w.K_at(u);
      AffineMatrixExpr e = -1.0 * l1;
      e -= AffineMatrixExpr(margin_eye);
      w.problem.add_psd(std::move(e), {"dt-simple-stability", u, l, {}});
    }
  }
  // Positivity doubles as the scale normalization (the conditions are
  // homogeneous in K, so K(u) >= I is without loss of generality).
  add_normalization(w, pverts, std::max(opts.k_normalization, margin), sys.nx());
  if (opts.common_k) add_common_k_equalities(w);
  return std::move(w.problem);
}

SdpProblem assemble_aqs_general(const LpvSystem& sys, const ParamBox& P, const ParamBox& V,
                                const DecayRate& rate, const AssemblyOptions& opts) {
  if (P.dim() != sys.np() || V.dim() != sys.np())
    throw std::invalid_argument("assemble_aqs_general: box dimension != n_p");
  const double coef = rate_coefficient(sys, rate);

  Workspace w = make_workspace(sys);
  const auto pverts = vertices(P);
  const auto vverts = vertices(V);

  for (const auto& u : pverts)
    for (const auto& v : vverts)
      w.problem.add_psd(-1.0 * stability_block(w, sys, u, v, coef), {"stability", u, v, {}});

  for (int i = 1; i <= sys.np(); ++i)
    for (const auto& u : pverts) {
      AffineMatrixExpr n = sys.domain() == TimeDomain::DT ? dt_convexity_block(w, sys, u, i)
                                                          : ct_convexity_block(w, sys, i);
      w.problem.add_psd(std::move(n), {"convexity", u, {}, i});
    }

  add_normalization(w, pverts, opts.k_normalization, sys.nx());
  if (opts.common_k) add_common_k_equalities(w);
  return std::move(w.problem);
}

SdpProblem assemble_l2(const LpvSystem& sys, const ParamBox& P, const ParamBox& V,
                       const DecayRate& rate, std::optional<double> gamma_fixed,
                       const AssemblyOptions& opts) {
  if (sys.nw() < 1 || sys.nz() < 1)
    throw std::invalid_argument(
        "assemble_l2: system has no disturbance/performance channel; use the stability "
        "assemblies instead");
  if (P.dim() != sys.np() || V.dim() != sys.np())
    throw std::invalid_argument("assemble_l2: box dimension != n_p");
  const double coef = rate_coefficient(sys, rate);

  Workspace w = make_workspace(sys);
  if (!gamma_fixed) w.gamma_var = w.problem.add_scalar_var("gamma");

  const auto pverts = vertices(P);
  const auto vverts = vertices(V);
  const int nw = sys.nw(), nz = sys.nz();

  auto gamma_eye = [&](int n) {
    if (gamma_fixed) return AffineMatrixExpr(*gamma_fixed * Eigen::MatrixXd::Identity(n, n));
    AffineMatrixExpr e(n, n);
    e.add_term(w.problem.variables()[static_cast<size_t>(w.gamma_var)].offset,
               Eigen::MatrixXd::Identity(n, n));
    return e;
  };

  for (const auto& u : pverts) {
    const Eigen::MatrixXd bu = sys.B().eval(u);
    const Eigen::MatrixXd cu = sys.C().eval(u);
    const Eigen::MatrixXd du = sys.D().eval(u);
    for (const auto& v : vverts) {
      AffineMatrixExpr lk = stability_block(w, sys, u, v, coef);
      AffineMatrixExpr kb = w.K_at(u).right_mul(bu);
      AffineMatrixExpr block = AffineMatrixExpr::bmat({
          {lk, kb, AffineMatrixExpr(cu.transpose())},
          {kb.transpose(), -1.0 * gamma_eye(nw), AffineMatrixExpr(du.transpose())},
          {AffineMatrixExpr(cu), AffineMatrixExpr(du), -1.0 * gamma_eye(nz)},
      });
      w.problem.add_psd(-1.0 * block, {"gain-block", u, v, {}});
    }
  }

  for (int i = 1; i <= sys.np(); ++i)
    for (const auto& u : pverts) {
      AffineMatrixExpr n = sys.domain() == TimeDomain::DT ? dt_convexity_block(w, sys, u, i)
                                                          : ct_convexity_block(w, sys, i);
      w.problem.add_psd(std::move(n), {"convexity", u, {}, i});
    }

  for (int i = 1; i <= sys.np(); ++i) {
    const Eigen::MatrixXd& bi = sys.B().coeff(i);
    if (bi.isZero(0.0)) continue;  // vacuous 0 = 0
    w.problem.add_eq(w.K[static_cast<size_t>(i)].right_mul(bi), {"gain-coupling", {}, {}, i});
  }

  add_normalization(w, pverts, opts.k_normalization, sys.nx());

  if (!gamma_fixed) {
    w.problem.add_psd(w.problem.scalar_expr(w.gamma_var), {"gamma-nonneg", {}, {}, {}});
    Eigen::VectorXd c = Eigen::VectorXd::Zero(w.problem.num_coords());
    c(w.problem.variables()[static_cast<size_t>(w.gamma_var)].offset) = 1.0;
    w.problem.set_objective(std::move(c));
  }
  if (opts.common_k) add_common_k_equalities(w);
  return std::move(w.problem);
}

}  // namespace lpvcert::lmi
