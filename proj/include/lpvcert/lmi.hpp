#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpvcert/system.hpp"

namespace lpvcert::lmi {

/// A symmetric-matrix or scalar decision variable of an SdpProblem.
/// Symmetric matrices occupy dim*(dim+1)/2 scalar coordinates (lower
/// triangle, column major); scalars occupy one.
struct VariableSpec {
  std::string name;
  int dim = 1;          // matrix edge length; 1 for scalars
  bool matrix = false;  // symmetric matrix variable vs plain scalar
  int offset = 0;       // first coordinate in the flat decision vector

  [[nodiscard]] int size() const { return matrix ? dim * (dim + 1) / 2 : 1; }
};

/// Matrix-valued expression affine in the flat decision vector:
///   E(v) = c0 + sum_q v_q * coeff_q
/// with coefficients stored sparsely by coordinate index.
class AffineMatrixExpr {
 public:
  AffineMatrixExpr() = default;
  AffineMatrixExpr(Eigen::Index rows, Eigen::Index cols)
      : c0_(Eigen::MatrixXd::Zero(rows, cols)) {}
  explicit AffineMatrixExpr(Eigen::MatrixXd constant) : c0_(std::move(constant)) {}

  [[nodiscard]] Eigen::Index rows() const { return c0_.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return c0_.cols(); }
  [[nodiscard]] const Eigen::MatrixXd& constant() const { return c0_; }
  [[nodiscard]] const std::vector<std::pair<int, Eigen::MatrixXd>>& terms() const { return terms_; }

  void add_term(int var, const Eigen::MatrixXd& coeff);

  [[nodiscard]] Eigen::MatrixXd eval(const Eigen::VectorXd& v) const;

  AffineMatrixExpr& operator+=(const AffineMatrixExpr& other);
  AffineMatrixExpr& operator-=(const AffineMatrixExpr& other);

  friend AffineMatrixExpr operator+(AffineMatrixExpr a, const AffineMatrixExpr& b) { return a += b; }
  friend AffineMatrixExpr operator-(AffineMatrixExpr a, const AffineMatrixExpr& b) { return a -= b; }
  friend AffineMatrixExpr operator*(double s, const AffineMatrixExpr& e);

  [[nodiscard]] AffineMatrixExpr transpose() const;

  /// M^T E M for a constant M (keeps symmetry of symmetric operands).
  [[nodiscard]] AffineMatrixExpr congruence(const Eigen::MatrixXd& m) const;

  /// L * E and E * R for constant factors.
  [[nodiscard]] AffineMatrixExpr left_mul(const Eigen::MatrixXd& l) const;
  [[nodiscard]] AffineMatrixExpr right_mul(const Eigen::MatrixXd& r) const;

  /// Block composition from a dense grid of expressions.
  static AffineMatrixExpr bmat(const std::vector<std::vector<AffineMatrixExpr>>& blocks);

 private:
  Eigen::MatrixXd c0_;
  std::vector<std::pair<int, Eigen::MatrixXd>> terms_;  // sorted by coordinate
};

/// Where a constraint block came from: the equation, the P-vertex u, the
/// V-vertex v, and the coordinate index i (when applicable).
struct Provenance {
  std::string equation;
  std::optional<Eigen::VectorXd> u, v;
  std::optional<int> i;

  [[nodiscard]] std::string describe() const;
};

struct PsdConstraint {
  AffineMatrixExpr expr;  // required >= 0 (positive semidefinite)
  Provenance origin;
};

struct EqConstraint {
  AffineMatrixExpr expr;  // required == 0 entrywise
  Provenance origin;
};

/// Finite system of affine matrix inequalities/equalities in symmetric-matrix
/// (and scalar) decision variables, with an optional linear objective.
class SdpProblem {
 public:
  /// Registers a symmetric dim x dim matrix variable; returns its index.
  int add_symmetric_var(const std::string& name, int dim);
  /// Registers a scalar variable; returns its index.
  int add_scalar_var(const std::string& name);

  [[nodiscard]] const std::vector<VariableSpec>& variables() const { return vars_; }
  [[nodiscard]] int num_coords() const { return ncoords_; }

  /// Expression for a declared symmetric matrix variable.
  [[nodiscard]] AffineMatrixExpr var_expr(int var) const;
  /// Expression for a declared scalar variable (1 x 1).
  [[nodiscard]] AffineMatrixExpr scalar_expr(int var) const;

  void add_psd(AffineMatrixExpr expr, Provenance origin);
  void add_eq(AffineMatrixExpr expr, Provenance origin);

  [[nodiscard]] const std::vector<PsdConstraint>& psd_constraints() const { return psd_; }
  [[nodiscard]] const std::vector<EqConstraint>& eq_constraints() const { return eqs_; }

  /// Linear objective c . v to minimize.
  void set_objective(Eigen::VectorXd c) { objective_ = std::move(c); }
  [[nodiscard]] const std::optional<Eigen::VectorXd>& objective() const { return objective_; }

  /// Extracts the value of a symmetric matrix variable from a flat decision
  /// vector, symmetrized by construction.
  [[nodiscard]] Eigen::MatrixXd extract_matrix(int var, const Eigen::VectorXd& v) const;
  [[nodiscard]] double extract_scalar(int var, const Eigen::VectorXd& v) const;

  /// Packs matrix values into the flat coordinate layout (for tests/oracles).
  void pack_matrix(int var, const Eigen::MatrixXd& value, Eigen::VectorXd& v) const;

 private:
  std::vector<VariableSpec> vars_;
  int ncoords_ = 0;
  std::vector<PsdConstraint> psd_;
  std::vector<EqConstraint> eqs_;
  std::optional<Eigen::VectorXd> objective_;
};

/// Decay parameter: epsilon of the DT rate theorem or alpha of the unified
/// CT/DT conditions. Zero is admitted as the marginal "no guaranteed decay"
/// mode.
struct DecayRate {
  enum class Kind { EpsilonDT, AlphaCT, AlphaDT };
  Kind kind = Kind::EpsilonDT;
  double value = 0.0;

  static DecayRate epsilon_dt(double eps);
  static DecayRate alpha_ct(double alpha);
  static DecayRate alpha_dt(double alpha);

  [[nodiscard]] bool matches(TimeDomain domain) const {
    return kind == Kind::AlphaCT ? domain == TimeDomain::CT : domain == TimeDomain::DT;
  }
};

struct AssemblyOptions {
  /// Strict inequalities are tightened to <= -margin * I. Applied where the
  /// source condition is strict (the simple DT test); the rate theorems are
  /// already non-strict.
  double strict_margin = -1.0;  // < 0: use 1e-7 * (1 + max vertex norm of A)
  /// Right-hand side of the K(u) >= knorm * I normalization at P-vertices.
  double k_normalization = 1.0;
  /// Pin K_i = 0 for i >= 1 (common quadratic Lyapunov baseline).
  bool common_k = false;
};

/// Names of the Lyapunov matrix variables: K0, K1, ... Useful for reading
/// solver assignments.
std::string k_var_name(int i);

/// DT rate-aware conditions: for every (u,v) in vertices(P) x vertices(V),
///   A^T(u)[K(u)+K(v)-K0]A(u) - (1-eps)K(u) <= 0,
/// plus the per-coordinate convexity blocks and K(u) >= I.
SdpProblem assemble_aqs_dt(const LpvSystem& sys, const ParamBox& P, const ParamBox& V, double eps,
                           const AssemblyOptions& opts = {});

/// The conservative rate-free DT test over vertices(P) x vertices(P);
/// strictness handled with a margin.
SdpProblem assemble_aqs_dt_simple(const LpvSystem& sys, const ParamBox& P, double eps,
                                  const AssemblyOptions& opts = {});

/// Unified CT/DT conditions built from the 2x2 multiplier M_k(alpha).
SdpProblem assemble_aqs_general(const LpvSystem& sys, const ParamBox& P, const ParamBox& V,
                                const DecayRate& rate, const AssemblyOptions& opts = {});

/// L2-gain performance blocks with gamma as a decision variable (gamma_fixed
/// unset) or a constant. Adds the K_i B_i = 0 equalities (dropped when B_i
/// vanishes) and the gamma >= 0 block; sets the objective min gamma when
/// gamma is a variable.
SdpProblem assemble_l2(const LpvSystem& sys, const ParamBox& P, const ParamBox& V,
                       const DecayRate& rate, std::optional<double> gamma_fixed = std::nullopt,
                       const AssemblyOptions& opts = {});

}  // namespace lpvcert::lmi
