#pragma once

#include "stheta/expansion.hpp"
#include "stheta/lattice.hpp"
#include "stheta/theta.hpp"

#include <complex>
#include <string_view>

namespace stheta {

using Complex = std::complex<double>;

/// Default tolerance on the leading principal minors of Im(tau).
inline constexpr double kUpperHalfTolerance = 1e-12;

/// True iff tau is square, exactly symmetric and every leading principal minor
/// of Im(tau) exceeds tol. Throws ShapeError for non-square or asymmetric input.
bool in_siegel_upper_half(const ComplexMatrix& tau, double tol = kUpperHalfTolerance);

/// (tau, z) in H_g x C^(h,g).
class SiegelJacobiPoint {
 public:
  /// z defaults to the empty 0 x g matrix (width 0).
  explicit SiegelJacobiPoint(ComplexMatrix tau, std::optional<ComplexMatrix> z = std::nullopt,
                             double tol = kUpperHalfTolerance);

  int genus() const { return static_cast<int>(tau_.rows()); }
  int width() const { return static_cast<int>(z_.rows()); }
  const ComplexMatrix& tau() const { return tau_; }
  const ComplexMatrix& z() const { return z_; }

 private:
  ComplexMatrix tau_;
  ComplexMatrix z_;
};

/// {"tau_re":[[..]], "tau_im":[[..]], "z_re":[[..]], "z_im":[[..]]}; z keys optional.
SiegelJacobiPoint parse_point(std::string_view document);

struct EvalResult {
  Complex value;
  /// Largest |a(T) e(sigma(T tau))| among the stored terms of maximal trace;
  /// a crude indicator of the truncation error.
  double tail = 0.0;
};

/// sum_T a(T) e(sigma(T tau)) over the stored terms, in table order.
EvalResult eval_siegel_expansion(const SiegelExpansion& e, const SiegelJacobiPoint& p);

/// sum c(T, R) e(sigma(T tau)) e(sigma(R z)); the point's width must match.
EvalResult eval_jacobi_expansion(const JacobiExpansion& f, const SiegelJacobiPoint& p);

/// Literal lattice sum over g-tuples (x_1..x_g) with sum Q(x_p, x_p) <= norm_bound
/// of exp(pi i sum_pq Q(x_p, x_q) tau_pq). Tuples are grouped by Gram matrix
/// and summed in canonical key order. Genus 1 uses a cached norm histogram.
Complex eval_theta_direct(const EvenLattice& lattice, int genus, const SiegelJacobiPoint& p, std::int64_t norm_bound,
                          const EnumerationOptions& options = {});

/// Literal sum over lambda in Z^(h,g) with sum of column norms (w.r.t. 2M) at
/// most norm_bound of e(sigma(M (lambda tau lambda^T + 2 lambda z^T))).
Complex eval_jacobi_theta_direct(const JacobiIndex& index, int genus, const SiegelJacobiPoint& p,
                                 std::int64_t norm_bound, const EnumerationOptions& options = {});

struct InversionReport {
  Complex lhs;  // theta(-1/tau)
  Complex rhs;  // (tau/i)^(m/2) theta(tau)
  double residual = 0.0;
  std::int64_t norm_bound = 0;
  /// Extrapolated size of the omitted shells (heuristic, see check_inversion_genus1).
  double tail_estimate = 0.0;
};

/// |theta(-1/tau) - (tau/i)^(m/2) theta(tau)| for an even unimodular lattice.
///
/// The direct-sum bound is chosen from tol, Im tau and Im(-1/tau): shell counts
/// beyond the computed histogram are extrapolated as c(B) (n/B)^(m/2-1), each
/// side's omitted shells are weighted by its own decay, and the bound grows
/// until the predicted tail is below tol/10. Throws BudgetExceeded when the
/// extrapolated number of lattice points exceeds the node budget.
InversionReport check_inversion_genus1(const EvenLattice& lattice, Complex tau, double tol = 1e-8,
                                       const EnumerationOptions& options = {});

/// Exact translation check: sum_T a(T) (e(sigma(T S)) - 1) for integral
/// symmetric S. Every stored sigma(T S) is decided exactly; an integral value
/// contributes exactly 0, so the result is 0.0 for any valid expansion.
double translation_residual(const SiegelExpansion& e, const IntMatrix& s);

}  // namespace stheta
