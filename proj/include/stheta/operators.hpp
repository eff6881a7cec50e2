#pragma once

#include "stheta/expansion.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stheta {

/// Siegel Phi-operator on coefficients: keeps the indices whose last row and
/// column vanish and drops that row/column. (For psd T a zero corner entry
/// already forces the whole last row to vanish, so this is the exact image of
/// the limit t -> infinity of f(diag(tau, it)).)
SiegelExpansion siegel_phi(const SiegelExpansion& e);

/// Siegel-Jacobi Psi-operator: as siegel_phi, additionally requiring the last
/// row of R (the coefficient of the appended zero column of z) to vanish.
JacobiExpansion siegel_jacobi_psi(const JacobiExpansion& f);

/// Series product f(tau) * F(tau, z):
/// c(T, R) = sum over T1 + T2 = T of a_f(T1) c_F(T2, R).
/// Complete to min of the two bounds; weight tags add.
JacobiExpansion shimura_product(const SiegelExpansion& f, const JacobiExpansion& F);

enum class FamilyKind { siegel, jacobi };

struct StableStep {
  int from = 0;
  int to = 0;
  bool pass = true;
  /// canonical_key of the first index where operator(F_from) and F_to differ.
  std::optional<std::string> witness;
};

struct StableFamilyReport {
  FamilyKind kind = FamilyKind::siegel;
  std::vector<int> genera;
  int bound = 0;
  std::vector<StableStep> steps;

  bool passed() const;
  /// {"kind":..., "genera":[...], "bound":N, "steps":[{"from","to","pass","witness"}]}
  std::string to_json() const;
};

/// Applies Phi (Psi) to each member of a family listed by increasing,
/// consecutive genus and compares with the previous member up to the common
/// bound. Weight (and index) must agree across the family.
StableFamilyReport verify_stable(std::span<const SiegelExpansion> family);
StableFamilyReport verify_stable(std::span<const JacobiExpansion> family);

}  // namespace stheta
