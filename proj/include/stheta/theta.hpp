#pragma once

#include "stheta/expansion.hpp"
#include "stheta/lattice.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace stheta {

struct EnumerationOptions {
  /// Cap on enumeration nodes; exceeding it throws BudgetExceeded.
  std::uint64_t node_budget = 20'000'000'000ULL;
  /// Worker threads for siegel_theta; results do not depend on this value.
  int threads = 1;
};

/// Number of g-tuples (x_1, ..., x_g) of lattice vectors with Q(x_p, x_q) = (2T)_pq.
Coefficient representation_count(const EvenLattice& lattice, const HalfIntegralMatrix& t,
                                  const EnumerationOptions& options = {});

/// theta_{L,g}: the coefficient at T is representation_count(L, T); complete
/// for trace(T) <= bound, weight tag rank/2.
///
/// Tuples are enumerated once per orbit of the sign and column-permutation
/// group: sorted sequences of sign-reduced vectors, with remaining-norm
/// pruning. Each distinct Gram matrix of such a sequence is then spread over
/// its orbit and divided by the stabilizer order (repeated vectors), which is
/// exact. Columns equal to zero correspond to zero rows of T.
SiegelExpansion siegel_theta(const EvenLattice& lattice, int genus, int bound, const EnumerationOptions& options = {});

/// Coefficients of theta_{L,g} at every T whose doubled diagonal equals
/// `doubled_diagonal` (g = its length). Only tuples with exactly these norms
/// are enumerated, so large genus stays cheap for fixed small norms.
std::vector<std::pair<HalfIntegralMatrix, Coefficient>> siegel_theta_with_diagonal(
    const EvenLattice& lattice, std::span<const std::int64_t> doubled_diagonal, const EnumerationOptions& options = {});

/// vartheta_{2M}^{[g]}(tau, z) = sum over lambda in Z^(h,g) of
/// e(sigma(M (lambda tau lambda^T + 2 lambda z^T))).
/// The term of lambda sits at T = lambda^T M lambda, R = 2 lambda^T M, so every
/// coefficient is 0 or 1. Requires 2M positive definite of even degree h
/// (weight tag h/2).
JacobiExpansion jacobi_theta(const JacobiIndex& index, int genus, int bound, const EnumerationOptions& options = {});

/// vartheta_{S,c}^{(g)} for S even unimodular of rank 2k and c in Z^(2k,h):
/// the term of lambda in Z^(2k,g) sits at 2T = lambda^T S lambda,
/// R = lambda^T S c, with index M = c^T S c / 2 and weight tag k.
JacobiExpansion theta_sc(const EvenLattice& s, const IntMatrix& c, int genus, int bound,
                         const EnumerationOptions& options = {});

}  // namespace stheta
