#pragma once

#include "stheta/expansion.hpp"
#include "stheta/lattice.hpp"
#include "stheta/theta.hpp"

#include <string>

namespace stheta {

/// theta_{P,g} - theta_{Q,g} for even unimodular P, Q of equal rank.
SiegelExpansion theta_difference(const EvenLattice& p, const EvenLattice& q, int genus, int bound,
                                 const EnumerationOptions& options = {});

/// phi_g = theta_{E8+E8,g} - theta_{D16plus,g}, weight 8.
SiegelExpansion igusa_form(int genus, int bound, const EnumerationOptions& options = {});

enum class LowNormCase { none = 0, rank24_equal_roots = 1, rank32_rootless = 2, rank48_no_norm_2_4 = 3 };

struct PairCondition {
  Eigen::Index rank_p = 0;
  Eigen::Index rank_q = 0;
  NormProfile profile_p;  // up to norm 4
  NormProfile profile_q;
  std::int64_t mu_p = 0;
  std::int64_t mu_q = 0;
  bool mu_condition = false;
  LowNormCase low_norm = LowNormCase::none;

  std::string to_json() const;
};

/// m / min(mu(P), mu(Q)) <= 8, for rank(P) = rank(Q) = m.
bool mu_condition(const EvenLattice& p, const EvenLattice& q);

/// First matching case of:
///  1. rank 24, equal numbers of norm-2 vectors;
///  2. rank 32, neither has norm-2 vectors;
///  3. rank 48, neither has vectors of norm 2 or 4.
LowNormCase low_norm_case(const EvenLattice& p, const EvenLattice& q);

PairCondition pair_condition(const EvenLattice& p, const EvenLattice& q);

struct SchottkyCandidate {
  JacobiExpansion form;
  PairCondition condition;
  /// Set when mu_condition fails; the expansion is still computed.
  bool hypothesis_warning = false;
};

/// F_g = (theta_{Q,g} - theta_{P,g}) * vartheta_{2M}^{[g]}, weight (m + h)/2.
/// When the theta difference vanishes to the bound the product is returned as
/// zero without enumerating vartheta.
SchottkyCandidate schottky_jacobi_candidate(const EvenLattice& p, const EvenLattice& q, const JacobiIndex& index,
                                            int genus, int bound, const EnumerationOptions& options = {});

}  // namespace stheta
