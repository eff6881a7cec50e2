#pragma once

// Independent reference computations used only by the tests. None of these
// touch the library's enumeration code.

#include "stheta/core.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace oracle {

/// Norm counts (zero excluded) of D_n^+ realized in R^n: doubled coordinates
/// y = 2x with all y_i even or all odd and sum(y) = 0 mod 4; norm = |y|^2 / 4.
std::map<std::int64_t, std::int64_t> dn_plus_profile(int n, std::int64_t bound);

/// All vectors of D_n^+ of the given norm, in doubled coordinates.
std::vector<std::vector<int>> dn_plus_vectors(int n, std::int64_t norm);

/// Sign-reduced vectors (first nonzero coordinate positive) with
/// 0 < x^T G x <= bound, found by scanning the box |x_i| <= sqrt(bound (G^-1)_ii).
std::vector<std::vector<std::int64_t>> box_short_vectors(const stheta::IntMatrix& gram, std::int64_t bound);

/// sum of d^k over the divisors d of n.
std::int64_t divisor_sigma(int k, std::int64_t n);

}  // namespace oracle
