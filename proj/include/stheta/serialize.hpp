#pragma once

#include "stheta/expansion.hpp"

#include <string>
#include <string_view>
#include <variant>

namespace stheta {

using AnyExpansion = std::variant<SiegelExpansion, JacobiExpansion>;

/// JSON document, one term per line, terms in canonical-key order,
/// coefficients as decimal strings, newline-terminated.
std::string serialize(const SiegelExpansion& e);
std::string serialize(const JacobiExpansion& e);
std::string serialize(const AnyExpansion& e);

/// Parses and validates a document (shape, evenness, trace bound, support).
/// Zero coefficients are accepted and pruned. Throws FormatError naming the
/// offending location.
AnyExpansion deserialize(std::string_view document);
SiegelExpansion deserialize_siegel(std::string_view document);
JacobiExpansion deserialize_jacobi(std::string_view document);

}  // namespace stheta
