#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace annotab {

// A single cell value as it flows through loading, execution, and
// result comparison. monostate stands for SQL NULL / empty CSV cell.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

using Row = std::vector<Cell>;

inline bool is_null(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

}  // namespace annotab
