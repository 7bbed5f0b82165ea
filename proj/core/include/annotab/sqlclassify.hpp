#pragma once

#include <array>
#include <bitset>
#include <string>
#include <vector>

#include "annotab/sqlexec.hpp"

namespace annotab::sqlclassify {

enum class TokenKind { Keyword, Identifier, StringLiteral, NumberLiteral, Symbol };

struct SqlToken {
    TokenKind kind;
    std::string text;   // original spelling, including quotes
    std::size_t offset; // byte offset in the input
};

// The fixed 20-component universe, in reporting order.
enum class Component {
    From, Where, And, GroupBy, Avg, Count, OrderBy, Like, Join, Max,
    Sum, Limit, Not, In, Min, Or, Union, Having, Intersect, Except,
};
inline constexpr std::size_t kComponentCount = 20;

const char* component_name(Component c);  // "FROM", "GROUP BY", ...

using ComponentSet = std::bitset<kComponentCount>;

inline bool has(const ComponentSet& s, Component c) {
    return s.test(static_cast<std::size_t>(c));
}

// Lenient tokenizer: quoted literals ('', "") are single tokens with ''
// escapes; identifiers may be backtick- or bracket-quoted; unterminated
// literals consume to end of input; keywords match case-insensitively.
std::vector<SqlToken> tokenize_sql(const std::string& sql);

// Keyword-token matching per the component rules: GROUP BY / ORDER BY need
// adjacent keywords, aggregates need a following "(", JOIN matches the
// whole JOIN family, literal and identifier content never matches.
ComponentSet detect_components(const std::vector<SqlToken>& tokens);

inline ComponentSet detect_components(const std::string& sql) {
    return detect_components(tokenize_sql(sql));
}

// A query whose component set is exactly {FROM}.
bool is_simple_query(const ComponentSet& s);

struct ComponentBucket {
    std::string name;
    std::uint64_t total = 0;
    std::uint64_t valid = 0;
    std::uint64_t error = 0;
    std::uint64_t empty = 0;
    double pct_valid = 0.0;
    double pct_error = 0.0;
    double pct_empty = 0.0;
};

struct ComponentStatsTable {
    ComponentBucket total;                  // the Total row
    std::vector<ComponentBucket> buckets;   // one per component, fixed order
    double pct_simple_of_valid = 0.0;       // share of Valid queries that are bare FROM
};

// Per-component counts and percentages (half-away-from-zero, 2 decimals).
// A query contributes to every component it contains.
ComponentStatsTable aggregate_component_stats(
    const std::vector<std::pair<ComponentSet, sqlexec::AnnotationStatus>>& records);

std::string stats_to_csv(const ComponentStatsTable& table);
std::string stats_to_text(const ComponentStatsTable& table);

}  // namespace annotab::sqlclassify
