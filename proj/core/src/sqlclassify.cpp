#include "annotab/sqlclassify.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <unordered_set>

#include "annotab/report.hpp"

namespace annotab::sqlclassify {

namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

// Words tokenized as keywords. Covers the SQLite SELECT grammar plus the
// aggregate function names the component rules need.
const std::unordered_set<std::string>& keyword_table() {
    static const std::unordered_set<std::string> kw = {
        "SELECT", "FROM", "WHERE", "AND", "OR", "NOT", "GROUP", "BY", "ORDER",
        "HAVING", "LIMIT", "OFFSET", "UNION", "INTERSECT", "EXCEPT", "ALL",
        "DISTINCT", "AS", "JOIN", "INNER", "LEFT", "RIGHT", "FULL", "OUTER",
        "CROSS", "NATURAL", "ON", "USING", "IN", "LIKE", "GLOB", "BETWEEN",
        "IS", "NULL", "CASE", "WHEN", "THEN", "ELSE", "END", "EXISTS", "CAST",
        "ASC", "DESC", "AVG", "COUNT", "MAX", "MIN", "SUM", "WITH", "RECURSIVE",
        "VALUES", "COLLATE", "ESCAPE", "INSERT", "UPDATE", "DELETE", "CREATE",
        "DROP", "TABLE", "INTO", "SET", "NULLS", "FIRST", "LAST",
    };
    return kw;
}

}  // namespace

const char* component_name(Component c) {
    static const std::array<const char*, kComponentCount> names = {
        "FROM", "WHERE", "AND", "GROUP BY", "AVG", "COUNT", "ORDER BY",
        "LIKE", "JOIN", "MAX", "SUM", "LIMIT", "NOT", "IN", "MIN", "OR",
        "UNION", "HAVING", "INTERSECT", "EXCEPT",
    };
    return names[static_cast<std::size_t>(c)];
}

std::vector<SqlToken> tokenize_sql(const std::string& sql) {
    std::vector<SqlToken> tokens;
    std::size_t i = 0;
    const std::size_t n = sql.size();
    while (i < n) {
        char c = sql[i];
        unsigned char uc = static_cast<unsigned char>(c);
        if (std::isspace(uc)) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (c == '\'' || c == '"') {
            // Quoted literal; '' (or "") escapes the quote. Unterminated
            // literals consume to end of input. Double-quoted strings are
            // common in the generated SQL, so both quote kinds are
            // classified as string literals.
            char quote = c;
            ++i;
            while (i < n) {
                if (sql[i] == quote) {
                    if (i + 1 < n && sql[i + 1] == quote) {
                        i += 2;
                    } else {
                        ++i;
                        break;
                    }
                } else {
                    ++i;
                }
            }
            tokens.push_back({TokenKind::StringLiteral, sql.substr(start, i - start), start});
        } else if (c == '`' || c == '[') {
            char close = c == '`' ? '`' : ']';
            ++i;
            while (i < n && sql[i] != close) ++i;
            if (i < n) ++i;
            tokens.push_back({TokenKind::Identifier, sql.substr(start, i - start), start});
        } else if (sql.compare(i, 2, "--") == 0) {
            while (i < n && sql[i] != '\n') ++i;
        } else if (sql.compare(i, 2, "/*") == 0) {
            auto end = sql.find("*/", i + 2);
            i = end == std::string::npos ? n : end + 2;
        } else if (std::isdigit(uc) ||
                   (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
            while (i < n && (std::isalnum(static_cast<unsigned char>(sql[i])) ||
                             sql[i] == '.' || sql[i] == '+' || sql[i] == '-')) {
                // exponent signs only directly after e/E
                if ((sql[i] == '+' || sql[i] == '-') &&
                    !(i > start && (sql[i - 1] == 'e' || sql[i - 1] == 'E'))) {
                    break;
                }
                ++i;
            }
            tokens.push_back({TokenKind::NumberLiteral, sql.substr(start, i - start), start});
        } else if (std::isalpha(uc) || c == '_') {
            while (i < n && (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '_')) {
                ++i;
            }
            std::string word = sql.substr(start, i - start);
            TokenKind kind = keyword_table().count(upper(word)) ? TokenKind::Keyword
                                                                : TokenKind::Identifier;
            tokens.push_back({kind, std::move(word), start});
        } else {
            ++i;
            tokens.push_back({TokenKind::Symbol, sql.substr(start, 1), start});
        }
    }
    return tokens;
}

ComponentSet detect_components(const std::vector<SqlToken>& tokens) {
    ComponentSet set;
    auto mark = [&](Component c) { set.set(static_cast<std::size_t>(c)); };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].kind != TokenKind::Keyword) continue;
        std::string kw = upper(tokens[i].text);
        auto next_is = [&](const char* text) {
            return i + 1 < tokens.size() && tokens[i + 1].kind == TokenKind::Keyword &&
                   upper(tokens[i + 1].text) == text;
        };
        auto next_is_paren = [&] {
            return i + 1 < tokens.size() && tokens[i + 1].kind == TokenKind::Symbol &&
                   tokens[i + 1].text == "(";
        };
        if (kw == "FROM") mark(Component::From);
        else if (kw == "WHERE") mark(Component::Where);
        else if (kw == "AND") mark(Component::And);
        else if (kw == "GROUP" && next_is("BY")) mark(Component::GroupBy);
        else if (kw == "ORDER" && next_is("BY")) mark(Component::OrderBy);
        else if (kw == "AVG" && next_is_paren()) mark(Component::Avg);
        else if (kw == "COUNT" && next_is_paren()) mark(Component::Count);
        else if (kw == "MAX" && next_is_paren()) mark(Component::Max);
        else if (kw == "MIN" && next_is_paren()) mark(Component::Min);
        else if (kw == "SUM" && next_is_paren()) mark(Component::Sum);
        else if (kw == "LIKE") mark(Component::Like);
        else if (kw == "JOIN") mark(Component::Join);
        else if (kw == "LIMIT") mark(Component::Limit);
        else if (kw == "NOT") mark(Component::Not);
        else if (kw == "IN") mark(Component::In);
        else if (kw == "OR") mark(Component::Or);
        else if (kw == "UNION") mark(Component::Union);
        else if (kw == "HAVING") mark(Component::Having);
        else if (kw == "INTERSECT") mark(Component::Intersect);
        else if (kw == "EXCEPT") mark(Component::Except);
    }
    return set;
}

bool is_simple_query(const ComponentSet& s) {
    ComponentSet only_from;
    only_from.set(static_cast<std::size_t>(Component::From));
    return s == only_from;
}

namespace {

void finish_bucket(ComponentBucket& b) {
    if (b.total == 0) {
        b.pct_valid = b.pct_error = b.pct_empty = 0.0;
        return;
    }
    b.pct_valid = report::percent(b.valid, b.total);
    b.pct_error = report::percent(b.error, b.total);
    b.pct_empty = report::percent(b.empty, b.total);
}

void count_into(ComponentBucket& b, sqlexec::AnnotationStatus s) {
    ++b.total;
    switch (s) {
        case sqlexec::AnnotationStatus::Valid: ++b.valid; break;
        case sqlexec::AnnotationStatus::Error: ++b.error; break;
        case sqlexec::AnnotationStatus::Empty: ++b.empty; break;
    }
}

}  // namespace

ComponentStatsTable aggregate_component_stats(
    const std::vector<std::pair<ComponentSet, sqlexec::AnnotationStatus>>& records) {
    ComponentStatsTable table;
    table.total.name = "Total";
    table.buckets.resize(kComponentCount);
    for (std::size_t c = 0; c < kComponentCount; ++c) {
        table.buckets[c].name = component_name(static_cast<Component>(c));
    }
    std::uint64_t simple_valid = 0;
    for (const auto& [set, status] : records) {
        count_into(table.total, status);
        for (std::size_t c = 0; c < kComponentCount; ++c) {
            if (set.test(c)) count_into(table.buckets[c], status);
        }
        if (status == sqlexec::AnnotationStatus::Valid && is_simple_query(set)) {
            ++simple_valid;
        }
    }
    finish_bucket(table.total);
    for (auto& b : table.buckets) finish_bucket(b);
    table.pct_simple_of_valid =
        table.total.valid ? report::percent(simple_valid, table.total.valid) : 0.0;
    return table;
}

namespace {

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string stats_to_csv(const ComponentStatsTable& table) {
    std::string out = "Component,Total,Valid,% Valid,% Error,% Empty\n";
    auto row = [&](const ComponentBucket& b) {
        out += b.name + "," + std::to_string(b.total) + "," + std::to_string(b.valid) + "," +
               fmt2(b.pct_valid) + "," + fmt2(b.pct_error) + "," + fmt2(b.pct_empty) + "\n";
    };
    row(table.total);
    for (const auto& b : table.buckets) row(b);
    return out;
}

std::string stats_to_text(const ComponentStatsTable& table) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %10s %10s %9s %9s %9s\n", "Component", "Total",
                  "Valid", "% Valid", "% Error", "% Empty");
    out += line;
    auto row = [&](const ComponentBucket& b) {
        std::snprintf(line, sizeof(line), "%-10s %10llu %10llu %9.2f %9.2f %9.2f\n",
                      b.name.c_str(), static_cast<unsigned long long>(b.total),
                      static_cast<unsigned long long>(b.valid), b.pct_valid, b.pct_error,
                      b.pct_empty);
        out += line;
    };
    row(table.total);
    for (const auto& b : table.buckets) row(b);
    std::snprintf(line, sizeof(line), "Simple (FROM-only) share of Valid: %.2f%%\n",
                  table.pct_simple_of_valid);
    out += line;
    return out;
}

}  // namespace annotab::sqlclassify
