#include "annotab/schema.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

#include <json.hpp>

#include "annotab/errors.hpp"

namespace annotab::schema {

namespace {

bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }

std::string capitalize_concat(const std::string& text) {
    std::string out;
    bool token_start = true;
    for (unsigned char c : text) {
        if (!is_alnum(c)) {
            token_start = true;
            continue;
        }
        if (token_start) {
            out += static_cast<char>(std::toupper(c));
            token_start = false;
        } else {
            out += static_cast<char>(c);
        }
    }
    return out;
}

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool parse_int64(const std::string& s, std::int64_t& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

std::string derive_table_name(const std::string& file_name, bool sanitize) {
    std::string base = file_name;
    if (auto slash = base.find_last_of("/\\"); slash != std::string::npos) {
        base = base.substr(slash + 1);
    }
    if (auto dot = base.find_last_of('.'); dot != std::string::npos && dot > 0) {
        base = base.substr(0, dot);
    }
    std::string name = capitalize_concat(base);
    if (name.empty()) throw EmptyName("no alphanumeric content in file name: " + file_name);
    if (sanitize && std::isdigit(static_cast<unsigned char>(name[0]))) {
        name.insert(name.begin(), 'T');
    }
    return name;
}

std::string normalize_column_name(const std::string& header, bool sanitize,
                                  std::size_t column_index) {
    std::string name = capitalize_concat(header);
    if (name.empty()) {
        name = "Col" + std::to_string(column_index);
    }
    if (sanitize && std::isdigit(static_cast<unsigned char>(name[0]))) {
        name.insert(name.begin(), 'T');
    }
    return name;
}

std::vector<std::string> normalize_headers(const std::vector<std::string>& headers,
                                           bool sanitize) {
    std::vector<std::string> out;
    std::unordered_map<std::string, int> seen;  // lower-cased name -> uses
    for (std::size_t i = 0; i < headers.size(); ++i) {
        std::string name = normalize_column_name(headers[i], sanitize, i);
        std::string key = lower(name);
        if (seen.count(key) == 0) {
            seen[key] = 1;
        } else {
            int n = seen[key];
            std::string candidate;
            do {
                ++n;
                candidate = name + std::to_string(n);
            } while (seen.count(lower(candidate)) != 0);
            seen[key] = n;
            seen[lower(candidate)] = 1;
            name = candidate;
        }
        out.push_back(std::move(name));
    }
    return out;
}

SqlType infer_column_type(const std::vector<std::string>& cells) {
    bool any = false;
    bool all_int = true;
    bool all_num = true;
    for (const auto& cell : cells) {
        if (cell.empty()) continue;
        any = true;
        std::int64_t i;
        if (!parse_int64(cell, i)) {
            all_int = false;
            double d;
            if (!parse_double(cell, d)) {
                all_num = false;
                break;
            }
        }
    }
    if (!any || !all_num) return SqlType::Text;
    return all_int ? SqlType::BigInt : SqlType::Float;
}

Cell type_cell(const std::string& raw, SqlType type) {
    if (raw.empty()) return std::monostate{};
    switch (type) {
        case SqlType::BigInt: {
            std::int64_t v = 0;
            if (parse_int64(raw, v)) return v;
            // Integral floats ("525000.0") still land in BIGINT columns.
            double d = 0;
            if (parse_double(raw, d) && d == std::floor(d) &&
                d >= -9.2233720368547758e18 && d <= 9.2233720368547758e18) {
                return static_cast<std::int64_t>(d);
            }
            return std::monostate{};
        }
        case SqlType::Float: {
            double v = 0;
            if (parse_double(raw, v)) return v;
            return std::monostate{};
        }
        case SqlType::Text:
            return raw;
    }
    return raw;
}

std::pair<Table, TableSchema> build_table(const RawTable& raw, bool sanitize) {
    Table table;
    table.name = derive_table_name(raw.source_file, sanitize);
    auto names = normalize_headers(raw.headers, sanitize);
    const std::size_t width = names.size();
    std::vector<SqlType> types(width, SqlType::Text);
    {
        std::vector<std::string> column;
        column.reserve(raw.rows.size());
        for (std::size_t c = 0; c < width; ++c) {
            column.clear();
            for (const auto& row : raw.rows) column.push_back(row[c]);
            types[c] = infer_column_type(column);
        }
    }
    for (std::size_t c = 0; c < width; ++c) {
        table.columns.emplace_back(names[c], types[c]);
    }
    for (const auto& raw_row : raw.rows) {
        Row row;
        row.reserve(width);
        for (std::size_t c = 0; c < width; ++c) {
            row.push_back(type_cell(raw_row[c], types[c]));
        }
        table.rows.push_back(std::move(row));
    }
    return {table, schema_of(table)};
}

TableSchema schema_of(const Table& table) {
    TableSchema s;
    s.table_name = table.name;
    s.columns = table.columns;
    if (!table.rows.empty()) s.example_row = table.rows.front();
    return s;
}

std::string render_create_table(const TableSchema& schema) {
    std::string out = "CREATE TABLE " + schema.table_name + "(\n";
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
        out += "    " + schema.columns[i].first + "  " +
               ingest::sql_type_name(schema.columns[i].second);
        if (i + 1 < schema.columns.size()) out += ',';
        out += '\n';
    }
    out += ");";
    return out;
}

std::string render_example_row(const TableSchema& schema) {
    if (!schema.example_row) throw MissingRow("table " + schema.table_name + " has no rows");
    std::string out = "{";
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
        if (i) out += ", ";
        out += nlohmann::json(schema.columns[i].first).dump();
        out += ": ";
        const Cell& cell = (*schema.example_row)[i];
        if (is_null(cell)) {
            out += "null";
        } else if (const auto* iv = std::get_if<std::int64_t>(&cell)) {
            out += nlohmann::json(*iv).dump();
        } else if (const auto* dv = std::get_if<double>(&cell)) {
            out += nlohmann::json(*dv).dump();
        } else {
            out += nlohmann::json(std::get<std::string>(cell)).dump();
        }
    }
    out += "}";
    return out;
}

}  // namespace annotab::schema
