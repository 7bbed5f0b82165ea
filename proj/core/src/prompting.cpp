#include "annotab/prompting.hpp"

#include <cctype>
#include <sstream>

#include <json.hpp>

#include "annotab/errors.hpp"

namespace annotab::prompting {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

// "12. rest" -> item number, or nullopt.
std::optional<int> item_number(const std::string& line, std::string* rest) {
    std::size_t i = line.find_first_not_of(" \t");
    if (i == std::string::npos || !std::isdigit(static_cast<unsigned char>(line[i]))) {
        return std::nullopt;
    }
    std::size_t start = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size() || line[i] != '.') return std::nullopt;
    int n = std::stoi(line.substr(start, i - start));
    if (rest) *rest = trim(line.substr(i + 1));
    return n;
}

bool is_fence(const std::string& line) { return trim(line).rfind("```", 0) == 0; }

}  // namespace

std::string build_sql_synthesis_prompt(const DbDescription& db, int n_queries,
                                       bool steer_complex) {
    const std::size_t n = db.schemas.size();
    std::string out = "We have a SQL database with " + std::to_string(n) +
                      (n == 1 ? " table." : " tables.") +
                      " For each table, here is the schema and a sample row data.\n";
    for (std::size_t i = 0; i < n; ++i) {
        out += "Schema for table " + std::to_string(i) + ":\n";
        out += schema::render_create_table(db.schemas[i]);
        out += "\nA sample row data from table " + std::to_string(i) + ":\n";
        out += schema::render_example_row(db.schemas[i]);
        out += '\n';
    }
    out += "Consider the typical users who access this database. What kind of SQLite "
           "SELECT queries would they write? List " + std::to_string(n_queries) +
           " examples SQL code that are directly executable";
    if (steer_complex) out += " with relatively high complexity";
    out += ", each following a description. If possible, use joins. Reply in the "
           "format of a description and the SQL code for each example.\n";
    return out;
}

SynthesisParse parse_sql_synthesis_response(const std::string& text) {
    auto lines = split_lines(text);
    SynthesisParse result;

    struct Span { std::string description; std::size_t begin, end; };
    std::vector<Span> spans;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string rest;
        if (item_number(lines[i], &rest)) {
            if (!spans.empty()) spans.back().end = i;
            spans.push_back({rest, i + 1, lines.size()});
        }
    }

    for (const auto& span : spans) {
        std::string sql;
        // Fenced code block first.
        for (std::size_t i = span.begin; i < span.end && sql.empty(); ++i) {
            if (!is_fence(lines[i])) continue;
            std::string block;
            for (std::size_t j = i + 1; j < span.end; ++j) {
                if (is_fence(lines[j])) break;
                if (!block.empty()) block += '\n';
                block += lines[j];
            }
            sql = trim(block);
        }
        if (sql.empty()) {
            // Fallback: first statement-like line ending in ";".
            for (std::size_t i = span.begin; i < span.end; ++i) {
                std::string t = trim(lines[i]);
                if (!t.empty() && t.back() == ';') {
                    sql = t;
                    break;
                }
            }
        }
        if (sql.empty()) {
            ++result.dropped;
        } else {
            result.items.push_back({span.description, sql});
        }
    }
    if (result.items.empty() && result.dropped == 0) {
        throw NoItemsFound("no numbered items in response");
    }
    return result;
}

std::string build_translation_prompt(const std::vector<TranslationExample>& examples,
                                     const std::vector<std::string>& batch) {
    std::string out =
        "REL is a database management system language that is similar to datalog. "
        "REL is based on the sixth normal form (6NF),\n"
        "where every variable represents a relation, i.e. a set of tuples.\n"
        "In REL, from-variables will not appear in the output, and for-variables "
        "will appear in the output.\n"
        "Strings in REL use double quotes.\n"
        "Below are few examples of SQL code and REL code pairs that perform the same query.\n"
        "Examples:\n"
        "    \n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const std::string k = std::to_string(i + 1);
        out += k + ".SQL: \n```\n" + examples[i].sql + "\n```\n";
        out += k + ".REL: \n```\n" + examples[i].rel + "\n```\n";
    }
    out += "Given examples above, translate the following SQL queries to REL programs. "
           "No explanation is needed.\n"
           "Output only the REL code one by one numbered with '1.REL:', '2.REL:', "
           "for example.\n"
           "    \n";
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out += std::to_string(i + 1) + ".SQL:\n```\n" + batch[i] + "\n```\n";
    }
    return out;
}

std::vector<std::optional<std::string>> parse_translation_response(const std::string& text,
                                                                   int batch_size) {
    auto lines = split_lines(text);
    std::vector<std::optional<std::string>> out(static_cast<std::size_t>(batch_size));

    // Marker line: "<k>.REL:" optionally followed by inline content.
    auto marker_at = [&](std::size_t i, int* number, std::string* inline_rest) -> bool {
        const std::string& line = lines[i];
        std::size_t p = line.find_first_not_of(" \t");
        if (p == std::string::npos || !std::isdigit(static_cast<unsigned char>(line[p]))) {
            return false;
        }
        std::size_t d = p;
        while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
        if (line.compare(d, 5, ".REL:") != 0) return false;
        *number = std::stoi(line.substr(p, d - p));
        *inline_rest = trim(line.substr(d + 5));
        return true;
    };
    auto any_marker = [&](std::size_t i) {
        int n;
        std::string r;
        if (marker_at(i, &n, &r)) return true;
        // "<k>.SQL:" also terminates a section.
        const std::string& line = lines[i];
        std::size_t p = line.find_first_not_of(" \t");
        if (p == std::string::npos || !std::isdigit(static_cast<unsigned char>(line[p]))) {
            return false;
        }
        std::size_t d = p;
        while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
        return line.compare(d, 5, ".SQL:") == 0;
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        int number = 0;
        std::string inline_rest;
        if (!marker_at(i, &number, &inline_rest)) continue;
        if (number < 1 || number > batch_size) continue;
        std::string content;
        if (!inline_rest.empty() && inline_rest.rfind("```", 0) != 0) {
            content = inline_rest;
        }
        std::size_t j = i + 1;
        bool fenced = false;
        if (content.empty()) {
            // Skip blank lines, then take a fenced block or free text.
            while (j < lines.size() && trim(lines[j]).empty()) ++j;
            if (j < lines.size() && is_fence(lines[j])) {
                fenced = true;
                for (++j; j < lines.size() && !is_fence(lines[j]); ++j) {
                    if (!content.empty()) content += '\n';
                    content += lines[j];
                }
            } else {
                for (; j < lines.size() && !any_marker(j); ++j) {
                    if (!content.empty()) content += '\n';
                    content += lines[j];
                }
            }
        }
        (void)fenced;
        content = trim(content);
        if (!content.empty()) out[static_cast<std::size_t>(number - 1)] = content;
    }
    return out;
}

std::string build_column_annotation_prompt(const TableSchema& schema) {
    std::string out =
        "Consider a machine learning model that takes a few numeric input columns "
        "and predict a single classification target column. Given the following "
        "schema of a data table, suggest the input columns and target column, such "
        "that the target may be predicted from the inputs non-trivially.\n"
        "Schema: ";
    out += schema::render_create_table(schema);
    out += "\nRespond in JSON format with `input_columns' and `output_column'.\n";
    return out;
}

ColumnAnnotation parse_column_annotation_response(const std::string& text) {
    for (std::size_t start = text.find('{'); start != std::string::npos;
         start = text.find('{', start + 1)) {
        // Balanced-brace scan, string-aware.
        int depth = 0;
        bool in_string = false;
        std::size_t end = std::string::npos;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
            } else if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    end = i;
                    break;
                }
            }
        }
        if (end == std::string::npos) break;
        nlohmann::json doc = nlohmann::json::parse(text.substr(start, end - start + 1),
                                                   nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) continue;
        if (!doc.contains("input_columns") || !doc.contains("output_column")) continue;
        if (!doc["input_columns"].is_array() || !doc["output_column"].is_string()) {
            throw MalformedAnnotation("input_columns/output_column have wrong types");
        }
        ColumnAnnotation ann;
        for (const auto& v : doc["input_columns"]) {
            if (!v.is_string()) throw MalformedAnnotation("input_columns entry is not a string");
            ann.input_columns.push_back(v.get<std::string>());
        }
        ann.output_column = doc["output_column"].get<std::string>();
        if (ann.input_columns.empty()) throw MalformedAnnotation("input_columns is empty");
        return ann;
    }
    throw MalformedAnnotation("no JSON object with the expected keys");
}

}  // namespace annotab::prompting
