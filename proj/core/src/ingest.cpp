#include "annotab/ingest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "annotab/csv.hpp"
#include "annotab/errors.hpp"

namespace annotab::ingest {

const char* sql_type_name(SqlType t) {
    switch (t) {
        case SqlType::Text: return "TEXT";
        case SqlType::BigInt: return "BIGINT";
        case SqlType::Float: return "FLOAT";
    }
    return "TEXT";
}

std::vector<DatasetManifest> load_manifests(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open manifest file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed manifest JSON: " + std::string(e.what()));
    }
    if (!doc.is_array()) throw ConfigError("manifest must be a JSON array");
    std::vector<DatasetManifest> out;
    for (const auto& item : doc) {
        DatasetManifest m;
        m.dataset_id = item.at("dataset_id").get<std::string>();
        m.root_path = item.at("root_path").get<std::string>();
        m.size_bytes = item.at("size_bytes").get<std::uint64_t>();
        m.usability_rating = item.at("usability_rating").get<double>();
        m.csv_files = item.at("csv_files").get<std::vector<std::string>>();
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<DatasetManifest> filter_manifest(const std::vector<DatasetManifest>& manifests,
                                             std::uint64_t min_bytes,
                                             std::uint64_t max_bytes,
                                             double min_usability) {
    std::vector<DatasetManifest> out;
    for (const auto& m : manifests) {
        if (m.size_bytes >= min_bytes && m.size_bytes <= max_bytes &&
            m.usability_rating > min_usability) {
            out.push_back(m);
        }
    }
    return out;
}

RawTable parse_raw_table(const std::string& source_file, const std::string& text) {
    auto records = csv::parse(text);
    if (records.empty()) throw EmptyFile("no header row in " + source_file);
    RawTable t;
    t.source_file = source_file;
    t.headers = records[0];
    const std::size_t width = t.headers.size();
    for (std::size_t i = 1; i < records.size(); ++i) {
        auto& row = records[i];
        if (row.size() > width) {
            throw ParseError(source_file + ": row " + std::to_string(i) +
                             " has more cells than the header");
        }
        row.resize(width);  // short rows padded with empty cells
        t.rows.push_back(std::move(row));
    }
    return t;
}

RawTable load_raw_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_raw_table(path, buf.str());
}

Table truncate_rows(Table table, std::size_t max_rows) {
    if (table.rows.size() > max_rows) table.rows.resize(max_rows);
    table.row_limit_applied = true;
    return table;
}

}  // namespace annotab::ingest
