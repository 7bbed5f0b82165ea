#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "annotab/value.hpp"

namespace annotab::ingest {

struct DatasetManifest {
    std::string dataset_id;
    std::string root_path;
    std::uint64_t size_bytes = 0;
    double usability_rating = 0.0;
    std::vector<std::string> csv_files;
};

// Reads a JSON array of manifest objects from a file.
std::vector<DatasetManifest> load_manifests(const std::string& path);

struct RawTable {
    std::string source_file;
    std::vector<std::string> headers;
    std::vector<std::vector<std::string>> rows;  // each row has headers.size() cells
};

enum class SqlType { Text, BigInt, Float };

const char* sql_type_name(SqlType t);  // "TEXT" / "BIGINT" / "FLOAT"

struct Table {
    std::string name;
    std::vector<std::pair<std::string, SqlType>> columns;
    std::vector<Row> rows;
    bool row_limit_applied = false;
};

// Size/usability collection filter. Keeps manifests with
// min_bytes <= size_bytes <= max_bytes and usability_rating strictly
// above min_usability. Order preserving.
std::vector<DatasetManifest> filter_manifest(const std::vector<DatasetManifest>& manifests,
                                             std::uint64_t min_bytes,
                                             std::uint64_t max_bytes,
                                             double min_usability);

// Loads a CSV file: first record is the header, short data rows are padded
// with empty cells, over-long rows raise ParseError.
// Throws EmptyFile when there is no header row.
RawTable load_raw_table(const std::string& path);

// Same, from in-memory CSV text (source_file recorded as given).
RawTable parse_raw_table(const std::string& source_file, const std::string& text);

// Keeps the first max_rows rows and marks the table. Idempotent.
Table truncate_rows(Table table, std::size_t max_rows = 1000);

}  // namespace annotab::ingest
