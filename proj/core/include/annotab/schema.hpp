#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "annotab/ingest.hpp"
#include "annotab/value.hpp"

namespace annotab::schema {

using ingest::RawTable;
using ingest::SqlType;
using ingest::Table;

struct TableSchema {
    std::string table_name;
    std::vector<std::pair<std::string, SqlType>> columns;
    // First data row, typed; absent for zero-row tables.
    std::optional<Row> example_row;
};

// File name -> identifier: strip extension, split on non-alphanumerics,
// capitalize each token, concatenate. With sanitize, a digit-leading result
// gets a "T" prefix; without, it is emitted verbatim even if SQL-invalid.
// Throws EmptyName when no alphanumeric content remains.
std::string derive_table_name(const std::string& file_name, bool sanitize);

// Header -> identifier with the same tokenize-capitalize-concatenate rule.
// column_index names all-empty headers as "Col<k>".
std::string normalize_column_name(const std::string& header, bool sanitize,
                                  std::size_t column_index);

// Applies normalize_column_name across a header row and disambiguates
// duplicates (case-insensitive) with numeric suffixes "2", "3", ...
std::vector<std::string> normalize_headers(const std::vector<std::string>& headers,
                                           bool sanitize);

// Ignoring empty cells: all integers -> BIGINT, else all finite numerics
// -> FLOAT, else TEXT. All-empty -> TEXT.
SqlType infer_column_type(const std::vector<std::string>& cells);

// Parses one raw cell under a column type. Empty -> Null.
Cell type_cell(const std::string& raw, SqlType type);

// Builds the typed table and its schema from a raw CSV table.
std::pair<Table, TableSchema> build_table(const RawTable& raw, bool sanitize);

// Renders the CREATE TABLE block used verbatim inside prompts:
//   CREATE TABLE <Name>(
//       <Col>  <TYPE>,
//       ...
//   );
std::string render_create_table(const TableSchema& schema);

// Renders the example row as a single-line JSON object, keys in column
// order; numeric values unquoted, text JSON-escaped.
// Throws MissingRow for zero-row tables.
std::string render_example_row(const TableSchema& schema);

TableSchema schema_of(const Table& table);

}  // namespace annotab::schema
