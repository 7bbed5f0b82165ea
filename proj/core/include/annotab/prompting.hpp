#pragma once

#include <optional>
#include <string>
#include <vector>

#include "annotab/schema.hpp"

namespace annotab::prompting {

using schema::TableSchema;

struct DbDescription {
    std::vector<TableSchema> schemas;  // at least one
};

struct TranslationExample {
    std::string sql;
    std::string rel;
    int index = 1;
};

struct ColumnAnnotation {
    std::vector<std::string> input_columns;
    std::string output_column;
};

struct SqlItem {
    std::string description;
    std::string sql;
};

struct SynthesisParse {
    std::vector<SqlItem> items;
    int dropped = 0;  // numbered items with no recoverable SQL
};

// Zero-shot SQL synthesis prompt. steer_complex toggles the
// "with relatively high complexity" phrase.
std::string build_sql_synthesis_prompt(const DbDescription& db, int n_queries = 15,
                                       bool steer_complex = true);

// Extracts numbered (description, SQL) items; SQL comes from a fenced code
// block when present, else the first statement-like line ending in ";".
// Throws NoItemsFound when nothing at all can be parsed.
SynthesisParse parse_sql_synthesis_response(const std::string& text);

// Few-shot SQL-to-Rel translation prompt: fixed Rel preamble, numbered
// example pairs, instruction, then the numbered query batch.
std::string build_translation_prompt(const std::vector<TranslationExample>& examples,
                                     const std::vector<std::string>& batch);

// Finds "k.REL:" markers and extracts each translation; entries are matched
// by number, never by position, and missing entries stay absent.
std::vector<std::optional<std::string>> parse_translation_response(const std::string& text,
                                                                   int batch_size);

// Input-target column annotation prompt for one table schema.
std::string build_column_annotation_prompt(const TableSchema& schema);

// Locates the first JSON object in the response (prose and code fences
// tolerated) and reads input_columns / output_column.
// Throws MalformedAnnotation otherwise.
ColumnAnnotation parse_column_annotation_response(const std::string& text);

}  // namespace annotab::prompting
