#pragma once

#include <memory>
#include <string>
#include <vector>

#include "annotab/ingest.hpp"
#include "annotab/value.hpp"

namespace annotab::sqlexec {

using ingest::Table;

struct ResultSet {
    std::vector<std::string> column_names;
    std::vector<Row> rows;
};

enum class OutcomeKind { Ok, EngineError, Timeout };

struct ExecOutcome {
    OutcomeKind kind = OutcomeKind::EngineError;
    ResultSet result;     // Ok only
    std::string message;  // EngineError only

    static ExecOutcome ok(ResultSet rs) { return {OutcomeKind::Ok, std::move(rs), {}}; }
    static ExecOutcome error(std::string msg) { return {OutcomeKind::EngineError, {}, std::move(msg)}; }
    static ExecOutcome timeout() { return {OutcomeKind::Timeout, {}, {}}; }
};

// Valid: executed with >= 1 row. Empty: executed with 0 rows.
// Error: engine error or timeout.
enum class AnnotationStatus { Valid, Error, Empty };

const char* annotation_status_name(AnnotationStatus s);

class Database {
  public:
    Database();
    ~Database();
    Database(Database&&) noexcept;
    Database& operator=(Database&&) noexcept;
    Database(const Database&) = delete;
    Database& operator=(const Database&) = delete;

    struct Impl;
    Impl* impl() const { return impl_.get(); }

  private:
    std::unique_ptr<Impl> impl_;
};

// Loads truncated tables into an in-memory database. In faithful mode
// (sanitize=false upstream) identifiers are emitted verbatim, so names the
// engine rejects raise SchemaError, reproducing the paper's Error class.
// Throws SchemaError on duplicate table names or engine-rejected DDL.
Database load_database(const std::vector<Table>& tables);

// Runs the first statement of `sql` read-only under a wall-clock timeout.
// Mutating statements (INSERT/UPDATE/DELETE/DDL/PRAGMA/ATTACH) come back
// as EngineError. Never throws; failures are outcome variants.
ExecOutcome execute_sql(const Database& db, const std::string& sql,
                        double timeout_seconds = 120.0);

AnnotationStatus classify_outcome(const ExecOutcome& outcome);

// Hash of the database's full logical content (schema + all rows); used to
// check that query batches leave the store untouched.
std::string content_hash(const Database& db);

}  // namespace annotab::sqlexec
