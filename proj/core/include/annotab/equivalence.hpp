#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "annotab/sqlexec.hpp"

namespace annotab::equivalence {

using sqlexec::ExecOutcome;
using sqlexec::ResultSet;

// Canonical comparable form: a set of tuples, row order and column names
// erased, Null-containing tuples dropped, numerics bucketed by rounding to
// 12 significant digits, text byte-exact.
struct CanonicalSet {
    std::size_t arity = 0;
    std::set<std::vector<std::string>> tuples;  // encoded cells

    bool operator==(const CanonicalSet& other) const = default;
};

CanonicalSet normalize_result(const ResultSet& rs);

enum class TranslationOutcome { Correct, Error, DifferentResults };

const char* translation_outcome_name(TranslationOutcome o);

// Precondition: the source SQL executed with >= 1 row (only Valid queries
// are translated). Throws PreconditionViolated otherwise.
TranslationOutcome classify_translation(const ExecOutcome& sql_outcome,
                                        const ExecOutcome& rel_outcome);

struct TranslationRecord {
    std::string database_id;
    std::string sql;
    std::optional<std::string> rel;  // absent when the response slot was unparseable
    ExecOutcome sql_outcome;
    ExecOutcome rel_outcome;         // Error placeholder when rel is absent
    TranslationOutcome outcome = TranslationOutcome::Error;
};

// count(Correct) / count(all translated). Throws EmptyInput.
double execution_accuracy(const std::vector<TranslationRecord>& records);

struct TranslationBatch {
    std::string database_id;
    std::vector<std::string> queries;
};

// Keeps databases with >= min_queries Valid queries and takes the first
// batch_size per database, in annotation order.
std::vector<TranslationBatch> select_translation_workload(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& valid_by_database,
    std::size_t min_queries = 10, std::size_t batch_size = 10);

// Pluggable program executor; stands in for the external Rel engine.
class ExecutionBackend {
  public:
    virtual ~ExecutionBackend() = default;
    virtual ExecOutcome execute(const std::string& program, const std::string& database_id) = 0;
};

// Runs programs on registered in-memory SQL databases.
class SqlExecutionBackend : public ExecutionBackend {
  public:
    explicit SqlExecutionBackend(double timeout_seconds = 120.0)
        : timeout_seconds_(timeout_seconds) {}
    void add_database(const std::string& database_id, std::shared_ptr<sqlexec::Database> db);
    ExecOutcome execute(const std::string& program, const std::string& database_id) override;

  private:
    double timeout_seconds_;
    std::map<std::string, std::shared_ptr<sqlexec::Database>> databases_;
};

// Serves recorded outcomes from a JSONL fixture file keyed by
// (sha256(program), database_id). Throws ReplayMiss on unknown keys.
class ReplayExecutionBackend : public ExecutionBackend {
  public:
    explicit ReplayExecutionBackend(const std::string& fixtures_path);
    ExecOutcome execute(const std::string& program, const std::string& database_id) override;

    // Appends one fixture record to a file (used to build fixtures).
    static void append_fixture(const std::string& fixtures_path, const std::string& program,
                               const std::string& database_id, const ExecOutcome& outcome);

  private:
    std::map<std::string, ExecOutcome> by_key_;
};

// POSTs {"program","database_id"} to a remote engine endpoint and maps the
// {"status","columns","rows","message"} reply onto an ExecOutcome.
class RemoteExecutionBackend : public ExecutionBackend {
  public:
    explicit RemoteExecutionBackend(std::string url, int timeout_seconds = 120)
        : url_(std::move(url)), timeout_seconds_(timeout_seconds) {}
    ExecOutcome execute(const std::string& program, const std::string& database_id) override;

  private:
    std::string url_;
    int timeout_seconds_;
};

}  // namespace annotab::equivalence
