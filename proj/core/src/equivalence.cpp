#include "annotab/equivalence.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "annotab/digest.hpp"
#include "annotab/errors.hpp"

namespace annotab::equivalence {

namespace {

// All numerics (integer or real) share one bucket space: rounded to 12
// significant digits, which realizes the 1e-9 relative / 1e-12 absolute
// comparison tolerance.
std::string encode_number(double v) {
    if (v == 0.0) v = 0.0;  // collapse -0
    if (std::abs(v) < 1e-12) v = 0.0;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "N%.11e", v);
    return buf;
}

std::string encode_cell(const Cell& cell) {
    if (const auto* iv = std::get_if<std::int64_t>(&cell)) {
        return encode_number(static_cast<double>(*iv));
    }
    if (const auto* dv = std::get_if<double>(&cell)) {
        return encode_number(*dv);
    }
    return "T" + std::get<std::string>(cell);
}

ExecOutcome outcome_from_json(const nlohmann::json& doc) {
    std::string status = doc.value("status", "error");
    if (status == "timeout") return ExecOutcome::timeout();
    if (status != "ok") return ExecOutcome::error(doc.value("message", "execution error"));
    ResultSet rs;
    for (const auto& c : doc.value("columns", nlohmann::json::array())) {
        rs.column_names.push_back(c.get<std::string>());
    }
    for (const auto& row : doc.value("rows", nlohmann::json::array())) {
        Row r;
        for (const auto& v : row) {
            if (v.is_null()) r.emplace_back(std::monostate{});
            else if (v.is_number_integer()) r.emplace_back(v.get<std::int64_t>());
            else if (v.is_number()) r.emplace_back(v.get<double>());
            else r.emplace_back(v.get<std::string>());
        }
        rs.rows.push_back(std::move(r));
    }
    return ExecOutcome::ok(std::move(rs));
}

nlohmann::ordered_json outcome_to_json(const ExecOutcome& outcome) {
    nlohmann::ordered_json doc;
    switch (outcome.kind) {
        case sqlexec::OutcomeKind::Timeout:
            doc["status"] = "timeout";
            return doc;
        case sqlexec::OutcomeKind::EngineError:
            doc["status"] = "error";
            doc["message"] = outcome.message;
            return doc;
        case sqlexec::OutcomeKind::Ok:
            break;
    }
    doc["status"] = "ok";
    doc["columns"] = outcome.result.column_names;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : outcome.result.rows) {
        nlohmann::ordered_json r = nlohmann::ordered_json::array();
        for (const auto& cell : row) {
            if (is_null(cell)) r.push_back(nullptr);
            else if (const auto* iv = std::get_if<std::int64_t>(&cell)) r.push_back(*iv);
            else if (const auto* dv = std::get_if<double>(&cell)) r.push_back(*dv);
            else r.push_back(std::get<std::string>(cell));
        }
        rows.push_back(std::move(r));
    }
    doc["rows"] = std::move(rows);
    return doc;
}

}  // namespace

CanonicalSet normalize_result(const ResultSet& rs) {
    CanonicalSet out;
    out.arity = rs.column_names.size();
    for (const auto& row : rs.rows) {
        bool has_null = false;
        for (const auto& cell : row) {
            if (is_null(cell)) {
                has_null = true;
                break;
            }
        }
        if (has_null) continue;
        std::vector<std::string> tuple;
        tuple.reserve(row.size());
        for (const auto& cell : row) tuple.push_back(encode_cell(cell));
        out.tuples.insert(std::move(tuple));
    }
    return out;
}

const char* translation_outcome_name(TranslationOutcome o) {
    switch (o) {
        case TranslationOutcome::Correct: return "Correct";
        case TranslationOutcome::Error: return "Error";
        case TranslationOutcome::DifferentResults: return "DifferentResults";
    }
    return "Error";
}

TranslationOutcome classify_translation(const ExecOutcome& sql_outcome,
                                        const ExecOutcome& rel_outcome) {
    if (sql_outcome.kind != sqlexec::OutcomeKind::Ok || sql_outcome.result.rows.empty()) {
        throw PreconditionViolated("source query is not Valid");
    }
    if (rel_outcome.kind != sqlexec::OutcomeKind::Ok) return TranslationOutcome::Error;
    if (sql_outcome.result.column_names.size() != rel_outcome.result.column_names.size()) {
        return TranslationOutcome::DifferentResults;
    }
    return normalize_result(sql_outcome.result) == normalize_result(rel_outcome.result)
               ? TranslationOutcome::Correct
               : TranslationOutcome::DifferentResults;
}

double execution_accuracy(const std::vector<TranslationRecord>& records) {
    if (records.empty()) throw EmptyInput("no translation records");
    std::size_t correct = 0;
    for (const auto& r : records) {
        if (r.outcome == TranslationOutcome::Correct) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

std::vector<TranslationBatch> select_translation_workload(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& valid_by_database,
    std::size_t min_queries, std::size_t batch_size) {
    std::vector<TranslationBatch> batches;
    for (const auto& [database_id, queries] : valid_by_database) {
        if (queries.size() < min_queries) continue;
        TranslationBatch batch;
        batch.database_id = database_id;
        batch.queries.assign(queries.begin(),
                             queries.begin() + static_cast<std::ptrdiff_t>(
                                                   std::min(batch_size, queries.size())));
        batches.push_back(std::move(batch));
    }
    return batches;
}

void SqlExecutionBackend::add_database(const std::string& database_id,
                                       std::shared_ptr<sqlexec::Database> db) {
    databases_[database_id] = std::move(db);
}

ExecOutcome SqlExecutionBackend::execute(const std::string& program,
                                         const std::string& database_id) {
    auto it = databases_.find(database_id);
    if (it == databases_.end()) {
        return ExecOutcome::error("unknown database: " + database_id);
    }
    return sqlexec::execute_sql(*it->second, program, timeout_seconds_);
}

ReplayExecutionBackend::ReplayExecutionBackend(const std::string& fixtures_path) {
    std::ifstream in(fixtures_path, std::ios::binary);
    if (!in) throw StoreIoError("cannot open execution fixtures: " + fixtures_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded()) continue;
        std::string key = doc.value("program_digest", "") + "|" + doc.value("database_id", "");
        by_key_[key] = outcome_from_json(doc);
    }
}

ExecOutcome ReplayExecutionBackend::execute(const std::string& program,
                                            const std::string& database_id) {
    std::string digest = sha256_hex(program);
    auto it = by_key_.find(digest + "|" + database_id);
    if (it == by_key_.end()) {
        throw ReplayMiss("no execution fixture for program digest " + digest + " on " +
                         database_id);
    }
    return it->second;
}

void ReplayExecutionBackend::append_fixture(const std::string& fixtures_path,
                                            const std::string& program,
                                            const std::string& database_id,
                                            const ExecOutcome& outcome) {
    nlohmann::ordered_json doc;
    doc["program_digest"] = sha256_hex(program);
    doc["database_id"] = database_id;
    auto body = outcome_to_json(outcome);
    doc.update(body);
    std::ofstream out(fixtures_path, std::ios::binary | std::ios::app);
    if (!out) throw StoreIoError("cannot append execution fixture: " + fixtures_path);
    out << doc.dump() << '\n';
}

ExecOutcome RemoteExecutionBackend::execute(const std::string& program,
                                            const std::string& database_id) {
    std::string base = url_;
    std::string path = "/";
    auto scheme_end = base.find("://");
    if (scheme_end != std::string::npos) {
        auto path_start = base.find('/', scheme_end + 3);
        if (path_start != std::string::npos) {
            path = base.substr(path_start);
            base = base.substr(0, path_start);
        }
    }
    nlohmann::json body;
    body["program"] = program;
    body["database_id"] = database_id;
    httplib::Client client(base);
    client.set_read_timeout(timeout_seconds_, 0);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res || res->status != 200) {
        return ExecOutcome::error("remote backend unavailable");
    }
    nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) return ExecOutcome::error("malformed remote backend reply");
    return outcome_from_json(doc);
}

}  // namespace annotab::equivalence
