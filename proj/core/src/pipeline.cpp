#include "annotab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "annotab/coltask.hpp"
#include "annotab/digest.hpp"
#include "annotab/equivalence.hpp"
#include "annotab/errors.hpp"
#include "annotab/ingest.hpp"
#include "annotab/ipe.hpp"
#include "annotab/prompting.hpp"
#include "annotab/report.hpp"
#include "annotab/schema.hpp"
#include "annotab/sqlclassify.hpp"
#include "annotab/sqlexec.hpp"
#include "annotab/stats.hpp"

namespace annotab::pipeline {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

const std::map<std::string, std::string>& artifact_files() {
    static const std::map<std::string, std::string> files = {
        {"ingest", "ingest.jsonl"},
        {"schema", "schema.jsonl"},
        {"annotate-sql", "annotate_sql.jsonl"},
        {"validate", "validate.jsonl"},
        {"classify", "classify.jsonl"},
        {"translate", "translate.jsonl"},
        {"compare", "compare.jsonl"},
        {"ipe-step", "ipe_steps.jsonl"},
        {"annotate-columns", "annotate_columns.jsonl"},
        {"extract-problems", "problems.jsonl"},
        {"eval-classify", "eval.jsonl"},
        {"report", "funnel.json"},
    };
    return files;
}

const std::map<std::string, std::vector<std::string>>& stage_prerequisites() {
    static const std::map<std::string, std::vector<std::string>> prereqs = {
        {"ingest", {}},
        {"schema", {"ingest"}},
        {"annotate-sql", {"schema"}},
        {"validate", {"schema", "annotate-sql"}},
        {"classify", {"validate"}},
        {"translate", {"validate"}},
        {"compare", {"schema", "translate"}},
        {"ipe-step", {"schema", "validate"}},
        {"annotate-columns", {"schema"}},
        {"extract-problems", {"schema", "annotate-columns"}},
        {"eval-classify", {"extract-problems"}},
        {"report", {"ingest", "schema", "annotate-sql", "validate"}},
    };
    return prereqs;
}

// index-sharded worker loop; results land by index, so output order does
// not depend on scheduling.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    int threads = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string error_class_of(const std::exception& e) {
    if (dynamic_cast<const ReplayMiss*>(&e)) throw;  // replay gaps abort the stage
    if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
    if (dynamic_cast<const EmptyFile*>(&e)) return "EmptyFile";
    if (dynamic_cast<const EmptyName*>(&e)) return "EmptyName";
    if (dynamic_cast<const MissingRow*>(&e)) return "MissingRow";
    if (dynamic_cast<const NoItemsFound*>(&e)) return "NoItemsFound";
    if (dynamic_cast<const MalformedAnnotation*>(&e)) return "MalformedAnnotation";
    if (dynamic_cast<const SchemaError*>(&e)) return "SchemaError";
    if (dynamic_cast<const DegenerateProblem*>(&e)) return "DegenerateProblem";
    if (dynamic_cast<const NumericalFailure*>(&e)) return "NumericalFailure";
    if (dynamic_cast<const SingleClass*>(&e)) return "SingleClass";
    if (dynamic_cast<const StoreIoError*>(&e)) return "StoreIoError";
    if (dynamic_cast<const Error*>(&e)) return "Error";
    return "Exception";
}

// In record mode, remote execution results are appended to the fixtures
// file so later replay runs can serve them.
class RecordingExecutionBackend : public equivalence::ExecutionBackend {
  public:
    RecordingExecutionBackend(std::unique_ptr<equivalence::ExecutionBackend> inner,
                              std::string fixtures_path)
        : inner_(std::move(inner)), fixtures_path_(std::move(fixtures_path)) {}

    sqlexec::ExecOutcome execute(const std::string& program,
                                 const std::string& database_id) override {
        auto outcome = inner_->execute(program, database_id);
        std::lock_guard<std::mutex> lock(mutex_);
        equivalence::ReplayExecutionBackend::append_fixture(fixtures_path_, program,
                                                            database_id, outcome);
        return outcome;
    }

  private:
    std::unique_ptr<equivalence::ExecutionBackend> inner_;
    std::string fixtures_path_;
    std::mutex mutex_;
};

}  // namespace

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ConfigError("config is not a JSON object: " + path);
    }
    PipelineConfig cfg;
    try {
        cfg.manifest_path = doc.at("manifest_path").get<std::string>();
        cfg.artifacts_dir = doc.at("artifacts_dir").get<std::string>();
        if (doc.contains("llm")) {
            const auto& l = doc["llm"];
            cfg.llm_endpoint_url = l.value("endpoint_url", "");
            cfg.llm_params.model_name = l.value("model_name", "default");
            cfg.llm_params.temperature = l.value("temperature", 0.0);
            cfg.llm_params.max_output_tokens = l.value("max_output_tokens", 2048);
        }
        if (doc.contains("rel")) {
            const auto& r = doc["rel"];
            cfg.rel_endpoint_url = r.value("endpoint_url", "");
            cfg.rel_fixtures_path = r.value("fixtures_path", "");
        }
        if (doc.contains("filters")) {
            const auto& f = doc["filters"];
            cfg.filter_min_bytes = f.value("min_bytes", cfg.filter_min_bytes);
            cfg.filter_max_bytes = f.value("max_bytes", cfg.filter_max_bytes);
            cfg.filter_min_usability = f.value("min_usability", cfg.filter_min_usability);
        }
        if (doc.contains("caps")) {
            const auto& c = doc["caps"];
            cfg.max_rows = c.value("max_rows", cfg.max_rows);
            cfg.max_train_rows = c.value("max_train_rows", cfg.max_train_rows);
            cfg.max_features = c.value("max_features", cfg.max_features);
            cfg.max_classes = c.value("max_classes", cfg.max_classes);
        }
        if (doc.contains("synthesis")) {
            const auto& s = doc["synthesis"];
            cfg.synthesis_n_queries = s.value("n_queries", cfg.synthesis_n_queries);
            cfg.synthesis_steer_complex = s.value("steer_complex", cfg.synthesis_steer_complex);
        }
        if (doc.contains("translation")) {
            const auto& t = doc["translation"];
            cfg.translation_min_queries = t.value("min_queries", cfg.translation_min_queries);
            cfg.translation_batch_size = t.value("batch_size", cfg.translation_batch_size);
            cfg.pool_path = t.value("pool_path", "");
            if (t.contains("ipe_pool_paths")) {
                cfg.ipe_pool_paths = t["ipe_pool_paths"].get<std::vector<std::string>>();
            }
        }
        cfg.timeout_seconds = doc.value("timeout_seconds", cfg.timeout_seconds);
        cfg.sanitize_identifiers = doc.value("sanitize_identifiers", cfg.sanitize_identifiers);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config field: ") + e.what());
    }
    if (cfg.manifest_path.empty() || cfg.artifacts_dir.empty()) {
        throw ConfigError("config requires manifest_path and artifacts_dir");
    }
    return cfg;
}

struct Pipeline::Impl {
    PipelineOptions options;
    PipelineConfig config;
    std::shared_ptr<llm::RecordStore> store;
    std::shared_ptr<llm::CompletionBackend> backend;

    explicit Impl(PipelineOptions opts)
        : options(std::move(opts)), config(load_config(options.config_path)) {
        fs::create_directories(config.artifacts_dir);
    }

    std::string path_of(const std::string& stage) const {
        auto it = artifact_files().find(stage);
        if (it == artifact_files().end()) throw ConfigError("unknown stage: " + stage);
        return (fs::path(config.artifacts_dir) / it->second).string();
    }

    std::string side_path(const std::string& file) const {
        return (fs::path(config.artifacts_dir) / file).string();
    }

    llm::CompletionBackend& llm_backend() {
        if (backend) return *backend;
        const std::string& mode = options.mode;
        if (mode != "record" && mode != "replay" && mode != "live") {
            throw ConfigError("mode must be record, replay or live: " + mode);
        }
        if (mode != "live") {
            if (options.replay_store_path.empty()) {
                throw ConfigError("mode '" + mode + "' requires a replay store path");
            }
            store = std::make_shared<llm::RecordStore>(options.replay_store_path);
        }
        std::shared_ptr<llm::CompletionBackend> inner;
        if (mode == "replay") {
            inner = std::make_shared<llm::ReplayBackend>(store);
        } else {
            llm::HttpConfig http;
            http.url = config.llm_endpoint_url;
            http.api_key = options.api_key;
            http.timeout_seconds = static_cast<int>(config.timeout_seconds);
            auto http_backend = std::make_shared<llm::HttpBackend>(http);
            if (mode == "record") {
                inner = std::make_shared<llm::RecordingBackend>(http_backend, store);
            } else {
                inner = http_backend;
            }
        }
        backend = std::make_shared<llm::BoundedBackend>(inner, std::max(1, options.workers));
        return *backend;
    }

    std::unique_ptr<equivalence::ExecutionBackend> rel_backend() {
        if (options.mode == "replay") {
            if (config.rel_fixtures_path.empty()) {
                throw ConfigError("replay mode requires rel.fixtures_path");
            }
            return std::make_unique<equivalence::ReplayExecutionBackend>(
                config.rel_fixtures_path);
        }
        if (config.rel_endpoint_url.empty()) {
            throw ConfigError("live/record mode requires rel.endpoint_url");
        }
        auto remote = std::make_unique<equivalence::RemoteExecutionBackend>(
            config.rel_endpoint_url, static_cast<int>(config.timeout_seconds));
        if (options.mode == "record") {
            if (config.rel_fixtures_path.empty()) {
                throw ConfigError("record mode requires rel.fixtures_path");
            }
            return std::make_unique<RecordingExecutionBackend>(std::move(remote),
                                                               config.rel_fixtures_path);
        }
        return remote;
    }

    // ---- artifact IO ----

    std::vector<ordered_json> require_artifact(const std::string& stage) const {
        std::string path = path_of(stage);
        std::ifstream in(path, std::ios::binary);
        if (!in) throw MissingPrerequisite("stage '" + stage + "' artifact missing: " + path);
        std::vector<ordered_json> lines;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            lines.push_back(ordered_json::parse(line));
        }
        return lines;
    }

    void write_file_atomic(const std::string& path, const std::string& content) const {
        std::string tmp = path + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw StoreIoError("cannot write artifact: " + tmp);
            out << content;
        }
        fs::rename(tmp, path);
    }

    void write_artifact(const std::string& stage, const std::vector<ordered_json>& records) {
        std::string content;
        for (const auto& r : records) {
            content += r.dump();
            content += '\n';
        }
        std::string path = path_of(stage);
        write_file_atomic(path, content);
        update_digest(stage, sha256_hex(content));
    }

    void update_digest(const std::string& stage, const std::string& digest) const {
        std::string path = side_path("digests.json");
        ordered_json doc = ordered_json::object();
        {
            std::ifstream in(path, std::ios::binary);
            if (in) {
                auto parsed = ordered_json::parse(in, nullptr, false);
                if (parsed.is_object()) doc = std::move(parsed);
            }
        }
        doc[stage] = digest;
        write_file_atomic(path, doc.dump(2) + "\n");
    }

    ordered_json base_record(const std::string& id) const {
        ordered_json r;
        r["schema_version"] = kSchemaVersion;
        r["id"] = id;
        return r;
    }

    void fill_error(ordered_json& r, const std::exception& e) const {
        r["status"] = "error";
        r["error_class"] = error_class_of(e);
        r["error"] = e.what();
    }

    // ---- shared reconstruction helpers ----

    ingest::RawTable load_raw(const std::string& source_file) const {
        ingest::RawTable raw = ingest::load_raw_table(source_file);
        raw.source_file = fs::path(source_file).filename().string();
        return raw;
    }

    ingest::Table rebuild_table(const std::string& source_file) const {
        auto [table, schema] = schema::build_table(load_raw(source_file),
                                                   config.sanitize_identifiers);
        (void)schema;
        return ingest::truncate_rows(std::move(table), config.max_rows);
    }

    // Ok-status table records from the schema artifact, grouped by dataset
    // in first-appearance order.
    std::vector<std::pair<std::string, std::vector<ordered_json>>> schemas_by_dataset() const {
        auto lines = require_artifact("schema");
        std::vector<std::pair<std::string, std::vector<ordered_json>>> grouped;
        std::map<std::string, std::size_t> index;
        for (auto& line : lines) {
            if (line.value("status", "") != "ok") continue;
            std::string dataset = line.value("dataset_id", "");
            auto [it, inserted] = index.try_emplace(dataset, grouped.size());
            if (inserted) grouped.push_back({dataset, {}});
            grouped[it->second].second.push_back(std::move(line));
        }
        return grouped;
    }

    // Builds every dataset's database from its schema-stage tables.
    std::shared_ptr<sqlexec::Database> build_database(
        const std::vector<ordered_json>& table_records) const {
        std::vector<ingest::Table> tables;
        for (const auto& rec : table_records) {
            tables.push_back(rebuild_table(rec.at("source_file").get<std::string>()));
        }
        return std::make_shared<sqlexec::Database>(sqlexec::load_database(tables));
    }

    // ---- stages ----

    void stage_ingest() {
        auto manifests = ingest::load_manifests(config.manifest_path);
        auto kept = ingest::filter_manifest(manifests, config.filter_min_bytes,
                                            config.filter_max_bytes,
                                            config.filter_min_usability);
        std::vector<ordered_json> records;
        std::map<std::string, bool> kept_ids;
        for (const auto& m : kept) kept_ids[m.dataset_id] = true;
        for (const auto& m : manifests) {
            ordered_json r = base_record("ingest/" + m.dataset_id);
            r["kind"] = "dataset";
            r["dataset_id"] = m.dataset_id;
            r["status"] = kept_ids.count(m.dataset_id) ? "kept" : "filtered";
            records.push_back(std::move(r));
        }
        for (const auto& m : kept) {
            for (const auto& file : m.csv_files) {
                std::string source = (fs::path(m.root_path) / file).string();
                ordered_json r = base_record("ingest/" + m.dataset_id + "/" + file);
                r["kind"] = "table";
                r["dataset_id"] = m.dataset_id;
                r["source_file"] = source;
                try {
                    auto raw = load_raw(source);
                    r["status"] = "ok";
                    r["n_rows"] = raw.rows.size();
                    r["n_columns"] = raw.headers.size();
                    r["content_digest"] = sha256_file(source);
                } catch (const Error& e) {
                    fill_error(r, e);
                }
                records.push_back(std::move(r));
            }
        }
        write_artifact("ingest", records);
    }

    void stage_schema() {
        auto lines = require_artifact("ingest");
        std::vector<ordered_json> records;
        for (const auto& line : lines) {
            if (line.value("kind", "") != "table" || line.value("status", "") != "ok") continue;
            std::string source = line.at("source_file").get<std::string>();
            ordered_json r = base_record("schema/" + line.value("dataset_id", "") + "/" +
                                         fs::path(source).filename().string());
            r["ingest_id"] = line.at("id");
            r["dataset_id"] = line.at("dataset_id");
            r["source_file"] = source;
            try {
                auto [table, ts] =
                    schema::build_table(load_raw(source), config.sanitize_identifiers);
                table = ingest::truncate_rows(std::move(table), config.max_rows);
                r["table_name"] = ts.table_name;
                ordered_json cols = ordered_json::array();
                for (const auto& [name, type] : ts.columns) {
                    cols.push_back({{"name", name}, {"type", ingest::sql_type_name(type)}});
                }
                r["columns"] = std::move(cols);
                r["create_table"] = schema::render_create_table(ts);
                r["example_row"] = schema::render_example_row(ts);
                r["n_rows"] = table.rows.size();
                r["row_limit_applied"] = table.row_limit_applied;
                r["status"] = "ok";
            } catch (const Error& e) {
                fill_error(r, e);
            }
            records.push_back(std::move(r));
        }
        write_artifact("schema", records);
    }

    void stage_annotate_sql() {
        auto grouped = schemas_by_dataset();
        auto& llm = llm_backend();
        std::vector<std::vector<ordered_json>> per_db(grouped.size());
        parallel_for(grouped.size(), options.workers, [&](std::size_t g) {
            const auto& [dataset, tables] = grouped[g];
            ordered_json header = base_record("annotate-sql/" + dataset);
            header["kind"] = "prompt";
            header["database_id"] = dataset;
            ordered_json schema_ids = ordered_json::array();
            for (const auto& t : tables) schema_ids.push_back(t.at("id"));
            header["schema_ids"] = std::move(schema_ids);
            try {
                prompting::DbDescription db;
                for (const auto& t : tables) {
                    auto [table, ts] = schema::build_table(
                        load_raw(t.at("source_file").get<std::string>()),
                        config.sanitize_identifiers);
                    (void)table;
                    db.schemas.push_back(std::move(ts));
                }
                std::string prompt = prompting::build_sql_synthesis_prompt(
                    db, config.synthesis_n_queries, config.synthesis_steer_complex);
                std::string digest = sha256_hex(prompt);
                header["prompt_digest"] = digest;
                std::string response = llm.complete(prompt, config.llm_params);
                auto parsed = prompting::parse_sql_synthesis_response(response);
                header["status"] = "ok";
                header["items"] = parsed.items.size();
                header["dropped"] = parsed.dropped;
                per_db[g].push_back(std::move(header));
                int n = 0;
                for (const auto& item : parsed.items) {
                    ++n;
                    ordered_json q = base_record("annotate-sql/" + dataset + "/q" +
                                                 std::to_string(n));
                    q["kind"] = "query";
                    q["database_id"] = dataset;
                    q["prompt_digest"] = digest;
                    q["description"] = item.description;
                    q["sql"] = item.sql;
                    q["status"] = "ok";
                    per_db[g].push_back(std::move(q));
                }
            } catch (const Error& e) {
                fill_error(header, e);
                per_db[g].push_back(std::move(header));
            }
        });
        std::vector<ordered_json> records;
        for (auto& group : per_db) {
            for (auto& r : group) records.push_back(std::move(r));
        }
        write_artifact("annotate-sql", records);
    }

    void stage_validate() {
        auto grouped = schemas_by_dataset();
        auto queries = require_artifact("annotate-sql");
        std::map<std::string, std::size_t> db_index;
        for (std::size_t g = 0; g < grouped.size(); ++g) db_index[grouped[g].first] = g;

        // queries grouped by database, preserving artifact order
        std::vector<std::vector<const ordered_json*>> by_db(grouped.size());
        for (const auto& q : queries) {
            if (q.value("kind", "") != "query" || q.value("status", "") != "ok") continue;
            auto it = db_index.find(q.value("database_id", ""));
            if (it == db_index.end()) continue;
            by_db[it->second].push_back(&q);
        }

        std::vector<std::vector<ordered_json>> per_db(grouped.size());
        parallel_for(grouped.size(), options.workers, [&](std::size_t g) {
            const auto& [dataset, tables] = grouped[g];
            std::shared_ptr<sqlexec::Database> db;
            std::string db_error, db_error_class;
            try {
                db = build_database(tables);
            } catch (const Error& e) {
                db_error = e.what();
                db_error_class = error_class_of(e);
            }
            for (const auto* q : by_db[g]) {
                ordered_json r = base_record(
                    "validate/" + q->at("id").get<std::string>().substr(13));
                r["query_id"] = q->at("id");
                r["database_id"] = dataset;
                r["sql"] = q->at("sql");
                sqlexec::ExecOutcome outcome =
                    db ? sqlexec::execute_sql(*db, q->at("sql").get<std::string>(),
                                              config.timeout_seconds)
                       : sqlexec::ExecOutcome::error(db_error);
                auto status = sqlexec::classify_outcome(outcome);
                r["status"] = sqlexec::annotation_status_name(status);
                if (outcome.kind == sqlexec::OutcomeKind::Ok) {
                    r["row_count"] = outcome.result.rows.size();
                } else if (outcome.kind == sqlexec::OutcomeKind::Timeout) {
                    r["timeout"] = true;
                } else {
                    r["error"] = outcome.message;
                    if (!db_error_class.empty()) r["error_class"] = db_error_class;
                }
                per_db[g].push_back(std::move(r));
            }
        });
        std::vector<ordered_json> records;
        for (auto& group : per_db) {
            for (auto& r : group) records.push_back(std::move(r));
        }
        write_artifact("validate", records);
    }

    void stage_classify() {
        auto lines = require_artifact("validate");
        std::vector<ordered_json> records;
        std::vector<std::pair<sqlclassify::ComponentSet, sqlexec::AnnotationStatus>> stats_in;
        for (const auto& line : lines) {
            std::string sql = line.value("sql", "");
            auto set = sqlclassify::detect_components(sql);
            ordered_json r = base_record(
                "classify/" + line.at("id").get<std::string>().substr(9));
            r["validate_id"] = line.at("id");
            r["database_id"] = line.at("database_id");
            ordered_json comps = ordered_json::array();
            for (std::size_t c = 0; c < sqlclassify::kComponentCount; ++c) {
                if (set.test(c)) {
                    comps.push_back(sqlclassify::component_name(
                        static_cast<sqlclassify::Component>(c)));
                }
            }
            r["components"] = std::move(comps);
            r["simple"] = sqlclassify::is_simple_query(set);
            r["execution_status"] = line.at("status");
            records.push_back(std::move(r));

            std::string status = line.value("status", "Error");
            sqlexec::AnnotationStatus st = sqlexec::AnnotationStatus::Error;
            if (status == "Valid") st = sqlexec::AnnotationStatus::Valid;
            else if (status == "Empty") st = sqlexec::AnnotationStatus::Empty;
            stats_in.emplace_back(set, st);
        }
        write_artifact("classify", records);
        if (!stats_in.empty()) {
            auto table = sqlclassify::aggregate_component_stats(stats_in);
            write_file_atomic(side_path("component_stats.csv"),
                              sqlclassify::stats_to_csv(table));
            write_file_atomic(side_path("component_stats.txt"),
                              sqlclassify::stats_to_text(table));
        }
    }

    std::vector<equivalence::TranslationBatch> translation_workload() const {
        auto lines = require_artifact("validate");
        std::vector<std::pair<std::string, std::vector<std::string>>> valid_by_db;
        std::map<std::string, std::size_t> index;
        for (const auto& line : lines) {
            if (line.value("status", "") != "Valid") continue;
            std::string db = line.value("database_id", "");
            auto [it, inserted] = index.try_emplace(db, valid_by_db.size());
            if (inserted) valid_by_db.push_back({db, {}});
            valid_by_db[it->second].second.push_back(line.at("sql").get<std::string>());
        }
        return equivalence::select_translation_workload(
            valid_by_db, config.translation_min_queries, config.translation_batch_size);
    }

    void stage_translate() {
        if (config.pool_path.empty()) throw ConfigError("translate requires translation.pool_path");
        auto pool = ipe::load_pool(config.pool_path);
        auto batches = translation_workload();
        auto& llm = llm_backend();
        std::vector<std::vector<ordered_json>> per_batch(batches.size());
        parallel_for(batches.size(), options.workers, [&](std::size_t b) {
            const auto& batch = batches[b];
            std::string prompt =
                prompting::build_translation_prompt(pool.examples, batch.queries);
            std::string digest = sha256_hex(prompt);
            std::string response = llm.complete(prompt, config.llm_params);
            auto outputs = prompting::parse_translation_response(
                response, static_cast<int>(batch.queries.size()));
            for (std::size_t i = 0; i < batch.queries.size(); ++i) {
                ordered_json r = base_record("translate/" + batch.database_id + "/q" +
                                             std::to_string(i + 1));
                r["database_id"] = batch.database_id;
                r["sql"] = batch.queries[i];
                r["prompt_digest"] = digest;
                if (outputs[i]) {
                    r["rel"] = *outputs[i];
                    r["status"] = "ok";
                } else {
                    r["status"] = "missing";
                }
                per_batch[b].push_back(std::move(r));
            }
        });
        std::vector<ordered_json> records;
        for (auto& group : per_batch) {
            for (auto& r : group) records.push_back(std::move(r));
        }
        write_artifact("translate", records);
    }

    void stage_compare() {
        auto translations = require_artifact("translate");
        auto grouped = schemas_by_dataset();
        std::map<std::string, std::size_t> db_index;
        for (std::size_t g = 0; g < grouped.size(); ++g) db_index[grouped[g].first] = g;
        std::vector<std::vector<const ordered_json*>> by_db(grouped.size());
        for (const auto& t : translations) {
            auto it = db_index.find(t.value("database_id", ""));
            if (it != db_index.end()) by_db[it->second].push_back(&t);
        }
        auto rel = rel_backend();
        std::vector<std::vector<ordered_json>> per_db(grouped.size());
        parallel_for(grouped.size(), options.workers, [&](std::size_t g) {
            if (by_db[g].empty()) return;
            const auto& [dataset, tables] = grouped[g];
            auto db = build_database(tables);
            for (const auto* t : by_db[g]) {
                ordered_json r = base_record(
                    "compare/" + t->at("id").get<std::string>().substr(10));
                r["translate_id"] = t->at("id");
                r["database_id"] = dataset;
                std::string sql = t->at("sql").get<std::string>();
                auto sql_outcome = sqlexec::execute_sql(*db, sql, config.timeout_seconds);
                sqlexec::ExecOutcome rel_outcome =
                    t->contains("rel")
                        ? rel->execute(t->at("rel").get<std::string>(), dataset)
                        : sqlexec::ExecOutcome::error("no translation in response");
                equivalence::TranslationOutcome outcome;
                try {
                    outcome = equivalence::classify_translation(sql_outcome, rel_outcome);
                } catch (const PreconditionViolated&) {
                    outcome = equivalence::TranslationOutcome::Error;
                    r["note"] = "source query no longer Valid";
                }
                r["outcome"] = equivalence::translation_outcome_name(outcome);
                per_db[g].push_back(std::move(r));
            }
        });
        std::vector<ordered_json> records;
        for (auto& group : per_db) {
            for (auto& r : group) records.push_back(std::move(r));
        }
        write_artifact("compare", records);
    }

    void stage_ipe_step() {
        if (config.ipe_pool_paths.empty()) {
            throw ConfigError("ipe-step requires translation.ipe_pool_paths");
        }
        auto batches = translation_workload();
        auto grouped = schemas_by_dataset();
        equivalence::SqlExecutionBackend sql_backend(config.timeout_seconds);
        for (const auto& [dataset, tables] : grouped) {
            sql_backend.add_database(dataset, build_database(tables));
        }
        auto rel = rel_backend();
        auto& llm = llm_backend();
        std::vector<ordered_json> records;
        std::vector<ipe::IpeStep> steps;
        for (std::size_t s = 0; s < config.ipe_pool_paths.size(); ++s) {
            auto pool = ipe::load_pool(config.ipe_pool_paths[s]);
            auto step = ipe::run_ipe_step(pool, batches, llm, config.llm_params, sql_backend,
                                          *rel, static_cast<int>(s + 1), options.seed);
            std::string file = "ipe_step_" + std::to_string(s + 1) + ".json";
            write_file_atomic(side_path(file), ipe::step_to_json(step) + "\n");
            ordered_json r = base_record("ipe-step/" + std::to_string(s + 1));
            r["step_index"] = step.step_index;
            r["pool_size"] = step.pool_size;
            r["records"] = step.records.size();
            r["accuracy"] = step.accuracy;
            r["artifact"] = file;
            records.push_back(std::move(r));
            steps.push_back(std::move(step));
        }
        write_file_atomic(side_path("ipe_convergence.csv"), ipe::convergence_curve(steps));
        write_artifact("ipe-step", records);
    }

    void stage_annotate_columns() {
        auto lines = require_artifact("schema");
        std::vector<const ordered_json*> tables;
        for (const auto& line : lines) {
            if (line.value("status", "") == "ok") tables.push_back(&line);
        }
        auto& llm = llm_backend();
        std::vector<ordered_json> records(tables.size());
        parallel_for(tables.size(), options.workers, [&](std::size_t i) {
            const auto& t = *tables[i];
            ordered_json r = base_record(
                "annotate-columns/" + t.at("id").get<std::string>().substr(7));
            r["schema_id"] = t.at("id");
            r["dataset_id"] = t.at("dataset_id");
            try {
                auto [table, ts] = schema::build_table(
                    load_raw(t.at("source_file").get<std::string>()),
                    config.sanitize_identifiers);
                (void)table;
                std::string prompt = prompting::build_column_annotation_prompt(ts);
                r["prompt_digest"] = sha256_hex(prompt);
                std::string response = llm.complete(prompt, config.llm_params);
                auto ann = prompting::parse_column_annotation_response(response);
                r["input_columns"] = ann.input_columns;
                r["output_column"] = ann.output_column;
                r["status"] = "ok";
            } catch (const Error& e) {
                fill_error(r, e);
            }
            records[i] = std::move(r);
        });
        write_artifact("annotate-columns", records);
    }

    void stage_extract_problems() {
        auto annotations = require_artifact("annotate-columns");
        auto schemas = require_artifact("schema");
        std::map<std::string, const ordered_json*> schema_by_id;
        for (const auto& s : schemas) schema_by_id[s.value("id", "")] = &s;

        coltask::Caps caps{config.max_train_rows, config.max_features, config.max_classes};
        std::vector<ordered_json> records;
        std::size_t index = 0;
        for (const auto& ann_rec : annotations) {
            if (ann_rec.value("status", "") != "ok") continue;
            ++index;
            ordered_json r = base_record(
                "extract-problems/" + ann_rec.at("id").get<std::string>().substr(17));
            r["annotation_id"] = ann_rec.at("id");
            auto sit = schema_by_id.find(ann_rec.value("schema_id", ""));
            if (sit == schema_by_id.end()) {
                r["status"] = "error";
                r["error_class"] = "MissingPrerequisite";
                r["error"] = "schema record not found";
                records.push_back(std::move(r));
                continue;
            }
            try {
                auto table =
                    rebuild_table(sit->second->at("source_file").get<std::string>());
                prompting::ColumnAnnotation ann;
                ann.input_columns =
                    ann_rec.at("input_columns").get<std::vector<std::string>>();
                ann.output_column = ann_rec.at("output_column").get<std::string>();
                auto validation = coltask::validate_column_annotation(table, ann, caps);
                if (!validation.accepted()) {
                    r["status"] = "rejected";
                    r["reason"] = coltask::rejection_reason_name(*validation.rejection);
                    records.push_back(std::move(r));
                    continue;
                }
                auto problem = coltask::extract_problem(table, *validation.spec,
                                                        options.seed + index, caps);
                r["status"] = "ok";
                r["seed"] = options.seed + index;
                r.update(ordered_json::parse(coltask::problem_to_json(problem)));
                records.push_back(std::move(r));
            } catch (const Error& e) {
                fill_error(r, e);
                records.push_back(std::move(r));
            }
        }
        write_artifact("extract-problems", records);
    }

    static coltask::ClassificationProblem problem_from_json(const ordered_json& r) {
        coltask::ClassificationProblem p;
        p.table_name = r.value("table_name", "");
        p.annotation.input_columns = r.at("input_columns").get<std::vector<std::string>>();
        p.annotation.output_column = r.at("output_column").get<std::string>();
        p.class_names = r.at("class_names").get<std::vector<std::string>>();
        p.labels = r.at("labels").get<std::vector<int>>();
        for (const auto& row : r.at("features")) {
            std::vector<double> feats;
            for (const auto& v : row) {
                feats.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : v.get<double>());
            }
            p.features.push_back(std::move(feats));
        }
        p.train_indices = r.at("train_indices").get<std::vector<std::size_t>>();
        p.test_indices = r.at("test_indices").get<std::vector<std::size_t>>();
        return p;
    }

    void stage_eval_classify() {
        auto lines = require_artifact("extract-problems");
        std::vector<const ordered_json*> problems;
        for (const auto& line : lines) {
            if (line.value("status", "") == "ok") problems.push_back(&line);
        }
        struct Eval {
            std::vector<ordered_json> records;
            std::vector<std::string> csv_rows;
            double auroc_linear = -1.0, auroc_prior = -1.0;
            std::string problem_id;
        };
        std::vector<Eval> evals(problems.size());
        parallel_for(problems.size(), options.workers, [&](std::size_t i) {
            const auto& rec = *problems[i];
            auto problem = problem_from_json(rec);
            std::vector<int> test_labels;
            for (std::size_t t : problem.test_indices) test_labels.push_back(problem.labels[t]);
            Eval& ev = evals[i];
            ev.problem_id = rec.at("id").get<std::string>();
            coltask::LinearBaseline linear;
            coltask::PriorBaseline prior;
            for (coltask::Classifier* model :
                 std::initializer_list<coltask::Classifier*>{&linear, &prior}) {
                ordered_json r = base_record("eval-classify/" +
                                             ev.problem_id.substr(17) + "/" + model->name());
                r["problem_id"] = ev.problem_id;
                r["model"] = model->name();
                auto t0 = std::chrono::steady_clock::now();
                try {
                    auto probs = model->fit_predict(problem);
                    double ce = coltask::cross_entropy(test_labels, probs);
                    r["cross_entropy"] = ce;
                    double auroc = -1.0;
                    try {
                        auroc = coltask::auroc_ovo(test_labels, probs);
                        r["auroc_ovo"] = auroc;
                    } catch (const SingleClass& e) {
                        r["auroc_ovo"] = nullptr;
                        r["note"] = e.what();
                    }
                    r["status"] = "ok";
                    double wall = std::chrono::duration<double>(
                                      std::chrono::steady_clock::now() - t0)
                                      .count();
                    char csv[256];
                    std::snprintf(csv, sizeof(csv), "%s,%s,%.6f,%.6f,%.3f\n",
                                  ev.problem_id.c_str(), model->name().c_str(),
                                  auroc, ce, wall);
                    ev.csv_rows.push_back(csv);
                    if (model->name() == "linear") ev.auroc_linear = auroc;
                    else ev.auroc_prior = auroc;
                } catch (const Error& e) {
                    fill_error(r, e);
                }
                ev.records.push_back(std::move(r));
            }
        });
        std::vector<ordered_json> records;
        std::string csv = "problem_id,model,auroc_ovo,cross_entropy,wall_seconds\n";
        stats::PairedScores pairs;
        for (auto& ev : evals) {
            for (auto& r : ev.records) records.push_back(std::move(r));
            for (auto& row : ev.csv_rows) csv += row;
            if (ev.auroc_linear >= 0.0 && ev.auroc_prior >= 0.0) {
                pairs.pairs.push_back({ev.problem_id, ev.auroc_linear, ev.auroc_prior});
            }
        }
        write_artifact("eval-classify", records);
        write_file_atomic(side_path("metrics.csv"), csv);
        ordered_json stats_doc;
        try {
            if (pairs.pairs.empty()) throw EmptyInput("no comparable problem pairs");
            auto result = stats::wilcoxon_signed_rank(pairs, stats::Alternative::Greater);
            stats_doc = ordered_json::parse(
                stats::stats_report_json(result, stats::Alternative::Greater));
            stats_doc["hypothesis"] = "linear > prior (AUROC-OVO)";
        } catch (const Error& e) {
            stats_doc["error_class"] = error_class_of(e);
            stats_doc["error"] = e.what();
        }
        write_file_atomic(side_path("stats.json"), stats_doc.dump(2) + "\n");
    }

    void stage_report() {
        auto ingest_lines = require_artifact("ingest");
        auto schema_lines = require_artifact("schema");
        auto query_lines = require_artifact("annotate-sql");
        auto validate_lines = require_artifact("validate");

        auto count_if = [](const std::vector<ordered_json>& lines, auto pred) {
            return static_cast<std::uint64_t>(std::count_if(lines.begin(), lines.end(), pred));
        };
        std::uint64_t datasets_listed = count_if(ingest_lines, [](const ordered_json& r) {
            return r.value("kind", "") == "dataset";
        });
        std::uint64_t datasets_kept = count_if(ingest_lines, [](const ordered_json& r) {
            return r.value("kind", "") == "dataset" && r.value("status", "") == "kept";
        });
        std::uint64_t tables_loaded = count_if(ingest_lines, [](const ordered_json& r) {
            return r.value("kind", "") == "table" && r.value("status", "") == "ok";
        });
        std::uint64_t tables_built = count_if(schema_lines, [](const ordered_json& r) {
            return r.value("status", "") == "ok";
        });
        std::uint64_t queries = count_if(query_lines, [](const ordered_json& r) {
            return r.value("kind", "") == "query" && r.value("status", "") == "ok";
        });
        std::uint64_t valid = count_if(validate_lines, [](const ordered_json& r) {
            return r.value("status", "") == "Valid";
        });

        std::vector<report::FunnelStage> stages;
        stages.push_back({"datasets_listed", datasets_listed, std::nullopt, 100.0});
        stages.push_back({"datasets_kept", datasets_kept, "datasets_listed", 0.0});
        stages.push_back({"tables_loaded", tables_loaded, std::nullopt, 100.0});
        stages.push_back({"tables_built", tables_built, "tables_loaded", 0.0});
        stages.push_back({"queries_synthesized", queries, std::nullopt, 100.0});
        stages.push_back({"queries_valid", valid, "queries_synthesized", 0.0});

        ordered_json summary;
        summary["datasets_listed"] = datasets_listed;
        summary["queries_synthesized"] = queries;
        summary["queries_valid"] = valid;
        if (queries > 0) summary["pct_valid"] = report::percent(valid, queries);

        if (fs::exists(path_of("translate"))) {
            auto translate_lines = require_artifact("translate");
            std::uint64_t translated = count_if(translate_lines, [](const ordered_json& r) {
                return r.value("status", "") == "ok";
            });
            std::uint64_t requested = translate_lines.size();
            stages.push_back({"translations_requested", requested, "queries_valid", 0.0});
            stages.push_back({"translations_returned", translated,
                              "translations_requested", 0.0});
            if (fs::exists(path_of("compare"))) {
                auto compare_lines = require_artifact("compare");
                std::uint64_t correct = count_if(compare_lines, [](const ordered_json& r) {
                    return r.value("outcome", "") == "Correct";
                });
                stages.push_back({"translations_correct", correct,
                                  "translations_returned", 0.0});
                if (requested > 0) {
                    summary["translation_accuracy_pct"] = report::percent(correct, requested);
                }
            }
        }
        if (fs::exists(path_of("annotate-columns"))) {
            auto ann_lines = require_artifact("annotate-columns");
            std::uint64_t parsed = count_if(ann_lines, [](const ordered_json& r) {
                return r.value("status", "") == "ok";
            });
            stages.push_back({"annotations_parsed", parsed, std::nullopt, 100.0});
            if (fs::exists(path_of("extract-problems"))) {
                auto prob_lines = require_artifact("extract-problems");
                std::uint64_t accepted = count_if(prob_lines, [](const ordered_json& r) {
                    return r.value("status", "") == "ok";
                });
                stages.push_back({"problems_accepted", accepted, "annotations_parsed", 0.0});
                if (fs::exists(path_of("eval-classify"))) {
                    auto eval_lines = require_artifact("eval-classify");
                    std::uint64_t evaluated = count_if(eval_lines, [](const ordered_json& r) {
                        return r.value("model", "") == "linear" &&
                               r.value("status", "") == "ok";
                    });
                    stages.push_back({"problems_evaluated", evaluated,
                                      "problems_accepted", 0.0});
                }
            }
        }

        auto funnel = report::funnel_report(std::move(stages));
        write_file_atomic(path_of("report"), funnel.json + "\n");
        write_file_atomic(side_path("funnel.txt"), funnel.text);
        write_file_atomic(side_path("summary.json"), summary.dump(2) + "\n");
        update_digest("report", sha256_hex(funnel.json + "\n"));
    }
};

Pipeline::Pipeline(PipelineOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}
Pipeline::~Pipeline() = default;

const std::vector<std::string>& Pipeline::stage_names() {
    static const std::vector<std::string> names = {
        "ingest",        "schema",          "annotate-sql",     "validate",
        "classify",      "translate",       "compare",          "ipe-step",
        "annotate-columns", "extract-problems", "eval-classify", "report",
    };
    return names;
}

void Pipeline::run_stage(const std::string& stage) {
    const auto& prereqs = stage_prerequisites();
    auto it = prereqs.find(stage);
    if (it == prereqs.end()) throw ConfigError("unknown stage: " + stage);
    for (const auto& dep : it->second) {
        if (!fs::exists(impl_->path_of(dep))) {
            throw MissingPrerequisite("stage '" + stage + "' needs artifact of '" + dep + "'");
        }
    }
    if (stage == "ingest") impl_->stage_ingest();
    else if (stage == "schema") impl_->stage_schema();
    else if (stage == "annotate-sql") impl_->stage_annotate_sql();
    else if (stage == "validate") impl_->stage_validate();
    else if (stage == "classify") impl_->stage_classify();
    else if (stage == "translate") impl_->stage_translate();
    else if (stage == "compare") impl_->stage_compare();
    else if (stage == "ipe-step") impl_->stage_ipe_step();
    else if (stage == "annotate-columns") impl_->stage_annotate_columns();
    else if (stage == "extract-problems") impl_->stage_extract_problems();
    else if (stage == "eval-classify") impl_->stage_eval_classify();
    else if (stage == "report") impl_->stage_report();
}

void Pipeline::run_all() {
    for (const auto& stage : stage_names()) run_stage(stage);
}

const PipelineConfig& Pipeline::config() const { return impl_->config; }

std::string Pipeline::artifact_path(const std::string& stage) const {
    return impl_->path_of(stage);
}

}  // namespace annotab::pipeline
