#pragma once

// Builds a complete offline pipeline environment in a scratch directory:
// dataset manifest, pipeline config, a completion record store covering
// every prompt the pipeline will issue (responses come from the canned
// files under fixtures/responses), and an execution-fixture file for the
// translation target built by running each translated program on the
// fixture databases.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "annotab/digest.hpp"
#include "annotab/equivalence.hpp"
#include "annotab/ingest.hpp"
#include "annotab/ipe.hpp"
#include "annotab/llmclient.hpp"
#include "annotab/prompting.hpp"
#include "annotab/schema.hpp"
#include "annotab/sqlexec.hpp"

namespace fixture_env {

namespace fs = std::filesystem;

inline std::string fixtures_dir() { return FIXTURES_DIR; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::string response_file(const std::string& name) {
    return read_file(fixtures_dir() + "/responses/" + name + ".txt");
}

struct Dataset {
    std::string id;
    std::vector<std::string> csv_files;
};

inline const std::vector<Dataset>& datasets() {
    static const std::vector<Dataset> d = {
        {"propsales", {"ma_lga_12345.csv", "raw_sales.csv"}},
        {"flowers", {"flowers.csv"}},
        {"salaries", {"salaries.csv"}},
        {"orders", {"orders.csv"}},
        {"weather", {"weather.csv"}},
    };
    return d;
}

inline annotab::llm::LlmParams llm_params() {
    annotab::llm::LlmParams p;
    p.model_name = "test-model";
    p.temperature = 0.0;
    p.max_output_tokens = 2048;
    return p;
}

// Typed, truncated tables of one dataset, in manifest order.
inline std::vector<annotab::ingest::Table> dataset_tables(const Dataset& d) {
    std::vector<annotab::ingest::Table> tables;
    for (const auto& file : d.csv_files) {
        auto raw = annotab::ingest::load_raw_table(fixtures_dir() + "/datasets/" + d.id +
                                                   "/" + file);
        raw.source_file = file;
        auto [table, schema] = annotab::schema::build_table(raw, true);
        (void)schema;
        tables.push_back(annotab::ingest::truncate_rows(std::move(table), 1000));
    }
    return tables;
}

inline annotab::prompting::DbDescription dataset_description(const Dataset& d) {
    annotab::prompting::DbDescription db;
    for (const auto& table : dataset_tables(d)) {
        db.schemas.push_back(annotab::schema::schema_of(table));
    }
    return db;
}

// The per-database query batch the translate/ipe-step stages will build:
// the first three Valid queries of databases with at least three.
inline std::vector<annotab::equivalence::TranslationBatch> expected_workload() {
    return {
        {"propsales",
         {"SELECT PropertyType, AVG(Price) AS AvgPrice FROM RawSales GROUP BY PropertyType;",
          "SELECT * FROM RawSales WHERE PropertyType = 'house';",
          "SELECT a.Saledate, b.Price FROM MaLga12345 a JOIN RawSales b ON a.Bedrooms = "
          "b.Bedrooms;"}},
        {"flowers",
         {"SELECT Species, AVG(PetalLength) AS AvgPetal FROM Flowers GROUP BY Species;",
          "SELECT * FROM Flowers WHERE PetalWidth > 1.0;",
          "SELECT * FROM Flowers ORDER BY SepalLength DESC LIMIT 5;"}},
    };
}

struct Environment {
    std::string root;           // scratch directory
    std::string manifest_path;
    std::string config_path;
    std::string store_path;
    std::string rel_fixtures_path;
    std::string artifacts_dir;
};

inline void write_manifest(const Environment& env) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& d : datasets()) {
        nlohmann::ordered_json m;
        m["dataset_id"] = d.id;
        m["root_path"] = fixtures_dir() + "/datasets/" + d.id;
        m["size_bytes"] = 50000;
        m["usability_rating"] = 0.8;
        m["csv_files"] = d.csv_files;
        arr.push_back(std::move(m));
    }
    nlohmann::ordered_json junk;
    junk["dataset_id"] = "junk";
    junk["root_path"] = fixtures_dir() + "/datasets/junk";
    junk["size_bytes"] = 100;
    junk["usability_rating"] = 0.05;  // not strictly above the 0.1 floor
    junk["csv_files"] = {"junk.csv"};
    arr.push_back(std::move(junk));
    nlohmann::ordered_json big;
    big["dataset_id"] = "bigdump";
    big["root_path"] = fixtures_dir() + "/datasets/bigdump";
    big["size_bytes"] = 99999999999ULL;  // over the size ceiling
    big["usability_rating"] = 0.9;
    big["csv_files"] = {"dump.csv"};
    arr.push_back(std::move(big));
    std::ofstream out(env.manifest_path, std::ios::binary | std::ios::trunc);
    out << arr.dump(2) << "\n";
}

inline void write_config(const Environment& env) {
    nlohmann::ordered_json cfg;
    cfg["manifest_path"] = env.manifest_path;
    cfg["artifacts_dir"] = env.artifacts_dir;
    cfg["llm"] = {{"endpoint_url", "http://localhost:1/v1/chat/completions"},
                  {"model_name", "test-model"},
                  {"temperature", 0.0},
                  {"max_output_tokens", 2048}};
    cfg["rel"] = {{"fixtures_path", env.rel_fixtures_path}};
    cfg["filters"] = {{"min_bytes", 1},
                      {"max_bytes", 1000000000},
                      {"min_usability", 0.1}};
    cfg["caps"] = {{"max_rows", 1000},
                   {"max_train_rows", 1000},
                   {"max_features", 100},
                   {"max_classes", 10}};
    cfg["synthesis"] = {{"n_queries", 15}, {"steer_complex", true}};
    cfg["translation"] = {
        {"min_queries", 3},
        {"batch_size", 3},
        {"pool_path", fixtures_dir() + "/pools/pool_main.jsonl"},
        {"ipe_pool_paths",
         {fixtures_dir() + "/pools/pool_step1.jsonl",
          fixtures_dir() + "/pools/pool_step2.jsonl",
          fixtures_dir() + "/pools/pool_step3.jsonl"}}};
    cfg["timeout_seconds"] = 5.0;
    cfg["sanitize_identifiers"] = true;
    std::ofstream out(env.config_path, std::ios::binary | std::ios::trunc);
    out << cfg.dump(2) << "\n";
}

inline void add_record(annotab::llm::RecordStore& store, const std::string& prompt,
                       const std::string& response) {
    annotab::llm::CompletionRecord rec;
    rec.prompt_digest = annotab::sha256_hex(prompt);
    rec.params = llm_params();
    rec.response = response;
    rec.timestamp = "2026-01-01T00:00:00Z";
    store.append(rec);
}

inline void build_replay_store(const Environment& env) {
    annotab::llm::RecordStore store(env.store_path);
    // SQL synthesis, one prompt per database.
    for (const auto& d : datasets()) {
        auto prompt = annotab::prompting::build_sql_synthesis_prompt(dataset_description(d),
                                                                     15, true);
        add_record(store, prompt, response_file("synthesis_" + d.id));
    }
    // Translation with the main pool and with each IPE-step pool.
    auto workload = expected_workload();
    auto main_pool = annotab::ipe::load_pool(fixtures_dir() + "/pools/pool_main.jsonl");
    for (const auto& batch : workload) {
        auto prompt =
            annotab::prompting::build_translation_prompt(main_pool.examples, batch.queries);
        add_record(store, prompt, response_file("translate_main_" + batch.database_id));
    }
    for (int step = 1; step <= 3; ++step) {
        auto pool = annotab::ipe::load_pool(fixtures_dir() + "/pools/pool_step" +
                                            std::to_string(step) + ".jsonl");
        for (const auto& batch : workload) {
            auto prompt =
                annotab::prompting::build_translation_prompt(pool.examples, batch.queries);
            add_record(store, prompt,
                       response_file("ipe_step" + std::to_string(step) + "_" +
                                     batch.database_id));
        }
    }
    // Column annotation, one prompt per table.
    for (const auto& d : datasets()) {
        for (const auto& table : dataset_tables(d)) {
            auto schema = annotab::schema::schema_of(table);
            auto prompt = annotab::prompting::build_column_annotation_prompt(schema);
            add_record(store, prompt, response_file("columns_" + schema.table_name));
        }
    }
}

// Executes every translated program from the canned responses on the real
// fixture databases and freezes the outcomes as execution fixtures.
inline void build_rel_fixtures(const Environment& env) {
    annotab::equivalence::SqlExecutionBackend backend(5.0);
    for (const auto& d : datasets()) {
        backend.add_database(d.id, std::make_shared<annotab::sqlexec::Database>(
                                       annotab::sqlexec::load_database(dataset_tables(d))));
    }
    for (const auto& batch : expected_workload()) {
        for (const std::string& prefix : {std::string("translate_main_"),
                                          std::string("ipe_step1_"), std::string("ipe_step2_"),
                                          std::string("ipe_step3_")}) {
            auto outputs = annotab::prompting::parse_translation_response(
                response_file(prefix + batch.database_id),
                static_cast<int>(batch.queries.size()));
            for (const auto& rel : outputs) {
                if (!rel) continue;
                auto outcome = backend.execute(*rel, batch.database_id);
                annotab::equivalence::ReplayExecutionBackend::append_fixture(
                    env.rel_fixtures_path, *rel, batch.database_id, outcome);
            }
        }
    }
}

// Creates a fully provisioned scratch environment under `root`.
inline Environment make_environment(const std::string& root) {
    Environment env;
    env.root = root;
    fs::remove_all(root);
    fs::create_directories(root);
    env.manifest_path = root + "/manifests.json";
    env.config_path = root + "/config.json";
    env.store_path = root + "/replay_store.jsonl";
    env.rel_fixtures_path = root + "/rel_fixtures.jsonl";
    env.artifacts_dir = root + "/artifacts";
    write_manifest(env);
    write_config(env);
    build_replay_store(env);
    build_rel_fixtures(env);
    return env;
}

}  // namespace fixture_env
