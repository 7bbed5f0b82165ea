#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "annotab/llmclient.hpp"

namespace annotab::pipeline {

struct PipelineConfig {
    std::string manifest_path;
    std::string artifacts_dir;

    std::string llm_endpoint_url;
    llm::LlmParams llm_params;

    std::string rel_endpoint_url;       // live/record execution of translations
    std::string rel_fixtures_path;      // replay execution of translations

    std::uint64_t filter_min_bytes = 0;
    std::uint64_t filter_max_bytes = UINT64_MAX;
    double filter_min_usability = 0.1;

    std::size_t max_rows = 1000;
    std::size_t max_train_rows = 1000;
    std::size_t max_features = 100;
    std::size_t max_classes = 10;

    int synthesis_n_queries = 15;
    bool synthesis_steer_complex = true;

    std::size_t translation_min_queries = 10;
    std::size_t translation_batch_size = 10;
    std::string pool_path;                      // few-shot pool for `translate`
    std::vector<std::string> ipe_pool_paths;    // one pool per IPE step

    double timeout_seconds = 120.0;
    bool sanitize_identifiers = true;
};

// Reads a JSON config file. Throws ConfigError on unreadable/invalid
// content or missing required fields.
PipelineConfig load_config(const std::string& path);

struct PipelineOptions {
    std::string config_path;
    std::string replay_store_path;
    std::string mode = "replay";  // record | replay | live
    int workers = 4;
    std::uint64_t seed = 0;
    std::string api_key;
};

// Stage orchestrator. Each stage reads the prior stage's JSONL artifact
// from the artifacts directory, processes records (failures are captured
// per record, never aborting the batch), and writes its own artifact
// atomically (temp file + rename). Stage digests land in digests.json.
class Pipeline {
  public:
    explicit Pipeline(PipelineOptions options);
    ~Pipeline();
    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    // All stage names in dependency order.
    static const std::vector<std::string>& stage_names();

    // Runs one stage. Throws MissingPrerequisite when an upstream artifact
    // is absent, ConfigError for bad configuration, ReplayMiss when replay
    // mode lacks a recorded completion.
    void run_stage(const std::string& stage);

    // Runs every stage in order.
    void run_all();

    const PipelineConfig& config() const;
    std::string artifact_path(const std::string& stage) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace annotab::pipeline
