#pragma once

#include <map>
#include <string>
#include <vector>

#include "annotab/equivalence.hpp"
#include "annotab/llmclient.hpp"
#include "annotab/prompting.hpp"

namespace annotab::ipe {

using equivalence::TranslationBatch;
using equivalence::TranslationRecord;
using prompting::TranslationExample;

// Append-only few-shot pool; examples at step i are a prefix of the pool
// at step i+1.
struct ExamplePool {
    std::vector<TranslationExample> examples;
    std::vector<int> step_added;  // parallel to examples

    void add(TranslationExample example, int step);
};

ExamplePool load_pool(const std::string& path);          // JSONL
void save_pool(const ExamplePool& pool, const std::string& path);

struct IpeStep {
    int step_index = 0;
    std::size_t pool_size = 0;
    std::vector<TranslationBatch> batches;
    std::vector<TranslationRecord> records;
    double accuracy = 0.0;
    std::uint64_t seed = 0;
};

// Translates every batch with the pooled examples, executes both sides,
// classifies, and computes step accuracy. Backend errors abort the step;
// unparseable response slots become Error records.
IpeStep run_ipe_step(const ExamplePool& pool, const std::vector<TranslationBatch>& batches,
                     llm::CompletionBackend& llm_backend, const llm::LlmParams& params,
                     equivalence::ExecutionBackend& sql_backend,
                     equivalence::ExecutionBackend& rel_backend, int step_index,
                     std::uint64_t seed = 0);

// Non-Correct records grouped by every SQL component they contain, buckets
// ordered by failure frequency descending (ties by component order).
std::vector<std::pair<std::string, std::vector<const TranslationRecord*>>> bucket_failures(
    const IpeStep& step);

// One (pool_size, accuracy) point per step, as CSV "pool_size,accuracy".
std::string convergence_curve(const std::vector<IpeStep>& steps);

// Step artifact JSON (batches, outputs, per-record outcomes, accuracy, seed).
std::string step_to_json(const IpeStep& step);

}  // namespace annotab::ipe
