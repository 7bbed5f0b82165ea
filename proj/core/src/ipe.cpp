#include "annotab/ipe.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "annotab/errors.hpp"
#include "annotab/sqlclassify.hpp"

namespace annotab::ipe {

void ExamplePool::add(TranslationExample example, int step) {
    example.index = static_cast<int>(examples.size()) + 1;
    examples.push_back(std::move(example));
    step_added.push_back(step);
}

ExamplePool load_pool(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreIoError("cannot open pool file: " + path);
    ExamplePool pool;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json doc = nlohmann::json::parse(line);
        pool.add({doc.at("sql").get<std::string>(), doc.at("rel").get<std::string>(), 0},
                 doc.value("step_added", 0));
    }
    return pool;
}

void save_pool(const ExamplePool& pool, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreIoError("cannot write pool file: " + path);
    for (std::size_t i = 0; i < pool.examples.size(); ++i) {
        nlohmann::ordered_json doc;
        doc["sql"] = pool.examples[i].sql;
        doc["rel"] = pool.examples[i].rel;
        doc["step_added"] = pool.step_added[i];
        out << doc.dump() << '\n';
    }
}

IpeStep run_ipe_step(const ExamplePool& pool, const std::vector<TranslationBatch>& batches,
                     llm::CompletionBackend& llm_backend, const llm::LlmParams& params,
                     equivalence::ExecutionBackend& sql_backend,
                     equivalence::ExecutionBackend& rel_backend, int step_index,
                     std::uint64_t seed) {
    if (pool.examples.empty()) throw PreconditionViolated("example pool is empty");
    IpeStep step;
    step.step_index = step_index;
    step.pool_size = pool.examples.size();
    step.batches = batches;
    step.seed = seed;

    for (const auto& batch : batches) {
        std::string prompt = prompting::build_translation_prompt(pool.examples, batch.queries);
        std::string response = llm_backend.complete(prompt, params);
        auto outputs = prompting::parse_translation_response(
            response, static_cast<int>(batch.queries.size()));

        for (std::size_t i = 0; i < batch.queries.size(); ++i) {
            TranslationRecord record;
            record.database_id = batch.database_id;
            record.sql = batch.queries[i];
            record.sql_outcome = sql_backend.execute(record.sql, batch.database_id);
            if (outputs[i]) {
                record.rel = outputs[i];
                record.rel_outcome = rel_backend.execute(*outputs[i], batch.database_id);
            } else {
                record.rel_outcome =
                    sqlexec::ExecOutcome::error("no translation in response");
            }
            record.outcome =
                equivalence::classify_translation(record.sql_outcome, record.rel_outcome);
            step.records.push_back(std::move(record));
        }
    }
    step.accuracy = equivalence::execution_accuracy(step.records);
    return step;
}

std::vector<std::pair<std::string, std::vector<const TranslationRecord*>>> bucket_failures(
    const IpeStep& step) {
    using sqlclassify::Component;
    std::array<std::vector<const TranslationRecord*>, sqlclassify::kComponentCount> buckets;
    for (const auto& record : step.records) {
        if (record.outcome == equivalence::TranslationOutcome::Correct) continue;
        auto set = sqlclassify::detect_components(record.sql);
        for (std::size_t c = 0; c < sqlclassify::kComponentCount; ++c) {
            if (set.test(c)) buckets[c].push_back(&record);
        }
    }
    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < sqlclassify::kComponentCount; ++c) {
        if (!buckets[c].empty()) order.push_back(c);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return buckets[a].size() > buckets[b].size();
    });
    std::vector<std::pair<std::string, std::vector<const TranslationRecord*>>> out;
    for (std::size_t c : order) {
        out.emplace_back(sqlclassify::component_name(static_cast<Component>(c)),
                         std::move(buckets[c]));
    }
    return out;
}

std::string convergence_curve(const std::vector<IpeStep>& steps) {
    std::string out = "pool_size,accuracy\n";
    char line[64];
    for (const auto& step : steps) {
        std::snprintf(line, sizeof(line), "%zu,%.6f\n", step.pool_size, step.accuracy);
        out += line;
    }
    return out;
}

std::string step_to_json(const IpeStep& step) {
    nlohmann::ordered_json doc;
    doc["step_index"] = step.step_index;
    doc["pool_size"] = step.pool_size;
    doc["seed"] = step.seed;
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (const auto& r : step.records) {
        nlohmann::ordered_json o;
        o["database_id"] = r.database_id;
        o["sql"] = r.sql;
        if (r.rel) o["rel"] = *r.rel;
        o["outcome"] = equivalence::translation_outcome_name(r.outcome);
        records.push_back(std::move(o));
    }
    doc["records"] = std::move(records);
    doc["accuracy"] = step.accuracy;
    return doc.dump(2);
}

}  // namespace annotab::ipe
