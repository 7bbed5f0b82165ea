#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "annotab/sqlclassify.hpp"

namespace {

const std::vector<std::string>& sample_queries() {
    static const std::vector<std::string> queries = {
        "SELECT A, B FROM T;",
        "SELECT Region, AVG(Price) AS AvgPrice FROM Sales GROUP BY Region "
        "HAVING AVG(Price) > 100 ORDER BY AvgPrice DESC LIMIT 10;",
        "SELECT s.Item, t.Name FROM Sales s JOIN Staff t ON s.Region = t.Region "
        "WHERE s.Price > 50 AND t.Tenure NOT IN (1, 2) OR s.Item LIKE 'w%';",
        "SELECT 'decoy from where group by order by join union intersect except';",
        "SELECT Region FROM Sales UNION SELECT Region FROM Staff "
        "INTERSECT SELECT Region FROM Archive EXCEPT SELECT Region FROM Closed;",
        "SELECT COUNT(*), MAX(Price), MIN(Price), SUM(Qty) FROM Sales "
        "WHERE Item = 'it''s a \"quoted\" name' AND Qty > 0;",
    };
    return queries;
}

void BM_TokenizeSql(benchmark::State& state) {
    const auto& queries = sample_queries();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(annotab::sqlclassify::tokenize_sql(queries[i % queries.size()]));
        ++i;
    }
}
BENCHMARK(BM_TokenizeSql);

void BM_DetectComponents(benchmark::State& state) {
    const auto& queries = sample_queries();
    std::vector<std::vector<annotab::sqlclassify::SqlToken>> tokenized;
    for (const auto& q : queries) tokenized.push_back(annotab::sqlclassify::tokenize_sql(q));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            annotab::sqlclassify::detect_components(tokenized[i % tokenized.size()]));
        ++i;
    }
}
BENCHMARK(BM_DetectComponents);

void BM_AggregateComponentStats(benchmark::State& state) {
    std::vector<std::pair<annotab::sqlclassify::ComponentSet,
                          annotab::sqlexec::AnnotationStatus>> records;
    const auto& queries = sample_queries();
    for (int i = 0; i < 10000; ++i) {
        records.emplace_back(
            annotab::sqlclassify::detect_components(queries[i % queries.size()]),
            static_cast<annotab::sqlexec::AnnotationStatus>(i % 3));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(annotab::sqlclassify::aggregate_component_stats(records));
    }
}
BENCHMARK(BM_AggregateComponentStats);

}  // namespace
