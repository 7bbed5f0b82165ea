#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "annotab/equivalence.hpp"
#include "annotab/schema.hpp"
#include "annotab/sqlexec.hpp"

namespace {

using namespace annotab;

sqlexec::Database make_db(int n_rows) {
    ingest::RawTable raw;
    raw.source_file = "sales.csv";
    raw.headers = {"region", "item", "price", "qty"};
    for (int i = 0; i < n_rows; ++i) {
        raw.rows.push_back({i % 2 ? "east" : "west", "item" + std::to_string(i % 20),
                            std::to_string(50 + i % 300), std::to_string(1 + i % 9)});
    }
    return sqlexec::load_database({schema::build_table(raw, true).first});
}

void BM_ExecuteAndClassify(benchmark::State& state) {
    auto db = make_db(static_cast<int>(state.range(0)));
    const std::vector<std::string> queries = {
        "SELECT * FROM Sales WHERE Price > 200;",
        "SELECT Region, AVG(Price) FROM Sales GROUP BY Region;",
        "SELECT Item, SUM(Qty) FROM Sales GROUP BY Item ORDER BY SUM(Qty) DESC LIMIT 5;",
        "SELECT COUNT(*) FROM Sales WHERE Region = 'east' AND Qty > 4;",
        "SELECT * FROM NoSuchTable;",
    };
    std::size_t i = 0;
    for (auto _ : state) {
        auto outcome = sqlexec::execute_sql(db, queries[i % queries.size()], 5.0);
        benchmark::DoNotOptimize(sqlexec::classify_outcome(outcome));
        ++i;
    }
}
BENCHMARK(BM_ExecuteAndClassify)->Arg(100)->Arg(1000);

void BM_LoadDatabase(benchmark::State& state) {
    ingest::RawTable raw;
    raw.source_file = "t.csv";
    raw.headers = {"a", "b", "c"};
    for (int i = 0; i < 1000; ++i) {
        raw.rows.push_back({std::to_string(i), std::to_string(i * 0.5), "text"});
    }
    auto table = schema::build_table(raw, true).first;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sqlexec::load_database({table}));
    }
}
BENCHMARK(BM_LoadDatabase);

void BM_NormalizeResult(benchmark::State& state) {
    auto db = make_db(1000);
    auto outcome = sqlexec::execute_sql(db, "SELECT * FROM Sales;", 5.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(equivalence::normalize_result(outcome.result));
    }
}
BENCHMARK(BM_NormalizeResult);

}  // namespace
