#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "annotab/equivalence.hpp"
#include "annotab/errors.hpp"

using namespace annotab;
using equivalence::CanonicalSet;
using equivalence::TranslationOutcome;
using sqlexec::ExecOutcome;
using sqlexec::ResultSet;

namespace {

ResultSet result(std::vector<std::string> columns, std::vector<Row> rows) {
    ResultSet rs;
    rs.column_names = std::move(columns);
    rs.rows = std::move(rows);
    return rs;
}

Row row(std::initializer_list<Cell> cells) { return Row(cells); }

}  // namespace

TEST_CASE("normalize_result erases row order and duplicate rows") {
    auto a = result({"x", "y"}, {row({std::int64_t{1}, std::string("p")}),
                                 row({std::int64_t{2}, std::string("q")}),
                                 row({std::int64_t{1}, std::string("p")})});
    auto b = result({"u", "v"}, {row({std::int64_t{2}, std::string("q")}),
                                 row({std::int64_t{1}, std::string("p")})});
    CHECK(equivalence::normalize_result(a) == equivalence::normalize_result(b));
}

TEST_CASE("rows containing a null are dropped before comparison") {
    auto with_null = result({"x"}, {row({std::int64_t{1}}), row({std::monostate{}})});
    auto without = result({"x"}, {row({std::int64_t{1}})});
    CHECK(equivalence::normalize_result(with_null) == equivalence::normalize_result(without));
    CHECK(equivalence::normalize_result(with_null).tuples.size() == 1);
}

TEST_CASE("numerics compare across integer/real representation with tolerance") {
    auto ints = result({"x"}, {row({std::int64_t{3}})});
    auto reals = result({"x"}, {row({3.0000000000001})});
    CHECK(equivalence::normalize_result(ints) == equivalence::normalize_result(reals));
    auto off = result({"x"}, {row({3.001})});
    CHECK(equivalence::normalize_result(ints) != equivalence::normalize_result(off));
    auto neg_zero = result({"x"}, {row({-0.0})});
    auto pos_zero = result({"x"}, {row({0.0})});
    CHECK(equivalence::normalize_result(neg_zero) == equivalence::normalize_result(pos_zero));
}

TEST_CASE("text is byte-exact and never collides with numbers") {
    auto text = result({"x"}, {row({std::string("3")})});
    auto num = result({"x"}, {row({std::int64_t{3}})});
    CHECK(equivalence::normalize_result(text) != equivalence::normalize_result(num));
    auto text2 = result({"x"}, {row({std::string("3 ")})});
    CHECK(equivalence::normalize_result(text) != equivalence::normalize_result(text2));
}

TEST_CASE("normalize_result is idempotent under re-encoding and shuffle-invariant") {
    std::mt19937 rng(9);
    auto rs = result({"a", "b"}, {});
    for (int i = 0; i < 40; ++i) {
        rs.rows.push_back(row({std::int64_t{i % 7}, static_cast<double>(i) / 3.0}));
    }
    auto canonical = equivalence::normalize_result(rs);
    for (int trial = 0; trial < 50; ++trial) {
        auto shuffled = rs;
        std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
        CHECK(equivalence::normalize_result(shuffled) == canonical);
    }
}

TEST_CASE("classify_translation covers the three outcomes") {
    auto valid = ExecOutcome::ok(result({"x"}, {row({std::int64_t{1}})}));
    auto same = ExecOutcome::ok(result({"y"}, {row({1.0})}));
    auto different = ExecOutcome::ok(result({"y"}, {row({std::int64_t{2}})}));
    auto wide = ExecOutcome::ok(
        result({"y", "z"}, {row({std::int64_t{1}, std::int64_t{1}})}));
    CHECK(equivalence::classify_translation(valid, same) == TranslationOutcome::Correct);
    CHECK(equivalence::classify_translation(valid, different) ==
          TranslationOutcome::DifferentResults);
    CHECK(equivalence::classify_translation(valid, wide) ==
          TranslationOutcome::DifferentResults);
    CHECK(equivalence::classify_translation(valid, ExecOutcome::error("boom")) ==
          TranslationOutcome::Error);
    CHECK(equivalence::classify_translation(valid, ExecOutcome::timeout()) ==
          TranslationOutcome::Error);
}

TEST_CASE("classify_translation requires a Valid source query") {
    auto same = ExecOutcome::ok(result({"x"}, {row({std::int64_t{1}})}));
    CHECK_THROWS_AS(
        equivalence::classify_translation(ExecOutcome::error("bad"), same),
        PreconditionViolated);
    CHECK_THROWS_AS(
        equivalence::classify_translation(ExecOutcome::ok(result({"x"}, {})), same),
        PreconditionViolated);
}

TEST_CASE("execution_accuracy is the Correct share; empty input throws") {
    std::vector<equivalence::TranslationRecord> records(4);
    records[0].outcome = TranslationOutcome::Correct;
    records[1].outcome = TranslationOutcome::Error;
    records[2].outcome = TranslationOutcome::Correct;
    records[3].outcome = TranslationOutcome::DifferentResults;
    CHECK(equivalence::execution_accuracy(records) == 0.5);
    CHECK_THROWS_AS(equivalence::execution_accuracy({}), EmptyInput);
}

TEST_CASE("workload selection keeps qualified databases and truncates batches") {
    std::vector<std::pair<std::string, std::vector<std::string>>> by_db = {
        {"a", {"q1", "q2", "q3", "q4"}},
        {"b", {"q1", "q2"}},
        {"c", {"q1", "q2", "q3"}},
    };
    auto batches = equivalence::select_translation_workload(by_db, 3, 3);
    REQUIRE(batches.size() == 2);
    CHECK(batches[0].database_id == "a");
    CHECK(batches[0].queries == std::vector<std::string>{"q1", "q2", "q3"});
    CHECK(batches[1].database_id == "c");
    CHECK(batches[1].queries.size() == 3);
}

TEST_CASE("replay execution fixtures round-trip every outcome kind") {
    auto path = (std::filesystem::temp_directory_path() / "annotab_rel_fixtures.jsonl").string();
    std::remove(path.c_str());
    auto ok = ExecOutcome::ok(result(
        {"a", "b"}, {row({std::int64_t{1}, std::string("x")}),
                     row({2.5, std::monostate{}})}));
    equivalence::ReplayExecutionBackend::append_fixture(path, "prog-ok", "db1", ok);
    equivalence::ReplayExecutionBackend::append_fixture(path, "prog-err", "db1",
                                                        ExecOutcome::error("engine said no"));
    equivalence::ReplayExecutionBackend::append_fixture(path, "prog-to", "db1",
                                                        ExecOutcome::timeout());
    equivalence::ReplayExecutionBackend backend(path);

    auto got = backend.execute("prog-ok", "db1");
    REQUIRE(got.kind == sqlexec::OutcomeKind::Ok);
    CHECK(got.result.column_names == std::vector<std::string>{"a", "b"});
    REQUIRE(got.result.rows.size() == 2);
    CHECK(std::get<std::int64_t>(got.result.rows[0][0]) == 1);
    CHECK(is_null(got.result.rows[1][1]));
    CHECK(equivalence::normalize_result(got.result) == equivalence::normalize_result(ok.result));

    auto err = backend.execute("prog-err", "db1");
    CHECK(err.kind == sqlexec::OutcomeKind::EngineError);
    CHECK(err.message == "engine said no");
    CHECK(backend.execute("prog-to", "db1").kind == sqlexec::OutcomeKind::Timeout);

    CHECK_THROWS_AS(backend.execute("prog-ok", "other-db"), ReplayMiss);
    CHECK_THROWS_AS(backend.execute("unknown", "db1"), ReplayMiss);
    std::remove(path.c_str());
}

TEST_CASE("fuzzed pairs: unequal canonical sets are never classified Correct") {
    std::mt19937 rng(20260824);
    auto random_result = [&](int variant) {
        ResultSet rs;
        int cols = 1 + static_cast<int>(rng() % 3);
        for (int c = 0; c < cols; ++c) rs.column_names.push_back("c" + std::to_string(c));
        int rows_n = 1 + static_cast<int>(rng() % 5);
        for (int r = 0; r < rows_n; ++r) {
            Row rw;
            for (int c = 0; c < cols; ++c) {
                switch ((rng() + static_cast<unsigned>(variant)) % 4) {
                    case 0: rw.emplace_back(static_cast<std::int64_t>(rng() % 5)); break;
                    case 1: rw.emplace_back(static_cast<double>(rng() % 5) / 2.0); break;
                    case 2: rw.emplace_back(std::string(1, 'a' + rng() % 3)); break;
                    default: rw.emplace_back(std::monostate{});
                }
            }
            rs.rows.push_back(std::move(rw));
        }
        return rs;
    };
    for (int trial = 0; trial < 1000; ++trial) {
        auto a = random_result(0);
        a.rows.push_back(a.rows[0]);  // keep at least one non-null candidate likely
        auto b = random_result(1);
        auto lhs = ExecOutcome::ok(a);
        auto rhs = ExecOutcome::ok(b);
        if (equivalence::normalize_result(a).tuples.empty()) continue;
        if (a.rows.empty()) continue;
        auto outcome = equivalence::classify_translation(lhs, rhs);
        bool sets_equal = a.column_names.size() == b.column_names.size() &&
                          equivalence::normalize_result(a) == equivalence::normalize_result(b);
        CHECK((outcome == TranslationOutcome::Correct) == sets_equal);
    }
    // A known-equal pair under reordering still comes out Correct.
    auto base = random_result(0);
    base.rows.push_back(row({std::int64_t{1}}));  // ensure a non-null row exists
    base.rows.back().resize(base.column_names.size(), Cell{std::int64_t{1}});
    auto shuffled = base;
    std::reverse(shuffled.rows.begin(), shuffled.rows.end());
    CHECK(equivalence::classify_translation(ExecOutcome::ok(base),
                                            ExecOutcome::ok(shuffled)) ==
          TranslationOutcome::Correct);
}
