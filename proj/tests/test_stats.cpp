#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "annotab/errors.hpp"
#include "annotab/stats.hpp"

using namespace annotab;
using stats::Alternative;
using stats::PairedScores;

namespace {

PairedScores scores_from_diffs(const std::vector<double>& diffs) {
    PairedScores s;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        s.pairs.push_back({"p" + std::to_string(i), diffs[i], 0.0});
    }
    return s;
}

// Independent oracle: midranks the nonzero |d|, then enumerates all 2^n
// sign assignments and counts tail mass directly. Works on doubled ranks
// so all arithmetic is integral.
struct ExactTails {
    double w_plus = 0.0;
    double p_greater = 0.0;
    double p_less = 0.0;
};

ExactTails enumerate_tails(const std::vector<double>& diffs) {
    std::vector<double> abs_d;
    std::vector<bool> positive;
    for (double d : diffs) {
        if (d == 0.0) continue;
        abs_d.push_back(std::abs(d));
        positive.push_back(d > 0.0);
    }
    const std::size_t n = abs_d.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
    std::vector<long long> rank2(n, 0);  // doubled midranks
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_d[order[j + 1]] == abs_d[order[i]]) ++j;
        long long doubled = static_cast<long long>(i + j) + 2;  // 2 * midrank
        for (std::size_t t = i; t <= j; ++t) rank2[order[t]] = doubled;
        i = j + 1;
    }
    long long observed2 = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (positive[t]) observed2 += rank2[t];
    }
    long long ge = 0, le = 0;
    long long total = 1LL << n;
    for (long long mask = 0; mask < total; ++mask) {
        long long w2 = 0;
        for (std::size_t t = 0; t < n; ++t) {
            if (mask & (1LL << t)) w2 += rank2[t];
        }
        if (w2 >= observed2) ++ge;
        if (w2 <= observed2) ++le;
    }
    ExactTails out;
    out.w_plus = static_cast<double>(observed2) / 2.0;
    out.p_greater = static_cast<double>(ge) / static_cast<double>(total);
    out.p_less = static_cast<double>(le) / static_cast<double>(total);
    return out;
}

}  // namespace

TEST_CASE("five uniformly positive differences give exactly 2^-5 one-sided") {
    auto result = stats::wilcoxon_signed_rank(
        scores_from_diffs({1.0, 2.0, 3.0, 4.0, 5.0}), Alternative::Greater);
    CHECK(result.p_value == 0.03125);
    CHECK(result.w_plus == 15.0);
    CHECK(result.n == 5);
    CHECK(result.method == "exact");
}

TEST_CASE("exact p-values match full enumeration on random fixtures") {
    std::mt19937 gen(20260824);
    std::uniform_int_distribution<int> n_dist(2, 12);
    std::uniform_int_distribution<int> mag(1, 6);  // small magnitudes force ties
    for (int trial = 0; trial < 200; ++trial) {
        int n = n_dist(gen);
        std::vector<double> diffs;
        for (int i = 0; i < n; ++i) {
            double d = mag(gen);
            if (gen() % 2) d = -d;
            diffs.push_back(d);
        }
        // Ensure at least one nonzero difference survives (they all do:
        // magnitudes start at 1).
        auto oracle = enumerate_tails(diffs);
        auto scores = scores_from_diffs(diffs);
        CAPTURE(trial);

        auto greater = stats::wilcoxon_signed_rank(scores, Alternative::Greater);
        CHECK(greater.method == "exact");
        CHECK(greater.w_plus == doctest::Approx(oracle.w_plus).epsilon(1e-12));
        CHECK(greater.p_value == doctest::Approx(oracle.p_greater).epsilon(1e-12));

        auto less = stats::wilcoxon_signed_rank(scores, Alternative::Less);
        CHECK(less.p_value == doctest::Approx(oracle.p_less).epsilon(1e-12));

        auto two = stats::wilcoxon_signed_rank(scores, Alternative::TwoSided);
        double expect_two = std::min(1.0, 2.0 * std::min(oracle.p_greater, oracle.p_less));
        CHECK(two.p_value == doctest::Approx(expect_two).epsilon(1e-12));
    }
}

TEST_CASE("flipping the comparison direction swaps the one-sided tails") {
    std::mt19937 gen(7);
    for (int trial = 0; trial < 50; ++trial) {
        PairedScores ab, ba;
        int n = 3 + static_cast<int>(gen() % 8);
        for (int i = 0; i < n; ++i) {
            double a = static_cast<double>(gen() % 10);
            double b = static_cast<double>(gen() % 10);
            if (i == 0 && a == b) b += 1.0;  // keep at least one nonzero diff
            ab.pairs.push_back({"p", a, b});
            ba.pairs.push_back({"p", b, a});
        }
        auto g = stats::wilcoxon_signed_rank(ab, Alternative::Greater);
        auto l = stats::wilcoxon_signed_rank(ba, Alternative::Less);
        CHECK(g.p_value == doctest::Approx(l.p_value).epsilon(1e-12));
        auto t1 = stats::wilcoxon_signed_rank(ab, Alternative::TwoSided);
        auto t2 = stats::wilcoxon_signed_rank(ba, Alternative::TwoSided);
        CHECK(t1.p_value == doctest::Approx(t2.p_value).epsilon(1e-12));
    }
}

TEST_CASE("zero differences are dropped before ranking") {
    auto result = stats::wilcoxon_signed_rank(
        scores_from_diffs({0.0, 1.0, 0.0, -2.0, 3.0}), Alternative::Greater);
    CHECK(result.n == 3);
    auto oracle = enumerate_tails({1.0, -2.0, 3.0});
    CHECK(result.p_value == doctest::Approx(oracle.p_greater).epsilon(1e-12));
}

TEST_CASE("degenerate inputs are errors, not numbers") {
    CHECK_THROWS_AS(stats::wilcoxon_signed_rank({}, Alternative::Greater), EmptyInput);
    CHECK_THROWS_AS(stats::wilcoxon_signed_rank(scores_from_diffs({0.0, 0.0}),
                                                Alternative::Greater),
                    AllZeroDifferences);
}

TEST_CASE("the normal approximation tracks the exact distribution") {
    // n = 26 crosses the exact/normal threshold; the oracle still gets the
    // exact tail by dynamic programming over doubled-rank sums.
    std::vector<double> diffs;
    std::mt19937 gen(99);
    for (int i = 0; i < 26; ++i) {
        double d = 1.0 + static_cast<double>(i % 9);
        diffs.push_back(gen() % 3 ? d : -d);
    }
    // DP over achievable doubled W+ sums.
    std::vector<double> abs_d;
    std::vector<bool> positive;
    for (double d : diffs) {
        abs_d.push_back(std::abs(d));
        positive.push_back(d > 0.0);
    }
    std::vector<std::size_t> order(abs_d.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
    std::vector<long long> rank2(abs_d.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && abs_d[order[j + 1]] == abs_d[order[i]]) ++j;
        for (std::size_t t = i; t <= j; ++t) rank2[order[t]] = static_cast<long long>(i + j) + 2;
        i = j + 1;
    }
    long long observed2 = 0, max2 = 0;
    for (std::size_t t = 0; t < rank2.size(); ++t) {
        if (positive[t]) observed2 += rank2[t];
        max2 += rank2[t];
    }
    std::vector<double> count(static_cast<std::size_t>(max2) + 1, 0.0);
    count[0] = 1.0;
    for (long long r : rank2) {
        for (long long s = max2; s >= r; --s) {
            count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];
        }
    }
    double tail = 0.0, total = std::ldexp(1.0, static_cast<int>(rank2.size()));
    for (long long s = observed2; s <= max2; ++s) tail += count[static_cast<std::size_t>(s)];
    double exact_p = tail / total;

    auto result = stats::wilcoxon_signed_rank(scores_from_diffs(diffs), Alternative::Greater);
    CHECK(result.method == "normal");
    CHECK(result.p_value == doctest::Approx(exact_p).epsilon(0.15));
    CHECK(std::abs(result.p_value - exact_p) < 0.01);
}

TEST_CASE("the JSON report names the test, tail and method") {
    auto result = stats::wilcoxon_signed_rank(
        scores_from_diffs({1.0, 2.0, 3.0, 4.0, 5.0}), Alternative::Greater);
    auto json = stats::stats_report_json(result, Alternative::Greater);
    CHECK(json.find("\"alternative\":\"greater\"") != std::string::npos);
    CHECK(json.find("\"method\":\"exact\"") != std::string::npos);
    CHECK(json.find("\"p\":0.03125") != std::string::npos);
    CHECK(json.find("\"w_plus\":15.0") != std::string::npos);
    CHECK(json.find("\"n\":5") != std::string::npos);
}
