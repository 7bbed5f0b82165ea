#include "annotab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

#include <json.hpp>

#include "annotab/errors.hpp"

namespace annotab::stats {

namespace {

// Midranks of |d| are half-integers; doubling makes them exact integers,
// so the exact-tail DP can index rank sums directly.
std::vector<std::int64_t> doubled_midranks(const std::vector<double>& abs_d) {
    const std::size_t n = abs_d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
    std::vector<std::int64_t> rank2(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_d[order[j + 1]] == abs_d[order[i]]) ++j;
        // midrank = (i + j) / 2 + 1 in 1-based ranks; doubled: i + j + 2
        std::int64_t twice = static_cast<std::int64_t>(i + j) + 2;
        for (std::size_t t = i; t <= j; ++t) rank2[order[t]] = twice;
        i = j + 1;
    }
    return rank2;
}

// P(W2 >= w2_obs) and P(W2 <= w2_obs) under the null, where W2 is the
// doubled positive-rank sum over all 2^n equiprobable sign assignments.
std::pair<double, double> exact_tails(const std::vector<std::int64_t>& rank2,
                                      std::int64_t w2_obs) {
    std::int64_t total = std::accumulate(rank2.begin(), rank2.end(), std::int64_t{0});
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    std::int64_t reach = 0;
    for (std::int64_t r : rank2) {
        for (std::int64_t s = reach; s >= 0; --s) {
            if (count[static_cast<std::size_t>(s)] > 0.0) {
                count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
            }
        }
        reach += r;
    }
    double denom = std::ldexp(1.0, static_cast<int>(rank2.size()));
    double ge = 0.0, le = 0.0;
    for (std::int64_t s = 0; s <= total; ++s) {
        double c = count[static_cast<std::size_t>(s)];
        if (s >= w2_obs) ge += c;
        if (s <= w2_obs) le += c;
    }
    return {ge / denom, le / denom};
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const PairedScores& pairs, Alternative alternative) {
    if (pairs.pairs.empty()) throw EmptyInput("no paired scores");
    std::vector<double> d;
    for (const auto& p : pairs.pairs) {
        double diff = p.metric_a - p.metric_b;
        if (diff != 0.0) d.push_back(diff);
    }
    if (d.empty()) throw AllZeroDifferences("all paired differences are zero");

    std::vector<double> abs_d(d.size());
    std::transform(d.begin(), d.end(), abs_d.begin(), [](double v) { return std::abs(v); });
    std::vector<std::int64_t> rank2 = doubled_midranks(abs_d);

    WilcoxonResult result;
    result.n = d.size();
    std::int64_t w2 = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] > 0.0) w2 += rank2[i];
    }
    result.w_plus = static_cast<double>(w2) / 2.0;

    double p_greater = 0.0, p_less = 0.0;
    if (d.size() <= 25) {
        result.method = "exact";
        auto [ge, le] = exact_tails(rank2, w2);
        p_greater = ge;
        p_less = le;
    } else {
        result.method = "normal";
        const double n = static_cast<double>(d.size());
        double mean = n * (n + 1.0) / 4.0;
        double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
        // Tie correction: subtract sum(t^3 - t)/48 per tied group.
        std::map<std::int64_t, std::size_t> groups;
        for (std::int64_t r : rank2) ++groups[r];
        for (const auto& [r, t] : groups) {
            if (t > 1) {
                double td = static_cast<double>(t);
                var -= (td * td * td - td) / 48.0;
            }
        }
        double sd = std::sqrt(var);
        double w = result.w_plus;
        p_greater = normal_sf((w - mean - 0.5) / sd);
        p_less = normal_sf((mean - w - 0.5) / sd);
    }

    switch (alternative) {
        case Alternative::Greater: result.p_value = p_greater; break;
        case Alternative::Less: result.p_value = p_less; break;
        case Alternative::TwoSided:
            result.p_value = std::min(1.0, 2.0 * std::min(p_greater, p_less));
            break;
    }
    return result;
}

std::string stats_report_json(const WilcoxonResult& result, Alternative alternative) {
    nlohmann::ordered_json doc;
    switch (alternative) {
        case Alternative::TwoSided: doc["alternative"] = "two-sided"; break;
        case Alternative::Greater: doc["alternative"] = "greater"; break;
        case Alternative::Less: doc["alternative"] = "less"; break;
    }
    doc["w_plus"] = result.w_plus;
    doc["n"] = result.n;
    doc["p"] = result.p_value;
    doc["method"] = result.method;
    return doc.dump();
}

}  // namespace annotab::stats
