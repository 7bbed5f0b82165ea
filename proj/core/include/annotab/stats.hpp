#pragma once

#include <string>
#include <vector>

namespace annotab::stats {

struct PairedScores {
    struct Pair {
        std::string problem_id;
        double metric_a = 0.0;
        double metric_b = 0.0;
    };
    std::vector<Pair> pairs;
};

enum class Alternative { TwoSided, Greater, Less };

struct WilcoxonResult {
    double w_plus = 0.0;   // sum of ranks of positive differences
    double p_value = 1.0;
    std::size_t n = 0;     // pairs after dropping zero differences
    std::string method;    // "exact" or "normal"
};

// Wilcoxon signed-rank test on differences a - b. Zero differences are
// dropped, |d| midranked with ties, W+ = rank sum of positive d. Exact p
// by DP over all 2^n sign assignments for n <= 25; otherwise normal
// approximation with tie-corrected variance and 0.5 continuity
// correction. "greater" tests median(d) > 0.
//
// Two-sided convention: p = min(1, 2 * min(p_greater, p_less)); the
// point mass at W+ is counted in both one-sided tails, so the doubled
// value can exceed the exact two-sided tail mass and is capped at 1.
WilcoxonResult wilcoxon_signed_rank(const PairedScores& pairs, Alternative alternative);

std::string stats_report_json(const WilcoxonResult& result, Alternative alternative);

}  // namespace annotab::stats
