#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace annotab::report {

struct FunnelStage {
    std::string stage_name;
    std::uint64_t count = 0;
    std::optional<std::string> parent_stage;
    double retention_pct = 100.0;  // percent(count, parent count)
};

// 100*n/d rounded half-away-from-zero to 2 decimals.
// Throws ZeroDenominator.
double percent(std::uint64_t numerator, std::uint64_t denominator);

struct FunnelReport {
    std::vector<FunnelStage> stages;
    std::string text;  // aligned listing
    std::string json;  // same data as a JSON array
};

// Orders stages along their parent chain and computes retention.
// Throws BrokenChain when a parent is missing or a child count exceeds
// its parent's.
FunnelReport funnel_report(std::vector<FunnelStage> stages);

}  // namespace annotab::report
