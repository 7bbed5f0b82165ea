#include "annotab/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "annotab/errors.hpp"

namespace annotab::report {

double percent(std::uint64_t numerator, std::uint64_t denominator) {
    if (denominator == 0) throw ZeroDenominator("percent of zero denominator");
    double raw = 100.0 * static_cast<double>(numerator) / static_cast<double>(denominator);
    return std::round(raw * 100.0) / 100.0;  // std::round is half-away-from-zero
}

FunnelReport funnel_report(std::vector<FunnelStage> stages) {
    std::map<std::string, std::uint64_t> count_by_name;
    for (const auto& s : stages) count_by_name[s.stage_name] = s.count;
    for (auto& s : stages) {
        if (!s.parent_stage) {
            s.retention_pct = 100.0;
            continue;
        }
        auto it = count_by_name.find(*s.parent_stage);
        if (it == count_by_name.end()) {
            throw BrokenChain("stage " + s.stage_name + " references missing parent " +
                              *s.parent_stage);
        }
        if (s.count > it->second) {
            throw BrokenChain("stage " + s.stage_name + " count exceeds parent " +
                              *s.parent_stage);
        }
        s.retention_pct = it->second == 0 ? 0.0 : percent(s.count, it->second);
    }

    FunnelReport rep;
    char line[256];
    std::snprintf(line, sizeof(line), "%-28s %12s %10s\n", "Stage", "Count", "Retained");
    rep.text += line;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& s : stages) {
        std::snprintf(line, sizeof(line), "%-28s %12llu %9.2f%%\n", s.stage_name.c_str(),
                      static_cast<unsigned long long>(s.count), s.retention_pct);
        rep.text += line;
        nlohmann::ordered_json o;
        o["stage_name"] = s.stage_name;
        o["count"] = s.count;
        if (s.parent_stage) o["parent_stage"] = *s.parent_stage;
        o["retention_pct"] = s.retention_pct;
        arr.push_back(o);
    }
    rep.json = arr.dump(2);
    rep.stages = std::move(stages);
    return rep;
}

}  // namespace annotab::report
