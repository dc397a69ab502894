#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace civic::sim {

// The manual process a scenario replaces: one citizen visit per step, plus
// one re-visit per document that has to be updated first.
struct BaselineStep {
    std::string name;
    std::uint64_t visits = 1;
    double hours = 0; // assumed, not measured
};

struct BaselineModel {
    std::string name;
    std::vector<BaselineStep> steps;
    std::uint64_t renewal_loops = 0;
    double renewal_hours = 0;
};

struct BaselineEstimate {
    std::uint64_t interactions = 0;
    double hours = 0;
};

BaselineEstimate baseline_model(const BaselineModel& model);
BaselineModel housing_baseline();
BaselineModel load_baseline(const std::filesystem::path& path);
BaselineModel parse_baseline(const std::string& yaml);

struct MetricsReport {
    std::string scenario;
    std::uint64_t seed = 0;
    bool completed = false;
    std::uint64_t citizen_interactions = 0;
    std::uint64_t end_to_end_time_ms = 0;
    std::uint64_t transactions_committed = 0;
    std::uint64_t blocks_committed = 0;
    std::string baseline_name;
    std::uint64_t baseline_interactions = 0;
    double baseline_hours = 0;
    double cost_per_interaction = 0; // user-supplied multiplier, 0 when unset

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
    std::string table() const;
};

} // namespace civic::sim
