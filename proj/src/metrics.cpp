#include "civic/metrics.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "civic/error.hpp"

namespace civic::sim {

using nlohmann::json;

BaselineEstimate baseline_model(const BaselineModel& m)
{
    BaselineEstimate e;
    for (const auto& s : m.steps) {
        e.interactions += s.visits;
        e.hours += s.hours * static_cast<double>(s.visits);
    }
    e.interactions += m.renewal_loops;
    e.hours += m.renewal_hours * static_cast<double>(m.renewal_loops);
    return e;
}

BaselineModel housing_baseline()
{
    return {"housing application, manual",
            {{"identity cards (husband and wife)", 1, 3.0},
             {"property ownership certificate", 1, 2.0},
             {"Benefit report", 1, 2.5},
             {"one-month income letter", 1, 1.0},
             {"birth certificates", 1, 1.5},
             {"passports", 1, 1.0}},
            0,
            3.0};
}

BaselineModel parse_baseline(const std::string& text)
{
    try {
        const YAML::Node root = YAML::Load(text);
        BaselineModel m;
        m.name = root["name"] ? root["name"].as<std::string>() : "baseline";
        for (const auto& s : root["steps"]) {
            BaselineStep step;
            step.name = s["name"].as<std::string>();
            step.visits = s["visits"] ? s["visits"].as<std::uint64_t>() : 1;
            step.hours = s["hours"] ? s["hours"].as<double>() : 0.0;
            m.steps.push_back(std::move(step));
        }
        if (root["renewal_loops"])
            m.renewal_loops = root["renewal_loops"].as<std::uint64_t>();
        if (root["renewal_hours"])
            m.renewal_hours = root["renewal_hours"].as<double>();
        return m;
    } catch (const YAML::Exception& e) {
        throw Error(Errc::InvalidConfig, std::string("baseline: ") + e.what());
    }
}

BaselineModel load_baseline(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::Io, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_baseline(ss.str());
}

json MetricsReport::to_json() const
{
    return {{"scenario", scenario},
            {"seed", seed},
            {"completed", completed},
            {"citizen_interactions", citizen_interactions},
            {"end_to_end_time_ms", end_to_end_time_ms},
            {"transactions_committed", transactions_committed},
            {"blocks_committed", blocks_committed},
            {"baseline",
             {{"name", baseline_name},
              {"interactions", baseline_interactions},
              {"hours", baseline_hours},
              {"note", "baseline times are assumed model parameters, not measurements"}}},
            {"cost_per_interaction", cost_per_interaction}};
}

MetricsReport MetricsReport::from_json(const json& j)
{
    MetricsReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.completed = j.at("completed").get<bool>();
    r.citizen_interactions = j.at("citizen_interactions").get<std::uint64_t>();
    r.end_to_end_time_ms = j.at("end_to_end_time_ms").get<std::uint64_t>();
    r.transactions_committed = j.at("transactions_committed").get<std::uint64_t>();
    r.blocks_committed = j.at("blocks_committed").get<std::uint64_t>();
    r.baseline_name = j.at("baseline").at("name").get<std::string>();
    r.baseline_interactions = j.at("baseline").at("interactions").get<std::uint64_t>();
    r.baseline_hours = j.at("baseline").at("hours").get<double>();
    r.cost_per_interaction = j.value("cost_per_interaction", 0.0);
    return r;
}

std::string MetricsReport::table() const
{
    char buf[512];
    std::ostringstream out;
    out << "scenario " << scenario << " (seed " << seed << ")" << (completed ? "" : "  [did not complete]") << '\n';
    out << "baseline hours are ASSUMED model parameters, not measurements\n\n";
    std::snprintf(buf, sizeof buf, "%-28s %14s %14s\n", "", "platform", "manual");
    out << buf;
    std::snprintf(buf, sizeof buf, "%-28s %14llu %14llu\n", "citizen interactions",
                  static_cast<unsigned long long>(citizen_interactions),
                  static_cast<unsigned long long>(baseline_interactions));
    out << buf;
    std::snprintf(buf, sizeof buf, "%-28s %14.3f %14.1f\n", "end-to-end time (hours)",
                  static_cast<double>(end_to_end_time_ms) / 3.6e6, baseline_hours);
    out << buf;
    if (cost_per_interaction > 0) {
        std::snprintf(buf, sizeof buf, "%-28s %14.2f %14.2f\n", "cost (x interactions)",
                      cost_per_interaction * static_cast<double>(citizen_interactions),
                      cost_per_interaction * static_cast<double>(baseline_interactions));
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "%-28s %14llu\n", "transactions committed",
                  static_cast<unsigned long long>(transactions_committed));
    out << buf;
    std::snprintf(buf, sizeof buf, "%-28s %14llu\n", "blocks committed",
                  static_cast<unsigned long long>(blocks_committed));
    out << buf;
    return out.str();
}

} // namespace civic::sim
