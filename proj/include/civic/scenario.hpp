#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "civic/metrics.hpp"
#include "civic/sim.hpp"

// Scripted end-to-end runs over the simulator, and trace replay checks.
namespace civic::sim {

struct OrgSpec {
    std::string id;
    std::string name;
    std::vector<std::string> doc_types;
    bool provider = false;
    bool validator = false;
};

enum class ActionKind { IssueEKey, RevokeEKey, Issue, RegisterService, Initiate, Consent, Complete, Reject, Outcome, Wait };
std::string_view action_name(ActionKind k);
ActionKind parse_action(std::string_view s);

// One scripted step. An action becomes due once the previous one is done,
// `await` (if any) holds for `request`, and `delay_ms` has passed; it is done
// once its transaction commits.
struct Action {
    ActionKind kind = ActionKind::Wait;
    std::string label;
    std::string actor; // organization id, or citizen id for citizen actions
    std::uint64_t delay_ms = 0;

    std::string subject;
    std::string doc_type;
    std::string payload;
    std::uint64_t age_ms = 0;               // backdates issued_at
    std::optional<std::uint64_t> valid_ms;  // none: long-term
    std::string supersedes;                 // label of an earlier Issue

    std::string service;
    std::vector<std::string> household;
    std::string request; // label of the Initiate action
    std::string reason;
    std::uint64_t validity_ms = 365 * kMsPerDay;

    std::vector<RequestState> await;
};

bool citizen_action(const Action& a);

struct Scenario {
    std::string name = "scenario";
    std::uint64_t seed = 42;
    std::uint64_t start_time = 1'767'225'600'000; // 2026-01-01T00:00:00Z
    std::string authority;
    std::vector<OrgSpec> organizations;
    std::vector<std::string> citizens;
    std::vector<std::string> gateways; // nodes citizens talk to, first live one wins
    std::vector<ServiceContract> contracts;
    std::vector<Action> actions;
    std::vector<Fault> faults;
    ChainParams params;
    std::uint64_t stuck_timeout_ms = 120'000;
    std::uint64_t settle_ms = 3'000;
    BaselineModel baseline;
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& yaml, const std::filesystem::path& base = {});
Scenario housing_scenario();
extern const char* const kHousingScenarioYaml;

// A varied housing-like run: documents late or missing, withdrawals,
// rejections, crash and partition faults, all drawn from `seed`.
Scenario random_scenario(std::uint64_t seed);

// Consortium and node set the scenario runs on; keys derive from ids.
std::shared_ptr<Consortium> build_consortium(const Scenario& s);
std::vector<NodeSetup> build_nodes(const Scenario& s);
KeyPair citizen_key(const std::string& citizen_id);
KeyPair org_key(const std::string& org_id);

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> data_root; // wiped before the run
    std::vector<Fault> extra_faults;
};

struct RunResult {
    bool completed = false;             // every action done
    std::optional<Error> error;         // ScenarioStuck
    std::vector<std::string> trace;     // JSON lines
    MetricsReport metrics;
    std::map<std::string, std::vector<std::pair<std::uint64_t, Digest>>> chains;
    std::map<std::string, Digest> requests;                 // Initiate label -> request id
    std::map<std::string, RequestState> request_states;     // final, at the first gateway up
    std::map<std::string, DocumentRecord> documents;        // Issue label -> record
    std::uint64_t end_time = 0;
};

RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

// Same run, but keeps the simulator alive for post-run probes.
struct LiveRun {
    std::unique_ptr<Simulator> sim;
    RunResult result;
};
LiveRun run_scenario_live(const Scenario& scenario, const RunOptions& options = {});

struct Violation {
    std::string kind; // safety | replication | ordering | default_deny | grant_minimality | durability
    std::string detail;
};

std::vector<Violation> check_invariants(const std::vector<std::string>& trace);

std::string trace_text(const std::vector<std::string>& trace);
std::vector<std::string> read_trace(const std::filesystem::path& path);

} // namespace civic::sim
