#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "civic/node.hpp"

// Deterministic discrete-event simulation of a consortium. Every node runs the
// production Node over a simulated clock and network; events are ordered by
// (time, sequence number) and all randomness comes from one seeded generator.
namespace civic::sim {

struct SimOptions {
    std::uint64_t seed = 42;
    std::uint64_t min_delay_ms = 10;
    std::uint64_t max_delay_ms = 50;
    // When set, each node keeps its chain, store and audit log under
    // data_root/<node id> and is reopened from disk on restart.
    std::optional<std::filesystem::path> data_root;
};

struct NodeSetup {
    NodeConfig config;
    KeyPair key;
};

enum class FaultKind { CrashNode, RestartNode, Partition, Heal, DelayRange, CorruptStoreByte };
std::string_view fault_name(FaultKind k);
FaultKind parse_fault(std::string_view s);

struct Fault {
    FaultKind kind = FaultKind::CrashNode;
    std::uint64_t at = 0;                 // ms after the simulation start
    std::string after;                    // or: once this scenario action is done
    std::vector<std::string> nodes;       // Crash/Restart targets, or partition side A
    std::vector<std::string> other;       // partition side B
    std::uint64_t min_delay_ms = 0;       // DelayRange
    std::uint64_t max_delay_ms = 0;
    std::string document;                 // CorruptStoreByte: scenario document label
    std::size_t byte = 0;
    bool torn_tail = false;               // CrashNode: leave a half-written block record
};

class Simulator {
public:
    Simulator(std::shared_ptr<const Consortium> consortium, std::vector<NodeSetup> nodes, SimOptions options);
    ~Simulator();

    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    void start();

    std::uint64_t now() const { return now_; }
    std::uint64_t start_time() const { return start_; }

    // Processes the next event; false when the queue is empty.
    bool step();
    void run_until(std::uint64_t t);
    // Runs until pred() holds or time passes deadline; returns pred().
    bool run_while_not(const std::function<bool()>& pred, std::uint64_t deadline);

    void at(std::uint64_t t, std::function<void()> fn);

    // nullptr while the node is down.
    Node* node(const std::string& id);
    bool up(const std::string& id) const;
    std::vector<std::string> node_ids() const;
    const Consortium& consortium() const { return *consortium_; }
    const KeyPair& key(const std::string& node_id) const;

    void crash(const std::string& id, bool torn_tail = false);
    // Returns false when the node refused to start (CorruptStore).
    bool restart(const std::string& id);
    void partition(const std::vector<std::string>& a, const std::vector<std::string>& b);
    void heal();
    void set_delay(std::uint64_t min_ms, std::uint64_t max_ms);
    bool corrupt_payload(const std::string& node, const Digest& content_digest, std::size_t index);

    std::mt19937_64& rng() { return rng_; }

    void trace(nlohmann::json event);
    const std::vector<std::string>& trace_lines() const { return trace_; }

    // (height, block_hash) for every block a node holds, live or not.
    std::vector<std::pair<std::uint64_t, Digest>> chain_of(const std::string& id) const;

private:
    class NodeRuntime;
    struct Member;

    void deliver(const std::string& from, const std::string& to, Bytes frame);
    bool blocked(const std::string& a, const std::string& b) const;
    std::shared_ptr<NodeDisk> open_disk(const std::string& id);

    struct Event {
        std::uint64_t t;
        std::uint64_t seq;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const { return std::tie(a.t, a.seq) > std::tie(b.t, b.seq); }
    };

    std::shared_ptr<const Consortium> consortium_;
    SimOptions options_;
    std::mt19937_64 rng_;
    std::uint64_t start_ = 0;
    std::uint64_t now_ = 0;
    std::uint64_t seq_ = 0;
    std::vector<Event> queue_;
    std::map<std::string, std::unique_ptr<Member>> members_;
    std::map<std::pair<std::string, std::string>, std::uint64_t> link_clock_;
    std::vector<std::pair<std::set<std::string>, std::set<std::string>>> partitions_;
    std::vector<std::string> trace_;
};

} // namespace civic::sim
