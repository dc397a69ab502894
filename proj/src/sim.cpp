#include "civic/sim.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

namespace civic::sim {

using nlohmann::json;

std::string_view fault_name(FaultKind k)
{
    switch (k) {
    case FaultKind::CrashNode: return "CrashNode";
    case FaultKind::RestartNode: return "RestartNode";
    case FaultKind::Partition: return "Partition";
    case FaultKind::Heal: return "Heal";
    case FaultKind::DelayRange: return "DelayRange";
    case FaultKind::CorruptStoreByte: return "CorruptStoreByte";
    }
    return "?";
}

FaultKind parse_fault(std::string_view s)
{
    for (auto k : {FaultKind::CrashNode, FaultKind::RestartNode, FaultKind::Partition, FaultKind::Heal,
                   FaultKind::DelayRange, FaultKind::CorruptStoreByte})
        if (fault_name(k) == s)
            return k;
    throw Error(Errc::InvalidConfig, "unknown fault " + std::string(s));
}

struct Simulator::Member {
    NodeSetup setup;
    std::shared_ptr<NodeDisk> disk;
    std::unique_ptr<NodeRuntime> runtime;
    std::unique_ptr<Node> node;
    std::uint64_t epoch = 0;
    std::vector<Digest> before_crash;
};

class Simulator::NodeRuntime final : public Runtime {
public:
    NodeRuntime(Simulator& sim, std::string id, std::uint64_t epoch) : sim_(sim), id_(std::move(id)), epoch_(epoch) {}

    std::uint64_t now_ms() override { return sim_.now_; }

    void send(const std::string& peer, Bytes frame) override { sim_.deliver(id_, peer, std::move(frame)); }

    void schedule(std::uint64_t delay_ms, std::function<void()> fn) override
    {
        sim_.at(sim_.now_ + delay_ms, [this_sim = &sim_, id = id_, epoch = epoch_, fn = std::move(fn)] {
            auto it = this_sim->members_.find(id);
            if (it != this_sim->members_.end() && it->second->node && it->second->epoch == epoch)
                fn();
        });
    }

    void trace(json event) override { sim_.trace(std::move(event)); }

private:
    Simulator& sim_;
    std::string id_;
    std::uint64_t epoch_;
};

Simulator::Simulator(std::shared_ptr<const Consortium> consortium, std::vector<NodeSetup> nodes, SimOptions options)
    : consortium_(std::move(consortium)), options_(std::move(options)), rng_(options_.seed)
{
    start_ = now_ = consortium_->genesis_timestamp;
    for (auto& setup : nodes) {
        auto m = std::make_unique<Member>(Member{std::move(setup), nullptr, nullptr, nullptr, 0, {}});
        const std::string id = m->setup.config.node_id;
        members_.emplace(id, std::move(m));
    }
    for (auto& [id, m] : members_)
        m->disk = open_disk(id);
}

Simulator::~Simulator()
{
    for (auto& [id, m] : members_)
        m->node.reset();
}

std::shared_ptr<NodeDisk> Simulator::open_disk(const std::string& id)
{
    if (options_.data_root)
        return NodeDisk::open(*options_.data_root / id, false);
    return NodeDisk::in_memory();
}

void Simulator::start()
{
    for (auto& [id, m] : members_) {
        m->runtime = std::make_unique<NodeRuntime>(*this, id, m->epoch);
        m->node = std::make_unique<Node>(m->setup.config, consortium_, m->setup.key, *m->runtime, m->disk);
        m->node->start();
    }
}

void Simulator::at(std::uint64_t t, std::function<void()> fn)
{
    queue_.push_back({std::max(t, now_), seq_++, std::move(fn)});
    std::push_heap(queue_.begin(), queue_.end(), Later{});
}

bool Simulator::step()
{
    if (queue_.empty())
        return false;
    std::pop_heap(queue_.begin(), queue_.end(), Later{});
    Event e = std::move(queue_.back());
    queue_.pop_back();
    now_ = e.t;
    e.fn();
    return true;
}

void Simulator::run_until(std::uint64_t t)
{
    while (!queue_.empty() && queue_.front().t <= t)
        step();
    now_ = std::max(now_, t);
}

bool Simulator::run_while_not(const std::function<bool()>& pred, std::uint64_t deadline)
{
    while (!pred()) {
        if (queue_.empty() || queue_.front().t > deadline) {
            now_ = std::max(now_, deadline);
            return pred();
        }
        step();
    }
    return true;
}

Node* Simulator::node(const std::string& id)
{
    auto it = members_.find(id);
    return it == members_.end() ? nullptr : it->second->node.get();
}

bool Simulator::up(const std::string& id) const
{
    auto it = members_.find(id);
    return it != members_.end() && it->second->node != nullptr;
}

std::vector<std::string> Simulator::node_ids() const
{
    std::vector<std::string> out;
    for (const auto& [id, m] : members_)
        out.push_back(id);
    return out;
}

const KeyPair& Simulator::key(const std::string& node_id) const
{
    return members_.at(node_id)->setup.key;
}

bool Simulator::blocked(const std::string& a, const std::string& b) const
{
    for (const auto& [x, y] : partitions_)
        if ((x.count(a) && y.count(b)) || (x.count(b) && y.count(a)))
            return true;
    return false;
}

void Simulator::deliver(const std::string& from, const std::string& to, Bytes frame)
{
    if (!members_.count(to) || blocked(from, to))
        return;
    std::uniform_int_distribution<std::uint64_t> delay(options_.min_delay_ms, options_.max_delay_ms);
    auto& clock = link_clock_[{from, to}];
    const std::uint64_t t = std::max(now_ + delay(rng_), clock);
    clock = t;
    at(t, [this, from, to, frame = std::move(frame)] {
        if (blocked(from, to))
            return;
        if (Node* n = node(to))
            n->receive(frame);
    });
}

void Simulator::crash(const std::string& id, bool torn_tail)
{
    auto& m = *members_.at(id);
    if (!m.node)
        return;
    const std::uint64_t height = m.node->chain().height();
    m.before_crash.clear();
    for (const auto& b : m.node->chain().blocks())
        m.before_crash.push_back(b->block_hash);
    m.node.reset();
    m.runtime.reset();
    m.epoch++;
    if (options_.data_root) {
        m.disk.reset();
        if (torn_tail) {
            std::ofstream data(BlockStore::data_file(*options_.data_root / id / "chain"),
                               std::ios::binary | std::ios::app);
            const char partial[] = {0, 0, 1, static_cast<char>(0xf4), 0x12, 0x34, 0x56};
            data.write(partial, sizeof partial);
        }
    }
    trace({{"type", "crash"}, {"node", id}, {"t", now_}, {"height", height}, {"torn_tail", torn_tail}});
}

bool Simulator::restart(const std::string& id)
{
    auto& m = *members_.at(id);
    if (m.node)
        return true;
    try {
        if (!m.disk)
            m.disk = open_disk(id);
        m.runtime = std::make_unique<NodeRuntime>(*this, id, m.epoch);
        m.node = std::make_unique<Node>(m.setup.config, consortium_, m.setup.key, *m.runtime, m.disk);
        m.node->start();
    } catch (const Error& e) {
        m.node.reset();
        m.runtime.reset();
        m.disk.reset();
        trace({{"type", "start_failed"}, {"node", id}, {"t", now_}, {"error", std::string(errc_name(e.code()))},
               {"detail", e.detail()}});
        return false;
    }
    const auto& blocks = m.node->chain().blocks();
    std::size_t same = 0;
    while (same < blocks.size() && same < m.before_crash.size() && blocks[same]->block_hash == m.before_crash[same])
        same++;
    const std::uint64_t lost = m.before_crash.size() - same;
    trace({{"type", "restart"},
           {"node", id},
           {"t", now_},
           {"height", m.node->chain().height()},
           {"lost", lost},
           {"prefix_ok", same == std::min(blocks.size(), m.before_crash.size())}});
    return true;
}

void Simulator::partition(const std::vector<std::string>& a, const std::vector<std::string>& b)
{
    partitions_.emplace_back(std::set<std::string>(a.begin(), a.end()), std::set<std::string>(b.begin(), b.end()));
    trace({{"type", "partition"}, {"t", now_}, {"a", a}, {"b", b}});
}

void Simulator::heal()
{
    partitions_.clear();
    trace({{"type", "heal"}, {"t", now_}});
}

void Simulator::set_delay(std::uint64_t min_ms, std::uint64_t max_ms)
{
    options_.min_delay_ms = min_ms;
    options_.max_delay_ms = std::max(min_ms, max_ms);
    trace({{"type", "delay_range"}, {"t", now_}, {"min", min_ms}, {"max", options_.max_delay_ms}});
}

bool Simulator::corrupt_payload(const std::string& id, const Digest& content_digest, std::size_t index)
{
    auto& m = *members_.at(id);
    if (!m.disk)
        return false;
    const bool ok = m.disk->store.corrupt(content_digest, index);
    trace({{"type", "corrupt_store"}, {"node", id}, {"t", now_}, {"digest", to_hex(content_digest)}, {"ok", ok}});
    return ok;
}

void Simulator::trace(json event)
{
    trace_.push_back(event.dump());
}

std::vector<std::pair<std::uint64_t, Digest>> Simulator::chain_of(const std::string& id) const
{
    std::vector<std::pair<std::uint64_t, Digest>> out;
    const auto& m = *members_.at(id);
    if (m.node) {
        for (const auto& b : m.node->chain().blocks())
            out.emplace_back(b->header.height, b->block_hash);
    } else if (m.disk) {
        for (const auto& b : m.disk->chain.blocks())
            out.emplace_back(b->header.height, b->block_hash);
    }
    return out;
}

} // namespace civic::sim
