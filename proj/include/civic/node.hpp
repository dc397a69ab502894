#pragma once

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "civic/block_store.hpp"
#include "civic/consensus.hpp"
#include "civic/consortium.hpp"
#include "civic/identity.hpp"
#include "civic/registry.hpp"
#include "civic/state.hpp"
#include "civic/wire.hpp"

namespace civic {

struct NodeConfig {
    std::string node_id;
    std::string organization;
    std::string listen = "127.0.0.1:0";
    std::map<std::string, std::string> peers; // node id -> host:port
    std::filesystem::path data_dir;           // empty: in memory
    std::filesystem::path consortium_file;
    std::filesystem::path key_file;           // hex Ed25519 seed
    bool sync_writes = true;
    std::optional<std::uint64_t> deterministic_seed;
};

NodeConfig load_node_config(const std::filesystem::path& path);
void save_node_config(const NodeConfig& config, const std::filesystem::path& path);

KeyPair load_key_file(const std::filesystem::path& path);
void save_key_file(const KeyPair& key, const std::filesystem::path& path);

// The environment a node runs in: a clock, a message transport, timers and a
// trace sink. The simulator and the threaded server each provide one.
class Runtime {
public:
    virtual ~Runtime() = default;
    virtual std::uint64_t now_ms() = 0;
    virtual void send(const std::string& peer, Bytes frame) = 0;
    virtual void schedule(std::uint64_t delay_ms, std::function<void()> fn) = 0;
    virtual void trace(nlohmann::json event) = 0;
};

// Everything a node keeps across a crash.
class NodeDisk {
public:
    static std::shared_ptr<NodeDisk> in_memory();
    static std::shared_ptr<NodeDisk> open(const std::filesystem::path& dir, bool sync_writes);

    BlockStore chain;
    registry::OffChainStore store;
    registry::AuditLog audit;

    void save_consensus(const Bytes& state);
    std::optional<Bytes> load_consensus() const;
    const std::optional<std::filesystem::path>& directory() const { return dir_; }

    NodeDisk(BlockStore chain, std::optional<std::filesystem::path> dir);

private:
    std::optional<std::filesystem::path> dir_;
    std::optional<Bytes> consensus_;
};

struct SubmitResult {
    bool accepted = false;
    Digest tx_id{};
    Errc error = Errc::Malformed;  // BadSignature | AdmissionFailed | DuplicateTx
    Errc reason = Errc::Malformed; // the underlying admission failure
    std::string detail;
};

// Immutable view of the committed prefix, safe to read from any thread.
struct NodeSnapshot {
    std::shared_ptr<const WorldState> state;
    std::vector<std::shared_ptr<const Block>> blocks;
    std::size_t mempool = 0;
    std::uint64_t round = 0;

    std::uint64_t height() const { return blocks.size() - 1; }
    const Block& tip() const { return *blocks.back(); }
};

class Node : private consensus::EngineHost {
public:
    Node(NodeConfig config, std::shared_ptr<const Consortium> consortium, std::optional<KeyPair> key, Runtime& runtime,
         std::shared_ptr<NodeDisk> disk);
    ~Node() override;

    // Restores the chain from disk, validates it and joins consensus. Throws
    // Error(CorruptStore) when the persisted chain does not validate.
    void start();

    SubmitResult submit(const Transaction& tx);
    void receive(ByteView frame);

    std::shared_ptr<const NodeSnapshot> snapshot() const;

    const NodeConfig& config() const { return config_; }
    const Consortium& consortium() const { return *consortium_; }
    const std::string& id() const { return config_.node_id; }
    const Organization* organization() const { return consortium_->organization(config_.organization); }
    const KeyPair* key() const { return key_ ? &*key_ : nullptr; }
    bool is_validator() const { return engine_ && engine_->is_validator(); }
    const WorldState& state() const { return *state_; }
    const BlockStore& chain() const { return disk_->chain; }
    NodeDisk& disk() { return *disk_; }
    identity::NonceRegistry& auth_nonces() { return auth_nonces_; }
    std::uint64_t now() { return rt_.now_ms(); }
    std::size_t mempool_size() const { return mempool_.size(); }
    bool in_mempool(const Digest& id) const { return mempool_.count(id) != 0; }

    // Next nonce for transactions signed with this node's organization key.
    std::uint64_t next_nonce();

    // Signs, submits and gossips an organization transaction built by `make`.
    SubmitResult submit_own(const std::function<Transaction(std::uint64_t nonce)>& make);
    // submit_own() from outside the event handlers (operator actions).
    SubmitResult act(const std::function<Transaction(std::uint64_t nonce)>& make);

private:
    // EngineHost
    const Block& tip() const override;
    void check_block(const Block& block) override;
    std::optional<Block> build_block(std::uint64_t height, std::uint64_t round) override;
    std::size_t pending() const override { return mempool_.size(); }
    void broadcast(const consensus::ConsensusMessage& msg) override;
    void persist(const consensus::ConsensusState& state) override;
    void commit(const Block& block) override;
    void round_timeout(std::uint64_t height, std::uint64_t round) override;

    void send_to(const std::string& peer, const wire::Message& msg);
    void broadcast_message(const wire::Message& msg);
    void on_message(const std::string& from, const wire::Message& msg);
    void on_committed_block(const Block& block);
    void on_sync_request(const std::string& from, std::uint64_t from_height);
    void on_doc_fetch(const std::string& from, const wire::DocFetchRequest& req);
    void on_doc_response(const wire::DocFetchResponse& resp);

    SubmitResult admit(const Transaction& tx, bool gossip);
    void apply_commit(const Block& block, bool announce);
    void prune_mempool();
    void publish();
    void trace(const std::string& type, nlohmann::json fields);
    void after_event();

    void reschedule();
    void wake(std::uint64_t target);
    void periodic();

    // Provider automation: authorize collection after consent, fetch and
    // verify every granted payload, then record the collection.
    void reconcile();
    void start_collection(const ServiceRequest& req);
    void send_fetches(const Digest& request_id);
    void fail_collection(const Digest& request_id, const Digest& doc_id, std::string_view reason);

    struct Collection {
        std::map<Digest, bool> done; // doc_id -> verified
        std::map<std::uint64_t, Digest> refs;
        std::uint64_t last_sent = 0;
        int attempts = 0;
        bool failed = false;
        bool recorded = false;
    };

    NodeConfig config_;
    std::shared_ptr<const Consortium> consortium_;
    std::optional<KeyPair> key_;
    Runtime& rt_;
    std::shared_ptr<NodeDisk> disk_;
    std::shared_ptr<const WorldState> state_;
    std::unique_ptr<consensus::Engine> engine_;
    identity::NonceRegistry auth_nonces_;

    std::deque<Digest> mempool_order_;
    std::map<Digest, Transaction> mempool_;

    std::uint64_t last_nonce_ = 0;
    std::optional<std::uint64_t> wake_at_;
    std::map<Digest, Digest> automation_tx_; // request -> in-flight tx
    std::map<Digest, Collection> collections_;
    std::uint64_t next_ref_ = 1;

    mutable std::mutex snap_mu_;
    std::shared_ptr<const NodeSnapshot> snapshot_;
    bool started_ = false;
    bool reconcile_due_ = false;
};

} // namespace civic
