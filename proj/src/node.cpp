#include "civic/node.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>

#include "civic/contracts.hpp"
#include "civic/json_views.hpp"

namespace civic {

using nlohmann::json;

namespace {

constexpr int kMaxFetchAttempts = 5;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value)
{
    std::filesystem::path p(value);
    return p.is_relative() ? base / p : p;
}

registry::OffChainStore make_store(const std::optional<std::filesystem::path>& dir)
{
    if (dir)
        return registry::OffChainStore(*dir / "store");
    return registry::OffChainStore();
}

registry::AuditLog make_audit(const std::optional<std::filesystem::path>& dir)
{
    if (dir)
        return registry::AuditLog(*dir / "audit.jsonl");
    return registry::AuditLog();
}

std::optional<std::uint64_t> node_seed(const NodeConfig& c)
{
    if (!c.deterministic_seed)
        return std::nullopt;
    const Digest d = sha256(as_view(c.node_id));
    std::uint64_t mix = 0;
    for (int i = 0; i < 8; ++i)
        mix = (mix << 8) | d[static_cast<std::size_t>(i)];
    return *c.deterministic_seed ^ mix;
}

wire::Message to_wire(const consensus::ConsensusMessage& m)
{
    return std::visit([](const auto& x) -> wire::Message { return x; }, m);
}

} // namespace

NodeConfig load_node_config(const std::filesystem::path& path)
{
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::Exception& e) {
        throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
    }
    const auto base = path.parent_path();
    try {
        NodeConfig c;
        c.node_id = root["node_id"].as<std::string>();
        c.organization = root["organization"] ? root["organization"].as<std::string>() : c.node_id;
        if (root["listen"])
            c.listen = root["listen"].as<std::string>();
        if (root["peers"])
            for (const auto& p : root["peers"])
                c.peers[p.first.as<std::string>()] = p.second.as<std::string>();
        if (root["data_dir"])
            c.data_dir = resolve(base, root["data_dir"].as<std::string>());
        c.consortium_file = resolve(base, root["consortium"].as<std::string>());
        if (root["key_file"])
            c.key_file = resolve(base, root["key_file"].as<std::string>());
        if (root["sync_writes"])
            c.sync_writes = root["sync_writes"].as<bool>();
        if (root["deterministic_seed"])
            c.deterministic_seed = root["deterministic_seed"].as<std::uint64_t>();
        return c;
    } catch (const YAML::Exception& e) {
        throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
    }
}

void save_node_config(const NodeConfig& c, const std::filesystem::path& path)
{
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "node_id" << YAML::Value << c.node_id;
    out << YAML::Key << "organization" << YAML::Value << c.organization;
    out << YAML::Key << "listen" << YAML::Value << c.listen;
    out << YAML::Key << "consortium" << YAML::Value << c.consortium_file.string();
    out << YAML::Key << "key_file" << YAML::Value << c.key_file.string();
    out << YAML::Key << "data_dir" << YAML::Value << c.data_dir.string();
    out << YAML::Key << "sync_writes" << YAML::Value << c.sync_writes;
    if (c.deterministic_seed)
        out << YAML::Key << "deterministic_seed" << YAML::Value << *c.deterministic_seed;
    out << YAML::Key << "peers" << YAML::Value << YAML::BeginMap;
    for (const auto& [id, addr] : c.peers)
        out << YAML::Key << id << YAML::Value << addr;
    out << YAML::EndMap << YAML::EndMap;
    std::ofstream f(path);
    if (!f)
        throw Error(Errc::Io, "cannot write " + path.string());
    f << out.c_str() << '\n';
}

KeyPair load_key_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    std::string line;
    if (!in || !std::getline(in, line))
        throw Error(Errc::Io, "cannot read key file " + path.string());
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
        line.pop_back();
    const Bytes b = from_hex(line);
    if (b.size() != 32)
        throw Error(Errc::Malformed, "key file must hold a 32-byte hex seed");
    Seed s{};
    std::copy(b.begin(), b.end(), s.begin());
    return KeyPair::from_seed(s);
}

void save_key_file(const KeyPair& key, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(Errc::Io, "cannot write " + path.string());
    out << to_hex(key.seed()) << '\n';
    out.close();
    std::filesystem::permissions(path, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write,
                                 std::filesystem::perm_options::replace);
}

NodeDisk::NodeDisk(BlockStore c, std::optional<std::filesystem::path> dir)
    : chain(std::move(c)), store(make_store(dir)), audit(make_audit(dir)), dir_(std::move(dir))
{
}

std::shared_ptr<NodeDisk> NodeDisk::in_memory()
{
    return std::make_shared<NodeDisk>(BlockStore::in_memory(), std::nullopt);
}

std::shared_ptr<NodeDisk> NodeDisk::open(const std::filesystem::path& dir, bool sync_writes)
{
    std::filesystem::create_directories(dir);
    return std::make_shared<NodeDisk>(BlockStore::open(dir / "chain", sync_writes), dir);
}

void NodeDisk::save_consensus(const Bytes& state)
{
    if (!dir_) {
        consensus_ = state;
        return;
    }
    const auto target = *dir_ / "consensus.state";
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(state.data()), static_cast<std::streamsize>(state.size()));
        if (!out)
            throw Error(Errc::Io, "cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

std::optional<Bytes> NodeDisk::load_consensus() const
{
    if (!dir_)
        return consensus_;
    std::ifstream in(*dir_ / "consensus.state", std::ios::binary);
    if (!in)
        return std::nullopt;
    return Bytes(std::istreambuf_iterator<char>(in), {});
}

Node::Node(NodeConfig config, std::shared_ptr<const Consortium> consortium, std::optional<KeyPair> key,
           Runtime& runtime, std::shared_ptr<NodeDisk> disk)
    : config_(std::move(config)),
      consortium_(std::move(consortium)),
      key_(std::move(key)),
      rt_(runtime),
      disk_(std::move(disk)),
      state_(std::make_shared<WorldState>(consortium_)),
      auth_nonces_(node_seed(config_))
{
}

Node::~Node() = default;

void Node::start()
{
    auto& chain = disk_->chain;
    if (chain.empty())
        chain.append(make_genesis(*consortium_));
    const ChainStatus status = validate_chain(chain, *consortium_);
    if (!status.valid) {
        std::string detail = "height " + std::to_string(status.height) + ": " + std::string(errc_name(status.reason));
        if (!status.detail.empty() && status.detail != "height " + std::to_string(status.height))
            detail += " " + status.detail;
        throw Error(Errc::CorruptStore, detail);
    }
    auto st = std::make_shared<WorldState>(consortium_);
    for (const auto& b : chain.blocks()) {
        try {
            st->apply_block(*b);
        } catch (const Error& e) {
            throw Error(Errc::CorruptStore, "height " + std::to_string(b->header.height) + ": " + e.what());
        }
    }
    state_ = std::move(st);
    if (key_)
        last_nonce_ = state_->last_nonce(key_->public_key());

    std::optional<consensus::ConsensusState> restored;
    if (auto raw = disk_->load_consensus()) {
        try {
            restored = consensus::ConsensusState::decode(*raw);
        } catch (const Error&) {
            restored.reset();
        }
    }
    consensus::EngineHost& host = *this;
    engine_ = std::make_unique<consensus::Engine>(host, consortium_->validators, consortium_->params, config_.node_id,
                                                  key_);
    engine_->start(now(), restored);
    started_ = true;
    trace("start", {{"height", state_->height()}, {"round", engine_->round()}});
    reconcile_due_ = true;
    rt_.schedule(consortium_->params.sync_interval_ms, [this] { periodic(); });
    after_event();
}

std::shared_ptr<const NodeSnapshot> Node::snapshot() const
{
    std::lock_guard lock(snap_mu_);
    return snapshot_;
}

void Node::publish()
{
    auto s = std::make_shared<NodeSnapshot>();
    s->state = state_;
    s->blocks = disk_->chain.blocks();
    s->mempool = mempool_.size();
    s->round = engine_ ? engine_->round() : 0;
    std::lock_guard lock(snap_mu_);
    snapshot_ = std::move(s);
}

void Node::trace(const std::string& type, json fields)
{
    fields["type"] = type;
    fields["node"] = config_.node_id;
    fields["t"] = now();
    rt_.trace(std::move(fields));
}

void Node::after_event()
{
    if (!started_)
        return;
    for (int i = 0; reconcile_due_ && i < 8; ++i) {
        reconcile_due_ = false;
        reconcile();
    }
    reschedule();
    publish();
}

std::uint64_t Node::next_nonce()
{
    const std::uint64_t committed = key_ ? state_->last_nonce(key_->public_key()) : 0;
    last_nonce_ = std::max(last_nonce_, committed) + 1;
    return last_nonce_;
}

SubmitResult Node::submit(const Transaction& tx)
{
    SubmitResult r = admit(tx, true);
    if (r.accepted)
        engine_->work_arrived(now());
    after_event();
    return r;
}

SubmitResult Node::submit_own(const std::function<Transaction(std::uint64_t)>& make)
{
    if (!key_)
        throw Error(Errc::NotValidator, "node has no signing key");
    const Transaction tx = make(next_nonce());
    SubmitResult r = admit(tx, true);
    if (r.accepted)
        engine_->work_arrived(now());
    return r;
}

SubmitResult Node::act(const std::function<Transaction(std::uint64_t)>& make)
{
    SubmitResult r = submit_own(make);
    after_event();
    return r;
}

SubmitResult Node::admit(const Transaction& tx, bool gossip)
{
    SubmitResult r;
    r.tx_id = tx.id();
    if (!tx.signature_valid()) {
        r.error = r.reason = Errc::BadSignature;
        r.detail = "signature does not verify";
        return r;
    }
    if (state_->committed(r.tx_id)) {
        r.error = r.reason = Errc::DuplicateTx;
        r.detail = "already committed";
        return r;
    }
    if (mempool_.count(r.tx_id)) {
        r.accepted = true;
        return r;
    }
    try {
        WorldState scratch = *state_;
        scratch.apply(tx, std::max(now(), state_->tip_timestamp() + 1), state_->height() + 1);
    } catch (const Error& e) {
        r.error = Errc::AdmissionFailed;
        r.reason = e.code();
        r.detail = e.what();
        return r;
    }
    while (mempool_.size() >= consortium_->params.mempool_capacity && !mempool_order_.empty()) {
        mempool_.erase(mempool_order_.front());
        mempool_order_.pop_front();
    }
    mempool_.emplace(r.tx_id, tx);
    mempool_order_.push_back(r.tx_id);
    r.accepted = true;
    if (gossip)
        broadcast_message(wire::TxGossip{tx});
    return r;
}

void Node::prune_mempool()
{
    for (auto it = mempool_.begin(); it != mempool_.end();) {
        const Transaction& tx = it->second;
        if (state_->committed(it->first) || tx.nonce <= state_->last_nonce(tx.author))
            it = mempool_.erase(it);
        else
            ++it;
    }
    std::deque<Digest> order;
    for (const auto& id : mempool_order_)
        if (mempool_.count(id))
            order.push_back(id);
    mempool_order_ = std::move(order);
}

void Node::receive(ByteView frame)
{
    if (!started_)
        return;
    wire::Envelope env;
    try {
        env = wire::decode(frame);
    } catch (const Error& e) {
        trace("bad_frame", {{"detail", e.what()}});
        return;
    }
    on_message(env.from, env.message);
    after_event();
}

void Node::on_message(const std::string& from, const wire::Message& msg)
{
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, wire::TxGossip>) {
                const bool known = mempool_.count(m.tx.id()) != 0;
                if (!known && admit(m.tx, true).accepted)
                    engine_->work_arrived(now());
            } else if constexpr (std::is_same_v<T, consensus::Proposal> || std::is_same_v<T, consensus::Vote> ||
                                 std::is_same_v<T, consensus::RoundChange>) {
                engine_->handle(m, now());
            } else if constexpr (std::is_same_v<T, wire::CommittedBlock>) {
                on_committed_block(m.block);
            } else if constexpr (std::is_same_v<T, wire::SyncRequest>) {
                on_sync_request(from, m.from_height);
            } else if constexpr (std::is_same_v<T, wire::DocFetchRequest>) {
                on_doc_fetch(from, m);
            } else if constexpr (std::is_same_v<T, wire::DocFetchResponse>) {
                on_doc_response(m);
            }
        },
        msg);
}

void Node::send_to(const std::string& peer, const wire::Message& msg)
{
    rt_.send(peer, wire::encode({config_.node_id, msg}));
}

void Node::broadcast_message(const wire::Message& msg)
{
    if (config_.peers.empty())
        return;
    const Bytes frame = wire::encode({config_.node_id, msg});
    for (const auto& [peer, addr] : config_.peers)
        rt_.send(peer, frame);
}

const Block& Node::tip() const
{
    return disk_->chain.tip();
}

void Node::check_block(const Block& block)
{
    check_successor(tip(), block, consortium_->validators, false);
    if (block.transactions.empty())
        throw Error(Errc::Malformed, "empty block");
    if (block.transactions.size() > consortium_->params.block_capacity)
        throw Error(Errc::Malformed, "block exceeds capacity");
    if (block.header.timestamp > now() + consortium_->params.future_tolerance_ms)
        throw Error(Errc::BadTimestamp, "block timestamp too far in the future");
    WorldState scratch = *state_;
    scratch.apply_block(block);
}

std::optional<Block> Node::build_block(std::uint64_t height, std::uint64_t /*round*/)
{
    const std::uint64_t ts = std::max(now(), tip().header.timestamp + 1);
    WorldState scratch = *state_;
    Block b;
    std::vector<Digest> dropped;
    for (const auto& id : mempool_order_) {
        auto it = mempool_.find(id);
        if (it == mempool_.end())
            continue;
        if (b.transactions.size() >= consortium_->params.block_capacity)
            break;
        try {
            scratch.apply(it->second, ts, height);
            b.transactions.push_back(it->second);
        } catch (const Error& e) {
            dropped.push_back(id);
            trace("tx_dropped", {{"tx", to_hex(id)}, {"reason", std::string(errc_name(e.code()))}});
        }
    }
    for (const auto& id : dropped)
        mempool_.erase(id);
    if (b.transactions.empty())
        return std::nullopt;
    b.header.height = height;
    b.header.parent_hash = tip().block_hash;
    b.header.tx_root = merkle_root(b.tx_ids());
    b.header.timestamp = ts;
    b.header.proposer = config_.node_id;
    b.block_hash = hash_block(b.header);
    return b;
}

void Node::broadcast(const consensus::ConsensusMessage& msg)
{
    broadcast_message(to_wire(msg));
}

void Node::persist(const consensus::ConsensusState& state)
{
    disk_->save_consensus(state.encode());
}

void Node::commit(const Block& block)
{
    apply_commit(block, true);
}

void Node::round_timeout(std::uint64_t height, std::uint64_t round)
{
    trace("round_timeout", {{"height", height}, {"round", round}});
    prune_mempool();
    for (const auto& id : mempool_order_)
        broadcast_message(wire::TxGossip{mempool_.at(id)});
}

void Node::apply_commit(const Block& block, bool announce)
{
    auto next = std::make_shared<WorldState>(*state_);
    next->apply_block(block);
    append_block(disk_->chain, block, consortium_->validators);
    state_ = std::move(next);
    for (const auto& tx : block.transactions)
        mempool_.erase(tx.id());
    prune_mempool();

    std::map<Digest, std::size_t> index;
    json txs = json::array();
    for (std::size_t i = 0; i < block.transactions.size(); ++i) {
        json t = views::tx_json(block.transactions[i]);
        index[digest_from_hex(t["id"].get<std::string>())] = i;
        t.erase("author");
        t.erase("nonce");
        txs.push_back(std::move(t));
    }
    std::vector<std::pair<std::size_t, json>> moves;
    for (const auto& [rid, req] : state_->requests)
        for (const auto& tr : req.history)
            if (tr.height == block.header.height) {
                const std::size_t i = index.count(tr.tx_id) ? index[tr.tx_id] : 0;
                moves.emplace_back(i, json{{"request", to_hex(rid)}, {"to", std::string(state_name(tr.to))}, {"tx", i}});
            }
    std::stable_sort(moves.begin(), moves.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    json transitions = json::array();
    for (auto& [i, m] : moves)
        transitions.push_back(std::move(m));

    trace("commit", {{"height", block.header.height},
                     {"hash", to_hex(block.block_hash)},
                     {"parent", to_hex(block.header.parent_hash)},
                     {"timestamp", block.header.timestamp},
                     {"proposer", block.header.proposer},
                     {"round", block.commit_votes.empty() ? 0 : block.commit_votes.front().round},
                     {"txs", std::move(txs)},
                     {"transitions", std::move(transitions)}});
    if (announce)
        broadcast_message(wire::CommittedBlock{block});
    reconcile_due_ = true;
}

void Node::on_committed_block(const Block& block)
{
    if (block.header.height != state_->height() + 1)
        return;
    try {
        check_successor(tip(), block, consortium_->validators, true);
        apply_commit(block, false);
    } catch (const Error& e) {
        trace("bad_block", {{"height", block.header.height}, {"detail", e.what()}});
        return;
    }
    engine_->advance(now());
}

void Node::on_sync_request(const std::string& from, std::uint64_t from_height)
{
    if (!config_.peers.count(from))
        return;
    const std::uint64_t h = state_->height();
    for (std::uint64_t i = from_height; i <= h && i < from_height + 32; ++i)
        send_to(from, wire::CommittedBlock{disk_->chain.at(i)});
}

void Node::on_doc_fetch(const std::string& from, const wire::DocFetchRequest& req)
{
    const Organization* org = consortium_->organization(req.requester);
    registry::ReadResult result;
    if (!org || !verify_signature(org->key, req.signing_bytes(), req.signature)) {
        result.outcome = registry::ReadOutcome::NoGrant;
        disk_->audit.append({now(), req.requester, req.doc_id, "Unauthenticated"});
    } else {
        result = registry::read_document(req.requester, req.doc_id, *state_, now(), disk_->store, &disk_->audit);
    }
    trace("read", {{"requester", req.requester},
                   {"doc_id", to_hex(req.doc_id)},
                   {"outcome", std::string(registry::read_outcome_name(result.outcome))},
                   {"grant", result.grant_id ? json(to_hex(*result.grant_id)) : json(nullptr)}});
    wire::DocFetchResponse resp{req.ref, req.doc_id, result.outcome, std::move(result.payload)};
    if (from == config_.node_id)
        on_doc_response(resp);
    else
        send_to(from, resp);
}

void Node::fail_collection(const Digest& request_id, const Digest& doc_id, std::string_view reason)
{
    auto& c = collections_.at(request_id);
    c.failed = true;
    trace("collection_failed", {{"request", to_hex(request_id)}, {"doc_id", to_hex(doc_id)}, {"reason", reason}});
}

void Node::on_doc_response(const wire::DocFetchResponse& resp)
{
    for (auto& [rid, c] : collections_) {
        auto ref = c.refs.find(resp.ref);
        if (ref == c.refs.end())
            continue;
        const Digest doc_id = ref->second;
        c.refs.erase(ref);
        if (c.failed || c.recorded || c.done[doc_id])
            return;
        if (resp.outcome != registry::ReadOutcome::Allowed) {
            if (c.attempts >= kMaxFetchAttempts)
                fail_collection(rid, doc_id, registry::read_outcome_name(resp.outcome));
            return;
        }
        const DocumentEntry* doc = state_->document(doc_id);
        const auto status = doc ? registry::verify_document(doc->record, resp.payload, now(), *state_)
                                : registry::VerifyStatus::NotOnChain;
        if (status != registry::VerifyStatus::Verified) {
            fail_collection(rid, doc_id, registry::verify_name(status));
            return;
        }
        c.done[doc_id] = true;
        if (std::all_of(c.done.begin(), c.done.end(), [](const auto& p) { return p.second; }))
            reconcile_due_ = true;
        return;
    }
}

void Node::start_collection(const ServiceRequest& req)
{
    Collection& c = collections_[req.request_id];
    for (const auto& d : req.consented)
        c.done.emplace(d, false);
    send_fetches(req.request_id);
}

void Node::send_fetches(const Digest& request_id)
{
    Collection& c = collections_.at(request_id);
    c.attempts++;
    c.last_sent = now();
    c.refs.clear();
    const std::vector<std::pair<Digest, bool>> docs(c.done.begin(), c.done.end());
    for (const auto& [doc_id, ok] : docs) {
        if (ok)
            continue;
        const DocumentEntry* doc = state_->document(doc_id);
        const Organization* issuer = doc ? consortium_->organization(doc->record.issuer) : nullptr;
        if (!issuer) {
            fail_collection(request_id, doc_id, "NotFound");
            return;
        }
        wire::DocFetchRequest req{next_ref_++, doc_id, config_.organization, {}};
        req.signature = key_->sign(req.signing_bytes());
        c.refs.emplace(req.ref, doc_id);
        const std::string target = issuer->node.empty() ? issuer->id : issuer->node;
        if (target == config_.node_id)
            on_doc_fetch(config_.node_id, req);
        else
            send_to(target, req);
        if (collections_.at(request_id).failed)
            return;
    }
}

void Node::reconcile()
{
    if (!key_ || !organization())
        return;
    const std::uint64_t t = now();
    const auto& me = config_.organization;
    for (const auto& [rid, req] : state_->requests) {
        const ServiceContract* contract = state_->contract(req.service_id);
        if (!contract || contract->provider != me)
            continue;
        bool in_flight = false;
        if (auto a = automation_tx_.find(rid); a != automation_tx_.end()) {
            if (mempool_.count(a->second))
                in_flight = true;
            else
                automation_tx_.erase(a);
        }
        if (req.state != RequestState::ConsentGranted) {
            collections_.erase(rid);
            continue;
        }
        if (in_flight)
            continue;
        try {
            if (!req.grant_id) {
                const auto r = submit_own(
                    [&](std::uint64_t n) { return contracts::authorize_collection(*key_, rid, *state_, t, n); });
                if (r.accepted)
                    automation_tx_[rid] = r.tx_id;
                else
                    trace("automation_rejected", {{"request", to_hex(rid)}, {"detail", r.detail}});
                continue;
            }
            auto c = collections_.find(rid);
            if (c == collections_.end()) {
                start_collection(req);
                continue;
            }
            if (c->second.failed)
                continue;
            const bool all = std::all_of(c->second.done.begin(), c->second.done.end(),
                                         [](const auto& p) { return p.second; });
            if (all) {
                const auto r = submit_own(
                    [&](std::uint64_t n) { return contracts::record_collection(*key_, rid, *state_, t, n); });
                if (r.accepted) {
                    c->second.recorded = true;
                    automation_tx_[rid] = r.tx_id;
                }
            } else if (t >= c->second.last_sent + consortium_->params.round_timeout_ms) {
                if (c->second.attempts >= kMaxFetchAttempts)
                    fail_collection(rid, c->second.done.begin()->first, "Timeout");
                else
                    send_fetches(rid);
            }
        } catch (const Error& e) {
            trace("automation_error", {{"request", to_hex(rid)}, {"detail", e.what()}});
        }
    }
}

void Node::reschedule()
{
    if (!engine_)
        return;
    const auto d = engine_->next_deadline();
    if (!d || (wake_at_ && *wake_at_ <= *d))
        return;
    wake_at_ = *d;
    const std::uint64_t t = now();
    rt_.schedule(*d > t ? *d - t : 0, [this, target = *d] { wake(target); });
}

void Node::wake(std::uint64_t target)
{
    if (wake_at_ && *wake_at_ == target)
        wake_at_.reset();
    engine_->tick(now());
    after_event();
}

void Node::periodic()
{
    broadcast_message(wire::SyncRequest{state_->height() + 1});
    reconcile_due_ = true;
    after_event();
    rt_.schedule(consortium_->params.sync_interval_ms, [this] { periodic(); });
}

} // namespace civic
