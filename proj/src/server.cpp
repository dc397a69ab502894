#include "civic/server.hpp"

#include <httplib.h>

#include "civic/contracts.hpp"
#include "civic/json_views.hpp"

namespace civic {

using nlohmann::json;

namespace {

struct ApiError {
    Errc error;
    Errc reason;
    std::string detail;
};

void reply(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, Errc error, Errc reason, const std::string& detail)
{
    reply(res, http_status(reason == Errc::Malformed ? error : reason),
          {{"error", std::string(errc_name(error))}, {"reason", std::string(errc_name(reason))}, {"detail", detail}});
}

json parse_body(const httplib::Request& req)
{
    if (req.body.empty())
        return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw Error(Errc::Malformed, std::string("request body: ") + e.what());
    }
}

Transaction body_tx(const json& body)
{
    if (!body.contains("tx") || !body["tx"].is_string())
        throw Error(Errc::Malformed, "body needs a hex \"tx\" field");
    return Transaction::decode(from_hex(body["tx"].get<std::string>()));
}

std::uint64_t parse_u64(const std::string& s)
{
    try {
        std::size_t pos = 0;
        const auto v = std::stoull(s, &pos);
        if (pos != s.size())
            throw Error(Errc::Malformed, "not a number: " + s);
        return v;
    } catch (const std::logic_error&) {
        throw Error(Errc::Malformed, "not a number: " + s);
    }
}

// Wraps a handler so civic::Error becomes the JSON error body.
template<class F>
httplib::Server::Handler guarded(F fn)
{
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            reply_error(res, e.code(), e.code(), e.detail());
        } catch (const std::exception& e) {
            reply_error(res, Errc::Malformed, Errc::Malformed, e.what());
        }
    };
}

json submit_json(const SubmitResult& r)
{
    return {{"accepted", r.accepted}, {"tx_id", to_hex(r.tx_id)}};
}

// Route-level submission: an admission failure surfaces its underlying code.
void reply_submit(httplib::Response& res, const SubmitResult& r, json extra = json::object())
{
    if (!r.accepted) {
        const Errc shown = r.error == Errc::AdmissionFailed ? r.reason : r.error;
        reply_error(res, shown, r.reason, r.detail);
        return;
    }
    json body = submit_json(r);
    body.update(extra);
    reply(res, 202, body);
}

std::string http_address(const std::string& a)
{
    return a.find("://") == std::string::npos ? "http://" + a : a;
}

std::pair<std::string, int> split_listen(const std::string& listen)
{
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos)
        throw Error(Errc::InvalidConfig, "listen address must be host:port");
    return {listen.substr(0, colon), static_cast<int>(parse_u64(listen.substr(colon + 1)))};
}

} // namespace

int http_status(Errc code)
{
    switch (code) {
    case Errc::NotFound:
    case Errc::UnknownService: return 404;
    case Errc::Unauthenticated:
    case Errc::BadAuthoritySignature:
    case Errc::Expired:
    case Errc::Revoked:
    case Errc::BadChallengeResponse:
    case Errc::NotActive:
    case Errc::ReplayedNonce: return 401;
    case Errc::Denied:
    case Errc::NotRequestOwner:
    case Errc::NotProvider:
    case Errc::NotAuthority: return 403;
    case Errc::Malformed:
    case Errc::BadSignature:
    case Errc::InvalidConfig: return 400;
    case Errc::Io: return 500;
    default: return 409;
    }
}

EventLoop::EventLoop(Sender sender, Tracer tracer) : sender_(std::move(sender)), tracer_(std::move(tracer)) {}

EventLoop::~EventLoop()
{
    stop();
}

void EventLoop::start()
{
    thread_ = std::thread([this] { run(); });
}

void EventLoop::stop()
{
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable())
        thread_.join();
}

void EventLoop::post(std::function<void()> fn)
{
    {
        std::lock_guard lock(mu_);
        tasks_.push_back(std::move(fn));
    }
    cv_.notify_one();
}

std::uint64_t EventLoop::now_ms()
{
    using namespace std::chrono;
    return static_cast<std::uint64_t>(duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

void EventLoop::send(const std::string& peer, Bytes frame)
{
    sender_(peer, std::move(frame));
}

void EventLoop::schedule(std::uint64_t delay_ms, std::function<void()> fn)
{
    std::lock_guard lock(mu_);
    timers_.emplace(std::chrono::steady_clock::now() + std::chrono::milliseconds(delay_ms), std::move(fn));
    cv_.notify_one();
}

void EventLoop::trace(json event)
{
    if (tracer_)
        tracer_(event);
}

void EventLoop::run()
{
    std::unique_lock lock(mu_);
    while (!stopping_) {
        std::function<void()> next;
        if (!tasks_.empty()) {
            next = std::move(tasks_.front());
            tasks_.pop_front();
        } else if (!timers_.empty() && timers_.begin()->first <= std::chrono::steady_clock::now()) {
            next = std::move(timers_.begin()->second);
            timers_.erase(timers_.begin());
        } else if (!timers_.empty()) {
            cv_.wait_until(lock, timers_.begin()->first);
            continue;
        } else {
            cv_.wait(lock);
            continue;
        }
        lock.unlock();
        try {
            next();
        } catch (const std::exception& e) {
            trace({{"type", "loop_error"}, {"detail", e.what()}});
        }
        lock.lock();
    }
}

PeerLink::PeerLink(std::string address) : address_(http_address(address)), thread_([this] { run(); }) {}

PeerLink::~PeerLink()
{
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    thread_.join();
}

void PeerLink::push(Bytes frame)
{
    {
        std::lock_guard lock(mu_);
        if (queue_.size() >= 10'000)
            queue_.pop_front();
        queue_.push_back(std::move(frame));
    }
    cv_.notify_one();
}

void PeerLink::run()
{
    httplib::Client client(address_);
    client.set_connection_timeout(1, 0);
    client.set_read_timeout(5, 0);
    client.set_write_timeout(5, 0);
    client.set_keep_alive(true);
    std::unique_lock lock(mu_);
    while (true) {
        cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (stopping_)
            return;
        Bytes frame = std::move(queue_.front());
        queue_.pop_front();
        lock.unlock();
        client.Post("/p2p", reinterpret_cast<const char*>(frame.data()), frame.size(), "application/octet-stream");
        lock.lock();
    }
}

NodeServer::NodeServer(NodeConfig config, std::shared_ptr<const Consortium> consortium, std::optional<KeyPair> key,
                       std::shared_ptr<NodeDisk> disk, std::ostream* trace_out)
    : config_(std::move(config)), consortium_(std::move(consortium)), trace_out_(trace_out)
{
    for (const auto& [peer, addr] : config_.peers)
        links_.emplace(peer, std::make_unique<PeerLink>(addr));
    loop_ = std::make_unique<EventLoop>(
        [this](const std::string& peer, Bytes frame) {
            if (auto it = links_.find(peer); it != links_.end())
                it->second->push(std::move(frame));
        },
        [this](const json& event) {
            if (!trace_out_)
                return;
            std::lock_guard lock(trace_mu_);
            *trace_out_ << event.dump() << '\n' << std::flush;
        });
    node_ = std::make_unique<Node>(config_, consortium_, std::move(key), *loop_, std::move(disk));
    http_ = std::make_unique<httplib::Server>();
    routes();
}

NodeServer::~NodeServer()
{
    stop();
}

int NodeServer::start()
{
    node_->start();
    loop_->start();
    const auto [host, port] = split_listen(config_.listen);
    port_ = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
    if (port_ <= 0)
        throw Error(Errc::Io, "cannot bind " + config_.listen);
    http_thread_ = std::thread([this] { http_->listen_after_bind(); });
    return port_;
}

void NodeServer::wait()
{
    if (http_thread_.joinable())
        http_thread_.join();
}

void NodeServer::stop()
{
    if (http_)
        http_->stop();
    if (http_thread_.joinable())
        http_thread_.join();
    if (loop_)
        loop_->stop();
    links_.clear();
}

void NodeServer::routes()
{
    auto& s = *http_;
    Node& node = *node_;
    EventLoop& loop = *loop_;

    auto snapshot = [&node] {
        auto snap = node.snapshot();
        if (!snap)
            throw Error(Errc::Io, "node not started");
        return snap;
    };

    // Authenticates the caller from the challenge-response headers.
    auto authenticate = [&node, snapshot](const httplib::Request& req) {
        if (!req.has_header(kCredentialHeader) || !req.has_header(kNonceHeader) ||
            !req.has_header(kSignatureHeader))
            throw Error(Errc::Unauthenticated, "missing authentication headers");
        identity::AuthContext ctx;
        ctx.credential = identity::import_credential(req.get_header_value(kCredentialHeader));
        ctx.challenge_nonce = from_hex(req.get_header_value(kNonceHeader));
        ctx.response_signature = from_hex(req.get_header_value(kSignatureHeader));
        return identity::authenticate(ctx, *snapshot()->state, node.now(), node.auth_nonces());
    };

    s.Get("/auth/challenge", guarded([&node](const httplib::Request&, httplib::Response& res) {
              reply(res, 200, {{"nonce", to_hex(node.auth_nonces().issue())}});
          }));

    s.Post("/p2p", [&node, &loop](const httplib::Request& req, httplib::Response& res) {
        Bytes frame(req.body.begin(), req.body.end());
        loop.post([&node, frame = std::move(frame)] { node.receive(frame); });
        res.status = 204;
    });

    s.Post("/tx", guarded([&node, &loop](const httplib::Request& req, httplib::Response& res) {
               const json body = parse_body(req);
               const Transaction tx = body_tx(body);
               if (body.contains("payload") && tx.kind == TxKind::DocumentIssued) {
                   const auto record = DocumentRecord::decode(tx.payload);
                   const Bytes payload = from_hex(body["payload"].get<std::string>());
                   if (sha256(payload) != record.content_digest)
                       throw Error(Errc::Malformed, "payload does not match content_digest");
                   if (record.issuer != node.config().organization)
                       throw Error(Errc::WrongIssuerForType, "this node stores payloads for " +
                                                                 node.config().organization + " only");
                   node.disk().store.put(payload);
               }
               const SubmitResult r = loop.call([&] { return node.submit(tx); });
               if (!r.accepted) {
                   reply(res, http_status(r.error),
                         {{"error", std::string(errc_name(r.error))},
                          {"reason", std::string(errc_name(r.reason))},
                          {"detail", r.detail}});
                   return;
               }
               reply(res, 202, submit_json(r));
           }));

    s.Get("/chain/head", guarded([snapshot](const httplib::Request&, httplib::Response& res) {
              const auto snap = snapshot();
              json head = views::header_json(snap->tip());
              head["mempool"] = snap->mempool;
              head["round"] = snap->round;
              reply(res, 200, head);
          }));

    s.Get(R"(/chain/block/(\d+))", guarded([snapshot](const httplib::Request& req, httplib::Response& res) {
              const auto snap = snapshot();
              const std::uint64_t h = parse_u64(req.matches[1]);
              if (h > snap->height())
                  throw Error(Errc::NotFound, "no block at height " + std::to_string(h));
              reply(res, 200, views::block_json(*snap->blocks[h]));
          }));

    s.Get(R"(/citizens/([^/]+)/documents)",
          guarded([snapshot, authenticate, &node](const httplib::Request& req, httplib::Response& res) {
              const auto who = authenticate(req);
              const std::string citizen = req.matches[1];
              if (who.citizen_id != citizen)
                  throw Error(Errc::Denied, "citizens may list only their own documents");
              const auto snap = snapshot();
              json docs = json::array();
              for (const auto& v : registry::citizen_documents(citizen, *snap->state, node.now()))
                  docs.push_back(views::document_view_json(v));
              reply(res, 200, {{"citizen", citizen}, {"height", snap->height()}, {"documents", docs}});
          }));

    s.Get(R"(/documents/([0-9a-f]{64}))", guarded([snapshot, &node](const httplib::Request& req, httplib::Response& res) {
              const auto snap = snapshot();
              const DocumentEntry* d = snap->state->document(digest_from_hex(req.matches[1].str()));
              if (!d)
                  throw Error(Errc::NotFound, "no committed document " + req.matches[1].str());
              json j = views::document_json(d->record);
              j["height"] = d->height;
              j["superseded"] = d->superseded_by.has_value();
              j["expired"] = node.now() > d->record.valid_until;
              reply(res, 200, j);
          }));

    s.Get(R"(/accounts/([0-9a-f]{64})/nonce)", guarded([snapshot](const httplib::Request& req, httplib::Response& res) {
              const Bytes k = from_hex(req.matches[1].str());
              PublicKey key{};
              std::copy(k.begin(), k.end(), key.begin());
              reply(res, 200, {{"last_nonce", snapshot()->state->last_nonce(key)}});
          }));

    s.Post(R"(/services/([^/]+)/requests)",
           guarded([authenticate, &node, &loop](const httplib::Request& req, httplib::Response& res) {
               const auto who = authenticate(req);
               const Transaction tx = body_tx(parse_body(req));
               if (tx.kind != TxKind::RequestInitiated)
                   throw Error(Errc::Malformed, "expected a RequestInitiated transaction");
               const auto init = RequestInitiation::decode(tx.payload);
               if (init.service_id != req.matches[1].str())
                   throw Error(Errc::Malformed, "transaction names service " + init.service_id);
               if (init.citizen_id != who.citizen_id || tx.author != who.public_key)
                   throw Error(Errc::Unauthenticated, "transaction is not signed by the authenticated citizen");
               const SubmitResult r = loop.call([&] { return node.submit(tx); });
               reply_submit(res, r, {{"request_id", to_hex(r.tx_id)}});
           }));

    s.Post(R"(/requests/([0-9a-f]{64})/consent)",
           guarded([authenticate, &node, &loop](const httplib::Request& req, httplib::Response& res) {
               const auto who = authenticate(req);
               const Transaction tx = body_tx(parse_body(req));
               if (tx.kind != TxKind::ConsentGranted)
                   throw Error(Errc::Malformed, "expected a ConsentGranted transaction");
               const auto consent = ConsentRecord::decode(tx.payload);
               if (to_hex(consent.request_id) != req.matches[1].str())
                   throw Error(Errc::Malformed, "transaction names another request");
               if (tx.author != who.public_key)
                   throw Error(Errc::Unauthenticated, "transaction is not signed by the authenticated citizen");
               const SubmitResult r = loop.call([&] { return node.submit(tx); });
               reply_submit(res, r, {{"request_id", req.matches[1].str()}});
           }));

    s.Post(R"(/requests/([0-9a-f]{64})/complete)",
           guarded([&node, &loop](const httplib::Request& req, httplib::Response& res) {
               const json body = parse_body(req);
               const Digest rid = digest_from_hex(req.matches[1].str());
               SubmitResult r;
               if (body.contains("tx")) {
                   const Transaction tx = body_tx(body);
                   if (tx.kind != TxKind::RequestCompleted || CompletionRecord::decode(tx.payload).request_id != rid)
                       throw Error(Errc::Malformed, "expected a RequestCompleted transaction for this request");
                   r = loop.call([&] { return node.submit(tx); });
               } else {
                   if (!node.key())
                       throw Error(Errc::NotProvider, "node holds no organization key");
                   const bool reject = body.value("outcome", "Completed") == "Rejected";
                   const std::string reason = body.value("reason", "");
                   r = loop.call([&] {
                       return node.act([&](std::uint64_t n) {
                           const auto t = node.now();
                           return reject ? contracts::reject_request(*node.key(), rid, reason, node.state(), t, n)
                                         : contracts::complete_request(*node.key(), rid, node.state(), t, n);
                       });
                   });
               }
               reply_submit(res, r, {{"request_id", req.matches[1].str()}});
           }));

    s.Get(R"(/requests/([0-9a-f]{64}))", guarded([snapshot](const httplib::Request& req, httplib::Response& res) {
              const auto snap = snapshot();
              const ServiceRequest* r = snap->state->request(digest_from_hex(req.matches[1].str()));
              if (!r)
                  throw Error(Errc::NotFound, "no request " + req.matches[1].str());
              reply(res, 200, views::request_json(*r));
          }));

    s.Get("/contracts", guarded([snapshot](const httplib::Request&, httplib::Response& res) {
              json list = json::array();
              for (const auto& [id, c] : snapshot()->state->contracts)
                  list.push_back(views::contract_json(c));
              reply(res, 200, {{"contracts", list}});
          }));

    s.Get("/audit", guarded([&node](const httplib::Request& req, httplib::Response& res) {
              const std::size_t n = req.has_param("n") ? parse_u64(req.get_param_value("n")) : 100;
              json entries = json::array();
              for (const auto& e : node.disk().audit.tail(n))
                  entries.push_back(views::audit_json(e));
              reply(res, 200, {{"node", node.id()}, {"entries", entries}});
          }));
}

} // namespace civic
