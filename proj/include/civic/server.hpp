#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>

#include "civic/node.hpp"

namespace httplib {
class Server;
}

namespace civic {

// Wall-clock Runtime: one thread runs every node event in order. Timers and
// posted tasks share the queue; other threads hand work in through post() or
// call() and never touch the node directly.
class EventLoop final : public Runtime {
public:
    using Sender = std::function<void(const std::string& peer, Bytes frame)>;
    using Tracer = std::function<void(const nlohmann::json& event)>;

    EventLoop(Sender sender, Tracer tracer);
    ~EventLoop() override;

    void start();
    void stop();

    void post(std::function<void()> fn);

    // Runs fn on the loop thread and returns its result (or rethrows).
    template<class F>
    auto call(F fn) -> decltype(fn())
    {
        using R = decltype(fn());
        auto task = std::make_shared<std::packaged_task<R()>>(std::move(fn));
        auto fut = task->get_future();
        post([task] { (*task)(); });
        return fut.get();
    }

    std::uint64_t now_ms() override;
    void send(const std::string& peer, Bytes frame) override;
    void schedule(std::uint64_t delay_ms, std::function<void()> fn) override;
    void trace(nlohmann::json event) override;

private:
    void run();

    Sender sender_;
    Tracer tracer_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> tasks_;
    std::multimap<std::chrono::steady_clock::time_point, std::function<void()>> timers_;
    bool stopping_ = false;
    std::thread thread_;
};

// Delivers frames to one peer's /p2p endpoint from a dedicated thread. Frames
// that cannot be delivered are dropped; the sync protocol repairs the gap.
class PeerLink {
public:
    explicit PeerLink(std::string address);
    ~PeerLink();
    void push(Bytes frame);

private:
    void run();

    std::string address_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Bytes> queue_;
    bool stopping_ = false;
    std::thread thread_;
};

// A node behind the HTTP API.
class NodeServer {
public:
    NodeServer(NodeConfig config, std::shared_ptr<const Consortium> consortium, std::optional<KeyPair> key,
               std::shared_ptr<NodeDisk> disk, std::ostream* trace_out = nullptr);
    ~NodeServer();

    // Starts the node and binds the listen address; returns the bound port.
    int start();
    // Serves until stop() is called from another thread.
    void wait();
    void stop();

    int port() const { return port_; }
    Node& node() { return *node_; }
    EventLoop& loop() { return *loop_; }

private:
    void routes();

    NodeConfig config_;
    std::shared_ptr<const Consortium> consortium_;
    std::ostream* trace_out_;
    std::mutex trace_mu_;
    std::map<std::string, std::unique_ptr<PeerLink>> links_;
    std::unique_ptr<EventLoop> loop_;
    std::unique_ptr<Node> node_;
    std::unique_ptr<httplib::Server> http_;
    std::thread http_thread_;
    int port_ = 0;
};

// Maps an error code to the HTTP status the API returns for it.
int http_status(Errc code);

// Request headers carrying a challenge response.
inline constexpr const char* kCredentialHeader = "X-Civic-Credential";
inline constexpr const char* kNonceHeader = "X-Civic-Nonce";
inline constexpr const char* kSignatureHeader = "X-Civic-Signature";

} // namespace civic
