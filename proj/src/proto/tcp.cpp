#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <thread>

#include "pcn/proto.hpp"
#include "pcn/sim.hpp"

namespace pcn::proto {

namespace {

[[noreturn]] void sys_fail(const std::string& what) { throw Error(what + ": " + std::strerror(errno)); }

int listen_on(std::uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) sys_fail("socket");
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(port);
    a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof a) < 0) {
        ::close(fd);
        sys_fail("bind 127.0.0.1:" + std::to_string(port));
    }
    if (::listen(fd, 64) < 0) sys_fail("listen");
    return fd;
}

int connect_to(std::uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) sys_fail("socket");
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(port);
    a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&a), sizeof a) < 0) {
        ::close(fd);
        sys_fail("connect 127.0.0.1:" + std::to_string(port));
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return fd;
}

void write_all(int fd, const std::vector<std::uint8_t>& b) {
    std::size_t off = 0;
    while (off < b.size()) {
        const auto n = ::send(fd, b.data() + off, b.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            sys_fail("send");
        }
        off += static_cast<std::size_t>(n);
    }
}

// Outgoing connections of one sender, opened on first use.
class Links {
public:
    explicit Links(std::uint16_t base) : base_(base) {}
    ~Links() {
        for (auto& [v, fd] : fds_) ::close(fd);
    }
    void send(const Envelope& e) {
        auto it = fds_.find(e.to);
        if (it == fds_.end()) it = fds_.emplace(e.to, connect_to(static_cast<std::uint16_t>(base_ + e.to))).first;
        write_all(it->second, encode_envelope(e));
    }

private:
    std::uint16_t base_;
    std::map<NodeId, int> fds_;
};

struct Shared {
    std::vector<NodeActor> actors;
    std::vector<std::mutex> locks;
    std::atomic<long> in_flight{0};
    std::atomic<std::size_t> messages{0};
    std::atomic<bool> stop{false};
    std::mutex error_lock;
    std::string error;

    explicit Shared(std::size_t n) : locks(n) {}
    void fail(const std::string& what) {
        std::lock_guard g(error_lock);
        if (error.empty()) error = what;
        stop = true;
    }
};

void node_loop(Shared& sh, NodeId self, int listen_fd, std::uint16_t base) {
    Links out(base);
    std::vector<pollfd> fds{{listen_fd, POLLIN, 0}};
    std::map<int, EnvelopeReader> readers;
    std::vector<std::uint8_t> buf(1 << 16);
    try {
        while (!sh.stop) {
            if (::poll(fds.data(), fds.size(), 20) < 0) {
                if (errno == EINTR) continue;
                sys_fail("poll");
            }
            std::vector<pollfd> added;
            for (auto& p : fds) {
                if (!(p.revents & (POLLIN | POLLHUP | POLLERR))) continue;
                if (p.fd == listen_fd) {
                    const int c = ::accept(listen_fd, nullptr, nullptr);
                    if (c >= 0) added.push_back({c, POLLIN, 0});
                    continue;
                }
                const auto n = ::recv(p.fd, buf.data(), buf.size(), 0);
                if (n <= 0) {
                    ::close(p.fd);
                    readers.erase(p.fd);
                    p.fd = -1;
                    continue;
                }
                auto& r = readers[p.fd];
                r.feed(std::span<const std::uint8_t>(buf.data(), static_cast<std::size_t>(n)));
                while (auto e = r.next()) {
                    std::vector<Envelope> replies;
                    {
                        std::lock_guard g(sh.locks[self]);
                        replies = sh.actors[self].handle(*e);
                    }
                    sh.in_flight += static_cast<long>(replies.size());
                    sh.messages += replies.size();
                    for (const auto& x : replies) out.send(x);
                    --sh.in_flight;
                }
            }
            std::erase_if(fds, [](const pollfd& p) { return p.fd < 0; });
            fds.insert(fds.end(), added.begin(), added.end());
        }
    } catch (const std::exception& ex) {
        sh.fail("node " + std::to_string(self) + ": " + ex.what());
    }
    for (const auto& p : fds)
        if (p.fd != listen_fd) ::close(p.fd);
}

}  // namespace

TcpDemoReport run_tcp_demo(const TcpDemoOptions& opt) {
    if (opt.nodes < 2) throw std::invalid_argument("proto-demo: need at least 2 nodes");
    if (opt.base_port == 0 || opt.base_port + opt.nodes > 65536)
        throw std::invalid_argument("proto-demo: port range out of bounds");

    ExperimentConfig c;
    GeneratorConfig gen;
    gen.n = opt.nodes;
    gen.mean_degree = std::min(opt.mean_degree, static_cast<double>(opt.nodes - 1));
    c.generator = gen;
    c.router = opt.scheme == Scheme::Pe ? RouterKind::WebFlowPe : RouterKind::WebFlow;
    c.seed = opt.seed;
    c.tx_count = opt.payments;
    Network net = build_network(c, 0);
    const std::size_t n = net.graph.node_count();
    const auto payments = make_workload(n, opt.payments, c.workload, stream_seed(opt.seed, "workload", 0));
    const std::uint64_t pe_seed = stream_seed(opt.seed, "pe", 0);
    const std::size_t budget = default_hop_budget(net.graph);

    ActorOptions ao;
    ao.hop_budget = budget;
    Shared sh(n);
    sh.actors.reserve(n);
    for (const auto& s : net.mdt) sh.actors.emplace_back(s, net.graph, ao);

    // Bind everything before any thread talks.
    std::vector<int> listeners;
    try {
        for (NodeId u = 0; u < n; ++u) listeners.push_back(listen_on(static_cast<std::uint16_t>(opt.base_port + u)));
    } catch (...) {
        for (int fd : listeners) ::close(fd);
        throw;
    }
    std::vector<std::thread> threads;
    for (NodeId u = 0; u < n; ++u)
        threads.emplace_back(node_loop, std::ref(sh), u, listeners[u], opt.base_port);

    TcpDemoReport rep;
    rep.payments = payments.size();
    rep.initial_total = net.graph.total_balance();
    ChannelGraph sim = net.graph;
    RouteOptions ro;
    ro.hop_budget = budget;
    try {
        Links out(opt.base_port);
        for (const auto& p : payments) {
            std::vector<Envelope> first;
            {
                std::lock_guard g(sh.locks[p.sender]);
                if (opt.scheme == Scheme::Pe) {
                    const auto secret = payment_secret(p, pe_seed);
                    const auto& s = net.mdt[p.sender];
                    const auto target = make_pe_target(cell_of(s), s.coord, net.mdt[p.receiver].coord, secret,
                                                       stream_seed(pe_seed, "line", p.trans_id), ao.pe);
                    {
                        std::lock_guard r(sh.locks[p.receiver]);
                        sh.actors[p.receiver].expect(p.trans_id, sha256(secret));
                    }
                    first = sh.actors[p.sender].start_pe(p, target);
                } else {
                    first = sh.actors[p.sender].start_mdt(p, net.mdt[p.receiver].coord);
                }
            }
            sh.in_flight += static_cast<long>(first.size());
            sh.messages += first.size();
            for (const auto& e : first) out.send(e);

            const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
            while (sh.in_flight > 0 && !sh.stop) {
                if (std::chrono::steady_clock::now() > deadline) sh.fail("payment " + std::to_string(p.trans_id) + " timed out");
                std::this_thread::sleep_for(std::chrono::microseconds(200));
            }
            if (sh.stop) break;

            bool ok = false;
            Failure reason = Failure::None;
            for (NodeId u = 0; u < n; ++u) {
                std::lock_guard g(sh.locks[u]);
                for (const auto& ev : sh.actors[u].take_events()) {
                    if (ev.kind == TxEvent::Kind::Completed) ok = true;
                    if ((ev.kind == TxEvent::Kind::RouteFailed || ev.kind == TxEvent::Kind::CommitFailed) &&
                        reason == Failure::None)
                        reason = ev.reason;
                }
            }
            if (ok) reason = Failure::None;
            const RouteResult want =
                opt.scheme == Scheme::Pe
                    ? route_pe(net.mdt, sim, p, payment_secret(p, pe_seed), stream_seed(pe_seed, "line", p.trans_id), ao.pe, ro)
                    : route_mdt(net.mdt, sim, p, ro);
            rep.succeeded += ok;
            rep.matches_sim += want.success == ok && want.reason == reason;
        }
    } catch (const std::exception& ex) {
        sh.fail(ex.what());
    }
    sh.stop = true;
    for (auto& t : threads) t.join();
    for (int fd : listeners) ::close(fd);
    if (!sh.error.empty()) throw Error("proto-demo: " + sh.error);

    rep.messages = sh.messages;
    for (std::size_t i = 0; i < net.graph.channel_slots(); ++i) {
        const auto& ch = net.graph.channel(i);
        if (!ch.alive) continue;
        const Amount ab = sh.actors[ch.a].out_balance(ch.b), ba = sh.actors[ch.b].out_balance(ch.a);
        rep.final_total += ab + ba;
        if (ab != sim.balance(ch.a, ch.b) || ba != sim.balance(ch.b, ch.a)) rep.balances_match = false;
    }
    return rep;
}

}  // namespace pcn::proto
