#include "pcn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "pcn/rng.hpp"

namespace pcn {

namespace {

bool is_wf(RouterKind k) { return k == RouterKind::WebFlow || k == RouterKind::WebFlowPe; }

/// Runs `fn`, prefixing any library error with the stage that raised it.
template <class F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(std::string(name) + ": " + e.what());
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    if (generator.has_value() == trace.has_value())
        throw std::invalid_argument("config: exactly one of 'topology' generator or 'trace' is required");
    if (dim < 2 || dim > 4) throw std::invalid_argument("config: dim must be 2, 3 or 4");
    if (anchors != 0 && anchors < static_cast<std::size_t>(dim) + 1)
        throw std::invalid_argument("config: anchors must be at least dim + 1");
    if (runs == 0) throw std::invalid_argument("config: runs must be positive");
    if (!(attacker_fraction >= 0 && attacker_fraction < 1)) throw std::invalid_argument("config: f must be in [0,1)");
    if (split_threshold < 0 || small_threshold < 0) throw std::invalid_argument("config: thresholds must be >= 0");
    if (workload.min_amount < 1 || workload.max_amount < workload.min_amount)
        throw std::invalid_argument("config: need 1 <= min_amount <= max_amount");
    if (generator && generator->n < 2 && generator->model != "grid")
        throw std::invalid_argument("config: topology needs at least 2 nodes");
}

namespace {

const std::set<std::string> kConfigKeys{"topology", "trace",     "dim",      "anchors", "coord_jitter", "router",
                                        "split_threshold",       "small_threshold",     "tx_count",     "f",
                                        "workload", "pe",        "seed",     "runs",    "output_dir"};

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    for (const auto& [k, v] : j.items())
        if (!kConfigKeys.count(k)) throw std::invalid_argument("config: unknown key '" + k + "'");
    if (!j.contains("seed")) throw std::invalid_argument("config: 'seed' is required");
    ExperimentConfig c;
    try {
        if (j.contains("topology")) c.generator = generator_config_from_json(j.at("topology"));
        if (j.contains("trace")) {
            const auto& t = j.at("trace");
            c.trace = TraceSource{t.at("topology").get<std::string>(), std::nullopt};
            if (t.contains("transactions")) c.trace->transactions = t.at("transactions").get<std::string>();
        }
        c.dim = j.value("dim", c.dim);
        c.anchors = j.value("anchors", c.anchors);
        c.coord_jitter = j.value("coord_jitter", c.coord_jitter);
        if (j.contains("router")) c.router = router_from_string(j.at("router").get<std::string>());
        c.split_threshold = j.value("split_threshold", c.split_threshold);
        c.small_threshold = j.value("small_threshold", c.small_threshold);
        c.tx_count = j.value("tx_count", c.tx_count);
        c.attacker_fraction = j.value("f", c.attacker_fraction);
        if (j.contains("workload")) {
            const auto& w = j.at("workload");
            if (w.contains("amount")) c.workload.amount = capacity_from_json(w.at("amount"));
            c.workload.min_amount = w.value("min_amount", c.workload.min_amount);
            c.workload.max_amount = w.value("max_amount", c.workload.max_amount);
        }
        if (j.contains("pe")) {
            c.pe.base_spread = j.at("pe").value("base_spread", c.pe.base_spread);
            c.pe.target_jitter = j.at("pe").value("target_jitter", c.pe.target_jitter);
        }
        c.seed = j.at("seed").get<std::uint64_t>();
        c.runs = j.value("runs", c.runs);
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j{{"dim", c.dim},
                     {"anchors", c.anchors},
                     {"coord_jitter", c.coord_jitter},
                     {"router", to_string(c.router)},
                     {"split_threshold", c.split_threshold},
                     {"small_threshold", c.small_threshold},
                     {"tx_count", c.tx_count},
                     {"f", c.attacker_fraction},
                     {"workload",
                      {{"amount", to_json(c.workload.amount)},
                       {"min_amount", c.workload.min_amount},
                       {"max_amount", c.workload.max_amount}}},
                     {"pe", {{"base_spread", c.pe.base_spread}, {"target_jitter", c.pe.target_jitter}}},
                     {"seed", c.seed},
                     {"runs", c.runs}};
    if (c.generator) {
        j["topology"] = to_json(*c.generator);
        j["topology"].erase("seed");
    }
    if (c.trace) {
        j["trace"] = {{"topology", c.trace->topology.string()}};
        if (c.trace->transactions) j["trace"]["transactions"] = c.trace->transactions->string();
    }
    if (c.output_dir) j["output_dir"] = c.output_dir->string();
    return j;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& file, std::optional<std::uint64_t> seed) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(file.string(), 0, e.what());
    }
    if (seed) j["seed"] = *seed;
    auto c = experiment_config_from_json(j);
    // Relative trace paths resolve against the config's directory.
    if (c.trace) {
        const auto base = file.parent_path();
        if (c.trace->topology.is_relative()) c.trace->topology = base / c.trace->topology;
        if (c.trace->transactions && c.trace->transactions->is_relative())
            c.trace->transactions = base / *c.trace->transactions;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Routers

namespace {

class ShortestPathRouter final : public Router {
public:
    RouterKind kind() const override { return RouterKind::ShortestPath; }
    RouteResult route(ChannelGraph& g, const Payment& p) override { return route_shortest_path(g, p); }
    double storage(const ChannelGraph& g) const override { return storage_shortest_path(g); }
};

class LandmarkRouter final : public Router {
public:
    explicit LandmarkRouter(const ChannelGraph& g) : st_(build_landmarks(g, 3)) {}
    RouterKind kind() const override { return RouterKind::Landmark; }
    RouteResult route(ChannelGraph& g, const Payment& p) override { return route_landmark(st_, g, p); }
    double storage(const ChannelGraph& g) const override { return storage_landmark(st_, g); }
    std::vector<NodeId> privileged_nodes() const override { return st_.landmarks; }

private:
    LandmarkState st_;
};

class EmbeddingRouter final : public Router {
public:
    explicit EmbeddingRouter(const ChannelGraph& g) : emb_(build_embedding(g, 3)) {}
    RouterKind kind() const override { return RouterKind::Embedding; }
    RouteResult route(ChannelGraph& g, const Payment& p) override { return route_embedding(emb_, g, p); }
    double storage(const ChannelGraph&) const override { return storage_embedding(emb_); }

private:
    TreeEmbedding emb_;
};

class WebFlowRouter final : public Router {
public:
    WebFlowRouter(const Network& net, bool pe, std::uint64_t seed, const PeOptions& opt)
        : mdt_(net.mdt), pe_(pe), seed_(seed), opt_(opt), route_opt_{default_hop_budget(net.graph)} {
        if (mdt_.size() != net.graph.node_count()) throw std::invalid_argument("router: network has no MDT");
    }
    RouterKind kind() const override { return pe_ ? RouterKind::WebFlowPe : RouterKind::WebFlow; }
    RouteResult route(ChannelGraph& g, const Payment& p) override {
        if (!pe_) return route_mdt(mdt_, g, p, route_opt_);
        const auto secret = payment_secret(p, seed_);
        return route_pe(mdt_, g, p, secret, stream_seed(seed_, "line", p.trans_id), opt_, route_opt_);
    }
    double storage(const ChannelGraph&) const override { return storage_mdt(mdt_); }

private:
    const Mdt& mdt_;
    bool pe_;
    std::uint64_t seed_;
    PeOptions opt_;
    RouteOptions route_opt_;
};

}  // namespace

std::unique_ptr<Router> make_router(RouterKind kind, const Network& net, std::uint64_t pe_seed, const PeOptions& pe) {
    switch (kind) {
        case RouterKind::ShortestPath: return std::make_unique<ShortestPathRouter>();
        case RouterKind::Landmark: return std::make_unique<LandmarkRouter>(net.graph);
        case RouterKind::Embedding: return std::make_unique<EmbeddingRouter>(net.graph);
        case RouterKind::WebFlow: return std::make_unique<WebFlowRouter>(net, false, pe_seed, pe);
        case RouterKind::WebFlowPe: return std::make_unique<WebFlowRouter>(net, true, pe_seed, pe);
    }
    throw std::invalid_argument("unknown router");
}

// ---------------------------------------------------------------------------
// Pipeline

Network build_network(const ExperimentConfig& c, std::size_t run) {
    c.validate();
    Network net;
    stage("topology", [&] {
        if (c.generator) {
            auto gc = *c.generator;
            gc.seed = stream_seed(c.seed, "topology", run);
            net.graph = generate(gc);
        } else {
            auto td = load_trace(c.trace->topology, c.trace->transactions);
            net.graph = std::move(td.graph);
            net.trace_payments = std::move(td.payments);
        }
        if (!net.graph.is_connected()) {
            // Keep the largest component and the payments inside it.
            auto lc = largest_component(net.graph);
            std::vector<NodeId> to_new(net.graph.node_count(), kNoNode);
            for (NodeId i = 0; i < lc.old_ids.size(); ++i) to_new[lc.old_ids[i]] = i;
            std::vector<Payment> kept;
            for (auto p : net.trace_payments)
                if (to_new[p.sender] != kNoNode && to_new[p.receiver] != kNoNode) {
                    p.sender = to_new[p.sender];
                    p.receiver = to_new[p.receiver];
                    kept.push_back(p);
                }
            net.trace_payments = std::move(kept);
            net.graph = std::move(lc.graph);
        }
        if (net.graph.node_count() < 2) throw Error("topology has fewer than 2 connected nodes");
    });
    if (!is_wf(c.router)) return net;
    stage("coords", [&] {
        net.coords = assign_coordinates(net.graph, {c.dim, c.anchors, c.coord_jitter},
                                        stream_seed(c.seed, "coords", run))
                         .coords;
    });
    stage("mdt", [&] { net.mdt = build_mdt(net.graph, net.coords); });
    return net;
}

std::vector<Payment> make_workload(std::size_t n, std::size_t count, const WorkloadConfig& w, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("make_workload: need at least 2 nodes");
    Rng rng(seed);
    std::uniform_int_distribution<NodeId> first(0, static_cast<NodeId>(n - 1)), second(0, static_cast<NodeId>(n - 2));
    std::vector<Payment> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Payment p;
        p.trans_id = i;
        p.sender = first(rng);
        p.receiver = second(rng);
        if (p.receiver >= p.sender) ++p.receiver;
        p.amount = std::clamp(w.amount.sample(rng), w.min_amount, w.max_amount);
        out.push_back(p);
    }
    return out;
}

namespace {

std::vector<bool> sample_attackers(std::size_t n, double f, std::uint64_t seed) {
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<bool> mask(n, false);
    const auto k = static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
    for (std::size_t i = 0; i < k && i < n; ++i) mask[ids[i]] = true;
    return mask;
}

}  // namespace

RunResult run_payments(const ExperimentConfig& c, std::size_t run, Network& net, Router& router,
                       const std::vector<Payment>& payments) {
    auto& g = net.graph;
    RunResult res;
    res.run = run;
    res.n = g.node_count();
    res.initial_balance = g.total_balance();
    const bool split = router.kind() == RouterKind::WebFlow && c.split_threshold > 0;
    const std::uint64_t split_seed = stream_seed(c.seed, "split", run);
    std::uint64_t step = 0;

    for (const auto& p : payments) {
        if (p.sender >= res.n || p.receiver >= res.n || p.sender == p.receiver || p.amount <= 0)
            throw Error("sim: invalid payment " + std::to_string(p.trans_id));
        SplitPlan plan;
        if (split) {
            plan = split_payment(p.amount, c.split_threshold, stream_seed(split_seed, "payment", p.trans_id));
        } else {
            plan.parts.push_back({p.amount, p.sub_index.value_or(0)});
        }
        const std::size_t first = res.log.size();
        bool ok = true;
        for (std::uint32_t i = 0; i < plan.parts.size(); ++i) {
            PaymentLogEntry e;
            e.step = step++;
            e.trans_id = p.trans_id;
            if (split && plan.parts.size() > 1) e.sub_index = plan.parts[i].sub_index;
            else e.sub_index = p.sub_index;
            e.part = i;
            e.parts = static_cast<std::uint32_t>(plan.parts.size());
            e.sender = p.sender;
            e.receiver = p.receiver;
            e.amount = plan.parts[i].amount;
            e.payment_amount = p.amount;
            if (!ok) {
                e.reason = Failure::PartFailed;
                res.log.push_back(std::move(e));
                continue;
            }
            const auto r = router.route(g, Payment{p.trans_id, p.sender, p.receiver, e.amount, e.sub_index});
            e.success = r.success;
            e.reason = r.reason;
            e.path = r.path;
            e.probes = r.probe_messages;
            ok = r.success;
            res.log.push_back(std::move(e));
        }
        if (!ok) {
            // The payment is all-or-nothing: undo parts that already went through.
            // Undo in reverse so every transfer finds the funds its commit left.
            for (std::size_t k = res.log.size(); k-- > first;) {
                auto& e = res.log[k];
                if (!e.success) continue;
                rollback_path(g, e.path, e.amount);
                e.success = false;
                e.reason = Failure::PartFailed;
            }
        }
        if (g.total_balance() != res.initial_balance)
            throw Error("sim: balance conservation violated at payment " + std::to_string(p.trans_id));
    }
    res.final_balance = g.total_balance();

    const Amount small = c.small_threshold ? c.small_threshold : c.split_threshold;
    res.metrics = aggregate_log(res.log, small);
    res.metrics.avg_storage = router.storage(g);

    EmpiricalContext ctx;
    ctx.router = router.kind();
    ctx.n = res.n;
    ctx.mdt = is_wf(router.kind()) ? &net.mdt : nullptr;
    ctx.graph = &g;
    ctx.landmarks = router.privileged_nodes();
    res.mean_hops = mean_hops(res.log);
    res.mean_neighbourhood = mean_neighbourhood(ctx);
    double anonymity = 1;
    if (c.attacker_fraction > 0)
        anonymity = empirical_anonymity(
            res.log, sample_attackers(res.n, c.attacker_fraction, stream_seed(c.seed, "attacker", run)), ctx);

    res.row = MetricsRow{to_string(router.kind()), res.n,
                         c.attacker_fraction,      res.metrics.tx_count,
                         res.metrics.success_ratio, res.metrics.success_volume,
                         res.metrics.probe_messages, res.metrics.avg_storage,
                         anonymity};
    return res;
}

RunResult run_single(const ExperimentConfig& c, std::size_t run) {
    auto net = build_network(c, run);
    auto router = stage("router", [&] { return make_router(c.router, net, stream_seed(c.seed, "pe", run), c.pe); });
    std::vector<Payment> payments;
    if (c.trace && c.trace->transactions) {
        payments = net.trace_payments;
        if (c.tx_count && payments.size() > c.tx_count) payments.resize(c.tx_count);
    } else {
        payments = make_workload(net.graph.node_count(), c.tx_count, c.workload, stream_seed(c.seed, "workload", run));
    }
    auto res = stage("route", [&] { return run_payments(c, run, net, *router, payments); });
    if (c.output_dir) {
        stage("output", [&] {
            std::filesystem::create_directories(*c.output_dir);
            res.log_file = *c.output_dir / ("payments_run" + std::to_string(run) + ".csv");
            write_payment_log(res.log, *res.log_file);
            if (!net.coords.empty())
                write_coords_csv(net.coords, *c.output_dir / ("coords_run" + std::to_string(run) + ".csv"));
        });
    }
    return res;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0, 0};
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() < 2) return {m, 0};
    double ss = 0;
    for (double x : xs) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

SummaryRow summarize_rows(const std::vector<MetricsRow>& rows, const std::vector<double>& small_ratios) {
    SummaryRow s;
    if (rows.empty()) return s;
    s.router = rows.front().router;
    s.n = rows.front().n;
    s.f = rows.front().f;
    s.runs = rows.size();
    s.tx_count = rows.front().tx_count;
    auto col = [&](auto get) {
        std::vector<double> xs;
        for (const auto& r : rows) xs.push_back(static_cast<double>(get(r)));
        return mean_std(xs);
    };
    std::tie(s.success_ratio_mean, s.success_ratio_std) = col([](const MetricsRow& r) { return r.success_ratio; });
    std::tie(s.success_volume_mean, s.success_volume_std) = col([](const MetricsRow& r) { return r.success_volume; });
    std::tie(s.probe_msgs_mean, s.probe_msgs_std) = col([](const MetricsRow& r) { return r.probe_msgs; });
    std::tie(s.avg_storage_mean, s.avg_storage_std) = col([](const MetricsRow& r) { return r.avg_storage; });
    std::tie(s.anonymity_mean, s.anonymity_std) = col([](const MetricsRow& r) { return r.anonymity; });
    s.small_success_ratio_mean = small_ratios.empty() ? std::nan("") : mean_std(small_ratios).first;
    return s;
}

}  // namespace

SummaryRow summarize(const std::vector<RunResult>& runs) {
    std::vector<MetricsRow> rows;
    std::vector<double> small;
    for (const auto& r : runs) {
        rows.push_back(r.row);
        small.push_back(r.metrics.small_success_ratio);
    }
    auto s = summarize_rows(rows, small);
    // N can differ between runs of a trace-free config only through pruning.
    if (!runs.empty()) {
        double n = 0;
        for (const auto& r : runs) n += static_cast<double>(r.n);
        s.n = static_cast<std::size_t>(std::llround(n / static_cast<double>(runs.size())));
    }
    return s;
}

std::vector<SummaryRow> summarize_metrics(const std::vector<MetricsRow>& rows) {
    std::vector<std::vector<MetricsRow>> groups;
    for (const auto& r : rows) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& grp) {
            return grp.front().router == r.router && grp.front().n == r.n && grp.front().f == r.f &&
                   grp.front().tx_count == r.tx_count;
        });
        if (it == groups.end()) groups.push_back({r});
        else it->push_back(r);
    }
    std::vector<SummaryRow> out;
    for (const auto& grp : groups) out.push_back(summarize_rows(grp, {}));
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
    c.validate();
    ExperimentResult out;
    for (std::size_t r = 0; r < c.runs; ++r) out.runs.push_back(run_single(c, r));
    out.summary = summarize(out.runs);
    if (c.output_dir) {
        std::vector<MetricsRow> rows;
        for (const auto& r : out.runs) rows.push_back(r.row);
        write_metrics_csv(rows, *c.output_dir / "metrics.csv");
        write_summary_csv({out.summary}, *c.output_dir / "summary.csv");
    }
    return out;
}

}  // namespace pcn
