#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "pcn/error.hpp"
#include "pcn/topology.hpp"

namespace pcn {

Amount CapacityDist::sample(Rng& rng) const {
    switch (kind) {
        case Kind::Constant:
            return value;
        case Kind::Uniform:
            return std::uniform_int_distribution<Amount>(min, max)(rng);
        case Kind::LogNormal: {
            const double x = median * std::exp(sigma * std::normal_distribution<double>(0.0, 1.0)(rng));
            return std::max<Amount>(0, std::llround(x));
        }
    }
    return 0;
}

CapacityDist CapacityDist::constant(Amount v) {
    if (v < 0) throw std::invalid_argument("negative capacity");
    CapacityDist d;
    d.kind = Kind::Constant;
    d.value = v;
    return d;
}

CapacityDist CapacityDist::uniform(Amount lo, Amount hi) {
    if (lo < 0 || hi < lo) throw std::invalid_argument("bad uniform capacity range");
    CapacityDist d;
    d.kind = Kind::Uniform;
    d.min = lo;
    d.max = hi;
    return d;
}

CapacityDist CapacityDist::lognormal(double median, double sigma) {
    if (!(median > 0) || !(sigma >= 0)) throw std::invalid_argument("bad lognormal capacity parameters");
    CapacityDist d;
    d.kind = Kind::LogNormal;
    d.median = median;
    d.sigma = sigma;
    return d;
}

void assign_balances(ChannelGraph& g, BalancePolicy policy, const CapacityDist& dist, std::uint64_t seed,
                     std::span<const std::pair<Amount, Amount>> trace) {
    if (policy == BalancePolicy::Trace) {
        for (std::size_t i = 0; i < g.channel_slots(); ++i) {
            Channel& c = g.channel(i);
            if (!c.alive) continue;
            if (i >= trace.size())
                throw Error("no trace balance for channel " + std::to_string(c.a) + "-" + std::to_string(c.b));
            if (trace[i].first < 0 || trace[i].second < 0) throw Error("negative trace balance");
            c.ab = trace[i].first;
            c.ba = trace[i].second;
        }
        return;
    }
    Rng rng = make_rng(seed, "balances");
    for (std::size_t i = 0; i < g.channel_slots(); ++i) {
        Channel& c = g.channel(i);
        if (!c.alive) continue;
        const Amount cap = dist.sample(rng);
        c.ab = cap / 2;
        c.ba = cap - c.ab;
    }
}

std::vector<std::pair<double, double>> waxman_positions(std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(seed, "waxman.positions");
    std::vector<std::pair<double, double>> pos(n);
    for (auto& p : pos) {
        p.first = uniform01(rng);
        p.second = uniform01(rng);
    }
    return pos;
}

namespace {

double max_pair_distance(const std::vector<std::pair<double, double>>& pos) {
    double l = 0;
    for (std::size_t i = 0; i < pos.size(); ++i)
        for (std::size_t j = i + 1; j < pos.size(); ++j)
            l = std::max(l, std::hypot(pos[i].first - pos[j].first, pos[i].second - pos[j].second));
    return l;
}

}  // namespace

ChannelGraph gen_waxman(std::size_t n, double alpha, double beta, std::uint64_t seed, const CapacityDist& dist) {
    if (n < 2) throw std::invalid_argument("waxman: need at least 2 nodes");
    if (!(alpha > 0 && alpha <= 1) || !(beta > 0 && beta <= 1))
        throw std::invalid_argument("waxman: alpha and beta must lie in (0,1]");
    const auto pos = waxman_positions(n, seed);
    const double l = max_pair_distance(pos);
    Rng rng = make_rng(seed, "waxman.edges");
    ChannelGraph g(n);
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j) {
            const double d = std::hypot(pos[i].first - pos[j].first, pos[i].second - pos[j].second);
            const double p = beta * std::exp(-d / (l * alpha));
            if (uniform01(rng) < p) g.add_channel(i, j);
        }
    assign_balances(g, BalancePolicy::EvenSplit, dist, seed);
    return g;
}

double waxman_beta_for_degree(std::size_t n, double alpha, double target_degree, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("waxman: need at least 2 nodes");
    if (!(target_degree > 0)) throw std::invalid_argument("waxman: target degree must be positive");
    const auto pos = waxman_positions(n, seed);
    const double l = max_pair_distance(pos);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            sum += std::exp(-std::hypot(pos[i].first - pos[j].first, pos[i].second - pos[j].second) / (l * alpha));
    const double degree_at_one = 2.0 * sum / static_cast<double>(n);
    return std::min(1.0, target_degree / degree_at_one);
}

ChannelGraph gen_scale_free(std::size_t n, std::size_t m, std::uint64_t seed, const CapacityDist& dist) {
    if (m < 1 || n <= m) throw std::invalid_argument("scale-free: need n > m >= 1");
    ChannelGraph g(n);
    // Each endpoint appears once per incident edge, so uniform draws from
    // `ends` are degree-proportional.
    std::vector<NodeId> ends;
    const std::size_t m0 = m + 1;
    for (NodeId i = 0; i < m0; ++i)
        for (NodeId j = i + 1; j < m0; ++j) {
            g.add_channel(i, j);
            ends.push_back(i);
            ends.push_back(j);
        }
    Rng rng = make_rng(seed, "scalefree");
    std::vector<NodeId> targets;
    for (NodeId v = static_cast<NodeId>(m0); v < n; ++v) {
        targets.clear();
        std::uniform_int_distribution<std::size_t> pick(0, ends.size() - 1);
        while (targets.size() < m) {
            const NodeId t = ends[pick(rng)];
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
        }
        for (NodeId t : targets) {
            g.add_channel(v, t);
            ends.push_back(v);
            ends.push_back(t);
        }
    }
    assign_balances(g, BalancePolicy::EvenSplit, dist, seed);
    return g;
}

ChannelGraph gen_random_regular(std::size_t n, std::size_t k, std::uint64_t seed, const CapacityDist& dist) {
    if (k >= n || (n * k) % 2 != 0) throw std::invalid_argument("random regular: need k < n and n*k even");
    Rng rng = make_rng(seed, "regular");
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<NodeId> stubs;
        for (NodeId u = 0; u < n; ++u)
            for (std::size_t i = 0; i < k; ++i) stubs.push_back(u);
        std::unordered_set<std::uint64_t> edges;
        std::vector<std::pair<NodeId, NodeId>> list;
        bool stuck = false;
        while (!stubs.empty() && !stuck) {
            bool placed = false;
            for (int tries = 0; tries < 200 && !placed; ++tries) {
                std::uniform_int_distribution<std::size_t> pick(0, stubs.size() - 1);
                const std::size_t i = pick(rng), j = pick(rng);
                NodeId a = stubs[i], b = stubs[j];
                if (i == j || a == b) continue;
                if (a > b) std::swap(a, b);
                const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
                if (!edges.insert(key).second) continue;
                list.emplace_back(a, b);
                // Remove the larger index first so the smaller stays valid.
                for (std::size_t idx : {std::max(i, j), std::min(i, j)}) {
                    stubs[idx] = stubs.back();
                    stubs.pop_back();
                }
                placed = true;
            }
            stuck = !placed;
        }
        if (stuck) continue;
        ChannelGraph g(n);
        for (auto [a, b] : list) g.add_channel(a, b);
        assign_balances(g, BalancePolicy::EvenSplit, dist, seed);
        return g;
    }
    throw Error("random regular: stub matching did not converge");
}

ChannelGraph gen_grid(std::size_t rows, std::size_t cols, const CapacityDist& dist, std::uint64_t seed) {
    if (rows * cols < 2) throw std::invalid_argument("grid: need at least 2 nodes");
    ChannelGraph g(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const auto u = static_cast<NodeId>(r * cols + c);
            if (c + 1 < cols) g.add_channel(u, u + 1);
            if (r + 1 < rows) g.add_channel(u, static_cast<NodeId>(u + cols));
        }
    assign_balances(g, BalancePolicy::EvenSplit, dist, seed);
    return g;
}

CapacityDist capacity_from_json(const nlohmann::json& j) {
    const std::string kind = j.value("kind", "constant");
    if (kind == "constant") return CapacityDist::constant(j.value("value", Amount{0}));
    if (kind == "uniform") return CapacityDist::uniform(j.at("min").get<Amount>(), j.at("max").get<Amount>());
    if (kind == "lognormal") return CapacityDist::lognormal(j.at("median").get<double>(), j.at("sigma").get<double>());
    throw std::invalid_argument("unknown capacity_dist kind '" + kind + "'");
}

nlohmann::json to_json(const CapacityDist& c) {
    switch (c.kind) {
        case CapacityDist::Kind::Constant:
            return {{"kind", "constant"}, {"value", c.value}};
        case CapacityDist::Kind::Uniform:
            return {{"kind", "uniform"}, {"min", c.min}, {"max", c.max}};
        case CapacityDist::Kind::LogNormal:
            return {{"kind", "lognormal"}, {"median", c.median}, {"sigma", c.sigma}};
    }
    return {};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    c.model = j.value("model", c.model);
    c.n = j.value("n", c.n);
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    if (j.contains("mean_degree")) c.mean_degree = j.at("mean_degree").get<double>();
    c.m = j.value("m", c.m);
    c.rows = j.value("rows", c.rows);
    c.cols = j.value("cols", c.cols);
    if (j.contains("capacity_dist")) c.capacity = capacity_from_json(j.at("capacity_dist"));
    c.seed = j.value("seed", c.seed);
    return c;
}

nlohmann::json to_json(const GeneratorConfig& c) {
    nlohmann::json j{{"model", c.model}, {"n", c.n},       {"alpha", c.alpha}, {"beta", c.beta},
                     {"m", c.m},         {"rows", c.rows}, {"cols", c.cols},   {"capacity_dist", to_json(c.capacity)},
                     {"seed", c.seed}};
    if (c.mean_degree) j["mean_degree"] = *c.mean_degree;
    return j;
}

ChannelGraph generate(const GeneratorConfig& c) {
    if (c.model == "waxman") {
        const double beta = c.mean_degree ? waxman_beta_for_degree(c.n, c.alpha, *c.mean_degree, c.seed) : c.beta;
        return gen_waxman(c.n, c.alpha, beta, c.seed, c.capacity);
    }
    if (c.model == "scalefree") return gen_scale_free(c.n, c.m, c.seed, c.capacity);
    if (c.model == "regular") return gen_random_regular(c.n, c.m, c.seed, c.capacity);
    if (c.model == "grid") return gen_grid(c.rows, c.cols, c.capacity, c.seed);
    throw std::invalid_argument("unknown topology model '" + c.model + "'");
}

}  // namespace pcn
