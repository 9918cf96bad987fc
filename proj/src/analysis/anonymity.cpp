#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "pcn/analysis.hpp"

namespace pcn {

double entropy_ratio(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("entropy_ratio: empty distribution");
    double sum = 0, h = 0;
    for (double p : probs) {
        if (!(p >= 0) || !std::isfinite(p)) throw std::invalid_argument("entropy_ratio: negative probability");
        sum += p;
        if (p > 0) h -= p * std::log2(p);
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("entropy_ratio: probabilities do not sum to 1");
    if (probs.size() == 1) return 1.0;
    return h / std::log2(static_cast<double>(probs.size()));
}

double group_entropy_bits(std::span<const ProbGroup> groups) {
    double h = 0;
    for (const auto& g : groups)
        if (g.count > 0 && g.p > 0) h -= g.count * g.p * std::log2(g.p);
    return h;
}

double group_mass(std::span<const ProbGroup> groups) {
    double m = 0;
    for (const auto& g : groups) m += g.count * g.p;
    return m;
}

AvoidProbability path_avoid_prob(double n, double f, double l) {
    if (!(n > 0) || f < 0 || f >= 1 || l < 0) throw std::invalid_argument("path_avoid_prob: parameters out of range");
    const double honest = n * (1 - f);
    if (honest < l) return {0.0, false};
    if (f == 0) return {1.0, true};
    // C(a, l) / C(n, l) = Γ(a+1)Γ(n-l+1) / (Γ(a-l+1)Γ(n+1))
    const double lg = std::lgamma(honest + 1) + std::lgamma(n - l + 1) - std::lgamma(honest - l + 1) - std::lgamma(n + 1);
    return {std::exp(lg), true};
}

std::vector<ProbGroup> mdt_posterior(double n, double attackers, double l, double rho) {
    const double others = n - attackers - rho;
    if (!(l * rho >= 1) || !(others > 0)) throw std::invalid_argument("mdt_posterior: parameters out of domain");
    return {{rho, 1.0 / (l * rho)}, {others, (1.0 - 1.0 / l) / others}};
}

std::vector<ProbGroup> pe_posterior(double n, double l, unsigned k, double rho_first, double rho_last) {
    if (k == 0) throw std::invalid_argument("pe_posterior: needs at least one attacker");
    if (k == 1) {
        // The attacker guesses its next hop; its other neighbours are ruled out.
        const double others = n - rho_first - 1;
        if (!(l >= 1) || !(others > 0)) throw std::invalid_argument("pe_posterior: parameters out of domain");
        return {{1, 1.0 / l}, {others, (1.0 - 1.0 / l) / others}};
    }
    const double span = l - (static_cast<double>(k) - 2);
    const double others = n - rho_first - rho_last - 2;
    if (!(span >= 1) || !(others > 0)) throw std::invalid_argument("pe_posterior: parameters out of domain");
    const double b = 1.0 / span;
    return {{2, b}, {others, (1.0 - b) / others}};
}

namespace {

void check(const AnonymityParams& a) {
    if (!(a.n > 1) || a.f < 0 || a.f >= 1 || !(a.l >= 1) || a.rho < 0)
        throw std::invalid_argument("anonymity: parameters out of domain");
}

/// Entropy ratio of a stated distribution after renormalising; records the deficit.
double normalised_ratio(std::vector<ProbGroup> groups, double n, double& deficit) {
    const double mass = group_mass(groups);
    deficit = 1.0 - mass;
    for (auto& g : groups) g.p /= mass;
    return group_entropy_bits(groups) / std::log2(n);
}

}  // namespace

AnonymityReport anonymity_mdt_report(const AnonymityParams& a) {
    check(a);
    AnonymityReport r;
    const auto avoid = path_avoid_prob(a.n, a.f, a.l);
    r.avoid = avoid.value;
    if (a.f == 0) {
        r.value = 1;
        r.compromised = 1;
        return r;
    }
    // With probability 1/L the attacker is the last forwarder and learns the
    // receiver outright; otherwise it favours its own neighbourhood.
    const double ratio = normalised_ratio(mdt_posterior(a.n, a.n * a.f, a.l, a.rho), a.n, r.deficit);
    r.compromised = (1.0 - 1.0 / a.l) * ratio;
    r.value = (1.0 - r.avoid) * r.compromised + r.avoid;
    return r;
}

AnonymityReport anonymity_pe_report(const AnonymityParams& a) {
    check(a);
    AnonymityReport r;
    r.avoid = path_avoid_prob(a.n, a.f, a.l).value;
    if (a.f == 0) {
        r.value = 1;
        r.compromised = 1;
        return r;
    }
    std::vector<std::pair<unsigned, double>> weights;
    if (a.k_colluders > 0) {
        weights.emplace_back(a.k_colluders, 1.0);
    } else {
        // Binomial number of attackers among round(L) forwarders, given at least one.
        const unsigned len = std::max(1u, static_cast<unsigned>(std::lround(a.l)));
        double total = 0;
        for (unsigned k = 1; k <= len; ++k) {
            const double w = std::exp(std::lgamma(len + 1.0) - std::lgamma(k + 1.0) - std::lgamma(len - k + 1.0) +
                                      k * std::log(a.f) + (len - k) * std::log1p(-a.f));
            weights.emplace_back(k, w);
            total += w;
        }
        for (auto& [k, w] : weights) w /= total;
    }
    r.compromised = 0;
    r.deficit = 0;
    for (const auto& [k, w] : weights) {
        double deficit = 0;
        r.compromised += w * normalised_ratio(pe_posterior(a.n, a.l, k, a.rho, a.rho), a.n, deficit);
        r.deficit += w * deficit;
    }
    r.value = (1.0 - r.avoid) * r.compromised + r.avoid;
    return r;
}

double mean_hops(std::span<const PaymentLogEntry> log) {
    double total = 0;
    std::size_t n = 0;
    for (const auto& e : log)
        if (e.success && e.path.size() >= 2) {
            total += static_cast<double>(e.path.size() - 1);
            ++n;
        }
    return n ? total / static_cast<double>(n) : 0.0;
}

namespace {

std::size_t neighbourhood(const EmpiricalContext& ctx, NodeId u) {
    if (ctx.mdt && u < ctx.mdt->size()) return (*ctx.mdt)[u].storage();
    if (ctx.graph) return ctx.graph->degree(u);
    return 0;
}

}  // namespace

double mean_neighbourhood(const EmpiricalContext& ctx) {
    if (ctx.n == 0) return 0;
    double total = 0;
    for (NodeId u = 0; u < ctx.n; ++u) total += static_cast<double>(neighbourhood(ctx, u));
    return total / static_cast<double>(ctx.n);
}

double empirical_anonymity(std::span<const PaymentLogEntry> log, const std::vector<bool>& attacker,
                           const EmpiricalContext& ctx) {
    if (attacker.size() != ctx.n) throw std::invalid_argument("empirical_anonymity: attacker mask size mismatch");
    const double n = static_cast<double>(ctx.n);
    const double attackers = static_cast<double>(std::count(attacker.begin(), attacker.end(), true));
    const double l = std::max(1.0, mean_hops(log));
    bool landmark_lost = false;
    for (NodeId lm : ctx.landmarks) landmark_lost = landmark_lost || attacker.at(lm);

    double total = 0;
    std::size_t count = 0;
    for (const auto& e : log) {
        if (!e.success || e.path.size() < 2) continue;
        ++count;
        // Forwarders: every node that hands the payment on.
        std::vector<NodeId> on_path;
        std::set<NodeId> distinct;
        for (std::size_t i = 0; i + 1 < e.path.size(); ++i)
            if (attacker[e.path[i]] && distinct.insert(e.path[i]).second) on_path.push_back(e.path[i]);

        if (ctx.router == RouterKind::Landmark && landmark_lost) continue;  // contributes 0
        if (on_path.empty()) {
            total += 1;
            continue;
        }
        double deficit = 0;
        switch (ctx.router) {
            case RouterKind::ShortestPath:
            case RouterKind::Landmark:
            case RouterKind::Embedding:
                break;  // a forwarder on the path learns the receiver
            case RouterKind::WebFlow: {
                // Each attacker guesses alone; the final forwarder knows the receiver.
                const NodeId last = e.path[e.path.size() - 2];
                double sum = 0;
                for (NodeId a : on_path) {
                    if (a == last) continue;
                    const double rho = static_cast<double>(neighbourhood(ctx, a));
                    sum += normalised_ratio(mdt_posterior(n, attackers, l, rho), n, deficit);
                }
                total += sum / static_cast<double>(on_path.size());
                break;
            }
            case RouterKind::WebFlowPe: {
                const auto k = static_cast<unsigned>(on_path.size());
                const double r1 = static_cast<double>(neighbourhood(ctx, on_path.front()));
                const double rk = static_cast<double>(neighbourhood(ctx, on_path.back()));
                const double span = std::max(1.0, l - (static_cast<double>(k) - 2));
                total += normalised_ratio(pe_posterior(n, k == 1 ? l : span + (k - 2.0), k, r1, rk), n, deficit);
                break;
            }
        }
    }
    return count ? total / static_cast<double>(count) : 1.0;
}

}  // namespace pcn
