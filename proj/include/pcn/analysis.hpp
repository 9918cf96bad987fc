#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcn/mdt.hpp"
#include "pcn/routing.hpp"
#include "pcn/topology.hpp"

namespace pcn {

// ---------------------------------------------------------------------------
// Entropy

/// H(p) / log2 N for a distribution over N = probs.size() nodes.
/// Throws std::invalid_argument unless the entries are ≥ 0 and sum to 1 ± 1e-9.
double entropy_ratio(std::span<const double> probs);

/// `count` nodes that each carry probability `p`. Counts may be fractional
/// when they come from averaged parameters.
struct ProbGroup {
    double count = 0;
    double p = 0;
};

/// -Σ count·p·log2 p over the groups, in bits.
double group_entropy_bits(std::span<const ProbGroup> groups);
double group_mass(std::span<const ProbGroup> groups);

// ---------------------------------------------------------------------------
// Closed-form anonymity

struct AvoidProbability {
    double value = 0;
    bool defined = true;  ///< false when N(1-f) < L; value is then 0
};

/// C(N(1-f), L) / C(N, L) via log-gamma.
AvoidProbability path_avoid_prob(double n, double f, double l);

struct AnonymityParams {
    double n = 0;    ///< network size
    double f = 0;    ///< attacker fraction
    double l = 0;    ///< average path length (forwarding nodes)
    double rho = 0;  ///< average neighbourhood size
    /// Colluding attackers on the path for the PE formula; 0 averages over
    /// the binomial count of attackers on an L-node path.
    unsigned k_colluders = 0;
};

struct AnonymityReport {
    double value = 1;
    double avoid = 1;              ///< P
    double compromised = 0;        ///< entropy ratio given an attacker on the path
    double deficit = 0;            ///< 1 - mass of the stated distribution before renormalising
};

AnonymityReport anonymity_mdt_report(const AnonymityParams& a);
AnonymityReport anonymity_pe_report(const AnonymityParams& a);
inline double anonymity_mdt(const AnonymityParams& a) { return anonymity_mdt_report(a).value; }
inline double anonymity_pe(const AnonymityParams& a) { return anonymity_pe_report(a).value; }

/// Receiver distribution seen by colluders under WF-PE, k ≥ 1, before
/// renormalisation. `rho_first`/`rho_last` are the neighbourhood sizes of the
/// first and last colluder (equal for k = 1).
std::vector<ProbGroup> pe_posterior(double n, double l, unsigned k, double rho_first, double rho_last);
/// Receiver distribution seen by a non-final attacker under WF.
std::vector<ProbGroup> mdt_posterior(double n, double attackers, double l, double rho);

// ---------------------------------------------------------------------------
// Run logs and metrics

enum class RouterKind { ShortestPath, Landmark, Embedding, WebFlow, WebFlowPe };
std::string to_string(RouterKind k);
RouterKind router_from_string(const std::string& s);

/// One routed (sub-)payment.
struct PaymentLogEntry {
    std::uint64_t step = 0;  ///< logical clock, one tick per entry
    std::uint64_t trans_id = 0;
    std::optional<std::uint64_t> sub_index;
    std::uint32_t part = 0, parts = 1;
    NodeId sender = 0, receiver = 0;
    Amount amount = 0;          ///< this part
    Amount payment_amount = 0;  ///< the whole payment
    bool success = false;
    Failure reason = Failure::None;
    std::vector<NodeId> path;
    std::size_t probes = 0;
};

void write_payment_log(std::span<const PaymentLogEntry> log, const std::filesystem::path& file);
std::vector<PaymentLogEntry> read_payment_log(const std::filesystem::path& file);

struct RunMetrics {
    std::size_t tx_count = 0;
    std::size_t succeeded = 0;
    double success_ratio = 1;  ///< 1 by convention when there are no payments
    Amount offered_volume = 0;
    Amount success_volume = 0;
    std::size_t probe_messages = 0;
    double avg_storage = 0;
    /// Payments at or below the split threshold.
    std::size_t small_count = 0;
    std::size_t small_succeeded = 0;
    double small_success_ratio = 1;
    std::map<std::size_t, std::size_t> path_length_histogram;  ///< hops → successful parts
};

/// Aggregates a log; a payment succeeds when every one of its parts did.
RunMetrics aggregate_log(std::span<const PaymentLogEntry> log, Amount small_threshold);

struct MetricsRow {
    std::string router;
    std::size_t n = 0;
    double f = 0;
    std::size_t tx_count = 0;
    double success_ratio = 0;
    Amount success_volume = 0;
    std::size_t probe_msgs = 0;
    double avg_storage = 0;
    double anonymity = 1;
};

inline constexpr const char* kMetricsHeader =
    "router,N,f,tx_count,success_ratio,success_volume,probe_msgs,avg_storage,anonymity";

void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& file);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& file);

// ---------------------------------------------------------------------------
// Empirical anonymity

struct EmpiricalContext {
    RouterKind router = RouterKind::WebFlow;
    std::size_t n = 0;
    /// Neighbourhoods (C_u ∪ N_u) for the WF posteriors; graph neighbours otherwise.
    const Mdt* mdt = nullptr;
    const ChannelGraph* graph = nullptr;
    std::vector<NodeId> landmarks;
};

/// Mean receiver-anonymity entropy ratio over the successful entries of a
/// log, for the given attacker set (attacker[u] true when u is malicious).
double empirical_anonymity(std::span<const PaymentLogEntry> log, const std::vector<bool>& attacker,
                           const EmpiricalContext& ctx);

/// Mean hop count and mean neighbourhood size observed in a run, the inputs
/// the closed forms need.
double mean_hops(std::span<const PaymentLogEntry> log);
double mean_neighbourhood(const EmpiricalContext& ctx);

}  // namespace pcn
