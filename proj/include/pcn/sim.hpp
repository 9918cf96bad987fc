#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcn/analysis.hpp"
#include "pcn/baselines.hpp"
#include "pcn/coords.hpp"
#include "pcn/mdt.hpp"
#include "pcn/routing.hpp"
#include "pcn/topology.hpp"

namespace pcn {

struct TraceSource {
    std::filesystem::path topology;
    std::optional<std::filesystem::path> transactions;
};

/// Payment amounts for synthetic workloads, clamped to [min, max].
struct WorkloadConfig {
    CapacityDist amount = CapacityDist::lognormal(3000, 2.3);
    Amount min_amount = 1;
    Amount max_amount = 1'000'000;
};

struct ExperimentConfig {
    std::optional<GeneratorConfig> generator;  ///< exactly one of generator / trace
    std::optional<TraceSource> trace;
    int dim = 3;
    std::size_t anchors = 0;  ///< 0 means dim + 1
    double coord_jitter = 0.01;
    RouterKind router = RouterKind::WebFlow;
    Amount split_threshold = 10'000;  ///< 0 disables splitting
    /// Payments counted as "small"; 0 means split_threshold.
    Amount small_threshold = 0;
    std::size_t tx_count = 1000;  ///< for traces: 0 replays every payment
    double attacker_fraction = 0;
    WorkloadConfig workload;
    PeOptions pe;
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    std::optional<std::filesystem::path> output_dir;

    void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::filesystem::path& file,
                                        std::optional<std::uint64_t> seed = std::nullopt);

/// Everything a router needs, built once per run.
struct Network {
    ChannelGraph graph;
    std::vector<Point> coords;  ///< empty for the baselines
    Mdt mdt;
    std::vector<Payment> trace_payments;
};

/// A routing scheme bound to one network instance.
class Router {
public:
    virtual ~Router() = default;
    virtual RouterKind kind() const = 0;
    virtual RouteResult route(ChannelGraph& g, const Payment& p) = 0;
    virtual double storage(const ChannelGraph& g) const = 0;
    /// Nodes whose compromise reveals every route (landmarks); empty otherwise.
    virtual std::vector<NodeId> privileged_nodes() const { return {}; }
};

/// `pe_seed` seeds the WF-PE secrets and line bases.
std::unique_ptr<Router> make_router(RouterKind kind, const Network& net, std::uint64_t pe_seed,
                                    const PeOptions& pe = {});

/// Builds the network for run `run`: topology, then coordinates and MDT for
/// the WF routers.
Network build_network(const ExperimentConfig& c, std::size_t run);

/// Synthetic payments: uniform distinct endpoints, amounts from the workload.
/// Longer workloads extend shorter ones with the same seed.
std::vector<Payment> make_workload(std::size_t n, std::size_t count, const WorkloadConfig& w, std::uint64_t seed);

struct RunResult {
    std::size_t run = 0;
    std::size_t n = 0;
    RunMetrics metrics;
    MetricsRow row;
    std::vector<PaymentLogEntry> log;
    double mean_hops = 0;
    double mean_neighbourhood = 0;
    Amount initial_balance = 0;
    Amount final_balance = 0;
    std::optional<std::filesystem::path> log_file;
};

/// Replays `payments` in order through the router, splitting WF payments
/// above the threshold. Checks balance conservation after every payment.
RunResult run_payments(const ExperimentConfig& c, std::size_t run, Network& net, Router& router,
                       const std::vector<Payment>& payments);

RunResult run_single(const ExperimentConfig& c, std::size_t run);

struct SummaryRow {
    std::string router;
    std::size_t n = 0;
    double f = 0;
    std::size_t runs = 0;
    std::size_t tx_count = 0;
    double success_ratio_mean = 0, success_ratio_std = 0;
    double success_volume_mean = 0, success_volume_std = 0;
    double probe_msgs_mean = 0, probe_msgs_std = 0;
    double avg_storage_mean = 0, avg_storage_std = 0;
    double anonymity_mean = 0, anonymity_std = 0;
    double small_success_ratio_mean = 0;
};

SummaryRow summarize(const std::vector<RunResult>& runs);

struct ExperimentResult {
    std::vector<RunResult> runs;
    SummaryRow summary;
};

/// All runs of a config. With an output directory it writes metrics.csv,
/// summary.csv, payments_run<i>.csv and coords_run<i>.csv.
ExperimentResult run_experiment(const ExperimentConfig& c);

struct SweepRow {
    std::string axis;
    std::string value;
    std::size_t run = 0;
    std::optional<RunResult> result;
    std::string error;  ///< set when the run failed
};

/// One run per value per seed; `axis` is one of tx_count, dim, router, f,
/// n, split_threshold, anchors, mean_degree. Failing runs are recorded and
/// the sweep continues.
std::vector<SweepRow> sweep(const ExperimentConfig& base, const std::string& axis,
                            const std::vector<std::string>& values);
ExperimentConfig with_axis(ExperimentConfig c, const std::string& axis, const std::string& value);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& file);

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& file);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& file);
/// Groups metric rows by (router, N, f) into summary rows.
std::vector<SummaryRow> summarize_metrics(const std::vector<MetricsRow>& rows);

}  // namespace pcn
