// pcnroute: command-line front end for generation, coordinates, experiments
// and the protocol demo.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "pcn/coords.hpp"
#include "pcn/proto.hpp"
#include "pcn/sim.hpp"

namespace fs = std::filesystem;
using namespace pcn;

namespace {

// Runtime failures exit 2; usage errors are CLI11's and exit 1.
struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void print_summary(const std::vector<SummaryRow>& rows) {
    std::printf("%-10s %6s %6s %5s %8s %14s %16s %12s %12s %10s\n", "router", "N", "f", "runs", "tx", "success_ratio",
                "success_volume", "probes", "storage", "anonymity");
    for (const auto& s : rows)
        std::printf("%-10s %6zu %6.3f %5zu %8zu %7.4f±%-6.4f %16.0f %12.1f %12.2f %10.4f\n", s.router.c_str(), s.n, s.f,
                    s.runs, s.tx_count, s.success_ratio_mean, s.success_ratio_std, s.success_volume_mean,
                    s.probe_msgs_mean, s.avg_storage_mean, s.anonymity_mean);
}

ExperimentConfig load_config(const fs::path& file, const std::optional<std::uint64_t>& seed,
                             const std::optional<fs::path>& out) {
    ExperimentConfig c;
    try {
        c = load_experiment_config(file, seed);
    } catch (const std::invalid_argument& e) {
        throw Usage(e.what());
    }
    if (out) c.output_dir = *out;
    if (!c.output_dir) throw Usage("no output directory: pass --out or set \"output_dir\" in the config");
    return c;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Payment channel network routing: generators, coordinates, simulation and protocol demo"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic topology CSV");
    GeneratorConfig gc;
    std::uint64_t gen_seed = 0;
    std::optional<double> mean_degree;
    std::string capacity_json;
    fs::path gen_out;
    gen->add_option("--model", gc.model, "waxman | scalefree | regular | grid")
        ->check(CLI::IsMember({"waxman", "scalefree", "regular", "grid"}));
    gen->add_option("--nodes", gc.n, "Node count")->check(CLI::PositiveNumber);
    gen->add_option("--alpha", gc.alpha, "Waxman alpha");
    gen->add_option("--beta", gc.beta, "Waxman beta");
    gen->add_option("--mean-degree", mean_degree, "Waxman target mean degree (overrides beta)");
    gen->add_option("--m", gc.m, "Scale-free edges per node, or regular degree");
    gen->add_option("--rows", gc.rows, "Grid rows");
    gen->add_option("--cols", gc.cols, "Grid columns");
    gen->add_option("--capacity", capacity_json, R"(Capacity distribution as JSON, e.g. {"kind":"lognormal","median":50000,"sigma":0.5})");
    gen->add_option("--seed", gen_seed, "Random seed")->required();
    gen->add_option("--out", gen_out, "Output topology CSV")->required();

    // coords
    auto* coords = app.add_subcommand("coords", "Assign virtual coordinates to a topology");
    fs::path coords_topo, coords_out;
    CoordConfig cc;
    std::uint64_t coords_seed = 0;
    coords->add_option("--topology", coords_topo, "Topology CSV")->required()->check(CLI::ExistingFile);
    coords->add_option("--dim", cc.dim, "Dimension")->check(CLI::Range(2, 4));
    coords->add_option("--anchors", cc.anchors, "Anchor count (0: dim + 1)");
    coords->add_option("--jitter", cc.jitter, "Tie-breaking jitter in hop units")->check(CLI::NonNegativeNumber);
    coords->add_option("--seed", coords_seed, "Random seed")->required();
    coords->add_option("--out", coords_out, "Output coordinates CSV")->required();

    // svd
    auto* svd = app.add_subcommand("svd", "Print the normalised singular values of the hop-count matrix");
    fs::path svd_topo;
    std::size_t svd_top = 10;
    svd->add_option("--topology", svd_topo, "Topology CSV")->required()->check(CLI::ExistingFile);
    svd->add_option("--top", svd_top, "How many values to print")->check(CLI::PositiveNumber);

    // sim
    auto* sim = app.add_subcommand("sim", "Run an experiment from a JSON config");
    fs::path sim_config;
    std::optional<std::uint64_t> sim_seed;
    std::optional<fs::path> sim_out;
    sim->add_option("--config", sim_config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--seed", sim_seed, "Master seed (overrides the config)");
    sim->add_option("--out", sim_out, "Output directory (overrides the config)");

    // sweep
    auto* sw = app.add_subcommand("sweep", "Run a config once per value of one parameter");
    fs::path sw_config;
    std::optional<std::uint64_t> sw_seed;
    std::optional<fs::path> sw_out;
    std::string sw_axis, sw_values;
    sw->add_option("--config", sw_config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
    sw->add_option("--axis", sw_axis, "tx_count | dim | router | f | split_threshold | anchors | n | mean_degree")
        ->required();
    sw->add_option("--values", sw_values, "Comma-separated values")->required();
    sw->add_option("--seed", sw_seed, "Master seed (overrides the config)");
    sw->add_option("--out", sw_out, "Output directory (overrides the config)");

    // proto-demo
    auto* demo = app.add_subcommand("proto-demo", "Run the message protocol over local TCP sockets");
    proto::TcpDemoOptions dopt;
    std::string scheme = "mdt";
    demo->add_option("--nodes", dopt.nodes, "Node count")->check(CLI::Range(2, 2000));
    demo->add_option("--listen-base-port", dopt.base_port, "Node i listens on 127.0.0.1:(port + i)")
        ->check(CLI::Range(1, 65535));
    demo->add_option("--scheme", scheme, "mdt | pe")->check(CLI::IsMember({"mdt", "pe"}));
    demo->add_option("--payments", dopt.payments, "Payments to replay");
    demo->add_option("--mean-degree", dopt.mean_degree, "Target mean degree")->check(CLI::PositiveNumber);
    demo->add_option("--seed", dopt.seed, "Random seed")->required();

    // report
    auto* report = app.add_subcommand("report", "Summarise metrics CSV files");
    std::vector<fs::path> report_in;
    std::optional<fs::path> report_out;
    report->add_option("inputs", report_in, "metrics.csv files")->required()->check(CLI::ExistingFile);
    report->add_option("--out", report_out, "Write the summary CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*gen) {
            gc.seed = gen_seed;
            gc.mean_degree = mean_degree;
            if (!capacity_json.empty()) {
                const auto j = nlohmann::json::parse(capacity_json, nullptr, false);
                if (j.is_discarded()) throw Usage("--capacity is not valid JSON");
                gc.capacity = capacity_from_json(j);
            }
            if (gc.model == "grid" && (gc.rows == 0 || gc.cols == 0)) throw Usage("grid needs --rows and --cols");
            const auto g = generate(gc);
            if (gen_out.has_parent_path()) fs::create_directories(gen_out.parent_path());
            write_topology_csv(g, gen_out);
            std::printf("wrote %zu nodes, %zu channels to %s\n", g.node_count(), g.channel_count(), gen_out.c_str());
        } else if (*coords) {
            const auto g = read_topology_csv(coords_topo);
            const auto ca = assign_coordinates(g, cc, coords_seed);
            if (coords_out.has_parent_path()) fs::create_directories(coords_out.parent_path());
            write_coords_csv(ca.coords, coords_out);
            std::printf("wrote %zu %dD coordinates to %s\n", ca.coords.size(), cc.dim, coords_out.c_str());
        } else if (*svd) {
            const auto g = read_topology_csv(svd_topo);
            if (!g.is_connected()) throw Error("svd: topology is not connected");
            const auto s = svd_spectrum(hop_matrix(g));
            for (std::size_t i = 0; i < std::min(svd_top, s.size()); ++i) std::printf("%zu %.6f\n", i + 1, s[i]);
        } else if (*sim) {
            const auto c = load_config(sim_config, sim_seed, sim_out);
            const auto r = run_experiment(c);
            print_summary({r.summary});
            std::printf("outputs in %s\n", c.output_dir->c_str());
        } else if (*sw) {
            const auto c = load_config(sw_config, sw_seed, sw_out);
            const auto values = split_list(sw_values);
            if (values.empty()) throw Usage("--values is empty");
            try {
                with_axis(c, sw_axis, values.front());
            } catch (const std::invalid_argument& e) {
                throw Usage(e.what());
            }
            const auto rows = sweep(c, sw_axis, values);
            fs::create_directories(*c.output_dir);
            write_sweep_csv(rows, *c.output_dir / "sweep.csv");
            std::size_t failed = 0;
            for (const auto& r : rows) {
                if (r.result)
                    std::printf("%s=%s run %zu: success_ratio %.4f volume %lld\n", sw_axis.c_str(), r.value.c_str(),
                                r.run, r.result->row.success_ratio, static_cast<long long>(r.result->row.success_volume));
                else
                    std::printf("%s=%s run %zu: error: %s\n", sw_axis.c_str(), r.value.c_str(), r.run, r.error.c_str()),
                        ++failed;
            }
            std::printf("wrote %s\n", (*c.output_dir / "sweep.csv").c_str());
            if (failed == rows.size()) return 2;
        } else if (*demo) {
            dopt.scheme = scheme == "pe" ? proto::Scheme::Pe : proto::Scheme::Mdt;
            const auto r = proto::run_tcp_demo(dopt);
            std::printf("payments %zu, delivered %zu, identical to in-memory engine %zu/%zu, balances %s\n", r.payments,
                        r.succeeded, r.matches_sim, r.payments, r.balances_match ? "match" : "DIFFER");
            std::printf("total funds %lld -> %lld, %zu messages\n", static_cast<long long>(r.initial_total),
                        static_cast<long long>(r.final_total), r.messages);
            if (r.matches_sim != r.payments || !r.balances_match || r.initial_total != r.final_total) return 2;
        } else if (*report) {
            std::vector<MetricsRow> rows;
            for (const auto& f : report_in) {
                auto part = read_metrics_csv(f);
                rows.insert(rows.end(), part.begin(), part.end());
            }
            const auto summary = summarize_metrics(rows);
            print_summary(summary);
            if (report_out) {
                if (report_out->has_parent_path()) fs::create_directories(report_out->parent_path());
                write_summary_csv(summary, *report_out);
            }
        }
    } catch (const Usage& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
