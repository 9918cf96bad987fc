#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "pcn/sim.hpp"

using namespace pcn;

namespace {

ExperimentConfig small_config(RouterKind router, std::size_t tx = 200) {
    ExperimentConfig c;
    GeneratorConfig g;
    g.model = "waxman";
    g.n = 80;
    g.mean_degree = 6;
    g.capacity = CapacityDist::lognormal(50000, 0.5);
    c.generator = g;
    c.router = router;
    c.tx_count = tx;
    c.seed = 21;
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

const RouterKind kAll[] = {RouterKind::ShortestPath, RouterKind::Landmark, RouterKind::Embedding,
                           RouterKind::WebFlow, RouterKind::WebFlowPe};

}  // namespace

TEST_CASE("config parsing") {
    const auto j = nlohmann::json::parse(R"({
        "topology": {"model": "waxman", "n": 120, "mean_degree": 7,
                     "capacity_dist": {"kind": "uniform", "min": 10, "max": 20}},
        "dim": 2, "router": "wfpe", "split_threshold": 500, "tx_count": 30, "f": 0.1,
        "workload": {"amount": {"kind": "constant", "value": 40}},
        "seed": 9, "runs": 3, "output_dir": "out"})");
    const auto c = experiment_config_from_json(j);
    CHECK(c.generator->n == 120);
    CHECK(*c.generator->mean_degree == 7);
    CHECK(c.dim == 2);
    CHECK(c.router == RouterKind::WebFlowPe);
    CHECK(c.split_threshold == 500);
    CHECK(c.attacker_fraction == 0.1);
    CHECK(c.workload.amount.value == 40);
    CHECK(c.runs == 3);
    const auto back = experiment_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));

    auto missing_seed = j;
    missing_seed.erase("seed");
    CHECK_THROWS_AS(experiment_config_from_json(missing_seed), std::invalid_argument);
    auto typo = j;
    typo["tx_cuont"] = 5;
    CHECK_THROWS_AS(experiment_config_from_json(typo), std::invalid_argument);
    auto both = j;
    both["trace"] = {{"topology", "t.csv"}};
    CHECK_THROWS_AS(experiment_config_from_json(both), std::invalid_argument);
    auto anchors = j;
    anchors["anchors"] = 2;
    CHECK_THROWS_AS(experiment_config_from_json(anchors), std::invalid_argument);
    auto router = j;
    router["router"] = "spider";
    CHECK_THROWS_AS(experiment_config_from_json(router), std::invalid_argument);
}

TEST_CASE("workload generator") {
    WorkloadConfig w;
    w.max_amount = 50'000;
    const auto a = make_workload(30, 500, w, 4);
    const auto b = make_workload(30, 800, w, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].sender != a[i].receiver);
        CHECK(a[i].amount >= 1);
        CHECK(a[i].amount <= 50'000);
        CHECK(a[i].trans_id == i);
        // Longer workloads extend shorter ones.
        CHECK(a[i].sender == b[i].sender);
        CHECK(a[i].amount == b[i].amount);
    }
    // Amounts follow the configured median.
    auto big = make_workload(30, 20000, WorkloadConfig{}, 5);
    std::vector<Amount> amt;
    for (const auto& p : big) amt.push_back(p.amount);
    std::nth_element(amt.begin(), amt.begin() + amt.size() / 2, amt.end());
    CHECK(amt[amt.size() / 2] == doctest::Approx(3000).epsilon(0.06));
}

TEST_CASE("zero transactions still build the structure") {
    for (auto k : kAll) {
        auto c = small_config(k, 0);
        const auto r = run_single(c, 0);
        CHECK(r.metrics.tx_count == 0);
        CHECK(r.metrics.success_ratio == 1.0);
        CHECK(r.metrics.success_volume == 0);
        CHECK(r.metrics.avg_storage > 0);
        CHECK(r.n == 80);
    }
}

TEST_CASE("direct neighbours with ample balance always succeed") {
    auto c = small_config(RouterKind::ShortestPath);
    auto net = build_network(c, 0);
    for (std::size_t i = 0; i < net.graph.channel_slots(); ++i) net.graph.channel(i).ab = net.graph.channel(i).ba = 1000;
    std::vector<Payment> ps;
    for (std::size_t i = 0; i < net.graph.channel_slots(); ++i)
        ps.push_back({i, net.graph.channel(i).a, net.graph.channel(i).b, 10, {}});
    for (auto k : kAll) {
        if (k == RouterKind::WebFlow || k == RouterKind::WebFlowPe) continue;
        auto n2 = net;
        auto router = make_router(k, n2, 0);
        const auto r = run_payments(c, 0, n2, *router, ps);
        CHECK(r.metrics.success_ratio == 1.0);
        CHECK(r.metrics.success_volume == 10 * static_cast<Amount>(ps.size()));
    }
}

TEST_CASE("runs are deterministic and conserve balances") {
    for (auto k : kAll) {
        TempDir a("pcn_sim_a"), b("pcn_sim_b");
        auto c = small_config(k, 300);
        c.attacker_fraction = 0.1;
        c.output_dir = a.path;
        const auto r1 = run_experiment(c);
        c.output_dir = b.path;
        const auto r2 = run_experiment(c);
        CAPTURE(to_string(k));
        CHECK(slurp(a.path / "payments_run0.csv") == slurp(b.path / "payments_run0.csv"));
        CHECK(slurp(a.path / "metrics.csv") == slurp(b.path / "metrics.csv"));
        CHECK(slurp(a.path / "summary.csv") == slurp(b.path / "summary.csv"));
        CHECK(std::filesystem::exists(a.path / "coords_run0.csv") ==
              (k == RouterKind::WebFlow || k == RouterKind::WebFlowPe));
        const auto& run = r1.runs.front();
        CHECK(run.initial_balance == run.final_balance);
        CHECK(r1.summary.success_ratio_mean == r2.summary.success_ratio_mean);

        // The engine never reorders: steps count up and trans ids never go back.
        for (std::size_t i = 0; i < run.log.size(); ++i) {
            CHECK(run.log[i].step == i);
            if (i) CHECK(run.log[i].trans_id >= run.log[i - 1].trans_id);
        }

        // Metrics recomputed from the persisted log match the in-memory ones.
        const auto replay = aggregate_log(read_payment_log(a.path / "payments_run0.csv"), c.split_threshold);
        CHECK(replay.success_ratio == run.metrics.success_ratio);
        CHECK(replay.success_volume == run.metrics.success_volume);
        CHECK(replay.probe_messages == run.metrics.probe_messages);
        CHECK(replay.path_length_histogram == run.metrics.path_length_histogram);
        const auto rows = read_metrics_csv(a.path / "metrics.csv");
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].success_ratio == run.row.success_ratio);
        CHECK(rows[0].anonymity == run.row.anonymity);
    }
}

TEST_CASE("split payments are all-or-nothing") {
    auto c = small_config(RouterKind::WebFlow, 400);
    c.split_threshold = 2000;
    const auto r = run_single(c, 0);
    CHECK(r.initial_balance == r.final_balance);
    std::map<std::uint64_t, std::vector<const PaymentLogEntry*>> by_tx;
    for (const auto& e : r.log) by_tx[e.trans_id].push_back(&e);
    std::size_t multi = 0, failed_multi = 0;
    for (const auto& [id, parts] : by_tx) {
        Amount sum = 0;
        std::size_t ok = 0;
        for (const auto* e : parts) {
            sum += e->amount;
            ok += e->success;
            CHECK(e->amount <= c.split_threshold);
            CHECK(e->parts == parts.size());
        }
        CHECK(sum == parts.front()->payment_amount);
        CHECK((ok == 0 || ok == parts.size()));
        if (parts.size() > 1) {
            ++multi;
            failed_multi += ok == 0;
            CHECK(parts.front()->sub_index.has_value());
        }
    }
    CHECK(multi > 20);
    CHECK(failed_multi > 0);

    // The baselines never split.
    c.router = RouterKind::ShortestPath;
    for (const auto& e : run_single(c, 0).log) CHECK(e.parts == 1);
}

TEST_CASE("one random stream per concern") {
    auto c = small_config(RouterKind::WebFlow, 150);
    const auto wf = run_single(c, 0);
    c.router = RouterKind::ShortestPath;
    const auto sp = run_single(c, 0);
    // Same topology and workload regardless of the router.
    CHECK(build_network(c, 0).graph.total_balance() == wf.initial_balance);
    std::vector<std::pair<NodeId, NodeId>> e1, e2;
    for (const auto& e : wf.log)
        if (e.part == 0) e1.emplace_back(e.sender, e.receiver);
    for (const auto& e : sp.log) e2.emplace_back(e.sender, e.receiver);
    CHECK(e1 == e2);

    // The attacker fraction changes only the anonymity column.
    c.router = RouterKind::WebFlow;
    c.attacker_fraction = 0.2;
    const auto wf_f = run_single(c, 0);
    CHECK(wf_f.metrics.success_volume == wf.metrics.success_volume);
    CHECK(wf_f.log.size() == wf.log.size());
    CHECK(wf_f.row.anonymity < 1.0);
    CHECK(wf.row.anonymity == 1.0);

    // Different runs differ.
    const auto other = run_single(c, 1);
    CHECK(other.initial_balance != wf_f.initial_balance);
}

TEST_CASE("multi-seed summary") {
    auto c = small_config(RouterKind::Embedding, 150);
    c.runs = 5;
    const auto r = run_experiment(c);
    REQUIRE(r.runs.size() == 5);
    CHECK(r.summary.runs == 5);
    double mean = 0;
    for (const auto& run : r.runs) mean += run.metrics.success_ratio;
    CHECK(r.summary.success_ratio_mean == doctest::Approx(mean / 5));
    CHECK(r.summary.success_ratio_std > 0);
    CHECK(r.summary.avg_storage_std > 0);

    TempDir d("pcn_sim_summary");
    write_summary_csv({r.summary}, d.path / "s.csv");
    const auto back = read_summary_csv(d.path / "s.csv");
    REQUIRE(back.size() == 1);
    CHECK(back[0].success_ratio_std == r.summary.success_ratio_std);
    std::vector<MetricsRow> rows;
    for (const auto& run : r.runs) rows.push_back(run.row);
    const auto grouped = summarize_metrics(rows);
    REQUIRE(grouped.size() == 1);
    CHECK(grouped[0].success_ratio_mean == doctest::Approx(r.summary.success_ratio_mean));
}

TEST_CASE("sweep") {
    auto c = small_config(RouterKind::WebFlow, 0);
    c.runs = 2;
    const auto rows = sweep(c, "tx_count", {"50", "100", "200"});
    CHECK(rows.size() == 6);
    for (const auto& r : rows) {
        REQUIRE(r.result.has_value());
        CHECK(r.result->metrics.tx_count == std::stoul(r.value));
    }
    CHECK_THROWS_AS(sweep(c, "colour", {"red"}), std::invalid_argument);

    // A failing value is recorded and the sweep carries on.
    const auto dims = sweep(small_config(RouterKind::WebFlow, 20), "dim", {"7", "2"});
    REQUIRE(dims.size() == 2);
    CHECK_FALSE(dims[0].result.has_value());
    CHECK_FALSE(dims[0].error.empty());
    CHECK(dims[1].result.has_value());

    TempDir d("pcn_sweep");
    write_sweep_csv(dims, d.path / "sweep.csv");
    const auto text = slurp(d.path / "sweep.csv");
    CHECK(text.rfind("axis,value,run,router", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("trace-driven runs") {
    TempDir d("pcn_sim_trace");
    auto g = gen_waxman(60, 0.4, waxman_beta_for_degree(60, 0.4, 6, 3), 3, CapacityDist::uniform(2000, 9000));
    write_topology_csv(g, d.path / "topo.csv");
    std::vector<Payment> ps;
    for (std::uint64_t i = 0; i < 40; ++i)
        ps.push_back({100 + i, static_cast<NodeId>(i % 60), static_cast<NodeId>((i * 7 + 3) % 60), 50, {}});
    write_transactions_csv(ps, d.path / "tx.csv");
    std::ofstream(d.path / "c.json") << R"({"trace": {"topology": "topo.csv", "transactions": "tx.csv"},
                                           "router": "wf", "tx_count": 25, "seed": 1})";
    const auto c = load_experiment_config(d.path / "c.json");
    const auto r = run_single(c, 0);
    CHECK(r.metrics.tx_count == 25);
    CHECK(r.initial_balance == r.final_balance);
    CHECK(r.metrics.success_ratio > 0.5);

    std::ofstream(d.path / "bad.json") << R"({"trace": {"topology": "missing.csv"}, "seed": 1})";
    const auto bad = load_experiment_config(d.path / "bad.json");
    CHECK_THROWS_WITH_AS(run_single(bad, 0), doctest::Contains("topology"), Error);
}
