#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "pcn/analysis.hpp"
#include "pcn/baselines.hpp"

using namespace pcn;

namespace {

double h_bits(const std::vector<double>& p) {
    double h = 0;
    for (double x : p)
        if (x > 0) h -= x * std::log2(x);
    return h;
}

/// Distribution over n nodes with `heavy` nodes at `p_heavy` and the rest
/// sharing `rest` mass uniformly, written out element by element.
std::vector<double> explicit_dist(std::size_t n, std::size_t heavy, double p_heavy, std::size_t rest_count,
                                  double rest_mass) {
    std::vector<double> p(n, 0.0);
    for (std::size_t i = 0; i < heavy; ++i) p[i] = p_heavy;
    for (std::size_t i = 0; i < rest_count; ++i) p[heavy + i] = rest_mass / static_cast<double>(rest_count);
    return p;
}

std::vector<bool> sample_attackers(std::size_t n, double f, std::mt19937_64& rng) {
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<bool> mask(n, false);
    const auto k = static_cast<std::size_t>(std::lround(f * static_cast<double>(n)));
    for (std::size_t i = 0; i < k; ++i) mask[ids[i]] = true;
    return mask;
}

PaymentLogEntry entry(std::uint64_t id, std::vector<NodeId> path, bool ok = true) {
    PaymentLogEntry e;
    e.trans_id = id;
    e.sender = path.front();
    e.receiver = path.back();
    e.amount = e.payment_amount = 10;
    e.success = ok;
    e.reason = ok ? Failure::None : Failure::Insufficient;
    e.path = std::move(path);
    e.probes = 1;
    return e;
}

}  // namespace

TEST_CASE("entropy ratio") {
    std::vector<double> u(64, 1.0 / 64);
    CHECK(entropy_ratio(u) == doctest::Approx(1.0));
    std::vector<double> point(64, 0.0);
    point[5] = 1;
    CHECK(entropy_ratio(point) == 0.0);

    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> p(20);
        for (auto& x : p) x = std::exponential_distribution<double>(1.0)(rng);
        const double s = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& x : p) x /= s;
        const double r = entropy_ratio(p);
        CHECK(r < 1.0);
        CHECK(r == doctest::Approx(h_bits(p) / std::log2(20.0)));
        std::shuffle(p.begin(), p.end(), rng);
        CHECK(entropy_ratio(p) == doctest::Approx(r).epsilon(1e-12));
    }
    std::vector<double> bad{0.5, 0.4};
    CHECK_THROWS_AS(entropy_ratio(bad), std::invalid_argument);
    std::vector<double> neg{1.5, -0.5};
    CHECK_THROWS_AS(entropy_ratio(neg), std::invalid_argument);

    // Grouped entropy agrees with the explicit vector.
    const std::vector<ProbGroup> groups{{3, 0.1}, {7, 0.1}};
    CHECK(group_entropy_bits(groups) == doctest::Approx(h_bits(std::vector<double>(10, 0.1))));
    CHECK(group_mass(groups) == doctest::Approx(1.0));
}

TEST_CASE("mixed-knowledge scenarios over 10000 nodes") {
    const std::size_t n = 10000;
    // 10% of payments exposed, 30% narrowed to 50 nodes, 60% hidden.
    const double exposed = entropy_ratio(explicit_dist(n, 1, 1.0, 0, 0));
    const double narrowed = entropy_ratio(explicit_dist(n, 0, 0, 50, 1.0));
    const double hidden = entropy_ratio(std::vector<double>(n, 1.0 / n));
    const double s1 = 0.1 * exposed + 0.3 * narrowed + 0.6 * hidden;
    CHECK(narrowed == doctest::Approx(std::log(50.0) / std::log(10000.0)));
    CHECK(s1 == doctest::Approx(0.6 + 0.3 * std::log(50.0) / std::log(10000.0)).epsilon(1e-12));
    CHECK(std::round(s1 * 1e4) / 1e4 == doctest::Approx(0.7274));
    // The second system only ever exposes 10%.
    const double s2 = 0.1 * exposed + 0.9 * hidden;
    CHECK(std::round(s2 * 1e4) / 1e4 == doctest::Approx(0.9));
    CHECK(s2 > s1);
}

TEST_CASE("path avoidance probability") {
    CHECK(path_avoid_prob(10, 0.1, 3).value == doctest::Approx(84.0 / 120.0));
    CHECK(path_avoid_prob(500, 0.0, 7).value == 1.0);
    const auto undef = path_avoid_prob(10, 0.5, 6);
    CHECK_FALSE(undef.defined);
    CHECK(undef.value == 0.0);
    // Large N stays finite.
    const auto big = path_avoid_prob(10000, 0.05, 8);
    CHECK(big.value == doctest::Approx(std::pow(0.95, 8)).epsilon(0.01));

    for (double f = 0.0; f < 0.5; f += 0.05)
        CHECK(path_avoid_prob(200, f + 0.05, 6).value <= path_avoid_prob(200, f, 6).value);
    for (double l = 1; l < 20; ++l) CHECK(path_avoid_prob(200, 0.1, l + 1).value <= path_avoid_prob(200, 0.1, l).value);

    SUBCASE("Monte-Carlo") {
        std::mt19937_64 rng(50);
        const int n = 50, attackers = 10, l = 5, trials = 1000000;
        std::vector<int> ids(n);
        std::iota(ids.begin(), ids.end(), 0);
        int clean = 0;
        for (int t = 0; t < trials; ++t) {
            // Attackers are ids < 10; a path is l distinct nodes.
            bool hit = false;
            for (int i = 0; i < l; ++i) {
                const int j = std::uniform_int_distribution<int>(i, n - 1)(rng);
                std::swap(ids[i], ids[j]);
                hit = hit || ids[i] < attackers;
            }
            clean += !hit;
        }
        CHECK(path_avoid_prob(n, 0.2, l).value == doctest::Approx(clean / double(trials)).epsilon(0).scale(0).epsilon(0.005));
    }
}

TEST_CASE("closed-form WF anonymity") {
    CHECK(anonymity_mdt({1000, 0, 6, 10}) == 1.0);

    // Independent evaluation with the probabilities written out per node.
    const double n = 1000, f = 0.05, l = 6, rho = 10;
    const auto honest = static_cast<std::size_t>(n * (1 - f));
    const auto p = explicit_dist(1000, 10, 1.0 / (l * rho), honest - 10, 1.0 - 1.0 / l);
    const double avoid = std::exp(std::lgamma(honest + 1.0) + std::lgamma(n - l + 1) - std::lgamma(honest - l + 1) -
                                  std::lgamma(n + 1));
    const double given_attacker = (1.0 / l) * 0.0 + (1.0 - 1.0 / l) * entropy_ratio(p);
    const auto rep = anonymity_mdt_report({n, f, l, rho});
    CHECK(rep.avoid == doctest::Approx(avoid));
    CHECK(rep.deficit == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.value == doctest::Approx((1 - avoid) * given_attacker + avoid));

    // When the path cannot avoid attackers the value is the compromised term alone.
    const auto all = anonymity_mdt_report({20, 0.7, 7, 2});
    CHECK(all.avoid == 0.0);
    CHECK(all.value == doctest::Approx(all.compromised));

    CHECK_THROWS_AS(anonymity_mdt({100, 0.1, 0.5, 1}), std::invalid_argument);
    CHECK_THROWS_AS(anonymity_mdt({100, 0.1, 4, 95}), std::invalid_argument);
}

TEST_CASE("closed-form PE anonymity") {
    CHECK(anonymity_pe({1000, 0, 6, 10}) == 1.0);
    const auto two = pe_posterior(1000, 4, 2, 10, 10);
    REQUIRE(two.size() == 2);
    CHECK(two[0].count == 2);
    CHECK(two[0].p == doctest::Approx(0.25));
    CHECK(two[1].count == 1000 - 2 * 10 - 2);
    const auto one = pe_posterior(1000, 5, 1, 10, 10);
    CHECK(one[0].p == doctest::Approx(0.2));
    CHECK(group_mass(one) == doctest::Approx(1.0));
    CHECK_THROWS_AS(pe_posterior(30, 4, 2, 14, 14), std::invalid_argument);
    CHECK_THROWS_AS(pe_posterior(300, 3, 6, 4, 4), std::invalid_argument);

    // Fixed colluder count: direct evaluation over an explicit vector.
    const double n = 1000, l = 6, rho = 10;
    const auto rep = anonymity_pe_report({n, 0.05, l, rho, 3});
    const double b = 1.0 / (l - 1);
    // The stated masses add up to 1 + b, so the vector is rescaled first.
    auto p = explicit_dist(1000, 2, b, 1000 - 2 * 10 - 2, 1 - b);
    for (auto& x : p) x /= 1 + b;
    CHECK(rep.compromised == doctest::Approx(entropy_ratio(p)));
    CHECK(rep.deficit == doctest::Approx(-b));

    // Averaged over the colluder count the result is a convex combination.
    const auto mix = anonymity_pe_report({n, 0.1, l, rho});
    double lo = 1, hi = 0;
    for (unsigned k = 1; k <= 6; ++k) {
        const double c = anonymity_pe_report({n, 0.1, l, rho, k}).compromised;
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    CHECK(mix.compromised >= lo - 1e-12);
    CHECK(mix.compromised <= hi + 1e-12);

    for (double rho_s : {4.0, 10.0, 20.0})
        for (double l_s : {3.0, 6.0, 10.0})
            for (double f : {0.01, 0.02, 0.05, 0.1, 0.15, 0.2}) {
                const AnonymityParams a{1000, f, l_s, rho_s};
                CHECK(anonymity_pe(a) >= anonymity_mdt(a));
            }
}

TEST_CASE("payment log aggregation and round trip") {
    std::vector<PaymentLogEntry> log;
    CHECK(aggregate_log(log, 100).success_ratio == 1.0);
    CHECK(aggregate_log(log, 100).success_volume == 0);

    auto a = entry(1, {0, 1, 2});
    a.payment_amount = a.amount = 50;
    auto b1 = entry(2, {3, 4});
    b1.payment_amount = 250;
    b1.amount = 125;
    b1.part = 0;
    b1.parts = 2;
    b1.sub_index = 0xfeedfacecafebeefull;
    auto b2 = entry(2, {3, 5, 4}, false);
    b2.payment_amount = 250;
    b2.amount = 125;
    b2.part = 1;
    b2.parts = 2;
    b2.sub_index = 17;
    auto c = entry(3, {6, 7});
    c.payment_amount = c.amount = 400;
    log = {a, b1, b2, c};
    for (std::size_t i = 0; i < log.size(); ++i) log[i].step = i;

    const auto m = aggregate_log(log, 100);
    CHECK(m.tx_count == 3);
    CHECK(m.succeeded == 2);
    CHECK(m.success_ratio == doctest::Approx(2.0 / 3));
    CHECK(m.offered_volume == 700);
    CHECK(m.success_volume == 450);
    CHECK(m.probe_messages == 4);
    CHECK(m.small_count == 1);
    CHECK(m.small_success_ratio == 1.0);
    CHECK(m.path_length_histogram.at(1) == 2);
    CHECK(m.path_length_histogram.at(2) == 1);

    const auto dir = std::filesystem::temp_directory_path() / "pcn_analysis_test";
    std::filesystem::create_directories(dir);
    write_payment_log(log, dir / "log.csv");
    const auto back = read_payment_log(dir / "log.csv");
    REQUIRE(back.size() == log.size());
    for (std::size_t i = 0; i < log.size(); ++i) {
        CHECK(back[i].trans_id == log[i].trans_id);
        CHECK(back[i].sub_index == log[i].sub_index);
        CHECK(back[i].path == log[i].path);
        CHECK(back[i].success == log[i].success);
        CHECK(back[i].reason == log[i].reason);
        CHECK(back[i].amount == log[i].amount);
    }
    const auto m2 = aggregate_log(back, 100);
    CHECK(m2.success_volume == m.success_volume);
    CHECK(m2.path_length_histogram == m.path_length_histogram);

    std::vector<MetricsRow> rows{{"wf", 500, 0.1, 1000, 2.0 / 3, 123456, 789, 17.25, 0.912345678901234}};
    write_metrics_csv(rows, dir / "m.csv");
    const auto mr = read_metrics_csv(dir / "m.csv");
    REQUIRE(mr.size() == 1);
    CHECK(mr[0].router == "wf");
    CHECK(mr[0].success_ratio == rows[0].success_ratio);
    CHECK(mr[0].anonymity == rows[0].anonymity);

    std::ofstream(dir / "bad.csv") << "step,trans_id,sub_index,part,parts,sender,receiver,amount,payment_amount,"
                                      "outcome,reason,hops,probes,path\n0,1,,0,1,0,2,5,5,success,none,3,0,0 1 2\n";
    CHECK_THROWS_AS(read_payment_log(dir / "bad.csv"), ParseError);
    std::filesystem::remove_all(dir);

    for (auto k : {RouterKind::ShortestPath, RouterKind::Landmark, RouterKind::Embedding, RouterKind::WebFlow,
                   RouterKind::WebFlowPe})
        CHECK(router_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(router_from_string("spider"), std::invalid_argument);
}

TEST_CASE("empirical anonymity rules") {
    ChannelGraph g(8);
    for (NodeId u = 0; u + 1 < 8; ++u) g.add_channel(u, u + 1, 100, 100);
    std::vector<PaymentLogEntry> log{entry(1, {0, 1, 2, 3}), entry(2, {4, 5, 6, 7}), entry(3, {0, 1}, false)};
    EmpiricalContext ctx{RouterKind::WebFlow, 8, nullptr, &g, {}};

    CHECK(empirical_anonymity(log, std::vector<bool>(8, false), ctx) == 1.0);

    // Node 2 hands the first payment to its receiver.
    std::vector<bool> last(8, false);
    last[2] = true;
    CHECK(empirical_anonymity(log, last, ctx) == doctest::Approx(0.5));

    // A non-final forwarder keeps a partial posterior.
    std::vector<bool> mid(8, false);
    mid[1] = true;
    const double wf = empirical_anonymity(log, mid, ctx);
    CHECK(wf > 0.5);
    CHECK(wf < 1.0);

    ctx.router = RouterKind::ShortestPath;
    CHECK(empirical_anonymity(log, mid, ctx) == doctest::Approx(0.5));
    ctx.router = RouterKind::Landmark;
    ctx.landmarks = {7};
    std::vector<bool> lm(8, false);
    lm[7] = true;
    CHECK(empirical_anonymity(log, lm, ctx) == 0.0);

    ctx.router = RouterKind::WebFlowPe;
    ctx.landmarks.clear();
    CHECK(empirical_anonymity(log, last, ctx) > 0.5);
    CHECK_THROWS_AS(empirical_anonymity(log, std::vector<bool>(3, false), ctx), std::invalid_argument);
}

TEST_CASE("empirical WF anonymity tracks the closed form on regular graphs") {
    const std::size_t n = 400;
    auto g = gen_random_regular(n, 6, 11, CapacityDist::constant(2'000'000));
    assign_balances(g, BalancePolicy::EvenSplit, CapacityDist::constant(2'000'000), 11);
    const auto coords = assign_coordinates(g, {3, 0, 0.01}, 11).coords;
    const auto mdt = build_mdt(g, coords);
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<NodeId> node(0, n - 1);
    std::vector<PaymentLogEntry> log;
    for (std::uint64_t t = 0; t < 1500; ++t) {
        const NodeId s = node(rng), r = node(rng);
        if (s == r) continue;
        const auto res = route_mdt(mdt, g, Payment{t, s, r, 5, {}});
        REQUIRE(res.success);
        auto e = entry(t, res.path);
        log.push_back(e);
    }
    EmpiricalContext ctx{RouterKind::WebFlow, n, &mdt, &g, {}};
    const double l = mean_hops(log), rho = mean_neighbourhood(ctx);
    for (double f : {0.01, 0.05, 0.1, 0.2}) {
        double emp = 0;
        const int reps = 20;
        for (int rep = 0; rep < reps; ++rep) emp += empirical_anonymity(log, sample_attackers(n, f, rng), ctx);
        emp /= reps;
        const double closed = anonymity_mdt({double(n), f, l, rho});
        INFO("f=" << f << " L=" << l << " rho=" << rho << " emp=" << emp << " closed=" << closed);
        CHECK(std::abs(emp - closed) <= 0.05);
    }
}
