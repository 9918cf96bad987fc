#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "pcn/analysis.hpp"
#include "util/csv.hpp"

namespace pcn {

std::string to_string(RouterKind k) {
    switch (k) {
        case RouterKind::ShortestPath: return "sp";
        case RouterKind::Landmark: return "landmark";
        case RouterKind::Embedding: return "embedding";
        case RouterKind::WebFlow: return "wf";
        case RouterKind::WebFlowPe: return "wfpe";
    }
    return "unknown";
}

RouterKind router_from_string(const std::string& s) {
    for (auto k : {RouterKind::ShortestPath, RouterKind::Landmark, RouterKind::Embedding, RouterKind::WebFlow,
                   RouterKind::WebFlowPe})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown router '" + s + "' (expected sp|landmark|embedding|wf|wfpe)");
}

namespace {

constexpr const char* kLogHeader =
    "step,trans_id,sub_index,part,parts,sender,receiver,amount,payment_amount,outcome,reason,hops,probes,path";

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

void write_payment_log(std::span<const PaymentLogEntry> log, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << kLogHeader << '\n';
    for (const auto& e : log) {
        out << e.step << ',' << e.trans_id << ',';
        if (e.sub_index) out << *e.sub_index;
        out << ',' << e.part << ',' << e.parts << ',' << e.sender << ',' << e.receiver << ',' << e.amount << ','
            << e.payment_amount << ',' << (e.success ? "success" : "failure") << ',' << to_string(e.reason) << ','
            << (e.path.empty() ? 0 : e.path.size() - 1) << ',' << e.probes << ',';
        for (std::size_t i = 0; i < e.path.size(); ++i) out << (i ? " " : "") << e.path[i];
        out << '\n';
    }
}

std::vector<PaymentLogEntry> read_payment_log(const std::filesystem::path& file) {
    std::vector<PaymentLogEntry> log;
    csv::read(file, kLogHeader, [&](const auto& f, std::size_t line, const std::string& name) {
        if (f.size() != 14) throw ParseError(name, line, "expected 14 fields");
        PaymentLogEntry e;
        e.step = csv::parse_field<std::uint64_t>(f[0], name, line, "step");
        e.trans_id = csv::parse_field<std::uint64_t>(f[1], name, line, "trans_id");
        if (!f[2].empty()) e.sub_index = csv::parse_field<std::uint64_t>(f[2], name, line, "sub_index");
        e.part = csv::parse_field<std::uint32_t>(f[3], name, line, "part");
        e.parts = csv::parse_field<std::uint32_t>(f[4], name, line, "parts");
        e.sender = csv::parse_field<NodeId>(f[5], name, line, "sender");
        e.receiver = csv::parse_field<NodeId>(f[6], name, line, "receiver");
        e.amount = csv::parse_field<Amount>(f[7], name, line, "amount");
        e.payment_amount = csv::parse_field<Amount>(f[8], name, line, "payment_amount");
        if (f[9] != "success" && f[9] != "failure") throw ParseError(name, line, "bad outcome");
        e.success = f[9] == "success";
        try {
            e.reason = failure_from_string(f[10]);
        } catch (const std::invalid_argument& ex) {
            throw ParseError(name, line, ex.what());
        }
        const auto hops = csv::parse_field<std::size_t>(f[11], name, line, "hops");
        e.probes = csv::parse_field<std::size_t>(f[12], name, line, "probes");
        std::string_view p = f[13];
        while (!p.empty()) {
            const auto sp = p.find(' ');
            e.path.push_back(csv::parse_field<NodeId>(p.substr(0, sp), name, line, "path"));
            if (sp == std::string_view::npos) break;
            p.remove_prefix(sp + 1);
        }
        if ((e.path.empty() ? 0 : e.path.size() - 1) != hops) throw ParseError(name, line, "hop count mismatch");
        log.push_back(std::move(e));
    });
    return log;
}

RunMetrics aggregate_log(std::span<const PaymentLogEntry> log, Amount small_threshold) {
    struct Acc {
        Amount amount = 0;
        bool ok = true;
    };
    std::map<std::uint64_t, Acc> payments;
    std::vector<std::uint64_t> order;
    RunMetrics m;
    for (const auto& e : log) {
        auto [it, fresh] = payments.try_emplace(e.trans_id);
        if (fresh) {
            it->second.amount = e.payment_amount;
            order.push_back(e.trans_id);
        }
        it->second.ok = it->second.ok && e.success;
        m.probe_messages += e.probes;
        if (e.success) ++m.path_length_histogram[e.path.size() - 1];
    }
    for (auto id : order) {
        const auto& a = payments.at(id);
        ++m.tx_count;
        m.offered_volume += a.amount;
        const bool small = a.amount <= small_threshold;
        m.small_count += small;
        if (a.ok) {
            ++m.succeeded;
            m.success_volume += a.amount;
            m.small_succeeded += small;
        }
    }
    if (m.tx_count) m.success_ratio = static_cast<double>(m.succeeded) / static_cast<double>(m.tx_count);
    if (m.small_count)
        m.small_success_ratio = static_cast<double>(m.small_succeeded) / static_cast<double>(m.small_count);
    return m;
}

void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << kMetricsHeader << '\n';
    for (const auto& r : rows)
        out << r.router << ',' << r.n << ',' << fmt_double(r.f) << ',' << r.tx_count << ','
            << fmt_double(r.success_ratio) << ',' << r.success_volume << ',' << r.probe_msgs << ','
            << fmt_double(r.avg_storage) << ',' << fmt_double(r.anonymity) << '\n';
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& file) {
    std::vector<MetricsRow> rows;
    csv::read(file, kMetricsHeader, [&](const auto& f, std::size_t line, const std::string& name) {
        if (f.size() != 9) throw ParseError(name, line, "expected 9 fields");
        MetricsRow r;
        r.router = std::string(f[0]);
        r.n = csv::parse_field<std::size_t>(f[1], name, line, "N");
        r.f = csv::parse_field<double>(f[2], name, line, "f");
        r.tx_count = csv::parse_field<std::size_t>(f[3], name, line, "tx_count");
        r.success_ratio = csv::parse_field<double>(f[4], name, line, "success_ratio");
        r.success_volume = csv::parse_field<Amount>(f[5], name, line, "success_volume");
        r.probe_msgs = csv::parse_field<std::size_t>(f[6], name, line, "probe_msgs");
        r.avg_storage = csv::parse_field<double>(f[7], name, line, "avg_storage");
        r.anonymity = csv::parse_field<double>(f[8], name, line, "anonymity");
        rows.push_back(std::move(r));
    });
    return rows;
}

}  // namespace pcn
