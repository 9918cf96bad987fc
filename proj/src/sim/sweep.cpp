#include <cmath>
#include <cstdio>
#include <fstream>

#include "pcn/sim.hpp"
#include "util/csv.hpp"

namespace pcn {

namespace {

template <class T>
T parse_value(const std::string& axis, const std::string& v) {
    T x{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
        throw std::invalid_argument("sweep: bad value '" + v + "' for " + axis);
    return x;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

constexpr const char* kSummaryHeader =
    "router,N,f,runs,tx_count,success_ratio_mean,success_ratio_std,success_volume_mean,success_volume_std,"
    "probe_msgs_mean,probe_msgs_std,avg_storage_mean,avg_storage_std,anonymity_mean,anonymity_std,"
    "small_success_ratio_mean";

}  // namespace

ExperimentConfig with_axis(ExperimentConfig c, const std::string& axis, const std::string& value) {
    if (axis == "tx_count") c.tx_count = parse_value<std::size_t>(axis, value);
    else if (axis == "dim") c.dim = parse_value<int>(axis, value);
    else if (axis == "router") c.router = router_from_string(value);
    else if (axis == "f") c.attacker_fraction = parse_value<double>(axis, value);
    else if (axis == "split_threshold") c.split_threshold = parse_value<Amount>(axis, value);
    else if (axis == "anchors") c.anchors = parse_value<std::size_t>(axis, value);
    else if (axis == "n" || axis == "mean_degree") {
        if (!c.generator) throw std::invalid_argument("sweep: axis '" + axis + "' needs a generated topology");
        if (axis == "n") c.generator->n = parse_value<std::size_t>(axis, value);
        else c.generator->mean_degree = parse_value<double>(axis, value);
    } else {
        throw std::invalid_argument("sweep: unknown axis '" + axis + "'");
    }
    return c;
}

std::vector<SweepRow> sweep(const ExperimentConfig& base, const std::string& axis,
                            const std::vector<std::string>& values) {
    // Reject a bad axis before running anything.
    for (const auto& v : values) with_axis(base, axis, v);
    std::vector<SweepRow> rows;
    for (const auto& v : values) {
        auto c = with_axis(base, axis, v);
        if (c.output_dir) c.output_dir = *c.output_dir / (axis + "_" + v);
        for (std::size_t r = 0; r < c.runs; ++r) {
            SweepRow row{axis, v, r, std::nullopt, {}};
            try {
                row.result = run_single(c, r);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << "axis,value,run," << kMetricsHeader << ",small_success_ratio,error\n";
    for (const auto& s : rows) {
        out << s.axis << ',' << s.value << ',' << s.run << ',';
        if (s.result) {
            const auto& r = s.result->row;
            out << r.router << ',' << r.n << ',' << fmt(r.f) << ',' << r.tx_count << ',' << fmt(r.success_ratio) << ','
                << r.success_volume << ',' << r.probe_msgs << ',' << fmt(r.avg_storage) << ',' << fmt(r.anonymity)
                << ',' << fmt(s.result->metrics.small_success_ratio) << ",\n";
        } else {
            std::string err = s.error;
            for (auto& ch : err)
                if (ch == ',' || ch == '\n') ch = ';';
            out << ",,,,,,,,,," << err << '\n';
        }
    }
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << kSummaryHeader << '\n';
    for (const auto& s : rows)
        out << s.router << ',' << s.n << ',' << fmt(s.f) << ',' << s.runs << ',' << s.tx_count << ','
            << fmt(s.success_ratio_mean) << ',' << fmt(s.success_ratio_std) << ',' << fmt(s.success_volume_mean) << ','
            << fmt(s.success_volume_std) << ',' << fmt(s.probe_msgs_mean) << ',' << fmt(s.probe_msgs_std) << ','
            << fmt(s.avg_storage_mean) << ',' << fmt(s.avg_storage_std) << ',' << fmt(s.anonymity_mean) << ','
            << fmt(s.anonymity_std) << ',' << fmt(s.small_success_ratio_mean) << '\n';
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& file) {
    std::vector<SummaryRow> rows;
    csv::read(file, kSummaryHeader, [&](const auto& f, std::size_t line, const std::string& name) {
        if (f.size() != 16) throw ParseError(name, line, "expected 16 fields");
        auto d = [&](std::size_t i) {
            // from_chars rejects "nan"; the summary writes it for absent columns.
            if (f[i] == "nan" || f[i] == "-nan") return std::nan("");
            return csv::parse_field<double>(f[i], name, line, "value");
        };
        SummaryRow s;
        s.router = std::string(f[0]);
        s.n = csv::parse_field<std::size_t>(f[1], name, line, "N");
        s.f = d(2);
        s.runs = csv::parse_field<std::size_t>(f[3], name, line, "runs");
        s.tx_count = csv::parse_field<std::size_t>(f[4], name, line, "tx_count");
        s.success_ratio_mean = d(5);
        s.success_ratio_std = d(6);
        s.success_volume_mean = d(7);
        s.success_volume_std = d(8);
        s.probe_msgs_mean = d(9);
        s.probe_msgs_std = d(10);
        s.avg_storage_mean = d(11);
        s.avg_storage_std = d(12);
        s.anonymity_mean = d(13);
        s.anonymity_std = d(14);
        s.small_success_ratio_mean = d(15);
        rows.push_back(std::move(s));
    });
    return rows;
}

}  // namespace pcn
