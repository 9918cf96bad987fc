#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pcn/analysis.hpp"
#include "pcn/coords.hpp"
#include "pcn/proto.hpp"
#include "pcn/sim.hpp"

// Mdt is a std::vector; keep it a handle rather than a Python list.
PYBIND11_MAKE_OPAQUE(pcn::Mdt)

namespace py = pybind11;
using namespace pcn;

namespace {

std::vector<Point> to_points(const std::vector<std::vector<double>>& rows) {
    std::vector<Point> out;
    for (const auto& r : rows) {
        if (r.size() < 2 || r.size() > static_cast<std::size_t>(kMaxDim))
            throw std::invalid_argument("coordinates must have 2 to 4 components");
        Point p(static_cast<int>(r.size()));
        for (std::size_t i = 0; i < r.size(); ++i) p[static_cast<int>(i)] = r[i];
        out.push_back(p);
    }
    return out;
}

std::vector<std::vector<double>> from_points(const std::vector<Point>& pts) {
    std::vector<std::vector<double>> out;
    for (const auto& p : pts) out.emplace_back(p.data(), p.data() + p.dim());
    return out;
}

py::dict route_dict(const RouteResult& r) {
    py::dict d;
    d["success"] = r.success;
    d["reason"] = std::string(to_string(r.reason));
    d["path"] = r.path;
    d["probes"] = r.probe_messages;
    d["delivered"] = r.delivered;
    return d;
}

py::dict metrics_dict(const MetricsRow& r) {
    py::dict d;
    d["router"] = r.router;
    d["N"] = r.n;
    d["f"] = r.f;
    d["tx_count"] = r.tx_count;
    d["success_ratio"] = r.success_ratio;
    d["success_volume"] = r.success_volume;
    d["probe_msgs"] = r.probe_msgs;
    d["avg_storage"] = r.avg_storage;
    d["anonymity"] = r.anonymity;
    return d;
}

Payment payment(NodeId s, NodeId r, Amount amount, std::uint64_t tid) {
    if (amount <= 0) throw std::invalid_argument("amount must be positive");
    return Payment{tid, s, r, amount, std::nullopt};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Payment channel network routing core";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    py::class_<ChannelGraph>(m, "Graph")
        .def(py::init<std::size_t>(), py::arg("n"))
        .def("add_channel", &ChannelGraph::add_channel, py::arg("a"), py::arg("b"), py::arg("ab") = 0,
             py::arg("ba") = 0)
        .def_property_readonly("node_count", &ChannelGraph::node_count)
        .def_property_readonly("channel_count", &ChannelGraph::channel_count)
        .def("balance", &ChannelGraph::balance)
        .def("neighbors", &ChannelGraph::neighbors)
        .def("total_balance", &ChannelGraph::total_balance)
        .def("is_connected", &ChannelGraph::is_connected)
        .def("channels", [](const ChannelGraph& g) {
            std::vector<std::tuple<NodeId, NodeId, Amount, Amount>> out;
            for (std::size_t i = 0; i < g.channel_slots(); ++i) {
                const auto& c = g.channel(i);
                if (c.alive) out.emplace_back(c.a, c.b, c.ab, c.ba);
            }
            return out;
        })
        .def("copy", [](const ChannelGraph& g) { return ChannelGraph(g); });

    m.def("_generate", [](const std::string& json) { return generate(generator_config_from_json(nlohmann::json::parse(json))); });
    m.def("read_topology_csv", &read_topology_csv);
    m.def("write_topology_csv", &write_topology_csv);
    m.def("largest_component", [](const ChannelGraph& g) {
        auto r = largest_component(g);
        return std::make_pair(std::move(r.graph), std::move(r.old_ids));
    });

    m.def(
        "assign_coordinates",
        [](const ChannelGraph& g, int dim, std::size_t anchors, double jitter, std::uint64_t seed) {
            return from_points(assign_coordinates(g, CoordConfig{dim, anchors, jitter}, seed).coords);
        },
        py::arg("graph"), py::arg("dim") = 3, py::arg("anchors") = 0, py::arg("jitter") = 0.01, py::arg("seed"));
    m.def("svd_spectrum", [](const ChannelGraph& g) { return svd_spectrum(hop_matrix(g)); });

    py::class_<Mdt>(m, "Mdt")
        .def("__len__", [](const Mdt& mdt) { return mdt.size(); })
        .def("storage", [](const Mdt& mdt, NodeId u) { return mdt.at(u).storage(); })
        .def("dt_neighbors", [](const Mdt& mdt, NodeId u) {
            std::vector<NodeId> out;
            for (const auto& [v, p] : mdt.at(u).dt) out.push_back(v);
            return out;
        });
    m.def("build_mdt", [](const ChannelGraph& g, const std::vector<std::vector<double>>& coords) {
        const auto pts = to_points(coords);
        if (pts.size() != g.node_count()) throw std::invalid_argument("one coordinate per node required");
        return build_mdt(g, pts);
    });

    m.def(
        "route_mdt",
        [](const Mdt& mdt, ChannelGraph& g, NodeId s, NodeId r, Amount amount, std::uint64_t tid) {
            return route_dict(route_mdt(mdt, g, payment(s, r, amount, tid)));
        },
        py::arg("mdt"), py::arg("graph"), py::arg("sender"), py::arg("receiver"), py::arg("amount"),
        py::arg("trans_id") = 0);
    m.def(
        "route_pe",
        [](const Mdt& mdt, ChannelGraph& g, NodeId s, NodeId r, Amount amount, std::uint64_t seed, std::uint64_t tid) {
            const auto p = payment(s, r, amount, tid);
            return route_dict(route_pe(mdt, g, p, payment_secret(p, seed), stream_seed(seed, "line", tid)));
        },
        py::arg("mdt"), py::arg("graph"), py::arg("sender"), py::arg("receiver"), py::arg("amount"), py::arg("seed"),
        py::arg("trans_id") = 0);

    m.def("entropy_ratio", [](const std::vector<double>& p) { return entropy_ratio(p); });
    m.def("path_avoid_prob", [](double n, double f, double l) -> std::optional<double> {
        const auto a = path_avoid_prob(n, f, l);
        if (!a.defined) return std::nullopt;
        return a.value;
    });
    m.def(
        "anonymity_mdt", [](double n, double f, double l, double rho) { return anonymity_mdt({n, f, l, rho, 0}); },
        py::arg("n"), py::arg("f"), py::arg("l"), py::arg("rho"));
    m.def(
        "anonymity_pe",
        [](double n, double f, double l, double rho, unsigned k) { return anonymity_pe({n, f, l, rho, k}); },
        py::arg("n"), py::arg("f"), py::arg("l"), py::arg("rho"), py::arg("k_colluders") = 0);

    m.def("_run_experiment", [](const std::string& json) {
        const auto c = experiment_config_from_json(nlohmann::json::parse(json));
        ExperimentResult r;
        {
            py::gil_scoped_release release;
            r = run_experiment(c);
        }
        py::list runs;
        for (const auto& run : r.runs) {
            auto d = metrics_dict(run.row);
            d["small_success_ratio"] = run.metrics.small_success_ratio;
            runs.append(d);
        }
        return runs;
    });

    m.def("encode_message", [](const py::dict& d) {
        proto::Message msg;
        msg.trans_id = d["trans_id"].cast<std::uint64_t>();
        const int type = d["type"].cast<int>();
        if (type < 0 || type > static_cast<int>(proto::MsgType::CommitNack))
            throw std::invalid_argument("message type must be 0..5");
        msg.type = static_cast<proto::MsgType>(type);
        msg.scheme = d["scheme"].cast<std::string>() == "pe" ? proto::Scheme::Pe : proto::Scheme::Mdt;
        msg.dim = d["dim"].cast<std::uint8_t>();
        msg.direction = d["direction"].cast<std::vector<double>>();
        msg.capacity = d["capacity"].cast<std::uint64_t>();
        msg.commit = d["commit"].cast<std::uint64_t>();
        const auto b = proto::encode(msg);
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
    });
    m.def("decode_message", [](const py::bytes& b) {
        const std::string s = b;
        const auto msg = proto::decode(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
        py::dict d;
        d["trans_id"] = msg.trans_id;
        d["type"] = static_cast<int>(msg.type);
        d["type_name"] = proto::to_string(msg.type);
        d["scheme"] = msg.scheme == proto::Scheme::Pe ? "pe" : "mdt";
        d["dim"] = msg.dim;
        d["direction"] = msg.direction;
        d["capacity"] = msg.capacity;
        d["commit"] = msg.commit;
        return d;
    });
    py::register_exception<proto::ProtocolError>(m, "ProtocolError", PyExc_ValueError);
}
