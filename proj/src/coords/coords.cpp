#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <queue>
#include <sstream>

#include "pcn/coords.hpp"
#include "pcn/rng.hpp"
#include "util/csv.hpp"

namespace pcn {
namespace {

constexpr int kMaxIterations = 500;
constexpr double kMinImprovement = 1e-9;
constexpr double kMinStep = 1e-7;
constexpr int kStarts = 8;

struct Descent {
    std::vector<double> x;
    double value;
    bool converged;
};

// Coordinate-wise descent with step halving. Each iteration probes ±step
// along every coordinate, then tries the pattern move that repeats the whole
// iteration's displacement (Hooke–Jeeves). An iteration that moves nothing
// halves the step; the search stops once the step is below kMinStep or an
// iteration at the finest step gains less than kMinImprovement.
Descent coordinate_descent(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                           double step) {
    double fx = f(x);
    for (int it = 0; it < kMaxIterations; ++it) {
        const double before = fx;
        const std::vector<double> start = x;
        for (std::size_t c = 0; c < x.size(); ++c) {
            for (double dir : {1.0, -1.0}) {
                const double old = x[c];
                x[c] = old + dir * step;
                const double fy = f(x);
                if (fy < fx) {
                    fx = fy;
                    break;
                }
                x[c] = old;
            }
        }
        if (fx < before) {
            std::vector<double> y = x;
            for (std::size_t c = 0; c < x.size(); ++c) y[c] += x[c] - start[c];
            const double fy = f(y);
            if (fy < fx) {
                x = std::move(y);
                fx = fy;
            }
            if (before - fx < kMinImprovement * std::max(1.0, fx) && step < kMinStep) break;
        } else {
            if (step < kMinStep) return {std::move(x), fx, true};
            step *= 0.5;
        }
    }
    return {std::move(x), fx, step < 1e3 * kMinStep};
}

std::vector<double> flatten(std::span<const Point> pts) {
    std::vector<double> v;
    for (const Point& p : pts)
        for (int c = 0; c < p.dim(); ++c) v.push_back(p[c]);
    return v;
}

std::vector<Point> unflatten(const std::vector<double>& v, int dim) {
    std::vector<Point> pts(v.size() / static_cast<std::size_t>(dim), Point(dim));
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (int c = 0; c < dim; ++c) pts[i][c] = v[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];
    return pts;
}

double stress_flat(const Eigen::MatrixXd& h, const std::vector<double>& x, int dim) {
    const auto k = static_cast<std::size_t>(h.rows());
    double s = 0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            double d2 = 0;
            for (int c = 0; c < dim; ++c) {
                const double t = x[i * dim + c] - x[j * dim + c];
                d2 += t * t;
            }
            const double r = h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - std::sqrt(d2);
            s += r * r;
        }
    return s;
}

// Levenberg–Marquardt polish of a node solve. Pattern search stalls in the
// long shallow valleys that nearly coplanar anchors create; a few damped
// Gauss–Newton steps finish the job.
void polish(std::span<const Point> anchors, std::span<const double> hops, Descent& d) {
    const int dim = anchors.front().dim();
    const auto m = static_cast<Eigen::Index>(anchors.size());
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(d.x.data(), dim);
    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(m);
        if (jac) jac->resize(m, dim);
        for (Eigen::Index i = 0; i < m; ++i) {
            Eigen::VectorXd diff(dim);
            for (int c = 0; c < dim; ++c) diff(c) = p(c) - anchors[static_cast<std::size_t>(i)][c];
            const double len = diff.norm();
            r(i) = hops[static_cast<std::size_t>(i)] - len;
            if (jac) jac->row(i) = len > 0 ? Eigen::RowVectorXd(-diff.transpose() / len) : Eigen::RowVectorXd::Zero(dim);
        }
    };
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    residuals(x, r, &jac);
    double fx = r.squaredNorm();
    double lambda = 1e-3;
    for (int it = 0; it < 100 && fx > 0; ++it) {
        const Eigen::MatrixXd a = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        Eigen::MatrixXd damped = a;
        damped.diagonal() += lambda * (a.diagonal().array() + 1e-12).matrix();
        const Eigen::VectorXd step = damped.ldlt().solve(-g);
        if (!step.allFinite()) break;
        const Eigen::VectorXd y = x + step;
        Eigen::VectorXd ry;
        residuals(y, ry, nullptr);
        const double fy = ry.squaredNorm();
        if (fy < fx) {
            const bool tiny = fx - fy < 1e-15 * std::max(1.0, fx) && step.norm() < 1e-12;
            x = y;
            fx = fy;
            residuals(x, r, &jac);
            lambda = std::max(lambda / 10, 1e-12);
            if (tiny) break;
        } else {
            lambda *= 10;
            if (lambda > 1e8) break;
        }
    }
    if (fx < d.value) {
        d.x.assign(x.data(), x.data() + dim);
        d.value = fx;
        d.converged = true;
    }
}

}  // namespace

std::vector<NodeId> select_anchors(const ChannelGraph& g, std::size_t k, std::uint64_t seed) {
    if (k > g.node_count()) throw std::invalid_argument("more anchors requested than nodes");
    const auto comp = g.components();
    std::vector<std::size_t> size;
    for (auto c : comp) {
        if (c >= size.size()) size.resize(c + 1, 0);
        ++size[c];
    }
    const auto best = static_cast<std::uint32_t>(std::max_element(size.begin(), size.end()) - size.begin());
    std::vector<NodeId> pool;
    for (NodeId u = 0; u < comp.size(); ++u)
        if (comp[u] == best) pool.push_back(u);
    if (k > pool.size()) throw std::invalid_argument("more anchors requested than nodes in the largest component");
    Rng rng = make_rng(seed, "anchors");
    std::vector<NodeId> out;
    std::sample(pool.begin(), pool.end(), std::back_inserter(out), static_cast<std::ptrdiff_t>(k), rng);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

std::vector<std::uint32_t> bfs_hops(const ChannelGraph& g, NodeId root) {
    std::vector<std::uint32_t> h(g.node_count(), kUnreachable);
    std::queue<NodeId> q;
    h.at(root) = 0;
    q.push(root);
    while (!q.empty()) {
        const NodeId u = q.front();
        q.pop();
        for (const auto& inc : g.incident(u))
            if (h[inc.neighbor] == kUnreachable) {
                h[inc.neighbor] = h[u] + 1;
                q.push(inc.neighbor);
            }
    }
    return h;
}

Eigen::MatrixXd hop_matrix(const ChannelGraph& g) {
    const auto n = static_cast<Eigen::Index>(g.node_count());
    Eigen::MatrixXd m(n, n);
    for (NodeId u = 0; u < g.node_count(); ++u) {
        const auto h = bfs_hops(g, u);
        for (NodeId v = 0; v < g.node_count(); ++v) {
            if (h[v] == kUnreachable) throw Error("hop matrix needs a connected graph");
            m(u, v) = h[v];
        }
    }
    return m;
}

double stress(const Eigen::MatrixXd& hops, std::span<const Point> coords) {
    if (coords.empty()) return 0;
    return stress_flat(hops, flatten(coords), coords.front().dim());
}

MdsResult mds_anchor_coords(const Eigen::MatrixXd& h, int dim, std::uint64_t seed) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension out of range");
    const Eigen::Index k = h.rows();
    if (h.cols() != k) throw std::invalid_argument("hop matrix must be square");
    if (k > 0 && (h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("hop matrix must be symmetric");
    for (Eigen::Index i = 0; i < k; ++i) {
        if (h(i, i) != 0) throw std::invalid_argument("hop matrix must have a zero diagonal");
        for (Eigen::Index j = 0; j < k; ++j)
            if (i != j && !(h(i, j) > 0)) throw std::invalid_argument("off-diagonal hops must be positive");
    }

    // Classical MDS: B = -1/2 J D² J, coordinates from the top eigenpairs.
    const Eigen::MatrixXd d2 = h.cwiseProduct(h);
    const Eigen::MatrixXd j = Eigen::MatrixXd::Identity(k, k) - Eigen::MatrixXd::Constant(k, k, 1.0 / k);
    const Eigen::MatrixXd b = -0.5 * j * d2 * j;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    std::vector<double> x0(static_cast<std::size_t>(k * dim), 0.0);
    for (int c = 0; c < dim && c < k; ++c) {
        const Eigen::Index col = k - 1 - c;  // eigenvalues ascend
        const double lambda = std::max(0.0, es.eigenvalues()(col));
        for (Eigen::Index i = 0; i < k; ++i) x0[i * dim + c] = es.eigenvectors()(i, col) * std::sqrt(lambda);
    }

    const double scale = std::max(1.0, h.maxCoeff());
    auto f = [&](const std::vector<double>& x) { return stress_flat(h, x, dim); };
    Descent best = coordinate_descent(f, x0, scale / 4);
    Rng rng = make_rng(seed, "mds");
    std::uniform_real_distribution<double> u(-scale, scale);
    for (int s = 1; s < kStarts; ++s) {
        std::vector<double> x(x0.size());
        for (double& v : x) v = u(rng);
        Descent r = coordinate_descent(f, std::move(x), scale / 4);
        if (r.value < best.value) best = std::move(r);
    }
    return {unflatten(best.x, dim), best.value};
}

double node_residual(std::span<const Point> anchors, std::span<const double> hops, const Point& x) {
    double s = 0;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const double r = hops[i] - dist(x, anchors[i]);
        s += r * r;
    }
    return s;
}

SolveResult solve_node_coord(std::span<const Point> anchors, std::span<const double> hops, std::uint64_t seed) {
    if (anchors.empty() || anchors.size() != hops.size()) throw std::invalid_argument("anchor/hop count mismatch");
    const int dim = anchors.front().dim();
    auto f = [&](const std::vector<double>& v) {
        Point p(dim);
        for (int c = 0; c < dim; ++c) p[c] = v[static_cast<std::size_t>(c)];
        return node_residual(anchors, hops, p);
    };
    auto as_vec = [&](const Point& p) { return std::vector<double>(p.data(), p.data() + dim); };

    std::size_t best_anchor = 0;
    for (std::size_t i = 1; i < anchors.size(); ++i)
        if (node_residual(anchors, hops, anchors[i]) < node_residual(anchors, hops, anchors[best_anchor]))
            best_anchor = i;
    Point lo = anchors.front(), hi = anchors.front();
    for (const Point& a : anchors)
        for (int c = 0; c < dim; ++c) {
            lo[c] = std::min(lo[c], a[c]);
            hi[c] = std::max(hi[c], a[c]);
        }
    const double reach = std::max(1.0, *std::max_element(hops.begin(), hops.end()));

    Rng rng = make_rng(seed, "solve");
    std::optional<Descent> best;
    bool any_converged = false;
    for (int s = 0; s < kStarts; ++s) {
        std::vector<double> x0;
        if (s == 0) {
            x0 = as_vec(anchors[best_anchor]);
        } else {
            for (int c = 0; c < dim; ++c)
                x0.push_back(std::uniform_real_distribution<double>(lo[c] - reach, hi[c] + reach)(rng));
        }
        Descent r = coordinate_descent(f, std::move(x0), reach / 4);
        polish(anchors, hops, r);
        any_converged = any_converged || r.converged;
        if (!best || r.value < best->value) best = std::move(r);
    }
    SolveResult out{Point(dim), best->value};
    for (int c = 0; c < dim; ++c) out.x[c] = best->x[static_cast<std::size_t>(c)];
    if (!any_converged || !out.x.finite()) throw ConvergenceError("node coordinate solve did not converge", out);
    return out;
}

std::vector<std::uint32_t> join_hops(std::span<const std::vector<std::uint32_t>> neighbor_hops) {
    if (neighbor_hops.empty()) throw std::invalid_argument("join_hops: no neighbours");
    std::vector<std::uint32_t> out = neighbor_hops.front();
    for (const auto& h : neighbor_hops.subspan(1)) {
        if (h.size() != out.size()) throw std::invalid_argument("join_hops: ragged hop vectors");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], h[i]);
    }
    for (auto& v : out)
        if (v != kUnreachable) ++v;
    return out;
}

std::vector<double> svd_spectrum(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("svd_spectrum: square matrix required");
    if (m.size() == 0) return {};
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    std::vector<double> out(sv.data(), sv.data() + sv.size());
    std::sort(out.begin(), out.end(), std::greater<>());
    const double top = out.front();
    if (top > 0)
        for (double& v : out) v /= top;
    return out;
}

Point coordinate_for(const CoordinateAssignment& ca, NodeId node, std::span<const std::uint32_t> hops,
                     const CoordConfig& cfg, std::uint64_t seed) {
    std::vector<double> h(hops.begin(), hops.end());
    for (double v : h)
        if (v == kUnreachable) throw Error("node " + std::to_string(node) + " cannot reach every anchor");
    SolveResult r;
    try {
        r = solve_node_coord(ca.anchor_coords, h, stream_seed(seed, "node.solve", node));
    } catch (const ConvergenceError& e) {
        r = e.best();
    }
    Rng rng = make_rng(seed, "node.jitter", node);
    std::uniform_real_distribution<double> u(-cfg.jitter, cfg.jitter);
    for (int c = 0; c < ca.dim; ++c) r.x[c] += u(rng);
    return r.x;
}

CoordinateAssignment assign_coordinates(const ChannelGraph& g, const CoordConfig& cfg, std::uint64_t seed) {
    if (cfg.dim < 2 || cfg.dim > kMaxDim) throw std::invalid_argument("dimension must be 2, 3 or 4");
    const std::size_t k = cfg.anchors ? cfg.anchors : static_cast<std::size_t>(cfg.dim) + 1;
    if (k < static_cast<std::size_t>(cfg.dim) + 1) throw std::invalid_argument("need at least dim+1 anchors");
    if (!g.is_connected()) throw Error("coordinate assignment needs a connected graph");

    CoordinateAssignment ca;
    ca.dim = cfg.dim;
    ca.anchors = select_anchors(g, k, seed);
    std::vector<std::vector<std::uint32_t>> from_anchor;
    for (NodeId a : ca.anchors) from_anchor.push_back(bfs_hops(g, a));

    Eigen::MatrixXd h(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) h(i, j) = from_anchor[i][ca.anchors[j]];
    const MdsResult mds = mds_anchor_coords(h, cfg.dim, seed);
    ca.anchor_coords = mds.coords;
    ca.anchor_stress = mds.stress;

    ca.coords.assign(g.node_count(), Point(cfg.dim));
    ca.node_anchor_hops.assign(g.node_count(), std::vector<std::uint32_t>(k));
    for (NodeId u = 0; u < g.node_count(); ++u)
        for (std::size_t i = 0; i < k; ++i) ca.node_anchor_hops[u][i] = from_anchor[i][u];
    for (std::size_t i = 0; i < k; ++i) ca.coords[ca.anchors[i]] = ca.anchor_coords[i];
    std::vector<bool> is_anchor(g.node_count(), false);
    for (NodeId a : ca.anchors) is_anchor[a] = true;
    for (NodeId u = 0; u < g.node_count(); ++u)
        if (!is_anchor[u]) ca.coords[u] = coordinate_for(ca, u, ca.node_anchor_hops[u], cfg, seed);
    return ca;
}

void write_coords_csv(std::span<const Point> coords, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    const int dim = coords.empty() ? 3 : coords.front().dim();
    static const char* names[] = {"x", "y", "z", "w"};
    out << "node";
    for (int c = 0; c < dim; ++c) out << ',' << names[c];
    out << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < coords.size(); ++i) {
        out << i;
        for (int c = 0; c < dim; ++c) out << ',' << coords[i][c];
        out << '\n';
    }
}

std::vector<Point> read_coords_csv(const std::filesystem::path& file) {
    std::ifstream probe(file);
    if (!probe) throw Error("cannot open " + file.string());
    std::string header;
    std::getline(probe, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const int dim = static_cast<int>(csv::split(header).size()) - 1;
    if (dim < 2 || dim > kMaxDim) throw ParseError(file.string(), 1, "expected node plus 2 to 4 coordinates");
    std::vector<Point> out;
    csv::read(file, header, [&](const auto& f, std::size_t line, const std::string& name) {
        if (static_cast<int>(f.size()) != dim + 1) throw ParseError(name, line, "wrong field count");
        const auto id = csv::parse_field<std::size_t>(f[0], name, line, "node");
        if (id != out.size()) throw ParseError(name, line, "nodes must be listed densely in order");
        Point p(dim);
        for (int c = 0; c < dim; ++c) p[c] = csv::parse_field<double>(f[static_cast<std::size_t>(c + 1)], name, line, "coordinate");
        out.push_back(p);
    });
    return out;
}

}  // namespace pcn
