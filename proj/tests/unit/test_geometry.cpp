#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "pcn/error.hpp"
#include "pcn/geometry.hpp"

using namespace pcn;
using namespace pcn::geo;

namespace {

VoronoiCell cell_from(const Triangulation& tri, std::uint32_t owner) {
    std::vector<Point> nbrs;
    for (auto j : tri.neighbor_sets[owner]) nbrs.push_back(tri.points[j]);
    return voronoi_cell(tri.points[owner], nbrs, tri.neighbor_sets[owner], owner);
}

// First parameter after `from` where the nearest point to line.at(t) stops being `owner`.
double ownership_exit(const std::vector<Point>& pts, std::uint32_t owner, const DirectionLine& line, double from) {
    const double step = 1e-3, far = 100.0;
    double inside = from;
    for (double t = from + step; t < far; t += step) {
        if (oracle::nearest(pts, line.at(t)) != owner) {
            double lo = inside, hi = t;
            for (int i = 0; i < 80; ++i) {
                const double mid = 0.5 * (lo + hi);
                (oracle::nearest(pts, line.at(mid)) == owner ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
        inside = t;
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace

TEST_CASE("three non-collinear points form one triangle") {
    std::vector<Point> pts{{0, 0}, {1, 0}, {0, 1}};
    const auto tri = delaunay(pts);
    REQUIRE(tri.simplices.size() == 1);
    for (std::uint32_t i = 0; i < 3; ++i) CHECK(tri.neighbor_sets[i].size() == 2);
}

TEST_CASE("cocircular square picks the diagonal avoiding the lowest label") {
    // Raising the lift of point 0 most puts it above the plane of 1,2,3.
    std::vector<Point> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const auto tri = delaunay(pts);
    REQUIRE(tri.simplices.size() == 2);
    CHECK(tri.adjacent(1, 3));
    CHECK_FALSE(tri.adjacent(0, 2));
    CHECK(tri.simplices[0] == std::vector<std::uint32_t>{0, 1, 3});
    CHECK(tri.simplices[1] == std::vector<std::uint32_t>{1, 2, 3});

    // Relabeling flips the choice; the result follows labels, not input order.
    std::vector<std::uint64_t> labels{5, 0, 6, 7};
    const auto relabeled = delaunay(pts, labels);
    CHECK(relabeled.adjacent(0, 2));
}

TEST_CASE("degenerate inputs raise DegeneracyError") {
    std::vector<Point> collinear{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    CHECK_THROWS_AS(delaunay(collinear), DegeneracyError);
    std::vector<Point> dup{{0, 0}, {1, 0}, {0, 1}, {1, 0}};
    CHECK_THROWS_AS(delaunay(dup), DegeneracyError);
    std::vector<Point> few{{0, 0}, {1, 0}};
    CHECK_THROWS_AS(delaunay(few), DegeneracyError);
    std::vector<Point> coplanar{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {2, 3, 0}};
    CHECK_THROWS_AS(delaunay(coplanar), DegeneracyError);
}

TEST_CASE("collinear triple inside a larger 2D set is handled") {
    std::vector<Point> pts{{0, 0}, {1, 0}, {2, 0}, {1, 1}, {1, -1}};
    const auto tri = delaunay(pts);
    for (const auto& s : tri.simplices) CHECK(oracle::circumsphere_violations(pts, s) == 0);
    CHECK(tri.adjacent(1, 3));
    CHECK(tri.adjacent(1, 4));
}

TEST_CASE("random 3D point sets satisfy the empty circumsphere property") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 5; ++rep) {
        const auto pts = oracle::random_points(rng, 50, 3);
        const auto tri = delaunay(pts);
        int violations = 0;
        for (const auto& s : tri.simplices) violations += oracle::circumsphere_violations(pts, s);
        CHECK(violations == 0);
        for (std::uint32_t i = 0; i < pts.size(); ++i)
            for (auto j : tri.neighbor_sets[i]) CHECK(tri.adjacent(j, i));
    }
}

TEST_CASE("integer grids with many cospherical ties stay valid") {
    for (int d = 2; d <= 3; ++d) {
        std::vector<Point> pts;
        const int side = d == 2 ? 6 : 3;
        for (int x = 0; x < side; ++x)
            for (int y = 0; y < side; ++y)
                for (int z = 0; z < (d == 3 ? side : 1); ++z) {
                    Point p(d);
                    p[0] = x;
                    p[1] = y;
                    if (d == 3) p[2] = z;
                    pts.push_back(p);
                }
        const auto tri = delaunay(pts);
        int violations = 0;
        for (const auto& s : tri.simplices) violations += oracle::circumsphere_violations(pts, s);
        CHECK(violations == 0);
    }
}

TEST_CASE("greedy descent over DT adjacency reaches the nearest point") {
    std::mt19937_64 rng(5);
    for (int d = 2; d <= 4; ++d) {
        const auto pts = oracle::random_points(rng, 120, d);
        const auto tri = delaunay(pts);
        for (int trial = 0; trial < 200; ++trial) {
            const Point target = oracle::random_points(rng, 1, d, -0.2, 1.2)[0];
            std::uint32_t cur = static_cast<std::uint32_t>(rng() % pts.size());
            int steps = 0;
            while (true) {
                std::uint32_t next = cur;
                for (auto j : tri.neighbor_sets[cur])
                    if (dist2(pts[j], target) < dist2(pts[next], target)) next = j;
                if (next == cur) break;
                REQUIRE(dist2(pts[next], target) < dist2(pts[cur], target));
                cur = next;
                REQUIRE(++steps < 1000);
            }
            CHECK(cur == oracle::nearest(pts, target));
        }
    }
}

TEST_CASE("local_dt_neighbors") {
    SUBCASE("a single candidate is always a neighbor") {
        std::vector<Point> c{{3, 4}};
        CHECK(local_dt_neighbors(Point{0, 0}, c) == std::vector<std::uint32_t>{0});
    }
    SUBCASE("center inside a triangle sees all three") {
        std::vector<Point> c{{-1, -1}, {2, -1}, {0, 2}};
        CHECK(local_dt_neighbors(Point{0, 0}, c) == std::vector<std::uint32_t>{0, 1, 2});
    }
    SUBCASE("empty candidate list is rejected") {
        CHECK_THROWS_AS(local_dt_neighbors(Point{0, 0}, std::vector<Point>{}), std::invalid_argument);
    }
    SUBCASE("matches the full triangulation restricted to the center") {
        std::mt19937_64 rng(3);
        for (int rep = 0; rep < 10; ++rep) {
            auto pts = oracle::random_points(rng, 21, 3);
            const auto full = delaunay(pts);
            std::vector<Point> cand(pts.begin() + 1, pts.end());
            std::vector<std::uint64_t> labels;
            for (std::uint64_t i = 1; i <= 20; ++i) labels.push_back(i);
            const auto local = local_dt_neighbors(pts[0], cand, 0, labels);
            std::vector<std::uint32_t> expected;
            for (auto j : full.neighbor_sets[0]) expected.push_back(j - 1);
            CHECK(local == expected);
        }
    }
}

TEST_CASE("voronoi_cell") {
    SUBCASE("single bisector") {
        std::vector<Point> n{{2, 0}};
        const auto cell = voronoi_cell(Point{0, 0}, n);
        REQUIRE(cell.halfspaces.size() == 1);
        CHECK(cell.contains(Point{0.999, 5}));
        CHECK_FALSE(cell.contains(Point{1.001, 0}));
        CHECK(cell.halfspaces[0].signed_distance(Point{1, 0}) == doctest::Approx(0.0));
    }
    SUBCASE("four axis neighbors give the unit box") {
        std::vector<Point> n{{2, 0}, {-2, 0}, {0, 2}, {0, -2}};
        const auto cell = voronoi_cell(Point{0, 0}, n);
        CHECK(cell.contains(Point{0.99, -0.99}));
        CHECK(cell.contains(Point{1, 1}));
        CHECK_FALSE(cell.contains(Point{1.01, 0}));
        CHECK_FALSE(cell.contains(Point{0, -1.01}));
    }
    SUBCASE("coincident neighbor is rejected") {
        std::vector<Point> n{{0, 0}};
        CHECK_THROWS_AS(voronoi_cell(Point{0, 0}, n), std::invalid_argument);
    }
    SUBCASE("cell membership agrees with the nearest-point rule") {
        std::mt19937_64 rng(21);
        auto pts = oracle::random_points(rng, 40, 3);
        const auto tri = delaunay(pts);
        const std::uint32_t owner = oracle::nearest(pts, Point{0.5, 0.5, 0.5});
        const auto cell = cell_from(tri, owner);
        std::uniform_real_distribution<double> u(-0.5, 1.5);
        int mismatches = 0;
        for (int s = 0; s < 100000; ++s) {
            Point x{u(rng), u(rng), u(rng)};
            const bool in_cell = cell.contains(x, 0.0);
            const bool nearest_is_owner = oracle::nearest(pts, x) == owner;
            if (in_cell != nearest_is_owner) ++mismatches;
        }
        CHECK(mismatches == 0);
    }
}

TEST_CASE("line_cell_exit") {
    std::vector<Point> n{{2, 0}};
    const auto cell = voronoi_cell(Point{0, 0}, n);
    SUBCASE("exit through the bisector") {
        const auto ex = line_cell_exit(cell, DirectionLine(Point{0, 0}, Point{1, 0}), 0.0);
        CHECK(ex.param == doctest::Approx(1.0));
        REQUIRE(ex.neighbor);
        CHECK(*ex.neighbor == 0u);
    }
    SUBCASE("unbounded direction") {
        const auto ex = line_cell_exit(cell, DirectionLine(Point{0, 0}, Point{-1, 0}), 0.0);
        CHECK_FALSE(ex.bounded());
        CHECK(std::isinf(ex.param));
    }
    SUBCASE("entry outside the cell") {
        CHECK_THROWS_AS(line_cell_exit(cell, DirectionLine(Point{3, 0}, Point{1, 0}), 0.0), std::invalid_argument);
    }
    SUBCASE("ties go to the smaller neighbor id") {
        std::vector<Point> nb{{2, 0}, {0, 2}};
        std::vector<std::uint32_t> ids{9, 4};
        const auto c2 = voronoi_cell(Point{0, 0}, nb, ids);
        const auto ex = line_cell_exit(c2, DirectionLine(Point{0, 0}, Point{1, 1}), 0.0);
        CHECK(*ex.neighbor == 4u);
    }
    SUBCASE("random cells agree with ownership bisection") {
        std::mt19937_64 rng(8);
        for (int d = 2; d <= 3; ++d) {
            for (int rep = 0; rep < 20; ++rep) {
                auto pts = oracle::random_points(rng, 30, d);
                const auto tri = delaunay(pts);
                const std::uint32_t owner = static_cast<std::uint32_t>(rng() % pts.size());
                const auto cell = cell_from(tri, owner);
                Point dir = oracle::random_points(rng, 1, d, -1, 1)[0];
                const DirectionLine line(pts[owner], dir);
                const auto ex = line_cell_exit(cell, line, 0.0);
                const double expected = ownership_exit(pts, owner, line, 0.0);
                if (std::isinf(expected)) {
                    CHECK_FALSE(ex.bounded());
                } else {
                    REQUIRE(ex.bounded());
                    CHECK(std::abs(ex.param - expected) < 1e-7);
                    // The crossed neighbor owns the space just past the exit.
                    CHECK(oracle::nearest(pts, line.at(ex.param + 1e-6)) == *ex.neighbor);
                }
            }
        }
    }
}

TEST_CASE("repeated cell exits walk DT-adjacent owners to the target cell") {
    std::mt19937_64 rng(99);
    for (int d = 2; d <= 4; ++d) {
        for (int rep = 0; rep < 50; ++rep) {
            auto pts = oracle::random_points(rng, 60, d);
            const auto tri = delaunay(pts);
            const std::uint32_t s = static_cast<std::uint32_t>(rng() % pts.size());
            std::uint32_t r = static_cast<std::uint32_t>(rng() % pts.size());
            if (r == s) r = (r + 1) % static_cast<std::uint32_t>(pts.size());
            const DirectionLine line(pts[s], pts[r] - pts[s]);
            std::uint32_t cur = s;
            double t = 0.0;
            bool reached = false;
            for (int step = 0; step < 200; ++step) {
                if (cur == r) {
                    reached = true;
                    break;
                }
                const auto ex = line_cell_exit(cell_from(tri, cur), line, t);
                REQUIRE(ex.bounded());
                CHECK(tri.adjacent(cur, *ex.neighbor));
                cur = *ex.neighbor;
                t = ex.param;
            }
            CHECK(reached);
        }
    }
}
