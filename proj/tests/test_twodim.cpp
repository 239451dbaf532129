#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "skewlab/rng.hpp"
#include "skewlab/twodim.hpp"

using namespace skewlab;
using namespace skewlab::twodim;
using dyncore::Point2;
using dyncore::SkewMap;

namespace {

SkewMap example_map() {  // (0.5 t, z^2 - 2 + 0.1 t)
    std::vector<Poly> a(3);
    a[0] = Poly{{cnum(-2, 0), cnum(0.1, 0)}};
    a[1] = Poly{{cnum(0, 0)}};
    a[2] = Poly{{cnum(1, 0)}};
    return SkewMap(cnum(0.5, 0), std::move(a), 1.0);
}

SkewMap square_skew() {  // (0.5 t, z^2)
    std::vector<Poly> a(3);
    a[0] = Poly{{cnum(0, 0)}};
    a[1] = Poly{{cnum(0, 0)}};
    a[2] = Poly{{cnum(1, 0)}};
    return SkewMap(cnum(0.5, 0), std::move(a), 1.0);
}

SkewMap basilica_skew() {  // (0.5 t, z^2 - 1 + 0.1 t)
    std::vector<Poly> a(3);
    a[0] = Poly{{cnum(-1, 0), cnum(0.1, 0)}};
    a[1] = Poly{{cnum(0, 0)}};
    a[2] = Poly{{cnum(1, 0)}};
    return SkewMap(cnum(0.5, 0), std::move(a), 1.0);
}

}  // namespace

TEST_CASE("vertical distance to critical branches") {
    SkewMap f = example_map();
    auto field = build_distance_field(f);
    REQUIRE(field.branches.size() == 1);
    CHECK(dist_v_crit(field, {cnum(0, 0), cnum(1, 0)}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dist_v_crit(field, {cnum(0.4, 0), cnum(0, 0)}) < 1e-12);  // on the branch

    // agreement with the one-dimensional distance on the invariant fiber
    auto p = f.fiber();
    auto cs = onedim::critical_points(p);
    onedim::classify_crit(p, cs, 500);
    Rng rng(12);
    for (int k = 0; k < 30; ++k) {
        cnum z = 2.5 * rng.unit_disk();
        CHECK(std::abs(dist_v_crit(field, {cnum(0, 0), z}) - cs.distToCritPrime(z)) < 1e-8);
    }

    SkewMap sq = square_skew();
    auto field2 = build_distance_field(sq);
    CHECK(field2.critEmpty);
    CHECK(std::isinf(dist_v_crit(field2, {cnum(0, 0), cnum(1, 0)})));
}

TEST_CASE("slow approach statistics") {
    SkewMap f = example_map();
    auto field = build_distance_field(f);
    auto r = slow_approach_test(f, field, {cnum(0, 0), cnum(-2, 0)}, 0.05, 0, 300);
    CHECK(r.violations.empty());
    CHECK(!r.escaped);

    // orbit landing exactly on the branch: z1 = sqrt(2)^2 - 2 ~ 0
    auto r2 = slow_approach_test(f, field, {cnum(0, 0), cnum(std::sqrt(2.0), 0)}, 0.05, 0, 10);
    REQUIRE(!r2.violations.empty());
    CHECK(r2.violations[0] == 1);

    // very large alpha: the bound drops below any positive distance immediately
    auto r3 = slow_approach_test(f, field, {cnum(0, 0), cnum(1, 0)}, 10.0, 0, 200);
    CHECK(r3.violations.empty());

    // escaping points are flagged, not errors
    auto r4 = slow_approach_test(f, field, {cnum(0, 0), cnum(10, 0)}, 0.05, 0, 50);
    CHECK(r4.escaped);

    auto batch = slow_approach_batch(f, field, 10, 100, 0.3, 2.5, 0.05, 30, 300, 99, 2);
    CHECK(batch.total == 1000);
    CHECK(batch.violatingFraction < 0.01);
    CHECK(batch.escaped > 900);  // almost everything escapes for this map

    // violations shrink as alpha grows: the bound e^{-alpha n} only drops
    Rng rng(7070);
    for (int trial = 0; trial < 10; ++trial) {
        Point2 x{0.2 * rng.unit_disk(), 2.2 * rng.unit_disk()};
        auto big = slow_approach_test(f, field, x, 0.2, 0, 200);
        auto small = slow_approach_test(f, field, x, 0.02, 0, 200);
        if (big.escaped || small.escaped) continue;
        for (int j : big.violations)
            CHECK(std::find(small.violations.begin(), small.violations.end(), j) !=
                  small.violations.end());
    }
}

TEST_CASE("vertical lyapunov along orbits") {
    SkewMap f = example_map();
    auto rep = vertical_lyapunov(f, {cnum(0, 0), cnum(-2, 0)}, 200);
    REQUIRE(rep.runningAvg.size() == 200);
    for (double a : rep.runningAvg) CHECK(a == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(rep.liminfProxy == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    SkewMap sq = square_skew();
    auto rep2 = vertical_lyapunov(sq, {cnum(0, 0), cnum(0, 1)}, 50);
    CHECK(rep2.liminfProxy == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    auto rep3 = vertical_lyapunov(f, {cnum(0, 0), cnum(-2, 0)}, 0);
    CHECK(rep3.runningAvg.empty());

    CHECK_THROWS_WITH_AS(vertical_lyapunov(f, {cnum(0, 0), cnum(10, 0)}, 10),
                         doctest::Contains("orbit-escaped"), Error);

    // consistency at the stable graph: the running average matches the fiber
    // exponent log 4 well inside the finite-precision shadowing horizon
    auto p = f.fiber();
    auto s = stable::block_schedule(stable::orbit_derivs(p, cnum(-2, 0), 60), 1, 0.05, 0.5, 2.0);
    auto b = stable::radii_tce_wr(p, cnum(-2, 0), s, 1e-3, 40);
    auto g = stable::graph_transform(f, b, 30);
    auto repG = vertical_lyapunov(f, {g.ts[33], g.gs[33]}, 25);
    CHECK(std::abs(repG.runningAvg.back() - std::log(4.0)) < 0.05);
    auto repG0 = vertical_lyapunov(f, {g.ts[0], g.gs[0]}, 200);
    CHECK(std::abs(repG0.runningAvg.back() - std::log(4.0)) < 1e-12);
}

TEST_CASE("pliss hyperbolic times match the quadratic oracle") {
    // oracle: direct window checks on the same prefix-sum representation
    auto oracle = [](const std::vector<double>& logs, double sigma) {
        std::vector<double> S(logs.size() + 1, 0.0);
        for (std::size_t k = 0; k < logs.size(); ++k) S[k + 1] = S[k] + logs[k];
        double ls = std::log(sigma);
        std::vector<int> times;
        for (std::size_t m = 1; m <= logs.size(); ++m) {
            bool ok = true;
            for (std::size_t i = 0; i < m && ok; ++i)
                if (!((S[m] - static_cast<double>(m) * ls) >= (S[i] - static_cast<double>(i) * ls)))
                    ok = false;
            if (ok) times.push_back(static_cast<int>(m));
        }
        return times;
    };

    std::vector<double> constant(1000, std::log(2.0));
    auto rec = pliss_hyperbolic_times(constant, 1.5);
    CHECK(rec.density == 1.0);

    std::vector<double> alt;
    for (int k = 0; k < 100; ++k) alt.push_back(k % 2 == 0 ? -1.0 : 1.0);
    auto rec2 = pliss_hyperbolic_times(alt, std::exp(1.0));
    CHECK(rec2.times.empty());

    Rng rng(31337);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> logs;
        std::size_t n = 50 + rng.index(250);
        for (std::size_t k = 0; k < n; ++k) logs.push_back(rng.uniform(-1.0, 2.0));
        double sigma = 1.0 + rng.uniform(0.05, 1.0);
        auto fast = pliss_hyperbolic_times(logs, sigma);
        auto slow = oracle(logs, sigma);
        CHECK(fast.times == slow);
    }

    // monotonicity: smaller sigma admits more hyperbolic times
    std::vector<double> logs;
    for (int k = 0; k < 400; ++k) logs.push_back(rng.uniform(-0.5, 1.5));
    auto hSmall = pliss_hyperbolic_times(logs, 1.2);
    auto hBig = pliss_hyperbolic_times(logs, 2.0);
    for (int m : hBig.times)
        CHECK(std::find(hSmall.times.begin(), hSmall.times.end(), m) != hSmall.times.end());

    CHECK_THROWS_AS(pliss_hyperbolic_times(logs, 1.0), Error);
}

TEST_CASE("expanding horizon") {
    double M = 6.6;
    auto h = expanding_horizon({cnum(std::exp(-100.0), 0), cnum(0, 0)}, 0.3, M);
    REQUIRE(h.has_value());
    CHECK(*h == 30);
    auto h2 = expanding_horizon({cnum(1, 0), cnum(0, 0)}, 0.3, M);
    REQUIRE(h2.has_value());
    CHECK(*h2 == 0);
    CHECK(!expanding_horizon({cnum(0, 0), cnum(0, 0)}, 0.3, M).has_value());
    CHECK_THROWS_AS(expanding_horizon({cnum(0.5, 0), cnum(0, 0)}, 1.0 / std::log(M), M), Error);
}

TEST_CASE("phi orbits and shadow membership") {
    SkewMap f = example_map();
    auto field = build_distance_field(f);
    auto po = phi_orbit(f, field, {cnum(0, 0), cnum(-2, 0)}, 300);
    REQUIRE(po.phi.size() == 300);
    double expect = -std::log(2.0) + po.offset;  // constant distance 2, R = 4
    for (double v : po.phi) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
    CHECK(po.C == doctest::Approx(expect).epsilon(1e-12));
    CHECK(po.clipEvents == 0);

    auto po0 = phi_orbit(f, field, {cnum(0, 0), cnum(-2, 0)}, 0);
    CHECK(po0.phi.empty());
    CHECK(po0.C == 0.0);

    SkewMap sq = square_skew();
    auto fieldEmpty = build_distance_field(sq);
    auto poE = phi_orbit(sq, fieldEmpty, {cnum(0, 0), std::polar(1.0, 0.3)}, 50);
    CHECK(poE.critEmpty);
    for (double v : poE.phi) CHECK(v == 0.0);

    // phi == 1, K = 1: shadows are the unit intervals (j, j+1], each n covered once
    std::vector<double> ones(200, 1.0);
    auto cfg = shadow_membership(ones, 1.0, 1);
    for (int c : cfg.counts) CHECK(c == 1);
    CHECK(cfg.density == 1.0);
    CHECK(cfg.boundHolds);

    // K small enough that every shadow is empty
    auto cfg2 = shadow_membership(ones, 1e-9, 0);
    for (int c : cfg2.counts) CHECK(c == 0);
    CHECK(cfg2.density == 1.0);

    // huge N: everything is a member
    auto cfg3 = shadow_membership(po.phi, 2.0, 1000000);
    CHECK(cfg3.density == 1.0);

    // deterministic covering bound on random inputs
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> phi;
        for (int k = 0; k < 500; ++k) phi.push_back(rng.uniform(0.0, 6.0));
        auto c = shadow_membership(phi, rng.uniform(0.1, 3.0), static_cast<int>(rng.index(8)));
        CHECK(c.boundHolds);
    }
}

TEST_CASE("classification of points") {
    SkewMap f = example_map();
    auto p = f.fiber();
    auto cs = onedim::critical_points(p);
    onedim::classify_crit(p, cs, 500);
    auto trap = build_trap2d(f, cs.cycles);  // no cycles for the Chebyshev fiber
    CHECK(trap.disks.empty());

    auto c1 = classify_point(f, trap, {cnum(0, 0), cnum(10, 0)}, 100);
    CHECK(c1.label == Label::Escaping);
    auto c2 = classify_point(f, trap, {cnum(0, 0), cnum(2, 0)}, 5000);
    CHECK(c2.label == Label::Suspect);

    SkewMap b = basilica_skew();
    auto pb = b.fiber();
    auto csb = onedim::critical_points(pb);
    onedim::classify_crit(pb, csb, 500);
    REQUIRE(csb.cycles.size() == 1);
    auto trapB = build_trap2d(b, csb.cycles);
    CHECK(trapB.rBulge > 0.0);
    auto c3 = classify_point(b, trapB, {cnum(0.1, 0), cnum(0, 0)}, 200);
    CHECK(c3.label == Label::Basin);
    CHECK(c3.basinId == 0);
}

TEST_CASE("raster classification and area table") {
    SkewMap f = example_map();
    auto p = f.fiber();
    auto cs = onedim::critical_points(p);
    onedim::classify_crit(p, cs, 500);
    auto trap = build_trap2d(f, cs.cycles);
    Window w{-0.3, 0.3, -2.5, 2.5};

    auto table = julia_area_estimate(f, trap, w, {64}, {0, 50, 100, 200}, 2);
    REQUIRE(table.entries.size() == 4);
    double windowArea = 0.6 * 5.0;
    CHECK(table.entries[0].suspectArea == doctest::Approx(windowArea));  // budget 0
    for (std::size_t i = 1; i < table.entries.size(); ++i)
        CHECK(table.entries[i].suspectArea <= table.entries[i - 1].suspectArea);
    // the real slice keeps a bounded core: suspect area stays positive
    CHECK(table.entries.back().suspectArea > 0.5);
    CHECK(table.entries.back().suspectArea < windowArea);

    // a window fully inside the escape region classifies instantly
    Window we{-0.3, 0.3, 5.0, 7.5};
    auto tableE = julia_area_estimate(f, trap, we, {32}, {10}, 1);
    CHECK(tableE.entries[0].suspectArea == 0.0);
    CHECK(tableE.entries[0].escapingArea == doctest::Approx(0.6 * 2.5));

    // label stability under budget doubling: resolved pixels never change
    auto r400 = classify_raster(f, trap, w, 64, 400, 2);
    auto r200layer = r400.layer(200);
    auto r400layer = r400.layer(400);
    std::size_t n = r200layer.gray.size();
    for (std::size_t i = 0; i < n; ++i)
        if (r200layer.gray[i] != 0) CHECK(r200layer.gray[i] == r400layer.gray[i]);

    // determinism across thread counts
    auto rA = classify_raster(f, trap, w, 64, 200, 1);
    auto rB = classify_raster(f, trap, w, 64, 200, 8);
    CHECK(rA.firstEvent == rB.firstEvent);
    CHECK(rA.kind == rB.kind);

    // basilica: basins absorb almost the whole window
    SkewMap bmap = basilica_skew();
    auto pb = bmap.fiber();
    auto csb = onedim::critical_points(pb);
    onedim::classify_crit(pb, csb, 500);
    auto trapB = build_trap2d(bmap, csb.cycles);
    auto tb = julia_area_estimate(bmap, trapB, Window{-0.2, 0.2, -1.8, 1.8}, {64}, {2, 400}, 2);
    CHECK(tb.entries[1].basinArea > 0.8 * (0.4 * 3.6));
    CHECK(tb.entries[1].suspectArea < tb.entries[0].suspectArea);
}
