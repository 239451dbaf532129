#include <algorithm>
#include <cmath>
#include <complex>

#include "doctest.h"
#include "skewlab/onedim.hpp"
#include "skewlab/rng.hpp"

using namespace skewlab;
using namespace skewlab::onedim;
using dyncore::FiberPolynomial;

namespace {

FiberPolynomial quad(double c) {  // z^2 + c
    return FiberPolynomial{Poly{{cnum(c, 0), cnum(0, 0), cnum(1, 0)}}};
}

FiberPolynomial cheb() { return quad(-2.0); }
FiberPolynomial square() { return quad(0.0); }

double seg_dist(cnum z) {  // distance to the real segment [-2, 2]
    double x = std::clamp(z.real(), -2.0, 2.0);
    return std::abs(z - cnum(x, 0.0));
}

}  // namespace

TEST_CASE("critical points of simple maps") {
    auto cs = critical_points(cheb());
    REQUIRE(cs.points.size() == 1);
    CHECK(std::abs(cs.points[0].z) < 1e-12);
    CHECK(cs.points[0].multiplicity == 1);

    // z^3 - 3z: critical points -1, +1
    FiberPolynomial p{Poly{{cnum(0, 0), cnum(-3, 0), cnum(0, 0), cnum(1, 0)}}};
    auto cs2 = critical_points(p);
    REQUIRE(cs2.points.size() == 2);
    CHECK(std::abs(cs2.points[0].z - cnum(-1, 0)) < 1e-10);
    CHECK(std::abs(cs2.points[1].z - cnum(1, 0)) < 1e-10);

    auto cs3 = critical_points(square());
    REQUIRE(cs3.points.size() == 1);
    CHECK(std::abs(cs3.points[0].z) < 1e-12);
}

TEST_CASE("classification of critical orbits") {
    // Chebyshev: orbit 0 -> -2 -> 2 -> 2 bounded, no attracting cycle
    auto p = cheb();
    auto cs = critical_points(p);
    classify_crit(p, cs, 500);
    CHECK(cs.points[0].inJulia);
    CHECK(cs.cycles.empty());
    CHECK(cs.critPrime().size() == 1);

    // z^2: superattracting fixed point at 0
    auto q = square();
    auto cs2 = critical_points(q);
    classify_crit(q, cs2, 500);
    CHECK(!cs2.points[0].inJulia);
    REQUIRE(cs2.cycles.size() == 1);
    CHECK(cs2.cycles[0].points.size() == 1);
    CHECK(cs2.critPrime().empty());

    // z^2 - 1: superattracting 2-cycle 0 <-> -1
    auto b = quad(-1.0);
    auto cs3 = critical_points(b);
    classify_crit(b, cs3, 500);
    CHECK(!cs3.points[0].inJulia);
    REQUIRE(cs3.cycles.size() == 1);
    CHECK(cs3.cycles[0].points.size() == 2);

    // stability under budget doubling
    auto cs4 = critical_points(p);
    classify_crit(p, cs4, 1000);
    CHECK(cs4.points[0].inJulia == cs.points[0].inJulia);
}

TEST_CASE("julia sampling approximates known sets") {
    auto s = julia_sample(square(), 3000, 42);
    REQUIRE(s.cloud.size() == 3000);
    for (cnum z : s.cloud) CHECK(std::abs(std::abs(z) - 1.0) < 1e-3);

    auto s2 = julia_sample(cheb(), 3000, 43);
    for (cnum z : s2.cloud) CHECK(seg_dist(z) < 1e-3);

    CHECK_THROWS_AS(julia_sample(square(), 0, 1), Error);
}

TEST_CASE("green distance brackets") {
    auto s = julia_sample(square(), 500, 7);
    auto b = green_distance(s, cnum(2, 0), 64);
    CHECK(b.lower <= 1.0);
    CHECK(b.upper >= 1.0);
    CHECK(!b.heuristic);

    // radial distance 1e-4 recovered within a factor of 4
    auto b2 = green_distance(s, std::polar(1.0001, 0.3), 64);
    CHECK(b2.lower <= 1e-4);
    CHECK(b2.upper >= 1e-4);
    CHECK(b2.lower > 1e-4 / 4.0);
    CHECK(b2.upper < 4e-4);

    auto s3 = julia_sample(cheb(), 500, 8);
    auto b3 = green_distance(s3, cnum(3, 0), 64);
    CHECK(b3.lower <= 1.0);
    CHECK(b3.upper >= 1.0);

    // interior of the bounded Fatou component of z^2: heuristic path
    auto b4 = green_distance(s, cnum(0.2, 0), 64);
    CHECK(b4.heuristic);
    CHECK(b4.upper >= b4.lower);

    // a point of J(z^2) itself
    CHECK_THROWS_WITH_AS(green_distance(s, std::polar(1.0, 1.1), 64), doctest::Contains("on-julia"),
                         Error);
}

TEST_CASE("ce report on the Chebyshev critical value") {
    auto p = cheb();
    auto cs = critical_points(p);
    classify_crit(p, cs, 500);
    auto rep = ce_report(p, cs, cnum(0, 0), 200);
    CHECK(rep.muCE == doctest::Approx(4.0).epsilon(0.0025));
    CHECK(rep.C == doctest::Approx(1.0).epsilon(0.05));
    CHECK(rep.residual < 1e-6);
    CHECK(rep.cePlausible);
    // first factor |p'(-2)| = 4
    CHECK(std::exp(rep.logDeriv[1]) == doctest::Approx(4.0));

    // Crit' empty: precondition error
    auto q = square();
    auto cs2 = critical_points(q);
    classify_crit(q, cs2, 500);
    CHECK_THROWS_AS(ce_report(q, cs2, cnum(0, 0), 50), Error);
}

TEST_CASE("lyapunov at value") {
    auto rep = lyapunov_at_value(cheb(), cnum(-2, 0), 100);
    CHECK(rep.value == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    for (double a : rep.runningAvg) CHECK(a == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    // z = i is an exactly representable point of the unit circle; generic
    // angles drift doubly exponentially under squaring and are unusable here.
    auto rep2 = lyapunov_at_value(square(), cnum(0, 1), 50);
    CHECK(rep2.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    auto rep2b = lyapunov_at_value(square(), std::polar(1.0, 0.77), 25);
    CHECK(rep2b.value == doctest::Approx(std::log(2.0)).epsilon(1e-6));

    // orbit hitting the critical point exactly: p'(0) = 0
    auto rep3 = lyapunov_at_value(cheb(), cnum(0, 0), 50);
    CHECK(rep3.zeroHit);
    CHECK(rep3.zeroHitIndex == 0);

    auto rep4 = lyapunov_at_value(cheb(), cnum(0, 0), 0);
    CHECK(rep4.runningAvg.empty());
}

TEST_CASE("wr sums") {
    auto p = cheb();
    auto cs = critical_points(p);
    classify_crit(p, cs, 500);
    for (int n : {0, 10, 100, 10000}) CHECK(wr_sum(p, cs, cnum(-2, 0), n, 1.0) == 0.0);
    // eta larger than diam J: every index enters the sum (terms -log 4)
    CHECK(wr_sum(p, cs, cnum(-2, 0), 10, 5.0) == doctest::Approx(-10.0 * std::log(4.0)));

    // monotonicity in eta and n in the regime where included terms are
    // nonnegative (quadratic maps, eta <= 1/2 forces |p'| <= 1 on included indices)
    auto p2 = quad(-1.8);
    auto cs2 = critical_points(p2);
    classify_crit(p2, cs2, 2000);
    REQUIRE(cs2.critPrime().size() == 1);
    std::vector<double> etas = {0.05, 0.1, 0.2, 0.35, 0.5};
    double prev = -1.0;
    for (double eta : etas) {
        double s = wr_sum(p2, cs2, p2.eval(cnum(0, 0)), 400, eta);
        CHECK(s >= prev);
        prev = s;
    }
    double sa = wr_sum(p2, cs2, p2.eval(cnum(0, 0)), 100, 0.3);
    double sb = wr_sum(p2, cs2, p2.eval(cnum(0, 0)), 400, 0.3);
    CHECK(sb >= sa);

    auto prof = wr_profile(p2, cs2, p2.eval(cnum(0, 0)), 400, etas);
    REQUIRE(prof.size() == etas.size());
    // tail averages shrink as eta -> 0
    CHECK(prof.front().tailSup <= prof.back().tailSup);
}

TEST_CASE("sr check") {
    auto p = cheb();
    auto cs = critical_points(p);
    classify_crit(p, cs, 500);
    CHECK(sr_check(p, cs, cnum(-2, 0), 1000, 0.1).empty());
    // alpha = 0 degenerate: any distance below 1 violates
    auto v = sr_check(p, cs, cnum(0.5, 0), 0, 0.0);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == 0);
    // starting exactly on the critical point: index 0 violates for alpha > 0
    auto v2 = sr_check(p, cs, cnum(0, 0), 5, 0.3);
    REQUIRE(!v2.empty());
    CHECK(v2[0] == 0);
}

TEST_CASE("appendix consistency: weak regularity implies slow recurrence") {
    // Where the per-step bound -log|p'(p^n v)| <= n*iota + C0 holds with fitted
    // (iota, C0), violations of dist >= e^{-alpha n} with alpha > iota can only
    // occur inside the transient n < (C0 + log 2)/(alpha - iota).
    for (double c : {-1.8, -2.0}) {
        auto p = quad(c);
        auto cs = critical_points(p);
        classify_crit(p, cs, 2000);
        if (cs.critPrime().empty()) continue;
        cnum v = p.eval(cnum(0, 0));
        int n = 500;
        double iota = 0.02;
        double c0 = 0.0;
        {
            cnum z = v;
            for (int j = 0; j < n; ++j) {
                double term = -std::log(std::max(std::abs(p.deriv(z)), 1e-300));
                c0 = std::max(c0, term - iota * j);
                z = p.eval(z);
            }
        }
        double alpha = iota + 0.05;
        double transient = (c0 + std::log(2.0)) / (alpha - iota);
        auto bad = sr_check(p, cs, v, n, alpha);
        for (int j : bad) CHECK(j <= static_cast<int>(transient) + 1);
    }
}

TEST_CASE("dpu truncated sums") {
    auto p = cheb();
    auto cs = critical_points(p);
    classify_crit(p, cs, 500);
    auto rep = dpu_sum(p, cs, cnum(-2, 0), 200);
    // constant distance 2 from Crit' = {0}: phi = -log 2 + log(2R) = log 4 (R = 4)
    double phi = std::log(4.0);
    REQUIRE(rep.partialSums.size() == 200);
    CHECK(rep.excluded == 1);
    for (int k = 1; k <= 200; ++k)
        CHECK(rep.partialSums[static_cast<std::size_t>(k - 1)] ==
              doctest::Approx((k - 1) * phi).epsilon(1e-12));
    CHECK(rep.Q <= phi + 1e-12);
    CHECK(rep.clipEvents == 0);

    auto rep0 = dpu_sum(p, cs, cnum(-2, 0), 0);
    CHECK(rep0.partialSums.empty());

    auto q = square();
    auto cs2 = critical_points(q);
    classify_crit(q, cs2, 500);
    auto rep2 = dpu_sum(q, cs2, std::polar(1.0, 0.3), 50);
    CHECK(rep2.critEmpty);

    // bounded sums on a recurrent example
    auto p3 = quad(-1.8);
    auto cs3 = critical_points(p3);
    classify_crit(p3, cs3, 2000);
    auto rep3 = dpu_sum(p3, cs3, p3.eval(cnum(0, 0)), 10000);
    CHECK(rep3.Q < 25.0);
    CHECK(rep3.Q > 0.0);
}

TEST_CASE("hyperbolic away from the critical set") {
    auto q = square();
    auto csq = critical_points(q);
    classify_crit(q, csq, 500);
    // Crit' empty: the eta condition is vacuous, uniform expansion 2^N
    CHECK(hyperbolic_away(q, csq, std::polar(1.0, 0.2), 20, 0.5) ==
          doctest::Approx(std::pow(2.0, 20)).epsilon(1e-9));

    auto p = cheb();
    auto cs = critical_points(p);
    classify_crit(p, cs, 500);
    CHECK(hyperbolic_away(p, cs, cnum(2, 0), 10, 1.0) ==
          doctest::Approx(std::pow(4.0, 10)).epsilon(1e-9));
    CHECK_THROWS_WITH_AS(hyperbolic_away(p, cs, cnum(0.5, 0), 5, 1.0),
                         doctest::Contains("segment-enters-eta-neighborhood"), Error);

    auto sampler = julia_sample(p, 400, 5);
    auto fit = hyperbolic_away_fit(p, cs, sampler, 2.0, {0.25, 0.5, 1.0}, 12, 11);
    CHECK(fit.samples > 0);
    CHECK(fit.C1 > 0.0);
}

TEST_CASE("exponential shrinking on the circle with an exact oracle") {
    auto q = square();
    auto cs = critical_points(q);
    classify_crit(q, cs, 500);
    const double r = 0.1;
    const int depth = 20;
    auto rep = exp_shrink_estimate(q, cs, cnum(1, 0), r, depth, 64, 2024);
    CHECK(rep.unresolved == 0);
    CHECK(rep.criticalPullbacks == 0);
    CHECK(rep.perBranchMonotone);
    CHECK(rep.muExp > 1.9);
    CHECK(rep.muExp < 2.1);
    CHECK(rep.maxDiam[0] == doctest::Approx(2.0 * r));

    // Exact oracle: each component of p^{-n}(D(1,r)) is a 2^n-th root image of
    // the disk, and all components are rotations of each other. The certified
    // bracket has to contain the true diameter at every depth.
    const int K = 360;
    std::vector<cnum> bd(K);
    for (int n = 1; n <= depth; ++n) {
        for (int k = 0; k < K; ++k) {
            cnum w = 1.0 + r * std::polar(1.0, 2.0 * kPi * k / K);
            bd[static_cast<std::size_t>(k)] = std::exp(std::log(w) / std::pow(2.0, n));
        }
        double trueDiam = 0.0;
        for (int i = 0; i < K; ++i)
            for (int j = i + 1; j < K; ++j)
                trueDiam = std::max(trueDiam, std::abs(bd[static_cast<std::size_t>(i)] -
                                                       bd[static_cast<std::size_t>(j)]));
        std::size_t un = static_cast<std::size_t>(n);
        CHECK(rep.maxDiamUpper[un] >= trueDiam * (1.0 - 1e-9));
        CHECK(rep.maxDiamLower[un] <= trueDiam * (1.0 + 1e-9));
    }
}

TEST_CASE("exponential shrinking through critical pullbacks on the segment") {
    auto p = cheb();
    auto cs = critical_points(p);
    classify_crit(p, cs, 500);
    auto rep = exp_shrink_estimate(p, cs, cnum(2, 0), 0.05, 15, 64, 99);
    CHECK(rep.muExp > 1.8);
    CHECK(rep.muExp < 2.2);
    CHECK(rep.criticalPullbacks > 0);  // branches through -2 -> 0 take the power model

    auto th = exp_shrink_theta(p, cs, cnum(2, 0), {0.02, 0.04, 0.08}, 12, 32, 99);
    CHECK(th.theta0 > 0.0);
    CHECK(th.muExp > 1.5);
}

TEST_CASE("box dimension of curves") {
    auto s = julia_sample(square(), 30000, 17);
    auto d = box_dimension(s.cloud);
    CHECK(d.dimension == doctest::Approx(1.0).epsilon(0.05));
    CHECK(d.residual < 0.05);

    auto s2 = julia_sample(cheb(), 30000, 18);
    auto d2 = box_dimension(s2.cloud);
    CHECK(d2.dimension == doctest::Approx(1.0).epsilon(0.05));

    auto single = box_dimension({cnum(0.3, 0.4)});
    CHECK(single.dimension == 0.0);
    CHECK(single.residual == 0.0);

    CHECK_THROWS_WITH_AS(box_dimension({cnum(0, 0), cnum(1, 0), cnum(0, 1)}),
                         doctest::Contains("insufficient-scales"), Error);
}

TEST_CASE("trapping region verification") {
    auto q = square();
    TrappingRegion trap;
    trap.cycleDisks.push_back(Disk{cnum(0, 0), 0.5});
    trap.infinityRadius = 2.0;
    trap.verify(q);

    TrappingRegion bad;
    bad.cycleDisks.push_back(Disk{cnum(0.9, 0), 0.3});  // not invariant under z^2
    bad.infinityRadius = 2.0;
    CHECK_THROWS_WITH_AS(bad.verify(q), doctest::Contains("trap-not-invariant"), Error);
}

TEST_CASE("measure decay of the slow set") {
    auto q = square();
    TrappingRegion trap;
    trap.cycleDisks.push_back(Disk{cnum(0, 0), 0.5});
    trap.infinityRadius = 2.0;
    auto rep = km_measure(q, trap, 12, 512, 2.5, 2);
    // m = 0: area of the annulus 0.5 <= |z| <= 2
    CHECK(rep.areas[0] == doctest::Approx(kPi * (4.0 - 0.25)).epsilon(0.02));
    for (std::size_t m = 1; m < rep.areas.size(); ++m) CHECK(rep.areas[m] <= rep.areas[m - 1]);
    CHECK(rep.slope <= -std::log(2.0) + 0.2);

    auto p = cheb();
    TrappingRegion trap2;
    trap2.infinityRadius = 8.0;
    auto rep2 = km_measure(p, trap2, 10, 512, 8.5, 2);
    CHECK(rep2.slope < 0.0);
    for (std::size_t m = 1; m < rep2.areas.size(); ++m) CHECK(rep2.areas[m] <= rep2.areas[m - 1]);
}

TEST_CASE("blaschke preimage measure") {
    // rotation: measure preserving, exponent 2^0 = 1, ratio exactly 1
    Blaschke rot;
    rot.zeros = {cnum(0, 0)};
    rot.phase = 1.234;
    DiskUnion R;
    R.disks.push_back(Disk{cnum(0.2, 0.1), 0.15});
    double ratio = blaschke_ratio(rot, R, 400000, 3);
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.03));

    // z^2: G^{-1}(D(0, 0.1)) = D(0, sqrt(0.1)); one critical point so the
    // exponent is 1/2 and the ratio is pi*0.1 / sqrt(pi*0.01)
    Blaschke sqB;
    sqB.zeros = {cnum(0, 0), cnum(0, 0)};
    DiskUnion R2;
    R2.disks.push_back(Disk{cnum(0, 0), 0.1});
    double want = kPi * 0.1 / std::sqrt(kPi * 0.01);
    double got = blaschke_ratio(sqB, R2, 400000, 4);
    CHECK(got == doctest::Approx(want).epsilon(0.05));

    CHECK(blaschke_ratio(sqB, DiskUnion{}, 1000, 5) == 0.0);

    auto chk = blaschke_measure_check(2, 20, 20000, 6);
    CHECK(chk.worstRatio > 0.0);
    CHECK(std::isfinite(chk.worstRatio));
}

TEST_CASE("przytycki return times") {
    auto p = cheb();
    auto cs = critical_points(p);
    classify_crit(p, cs, 500);
    auto r = przytycki_stat(p, cs, cnum(0, 0), 0.1, 60);
    REQUIRE(r.firstReturn.has_value());
    CHECK(*r.firstReturn >= 2);

    // eps at least the diameter of J: immediate overlap
    auto r2 = przytycki_stat(p, cs, cnum(0, 0), 5.0, 10);
    REQUIRE(r2.firstReturn.has_value());
    CHECK(*r2.firstReturn == 1);

    auto q = square();
    auto cs2 = critical_points(q);
    classify_crit(q, cs2, 500);
    CHECK_THROWS_AS(przytycki_stat(q, cs2, cnum(0, 0), 0.1, 10), Error);

    auto fit = przytycki_fit(p, cs, cnum(0, 0), {0.4, 0.2, 0.1, 0.05}, 100);
    CHECK(fit.returnTimes.size() == 4);
    CHECK(fit.C >= 0.0);
}
