#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "skewlab/fit.hpp"
#include "skewlab/poly.hpp"
#include "skewlab/rng.hpp"

using namespace skewlab;

namespace {

Poly from_roots(const std::vector<cnum>& roots) {
    Poly p{{cnum(1.0, 0.0)}};
    for (cnum r : roots) {
        std::vector<cnum> q(p.c.size() + 1, cnum(0.0, 0.0));
        for (std::size_t k = 0; k < p.c.size(); ++k) {
            q[k + 1] += p.c[k];
            q[k] -= r * p.c[k];
        }
        p.c = std::move(q);
    }
    return p;
}

double match_roots(std::vector<cnum> got, std::vector<cnum> want) {
    REQUIRE(got.size() == want.size());
    double worst = 0.0;
    for (cnum w : want) {
        std::size_t best = 0;
        double bd = 1e300;
        for (std::size_t i = 0; i < got.size(); ++i) {
            double d = std::abs(got[i] - w);
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        worst = std::max(worst, bd);
        got.erase(got.begin() + static_cast<long>(best));
    }
    return worst;
}

}  // namespace

TEST_CASE("horner evaluation") {
    Poly p{{cnum(-2, 0), cnum(0, 0), cnum(1, 0)}};  // z^2 - 2
    CHECK(p.eval(cnum(3, 0)) == cnum(7, 0));
    CHECK(p.eval(cnum(0, 1)) == cnum(-3, 0));
    CHECK(p.degree() == 2);
    Poly d = p.derivative();
    CHECK(d.eval(cnum(3, 0)) == cnum(6, 0));
}

TEST_CASE("roots of small polynomials are exact") {
    Poly p{{cnum(-2, 0), cnum(0, 0), cnum(1, 0)}};
    auto r = poly_roots(p);
    CHECK(match_roots(r, {cnum(std::sqrt(2.0), 0), cnum(-std::sqrt(2.0), 0)}) < 1e-14);

    // z^3 - 3z: roots 0, +-sqrt(3)
    Poly q{{cnum(0, 0), cnum(-3, 0), cnum(0, 0), cnum(1, 0)}};
    auto r2 = poly_roots(q);
    CHECK(match_roots(r2, {cnum(0, 0), cnum(std::sqrt(3.0), 0), cnum(-std::sqrt(3.0), 0)}) < 1e-12);
}

TEST_CASE("random polynomials reconstruct their roots") {
    Rng rng(20240809);
    for (int trial = 0; trial < 40; ++trial) {
        int deg = 2 + static_cast<int>(rng.index(7));
        std::vector<cnum> roots;
        for (int k = 0; k < deg; ++k) roots.push_back(3.0 * rng.unit_disk());
        Poly p = from_roots(roots);
        auto got = poly_roots(p);
        // Tolerance degrades with root clustering; these are well separated w.h.p.
        CHECK(match_roots(got, roots) < 1e-6);
    }
}

TEST_CASE("multiple root clusters merge") {
    // (z-1)^3 (z+2)
    Poly p = from_roots({cnum(1, 0), cnum(1, 0), cnum(1, 0), cnum(-2, 0)});
    auto roots = poly_roots(p, 1e-13, 800);
    auto clusters = cluster_roots(roots, 1e-3);
    std::sort(clusters.begin(), clusters.end(),
              [](auto& a, auto& b) { return a.first.real() < b.first.real(); });
    REQUIRE(clusters.size() == 2);
    CHECK(clusters[0].second == 1);
    CHECK(std::abs(clusters[0].first - cnum(-2, 0)) < 1e-8);
    CHECK(clusters[1].second == 3);
    CHECK(std::abs(clusters[1].first - cnum(1, 0)) < 1e-4);
}

TEST_CASE("taylor shift difference evaluation is cancellation free") {
    Poly p{{cnum(-2, 0), cnum(0, 0), cnum(1, 0)}};  // z^2 - 2
    cnum center(2.0, 0.0);
    Poly sh = p.taylor_at(center);
    // p(2 + d) - p(2) = 4d + d^2
    cnum d(1e-18, 0.0);
    cnum diff = sh.eval_diff(d);
    CHECK(std::abs(diff - (4.0 * d + d * d)) <= 1e-30);
    // direct evaluation would lose the difference entirely
    CHECK(p.eval(center + d) - p.eval(center) == cnum(0.0, 0.0));
}

TEST_CASE("tail split recovers the polynomial") {
    Poly a{{cnum(-2, 0), cnum(0.1, 0), cnum(0, 0.5)}};  // -2 + 0.1 t + 0.5i t^2
    cnum t(1e-20, 0.0);
    // a(t) - a(0) = t * tail(t)
    cnum viaTail = t * a.tail().eval(t);
    CHECK(std::abs(viaTail - (cnum(0.1, 0) * t + cnum(0, 0.5) * t * t)) <= 1e-33);
}

TEST_CASE("line fit recovers slope and intercept") {
    std::vector<double> xs, ys;
    for (int k = 0; k < 50; ++k) {
        xs.push_back(k);
        ys.push_back(3.0 - 0.7 * k);
    }
    auto f = fit_line(xs, ys);
    CHECK(f.slope == doctest::Approx(-0.7).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.rms < 1e-12);
}

TEST_CASE("plane fit recovers two slopes") {
    std::vector<double> x1, x2, y;
    Rng rng(7);
    for (int k = 0; k < 200; ++k) {
        double a = rng.uniform(-3, 3), b = rng.uniform(-2, 2);
        x1.push_back(a);
        x2.push_back(b);
        y.push_back(1.5 - 0.69 * a + 0.33 * b);
    }
    auto f = fit_plane(x1, x2, y);
    CHECK(f.a == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(f.b == doctest::Approx(-0.69).epsilon(1e-9));
    CHECK(f.c == doctest::Approx(0.33).epsilon(1e-9));
}
