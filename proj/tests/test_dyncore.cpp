#include <cmath>

#include "doctest.h"
#include "skewlab/dyncore.hpp"
#include "skewlab/rng.hpp"

using namespace skewlab;
using namespace skewlab::dyncore;

namespace {

// f(t,z) = (0.5 t, z^2 - 2 + 0.1 t)
SkewMap example_map() {
    std::vector<Poly> a(3);
    a[0] = Poly{{cnum(-2, 0), cnum(0.1, 0)}};
    a[1] = Poly{{cnum(0, 0)}};
    a[2] = Poly{{cnum(1, 0)}};
    return SkewMap(cnum(0.5, 0), std::move(a), 1.0);
}

SkewMap cubic_map() {
    // (0.5 t, z^3 + t z)
    std::vector<Poly> a(4);
    a[0] = Poly{{cnum(0, 0)}};
    a[1] = Poly{{cnum(0, 0), cnum(1, 0)}};
    a[2] = Poly{{cnum(0, 0)}};
    a[3] = Poly{{cnum(1, 0)}};
    return SkewMap(cnum(0.5, 0), std::move(a), 2.0);
}

}  // namespace

TEST_CASE("skew evaluation matches hand computation") {
    SkewMap f = example_map();
    Point2 y = eval_skew(f, {cnum(0, 0), cnum(-2, 0)});
    CHECK(y.t == cnum(0, 0));
    CHECK(y.z == cnum(2, 0));

    Point2 y2 = eval_skew(f, {cnum(0, 0), cnum(0, 0)});
    CHECK(y2.z == cnum(-2, 0));

    Point2 y3 = eval_skew(f, {cnum(1, 0), cnum(0, 0)});
    CHECK(y3.t == cnum(0.5, 0));
    CHECK(y3.z == cnum(-1.9, 0));
}

TEST_CASE("vertical derivative") {
    SkewMap f = example_map();
    CHECK(vertical_derivative(f, {cnum(0, 0), cnum(3, 0)}) == cnum(6, 0));
    CHECK(vertical_derivative(f, {cnum(0.4, 0), cnum(0, 0)}) == cnum(0, 0));
    SkewMap g = cubic_map();
    CHECK(vertical_derivative(g, {cnum(1, 0), cnum(1, 0)}) == cnum(4, 0));
}

TEST_CASE("domain is enforced") {
    SkewMap f = example_map();
    CHECK_THROWS_WITH_AS(eval_skew(f, {cnum(2, 0), cnum(0, 0)}), doctest::Contains("domain-exceeded"),
                         Error);
}

TEST_CASE("orbit on the invariant fiber") {
    SkewMap f = example_map();
    OrbitTrace tr = orbit(f, {cnum(0, 0), cnum(-2, 0)}, 3);
    REQUIRE(tr.points.size() == 4);
    CHECK(tr.points[0].z == cnum(-2, 0));
    CHECK(tr.points[1].z == cnum(2, 0));
    CHECK(tr.points[2].z == cnum(2, 0));
    CHECK(tr.points[3].z == cnum(2, 0));
    CHECK(!tr.escaped);
}

TEST_CASE("orbit escape flag") {
    SkewMap f = example_map();
    OrbitTrace tr = orbit(f, {cnum(0, 0), cnum(10, 0)}, 10);
    CHECK(tr.escaped);
    CHECK(tr.points.size() < 11);
}

TEST_CASE("orbit continuity near the invariant fiber") {
    SkewMap f = example_map();
    Region reg{cnum(0, 0), 0.05, cnum(0, 0), 3.0};
    PartialSupBound M = sup_partials(f, reg, 64);
    OrbitTrace tr = orbit(f, {cnum(0.01, 0), cnum(-2, 0)}, 2);
    double ref[3] = {-2, 2, 2};
    for (int k = 0; k <= 2; ++k)
        CHECK(std::abs(tr.points[static_cast<std::size_t>(k)].z - cnum(ref[k], 0)) <
              0.01 * M.M * (k + 1));
}

TEST_CASE("vertical cocycle products") {
    SkewMap f = example_map();
    OrbitTrace tr = orbit(f, {cnum(0, 0), cnum(-2, 0)}, 12);
    for (std::size_t k = 0; k <= 12; ++k)
        CHECK(std::abs(vertical_cocycle(tr, 0, k)) == doctest::Approx(std::pow(4.0, k)));
    CHECK(vertical_cocycle(tr, 3, 0) == cnum(1, 0));
    CHECK_THROWS_AS(vertical_cocycle(tr, 10, 5), Error);

    // multiplicativity is exact: same product order
    for (std::size_t m = 0; m <= 12; ++m)
        for (std::size_t n = 0; m + n <= 12; ++n)
            CHECK(vertical_cocycle(tr, 0, m + n) ==
                  vertical_cocycle(tr, 0, m) * vertical_cocycle(tr, m, n));
}

TEST_CASE("cocycle modulus 2^n on the unit circle for z^2") {
    std::vector<Poly> a(3);
    a[0] = Poly{{cnum(0, 0)}};
    a[1] = Poly{{cnum(0, 0)}};
    a[2] = Poly{{cnum(1, 0)}};
    SkewMap f(cnum(0.5, 0), std::move(a), 1.0);
    cnum z0 = std::polar(1.0, 0.7);
    OrbitTrace tr = orbit(f, {cnum(0, 0), z0}, 20);
    CHECK(std::abs(vertical_cocycle(tr, 0, 20)) == doctest::Approx(std::pow(2.0, 20)).epsilon(1e-9));
}

TEST_CASE("semigroup law within tolerance") {
    SkewMap f = example_map();
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        Point2 x{0.3 * rng.unit_disk(), 2.0 * rng.unit_disk()};
        std::size_t m = rng.index(50), n = rng.index(50);
        OrbitTrace whole = orbit(f, x, m + n);
        if (whole.escaped || whole.points.size() < m + n + 1) continue;
        OrbitTrace head = orbit(f, x, m);
        OrbitTrace tail = orbit(f, head.points[m], n);
        for (std::size_t k = 0; k <= n; ++k) {
            cnum a = whole.points[m + k].z, b = tail.points[k].z;
            CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_CASE("fiber polynomial consistency at t = 0") {
    SkewMap f = example_map();
    FiberPolynomial p = f.fiber();
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        cnum z = 3.0 * rng.unit_disk();
        CHECK(f.h(cnum(0, 0), z) == p.eval(z));
    }
    CHECK(p.escapeRadius() >= 2.0);
}

TEST_CASE("horizontal contraction is exact to rounding") {
    SkewMap f = example_map();
    cnum t0(0.9, 0.1);
    OrbitTrace tr = orbit(f, {0.5 * t0, cnum(0.3, 0.2)}, 40);
    double lam = std::abs(f.lambda());
    for (std::size_t k = 0; k < tr.points.size(); ++k) {
        double want = std::pow(lam, static_cast<double>(k)) * std::abs(0.5 * t0);
        CHECK(std::abs(tr.points[k].t) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("sup partials on polydisk boundaries") {
    SkewMap f = example_map();
    // |2z| dominates on |z| <= 3: M = 6 * 1.1
    PartialSupBound b = sup_partials(f, Region{cnum(0, 0), 1.0, cnum(0, 0), 3.0}, 128);
    CHECK(b.M == doctest::Approx(6.6).epsilon(1e-3));

    // constant-in-t fiber z^2 on |z| <= 1
    std::vector<Poly> a(3);
    a[0] = Poly{{cnum(0, 0)}};
    a[1] = Poly{{cnum(0, 0)}};
    a[2] = Poly{{cnum(1, 0)}};
    SkewMap g(cnum(0.5, 0), std::move(a), 1.0);
    PartialSupBound b2 = sup_partials(g, Region{cnum(0, 0), 0.5, cnum(0, 0), 1.0}, 64);
    CHECK(b2.M == doctest::Approx(2.2).epsilon(1e-3));

    // degenerate single point at the critical point: floored at |lambda|
    PartialSupBound b3 = sup_partials(f, Region{cnum(0, 0), 0.0, cnum(0, 0), 0.0}, 4);
    CHECK(b3.M == doctest::Approx(std::abs(f.lambda())));
}

TEST_CASE("map file round trip and strictness") {
    SkewMap f = example_map();
    std::string text = f.format();
    SkewMap g = SkewMap::parse(text);
    CHECK(g.lambda() == f.lambda());
    CHECK(g.fiberDegree() == f.fiberDegree());
    CHECK(g.h(cnum(0.3, 0.1), cnum(1, 1)) == f.h(cnum(0.3, 0.1), cnum(1, 1)));

    CHECK_THROWS_WITH_AS(SkewMap::parse("bogus_key = 1\n"), doctest::Contains("io-parse"), Error);
    CHECK_THROWS_AS(SkewMap::parse("lambda_re = 0.5\n"), Error);
    CHECK_THROWS_AS(SkewMap::load("/nonexistent/path.map"), Error);
}
