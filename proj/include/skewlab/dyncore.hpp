#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "skewlab/common.hpp"
#include "skewlab/poly.hpp"

namespace skewlab::dyncore {

struct Point2 {
    cnum t;
    cnum z;
};

// Fiber polynomial p(z) = h(0, z).
struct FiberPolynomial {
    Poly p;

    int degree() const { return p.degree(); }
    cnum eval(cnum z) const { return p.eval(z); }
    cnum deriv(cnum z) const { return p.derivative().eval(z); }

    // Radius beyond which every orbit increases in modulus. At least 2.
    double escapeRadius() const;
};

// f(t,z) = (lambda*t, h(t,z)) with h(t,z) = sum_j a_j(t) z^j.
// Immutable after construction; safe to share across threads.
class SkewMap {
public:
    SkewMap(cnum lambda, std::vector<Poly> coeffs, double rDelta);

    cnum lambda() const { return lambda_; }
    double rDelta() const { return rDelta_; }
    int fiberDegree() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<Poly>& coeffs() const { return coeffs_; }

    FiberPolynomial fiber() const;

    cnum h(cnum t, cnum z) const;       // sum a_j(t) z^j
    cnum dhdz(cnum t, cnum z) const;    // sum j a_j(t) z^{j-1}
    cnum dhdt(cnum t, cnum z) const;    // sum a_j'(t) z^j
    cnum d2hdz2(cnum t, cnum z) const;

    // (h(t,z) - h(0,z)) / t evaluated without cancellation; exact identity
    // h(t,z) = p(z) + t * hTail(t,z).
    cnum hTail(cnum t, cnum z) const;
    cnum dhdzTail(cnum t, cnum z) const;  // same split for dh/dz

    Point2 apply(Point2 x) const;  // throws domain-exceeded if |t| > rDelta

    // Plain-text key-value map definition format.
    static SkewMap parse(const std::string& text);
    static SkewMap load(const std::string& path);
    std::string format() const;

private:
    cnum lambda_;
    std::vector<Poly> coeffs_;       // a_j(t), j = 0..d
    std::vector<Poly> coeffDeriv_;   // a_j'(t)
    std::vector<Poly> coeffTail_;    // (a_j(t) - a_j(0)) / t
    double rDelta_;
};

struct OrbitTrace {
    std::vector<Point2> points;  // points[k] = f^k(x), k = 0..steps
    std::vector<cnum> vderivs;   // dh/dz at points[k]
    bool escaped = false;        // stopped early: |z| exceeded 2 * escape radius
    std::size_t steps() const { return points.empty() ? 0 : points.size() - 1; }
};

inline Point2 eval_skew(const SkewMap& f, Point2 x) { return f.apply(x); }

cnum vertical_derivative(const SkewMap& f, Point2 x);

OrbitTrace orbit(const SkewMap& f, Point2 x, std::size_t n);

// Product of vderivs[i..i+k); equals the vertical component of Df^k applied
// to the unit vertical vector at points[i]. Fixed ascending product order.
cnum vertical_cocycle(const OrbitTrace& trace, std::size_t i, std::size_t k);

// Polydisk region |t - tCenter| <= tRadius, |z - zCenter| <= zRadius.
struct Region {
    cnum tCenter;
    double tRadius;
    cnum zCenter;
    double zRadius;
};

struct PartialSupBound {
    double M;  // >= sampled sup of max(|dh/dz|, |dh/dt|) times 1.1, floored at |lambda|
    Region region;
};

// Boundary grid maximum (valid for holomorphic integrands by the maximum
// principle on the polydisk), gridResolution angles per circle.
PartialSupBound sup_partials(const SkewMap& f, const Region& region, int gridResolution);

}  // namespace skewlab::dyncore
