#pragma once

#include <cstddef>
#include <vector>

#include "skewlab/common.hpp"

namespace skewlab {

// Dense polynomial with complex coefficients, ascending powers: c[k] * z^k.
struct Poly {
    std::vector<cnum> c;

    Poly() = default;
    explicit Poly(std::vector<cnum> coeffs) : c(std::move(coeffs)) {}

    int degree() const {
        int d = static_cast<int>(c.size()) - 1;
        while (d > 0 && c[static_cast<std::size_t>(d)] == cnum(0.0, 0.0)) --d;
        return d;
    }

    bool isZero() const {
        for (const auto& a : c)
            if (a != cnum(0.0, 0.0)) return false;
        return true;
    }

    // Horner, fixed descending-index order so results are bit-reproducible.
    cnum eval(cnum z) const {
        if (c.empty()) return cnum(0.0, 0.0);
        cnum acc = c.back();
        for (std::size_t k = c.size() - 1; k-- > 0;) acc = acc * z + c[k];
        return acc;
    }

    Poly derivative() const {
        if (c.size() <= 1) return Poly{{cnum(0.0, 0.0)}};
        std::vector<cnum> d(c.size() - 1);
        for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
        return Poly{std::move(d)};
    }

    // (p(t) - p(0)) / t, exact coefficient shift; used to evaluate differences
    // p(t) - p(0) = t * tail(t) without cancellation at tiny |t|.
    Poly tail() const {
        if (c.size() <= 1) return Poly{{cnum(0.0, 0.0)}};
        return Poly{std::vector<cnum>(c.begin() + 1, c.end())};
    }

    // Coefficients of w -> p(center + w) (classic repeated-Horner shift).
    Poly taylor_at(cnum center) const {
        Poly q = *this;
        if (q.c.empty()) return q;
        std::size_t n = q.c.size() - 1;
        for (std::size_t k = 0; k <= n; ++k)
            for (std::size_t j = n; j-- > k;) q.c[j] += center * q.c[j + 1];
        return q;
    }

    // Sum_{k>=1} c[k] d^k for a shifted polynomial: evaluates p(center+d)-p(center)
    // exactly from taylor_at(center) coefficients, stable for |d| down to 1e-300.
    cnum eval_diff(cnum d) const {
        if (c.size() <= 1) return cnum(0.0, 0.0);
        cnum acc = c.back();
        for (std::size_t k = c.size() - 1; k-- > 1;) acc = acc * d + c[k];
        return acc * d;
    }

    double coeffScale(double absZ) const {
        double s = 0.0, zk = 1.0;
        for (const auto& a : c) {
            s += std::abs(a) * zk;
            zk *= absZ;
        }
        return s;
    }
};

// All complex roots by Aberth–Ehrlich simultaneous iteration with Newton
// polishing. Throws Error("non-convergence", ...) with residual diagnostics.
std::vector<cnum> poly_roots(const Poly& p, double tol = 1e-13, int maxIter = 400);

// Greedy cluster merge; returns (representative, multiplicity).
std::vector<std::pair<cnum, int>> cluster_roots(const std::vector<cnum>& roots, double tol);

}  // namespace skewlab
