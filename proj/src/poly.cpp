#include "skewlab/poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace skewlab {

namespace {

cnum solve_linear(cnum a0, cnum a1) { return -a0 / a1; }

std::pair<cnum, cnum> solve_quadratic(cnum a0, cnum a1, cnum a2) {
    // Numerically stable form: avoid cancellation between -b and the radical.
    cnum disc = std::sqrt(a1 * a1 - 4.0 * a2 * a0);
    cnum q = (std::real(std::conj(a1) * disc) >= 0.0) ? -0.5 * (a1 + disc) : -0.5 * (a1 - disc);
    cnum r1 = (q != cnum(0.0)) ? q / a2 : cnum(0.0);
    cnum r2 = (q != cnum(0.0)) ? a0 / q : -a1 / a2 - r1;
    return {r1, r2};
}

}  // namespace

std::vector<cnum> poly_roots(const Poly& pIn, double tol, int maxIter) {
    Poly p = pIn;
    int deg = p.degree();
    p.c.resize(static_cast<std::size_t>(deg) + 1);
    if (deg == 0)
        throw Error("precondition", "poly", "root solve on a constant polynomial");

    std::vector<cnum> roots;
    // Exact zero roots deflate trivially.
    std::size_t zshift = 0;
    while (zshift < p.c.size() - 1 && p.c[zshift] == cnum(0.0, 0.0)) ++zshift;
    for (std::size_t k = 0; k < zshift; ++k) roots.push_back(cnum(0.0, 0.0));
    if (zshift > 0) p.c.erase(p.c.begin(), p.c.begin() + static_cast<long>(zshift));
    deg = p.degree();
    if (deg == 0) return roots;

    if (deg == 1) {
        roots.push_back(solve_linear(p.c[0], p.c[1]));
        return roots;
    }
    if (deg == 2) {
        auto [r1, r2] = solve_quadratic(p.c[0], p.c[1], p.c[2]);
        roots.push_back(r1);
        roots.push_back(r2);
        return roots;
    }

    Poly dp = p.derivative();
    std::size_t n = static_cast<std::size_t>(deg);

    // Cauchy-style initial radius, points spread on a circle with an offset
    // angle so real-axis symmetric polynomials do not start on their roots.
    double maxc = 0.0;
    for (std::size_t k = 0; k < n; ++k) maxc = std::max(maxc, std::abs(p.c[k]));
    double radius = 1.0 + maxc / std::abs(p.c[n]);
    std::vector<cnum> z(n);
    for (std::size_t k = 0; k < n; ++k) {
        double th = 2.0 * kPi * (static_cast<double>(k) + 0.35) / static_cast<double>(n) + 0.4;
        z[k] = radius * cnum(std::cos(th), std::sin(th));
    }

    std::vector<bool> done(n, false);
    for (int it = 0; it < maxIter; ++it) {
        bool all = true;
        for (std::size_t i = 0; i < n; ++i) {
            cnum pv = p.eval(z[i]);
            if (std::abs(pv) <= tol * std::max(1.0, p.coeffScale(std::abs(z[i])))) {
                done[i] = true;
                continue;
            }
            all = false;
            cnum dv = dp.eval(z[i]);
            if (dv == cnum(0.0, 0.0)) {
                z[i] += cnum(1e-8 * radius, 1e-8 * radius);
                continue;
            }
            cnum newt = pv / dv;
            cnum sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                cnum d = z[i] - z[j];
                if (d == cnum(0.0, 0.0)) d = cnum(1e-14 * radius, 0.0);
                sum += 1.0 / d;
            }
            cnum denom = 1.0 - newt * sum;
            cnum step = (denom == cnum(0.0, 0.0)) ? newt : newt / denom;
            z[i] -= step;
        }
        if (all) break;
    }

    // Newton polish.
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) {
            cnum dv = dp.eval(z[i]);
            if (std::abs(dv) < 1e-300) break;
            cnum step = p.eval(z[i]) / dv;
            if (!(std::abs(step) < 1.0 + std::abs(z[i]))) break;
            z[i] -= step;
        }
    }

    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        worst = std::max(worst, std::abs(p.eval(z[i])) / std::max(1.0, p.coeffScale(std::abs(z[i]))));
    if (worst > 1e-8) {
        std::ostringstream os;
        os << "root iteration stalled, worst relative residual " << worst;
        throw Error("non-convergence", "poly", os.str());
    }

    roots.insert(roots.end(), z.begin(), z.end());
    return roots;
}

std::vector<std::pair<cnum, int>> cluster_roots(const std::vector<cnum>& roots, double tol) {
    std::vector<std::pair<cnum, int>> out;
    std::vector<bool> used(roots.size(), false);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        cnum sum = roots[i];
        int count = 1;
        used[i] = true;
        for (std::size_t j = i + 1; j < roots.size(); ++j) {
            if (!used[j] && std::abs(roots[j] - sum / static_cast<double>(count)) <= tol) {
                sum += roots[j];
                ++count;
                used[j] = true;
            }
        }
        out.emplace_back(sum / static_cast<double>(count), count);
    }
    return out;
}

}  // namespace skewlab
