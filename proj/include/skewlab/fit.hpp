#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "skewlab/common.hpp"

namespace skewlab {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;  // root mean square residual
    std::size_t n = 0;
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    LineFit f;
    f.n = xs.size() < ys.size() ? xs.size() : ys.size();
    if (f.n == 0) return f;
    if (f.n == 1) {
        f.intercept = ys[0];
        return f;
    }
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    double mx = sx / f.n, my = sy / f.n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
        double r = ys[i] - (f.intercept + f.slope * xs[i]);
        ss += r * r;
    }
    f.rms = std::sqrt(ss / f.n);
    return f;
}

// Ordinary least squares on the tail after discarding a burn-in prefix
// (default 10% of the points, rounded down).
inline LineFit fit_line_burnin(const std::vector<double>& xs, const std::vector<double>& ys,
                               double burninFrac = 0.10) {
    std::size_t n = xs.size() < ys.size() ? xs.size() : ys.size();
    std::size_t skip = static_cast<std::size_t>(burninFrac * static_cast<double>(n));
    std::vector<double> x2(xs.begin() + skip, xs.begin() + n);
    std::vector<double> y2(ys.begin() + skip, ys.begin() + n);
    return fit_line(x2, y2);
}

// y = a + b*x1 + c*x2 by normal equations.
struct PlaneFit {
    double a = 0, b = 0, c = 0, rms = 0;
    std::size_t n = 0;
};

inline PlaneFit fit_plane(const std::vector<double>& x1, const std::vector<double>& x2,
                          const std::vector<double>& y) {
    PlaneFit f;
    f.n = y.size();
    if (f.n < 3) return f;
    double s1 = 0, s2 = 0, sy = 0, s11 = 0, s22 = 0, s12 = 0, s1y = 0, s2y = 0;
    double n = static_cast<double>(f.n);
    for (std::size_t i = 0; i < f.n; ++i) {
        s1 += x1[i];
        s2 += x2[i];
        sy += y[i];
        s11 += x1[i] * x1[i];
        s22 += x2[i] * x2[i];
        s12 += x1[i] * x2[i];
        s1y += x1[i] * y[i];
        s2y += x2[i] * y[i];
    }
    // Solve [n s1 s2; s1 s11 s12; s2 s12 s22] [a b c]' = [sy s1y s2y]' by Cramer.
    double m[3][3] = {{n, s1, s2}, {s1, s11, s12}, {s2, s12, s22}};
    double r[3] = {sy, s1y, s2y};
    auto det3 = [](double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
               a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    double d = det3(m);
    if (d == 0.0) return f;
    double sol[3];
    for (int k = 0; k < 3; ++k) {
        double mk[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) mk[i][j] = (j == k) ? r[i] : m[i][j];
        sol[k] = det3(mk) / d;
    }
    f.a = sol[0];
    f.b = sol[1];
    f.c = sol[2];
    double ss = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
        double e = y[i] - (f.a + f.b * x1[i] + f.c * x2[i]);
        ss += e * e;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

}  // namespace skewlab
