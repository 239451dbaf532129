#include "skewlab/onedim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <unordered_set>

#include "skewlab/parallel.hpp"
#include "skewlab/rng.hpp"

namespace skewlab::onedim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPhiCap = 50.0;

double dist_to(const std::vector<cnum>& pts, cnum z) {
    double d = kInf;
    for (cnum c : pts) d = std::min(d, std::abs(z - c));
    return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// Critical set

std::vector<cnum> CriticalSet::critPrime() const {
    std::vector<cnum> out;
    for (const auto& cp : points)
        if (cp.inJulia) out.push_back(cp.z);
    return out;
}

std::vector<cnum> CriticalSet::all() const {
    std::vector<cnum> out;
    for (const auto& cp : points) out.push_back(cp.z);
    return out;
}

double CriticalSet::distToCritPrime(cnum z) const {
    double d = kInf;
    for (const auto& cp : points)
        if (cp.inJulia) d = std::min(d, std::abs(z - cp.z));
    return d;
}

double CriticalSet::distToCrit(cnum z) const {
    double d = kInf;
    for (const auto& cp : points) d = std::min(d, std::abs(z - cp.z));
    return d;
}

CriticalSet critical_points(const FiberPolynomial& p) {
    if (p.degree() < 2) throw Error("precondition", "onedim", "fiber degree must be at least 2");
    Poly dp = p.p.derivative();
    auto roots = poly_roots(dp, 1e-14, 600);
    auto clusters = cluster_roots(roots, 1e-7);
    CriticalSet cs;
    double worst = 0.0;
    for (auto& [z, mult] : clusters) {
        double res = std::abs(dp.eval(z)) / std::max(1.0, dp.coeffScale(std::abs(z)));
        worst = std::max(worst, res);
        cs.points.push_back(CriticalPoint{z, mult, true, false});
    }
    if (worst > 1e-10) {
        std::ostringstream os;
        os << "critical point refinement residual " << worst;
        throw Error("non-convergence", "onedim", os.str());
    }
    std::sort(cs.points.begin(), cs.points.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        if (a.z.real() != b.z.real()) return a.z.real() < b.z.real();
        return a.z.imag() < b.z.imag();
    });
    return cs;
}

namespace {

// Multiplier of p^q along a cycle starting at z0.
double cycle_multiplier(const FiberPolynomial& p, cnum z0, int q) {
    cnum z = z0, m = 1.0;
    for (int k = 0; k < q; ++k) {
        m *= p.deriv(z);
        z = p.eval(z);
    }
    return std::abs(m);
}

// Per-point radii with p(D(z_i, r_i)) inside D(z_{i+1}, r_{i+1}): propagate
// the boundary-sampled image spread around the cycle and require the loop to
// close with margin. Individual steps may expand (multiplier > 1 at a single
// point) as long as the full period contracts. Empty when no r0 works.
std::vector<double> cycle_capture_radii(const FiberPolynomial& p, const std::vector<cnum>& cyc) {
    const int samples = 128;
    for (double r0 = 0.1; r0 > 1e-12; r0 *= 0.5) {
        std::vector<double> radii(cyc.size(), 0.0);
        radii[0] = r0;
        double r = r0;
        bool ok = true;
        for (std::size_t i = 0; i < cyc.size(); ++i) {
            cnum next = cyc[(i + 1) % cyc.size()];
            double spread = 0.0;
            for (int s = 0; s < samples; ++s) {
                cnum w = cyc[i] + r * std::polar(1.0, 2.0 * kPi * s / samples);
                spread = std::max(spread, std::abs(p.eval(w) - next));
            }
            spread *= 1.05;  // sampling slack
            if (i + 1 < cyc.size()) {
                radii[i + 1] = spread;
                r = spread;
            } else if (spread > r0 * (1.0 - 1e-3)) {
                ok = false;
            }
        }
        if (ok) return radii;
    }
    return {};
}

bool same_cycle(const std::vector<cnum>& a, const std::vector<cnum>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (cnum x : a) {
        bool found = false;
        for (cnum y : b)
            if (std::abs(x - y) < tol) {
                found = true;
                break;
            }
        if (!found) return false;
    }
    return true;
}

// Newton on p^q(z) - z.
bool refine_cycle_point(const FiberPolynomial& p, int q, cnum& z) {
    for (int it = 0; it < 60; ++it) {
        cnum w = z, dw = 1.0;
        for (int k = 0; k < q; ++k) {
            dw *= p.deriv(w);
            w = p.eval(w);
        }
        cnum g = w - z, dg = dw - 1.0;
        if (std::abs(dg) < 1e-300) return false;
        cnum step = g / dg;
        z -= step;
        if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(z))) return true;
    }
    return false;
}

}  // namespace

void classify_crit(const FiberPolynomial& p, CriticalSet& cs, int budget) {
    double cutoff = 2.0 * p.escapeRadius();
    const int window = 32;
    const double cauchyTol = 1e-9;

    // Pass 1: detect attracting cycles from critical orbits (every attracting
    // cycle attracts a critical orbit).
    for (const auto& cp : cs.points) {
        std::vector<cnum> ring;
        cnum z = cp.z;
        bool escaped = false;
        for (int k = 0; k < budget; ++k) {
            z = p.eval(z);
            if (std::abs(z) > cutoff) {
                escaped = true;
                break;
            }
            ring.push_back(z);
            if (ring.size() > 2 * window) ring.erase(ring.begin());
        }
        if (escaped || ring.size() < 2 * window) continue;
        std::size_t last = ring.size() - 1;
        for (int q = 1; q <= window; ++q) {
            if (std::abs(ring[last] - ring[last - static_cast<std::size_t>(q)]) > cauchyTol) continue;
            cnum z0 = ring[last];
            if (!refine_cycle_point(p, q, z0)) continue;
            double mult = cycle_multiplier(p, z0, q);
            if (mult >= 1.0 - 1e-9) continue;
            std::vector<cnum> cyc;
            cnum w = z0;
            for (int k = 0; k < q; ++k) {
                cyc.push_back(w);
                w = p.eval(w);
            }
            bool dup = false;
            for (const auto& existing : cs.cycles)
                if (same_cycle(existing.points, cyc, 1e-8)) dup = true;
            if (dup) break;
            auto radii = cycle_capture_radii(p, cyc);
            if (!radii.empty()) cs.cycles.push_back(AttractingCycle{cyc, mult, radii});
            break;
        }
    }

    // Pass 2: label critical points.
    for (auto& cp : cs.points) {
        cnum z = cp.z;
        bool decided = false;
        for (int k = 0; k <= budget; ++k) {
            if (std::abs(z) > cutoff) {
                cp.inJulia = false;
                cp.ambiguous = false;
                decided = true;
                break;
            }
            for (const auto& cyc : cs.cycles) {
                for (std::size_t i = 0; i < cyc.points.size(); ++i)
                    if (std::abs(z - cyc.points[i]) < cyc.radii[i]) {
                        cp.inJulia = false;
                        cp.ambiguous = false;
                        decided = true;
                    }
                if (decided) break;
            }
            if (decided || k == budget) break;
            z = p.eval(z);
        }
        if (!decided) {
            cp.inJulia = true;
            cp.ambiguous = true;
        }
    }
}

// ---------------------------------------------------------------------------
// Julia sampling

double JuliaSampler::distToCloud(cnum z) const {
    double d = kInf;
    for (cnum c : cloud) d = std::min(d, std::abs(z - c));
    return d;
}

JuliaSampler julia_sample(const FiberPolynomial& p, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw Error("precondition", "onedim", "sample count must be at least 1");
    JuliaSampler s;
    s.p = p;
    s.R = p.escapeRadius();

    CriticalSet cs = critical_points(p);
    classify_crit(p, cs, 2000);
    s.cycles = cs.cycles;

    // Repelling fixed point with the largest multiplier starts the walk.
    Poly fixEq = p.p;
    if (fixEq.c.size() < 2) fixEq.c.resize(2, cnum(0.0, 0.0));
    fixEq.c[1] -= 1.0;
    auto fps = poly_roots(fixEq);
    cnum start;
    double bestMult = 1.0 + 1e-9;
    bool found = false;
    for (cnum z : fps) {
        double m = std::abs(p.deriv(z));
        if (m > bestMult) {
            bestMult = m;
            start = z;
            found = true;
        }
    }
    if (!found) throw Error("no-repelling-fixed-point", "onedim", "inverse iteration cannot start");

    const std::size_t burnIn = 50;
    Rng rng(seed, 0x1d);
    cnum z = start;
    s.cloud.reserve(count);
    for (std::size_t k = 0; k < burnIn + count; ++k) {
        Poly pre = p.p;
        pre.c[0] -= z;
        auto roots = poly_roots(pre, 1e-13, 500);
        z = roots[rng.index(roots.size())];
        if (k >= burnIn) s.cloud.push_back(z);
    }
    return s;
}

GreenValue green_eval(const FiberPolynomial& p, const std::vector<AttractingCycle>& cycles, cnum z,
                      int maxDepth) {
    GreenValue g;
    int d = p.degree();
    cnum w = z, dw = 1.0;
    double dk = 1.0;
    for (int k = 0; k <= maxDepth; ++k) {
        if (std::abs(w) > 1e8) {
            g.escaped = true;
            g.steps = k;
            g.G = std::log(std::abs(w)) / dk;
            g.gradAbs = std::abs(dw) / (dk * std::abs(w));
            return g;
        }
        for (const auto& cyc : cycles)
            for (std::size_t i = 0; i < cyc.points.size(); ++i)
                if (std::abs(w - cyc.points[i]) < cyc.radii[i]) {
                    g.capturedByCycle = true;
                    g.steps = k;
                    return g;
                }
        dw *= p.deriv(w);
        w = p.eval(w);
        dk *= d;
    }
    g.steps = maxDepth;
    return g;
}

DistanceBracket green_distance(const JuliaSampler& sampler, cnum z, int depth) {
    if (depth < 8) throw Error("precondition", "onedim", "green distance needs depth >= 8");
    GreenValue g = green_eval(sampler.p, sampler.cycles, z, std::max(depth, 400));
    if (g.escaped) {
        if (g.G < 1e-14) throw Error("on-julia", "onedim", "escape rate below 1e-14");
        // Exterior distance estimator; reduces to [G/(2|G'|), 2G/|G'|] as
        // G -> 0 and remains a valid bracket at large G.
        double s = std::sinh(g.G);
        DistanceBracket b;
        b.lower = s / (2.0 * std::exp(g.G) * g.gradAbs);
        b.upper = 2.0 * s / g.gradAbs;
        return b;
    }
    if (g.capturedByCycle) {
        double d = sampler.distToCloud(z);
        return DistanceBracket{0.5 * d, d, true};
    }
    throw Error("on-julia", "onedim", "orbit neither escapes nor converges within depth");
}

// ---------------------------------------------------------------------------
// Condition estimators

namespace {

bool is_crit_prime(const CriticalSet& cs, cnum c) {
    for (const auto& cp : cs.points)
        if (cp.inJulia && std::abs(cp.z - c) < 1e-9) return true;
    return false;
}

}  // namespace

CeReport ce_report(const FiberPolynomial& p, const CriticalSet& cs, cnum c, int n) {
    if (!is_crit_prime(cs, c))
        throw Error("precondition", "onedim", "point is not a critical point in the Julia set");
    double cutoff = 2.0 * p.escapeRadius();
    CeReport rep;
    cnum v = p.eval(c);
    rep.logDeriv.push_back(0.0);
    cnum z = v;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        if (std::abs(z) > cutoff) throw Error("orbit-escaped", "onedim", "critical value orbit escaped");
        double a = std::abs(p.deriv(z));
        if (a == 0.0) throw Error("log-of-zero", "onedim", "orbit hits a critical point exactly");
        acc += std::log(a);
        rep.logDeriv.push_back(acc);
        z = p.eval(z);
    }
    std::vector<double> ks(rep.logDeriv.size());
    for (std::size_t i = 0; i < ks.size(); ++i) ks[i] = static_cast<double>(i);
    LineFit f = fit_line_burnin(ks, rep.logDeriv);
    rep.muCE = std::exp(f.slope);
    rep.C = std::exp(f.intercept);
    rep.residual = f.rms;
    rep.cePlausible = rep.muCE > 1.0 && rep.residual < 0.1;
    return rep;
}

LyapunovReport lyapunov_at_value(const FiberPolynomial& p, cnum v, int n) {
    double cutoff = 2.0 * p.escapeRadius();
    LyapunovReport rep;
    cnum z = v;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        if (std::abs(z) > cutoff) {
            rep.escaped = true;
            throw Error("orbit-escaped", "onedim", "orbit escaped before requested horizon");
        }
        double a = std::abs(p.deriv(z));
        if (a == 0.0) {
            rep.zeroHit = true;
            rep.zeroHitIndex = k;
            break;
        }
        acc += std::log(a);
        rep.runningAvg.push_back(acc / static_cast<double>(k + 1));
        z = p.eval(z);
    }
    rep.value = rep.runningAvg.empty() ? 0.0 : rep.runningAvg.back();
    return rep;
}

double wr_sum(const FiberPolynomial& p, const CriticalSet& cs, cnum v, int n, double eta) {
    double cutoff = 2.0 * p.escapeRadius();
    auto crit = cs.critPrime();
    double sum = 0.0;
    cnum z = v;
    for (int j = 0; j < n; ++j) {
        if (std::abs(z) > cutoff) throw Error("orbit-escaped", "onedim", "orbit escaped in wr_sum");
        if (!crit.empty() && dist_to(crit, z) <= eta) {
            double a = std::abs(p.deriv(z));
            sum += -std::log(std::max(a, std::exp(-kPhiCap)));
        }
        z = p.eval(z);
    }
    return sum;
}

std::vector<WrProfilePoint> wr_profile(const FiberPolynomial& p, const CriticalSet& cs, cnum v,
                                       int n, const std::vector<double>& etaGrid) {
    double cutoff = 2.0 * p.escapeRadius();
    auto crit = cs.critPrime();
    std::vector<double> dist(static_cast<std::size_t>(n)), logd(static_cast<std::size_t>(n));
    cnum z = v;
    for (int j = 0; j < n; ++j) {
        if (std::abs(z) > cutoff) throw Error("orbit-escaped", "onedim", "orbit escaped in wr_profile");
        dist[static_cast<std::size_t>(j)] = crit.empty() ? kInf : dist_to(crit, z);
        double a = std::abs(p.deriv(z));
        logd[static_cast<std::size_t>(j)] = -std::log(std::max(a, std::exp(-kPhiCap)));
        z = p.eval(z);
    }
    std::vector<WrProfilePoint> out;
    for (double eta : etaGrid) {
        WrProfilePoint pt;
        pt.eta = eta;
        std::vector<double> ks, sums;
        double acc = 0.0;
        double tail = 0.0;
        for (int j = 0; j < n; ++j) {
            if (dist[static_cast<std::size_t>(j)] <= eta) acc += logd[static_cast<std::size_t>(j)];
            ks.push_back(static_cast<double>(j + 1));
            sums.push_back(acc);
            if (j + 1 >= n / 2) tail = std::max(tail, acc / static_cast<double>(j + 1));
        }
        LineFit f = fit_line_burnin(ks, sums);
        pt.tailSup = tail;
        pt.slope = f.slope;
        pt.c0 = f.intercept;
        out.push_back(pt);
    }
    return out;
}

std::vector<int> sr_check(const FiberPolynomial& p, const CriticalSet& cs, cnum v, int n,
                          double alpha) {
    double cutoff = 2.0 * p.escapeRadius();
    auto crit = cs.critPrime();
    std::vector<int> bad;
    cnum z = v;
    for (int j = 0; j <= n; ++j) {
        if (std::abs(z) > cutoff) break;
        if (!crit.empty() && dist_to(crit, z) < std::exp(-alpha * j)) bad.push_back(j);
        z = p.eval(z);
    }
    return bad;
}

DpuReport dpu_sum(const FiberPolynomial& p, const CriticalSet& cs, cnum x, int n) {
    DpuReport rep;
    auto crit = cs.critPrime();
    rep.excluded = static_cast<int>(crit.size());
    rep.scalingOffset = std::log(2.0 * p.escapeRadius());
    if (crit.empty()) {
        rep.critEmpty = true;
        rep.partialSums.assign(static_cast<std::size_t>(n), 0.0);
        return rep;
    }
    double cutoff = 2.0 * p.escapeRadius();
    cnum z = x;
    // Truncated prefix sums: the M largest terms so far live in a min-heap.
    std::priority_queue<double, std::vector<double>, std::greater<double>> top;
    double sumAll = 0.0, sumTop = 0.0;
    std::size_t M = crit.size();
    for (int j = 0; j < n; ++j) {
        if (std::abs(z) > cutoff) throw Error("orbit-escaped", "onedim", "orbit escaped in dpu_sum");
        double d = dist_to(crit, z);
        double phi = -std::log(d) + rep.scalingOffset;
        if (phi > kPhiCap) {
            phi = kPhiCap;
            ++rep.clipEvents;
        }
        if (phi < 0.0) phi = 0.0;  // metric scaling keeps phi positive
        sumAll += phi;
        top.push(phi);
        sumTop += phi;
        if (top.size() > M) {
            sumTop -= top.top();
            top.pop();
        }
        double truncated = sumAll - sumTop;
        rep.partialSums.push_back(truncated);
        rep.Q = std::max(rep.Q, truncated / static_cast<double>(j + 1));
        z = p.eval(z);
    }
    return rep;
}

double hyperbolic_away(const FiberPolynomial& p, const CriticalSet& cs, cnum x, int N, double eta) {
    auto crit = cs.critPrime();
    double cutoff = 2.0 * p.escapeRadius();
    cnum z = x;
    double acc = 0.0;
    for (int i = 0; i < N; ++i) {
        if (std::abs(z) > cutoff)
            throw Error("orbit-escaped", "onedim", "orbit escaped in hyperbolic_away");
        if (!crit.empty() && dist_to(crit, z) <= eta)
            throw Error("segment-enters-eta-neighborhood", "onedim",
                        "orbit segment enters the eta neighborhood of Crit'");
        acc += std::log(std::abs(p.deriv(z)));
        z = p.eval(z);
    }
    return std::exp(acc);
}

HyperbolicAwayFit hyperbolic_away_fit(const FiberPolynomial& p, const CriticalSet& cs,
                                      const JuliaSampler& sampler, double muExp,
                                      const std::vector<double>& etaGrid, int maxN,
                                      std::uint64_t seed) {
    auto crit = cs.critPrime();
    double cutoff = 2.0 * p.escapeRadius();
    Rng rng(seed, 0x7a);
    std::vector<double> logEta, rhs;
    for (double eta : etaGrid) {
        for (int rep = 0; rep < 16; ++rep) {
            cnum x = sampler.cloud.empty() ? cnum(0, 0) : sampler.cloud[rng.index(sampler.cloud.size())];
            cnum z = x;
            double acc = 0.0;
            for (int i = 0; i < maxN; ++i) {
                if (std::abs(z) > cutoff) break;
                if (!crit.empty() && dist_to(crit, z) <= eta) break;
                acc += std::log(std::abs(p.deriv(z)));
                int N = i + 1;
                if (N >= 4) {
                    logEta.push_back(std::log(eta));
                    rhs.push_back(acc - N * std::log(muExp));
                }
                z = p.eval(z);
            }
        }
    }
    HyperbolicAwayFit out;
    out.muExp = muExp;
    out.samples = rhs.size();
    if (rhs.empty()) return out;
    double spread = 0.0;
    for (double le : logEta) spread = std::max(spread, std::abs(le - logEta[0]));
    if (spread < 1e-12) {
        double mean = 0.0;
        for (double y : rhs) mean += y;
        mean /= static_cast<double>(rhs.size());
        out.alpha = 0.0;
        out.C1 = std::exp(mean);
    } else {
        LineFit f = fit_line(logEta, rhs);
        out.alpha = f.slope;
        out.C1 = std::exp(f.intercept);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exponential shrinking

namespace {

struct CritLocal {
    cnum z;
    int mult;  // branching order of p at the critical point
    double A;  // m! / |p^(m)(z)|
};

std::vector<CritLocal> crit_local_models(const FiberPolynomial& p, const CriticalSet& cs) {
    std::vector<CritLocal> out;
    for (const auto& cp : cs.points) {
        int m = cp.multiplicity + 1;
        Poly sh = p.p.taylor_at(cp.z);
        double fact = 1.0;
        for (int k = 2; k <= m; ++k) fact *= k;
        double dm = (static_cast<std::size_t>(m) < sh.c.size())
                        ? std::abs(sh.c[static_cast<std::size_t>(m)]) * fact
                        : 0.0;
        double A = dm > 0.0 ? fact / dm : 0.0;
        out.push_back(CritLocal{cp.z, m, A});
    }
    return out;
}

}  // namespace

ShrinkReport exp_shrink_estimate(const FiberPolynomial& p, const CriticalSet& cs, cnum x, double r,
                                 int depth, int branches, std::uint64_t seed) {
    auto crit = cs.all();
    auto models = crit_local_models(p, cs);
    ShrinkReport rep;
    rep.maxDiamUpper.assign(static_cast<std::size_t>(depth) + 1, 0.0);
    rep.maxDiamLower.assign(static_cast<std::size_t>(depth) + 1, 0.0);
    rep.maxDiam.assign(static_cast<std::size_t>(depth) + 1, 0.0);

    for (int b = 0; b < branches; ++b) {
        Rng rng(seed, static_cast<std::uint64_t>(b) + 1);
        cnum center = x;
        double up = r, lo = r;
        bool branchUnivalent = true;
        double prevGeo = kInf;
        for (int n = 0; n <= depth; ++n) {
            double geo = 2.0 * std::sqrt(up * lo);
            std::size_t un = static_cast<std::size_t>(n);
            rep.maxDiamUpper[un] = std::max(rep.maxDiamUpper[un], 2.0 * up);
            rep.maxDiamLower[un] = std::max(rep.maxDiamLower[un], 2.0 * lo);
            rep.maxDiam[un] = std::max(rep.maxDiam[un], geo);
            if (branchUnivalent && geo > prevGeo * (1.0 + 1e-12)) rep.perBranchMonotone = false;
            prevGeo = geo;
            if (n == depth) break;

            Poly pre = p.p;
            pre.c[0] -= center;
            auto roots = poly_roots(pre, 1e-13, 500);
            cnum w = roots[rng.index(roots.size())];
            double dc = crit.empty() ? kInf : dist_to(crit, w);
            double pd = std::abs(p.deriv(w));

            double upLin = pd > 0.0 ? up / pd : kInf;
            double sUp = 4.0 * upLin / dc;
            if (pd > 0.0 && sUp < 1.0) {
                // Univalent pullback: inverse-branch distortion bracket.
                double loLin = lo / pd;
                double sLo = 4.0 * loLin / dc;
                up = upLin / ((1.0 - sUp) * (1.0 - sUp));
                lo = loLin / ((1.0 + sLo) * (1.0 + sLo));
                center = w;
                continue;
            }
            std::size_t ci = 0;
            double best = kInf;
            for (std::size_t i = 0; i < models.size(); ++i) {
                double d = std::abs(w - models[i].z);
                if (d < best) {
                    best = d;
                    ci = i;
                }
            }
            const CritLocal& cl = models[ci];
            double offset = std::abs(p.eval(cl.z) - center);
            double m = static_cast<double>(cl.mult);
            double rhoCrit = cl.A > 0.0 ? std::pow((up + offset) * cl.A, 1.0 / m) : 0.0;
            if (cl.A > 0.0 && best <= rhoCrit) {
                // Critical pullback: local power model around the critical point.
                up = best + rhoCrit;
                lo = 0.5 * std::pow(lo * cl.A, 1.0 / m);
                center = w;
                branchUnivalent = false;
                ++rep.criticalPullbacks;
                continue;
            }
            ++rep.unresolved;  // distortion regime violated; reported, not dropped
            break;
        }
    }

    std::vector<double> ks, ys;
    for (int n = 0; n <= depth; ++n)
        if (rep.maxDiam[static_cast<std::size_t>(n)] > 0.0) {
            ks.push_back(static_cast<double>(n));
            ys.push_back(std::log(rep.maxDiam[static_cast<std::size_t>(n)]));
        }
    LineFit f = fit_line_burnin(ks, ys);
    rep.muExp = std::exp(-f.slope);
    rep.fitResidual = f.rms;
    return rep;
}

ShrinkTheta exp_shrink_theta(const FiberPolynomial& p, const CriticalSet& cs, cnum x,
                             const std::vector<double>& rGrid, int depth, int branches,
                             std::uint64_t seed) {
    std::vector<double> ns, logr, y;
    for (double r : rGrid) {
        ShrinkReport rep = exp_shrink_estimate(p, cs, x, r, depth, branches, seed);
        std::size_t count = rep.maxDiam.size();
        std::size_t skip = count / 10;
        for (std::size_t n = skip; n < count; ++n)
            if (rep.maxDiam[n] > 0.0) {
                ns.push_back(static_cast<double>(n));
                logr.push_back(std::log(r));
                y.push_back(std::log(rep.maxDiam[n]));
            }
    }
    PlaneFit f = fit_plane(ns, logr, y);
    ShrinkTheta out;
    out.muExp = std::exp(-f.b);
    out.theta0 = f.c;
    out.rms = f.rms;
    return out;
}

// ---------------------------------------------------------------------------
// Box dimension

BoxDimension box_dimension(const std::vector<cnum>& cloud, int maxScales) {
    if (cloud.empty()) throw Error("precondition", "onedim", "empty cloud");
    double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
    for (cnum z : cloud) {
        x0 = std::min(x0, z.real());
        x1 = std::max(x1, z.real());
        y0 = std::min(y0, z.imag());
        y1 = std::max(y1, z.imag());
    }
    double L = std::max(x1 - x0, y1 - y0);
    if (L == 0.0) return BoxDimension{0.0, 0.0, 0};

    std::vector<double> logInvEps, logN;
    for (int k = 1; k <= maxScales; ++k) {
        double eps = L / std::pow(2.0, k);
        std::unordered_set<std::uint64_t> cells;
        cells.reserve(cloud.size());
        for (cnum z : cloud) {
            std::uint64_t ix = static_cast<std::uint64_t>((z.real() - x0) / eps);
            std::uint64_t iy = static_cast<std::uint64_t>((z.imag() - y0) / eps);
            cells.insert((ix << 32) | (iy & 0xffffffffULL));
        }
        double N = static_cast<double>(cells.size());
        double occupancy = static_cast<double>(cloud.size()) / N;
        if (N >= 8.0 && occupancy >= 10.0) {
            logInvEps.push_back(std::log(1.0 / eps));
            logN.push_back(std::log(N));
        }
    }
    if (logN.size() < 4)
        throw Error("insufficient-scales", "onedim", "fewer than 4 usable scales for box counting");
    LineFit f = fit_line(logInvEps, logN);
    return BoxDimension{f.slope, f.rms, logN.size()};
}

// ---------------------------------------------------------------------------
// Trapping regions and K_m

bool TrappingRegion::contains(cnum z) const {
    if (std::abs(z) > infinityRadius) return true;
    for (const auto& d : cycleDisks)
        if (std::abs(z - d.center) < d.radius) return true;
    return false;
}

void TrappingRegion::verify(const FiberPolynomial& p, int boundarySamples) const {
    double margin = kInf;
    for (const auto& d : cycleDisks) {
        for (int s = 0; s < boundarySamples; ++s) {
            for (double frac : {0.0, 0.5, 1.0}) {
                cnum w = d.center + frac * d.radius * std::polar(1.0, 2.0 * kPi * s / boundarySamples);
                cnum img = p.eval(w);
                double m = -kInf;
                if (std::abs(img) > infinityRadius) m = std::abs(img) - infinityRadius;
                for (const auto& e : cycleDisks) m = std::max(m, e.radius - std::abs(img - e.center));
                margin = std::min(margin, m);
            }
        }
    }
    for (int s = 0; s < boundarySamples; ++s) {
        cnum w = infinityRadius * std::polar(1.0, 2.0 * kPi * s / boundarySamples);
        margin = std::min(margin, std::abs(p.eval(w)) - infinityRadius);
    }
    if (!(margin >= 1e-6))
        throw Error("trap-not-invariant", "onedim",
                    "forward invariance margin " + std::to_string(margin) + " below 1e-6");
}

TrappingRegion trap_from_cycles(const FiberPolynomial& p,
                                const std::vector<AttractingCycle>& cycles) {
    TrappingRegion trap;
    trap.infinityRadius = 2.0 * p.escapeRadius();
    for (const auto& cyc : cycles)
        for (std::size_t i = 0; i < cyc.points.size(); ++i)
            trap.cycleDisks.push_back(Disk{cyc.points[i], cyc.radii[i]});
    return trap;
}

KmReport km_measure(const FiberPolynomial& p, const TrappingRegion& trap, int mMax, int resolution,
                    double windowHalfWidth, int threads) {
    trap.verify(p);
    double W = windowHalfWidth;
    double cell = 2.0 * W / resolution;
    double cellArea = cell * cell;
    std::size_t res = static_cast<std::size_t>(resolution);

    std::vector<int> entry(res * res);
    parallel_for(res, threads, [&](std::size_t row) {
        double y = -W + (static_cast<double>(row) + 0.5) * cell;
        for (std::size_t col = 0; col < res; ++col) {
            double x = -W + (static_cast<double>(col) + 0.5) * cell;
            cnum z(x, y);
            int first = mMax + 1;
            for (int m = 0; m <= mMax; ++m) {
                if (trap.contains(z)) {
                    first = m;
                    break;
                }
                z = p.eval(z);
            }
            entry[row * res + col] = first;
        }
    });

    KmReport rep;
    rep.counts.assign(static_cast<std::size_t>(mMax) + 1, 0);
    for (int e : entry)
        for (int m = 0; m <= mMax; ++m)
            if (e > m) ++rep.counts[static_cast<std::size_t>(m)];
    std::vector<double> ms, la;
    for (int m = 0; m <= mMax; ++m) {
        double area = cellArea * rep.counts[static_cast<std::size_t>(m)];
        rep.areas.push_back(area);
        if (area > 0.0) {
            ms.push_back(static_cast<double>(m));
            la.push_back(std::log(area));
        }
    }
    LineFit f = fit_line(ms, la);
    rep.slope = f.slope;
    rep.residual = f.rms;
    return rep;
}

// ---------------------------------------------------------------------------
// Blaschke checks

cnum Blaschke::eval(cnum z) const {
    cnum acc = std::polar(1.0, phase);
    for (cnum b : zeros) acc *= (z - b) / (1.0 - std::conj(b) * z);
    return acc;
}

bool DiskUnion::contains(cnum z) const {
    for (const auto& d : disks)
        if (std::abs(z - d.center) < d.radius) return true;
    return false;
}

double blaschke_ratio(const Blaschke& G, const DiskUnion& R, std::size_t points,
                      std::uint64_t seed) {
    if (R.disks.empty()) return 0.0;
    Rng rngPre(seed, 1), rngR(seed, 2);
    std::size_t hitsPre = 0, hitsR = 0;
    for (std::size_t k = 0; k < points; ++k) {
        if (R.contains(G.eval(rngPre.unit_disk()))) ++hitsPre;
        if (R.contains(0.5 * rngR.unit_disk())) ++hitsR;
    }
    double measPre = kPi * static_cast<double>(hitsPre) / static_cast<double>(points);
    double measR = (kPi / 4.0) * static_cast<double>(hitsR) / static_cast<double>(points);
    if (measR <= 0.0) return 0.0;
    double expo = std::pow(2.0, -static_cast<double>(G.criticalCount()));
    return measPre / std::pow(measR, expo);
}

BlaschkeCheck blaschke_measure_check(int maxCritical, std::size_t trials,
                                     std::size_t pointsPerTrial, std::uint64_t seed) {
    if (trials < 1) throw Error("precondition", "onedim", "trials must be at least 1");
    BlaschkeCheck out;
    out.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(seed, 0x5b + t);
        int degree = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(maxCritical) + 1));
        Blaschke G;
        G.phase = rng.uniform(0.0, 2.0 * kPi);
        for (int k = 0; k < degree; ++k)
            G.zeros.push_back(degree == 1 ? cnum(0.0, 0.0) : 0.6 * rng.unit_disk());
        DiskUnion R;
        std::size_t nd = 1 + rng.index(3);
        for (std::size_t k = 0; k < nd; ++k) {
            cnum c = 0.35 * rng.unit_disk();
            double rad = rng.uniform(0.02, 0.12);
            rad = std::min(rad, 0.5 - std::abs(c));
            if (rad > 0.0) R.disks.push_back(Disk{c, rad});
        }
        double ratio = blaschke_ratio(G, R, pointsPerTrial, seed ^ (t * 0x9e37ULL));
        out.worstRatio = std::max(out.worstRatio, ratio);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Przytycki return times

PrzytyckiResult przytycki_stat(const FiberPolynomial& p, const CriticalSet& cs, cnum c, double eps,
                               int budget) {
    if (!is_crit_prime(cs, c))
        throw Error("precondition", "onedim", "point is not a critical point in the Julia set");
    double cutoff = 4.0 * p.escapeRadius();
    const int angles = 64;
    std::vector<cnum> pts;
    pts.push_back(c);
    for (double frac : {0.25, 0.5, 0.75, 1.0})
        for (int a = 0; a < angles; ++a)
            pts.push_back(c + eps * frac * std::polar(1.0, 2.0 * kPi * a / angles));

    PrzytyckiResult res;
    res.samplesUsed = static_cast<int>(pts.size());
    std::vector<cnum> cur = pts;
    std::vector<bool> live(cur.size(), true);
    for (int n = 1; n <= budget; ++n) {
        double minDist = kInf;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            if (!live[i]) continue;
            cur[i] = p.eval(cur[i]);
            if (std::abs(cur[i]) > cutoff) {
                live[i] = false;
                continue;
            }
            minDist = std::min(minDist, std::abs(cur[i] - c));
        }
        if (minDist <= eps) {
            res.firstReturn = n;
            return res;
        }
        // Near misses trigger angle refinement on the outer ring, re-iterated
        // from scratch to the current depth.
        if (minDist <= 2.0 * eps) {
            std::vector<cnum> extra;
            for (int a = 0; a < 2 * angles; ++a)
                extra.push_back(c + eps * std::polar(1.0, 2.0 * kPi * (a + 0.5) / (2 * angles)));
            for (cnum w : extra) {
                cnum z = w;
                bool ok = true;
                for (int k = 0; k < n && ok; ++k) {
                    z = p.eval(z);
                    if (std::abs(z) > cutoff) ok = false;
                }
                if (ok && std::abs(z - c) <= eps) {
                    res.firstReturn = n;
                    res.samplesUsed += static_cast<int>(extra.size());
                    return res;
                }
            }
            res.samplesUsed += static_cast<int>(extra.size());
        }
    }
    return res;
}

PrzytyckiFit przytycki_fit(const FiberPolynomial& p, const CriticalSet& cs, cnum c,
                           const std::vector<double>& epsGrid, int budget) {
    PrzytyckiFit out;
    out.epsGrid = epsGrid;
    double C = kInf;
    for (double eps : epsGrid) {
        auto r = przytycki_stat(p, cs, c, eps, budget);
        out.returnTimes.push_back(r.firstReturn.value_or(-1));
        if (r.firstReturn && eps < 1.0)
            C = std::min(C, static_cast<double>(*r.firstReturn) / std::log(1.0 / eps));
    }
    out.C = (C == kInf) ? 0.0 : C;
    return out;
}

}  // namespace skewlab::onedim
