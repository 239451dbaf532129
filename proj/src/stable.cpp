#include "skewlab/stable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "skewlab/fit.hpp"
#include "skewlab/parallel.hpp"
#include "skewlab/rng.hpp"

namespace skewlab::stable {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// ---------------------------------------------------------------------------
// Block schedules

std::vector<double> orbit_derivs(const dyncore::FiberPolynomial& p, cnum v, int n) {
    double cutoff = 2.0 * p.escapeRadius();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    cnum z = v;
    for (int m = 0; m < n; ++m) {
        if (std::abs(z) > cutoff)
            throw Error("orbit-escaped", "stable", "critical value orbit escaped");
        out.push_back(std::abs(p.deriv(z)));
        z = p.eval(z);
    }
    return out;
}

BlockSchedule block_schedule(const std::vector<double>& derivs, int N, double eps0,
                             double lambdaAbs, double muExp) {
    if (N < 1) throw Error("precondition", "stable", "block length must be at least 1");
    for (double a : derivs)
        if (!(a > 0.0)) throw Error("precondition", "stable", "derivatives must be positive");
    if (!(eps0 > 0.0)) throw Error("eps0-out-of-range", "stable", "eps0 must be positive");
    if (lambdaAbs > 0.0 && !(std::pow(1.0 + eps0, 3) < 1.0 / lambdaAbs))
        throw Error("eps0-out-of-range", "stable", "(1+eps0)^3 must stay below 1/|lambda|");
    if (muExp > 1.0 && !(eps0 < muExp - 1.0))
        throw Error("eps0-out-of-range", "stable", "eps0 must stay below muExp - 1");

    BlockSchedule s;
    s.N = N;
    s.eps0 = eps0;
    s.derivs = derivs;
    s.mu.resize(derivs.size());
    std::size_t n = derivs.size();
    std::size_t blocks = (n + static_cast<std::size_t>(N) - 1) / static_cast<std::size_t>(N);
    s.firstType.resize(blocks);
    double logThresh = std::log1p(eps0);
    for (std::size_t bidx = 0; bidx < blocks; ++bidx) {
        std::size_t lo = bidx * static_cast<std::size_t>(N);
        std::size_t hi = std::min(n, lo + static_cast<std::size_t>(N));
        double logProd = 0.0;
        for (std::size_t j = lo; j < hi; ++j) logProd += std::log(derivs[j]);
        std::size_t len = hi - lo;
        bool first = logProd >= static_cast<double>(len) * logThresh;
        s.firstType[bidx] = first;
        double mu = first ? (1.0 + eps0) * std::exp(logProd / static_cast<double>(len))
                          : (1.0 + eps0) * (1.0 + eps0);
        for (std::size_t j = lo; j < hi; ++j) s.mu[j] = mu;
    }
    return s;
}

void verify_schedule(const BlockSchedule& s) {
    double logThresh = std::log1p(s.eps0);
    std::size_t n = s.derivs.size();
    std::size_t blocks = (n + static_cast<std::size_t>(s.N) - 1) / static_cast<std::size_t>(s.N);
    if (blocks != s.firstType.size())
        throw Error("schedule-invariant", "stable", "block count mismatch");
    for (std::size_t bidx = 0; bidx < blocks; ++bidx) {
        std::size_t lo = bidx * static_cast<std::size_t>(s.N);
        std::size_t hi = std::min(n, lo + static_cast<std::size_t>(s.N));
        double logProd = 0.0;
        for (std::size_t j = lo; j < hi; ++j) logProd += std::log(s.derivs[j]);
        std::size_t len = hi - lo;
        bool first = logProd >= static_cast<double>(len) * logThresh;
        if (first != s.firstType[bidx])
            throw Error("schedule-invariant", "stable", "block type mismatch");
        double mu = first ? (1.0 + s.eps0) * std::exp(logProd / static_cast<double>(len))
                          : (1.0 + s.eps0) * (1.0 + s.eps0);
        for (std::size_t j = lo; j < hi; ++j) {
            if (std::abs(s.mu[j] - mu) > 1e-12 * mu)
                throw Error("schedule-invariant", "stable", "mu mismatch");
            if (!(s.mu[j] >= 1.0 + s.eps0 - 1e-12))
                throw Error("schedule-invariant", "stable", "mu below 1 + eps0");
        }
    }
}

int choose_block_length(double c1EtaAlpha, double muExp, double eps0, int maxN) {
    if (!(c1EtaAlpha > 0.0) || !(muExp > 0.0))
        throw Error("precondition", "stable", "constants must be positive");
    double lc = std::log(c1EtaAlpha);
    double gap = std::log(muExp) - std::log1p(eps0);
    for (int N = 1; N <= maxN; ++N)
        if (lc + N * gap >= 0.0) return N;
    throw Error("precondition", "stable", "no admissible block length up to maxN");
}

// ---------------------------------------------------------------------------
// Bidisk sequences

namespace {

BidiskSequence build_bidisks(const dyncore::FiberPolynomial& p, cnum v,
                             const std::vector<double>& derivs, const std::vector<double>& mu,
                             double eps0, double r0, int depth) {
    if (!(r0 > 0.0)) throw Error("precondition", "stable", "r0 must be positive");
    if (static_cast<int>(derivs.size()) < depth)
        throw Error("precondition", "stable", "schedule shorter than requested depth");
    BidiskSequence b;
    b.r0 = r0;
    b.eps0 = eps0;
    double cutoff = 2.0 * p.escapeRadius();
    cnum z = v;
    double r = r0;
    for (int i = 0; i <= depth; ++i) {
        if (std::abs(z) > cutoff)
            throw Error("orbit-escaped", "stable", "critical value orbit escaped");
        b.centers.push_back(z);
        b.horizRadii.push_back(r0 * std::pow(1.0 + eps0, -3.0 * i));
        b.vertRadii.push_back(r);
        if (i < depth) {
            r = r * derivs[static_cast<std::size_t>(i)] / mu[static_cast<std::size_t>(i)];
            z = p.eval(z);
        }
    }
    return b;
}

}  // namespace

BidiskSequence radii_tce_wr(const dyncore::FiberPolynomial& p, cnum v, const BlockSchedule& s,
                            double r0, int depth) {
    return build_bidisks(p, v, s.derivs, s.mu, s.eps0, r0, depth);
}

BidiskSequence radii_pl(const dyncore::FiberPolynomial& p, cnum v, double chi, double eps0,
                        const std::vector<double>& derivs, double r0, int depth) {
    if (!(chi > 0.0))
        throw Error("nonpositive-exponent", "stable", "vertical exponent must be positive");
    std::vector<double> mu(derivs.size(), (1.0 + eps0) * std::exp(chi));
    return build_bidisks(p, v, derivs, mu, eps0, r0, depth);
}

RadiiBounds check_bounds_tce_wr(const BidiskSequence& b, const BlockSchedule& s, double dpNorm,
                                double alpha, double iota) {
    RadiiBounds out;
    out.C2 = std::pow(dpNorm, s.N);
    double c3 = kInf;
    std::vector<double> ns, lr;
    for (int n = 0; n <= b.depth(); ++n) {
        double rn = b.vertRadii[static_cast<std::size_t>(n)];
        double upper = out.C2 * b.r0 * std::pow(1.0 + s.eps0, -static_cast<double>(n));
        if (rn > upper * (1.0 + 1e-12)) ++out.upperViolations;
        double lowerShape =
            b.r0 * std::exp(-(alpha + 2.0) * n * iota) * std::pow(1.0 + s.eps0, -2.0 * n);
        if (lowerShape > 0.0) c3 = std::min(c3, rn / lowerShape);
        ns.push_back(static_cast<double>(n));
        lr.push_back(std::log(rn / b.r0));
    }
    out.C3 = (c3 == kInf) ? 0.0 : c3;
    for (int n = 0; n <= b.depth(); ++n) {
        double rn = b.vertRadii[static_cast<std::size_t>(n)];
        double lower = out.C3 * b.r0 * std::exp(-(alpha + 2.0) * n * iota) *
                       std::pow(1.0 + s.eps0, -2.0 * n);
        if (rn < lower * (1.0 - 1e-12)) ++out.lowerViolations;
    }
    out.effectiveSlope = fit_line(ns, lr).slope;
    return out;
}

RadiiBounds check_bounds_pl(const BidiskSequence& b) {
    RadiiBounds out;
    double c2 = 0.0, c3 = kInf;
    std::vector<double> ns, lr;
    for (int n = 0; n <= b.depth(); ++n) {
        double rn = b.vertRadii[static_cast<std::size_t>(n)];
        c2 = std::max(c2, rn / (b.r0 * std::pow(1.0 + 0.5 * b.eps0, -static_cast<double>(n))));
        c3 = std::min(c3, rn / (b.r0 * std::pow(1.0 + 2.0 * b.eps0, -static_cast<double>(n))));
        ns.push_back(static_cast<double>(n));
        lr.push_back(std::log(rn / b.r0));
    }
    out.C2 = c2;
    out.C3 = (c3 == kInf) ? 0.0 : c3;
    for (int n = 0; n <= b.depth(); ++n) {
        double rn = b.vertRadii[static_cast<std::size_t>(n)];
        double upper = out.C2 * b.r0 * std::pow(1.0 + 0.5 * b.eps0, -static_cast<double>(n));
        double lower = out.C3 * b.r0 * std::pow(1.0 + 2.0 * b.eps0, -static_cast<double>(n));
        if (rn > upper * (1.0 + 1e-12)) ++out.upperViolations;
        if (rn < lower * (1.0 - 1e-12)) ++out.lowerViolations;
    }
    out.effectiveSlope = fit_line(ns, lr).slope;
    return out;
}

// ---------------------------------------------------------------------------
// Deviation orbits

DeviationOrbit::DeviationOrbit(const SkewMap& f, cnum v, int maxDepth) : f_(&f) {
    dyncore::FiberPolynomial p = f.fiber();
    double cutoff = 2.0 * p.escapeRadius();
    cnum z = v;
    zeta_.reserve(static_cast<std::size_t>(maxDepth) + 1);
    shifted_.reserve(static_cast<std::size_t>(maxDepth) + 1);
    for (int n = 0; n <= maxDepth; ++n) {
        if (std::abs(z) > cutoff)
            throw Error("orbit-escaped", "stable", "reference orbit escaped within requested depth");
        zeta_.push_back(z);
        shifted_.push_back(p.p.taylor_at(z));
        z = p.eval(z);
    }
}

cnum DeviationOrbit::step(int n, cnum t, cnum d) const {
    std::size_t un = static_cast<std::size_t>(n);
    cnum zn = zeta_[un] + d;
    return shifted_[un].eval_diff(d) + t * f_->hTail(t, zn);
}

// ---------------------------------------------------------------------------
// Critical branches

cnum CriticalBranch::branchOffset(cnum t) const {
    // Continuation in t with deviation-form Newton: solves
    //   t * dhdzTail(t, cbase + e) + [p'(cbase + e) - p'(cbase)] + p'(cbase) = 0
    cnum e = 0.0;
    int K = 1 + static_cast<int>(8.0 * std::abs(t) / rDelta);
    for (int k = 1; k <= K; ++k) {
        cnum tk = t * (static_cast<double>(k) / K);
        for (int it = 0; it < 60; ++it) {
            cnum z = cbase + e;
            cnum F = tk * f->dhdzTail(tk, z) + dpShift.eval_diff(e) + dpShift.c[0];
            cnum dF = f->d2hdz2(tk, z);
            if (std::abs(dF) < 1e-300)
                throw Error("branch-collision", "stable",
                            "second derivative vanished along the branch");
            cnum step = F / dF;
            e -= step;
            if (std::abs(step) <= 1e-15 * (1.0 + std::abs(e))) break;
        }
    }
    return e;
}

cnum CriticalBranch::valueOffset(cnum u) const {
    cnum e = branchOffset(u);
    cnum e0 = branchOffset(cnum(0.0, 0.0));
    cnum z = cbase + e;
    return pShift.eval_diff(e) - pShift.eval_diff(e0) + u * f->hTail(u, z);
}

Point2 CriticalBranch::gamma(cnum u) const { return Point2{f->lambda() * u, v + valueOffset(u)}; }

CriticalBranch critical_branch(const SkewMap& f, cnum c0) {
    dyncore::FiberPolynomial p = f.fiber();
    onedim::CriticalSet cs = onedim::critical_points(p);
    // Locate c0 among the fiber critical points; require a simple, separated one.
    double best = kInf;
    std::size_t bi = 0;
    for (std::size_t i = 0; i < cs.points.size(); ++i) {
        double d = std::abs(cs.points[i].z - c0);
        if (d < best) {
            best = d;
            bi = i;
        }
    }
    if (best > 1e-6)
        throw Error("precondition", "stable", "base point is not a critical point of the fiber");
    if (cs.points[bi].multiplicity != 1)
        throw Error("branch-collision", "stable", "critical branches merge at the base point");
    double sep = kInf;
    for (std::size_t i = 0; i < cs.points.size(); ++i)
        if (i != bi) sep = std::min(sep, std::abs(cs.points[i].z - cs.points[bi].z));

    CriticalBranch br;
    br.f = &f;
    br.c0 = c0;
    br.rDelta = f.rDelta();
    br.cbase = cs.points[bi].z;
    Poly dp = p.p.derivative();
    for (int it = 0; it < 40; ++it) {  // polish the base point
        cnum g = dp.eval(br.cbase);
        cnum dg = p.p.derivative().derivative().eval(br.cbase);
        if (std::abs(dg) < 1e-300) break;
        br.cbase -= g / dg;
    }
    br.pShift = p.p.taylor_at(br.cbase);
    br.dpShift = dp.taylor_at(br.cbase);
    cnum e0 = br.branchOffset(cnum(0.0, 0.0));
    br.v = p.eval(br.cbase) + br.pShift.eval_diff(e0);

    // Continuation sweep over rays: validates residuals and detects collisions.
    const int rays = 32, steps = 16;
    for (int a = 0; a < rays; ++a) {
        cnum dir = std::polar(1.0, 2.0 * kPi * a / rays);
        for (int k = 1; k <= steps; ++k) {
            cnum t = br.rDelta * (static_cast<double>(k) / steps) * dir;
            cnum e = br.branchOffset(t);
            if (std::abs(e) > 0.5 * sep)
                throw Error("branch-collision", "stable",
                            "branch wandered toward a neighboring critical point; reduce r_delta");
            double res = std::abs(f.dhdz(t, br.cbase + e));
            br.maxResidual = std::max(br.maxResidual, res);
        }
    }
    if (br.maxResidual > 1e-10)
        throw Error("non-convergence", "stable", "branch residual above 1e-10");

    // psi'(0) by a ring average (Cauchy), and the first-coordinate power by a
    // log-log fit across two probe radii.
    double rp = br.rDelta * 1e-3;
    cnum acc = 0.0;
    for (int a = 0; a < 8; ++a) {
        cnum u = rp * std::polar(1.0, 2.0 * kPi * (a + 0.5) / 8);
        acc += br.valueOffset(u) / u;
    }
    br.psiPrime0 = acc / 8.0;
    double l1 = std::log(std::abs(f.lambda() * cnum(rp, 0)));
    double l2 = std::log(std::abs(f.lambda() * cnum(2.0 * rp, 0)));
    double slope = (l2 - l1) / (std::log(2.0 * rp) - std::log(rp));
    br.l = static_cast<int>(std::lround(slope));
    if (std::abs(br.psiPrime0) < 1e-12) br.degenerate = true;
    return br;
}

// ---------------------------------------------------------------------------
// Henon-like verification

double modulus_lower_bound(double eps0) {
    if (!(eps0 > 0.0)) throw Error("precondition", "stable", "eps0 must be positive");
    return std::log1p(eps0) / (4.0 * kPi);
}

HenonRecord henon_check(const SkewMap& f, const BidiskSequence& b, int i, int boundarySamples) {
    if (i + 1 > b.depth()) throw Error("index-out-of-range", "stable", "level exceeds depth");
    std::size_t ui = static_cast<std::size_t>(i);
    cnum ci = b.centers[ui], cn = b.centers[ui + 1];
    double ri = b.vertRadii[ui], rn = b.vertRadii[ui + 1];
    double hi = b.horizRadii[ui], hn = b.horizRadii[ui + 1];

    HenonRecord rec;
    rec.modulusLowerBound = modulus_lower_bound(b.eps0);
    rec.verticalOk = std::abs(f.lambda()) * hi < hn;

    // Horizontal-boundary clearance: f(partial_h B_i) must stay clear of B_{i+1}.
    std::vector<cnum> tSamples = {cnum(0, 0)};
    const int tAngles = 8;
    for (double frac : {0.5, 1.0})
        for (int a = 0; a < tAngles; ++a)
            tSamples.push_back(hi * frac * std::polar(1.0, 2.0 * kPi * a / tAngles));
    rec.clearanceMargin = kInf;
    for (cnum t : tSamples) {
        double prev = 0.0;
        for (int s = 0; s <= boundarySamples; ++s) {
            cnum z = ci + ri * std::polar(1.0, 2.0 * kPi * s / boundarySamples);
            double margin = std::abs(f.h(t, z) - cn) - rn;
            rec.clearanceMargin = std::min(rec.clearanceMargin, margin);
            if (s > 0) rec.samplingError = std::max(rec.samplingError, 0.5 * std::abs(margin - prev));
            prev = margin;
        }
    }
    rec.horizontalOk = rec.clearanceMargin > 0.0;

    // Degree: winding of the image of a vertical circle about the next center.
    double total = 0.0;
    cnum prevVal = f.h(cnum(0, 0), ci + ri) - cn;
    for (int s = 1; s <= boundarySamples; ++s) {
        cnum z = ci + ri * std::polar(1.0, 2.0 * kPi * s / boundarySamples);
        cnum val = f.h(cnum(0, 0), z) - cn;
        total += std::arg(val / prevVal);
        prevVal = val;
    }
    rec.winding = static_cast<int>(std::lround(total / (2.0 * kPi)));
    rec.degreeOk = rec.winding == 1;
    return rec;
}

double choose_r0(const SkewMap& f, cnum v, const BlockSchedule& s, int depth, double start,
                 double floor, int boundarySamples) {
    dyncore::FiberPolynomial p = f.fiber();
    for (double r0 = start; r0 >= floor; r0 *= 0.5) {
        BidiskSequence b = radii_tce_wr(p, v, s, r0, depth);
        bool ok = true;
        for (int i = 0; i + 1 <= depth && ok; ++i)
            if (!henon_check(f, b, i, boundarySamples).ok()) ok = false;
        if (ok) return r0;
    }
    throw Error("precondition", "stable", "no r0 above the floor passes the bidisk checks");
}

// ---------------------------------------------------------------------------
// Graph transform

namespace {

cnum backward_solve(const SkewMap& f, cnum t, cnum target, cnum guess) {
    cnum w = guess;
    double res = std::abs(f.h(t, w) - target);
    for (int it = 0; it < 80; ++it) {
        if (res <= 5e-13 * std::max(1.0, std::abs(target))) return w;
        cnum dh = f.dhdz(t, w);
        if (std::abs(dh) < 1e-300) break;
        cnum step = (f.h(t, w) - target) / dh;
        double damp = 1.0;
        for (int h = 0; h < 10; ++h) {
            cnum cand = w - damp * step;
            double r2 = std::abs(f.h(t, cand) - target);
            if (r2 < res) {
                w = cand;
                res = r2;
                break;
            }
            damp *= 0.5;
            if (h == 9) {
                std::ostringstream os;
                os << "backward solve stalled at t = " << t << ", residual " << res;
                throw Error("newton-divergence", "stable", os.str());
            }
        }
    }
    if (res > 5e-13 * std::max(1.0, std::abs(target))) {
        std::ostringstream os;
        os << "backward solve did not converge at t = " << t << ", residual " << res;
        throw Error("newton-divergence", "stable", os.str());
    }
    return w;
}

std::vector<cnum> extend_centers(const dyncore::FiberPolynomial& p, const BidiskSequence& b,
                                 int depth) {
    std::vector<cnum> c = b.centers;
    double cutoff = 2.0 * p.escapeRadius();
    while (static_cast<int>(c.size()) <= depth) {
        cnum z = p.eval(c.back());
        if (std::abs(z) > cutoff)
            throw Error("orbit-escaped", "stable", "reference orbit escaped during extension");
        c.push_back(z);
    }
    return c;
}

cnum solve_chain(const SkewMap& f, const std::vector<cnum>& centers, cnum t0, int depth,
                 double* residual) {
    cnum z = centers[static_cast<std::size_t>(depth)];
    for (int k = depth - 1; k >= 0; --k) {
        cnum tk = t0;
        for (int j = 0; j < k; ++j) tk *= f.lambda();
        cnum target = z;
        z = backward_solve(f, tk, target, centers[static_cast<std::size_t>(k)]);
        if (residual)
            *residual = std::max(*residual, std::abs(f.h(tk, z) - target));
    }
    return z;
}

}  // namespace

StableGraph graph_transform(const SkewMap& f, const BidiskSequence& b, int depth) {
    dyncore::FiberPolynomial p = f.fiber();
    auto centers = extend_centers(p, b, depth + 5);
    StableGraph g;
    g.depth = depth;
    g.u0 = b.horizRadii[0];
    g.rings = 4;
    g.angles = 32;
    g.ts.push_back(cnum(0, 0));
    for (int r = 1; r <= g.rings; ++r)
        for (int a = 0; a < g.angles; ++a)
            g.ts.push_back(g.u0 * (0.25 * r) * std::polar(1.0, 2.0 * kPi * a / g.angles));
    g.gs.resize(g.ts.size());
    std::vector<cnum> gs5(g.ts.size());
    for (std::size_t i = 0; i < g.ts.size(); ++i) {
        g.gs[i] = solve_chain(f, centers, g.ts[i], depth, &g.maxResidual);
        gs5[i] = solve_chain(f, centers, g.ts[i], depth + 5, nullptr);
        g.agreement = std::max(g.agreement, std::abs(g.gs[i] - gs5[i]));
    }
    return g;
}

cnum StableGraph::eval(cnum t) const {
    double rr = std::abs(t) / u0;
    rr = std::min(rr, 1.0);
    auto ringVal = [&](int ring, int angle) -> cnum {
        if (ring <= 0) return gs[0];
        angle = ((angle % angles) + angles) % angles;
        return gs[1 + static_cast<std::size_t>(ring - 1) * angles + static_cast<std::size_t>(angle)];
    };
    double theta = std::arg(t);
    if (theta < 0) theta += 2.0 * kPi;
    double af = theta / (2.0 * kPi) * angles;
    int a0 = static_cast<int>(af) % angles;
    double awt = af - std::floor(af);
    double rf = rr * rings;
    int r1 = static_cast<int>(std::floor(rf));
    double rwt = rf - r1;
    auto catmull = [&](int angle) -> cnum {
        int rm1 = std::max(r1 - 1, 0), r2 = std::min(r1 + 1, rings), r3 = std::min(r1 + 2, rings);
        cnum p0 = ringVal(rm1, angle), p1 = ringVal(std::min(r1, rings), angle),
             p2 = ringVal(r2, angle), p3 = ringVal(r3, angle);
        double u = rwt;
        return 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u +
                      (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
    };
    // cubic in the angle as well: two-sided rays keep the error at h^4
    cnum p0 = catmull(a0 - 1), p1 = catmull(a0), p2 = catmull(a0 + 1), p3 = catmull(a0 + 2);
    double u = awt;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
}

ShadowRate shadow_rate(const SkewMap& f, const StableGraph& graph, cnum v, int depth) {
    dyncore::FiberPolynomial p = f.fiber();
    std::vector<cnum> ref{v};
    for (int k = 0; k < depth; ++k) ref.push_back(p.eval(ref.back()));
    // The graph value carries a solve error of order 1e-13 which the vertical
    // expansion amplifies by the derivative cocycle; distances below that
    // amplified floor are rounding artifacts, not shadow distances.
    std::vector<double> noiseFloor(static_cast<std::size_t>(depth) + 1);
    double growth = 1.0;
    for (int k = 0; k <= depth; ++k) {
        noiseFloor[static_cast<std::size_t>(k)] = 1e-13 * growth;
        if (k < depth) growth *= std::max(1.0, std::abs(p.deriv(ref[static_cast<std::size_t>(k)])));
    }
    std::vector<double> ks, ld;
    int maxK = 0;
    for (std::size_t i = 0; i < graph.ts.size(); ++i) {
        if (std::abs(graph.ts[i]) == 0.0) continue;  // on the invariant fiber: distances vanish
        Point2 x{graph.ts[i], graph.gs[i]};
        for (int k = 1; k <= depth; ++k) {
            x = f.apply(x);
            double d = std::abs(x.z - ref[static_cast<std::size_t>(k)]);
            if (d > 10.0 * noiseFloor[static_cast<std::size_t>(k)]) {
                ks.push_back(static_cast<double>(k));
                ld.push_back(std::log(d));
                maxK = std::max(maxK, k);
            }
        }
    }
    ShadowRate out;
    if (ks.size() < 3 || maxK < 2) {
        out.insufficientData = true;
        return out;
    }
    LineFit fit = fit_line(ks, ld);
    out.lambda1 = std::exp(fit.slope);
    out.C0 = std::exp(fit.intercept);
    if (out.lambda1 >= 1.0)
        throw Error("non-contracting", "stable", "shadow distances do not contract");
    return out;
}

double branch_graph_gap(const CriticalBranch& branch, const StableGraph& graph) {
    double gap = 0.0;
    for (std::size_t i = 0; i < graph.ts.size(); ++i) {
        cnum t = graph.ts[i];
        cnum u = t / branch.f->lambda();  // gamma(u) sits over t = lambda u
        if (std::abs(u) > branch.rDelta) continue;
        Point2 gpt = branch.gamma(u);
        gap = std::max(gap, std::abs(gpt.z - graph.gs[i]));
    }
    return gap;
}

// ---------------------------------------------------------------------------
// Renormalization scales

namespace {

struct CurveOrbitEval {
    const SkewMap* f;
    const CriticalBranch* branch;
    const DeviationOrbit* dev;
    int n;

    // psi_n(u) - p^n(v), exact to relative precision for tiny |u|.
    cnum operator()(cnum u) const {
        cnum d = branch->valueOffset(u);
        cnum t = f->lambda() * u;
        for (int k = 0; k < n; ++k) {
            d = dev->step(k, t, d);
            t *= f->lambda();
        }
        return d;
    }
};

// Boundary max with one Richardson refinement: evaluates 2K samples and
// extrapolates from the K-sample estimate.
double boundary_max(const CurveOrbitEval& eval, double rho, int K) {
    double mAll = 0.0, mHalf = 0.0;
    for (int s = 0; s < 2 * K; ++s) {
        double v = std::abs(eval(rho * std::polar(1.0, kPi * s / K)));
        mAll = std::max(mAll, v);
        if (s % 2 == 0) mHalf = std::max(mHalf, v);
    }
    return mAll + (mAll - mHalf);
}

}  // namespace

RenormScale renorm_scale(const SkewMap& f, const CriticalBranch& branch, const BidiskSequence& b,
                         int n, const DeviationOrbit& dev) {
    if (branch.degenerate || std::abs(branch.psiPrime0) < 1e-12)
        throw Error("degenerate-branch", "stable",
                    "value curve is not vertical; renormalization undefined");
    if (n > b.depth() || n > dev.maxDepth())
        throw Error("depth-insufficient", "stable", "bidisk or reference depth too small");
    double rn = b.vertRadii[static_cast<std::size_t>(n)];
    CurveOrbitEval eval{&f, &branch, &dev, n};
    const int K = 512;
    double half = 0.5 * rn;

    auto contained = [&](double rho) { return boundary_max(eval, rho, K) <= half; };

    double hi = branch.rDelta;
    RenormScale out;
    out.n = n;
    if (contained(hi)) {
        out.rho = hi;  // capped by the parametrization domain
    } else {
        double lo = hi;
        int guard = 0;
        while (!contained(lo)) {
            lo *= 0.25;
            if (++guard > 700)
                throw Error("bisection-bracket-failure", "stable", "no contained radius found");
        }
        double hiB = std::min(4.0 * lo, hi);
        for (int it = 0; it < 50; ++it) {
            double mid = std::sqrt(lo * hiB);
            if (contained(mid))
                lo = mid;
            else
                hiB = mid;
        }
        out.rho = lo;
    }

    // Degree: winding of the deviation along a circle just outside rho.
    {
        const int W = 2048;
        double rw = out.rho * (1.0 + 1e-6);
        double total = 0.0;
        cnum prev = eval(cnum(rw, 0));
        for (int s = 1; s <= W; ++s) {
            cnum val = eval(rw * std::polar(1.0, 2.0 * kPi * s / W));
            total += std::arg(val / prev);
            prev = val;
        }
        out.degree = static_cast<int>(std::lround(total / (2.0 * kPi)));
    }

    // diam of psi_n^{-1}(half V_n) / rho by first-exit ray tracing.
    {
        const int rays = 512;
        std::vector<cnum> pts(rays);
        for (int a = 0; a < rays; ++a) {
            cnum dir = std::polar(1.0, 2.0 * kPi * a / rays);
            double sIn = out.rho, sOut = branch.rDelta;
            bool exited = false;
            for (double sProbe = out.rho * 1.03; sProbe <= branch.rDelta; sProbe *= 1.03) {
                if (std::abs(eval(sProbe * dir)) > half) {
                    sOut = sProbe;
                    exited = true;
                    break;
                }
                sIn = sProbe;
            }
            if (exited) {
                for (int it = 0; it < 35; ++it) {
                    double mid = 0.5 * (sIn + sOut);
                    if (std::abs(eval(mid * dir)) <= half)
                        sIn = mid;
                    else
                        sOut = mid;
                }
            } else {
                sIn = branch.rDelta;
            }
            pts[static_cast<std::size_t>(a)] = sIn * dir;
        }
        double diam = 0.0;
        for (int i = 0; i < rays; ++i)
            for (int j = i + 1; j < rays; ++j)
                diam = std::max(diam, std::abs(pts[static_cast<std::size_t>(i)] -
                                               pts[static_cast<std::size_t>(j)]));
        out.diamD = diam / out.rho;
    }
    return out;
}

int j_of_s(const std::vector<double>& scales, double lambdaAbs, double s) {
    for (std::size_t i = 1; i < scales.size(); ++i)
        if (scales[i] > scales[i - 1] * (1.0 + 1e-12))
            throw Error("non-monotone-scales", "stable", "scale sequence must be non-increasing");
    double target = s * std::log(lambdaAbs);
    int j = -1;
    for (std::size_t i = 0; i < scales.size(); ++i)
        if (target <= std::log(scales[i])) j = static_cast<int>(i);
    return j;
}

// ---------------------------------------------------------------------------
// Escape statistics

bool BulgedTrap::contains(cnum z) const {
    if (std::abs(z) > base.infinityRadius - eps) return true;
    for (const auto& d : base.cycleDisks)
        if (std::abs(z - d.center) < d.radius + eps) return true;
    return false;
}

BulgedTrap bulge_trap(const SkewMap& f, const TrappingRegion& trap, double startEps) {
    const int tAngles = 8, zAngles = 64;
    for (double eps = startEps; eps >= 1e-9; eps *= 0.5) {
        BulgedTrap bt{trap, eps};
        std::vector<cnum> tSamples = {cnum(0, 0)};
        for (double frac : {0.5, 1.0})
            for (int a = 0; a < tAngles; ++a)
                tSamples.push_back(f.rDelta() * frac * std::polar(1.0, 2.0 * kPi * a / tAngles));
        bool ok = true;
        for (cnum t : tSamples) {
            for (const auto& d : trap.cycleDisks) {
                for (int s = 0; s < zAngles && ok; ++s) {
                    cnum z = d.center + (d.radius + eps) * std::polar(1.0, 2.0 * kPi * s / zAngles);
                    if (!bt.contains(f.h(t, z))) ok = false;
                }
                if (ok && !bt.contains(f.h(t, d.center))) ok = false;
            }
            for (int s = 0; s < zAngles && ok; ++s) {
                cnum z = (trap.infinityRadius - eps) * std::polar(1.0, 2.0 * kPi * s / zAngles);
                if (!(std::abs(f.h(t, z)) > trap.infinityRadius - eps)) ok = false;
            }
            if (!ok) break;
        }
        if (ok) return bt;
    }
    throw Error("trap-not-invariant", "stable", "no bulging margin makes the trap invariant");
}

double default_beta(double lambdaAbs, double supPartials) {
    return -std::log(lambdaAbs) / (2.0 * std::log(supPartials));
}

EscapeResult escape_fraction(const SkewMap& f, const CriticalBranch& branch, const BulgedTrap& trap,
                             const std::vector<double>& scales, double s, std::size_t count,
                             std::uint64_t seed, double beta, const DeviationOrbit& dev,
                             int threads) {
    if (count == 0) throw Error("precondition", "stable", "sample count must be positive");
    double lambdaAbs = std::abs(f.lambda());
    if (!scales.empty() && s * std::log(lambdaAbs) <= std::log(scales.back()))
        throw Error("depth-insufficient", "stable",
                    "scale sequence too short to determine j(s)");
    int js = j_of_s(scales, lambdaAbs, s);
    int m = js + static_cast<int>(std::floor(beta * s));
    if (m < 0) m = 0;
    if (m > dev.maxDepth())
        throw Error("depth-insufficient", "stable", "reference orbit shorter than j(s) + beta s");

    cnum lamPow = std::pow(f.lambda(), cnum(s, 0));
    std::vector<std::uint8_t> member(count, 0);
    parallel_for(count, threads, [&](std::size_t i) {
        Rng rng(seed, i + 1);
        cnum u = rng.disk(cnum(0, 0), branch.rDelta);
        cnum w = lamPow * u;
        cnum d = branch.valueOffset(w);
        cnum t = f.lambda() * w;
        bool blewUp = false;
        for (int k = 0; k < m; ++k) {
            d = dev.step(k, t, d);
            t *= f.lambda();
            if (std::abs(d) > 1e30) {  // far beyond every trap boundary
                blewUp = true;
                break;
            }
        }
        bool in = blewUp || trap.contains(dev.center(std::min(m, dev.maxDepth())) + d);
        member[i] = in ? 1 : 0;
    });
    std::size_t hits = 0;
    for (std::uint8_t v : member) hits += v;
    EscapeResult out;
    out.js = js;
    out.steps = m;
    out.fraction = static_cast<double>(hits) / static_cast<double>(count);
    out.complement = 1.0 - out.fraction;
    return out;
}

}  // namespace skewlab::stable
