#include "skewlab/twodim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skewlab/parallel.hpp"
#include "skewlab/rng.hpp"

namespace skewlab::twodim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPhiCap = 50.0;

}  // namespace

// ---------------------------------------------------------------------------
// Vertical distance field

double VerticalDistanceField::eval(Point2 x) const {
    if (critEmpty) return kInf;
    double d = kInf;
    for (const auto& br : branches) {
        cnum c = br.cbase + br.branchOffset(x.t);
        d = std::min(d, std::abs(x.z - c));
    }
    return d;
}

VerticalDistanceField build_distance_field(const SkewMap& f) {
    VerticalDistanceField field;
    auto p = f.fiber();
    auto cs = onedim::critical_points(p);
    onedim::classify_crit(p, cs, 2000);
    for (const auto& cp : cs.points)
        if (cp.inJulia) field.branches.push_back(stable::critical_branch(f, cp.z));
    field.critEmpty = field.branches.empty();
    return field;
}

// ---------------------------------------------------------------------------
// Slow approach

SlowApproachResult slow_approach_test(const SkewMap& f, const VerticalDistanceField& field,
                                      Point2 x, double alpha, int nMin, int nMax) {
    if (!(alpha >= 0.0)) throw Error("precondition", "twodim", "alpha must be nonnegative");
    double cutoff = 2.0 * f.fiber().escapeRadius();
    SlowApproachResult out;
    Point2 cur = x;
    for (int n = 0; n <= nMax; ++n) {
        if (std::abs(cur.z) > cutoff) {
            out.escaped = true;  // vacuously slow approaching
            return out;
        }
        if (n >= nMin && !field.critEmpty && field.eval(cur) < std::exp(-alpha * n))
            out.violations.push_back(n);
        if (n < nMax) cur = f.apply(cur);
    }
    return out;
}

SlowApproachBatch slow_approach_batch(const SkewMap& f, const VerticalDistanceField& field,
                                      int fibers, int pointsPerFiber, double tRadius,
                                      double zHalfWidth, double alpha, int nMin, int nMax,
                                      std::uint64_t seed, int threads) {
    SlowApproachBatch out;
    std::size_t total = static_cast<std::size_t>(fibers) * static_cast<std::size_t>(pointsPerFiber);
    out.total = total;
    std::vector<std::uint8_t> flag(total, 0);  // 1 = violating, 2 = escaped
    parallel_for(total, threads, [&](std::size_t idx) {
        std::size_t fiberIdx = idx / static_cast<std::size_t>(pointsPerFiber);
        Rng tRng(seed, fiberIdx + 1);
        cnum t = tRng.disk(cnum(0, 0), tRadius);
        Rng zRng(seed, total + idx + 1);
        cnum z(zRng.uniform(-zHalfWidth, zHalfWidth), zRng.uniform(-zHalfWidth, zHalfWidth));
        auto res = slow_approach_test(f, field, Point2{t, z}, alpha, nMin, nMax);
        if (res.escaped)
            flag[idx] = 2;
        else if (!res.violations.empty())
            flag[idx] = 1;
    });
    out.perFiber.assign(static_cast<std::size_t>(fibers), 0.0);
    for (std::size_t idx = 0; idx < total; ++idx) {
        if (flag[idx] == 1) {
            ++out.violating;
            out.perFiber[idx / static_cast<std::size_t>(pointsPerFiber)] += 1.0;
        } else if (flag[idx] == 2) {
            ++out.escaped;
        }
    }
    for (double& fr : out.perFiber) fr /= static_cast<double>(pointsPerFiber);
    out.violatingFraction = static_cast<double>(out.violating) / static_cast<double>(total);
    return out;
}

// ---------------------------------------------------------------------------
// Vertical Lyapunov

VLyapReport vertical_lyapunov(const SkewMap& f, Point2 x, int n) {
    double cutoff = 2.0 * f.fiber().escapeRadius();
    VLyapReport rep;
    Point2 cur = x;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        if (std::abs(cur.z) > cutoff)
            throw Error("orbit-escaped", "twodim", "orbit escaped before the requested horizon");
        double a = std::abs(f.dhdz(cur.t, cur.z));
        if (a == 0.0) {
            rep.zeroHit = true;
            break;
        }
        acc += std::log(a);
        rep.runningAvg.push_back(acc / static_cast<double>(k + 1));
        cur = f.apply(cur);
    }
    if (!rep.runningAvg.empty()) {
        std::size_t from = rep.runningAvg.size() - rep.runningAvg.size() / 4;
        if (from >= rep.runningAvg.size()) from = rep.runningAvg.size() - 1;
        double mn = kInf;
        for (std::size_t k = from; k < rep.runningAvg.size(); ++k) mn = std::min(mn, rep.runningAvg[k]);
        rep.liminfProxy = mn;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Pliss hyperbolic times

HypTimeRecord pliss_hyperbolic_times(const std::vector<double>& logDerivs, double sigma) {
    if (!(sigma > 1.0)) throw Error("precondition", "twodim", "sigma must exceed 1");
    HypTimeRecord rec;
    rec.logDerivs = logDerivs;
    rec.sigma = sigma;
    double ls = std::log(sigma);
    std::size_t n = logDerivs.size();
    // T_m = S_m - m log sigma; m is hyperbolic iff T_m >= max_{i<m} T_i.
    double S = 0.0;
    double prefixMax = 0.0;  // T_0 = 0
    for (std::size_t m = 1; m <= n; ++m) {
        S += logDerivs[m - 1];
        double T = S - static_cast<double>(m) * ls;
        if (T >= prefixMax) rec.times.push_back(static_cast<int>(m));
        prefixMax = std::max(prefixMax, T);
    }
    rec.density = n == 0 ? 0.0 : static_cast<double>(rec.times.size()) / static_cast<double>(n);
    return rec;
}

// ---------------------------------------------------------------------------
// Expanding horizon

std::optional<long> expanding_horizon(Point2 x, double theta, double M) {
    if (!(M > 1.0)) throw Error("precondition", "twodim", "M must exceed 1");
    if (!(theta > 0.0) || !(theta < 1.0 / std::log(M)))
        throw Error("precondition", "twodim", "theta must lie strictly inside (0, 1/log M)");
    double a = std::abs(x.t);
    if (a == 0.0) return std::nullopt;  // invariant fiber: every time is expanding
    if (a > 1.0) throw Error("precondition", "twodim", "|t| must not exceed 1");
    return static_cast<long>(std::floor(-theta * std::log(a)));
}

// ---------------------------------------------------------------------------
// Shadow sets

PhiOrbit phi_orbit(const SkewMap& f, const VerticalDistanceField& field, Point2 x, int n) {
    PhiOrbit out;
    out.offset = std::log(2.0 * f.fiber().escapeRadius());
    out.critEmpty = field.critEmpty;
    double cutoff = 2.0 * f.fiber().escapeRadius();
    Point2 cur = x;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        if (std::abs(cur.z) > cutoff) {
            out.escaped = true;
            break;
        }
        double phi;
        if (field.critEmpty) {
            phi = 0.0;
        } else {
            phi = -std::log(field.eval(cur)) + out.offset;
            if (phi > kPhiCap) {
                phi = kPhiCap;
                ++out.clipEvents;
            }
            if (phi < 0.0) phi = 0.0;
        }
        out.phi.push_back(phi);
        sum += phi;
        out.C = std::max(out.C, sum / static_cast<double>(k + 1));
        cur = f.apply(cur);
    }
    return out;
}

ShadowConfig shadow_membership(const std::vector<double>& phi, double K, int N) {
    if (!(K > 0.0)) throw Error("precondition", "twodim", "K must be positive");
    if (N < 0) throw Error("precondition", "twodim", "N must be nonnegative");
    ShadowConfig cfg;
    cfg.K = K;
    cfg.N = N;
    std::size_t len = phi.size();
    std::vector<int> diff(len + 2, 0);
    double sum = 0.0, supAvg = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
        sum += phi[j];
        supAvg = std::max(supAvg, sum / static_cast<double>(j + 1));
        // integers n with j < n <= j + K phi_j, clipped to len
        long lo = static_cast<long>(j) + 1;
        long hi = static_cast<long>(std::floor(static_cast<double>(j) + K * phi[j]));
        if (hi > static_cast<long>(len)) hi = static_cast<long>(len);
        if (hi >= lo) {
            diff[static_cast<std::size_t>(lo)] += 1;
            diff[static_cast<std::size_t>(hi) + 1] -= 1;
        }
    }
    cfg.counts.resize(len);
    cfg.member.resize(len);
    int running = 0;
    std::size_t members = 0;
    for (std::size_t n = 1; n <= len; ++n) {
        running += diff[n];
        cfg.counts[n - 1] = running;
        bool in = running <= N;
        cfg.member[n - 1] = in ? 1 : 0;
        if (in) ++members;
    }
    cfg.density = len == 0 ? 0.0 : static_cast<double>(members) / static_cast<double>(len);
    cfg.bound = 1.0 - supAvg * K / static_cast<double>(N + 1);
    cfg.boundHolds = cfg.density >= cfg.bound - 1e-12;
    return cfg;
}

// ---------------------------------------------------------------------------
// Classification

Trap2D build_trap2d(const SkewMap& f, const std::vector<onedim::AttractingCycle>& cycles) {
    Trap2D trap;
    trap.escapeRadius = 2.0 * f.fiber().escapeRadius();
    int id = 0;
    for (const auto& cyc : cycles) {
        for (std::size_t i = 0; i < cyc.points.size(); ++i) {
            trap.disks.push_back(onedim::Disk{cyc.points[i], cyc.radii[i]});
            trap.cycleId.push_back(id);
        }
        ++id;
    }
    if (trap.disks.empty()) return trap;

    // Bulging threshold: halve until every bulged cycle trap is forward
    // invariant (boundary sampled), i.e. h(t, D_i) lands in the next disk for
    // all |t| <= rBulge.
    const int tAngles = 8, zAngles = 64;
    for (double rb = std::min(f.rDelta(), 1.0); rb >= 1e-9; rb *= 0.5) {
        bool ok = true;
        std::size_t k = 0;
        for (const auto& cyc : cycles) {
            for (std::size_t i = 0; i < cyc.points.size() && ok; ++i) {
                cnum next = cyc.points[(i + 1) % cyc.points.size()];
                double rNext = cyc.radii[(i + 1) % cyc.points.size()];
                for (int ta = 0; ta < tAngles && ok; ++ta) {
                    cnum t = rb * std::polar(1.0, 2.0 * kPi * ta / tAngles);
                    for (int s = 0; s <= zAngles && ok; ++s) {
                        double frac = (s == zAngles) ? 0.0 : 1.0;
                        cnum z = cyc.points[i] +
                                 frac * cyc.radii[i] * std::polar(1.0, 2.0 * kPi * s / zAngles);
                        if (std::abs(f.h(t, z) - next) > rNext * (1.0 - 1e-9)) ok = false;
                    }
                }
            }
            k += cyc.points.size();
        }
        (void)k;
        if (ok) {
            trap.rBulge = rb;
            return trap;
        }
    }
    throw Error("trap-not-invariant", "twodim", "no bulging threshold makes the trap invariant");
}

PointClass classify_point(const SkewMap& f, const Trap2D& trap, Point2 x, int budget) {
    PointClass out;
    Point2 cur = x;
    for (int k = 0; k < budget; ++k) {
        if (std::abs(cur.z) > trap.escapeRadius) {
            out.label = Label::Escaping;
            out.iterations = k;
            return out;
        }
        if (std::abs(cur.t) < trap.rBulge) {
            for (std::size_t i = 0; i < trap.disks.size(); ++i) {
                if (std::abs(cur.z - trap.disks[i].center) < trap.disks[i].radius) {
                    out.label = Label::Basin;
                    out.basinId = trap.cycleId[i];
                    out.iterations = k;
                    return out;
                }
            }
        }
        cur = f.apply(cur);
    }
    out.label = Label::Suspect;
    out.iterations = budget;
    return out;
}

Point2 Raster::pixelCenter(int row, int col) const {
    double dt = (window.tMax - window.tMin) / resolution;
    double dz = (window.zMax - window.zMin) / resolution;
    double t = window.tMin + (col + 0.5) * dt;
    double z = window.zMax - (row + 0.5) * dz;  // top row carries the largest z
    return Point2{cnum(t, 0), cnum(z, 0)};
}

Raster classify_raster(const SkewMap& f, const Trap2D& trap, const Window& window, int resolution,
                       int budget, int threads) {
    if (std::max(std::abs(window.tMin), std::abs(window.tMax)) > f.rDelta() * (1.0 + 1e-12))
        throw Error("precondition", "twodim", "window exceeds the map domain in t");
    if (std::max(std::abs(window.zMin), std::abs(window.zMax)) > trap.escapeRadius)
        throw Error("precondition", "twodim", "window exceeds the escape radius in z");
    Raster r;
    r.window = window;
    r.resolution = resolution;
    r.budget = budget;
    std::size_t res = static_cast<std::size_t>(resolution);
    r.firstEvent.assign(res * res, budget + 1);
    r.kind.assign(res * res, static_cast<std::uint8_t>(Label::Suspect));
    r.basinId.assign(res * res, -1);
    parallel_for(res, threads, [&](std::size_t row) {
        for (std::size_t col = 0; col < res; ++col) {
            Point2 x = r.pixelCenter(static_cast<int>(row), static_cast<int>(col));
            PointClass pc = classify_point(f, trap, x, budget);
            std::size_t idx = row * res + col;
            if (pc.label != Label::Suspect) {
                r.firstEvent[idx] = pc.iterations;
                r.kind[idx] = static_cast<std::uint8_t>(pc.label);
                r.basinId[idx] = pc.basinId;
            }
        }
    });
    return r;
}

RasterLayer Raster::layer(int b) const {
    RasterLayer layer;
    layer.resolution = resolution;
    layer.budget = b;
    std::size_t res = static_cast<std::size_t>(resolution);
    layer.gray.assign(res * res, 0);
    double cellArea = ((window.tMax - window.tMin) / resolution) *
                      ((window.zMax - window.zMin) / resolution);
    for (std::size_t idx = 0; idx < res * res; ++idx) {
        bool resolved = firstEvent[idx] < b;
        if (!resolved) {
            layer.gray[idx] = 0;  // julia-suspect
            layer.suspectArea += cellArea;
            ++layer.suspectCount;
        } else if (static_cast<Label>(kind[idx]) == Label::Escaping) {
            layer.gray[idx] = 255;
            layer.escapingArea += cellArea;
        } else {
            layer.gray[idx] = static_cast<std::uint8_t>(64 + (32 * std::max(basinId[idx], 0)) % 192);
            layer.basinArea += cellArea;
        }
    }
    return layer;
}

AreaTable julia_area_estimate(const SkewMap& f, const Trap2D& trap, const Window& window,
                              const std::vector<int>& resolutions, const std::vector<int>& budgets,
                              int threads) {
    AreaTable table;
    int maxBudget = 0;
    for (int b : budgets) maxBudget = std::max(maxBudget, b);
    for (int res : resolutions) {
        Raster raster = classify_raster(f, trap, window, res, maxBudget, threads);
        for (int b : budgets) table.entries.push_back(raster.layer(b));
    }
    return table;
}

}  // namespace skewlab::twodim
