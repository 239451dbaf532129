#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "skewlab/common.hpp"
#include "skewlab/dyncore.hpp"
#include "skewlab/fit.hpp"
#include "skewlab/poly.hpp"

namespace skewlab::onedim {

using dyncore::FiberPolynomial;

// ---------------------------------------------------------------------------
// Critical set

struct CriticalPoint {
    cnum z;
    int multiplicity = 1;
    bool inJulia = true;   // conservative default until classified
    bool ambiguous = false;  // budget exhausted without escape or capture
};

struct AttractingCycle {
    std::vector<cnum> points;
    double multiplier = 0.0;    // |(p^q)'| at the cycle
    std::vector<double> radii;  // per-point disks with p(D_i) inside D_{i+1}
};

struct CriticalSet {
    std::vector<CriticalPoint> points;
    std::vector<AttractingCycle> cycles;  // filled by classify_crit

    std::vector<cnum> critPrime() const;
    std::vector<cnum> all() const;
    // +infinity when Crit' is empty.
    double distToCritPrime(cnum z) const;
    double distToCrit(cnum z) const;
};

CriticalSet critical_points(const FiberPolynomial& p);

// Labels each critical point: inFatou when its orbit escapes or is captured
// by a detected attracting cycle within `budget` steps, inJulia otherwise.
void classify_crit(const FiberPolynomial& p, CriticalSet& cs, int budget);

// ---------------------------------------------------------------------------
// Julia sampling and distance estimation

struct JuliaSampler {
    FiberPolynomial p;
    double R = 2.0;  // escape radius
    std::vector<cnum> cloud;
    std::vector<AttractingCycle> cycles;

    double distToCloud(cnum z) const;
};

JuliaSampler julia_sample(const FiberPolynomial& p, std::size_t count, std::uint64_t seed);

struct GreenValue {
    double G = 0.0;
    double gradAbs = 0.0;
    bool escaped = false;
    bool capturedByCycle = false;
    int steps = 0;
};

GreenValue green_eval(const FiberPolynomial& p, const std::vector<AttractingCycle>& cycles, cnum z,
                      int maxDepth);

struct DistanceBracket {
    double lower = 0.0;
    double upper = 0.0;
    bool heuristic = false;  // bounded-component path: cloud distance, not Green's function
};

// Bracket on dist(z, J(p)). Basin of infinity: classical Green's-function
// estimator; bounded Fatou components: sampled-cloud heuristic (flagged).
// Throws on-julia when the escape rate vanishes to machine precision.
DistanceBracket green_distance(const JuliaSampler& sampler, cnum z, int depth);

// ---------------------------------------------------------------------------
// Condition estimators along critical value orbits

struct CeReport {
    std::vector<double> logDeriv;  // log |(p^k)'(v)|, k = 0..n
    double muCE = 0.0;
    double C = 0.0;
    double residual = 0.0;
    bool cePlausible = false;
};

CeReport ce_report(const FiberPolynomial& p, const CriticalSet& cs, cnum c, int n);

struct LyapunovReport {
    std::vector<double> runningAvg;  // (1/k) sum_{j<k} log|p'(p^j v)|, k = 1..n
    double value = 0.0;
    bool zeroHit = false;
    int zeroHitIndex = -1;
    bool escaped = false;
};

LyapunovReport lyapunov_at_value(const FiberPolynomial& p, cnum v, int n);

// Truncated log-derivative sum over indices j < n with dist(p^j v, Crit') <= eta.
double wr_sum(const FiberPolynomial& p, const CriticalSet& cs, cnum v, int n, double eta);

struct WrProfilePoint {
    double eta = 0.0;
    double tailSup = 0.0;  // max over the second half of the range of sum_k / k
    double slope = 0.0;    // fitted per-step rate iota
    double c0 = 0.0;       // fitted intercept
};

std::vector<WrProfilePoint> wr_profile(const FiberPolynomial& p, const CriticalSet& cs, cnum v,
                                       int n, const std::vector<double>& etaGrid);

// Indices j <= n with dist(p^j v, Crit') < e^{-j alpha}.
std::vector<int> sr_check(const FiberPolynomial& p, const CriticalSet& cs, cnum v, int n,
                          double alpha);

struct DpuReport {
    std::vector<double> partialSums;  // truncated sums for each prefix length
    double Q = 0.0;                   // sup over n of truncated sum / n
    int excluded = 0;                 // number of largest terms discarded (M = #Crit')
    int clipEvents = 0;
    bool critEmpty = false;
    double scalingOffset = 0.0;
};

DpuReport dpu_sum(const FiberPolynomial& p, const CriticalSet& cs, cnum x, int n);

// |(p^N)'(x)| for an orbit segment staying at distance > eta from Crit'.
double hyperbolic_away(const FiberPolynomial& p, const CriticalSet& cs, cnum x, int N, double eta);

struct HyperbolicAwayFit {
    double C1 = 0.0;
    double alpha = 0.0;
    double muExp = 0.0;  // echoed input
    std::size_t samples = 0;
};

// Fits log|(p^N)'(x)| = log C1 + alpha log eta + N log muExp over orbit
// segments sampled from the cloud, with muExp supplied.
HyperbolicAwayFit hyperbolic_away_fit(const FiberPolynomial& p, const CriticalSet& cs,
                                      const JuliaSampler& sampler, double muExp,
                                      const std::vector<double>& etaGrid, int maxN,
                                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// Exponential shrinking of pullback components

struct ShrinkReport {
    // Certified diameter brackets per depth, maxima over branches.
    std::vector<double> maxDiamUpper;
    std::vector<double> maxDiamLower;
    std::vector<double> maxDiam;  // geometric mean of the bracket, the reported value
    double muExp = 0.0;
    double fitResidual = 0.0;
    int unresolved = 0;       // branches hitting the distortion-regime boundary
    int criticalPullbacks = 0;
    bool perBranchMonotone = true;  // reported diameters non-increasing on univalent branches
};

ShrinkReport exp_shrink_estimate(const FiberPolynomial& p, const CriticalSet& cs, cnum x, double r,
                                 int depth, int branches, std::uint64_t seed);

struct ShrinkTheta {
    double muExp = 0.0;
    double theta0 = 0.0;
    double rms = 0.0;
};

ShrinkTheta exp_shrink_theta(const FiberPolynomial& p, const CriticalSet& cs, cnum x,
                             const std::vector<double>& rGrid, int depth, int branches,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Dimension, trapping regions, measure decay

struct BoxDimension {
    double dimension = 0.0;
    double residual = 0.0;
    std::size_t scalesUsed = 0;
};

BoxDimension box_dimension(const std::vector<cnum>& cloud, int maxScales = 16);

struct Disk {
    cnum center;
    double radius;
};

struct TrappingRegion {
    std::vector<Disk> cycleDisks;
    double infinityRadius = 0.0;
    int level = 0;

    bool contains(cnum z) const;
    // Sampled forward invariance p(W0) inside W0 with margin; throws
    // trap-not-invariant when the margin drops below 1e-6.
    void verify(const FiberPolynomial& p, int boundarySamples = 512) const;
};

TrappingRegion trap_from_cycles(const FiberPolynomial& p, const std::vector<AttractingCycle>& cycles);

struct KmReport {
    std::vector<double> areas;  // meas(K_m), m = 0..mMax
    double slope = 0.0;         // fitted decay of log meas(K_m)
    double residual = 0.0;
    std::vector<std::uint32_t> counts;
};

KmReport km_measure(const FiberPolynomial& p, const TrappingRegion& trap, int mMax, int resolution,
                    double windowHalfWidth, int threads = 1);

// ---------------------------------------------------------------------------
// Blaschke preimage-measure inequality

struct Blaschke {
    std::vector<cnum> zeros;  // all in the open unit disk
    double phase = 0.0;

    cnum eval(cnum z) const;
    int criticalCount() const { return static_cast<int>(zeros.size()) - 1; }
};

struct DiskUnion {
    std::vector<Disk> disks;
    bool contains(cnum z) const;
};

// Monte Carlo estimate of meas G^{-1}(R) / meas(R)^{2^-D} with D = #critical
// points of G in the disk. Returns 0 for empty R.
double blaschke_ratio(const Blaschke& G, const DiskUnion& R, std::size_t points,
                      std::uint64_t seed);

struct BlaschkeCheck {
    double worstRatio = 0.0;
    std::size_t trials = 0;
};

// Random products with at most maxCritical critical points (rotations when
// maxCritical = 0), random disk unions inside D(0, 1/2).
BlaschkeCheck blaschke_measure_check(int maxCritical, std::size_t trials, std::size_t pointsPerTrial,
                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Przytycki return times

struct PrzytyckiResult {
    std::optional<int> firstReturn;  // none-within-budget is a valid outcome
    int samplesUsed = 0;
};

PrzytyckiResult przytycki_stat(const FiberPolynomial& p, const CriticalSet& cs, cnum c, double eps,
                               int budget);

struct PrzytyckiFit {
    std::vector<double> epsGrid;
    std::vector<int> returnTimes;  // -1 for none-within-budget
    double C = 0.0;                // empirical constant in n* >= C log(1/eps)
};

PrzytyckiFit przytycki_fit(const FiberPolynomial& p, const CriticalSet& cs, cnum c,
                           const std::vector<double>& epsGrid, int budget);

}  // namespace skewlab::onedim
