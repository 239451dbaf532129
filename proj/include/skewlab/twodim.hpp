#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "skewlab/common.hpp"
#include "skewlab/dyncore.hpp"
#include "skewlab/onedim.hpp"
#include "skewlab/stable.hpp"

namespace skewlab::twodim {

using dyncore::Point2;
using dyncore::SkewMap;

// ---------------------------------------------------------------------------
// Vertical distance to the critical varieties over Crit'

struct VerticalDistanceField {
    std::vector<stable::CriticalBranch> branches;
    bool critEmpty = false;

    // min over branches of |pi2(x) - c_b(pi1(x))|; +infinity when Crit' is empty.
    double eval(Point2 x) const;
};

VerticalDistanceField build_distance_field(const SkewMap& f);

inline double dist_v_crit(const VerticalDistanceField& field, Point2 x) { return field.eval(x); }

// ---------------------------------------------------------------------------
// Slow approach statistics

struct SlowApproachResult {
    std::vector<int> violations;  // n in [nMin, nMax] with dist_v < e^{-alpha n}
    bool escaped = false;         // escaping points are vacuously slow approaching
};

SlowApproachResult slow_approach_test(const SkewMap& f, const VerticalDistanceField& field,
                                      Point2 x, double alpha, int nMin, int nMax);

struct SlowApproachBatch {
    double violatingFraction = 0.0;       // among all sampled points; escapers are vacuous
    std::vector<double> perFiber;
    std::size_t total = 0;
    std::size_t escaped = 0;
    std::size_t violating = 0;
};

SlowApproachBatch slow_approach_batch(const SkewMap& f, const VerticalDistanceField& field,
                                      int fibers, int pointsPerFiber, double tRadius,
                                      double zHalfWidth, double alpha, int nMin, int nMax,
                                      std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// Vertical Lyapunov exponents

struct VLyapReport {
    std::vector<double> runningAvg;
    double liminfProxy = 0.0;  // min of the running averages over the last quarter
    bool zeroHit = false;
};

VLyapReport vertical_lyapunov(const SkewMap& f, Point2 x, int n);

// ---------------------------------------------------------------------------
// Pliss hyperbolic times

struct HypTimeRecord {
    std::vector<double> logDerivs;
    double sigma = 1.0;
    std::vector<int> times;  // sorted
    double density = 0.0;
};

// Forward prefix-max scan on T_k = S_k - k log sigma (linear time): m is a
// hyperbolic time iff T_m >= T_i for every 0 <= i < m.
HypTimeRecord pliss_hyperbolic_times(const std::vector<double>& logDerivs, double sigma);

// ---------------------------------------------------------------------------
// Expanding-time horizon

// floor(-theta log |pi1(x)|); empty optional means the invariant fiber (+inf).
std::optional<long> expanding_horizon(Point2 x, double theta, double M);

// ---------------------------------------------------------------------------
// Shadow sets

struct PhiOrbit {
    std::vector<double> phi;
    double C = 0.0;  // sup of prefix averages
    double offset = 0.0;
    int clipEvents = 0;
    bool critEmpty = false;
    bool escaped = false;
};

PhiOrbit phi_orbit(const SkewMap& f, const VerticalDistanceField& field, Point2 x, int n);

struct ShadowConfig {
    double K = 0.0;
    int N = 0;
    std::vector<int> counts;          // cover count per n = 1..len
    std::vector<std::uint8_t> member; // n in A(N,K)
    double density = 0.0;
    double bound = 0.0;  // 1 - C K/(N+1) with C the sup prefix average
    bool boundHolds = false;
};

ShadowConfig shadow_membership(const std::vector<double>& phi, double K, int N);

// ---------------------------------------------------------------------------
// Classification of the real (t, z) slice

enum class Label : std::uint8_t { Suspect = 0, Escaping = 1, Basin = 2 };

struct Trap2D {
    std::vector<onedim::Disk> disks;
    std::vector<int> cycleId;  // per disk
    double rBulge = 0.0;       // |t| threshold below which cycle capture counts
    double escapeRadius = 0.0;
};

// Bulges the fiber attracting cycles into 2D traps; rBulge found by halving
// until forward invariance of each bulged trap is verified by sampling.
Trap2D build_trap2d(const SkewMap& f, const std::vector<onedim::AttractingCycle>& cycles);

struct PointClass {
    Label label = Label::Suspect;
    int basinId = -1;
    int iterations = 0;  // first resolution time; budget when unresolved
};

PointClass classify_point(const SkewMap& f, const Trap2D& trap, Point2 x, int budget);

struct Window {
    double tMin, tMax, zMin, zMax;
};

struct RasterLayer {
    int resolution = 0;
    int budget = 0;
    std::vector<std::uint8_t> gray;  // row-major, top z row first; PGM payload
    double suspectArea = 0.0;
    double escapingArea = 0.0;
    double basinArea = 0.0;
    std::size_t suspectCount = 0;
};

struct Raster {
    Window window;
    int resolution = 0;
    int budget = 0;  // classification budget actually run
    std::vector<std::int32_t> firstEvent;  // per pixel; budget+1 when unresolved
    std::vector<std::uint8_t> kind;        // Label at the event
    std::vector<std::int32_t> basinId;

    RasterLayer layer(int budget) const;  // labels as of a smaller budget
    Point2 pixelCenter(int row, int col) const;
};

Raster classify_raster(const SkewMap& f, const Trap2D& trap, const Window& window, int resolution,
                       int budget, int threads = 1);

struct AreaTable {
    std::vector<RasterLayer> entries;  // one per (resolution, budget) pair
};

AreaTable julia_area_estimate(const SkewMap& f, const Trap2D& trap, const Window& window,
                              const std::vector<int>& resolutions, const std::vector<int>& budgets,
                              int threads = 1);

}  // namespace skewlab::twodim
