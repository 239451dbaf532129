#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "skewlab/common.hpp"
#include "skewlab/dyncore.hpp"
#include "skewlab/onedim.hpp"

namespace skewlab::stable {

using dyncore::Point2;
using dyncore::SkewMap;
using onedim::TrappingRegion;

// ---------------------------------------------------------------------------
// Block schedules over a critical value orbit

struct BlockSchedule {
    int N = 1;
    double eps0 = 0.0;
    std::vector<double> derivs;    // a_m = |p'(p^m(v))|
    std::vector<bool> firstType;   // per block of length N (last block may be partial)
    std::vector<double> mu;        // per index m, mu_m >= 1 + eps0
};

// a_m along the fiber orbit of v.
std::vector<double> orbit_derivs(const dyncore::FiberPolynomial& p, cnum v, int n);

// Throws eps0-out-of-range unless 0 < eps0 and (1+eps0)^3 < 1/lambdaAbs and
// eps0 < muExp - 1 (pass muExp <= 1 to skip that side of the check).
BlockSchedule block_schedule(const std::vector<double>& derivs, int N, double eps0,
                             double lambdaAbs = 0.0, double muExp = 0.0);

// Independent re-derivation of types and mu from the derivs; throws on mismatch.
void verify_schedule(const BlockSchedule& s);

// Smallest N with c1EtaAlpha * muExp^N >= (1+eps0)^N.
int choose_block_length(double c1EtaAlpha, double muExp, double eps0, int maxN = 256);

// ---------------------------------------------------------------------------
// Bidisk sequences

struct BidiskSequence {
    std::vector<cnum> centers;       // p^i(v)
    std::vector<double> horizRadii;  // r0 (1+eps0)^{-3i}
    std::vector<double> vertRadii;   // r_i = r0 prod a_m / mu_m
    double r0 = 0.0;
    double eps0 = 0.0;
    int depth() const { return static_cast<int>(centers.size()) - 1; }
};

BidiskSequence radii_tce_wr(const dyncore::FiberPolynomial& p, cnum v, const BlockSchedule& s,
                            double r0, int depth);

// Constant mu_n = (1+eps0) e^chi. Throws nonpositive-exponent for chi <= 0.
BidiskSequence radii_pl(const dyncore::FiberPolynomial& p, cnum v, double chi, double eps0,
                        const std::vector<double>& derivs, double r0, int depth);

struct RadiiBounds {
    double C2 = 0.0;             // upper-band constant
    double C3 = 0.0;             // lower-band constant
    int upperViolations = 0;     // with the supplied/fitted constants
    int lowerViolations = 0;
    double effectiveSlope = 0.0; // fitted slope of log(r_n/r0)
};

// Bound (1) with C2 = dpNorm^N asserted exactly; lower band reported with the
// fitted constant (alpha, iota supplied for the exponent).
RadiiBounds check_bounds_tce_wr(const BidiskSequence& b, const BlockSchedule& s, double dpNorm,
                                double alpha, double iota);

// Bands (1+eps0/2)^{-n} above and (1+2 eps0)^{-n} below with fitted C2, C3.
RadiiBounds check_bounds_pl(const BidiskSequence& b);

// ---------------------------------------------------------------------------
// Deviation orbits relative to the fiber reference orbit of v.
//
// Tracks d_n = z_n - p^n(v) through exact coefficient splits
//   h(t, zeta+d) - p(zeta) = [p(zeta+d) - p(zeta)] + t * hTail(t, zeta+d),
// so offsets far below the ulp of the reference orbit survive the iteration.

class DeviationOrbit {
public:
    DeviationOrbit(const SkewMap& f, cnum v, int maxDepth);

    cnum center(int n) const { return zeta_[static_cast<std::size_t>(n)]; }
    int maxDepth() const { return static_cast<int>(zeta_.size()) - 1; }

    // d_{n+1} from (t_n, d_n); t_n is the horizontal coordinate at level n.
    cnum step(int n, cnum t, cnum d) const;

private:
    const SkewMap* f_;
    std::vector<cnum> zeta_;
    std::vector<Poly> shifted_;  // Taylor coefficients of p at zeta_n
};

// ---------------------------------------------------------------------------
// Critical branches t -> (t, c(t)) with dh/dz(t, c(t)) = 0

struct CriticalBranch {
    const SkewMap* f = nullptr;
    cnum c0;            // critical point of the fiber polynomial
    cnum cbase;         // refined base point
    cnum v;             // psi(0) = h(0, c(0))
    cnum psiPrime0;     // d/du of the critical value at u = 0
    int l = 1;          // first-coordinate power in the (u^l, psi(u)) form
    bool degenerate = false;  // value curve coincides with the stable graph
    double rDelta = 0.0;
    double maxResidual = 0.0;
    Poly dpShift;  // Taylor of p' at cbase
    Poly pShift;   // Taylor of p at cbase

    // c(t) - cbase by deviation-form Newton (exact for tiny |t|).
    cnum branchOffset(cnum t) const;
    // psi(u) - psi(0), cancellation-free.
    cnum valueOffset(cnum u) const;
    Point2 gamma(cnum u) const;  // (lambda u, v + valueOffset(u))
};

CriticalBranch critical_branch(const SkewMap& f, cnum c0);

// ---------------------------------------------------------------------------
// Henon-like verification between consecutive bidisks

struct HenonRecord {
    double clearanceMargin = 0.0;  // min over samples of dist_v(f(x), B_{i+1}) on the horizontal boundary
    double samplingError = 0.0;
    bool horizontalOk = false;
    bool verticalOk = false;  // |lambda| u_i < u_{i+1}
    int winding = 0;
    bool degreeOk = false;
    double modulusLowerBound = 0.0;

    bool ok() const {
        return horizontalOk && verticalOk && degreeOk && clearanceMargin >= 10.0 * samplingError;
    }
};

HenonRecord henon_check(const SkewMap& f, const BidiskSequence& b, int i, int boundarySamples);

double modulus_lower_bound(double eps0);

// Halve r0 from start until henon_check passes for all i < depth; throws after
// reaching the floor.
double choose_r0(const SkewMap& f, cnum v, const BlockSchedule& s, int depth,
                 double start = 1e-3, double floor = 1e-9, int boundarySamples = 256);

// ---------------------------------------------------------------------------
// Stable manifold by backward graph transform

struct StableGraph {
    std::vector<cnum> ts;  // polar-grid samples of U_0 (center + rings)
    std::vector<cnum> gs;
    double u0 = 0.0;
    int rings = 0, angles = 0;
    int depth = 0;
    double maxResidual = 0.0;  // Newton residual sup over all backward solves
    double agreement = 0.0;    // sup-norm difference against the depth+5 run

    cnum eval(cnum t) const;  // radial cubic + angular blend between sampled rays
};

StableGraph graph_transform(const SkewMap& f, const BidiskSequence& b, int depth);

struct ShadowRate {
    double lambda1 = 0.0;
    double C0 = 0.0;
    bool insufficientData = false;
};

// Fit of log dist_v(f^k(graph point), p^k(v)) against k. Throws
// non-contracting when the fitted rate is >= 1.
ShadowRate shadow_rate(const SkewMap& f, const StableGraph& graph, cnum v, int depth);

// Max over graph samples of the vertical gap between the critical value curve
// and the stable graph; used to set the branch degeneracy flag.
double branch_graph_gap(const CriticalBranch& branch, const StableGraph& graph);

// ---------------------------------------------------------------------------
// Renormalization scales along the critical value curve

struct RenormScale {
    int n = 0;
    double rho = 0.0;
    double diamD = 0.0;
    int degree = 0;
};

RenormScale renorm_scale(const SkewMap& f, const CriticalBranch& branch, const BidiskSequence& b,
                         int n, const DeviationOrbit& dev);

int j_of_s(const std::vector<double>& scales, double lambdaAbs, double s);

// ---------------------------------------------------------------------------
// Escape statistics for the critical value curve

struct BulgedTrap {
    TrappingRegion base;  // fiber trapping region W0
    double eps = 0.0;     // vertical margin making Delta x (W0 + eps) forward invariant

    bool contains(cnum z) const;
};

// Halve eps from start until the bulged trap is forward invariant under f for
// |t| <= rDelta (boundary sampled).
BulgedTrap bulge_trap(const SkewMap& f, const TrappingRegion& trap, double startEps = 0.5);

struct EscapeResult {
    double fraction = 0.0;    // samples in W' at time j(s) + floor(beta s)
    double complement = 1.0;
    int js = 0;
    int steps = 0;
};

EscapeResult escape_fraction(const SkewMap& f, const CriticalBranch& branch, const BulgedTrap& trap,
                             const std::vector<double>& scales, double s, std::size_t count,
                             std::uint64_t seed, double beta, const DeviationOrbit& dev,
                             int threads = 1);

double default_beta(double lambdaAbs, double supPartials);

}  // namespace skewlab::stable
