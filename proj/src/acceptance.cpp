#include "skewlab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "skewlab/dyncore.hpp"
#include "skewlab/io.hpp"
#include "skewlab/onedim.hpp"
#include "skewlab/parallel.hpp"
#include "skewlab/rng.hpp"
#include "skewlab/stable.hpp"
#include "skewlab/twodim.hpp"

namespace skewlab::accept {

namespace {

using dyncore::Point2;
using dyncore::SkewMap;

constexpr std::uint64_t kSeed = 0x5eedULL;

SkewMap example_map() {  // (0.5 t, z^2 - 2 + 0.1 t)
    std::vector<Poly> a(3);
    a[0] = Poly{{cnum(-2, 0), cnum(0.1, 0)}};
    a[1] = Poly{{cnum(0, 0)}};
    a[2] = Poly{{cnum(1, 0)}};
    return SkewMap(cnum(0.5, 0), std::move(a), 1.0);
}

struct Context {
    SkewMap f = example_map();
    dyncore::FiberPolynomial p;    // z^2 - 2
    dyncore::FiberPolynomial psq;  // z^2
    onedim::CriticalSet cs;
    onedim::CriticalSet csq;
    cnum v{-2.0, 0.0};
    double muExpFiber = 0.0;
    double c1EtaAlpha = 0.0;
    int N = 1;
    stable::BlockSchedule schedule;
    double r0 = 1e-3;
    stable::BidiskSequence bidisks;
    stable::CriticalBranch branch;
    stable::StableGraph graph;
    std::unique_ptr<stable::DeviationOrbit> dev;
    std::vector<double> scales;
    double beta = 0.0;
    stable::BulgedTrap trap;
    twodim::VerticalDistanceField field;
    twodim::Trap2D trap2d;

    explicit Context(int threads) {
        (void)threads;
        p = f.fiber();
        psq = dyncore::FiberPolynomial{Poly{{cnum(0, 0), cnum(0, 0), cnum(1, 0)}}};
        cs = onedim::critical_points(p);
        onedim::classify_crit(p, cs, 2000);
        csq = onedim::critical_points(psq);
        onedim::classify_crit(psq, csq, 2000);

        auto shr = onedim::exp_shrink_estimate(p, cs, cnum(2, 0), 0.05, 15, 32, kSeed);
        muExpFiber = shr.muExp;
        auto sampler = onedim::julia_sample(p, 2000, kSeed);
        auto haf = onedim::hyperbolic_away_fit(p, cs, sampler, muExpFiber, {0.25, 0.5, 1.0}, 12,
                                               kSeed + 1);
        c1EtaAlpha = haf.C1 * std::pow(1.0, haf.alpha);  // eta = 1 from the regularity check
        N = stable::choose_block_length(std::max(c1EtaAlpha, 1e-6), muExpFiber, 0.05);

        auto derivs = stable::orbit_derivs(p, v, 600);
        schedule = stable::block_schedule(derivs, N, 0.05, std::abs(f.lambda()), muExpFiber);
        r0 = stable::choose_r0(f, v, schedule, 30, 1e-3, 1e-9, 256);
        bidisks = stable::radii_tce_wr(p, v, schedule, r0, 45);
        branch = stable::critical_branch(f, cnum(0, 0));
        graph = stable::graph_transform(f, bidisks, 30);
        if (stable::branch_graph_gap(branch, graph) < 1e-8) branch.degenerate = true;
        dev = std::make_unique<stable::DeviationOrbit>(f, v, 120);
        for (int n = 0; n <= 26; ++n)
            scales.push_back(stable::renorm_scale(f, branch, bidisks, n, *dev).rho);

        double M = dyncore::sup_partials(f, {cnum(0, 0), 1.0, cnum(0, 0), 3.0}, 64).M;
        beta = stable::default_beta(std::abs(f.lambda()), M);
        onedim::TrappingRegion base;
        base.infinityRadius = 3.0;
        trap = stable::bulge_trap(f, base);

        field = twodim::build_distance_field(f);
        trap2d = twodim::build_trap2d(f, cs.cycles);
    }
};

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

std::string fmt3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Artifact generators shared by the main criteria and the determinism check.

struct KmArtifacts {
    onedim::KmReport report;
    std::map<std::string, std::string> files;
};

KmArtifacts gen_km(const Context& ctx, int threads) {
    onedim::TrappingRegion trap;
    trap.cycleDisks.push_back(onedim::Disk{cnum(0, 0), 0.5});
    trap.infinityRadius = 2.0;
    KmArtifacts out;
    out.report = onedim::km_measure(ctx.psq, trap, 14, 2048, 2.5, threads);
    io::Csv csv({"m", "count", "area"});
    for (std::size_t m = 0; m < out.report.areas.size(); ++m)
        csv.cell(static_cast<long>(m))
            .cell(static_cast<long>(out.report.counts[m]))
            .cell(out.report.areas[m])
            .endrow();
    out.files["km.csv"] = csv.str();
    return out;
}

struct EscapeArtifacts {
    std::vector<double> sGrid;
    std::vector<stable::EscapeResult> results;
    double slope = 0.0;
    std::map<std::string, std::string> files;
};

EscapeArtifacts gen_escape(const Context& ctx, int threads) {
    EscapeArtifacts out;
    out.sGrid = {20, 30, 40, 50, 60};
    io::Csv csv({"s", "j_s", "steps", "fraction", "complement"});
    std::vector<double> xs, ys;
    for (double s : out.sGrid) {
        auto e = stable::escape_fraction(ctx.f, ctx.branch, ctx.trap, ctx.scales, s, 10000, kSeed,
                                         ctx.beta, *ctx.dev, threads);
        out.results.push_back(e);
        csv.cell(s).cell(static_cast<long>(e.js)).cell(static_cast<long>(e.steps))
            .cell(e.fraction).cell(e.complement).endrow();
        xs.push_back(s);
        ys.push_back(std::log(std::max(e.complement, 1e-5)));
    }
    out.slope = fit_line(xs, ys).slope;
    out.files["escape.csv"] = csv.str();
    return out;
}

struct SaArtifacts {
    twodim::SlowApproachBatch batch;
    std::map<std::string, std::string> files;
};

SaArtifacts gen_sa(const Context& ctx, int threads) {
    SaArtifacts out;
    out.batch = twodim::slow_approach_batch(ctx.f, ctx.field, 100, 1000, 0.3, 2.5, 0.05, 30, 300,
                                            kSeed, threads);
    io::Csv csv({"fiber", "violating_fraction"});
    for (std::size_t i = 0; i < out.batch.perFiber.size(); ++i)
        csv.cell(static_cast<long>(i)).cell(out.batch.perFiber[i]).endrow();
    out.files["sa.csv"] = csv.str();
    return out;
}

struct VlyapArtifacts {
    std::vector<double> proxies;
    double median = 0.0;
    std::size_t suspectCount = 0;
    std::map<std::string, std::string> files;
};

VlyapArtifacts gen_vlyap(const Context& ctx, int threads) {
    VlyapArtifacts out;
    twodim::Window w{-0.3, 0.3, -2.5, 2.5};
    auto raster = twodim::classify_raster(ctx.f, ctx.trap2d, w, 512, 800, threads);
    std::vector<std::size_t> suspects;
    for (std::size_t i = 0; i < raster.firstEvent.size(); ++i)
        if (raster.firstEvent[i] > 800) suspects.push_back(i);
    out.suspectCount = suspects.size();
    std::size_t want = std::min<std::size_t>(1000, suspects.size());
    std::vector<std::size_t> chosen;
    for (std::size_t k = 0; k < want; ++k) chosen.push_back(suspects[(k * suspects.size()) / want]);
    out.proxies.assign(chosen.size(), 0.0);
    parallel_for(chosen.size(), threads, [&](std::size_t k) {
        std::size_t idx = chosen[k];
        int row = static_cast<int>(idx / 512), col = static_cast<int>(idx % 512);
        Point2 x = raster.pixelCenter(row, col);
        auto rep = twodim::vertical_lyapunov(ctx.f, x, 800);
        out.proxies[k] = rep.liminfProxy;
    });
    std::vector<double> sorted = out.proxies;
    std::sort(sorted.begin(), sorted.end());
    out.median = sorted.empty() ? 0.0 : sorted[sorted.size() / 2];
    io::Csv csv({"pixel", "liminf_proxy"});
    for (std::size_t k = 0; k < chosen.size(); ++k)
        csv.cell(static_cast<long>(chosen[k])).cell(out.proxies[k]).endrow();
    out.files["vlyap.csv"] = csv.str();
    return out;
}

struct AreaArtifacts {
    twodim::AreaTable table;
    std::map<std::string, std::string> files;
};

AreaArtifacts gen_area(const Context& ctx, int threads) {
    AreaArtifacts out;
    twodim::Window w{-0.3, 0.3, -2.5, 2.5};
    out.table = twodim::julia_area_estimate(ctx.f, ctx.trap2d, w, {512, 1024}, {100, 400, 1600},
                                            threads);
    io::Csv csv({"resolution", "budget", "suspect_area", "escaping_area", "basin_area"});
    for (const auto& e : out.table.entries) {
        csv.cell(static_cast<long>(e.resolution)).cell(static_cast<long>(e.budget))
            .cell(e.suspectArea).cell(e.escapingArea).cell(e.basinArea).endrow();
        std::ostringstream name;
        name << "raster_" << e.resolution << "_" << e.budget << ".pgm";
        out.files[name.str()] = io::pgm_encode(e.resolution, e.resolution, e.gray);
    }
    out.files["area.csv"] = csv.str();
    return out;
}

void write_files(const std::string& dir, const std::map<std::string, std::string>& files) {
    for (const auto& [name, content] : files) io::atomic_write(dir + "/" + name, content);
}

// ---------------------------------------------------------------------------

CriterionResult c01(const Context& ctx) {
    Timer t;
    auto rep = onedim::ce_report(ctx.p, ctx.cs, cnum(0, 0), 200);
    bool pass = std::abs(rep.muCE - 4.0) <= 0.01 && std::abs(rep.C - 1.0) <= 0.05 &&
                rep.residual < 1e-6;
    return {1, "collet-eckmann growth on the chebyshev critical value",
            pass,
            "mu=" + fmt3(rep.muCE) + " C=" + fmt3(rep.C) + " residual=" + fmt3(rep.residual),
            t.seconds()};
}

CriterionResult c02(const Context& ctx) {
    Timer t;
    auto rep = onedim::lyapunov_at_value(ctx.p, cnum(-2, 0), 100);
    bool pass = std::abs(rep.value - std::log(4.0)) <= 1e-9;
    return {2, "lyapunov exponent at the critical value", pass,
            "value=" + fmt3(rep.value) + " want log4=" + fmt3(std::log(4.0)), t.seconds()};
}

CriterionResult c03(const Context& ctx) {
    Timer t;
    bool pass = true;
    for (int n : {1, 10, 100, 1000, 10000})
        if (onedim::wr_sum(ctx.p, ctx.cs, cnum(-2, 0), n, 1.0) != 0.0) pass = false;
    return {3, "truncated regularity sum vanishes at eta=1", pass, "sum=0 for n up to 1e4",
            t.seconds()};
}

CriterionResult c04(const Context& ctx) {
    Timer t;
    auto rep = onedim::exp_shrink_estimate(ctx.psq, ctx.csq, cnum(1, 0), 0.1, 20, 64, kSeed);
    bool pass = rep.muExp >= 1.9 && rep.muExp <= 2.1 && rep.perBranchMonotone &&
                rep.unresolved == 0;
    return {4, "exponential shrinking of pullbacks on the circle", pass,
            "mu_exp=" + fmt3(rep.muExp) + " monotone=" + (rep.perBranchMonotone ? "yes" : "no"),
            t.seconds()};
}

CriterionResult c05(const Context& ctx) {
    Timer t;
    auto s1 = onedim::julia_sample(ctx.psq, 100000, kSeed);
    auto d1 = onedim::box_dimension(s1.cloud);
    auto s2 = onedim::julia_sample(ctx.p, 100000, kSeed + 1);
    auto d2 = onedim::box_dimension(s2.cloud);
    bool pass = std::abs(d1.dimension - 1.0) <= 0.05 && d1.residual < 0.05 &&
                std::abs(d2.dimension - 1.0) <= 0.05 && d2.residual < 0.05;
    return {5, "box dimension of circle and segment clouds", pass,
            "circle=" + fmt3(d1.dimension) + " segment=" + fmt3(d2.dimension), t.seconds()};
}

CriterionResult c06(const Context& ctx, const std::string& dir, int threads) {
    Timer t;
    auto art = gen_km(ctx, threads);
    write_files(dir, art.files);
    bool mono = true;
    for (std::size_t m = 1; m < art.report.counts.size(); ++m)
        if (art.report.counts[m] > art.report.counts[m - 1]) mono = false;
    bool pass = art.report.slope <= -0.5 && art.report.residual < 0.1 && mono;
    return {6, "exponential decay of the slow set area", pass,
            "slope=" + fmt3(art.report.slope) + " residual=" + fmt3(art.report.residual),
            t.seconds()};
}

CriterionResult c07(const Context&) {
    Timer t;
    bool pass = true;
    Rng rng(kSeed ^ 0x715);
    for (int trial = 0; trial < 1000 && pass; ++trial) {
        std::vector<double> logs(500);
        for (double& v : logs) v = rng.uniform(-1.0, 2.0);
        double sigma = 1.0 + rng.uniform(0.05, 1.2);
        auto fast = twodim::pliss_hyperbolic_times(logs, sigma);
        // quadratic oracle on the same prefix-sum representation
        std::vector<double> S(logs.size() + 1, 0.0);
        for (std::size_t k = 0; k < logs.size(); ++k) S[k + 1] = S[k] + logs[k];
        double ls = std::log(sigma);
        std::vector<int> slow;
        for (std::size_t m = 1; m <= logs.size(); ++m) {
            bool ok = true;
            for (std::size_t i = 0; i < m && ok; ++i)
                if (!(S[m] - static_cast<double>(m) * ls >= S[i] - static_cast<double>(i) * ls))
                    ok = false;
            if (ok) slow.push_back(static_cast<int>(m));
        }
        if (fast.times != slow) pass = false;
    }
    std::vector<double> constant(1000, std::log(2.0));
    auto rec = twodim::pliss_hyperbolic_times(constant, 1.5);
    if (rec.density != 1.0) pass = false;
    return {7, "linear-time hyperbolic-time finder equals the quadratic oracle", pass,
            "1000 random sequences, constant input density 1", t.seconds()};
}

CriterionResult c08(const Context& ctx) {
    Timer t;
    auto bounds = stable::check_bounds_tce_wr(
        stable::radii_tce_wr(ctx.p, ctx.v, ctx.schedule, 1e-3, 500), ctx.schedule, 4.0, 1.0, 0.01);
    auto pl = stable::check_bounds_pl(
        stable::radii_pl(ctx.p, ctx.v, std::log(4.0), 0.05, ctx.schedule.derivs, 1e-3, 500));
    bool pass = bounds.upperViolations == 0 && pl.upperViolations == 0 &&
                pl.lowerViolations == 0 && pl.C2 > 0.0 && pl.C3 > 0.0;
    return {8, "bidisk radius bounds at depth 500", pass,
            "N=" + std::to_string(ctx.N) + " upper_violations=" +
                std::to_string(bounds.upperViolations) + " bands C2=" + fmt3(pl.C2) +
                " C3=" + fmt3(pl.C3),
            t.seconds()};
}

CriterionResult c09(const Context& ctx) {
    Timer t;
    bool pass = ctx.r0 <= 1e-3;
    double minMarginRatio = 1e300;
    int badWinding = 0;
    for (int i = 0; i < 30; ++i) {
        auto rec = stable::henon_check(ctx.f, ctx.bidisks, i, 256);
        if (!rec.ok()) pass = false;
        if (rec.winding != 1) ++badWinding;
        if (rec.samplingError > 0)
            minMarginRatio = std::min(minMarginRatio, rec.clearanceMargin / rec.samplingError);
    }
    return {9, "henon-like verification to depth 30", pass,
            "r0=" + fmt3(ctx.r0) + " min margin/error=" + fmt3(minMarginRatio) +
                " bad windings=" + std::to_string(badWinding),
            t.seconds()};
}

CriterionResult c10(const Context& ctx) {
    Timer t;
    auto sr = stable::shadow_rate(ctx.f, ctx.graph, ctx.v, 25);
    bool pass = ctx.graph.maxResidual < 1e-10 && ctx.graph.agreement < 1e-8 &&
                ctx.graph.gs[0] == cnum(-2, 0) && !sr.insufficientData && sr.lambda1 <= 0.6;
    return {10, "stable graph via the backward transform", pass,
            "residual=" + fmt3(ctx.graph.maxResidual) + " agreement=" + fmt3(ctx.graph.agreement) +
                " lambda1=" + fmt3(sr.lambda1),
            t.seconds()};
}

CriterionResult c11(const Context& ctx) {
    Timer t;
    bool pass = true;
    std::vector<double> ns, logRatio;
    double prev = 1e300;
    for (int n = 0; n <= 12; ++n) {
        auto rs = stable::renorm_scale(ctx.f, ctx.branch, ctx.bidisks, n, *ctx.dev);
        if (rs.degree != 1) pass = false;
        if (rs.rho > prev * (1.0 + 1e-12)) pass = false;
        prev = rs.rho;
        ns.push_back(n);
        logRatio.push_back(std::log(rs.rho / ctx.bidisks.vertRadii[static_cast<std::size_t>(n)]));
    }
    auto fit = fit_line(ns, logRatio);
    if (std::abs(fit.slope + std::log(4.0)) > 0.3 || fit.rms > 0.3) pass = false;
    return {11, "renormalization scales shrink at the derivative rate", pass,
            "slope=" + fmt3(fit.slope) + " want -log4=" + fmt3(-std::log(4.0)) +
                " rms=" + fmt3(fit.rms),
            t.seconds()};
}

CriterionResult c12(const Context& ctx, const std::string& dir, int threads) {
    Timer t;
    auto art = gen_escape(ctx, threads);
    write_files(dir, art.files);
    bool pass = true;
    for (std::size_t i = 1; i < art.results.size(); ++i) {
        double prev = art.results[i - 1].complement;
        double sigma = std::sqrt(std::max(prev * (1.0 - prev), 1e-8) / 10000.0);
        if (art.results[i].complement > prev + 2.0 * sigma) pass = false;
    }
    double last = art.results.back().complement;
    if (!(last < 0.05)) pass = false;
    std::ostringstream det;
    det << "complements";
    for (const auto& e : art.results) det << " " << fmt3(e.complement);
    det << " slope=" << fmt3(art.slope);
    return {12, "escape fraction of the critical value curve", pass, det.str(), t.seconds()};
}

CriterionResult c13(const Context& ctx, const std::string& dir, int threads) {
    Timer t;
    auto art = gen_sa(ctx, threads);
    write_files(dir, art.files);
    bool pass = art.batch.violatingFraction < 0.01;
    return {13, "slow approach holds off the transient", pass,
            "violating=" + fmt3(art.batch.violatingFraction) + " escaped=" +
                std::to_string(art.batch.escaped) + "/" + std::to_string(art.batch.total),
            t.seconds()};
}

CriterionResult c14(const Context& ctx, const std::string& dir, int threads) {
    Timer t;
    auto art = gen_vlyap(ctx, threads);
    write_files(dir, art.files);
    bool pass = art.proxies.size() >= 1000 && art.median >= 0.3;
    return {14, "vertical lyapunov proxy on suspect pixels", pass,
            "suspects=" + std::to_string(art.suspectCount) + " median=" + fmt3(art.median),
            t.seconds()};
}

CriterionResult c15(const Context& ctx, const std::string& dir, int threads) {
    Timer t;
    auto art = gen_area(ctx, threads);
    write_files(dir, art.files);
    // entries: (512: 100,400,1600), (1024: 100,400,1600)
    const auto& e = art.table.entries;
    bool strict = e[0].suspectArea > e[1].suspectArea && e[1].suspectArea > e[2].suspectArea &&
                  e[3].suspectArea > e[4].suspectArea && e[4].suspectArea > e[5].suspectArea;
    bool halved = e[5].suspectArea <= 0.5 * e[0].suspectArea;
    bool pass = strict && halved;
    std::ostringstream det;
    det << "suspect areas 512:" << fmt3(e[0].suspectArea) << "," << fmt3(e[1].suspectArea) << ","
        << fmt3(e[2].suspectArea) << " 1024:" << fmt3(e[3].suspectArea) << ","
        << fmt3(e[4].suspectArea) << "," << fmt3(e[5].suspectArea);
    return {15, "suspect area trend under budget and resolution", pass, det.str(), t.seconds()};
}

CriterionResult c16(const Context&) {
    Timer t;
    auto chk = onedim::blaschke_measure_check(2, 500, 100000, kSeed ^ 0xb1a);
    bool finite = std::isfinite(chk.worstRatio) && chk.worstRatio > 0.0;
    // closed-form case: G = z^2, R = D(0, 0.1), preimage measure pi * 0.1
    onedim::Blaschke sq;
    sq.zeros = {cnum(0, 0), cnum(0, 0)};
    std::size_t hits = 0;
    const std::size_t nPts = 4000000;
    Rng rng(kSeed ^ 0xb1b);
    for (std::size_t k = 0; k < nPts; ++k)
        if (std::abs(sq.eval(rng.unit_disk())) < 0.1) ++hits;
    double measured = kPi * static_cast<double>(hits) / static_cast<double>(nPts);
    double analytic = kPi * 0.1;
    bool close = std::abs(measured / analytic - 1.0) <= 0.02;
    bool pass = finite && close;
    return {16, "blaschke preimage measure inequality", pass,
            "worst_ratio=" + fmt3(chk.worstRatio) + " z2 measured/analytic=" +
                fmt3(measured / analytic),
            t.seconds()};
}

CriterionResult c17(const Context& ctx) {
    Timer t;
    bool pass = true;
    std::string first;
    auto compare = [&](const std::map<std::string, std::string>& a,
                       const std::map<std::string, std::string>& b, const std::string& what) {
        if (a != b) {
            pass = false;
            if (first.empty()) first = what;
        }
    };
    compare(gen_km(ctx, 1).files, gen_km(ctx, 8).files, "km");
    compare(gen_escape(ctx, 1).files, gen_escape(ctx, 8).files, "escape");
    compare(gen_sa(ctx, 1).files, gen_sa(ctx, 8).files, "sa");
    compare(gen_vlyap(ctx, 1).files, gen_vlyap(ctx, 8).files, "vlyap");
    compare(gen_area(ctx, 1).files, gen_area(ctx, 8).files, "area");
    return {17, "byte-identical artifacts across thread counts", pass,
            pass ? "km escape sa vlyap area" : ("first mismatch: " + first), t.seconds()};
}

}  // namespace

std::vector<CriterionResult> run_all(const std::string& scratchDir, int threads) {
    Context ctx(threads);
    std::vector<CriterionResult> out;
    out.push_back(c01(ctx));
    out.push_back(c02(ctx));
    out.push_back(c03(ctx));
    out.push_back(c04(ctx));
    out.push_back(c05(ctx));
    out.push_back(c06(ctx, scratchDir, threads));
    out.push_back(c07(ctx));
    out.push_back(c08(ctx));
    out.push_back(c09(ctx));
    out.push_back(c10(ctx));
    out.push_back(c11(ctx));
    out.push_back(c12(ctx, scratchDir, threads));
    out.push_back(c13(ctx, scratchDir, threads));
    out.push_back(c14(ctx, scratchDir, threads));
    out.push_back(c15(ctx, scratchDir, threads));
    out.push_back(c16(ctx));
    out.push_back(c17(ctx));
    return out;
}

bool print_results(const std::vector<CriterionResult>& results) {
    bool all = true;
    for (const auto& r : results) {
        std::printf("%s  #%02d %-58s %s (%.2fs)\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                    r.details.c_str(), r.seconds);
        if (!r.pass) all = false;
    }
    std::printf("%s: %zu/%zu criteria passed\n", all ? "OK" : "FAILURES",
                static_cast<std::size_t>(std::count_if(results.begin(), results.end(),
                                                       [](const CriterionResult& r) { return r.pass; })),
                results.size());
    return all;
}

}  // namespace skewlab::accept
