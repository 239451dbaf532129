// Command-line front end: one subcommand per estimator or construction,
// reproducible runs (explicit seed, manifest echo, atomic artifact writes).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "skewlab/acceptance.hpp"
#include "skewlab/dyncore.hpp"
#include "skewlab/io.hpp"
#include "skewlab/onedim.hpp"
#include "skewlab/parallel.hpp"
#include "skewlab/rng.hpp"
#include "skewlab/stable.hpp"
#include "skewlab/twodim.hpp"

using json = nlohmann::ordered_json;
using namespace skewlab;
using dyncore::Point2;
using dyncore::SkewMap;

namespace {

struct GlobalOpts {
    std::string mapPath;
    std::string outDir = "out";
    std::uint64_t seed = 12345;
    int threads = 1;
    std::string configPath;
};

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (double v : parse_list(s)) out.push_back(static_cast<int>(v));
    return out;
}

// ---------------------------------------------------------------------------
// Config-file merge: plain key=value lines, command-line flags win.

std::map<std::string, std::string> read_config(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    if (!in) throw Error("io-not-found", "cli", "cannot open config '" + path + "'");
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        std::string s = line;
        s.erase(0, s.find_first_not_of(" \t\r\n"));
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw Error("io-parse", "cli", "config line " + std::to_string(ln) + " lacks '='");
        auto trim = [](std::string v) {
            v.erase(0, v.find_first_not_of(" \t"));
            auto e = v.find_last_not_of(" \t\r\n");
            v.erase(e == std::string::npos ? 0 : e + 1);
            return v;
        };
        kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
    }
    return kv;
}

std::string option_key(const CLI::Option* opt) {
    std::string name = opt->get_name(false, true);
    auto pos = name.rfind("--");
    if (pos != std::string::npos) name = name.substr(pos + 2);
    return name;
}

// Resolved value of an option as a string (given value, else captured default).
std::string option_value(const CLI::Option* opt) {
    if (!opt->results().empty()) return opt->results().back();
    return opt->get_default_str();
}

std::string build_manifest(const CLI::App& app, const CLI::App* cmd) {
    std::ostringstream os;
    os << "command = " << cmd->get_name() << "\n";
    auto emit = [&](const CLI::App* a) {
        for (const CLI::Option* opt : a->get_options()) {
            std::string key = option_key(opt);
            if (key == "help" || key == "config") continue;
            if (opt->get_expected_min() == 0 && opt->get_expected_max() == 0) {
                os << key << " = " << (opt->count() ? "true" : "false") << "\n";
            } else {
                os << key << " = " << option_value(opt) << "\n";
            }
        }
    };
    emit(&app);
    emit(cmd);
    return os.str();
}

// ---------------------------------------------------------------------------
// Shared pipeline for the bidisk-based commands.

struct Pipeline {
    dyncore::FiberPolynomial p;
    onedim::CriticalSet cs;
    cnum c0;
    cnum v;
    stable::BlockSchedule schedule;
    stable::BidiskSequence bidisks;
    double r0 = 0.0;
};

Pipeline build_pipeline(const SkewMap& f, std::optional<cnum> c0opt, int N, double eps0, double r0,
                        int depth, std::uint64_t seed) {
    Pipeline pl;
    pl.p = f.fiber();
    pl.cs = onedim::critical_points(pl.p);
    onedim::classify_crit(pl.p, pl.cs, 2000);
    if (c0opt) {
        pl.c0 = *c0opt;
    } else {
        auto cp = pl.cs.critPrime();
        if (cp.empty())
            throw Error("precondition", "cli", "no critical point in the Julia set; pass --c-re/--c-im");
        pl.c0 = cp.front();
    }
    pl.v = pl.p.eval(pl.c0);
    auto derivs = stable::orbit_derivs(pl.p, pl.v, std::max(depth + 40, 100));
    if (N <= 0) {
        auto shr = onedim::exp_shrink_estimate(pl.p, pl.cs, pl.v, 0.05, 12, 16, seed);
        auto sampler = onedim::julia_sample(pl.p, 1000, seed);
        auto haf = onedim::hyperbolic_away_fit(pl.p, pl.cs, sampler, shr.muExp, {0.5, 1.0}, 12, seed);
        N = stable::choose_block_length(std::max(haf.C1, 1e-6), shr.muExp, eps0);
    }
    pl.schedule = stable::block_schedule(derivs, N, eps0, std::abs(f.lambda()), 0.0);
    pl.r0 = r0 > 0.0 ? r0 : stable::choose_r0(f, pl.v, pl.schedule, std::min(depth, 30));
    pl.bidisks = stable::radii_tce_wr(pl.p, pl.v, pl.schedule, pl.r0, depth + 10);
    return pl;
}

struct Runner {
    GlobalOpts g;
    std::optional<SkewMap> map;
    json summary;
    std::vector<std::string> artifacts;

    const SkewMap& require_map() const {
        if (!map) throw Error("precondition", "cli", "this command requires --map");
        return *map;
    }

    void write(const std::string& name, const std::string& content) {
        io::atomic_write(std::filesystem::path(g.outDir) / name, content);
        artifacts.push_back(name);
    }

    void finish(const std::string& command) {
        summary["command"] = command;
        summary["map"] = g.mapPath;
        summary["seed"] = g.seed;
        summary["threads"] = g.threads;
        summary["artifacts"] = artifacts;
        io::atomic_write(std::filesystem::path(g.outDir) / "summary.json", summary.dump(2) + "\n");
    }
};

json fitted(double value, const std::string& reference) {
    return json{{"value", value}, {"reference", reference}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"skewlab: numerical laboratory for attracting polynomial skew products"};
    app.require_subcommand(0, 1);
    app.fallthrough(true);  // global flags may follow the subcommand name
    app.option_defaults()->always_capture_default();

    GlobalOpts g;
    app.add_option("--map", g.mapPath, "map definition file");
    app.add_option("--out", g.outDir, "output directory");
    app.add_option("--seed", g.seed, "64-bit seed for every sampling operation");
    app.add_option("--threads", g.threads, "worker threads (outputs are thread-count independent)");
    app.add_option("--config", g.configPath, "key=value config file; flags override");

    // -- subcommand parameter storage ------------------------------------
    struct {
        double tRe = 0, tIm = 0, zRe = 0, zIm = 0;
        long n = 100;
    } orbitP;
    struct {
        long budget = 2000;
    } critP;
    struct {
        double cRe = 0, cIm = 0;
        long n = 200;
    } ceP;
    struct {
        double vRe = 0, vIm = 0;
        long n = 100;
    } lyapP;
    struct {
        double vRe = 0, vIm = 0;
        long n = 1000;
        std::string etas = "0.05,0.1,0.2,0.5,1.0";
    } wrP;
    struct {
        double vRe = 0, vIm = 0, alpha = 0.05;
        long n = 1000;
    } srP;
    struct {
        double cRe = 0, cIm = 0;
        std::string epss = "0.4,0.2,0.1,0.05";
        long budget = 200;
    } przP;
    struct {
        double xRe = 0, xIm = 0;
        long n = 1000;
    } dpuP;
    struct {
        double xRe = 1, xIm = 0, r = 0.1;
        long depth = 20, branches = 64;
        std::string rGrid;
    } shrinkP;
    struct {
        long count = 100000;
    } boxP;
    struct {
        long mMax = 14, resolution = 1024;
        double halfWidth = 2.5, infRadius = 0;
    } kmP;
    struct {
        long maxCritical = 2, trials = 500, points = 100000;
    } blaschkeP;
    struct {
        double cRe = 0, cIm = 0, eps0 = 0.05;
        long n = 200, N = 1;
        bool useC = false;
    } blocksP;
    struct {
        std::string mode = "tcewr";
        double cRe = 0, cIm = 0, eps0 = 0.05, r0 = 1e-3, chi = 0;
        long depth = 100, N = 1;
        bool useC = false;
    } radiiP;
    struct {
        double cRe = 0, cIm = 0, eps0 = 0.05, r0 = 0;
        long depth = 30, N = 1, samples = 256;
        bool useC = false;
    } henonP;
    struct {
        double cRe = 0, cIm = 0, eps0 = 0.05, r0 = 0;
        long depth = 30, N = 1;
        bool useC = false;
    } stableP;
    struct {
        double cRe = 0, cIm = 0, eps0 = 0.05, r0 = 0;
        long depth = 12, N = 1;
        bool useC = false;
    } renormP;
    struct {
        double cRe = 0, cIm = 0, eps0 = 0.05, r0 = 0, beta = 0, infRadius = 0;
        long scaleDepth = 26, samples = 10000, N = 1;
        std::string sList = "20,30,40,50,60";
        bool useC = false;
    } escapeP;
    struct {
        double sigma = 1.5;
        std::string logs = "const:log2:1000";
    } plissP;
    struct {
        long fibers = 100, points = 1000, nMin = 30, nMax = 300;
        double alpha = 0.05, tRadius = 0.3, zHalf = 2.5;
    } saP;
    struct {
        double tRe = 0, tIm = 0, zRe = 0, zIm = 0;
        long n = 200;
    } vlyapP;
    struct {
        double tRe = 0, tIm = 0, zRe = 0, zIm = 0, K = 1.0;
        long n = 500, N = 1;
    } shadowP;
    struct {
        double tRe = 0, tIm = 0, zRe = 0, zIm = 0;
        long budget = 800;
    } classifyP;
    struct {
        double tMin = -0.3, tMax = 0.3, zMin = -2.5, zMax = 2.5;
        std::string resolutions = "512,1024", budgets = "100,400,1600";
    } areaP;

    auto pointOpts = [](CLI::App* c, double* tRe, double* tIm, double* zRe, double* zIm) {
        c->add_option("--t-re", *tRe, "base coordinate, real part");
        c->add_option("--t-im", *tIm, "base coordinate, imaginary part");
        c->add_option("--z-re", *zRe, "fiber coordinate, real part");
        c->add_option("--z-im", *zIm, "fiber coordinate, imaginary part");
    };
    auto pipelineOpts = [](CLI::App* c, double* cRe, double* cIm, bool* useC, double* eps0, long* N,
                           double* r0 = nullptr) {
        auto o1 = c->add_option("--c-re", *cRe, "critical point, real part");
        c->add_option("--c-im", *cIm, "critical point, imaginary part");
        o1->each([useC](const std::string&) { *useC = true; });
        c->add_option("--eps0", *eps0, "block-schedule margin");
        c->add_option("--N", *N, "block length (0 = select from fitted constants)");
        if (r0) c->add_option("--r0", *r0, "base bidisk radius (0 = halve until checks pass)");
    };

    CLI::App* cOrbit = app.add_subcommand("orbit", "iterate a point and record vertical derivatives");
    pointOpts(cOrbit, &orbitP.tRe, &orbitP.tIm, &orbitP.zRe, &orbitP.zIm);
    cOrbit->add_option("--n", orbitP.n, "number of steps");

    CLI::App* cCrit = app.add_subcommand("crit", "critical points of the fiber and their labels");
    cCrit->add_option("--budget", critP.budget, "iteration budget for the labels");

    CLI::App* cCe = app.add_subcommand("ce", "derivative growth along a critical value orbit");
    cCe->add_option("--c-re", ceP.cRe, "critical point, real part");
    cCe->add_option("--c-im", ceP.cIm, "critical point, imaginary part");
    cCe->add_option("--n", ceP.n, "orbit length");

    CLI::App* cLyap = app.add_subcommand("lyapunov", "fiber lyapunov exponent at a value");
    cLyap->add_option("--v-re", lyapP.vRe, "start value, real part");
    cLyap->add_option("--v-im", lyapP.vIm, "start value, imaginary part");
    cLyap->add_option("--n", lyapP.n, "orbit length");

    CLI::App* cWr = app.add_subcommand("wr", "truncated log-derivative sums near the critical set");
    cWr->add_option("--v-re", wrP.vRe, "start value, real part");
    cWr->add_option("--v-im", wrP.vIm, "start value, imaginary part");
    cWr->add_option("--n", wrP.n, "orbit length");
    cWr->add_option("--etas", wrP.etas, "comma-separated eta grid");

    CLI::App* cSr = app.add_subcommand("sr", "slow-recurrence violations");
    cSr->add_option("--v-re", srP.vRe, "start value, real part");
    cSr->add_option("--v-im", srP.vIm, "start value, imaginary part");
    cSr->add_option("--n", srP.n, "horizon");
    cSr->add_option("--alpha", srP.alpha, "recurrence exponent");

    CLI::App* cPrz = app.add_subcommand("przytycki", "first return times of critical disks");
    cPrz->add_option("--c-re", przP.cRe, "critical point, real part");
    cPrz->add_option("--c-im", przP.cIm, "critical point, imaginary part");
    cPrz->add_option("--epss", przP.epss, "comma-separated disk radii");
    cPrz->add_option("--budget", przP.budget, "iteration budget");

    CLI::App* cDpu = app.add_subcommand("dpu", "truncated log-distance sums along an orbit");
    cDpu->add_option("--x-re", dpuP.xRe, "start point, real part");
    cDpu->add_option("--x-im", dpuP.xIm, "start point, imaginary part");
    cDpu->add_option("--n", dpuP.n, "orbit length");

    CLI::App* cShrink = app.add_subcommand("shrink", "certified pullback diameters on the fiber");
    cShrink->add_option("--x-re", shrinkP.xRe, "center, real part");
    cShrink->add_option("--x-im", shrinkP.xIm, "center, imaginary part");
    cShrink->add_option("--r", shrinkP.r, "initial radius");
    cShrink->add_option("--depth", shrinkP.depth, "pullback depth");
    cShrink->add_option("--branches", shrinkP.branches, "random branch count");
    cShrink->add_option("--r-grid", shrinkP.rGrid, "optional radius grid for the scale exponent");

    CLI::App* cBox = app.add_subcommand("boxdim", "box dimension of a sampled fiber julia set");
    cBox->add_option("--count", boxP.count, "cloud size");

    CLI::App* cKm = app.add_subcommand("km", "area decay of the slow set");
    cKm->add_option("--m-max", kmP.mMax, "largest preimage level");
    cKm->add_option("--resolution", kmP.resolution, "grid resolution per axis");
    cKm->add_option("--half-width", kmP.halfWidth, "window half width");
    cKm->add_option("--inf-radius", kmP.infRadius, "trap radius at infinity (0 = 2x escape radius)");

    CLI::App* cBla = app.add_subcommand("blaschke", "preimage-measure inequality on the disk");
    cBla->add_option("--max-critical", blaschkeP.maxCritical, "maximum critical points");
    cBla->add_option("--trials", blaschkeP.trials, "random products");
    cBla->add_option("--points", blaschkeP.points, "monte carlo points per trial");

    CLI::App* cBlocks = app.add_subcommand("blocks", "block schedule over a critical value orbit");
    pipelineOpts(cBlocks, &blocksP.cRe, &blocksP.cIm, &blocksP.useC, &blocksP.eps0, &blocksP.N);
    cBlocks->add_option("--n", blocksP.n, "orbit length");

    CLI::App* cRadii = app.add_subcommand("radii", "bidisk radius sequences and bounds");
    pipelineOpts(cRadii, &radiiP.cRe, &radiiP.cIm, &radiiP.useC, &radiiP.eps0, &radiiP.N, &radiiP.r0);
    cRadii->add_option("--mode", radiiP.mode, "tcewr or pl")
        ->check(CLI::IsMember({"tcewr", "pl"}));
    cRadii->add_option("--depth", radiiP.depth, "sequence depth");
    cRadii->add_option("--chi", radiiP.chi, "vertical exponent for pl mode (0 = fit)");

    CLI::App* cHenon = app.add_subcommand("henon", "bidisk-to-bidisk crossing checks");
    pipelineOpts(cHenon, &henonP.cRe, &henonP.cIm, &henonP.useC, &henonP.eps0, &henonP.N,
                 &henonP.r0);
    cHenon->add_option("--depth", henonP.depth, "levels to check");
    cHenon->add_option("--samples", henonP.samples, "boundary samples");

    CLI::App* cStable = app.add_subcommand("stable", "stable graph over the base disk");
    pipelineOpts(cStable, &stableP.cRe, &stableP.cIm, &stableP.useC, &stableP.eps0, &stableP.N,
                 &stableP.r0);
    cStable->add_option("--depth", stableP.depth, "backward depth");

    CLI::App* cRenorm = app.add_subcommand("renorm", "renormalization scales along the value curve");
    pipelineOpts(cRenorm, &renormP.cRe, &renormP.cIm, &renormP.useC, &renormP.eps0, &renormP.N,
                 &renormP.r0);
    cRenorm->add_option("--depth", renormP.depth, "largest level");

    CLI::App* cEscape = app.add_subcommand("escape", "fraction of the value curve inside the trap");
    pipelineOpts(cEscape, &escapeP.cRe, &escapeP.cIm, &escapeP.useC, &escapeP.eps0, &escapeP.N,
                 &escapeP.r0);
    cEscape->add_option("--s-list", escapeP.sList, "comma-separated s values");
    cEscape->add_option("--samples", escapeP.samples, "samples per s");
    cEscape->add_option("--beta", escapeP.beta, "step exponent (0 = from the partial sup bound)");
    cEscape->add_option("--scale-depth", escapeP.scaleDepth, "renormalization depth for j(s)");
    cEscape->add_option("--inf-radius", escapeP.infRadius, "trap radius at infinity (0 = escape radius)");

    CLI::App* cPliss = app.add_subcommand("pliss", "hyperbolic times of a log-derivative sequence");
    cPliss->add_option("--sigma", plissP.sigma, "expansion threshold");
    cPliss->add_option("--logs", plissP.logs,
                       "const:<log2|log4|value>:<n>, file:<path>, or vderiv:<n>");

    CLI::App* cSa = app.add_subcommand("slowapproach", "violating fraction over sampled fibers");
    cSa->add_option("--fibers", saP.fibers, "fiber count");
    cSa->add_option("--points", saP.points, "points per fiber");
    cSa->add_option("--alpha", saP.alpha, "approach exponent");
    cSa->add_option("--n-min", saP.nMin, "first index checked");
    cSa->add_option("--n-max", saP.nMax, "last index checked");
    cSa->add_option("--t-radius", saP.tRadius, "fiber sampling radius");
    cSa->add_option("--z-half", saP.zHalf, "fiber window half width");

    CLI::App* cVlyap = app.add_subcommand("vlyap", "vertical lyapunov running averages");
    pointOpts(cVlyap, &vlyapP.tRe, &vlyapP.tIm, &vlyapP.zRe, &vlyapP.zIm);
    cVlyap->add_option("--n", vlyapP.n, "horizon");

    CLI::App* cShadow = app.add_subcommand("shadow", "shadow intervals and membership density");
    pointOpts(cShadow, &shadowP.tRe, &shadowP.tIm, &shadowP.zRe, &shadowP.zIm);
    cShadow->add_option("--n", shadowP.n, "orbit length");
    cShadow->add_option("--K", shadowP.K, "shadow length factor");
    cShadow->add_option("--N", shadowP.N, "cover-count threshold");

    CLI::App* cClassify = app.add_subcommand("classify", "label a single point");
    pointOpts(cClassify, &classifyP.tRe, &classifyP.tIm, &classifyP.zRe, &classifyP.zIm);
    cClassify->add_option("--budget", classifyP.budget, "iteration budget");

    CLI::App* cArea = app.add_subcommand("area", "suspect-area table over the real slice");
    cArea->add_option("--t-min", areaP.tMin, "window lower t");
    cArea->add_option("--t-max", areaP.tMax, "window upper t");
    cArea->add_option("--z-min", areaP.zMin, "window lower z");
    cArea->add_option("--z-max", areaP.zMax, "window upper z");
    cArea->add_option("--resolutions", areaP.resolutions, "comma-separated grid resolutions");
    cArea->add_option("--budgets", areaP.budgets, "comma-separated budgets");

    CLI::App* cSelftest = app.add_subcommand("selftest", "run the acceptance suite");

    // ---------------------------------------------------------------------
    // Config merge: inject config values for options not given on the line.
    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == "--config") g.configPath = args[i + 1];
        if (args[i] == "--out") g.outDir = args[i + 1];  // error records land here too
    }
    try {
        if (!g.configPath.empty()) {
            auto kv = read_config(g.configPath);
            std::string cmdName;
            for (const std::string& a : args)
                if (!a.empty() && a[0] != '-' && app.get_subcommand_no_throw(a)) cmdName = a;
            if (cmdName.empty()) {
                auto it = kv.find("command");
                if (it == kv.end())
                    throw Error("bad-config", "cli", "config lacks a command and none was given");
                cmdName = it->second;
                args.insert(args.begin(), cmdName);
            }
            CLI::App* cmd = app.get_subcommand_no_throw(cmdName);
            if (!cmd) throw Error("bad-config", "cli", "unknown command '" + cmdName + "'");
            for (const auto& [key, value] : kv) {
                if (key == "command") continue;
                CLI::Option* opt = nullptr;
                try {
                    opt = cmd->get_option("--" + key);
                } catch (const CLI::OptionNotFound&) {
                    try {
                        opt = app.get_option("--" + key);
                    } catch (const CLI::OptionNotFound&) {
                        throw Error("bad-config", "cli", "unknown config key '" + key + "'");
                    }
                }
                bool given = false;
                for (const std::string& a : args)
                    if (a == "--" + key) given = true;
                if (given) continue;
                if (opt->get_expected_min() == 0 && opt->get_expected_max() == 0) {
                    if (value == "true") args.push_back("--" + key);
                } else {
                    args.push_back("--" + key);
                    args.push_back(value);
                }
            }
        }

        std::vector<const char*> cargs;
        cargs.push_back("skewlab");
        for (const std::string& a : args) cargs.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(cargs.size()), cargs.data());
        } catch (const CLI::ParseError& e) {
            if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
                return app.exit(e);
            std::fprintf(stderr, "argument error: %s\n", e.what());
            return 2;
        }

        auto subs = app.get_subcommands();
        if (subs.empty()) {
            std::fprintf(stderr, "%s\n", app.help().c_str());
            return 2;
        }
        CLI::App* cmd = subs.front();
        std::string name = cmd->get_name();

        Runner run;
        run.g = g;
        if (!g.mapPath.empty()) run.map = SkewMap::load(g.mapPath);
        std::filesystem::create_directories(g.outDir);
        io::atomic_write(std::filesystem::path(g.outDir) / "manifest.cfg",
                         build_manifest(app, cmd));

        if (name == "orbit") {
            auto tr = dyncore::orbit(run.require_map(),
                                     {cnum(orbitP.tRe, orbitP.tIm), cnum(orbitP.zRe, orbitP.zIm)},
                                     static_cast<std::size_t>(orbitP.n));
            io::Csv csv({"k", "t_re", "t_im", "z_re", "z_im", "vderiv_re", "vderiv_im"});
            for (std::size_t k = 0; k < tr.points.size(); ++k)
                csv.cell(static_cast<long>(k))
                    .cell(tr.points[k].t.real()).cell(tr.points[k].t.imag())
                    .cell(tr.points[k].z.real()).cell(tr.points[k].z.imag())
                    .cell(tr.vderivs[k].real()).cell(tr.vderivs[k].imag()).endrow();
            run.write("orbit.csv", csv.str());
            run.summary["steps"] = tr.steps();
            run.summary["escaped"] = tr.escaped;
        } else if (name == "crit") {
            const auto& f = run.require_map();
            auto p = f.fiber();
            auto cs = onedim::critical_points(p);
            onedim::classify_crit(p, cs, static_cast<int>(critP.budget));
            io::Csv csv({"z_re", "z_im", "multiplicity", "in_julia", "ambiguous"});
            for (const auto& cp : cs.points)
                csv.cell(cp.z.real()).cell(cp.z.imag()).cell(static_cast<long>(cp.multiplicity))
                    .cell(static_cast<long>(cp.inJulia)).cell(static_cast<long>(cp.ambiguous))
                    .endrow();
            run.write("crit.csv", csv.str());
            io::Csv cyc({"cycle", "point_re", "point_im", "radius", "multiplier"});
            for (std::size_t i = 0; i < cs.cycles.size(); ++i)
                for (std::size_t k = 0; k < cs.cycles[i].points.size(); ++k)
                    cyc.cell(static_cast<long>(i)).cell(cs.cycles[i].points[k].real())
                        .cell(cs.cycles[i].points[k].imag()).cell(cs.cycles[i].radii[k])
                        .cell(cs.cycles[i].multiplier).endrow();
            run.write("cycles.csv", cyc.str());
            run.summary["critical_points"] = cs.points.size();
            run.summary["in_julia"] = cs.critPrime().size();
            run.summary["attracting_cycles"] = cs.cycles.size();
        } else if (name == "ce") {
            const auto& f = run.require_map();
            auto p = f.fiber();
            auto cs = onedim::critical_points(p);
            onedim::classify_crit(p, cs, 2000);
            auto rep = onedim::ce_report(p, cs, cnum(ceP.cRe, ceP.cIm), static_cast<int>(ceP.n));
            io::Csv csv({"k", "log_deriv"});
            for (std::size_t k = 0; k < rep.logDeriv.size(); ++k)
                csv.cell(static_cast<long>(k)).cell(rep.logDeriv[k]).endrow();
            run.write("ce.csv", csv.str());
            run.summary["mu_ce"] =
                fitted(rep.muCE, "exponential growth rate of derivatives along the critical value orbit");
            run.summary["C"] = fitted(rep.C, "growth prefactor");
            run.summary["residual"] = rep.residual;
            run.summary["ce_plausible"] = rep.cePlausible;
        } else if (name == "lyapunov") {
            const auto& f = run.require_map();
            auto rep = onedim::lyapunov_at_value(f.fiber(), cnum(lyapP.vRe, lyapP.vIm),
                                                 static_cast<int>(lyapP.n));
            io::Csv csv({"k", "running_avg"});
            for (std::size_t k = 0; k < rep.runningAvg.size(); ++k)
                csv.cell(static_cast<long>(k + 1)).cell(rep.runningAvg[k]).endrow();
            run.write("lyapunov.csv", csv.str());
            run.summary["value"] = fitted(rep.value, "fiber lyapunov exponent at the value");
            run.summary["zero_hit"] = rep.zeroHit;
        } else if (name == "wr") {
            const auto& f = run.require_map();
            auto p = f.fiber();
            auto cs = onedim::critical_points(p);
            onedim::classify_crit(p, cs, 2000);
            auto prof = onedim::wr_profile(p, cs, cnum(wrP.vRe, wrP.vIm), static_cast<int>(wrP.n),
                                           parse_list(wrP.etas));
            io::Csv csv({"eta", "tail_sup", "slope", "c0"});
            for (const auto& pt : prof)
                csv.cell(pt.eta).cell(pt.tailSup).cell(pt.slope).cell(pt.c0).endrow();
            run.write("wr.csv", csv.str());
            run.summary["min_tail_sup"] =
                fitted(prof.empty() ? 0.0 : prof.front().tailSup,
                       "tail average of the truncated sum at the smallest eta");
        } else if (name == "sr") {
            const auto& f = run.require_map();
            auto p = f.fiber();
            auto cs = onedim::critical_points(p);
            onedim::classify_crit(p, cs, 2000);
            auto bad = onedim::sr_check(p, cs, cnum(srP.vRe, srP.vIm), static_cast<int>(srP.n),
                                        srP.alpha);
            io::Csv csv({"violation_index"});
            for (int j : bad) csv.cell(static_cast<long>(j)).endrow();
            run.write("sr.csv", csv.str());
            run.summary["violations"] = bad.size();
        } else if (name == "przytycki") {
            const auto& f = run.require_map();
            auto p = f.fiber();
            auto cs = onedim::critical_points(p);
            onedim::classify_crit(p, cs, 2000);
            auto fit = onedim::przytycki_fit(p, cs, cnum(przP.cRe, przP.cIm), parse_list(przP.epss),
                                             static_cast<int>(przP.budget));
            io::Csv csv({"eps", "first_return"});
            for (std::size_t i = 0; i < fit.epsGrid.size(); ++i)
                csv.cell(fit.epsGrid[i]).cell(static_cast<long>(fit.returnTimes[i])).endrow();
            run.write("przytycki.csv", csv.str());
            run.summary["C"] = fitted(fit.C, "return-time constant against log(1/eps)");
        } else if (name == "dpu") {
            const auto& f = run.require_map();
            auto p = f.fiber();
            auto cs = onedim::critical_points(p);
            onedim::classify_crit(p, cs, 2000);
            auto rep = onedim::dpu_sum(p, cs, cnum(dpuP.xRe, dpuP.xIm), static_cast<int>(dpuP.n));
            io::Csv csv({"k", "truncated_sum"});
            for (std::size_t k = 0; k < rep.partialSums.size(); ++k)
                csv.cell(static_cast<long>(k + 1)).cell(rep.partialSums[k]).endrow();
            run.write("dpu.csv", csv.str());
            run.summary["Q"] = fitted(rep.Q, "sup of truncated sums over the horizon");
            run.summary["clip_events"] = rep.clipEvents;
            run.summary["excluded_terms"] = rep.excluded;
            run.summary["crit_empty"] = rep.critEmpty;
        } else if (name == "shrink") {
            const auto& f = run.require_map();
            auto p = f.fiber();
            auto cs = onedim::critical_points(p);
            onedim::classify_crit(p, cs, 2000);
            auto rep = onedim::exp_shrink_estimate(p, cs, cnum(shrinkP.xRe, shrinkP.xIm), shrinkP.r,
                                                   static_cast<int>(shrinkP.depth),
                                                   static_cast<int>(shrinkP.branches), g.seed);
            io::Csv csv({"n", "diam", "diam_upper", "diam_lower"});
            for (std::size_t n = 0; n < rep.maxDiam.size(); ++n)
                csv.cell(static_cast<long>(n)).cell(rep.maxDiam[n]).cell(rep.maxDiamUpper[n])
                    .cell(rep.maxDiamLower[n]).endrow();
            run.write("shrink.csv", csv.str());
            run.summary["mu_exp"] = fitted(rep.muExp, "pullback contraction rate");
            run.summary["fit_residual"] = rep.fitResidual;
            run.summary["unresolved_branches"] = rep.unresolved;
            run.summary["critical_pullbacks"] = rep.criticalPullbacks;
            if (!shrinkP.rGrid.empty()) {
                auto th = onedim::exp_shrink_theta(p, cs, cnum(shrinkP.xRe, shrinkP.xIm),
                                                   parse_list(shrinkP.rGrid),
                                                   static_cast<int>(shrinkP.depth),
                                                   static_cast<int>(shrinkP.branches), g.seed);
                run.summary["theta0"] = fitted(th.theta0, "radius exponent of pullback diameters");
            }
        } else if (name == "boxdim") {
            const auto& f = run.require_map();
            auto sampler = onedim::julia_sample(f.fiber(), static_cast<std::size_t>(boxP.count),
                                                g.seed);
            io::Csv csv({"re", "im"});
            for (cnum z : sampler.cloud) csv.cell(z.real()).cell(z.imag()).endrow();
            run.write("cloud.csv", csv.str());
            auto dim = onedim::box_dimension(sampler.cloud);
            run.summary["dimension"] = fitted(dim.dimension, "box-counting dimension of the cloud");
            run.summary["residual"] = dim.residual;
            run.summary["scales_used"] = dim.scalesUsed;
        } else if (name == "km") {
            const auto& f = run.require_map();
            auto p = f.fiber();
            auto cs = onedim::critical_points(p);
            onedim::classify_crit(p, cs, 2000);
            auto trap = onedim::trap_from_cycles(p, cs.cycles);
            if (kmP.infRadius > 0) trap.infinityRadius = kmP.infRadius;
            auto rep = onedim::km_measure(p, trap, static_cast<int>(kmP.mMax),
                                          static_cast<int>(kmP.resolution), kmP.halfWidth,
                                          g.threads);
            io::Csv csv({"m", "count", "area"});
            for (std::size_t m = 0; m < rep.areas.size(); ++m)
                csv.cell(static_cast<long>(m)).cell(static_cast<long>(rep.counts[m]))
                    .cell(rep.areas[m]).endrow();
            run.write("km.csv", csv.str());
            run.summary["slope"] = fitted(rep.slope, "decay rate of the slow-set area");
            run.summary["residual"] = rep.residual;
        } else if (name == "blaschke") {
            auto chk = onedim::blaschke_measure_check(static_cast<int>(blaschkeP.maxCritical),
                                                      static_cast<std::size_t>(blaschkeP.trials),
                                                      static_cast<std::size_t>(blaschkeP.points),
                                                      g.seed);
            run.summary["worst_ratio"] =
                fitted(chk.worstRatio, "empirical preimage-measure inequality constant");
            run.summary["trials"] = chk.trials;
        } else if (name == "blocks") {
            const auto& f = run.require_map();
            std::optional<cnum> c0;
            if (blocksP.useC) c0 = cnum(blocksP.cRe, blocksP.cIm);
            auto pl = build_pipeline(f, c0, static_cast<int>(blocksP.N), blocksP.eps0, 1e-3,
                                     static_cast<int>(blocksP.n), g.seed);
            stable::verify_schedule(pl.schedule);
            io::Csv csv({"m", "deriv", "mu", "first_type"});
            for (std::size_t m = 0; m < pl.schedule.derivs.size() && m < static_cast<std::size_t>(blocksP.n); ++m)
                csv.cell(static_cast<long>(m)).cell(pl.schedule.derivs[m]).cell(pl.schedule.mu[m])
                    .cell(static_cast<long>(pl.schedule.firstType[m / pl.schedule.N] ? 1 : 0))
                    .endrow();
            run.write("blocks.csv", csv.str());
            run.summary["N"] = pl.schedule.N;
            run.summary["eps0"] = pl.schedule.eps0;
        } else if (name == "radii") {
            const auto& f = run.require_map();
            std::optional<cnum> c0;
            if (radiiP.useC) c0 = cnum(radiiP.cRe, radiiP.cIm);
            auto pl = build_pipeline(f, c0, static_cast<int>(radiiP.N), radiiP.eps0, radiiP.r0,
                                     static_cast<int>(radiiP.depth), g.seed);
            stable::BidiskSequence seq;
            stable::RadiiBounds bounds;
            if (radiiP.mode == "pl") {
                double chi = radiiP.chi;
                if (chi <= 0) chi = onedim::lyapunov_at_value(pl.p, pl.v, 200).value;
                seq = stable::radii_pl(pl.p, pl.v, chi, radiiP.eps0, pl.schedule.derivs, pl.r0,
                                       static_cast<int>(radiiP.depth));
                bounds = stable::check_bounds_pl(seq);
            } else {
                seq = stable::radii_tce_wr(pl.p, pl.v, pl.schedule, pl.r0,
                                           static_cast<int>(radiiP.depth));
                double dpNorm = 0.0;
                auto sampler = onedim::julia_sample(pl.p, 2000, g.seed);
                for (cnum z : sampler.cloud) dpNorm = std::max(dpNorm, std::abs(pl.p.deriv(z)));
                bounds = stable::check_bounds_tce_wr(seq, pl.schedule, dpNorm, 1.0, 0.01);
            }
            io::Csv csv({"n", "center_re", "center_im", "r_horiz", "r_vert"});
            for (int n = 0; n <= seq.depth(); ++n)
                csv.cell(static_cast<long>(n))
                    .cell(seq.centers[static_cast<std::size_t>(n)].real())
                    .cell(seq.centers[static_cast<std::size_t>(n)].imag())
                    .cell(seq.horizRadii[static_cast<std::size_t>(n)])
                    .cell(seq.vertRadii[static_cast<std::size_t>(n)]).endrow();
            run.write("radii.csv", csv.str());
            run.summary["C2"] = fitted(bounds.C2, "upper radius-band constant");
            run.summary["C3"] = fitted(bounds.C3, "lower radius-band constant");
            run.summary["upper_violations"] = bounds.upperViolations;
            run.summary["lower_violations"] = bounds.lowerViolations;
            run.summary["effective_slope"] = bounds.effectiveSlope;
        } else if (name == "henon") {
            const auto& f = run.require_map();
            std::optional<cnum> c0;
            if (henonP.useC) c0 = cnum(henonP.cRe, henonP.cIm);
            auto pl = build_pipeline(f, c0, static_cast<int>(henonP.N), henonP.eps0, henonP.r0,
                                     static_cast<int>(henonP.depth), g.seed);
            io::Csv csv({"i", "clearance_margin", "sampling_error", "vertical_ok", "winding", "ok"});
            bool all = true;
            for (int i = 0; i < henonP.depth; ++i) {
                auto rec = stable::henon_check(f, pl.bidisks, i, static_cast<int>(henonP.samples));
                all = all && rec.ok();
                csv.cell(static_cast<long>(i)).cell(rec.clearanceMargin).cell(rec.samplingError)
                    .cell(static_cast<long>(rec.verticalOk)).cell(static_cast<long>(rec.winding))
                    .cell(static_cast<long>(rec.ok())).endrow();
            }
            run.write("henon.csv", csv.str());
            run.summary["all_ok"] = all;
            run.summary["r0"] = pl.r0;
            run.summary["modulus_lower_bound"] =
                fitted(stable::modulus_lower_bound(henonP.eps0), "annulus modulus floor");
        } else if (name == "stable") {
            const auto& f = run.require_map();
            std::optional<cnum> c0;
            if (stableP.useC) c0 = cnum(stableP.cRe, stableP.cIm);
            auto pl = build_pipeline(f, c0, static_cast<int>(stableP.N), stableP.eps0, stableP.r0,
                                     static_cast<int>(stableP.depth), g.seed);
            auto graph = stable::graph_transform(f, pl.bidisks, static_cast<int>(stableP.depth));
            io::Csv csv({"t_re", "t_im", "g_re", "g_im"});
            for (std::size_t i = 0; i < graph.ts.size(); ++i)
                csv.cell(graph.ts[i].real()).cell(graph.ts[i].imag()).cell(graph.gs[i].real())
                    .cell(graph.gs[i].imag()).endrow();
            run.write("stable.csv", csv.str());
            auto sr = stable::shadow_rate(f, graph, pl.v, std::min<int>(25, static_cast<int>(stableP.depth)));
            run.summary["max_residual"] = graph.maxResidual;
            run.summary["agreement"] = graph.agreement;
            run.summary["lambda1"] = fitted(sr.lambda1, "shadowing contraction rate");
            run.summary["insufficient_data"] = sr.insufficientData;
        } else if (name == "renorm") {
            const auto& f = run.require_map();
            std::optional<cnum> c0;
            if (renormP.useC) c0 = cnum(renormP.cRe, renormP.cIm);
            auto pl = build_pipeline(f, c0, static_cast<int>(renormP.N), renormP.eps0, renormP.r0,
                                     static_cast<int>(renormP.depth), g.seed);
            auto branch = stable::critical_branch(f, pl.c0);
            auto graph = stable::graph_transform(f, pl.bidisks, std::min<int>(25, static_cast<int>(renormP.depth) + 10));
            if (stable::branch_graph_gap(branch, graph) < 1e-8) branch.degenerate = true;
            stable::DeviationOrbit dev(f, pl.v, static_cast<int>(renormP.depth) + 5);
            io::Csv csv({"n", "rho_n", "diamD_n", "degree_n"});
            std::vector<double> ns, lr;
            for (int n = 0; n <= renormP.depth; ++n) {
                auto rs = stable::renorm_scale(f, branch, pl.bidisks, n, dev);
                csv.cell(static_cast<long>(n)).cell(rs.rho).cell(rs.diamD)
                    .cell(static_cast<long>(rs.degree)).endrow();
                ns.push_back(n);
                lr.push_back(std::log(rs.rho / pl.bidisks.vertRadii[static_cast<std::size_t>(n)]));
            }
            run.write("renorm.csv", csv.str());
            auto fitL = fit_line(ns, lr);
            run.summary["scale_slope"] =
                fitted(fitL.slope, "decay rate of the renormalization scale against the bidisk radius");
            run.summary["psi_prime0_abs"] = std::abs(branch.psiPrime0);
        } else if (name == "escape") {
            const auto& f = run.require_map();
            std::optional<cnum> c0;
            if (escapeP.useC) c0 = cnum(escapeP.cRe, escapeP.cIm);
            auto pl = build_pipeline(f, c0, static_cast<int>(escapeP.N), escapeP.eps0, escapeP.r0,
                                     static_cast<int>(escapeP.scaleDepth) + 5, g.seed);
            auto branch = stable::critical_branch(f, pl.c0);
            stable::DeviationOrbit dev(f, pl.v, 140);
            std::vector<double> scales;
            for (int n = 0; n <= escapeP.scaleDepth; ++n)
                scales.push_back(stable::renorm_scale(f, branch, pl.bidisks, n, dev).rho);
            onedim::TrappingRegion base;
            base.infinityRadius = escapeP.infRadius > 0 ? escapeP.infRadius : pl.p.escapeRadius();
            auto trap = stable::bulge_trap(f, base);
            double beta = escapeP.beta;
            if (beta <= 0) {
                double M = dyncore::sup_partials(f, {cnum(0, 0), 1.0, cnum(0, 0), 3.0}, 64).M;
                beta = stable::default_beta(std::abs(f.lambda()), M);
            }
            io::Csv csv({"s", "j_s", "steps", "fraction", "complement"});
            std::vector<double> xs, ys;
            for (double s : parse_list(escapeP.sList)) {
                auto e = stable::escape_fraction(f, branch, trap, scales, s,
                                                 static_cast<std::size_t>(escapeP.samples), g.seed,
                                                 beta, dev, g.threads);
                csv.cell(s).cell(static_cast<long>(e.js)).cell(static_cast<long>(e.steps))
                    .cell(e.fraction).cell(e.complement).endrow();
                xs.push_back(s);
                ys.push_back(std::log(std::max(e.complement, 1e-5)));
            }
            run.write("escape.csv", csv.str());
            run.summary["beta"] = beta;
            run.summary["complement_slope"] =
                fitted(fit_line(xs, ys).slope, "decay rate of the complement fraction in s");
        } else if (name == "pliss") {
            std::vector<double> logs;
            const std::string& logsArg = plissP.logs;
            if (logsArg.rfind("const:", 0) == 0) {
                auto rest = logsArg.substr(6);
                auto colon = rest.find(':');
                if (colon == std::string::npos)
                    throw Error("bad-config", "cli", "const form needs const:<value>:<n>");
                std::string valTok = rest.substr(0, colon);
                double val = valTok == "log2"   ? std::log(2.0)
                             : valTok == "log4" ? std::log(4.0)
                                                : std::stod(valTok);
                long n = std::stol(rest.substr(colon + 1));
                logs.assign(static_cast<std::size_t>(n), val);
            } else if (logsArg.rfind("file:", 0) == 0) {
                std::istringstream in(io::read_file(logsArg.substr(5)));
                double v;
                while (in >> v) logs.push_back(v);
            } else if (logsArg.rfind("vderiv:", 0) == 0) {
                const auto& f = run.require_map();
                long n = std::stol(logsArg.substr(7));
                auto p = f.fiber();
                auto cs = onedim::critical_points(p);
                onedim::classify_crit(p, cs, 2000);
                auto cp = cs.critPrime();
                if (cp.empty()) throw Error("precondition", "cli", "no critical point in the Julia set");
                cnum z = p.eval(cp.front());
                for (long k = 0; k < n; ++k) {
                    logs.push_back(std::log(std::abs(p.deriv(z))));
                    z = p.eval(z);
                }
            } else {
                throw Error("bad-config", "cli", "unknown --logs form '" + logsArg + "'");
            }
            auto rec = twodim::pliss_hyperbolic_times(logs, plissP.sigma);
            io::Csv csv({"hyperbolic_time"});
            for (int m : rec.times) csv.cell(static_cast<long>(m)).endrow();
            run.write("pliss.csv", csv.str());
            run.summary["density"] = fitted(rec.density, "density of hyperbolic times");
            run.summary["count"] = rec.times.size();
        } else if (name == "slowapproach") {
            const auto& f = run.require_map();
            auto field = twodim::build_distance_field(f);
            auto batch = twodim::slow_approach_batch(
                f, field, static_cast<int>(saP.fibers), static_cast<int>(saP.points), saP.tRadius,
                saP.zHalf, saP.alpha, static_cast<int>(saP.nMin), static_cast<int>(saP.nMax),
                g.seed, g.threads);
            io::Csv csv({"fiber", "violating_fraction"});
            for (std::size_t i = 0; i < batch.perFiber.size(); ++i)
                csv.cell(static_cast<long>(i)).cell(batch.perFiber[i]).endrow();
            run.write("sa.csv", csv.str());
            run.summary["violating_fraction"] =
                fitted(batch.violatingFraction, "fraction of sampled points violating slow approach");
            run.summary["escaped"] = batch.escaped;
            run.summary["total"] = batch.total;
        } else if (name == "vlyap") {
            const auto& f = run.require_map();
            auto rep = twodim::vertical_lyapunov(
                f, {cnum(vlyapP.tRe, vlyapP.tIm), cnum(vlyapP.zRe, vlyapP.zIm)},
                static_cast<int>(vlyapP.n));
            io::Csv csv({"k", "running_avg"});
            for (std::size_t k = 0; k < rep.runningAvg.size(); ++k)
                csv.cell(static_cast<long>(k + 1)).cell(rep.runningAvg[k]).endrow();
            run.write("vlyap.csv", csv.str());
            run.summary["liminf_proxy"] =
                fitted(rep.liminfProxy, "finite-horizon proxy for the lower vertical exponent");
            run.summary["zero_hit"] = rep.zeroHit;
        } else if (name == "shadow") {
            const auto& f = run.require_map();
            auto field = twodim::build_distance_field(f);
            auto po = twodim::phi_orbit(f, field,
                                        {cnum(shadowP.tRe, shadowP.tIm), cnum(shadowP.zRe, shadowP.zIm)},
                                        static_cast<int>(shadowP.n));
            auto cfg = twodim::shadow_membership(po.phi, shadowP.K, static_cast<int>(shadowP.N));
            io::Csv csv({"n", "cover_count", "member"});
            for (std::size_t n = 0; n < cfg.counts.size(); ++n)
                csv.cell(static_cast<long>(n + 1)).cell(static_cast<long>(cfg.counts[n]))
                    .cell(static_cast<long>(cfg.member[n])).endrow();
            run.write("shadow.csv", csv.str());
            run.summary["density"] = fitted(cfg.density, "density of lightly shadowed times");
            run.summary["bound"] = cfg.bound;
            run.summary["bound_holds"] = cfg.boundHolds;
            run.summary["C"] = fitted(po.C, "sup of prefix-averaged vertical log distances");
        } else if (name == "classify") {
            const auto& f = run.require_map();
            auto p = f.fiber();
            auto cs = onedim::critical_points(p);
            onedim::classify_crit(p, cs, 2000);
            auto trap = twodim::build_trap2d(f, cs.cycles);
            auto pc = twodim::classify_point(
                f, trap, {cnum(classifyP.tRe, classifyP.tIm), cnum(classifyP.zRe, classifyP.zIm)},
                static_cast<int>(classifyP.budget));
            const char* names[] = {"julia-suspect", "escaping", "basin"};
            run.summary["label"] = names[static_cast<int>(pc.label)];
            run.summary["basin_id"] = pc.basinId;
            run.summary["iterations"] = pc.iterations;
        } else if (name == "area") {
            const auto& f = run.require_map();
            auto p = f.fiber();
            auto cs = onedim::critical_points(p);
            onedim::classify_crit(p, cs, 2000);
            auto trap = twodim::build_trap2d(f, cs.cycles);
            twodim::Window w{areaP.tMin, areaP.tMax, areaP.zMin, areaP.zMax};
            auto table = twodim::julia_area_estimate(f, trap, w, parse_int_list(areaP.resolutions),
                                                     parse_int_list(areaP.budgets), g.threads);
            io::Csv csv({"resolution", "budget", "suspect_area", "escaping_area", "basin_area"});
            for (const auto& e : table.entries) {
                csv.cell(static_cast<long>(e.resolution)).cell(static_cast<long>(e.budget))
                    .cell(e.suspectArea).cell(e.escapingArea).cell(e.basinArea).endrow();
                std::ostringstream nm;
                nm << "raster_" << e.resolution << "_" << e.budget << ".pgm";
                run.write(nm.str(), io::pgm_encode(e.resolution, e.resolution, e.gray));
            }
            run.write("area.csv", csv.str());
            run.summary["entries"] = table.entries.size();
        } else if (name == "selftest") {
            (void)cSelftest;
            auto results = accept::run_all(g.outDir, g.threads);
            bool ok = accept::print_results(results);
            json arr = json::array();
            for (const auto& r : results)
                arr.push_back(json{{"id", r.id},
                                   {"name", r.name},
                                   {"pass", r.pass},
                                   {"details", r.details},
                                   {"seconds", r.seconds}});
            run.summary["criteria"] = arr;
            run.summary["all_pass"] = ok;
            run.finish(name);
            return ok ? 0 : 1;
        }

        run.finish(name);
        return 0;
    } catch (const Error& e) {
        json err{{"code", e.code()}, {"module", e.module()}, {"message", e.what()}};
        std::fprintf(stderr, "%s\n", e.what());
        try {
            std::filesystem::create_directories(g.outDir);
            io::atomic_write(std::filesystem::path(g.outDir) / "error.json", err.dump(2) + "\n");
        } catch (...) {
        }
        const std::string& c = e.code();
        bool input = c.rfind("io-", 0) == 0 || c == "bad-config" || c == "precondition";
        return input ? 2 : 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
