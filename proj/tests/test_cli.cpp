#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "skewlab/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* kCheb =
    "lambda_re = 0.5\n"
    "lambda_im = 0\n"
    "fiber_degree = 2\n"
    "r_delta = 1\n"
    "a[0] = -2 0 0.1 0\n"
    "a[1] = 0 0\n"
    "a[2] = 1 0\n";

const char* kSquare =
    "lambda_re = 0.5\n"
    "lambda_im = 0\n"
    "fiber_degree = 2\n"
    "r_delta = 1\n"
    "a[0] = 0 0\n"
    "a[1] = 0 0\n"
    "a[2] = 1 0\n";

struct Sandbox {
    fs::path dir;
    Sandbox() {
        dir = fs::temp_directory_path() /
              ("skewlab_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~Sandbox() { std::error_code ec; fs::remove_all(dir, ec); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path file(const std::string& name, const std::string& content) const {
        skewlab::io::atomic_write(dir / name, content);
        return dir / name;
    }
};

int run(const std::string& argsLine) {
    std::string cmd = std::string(SKEWLAB_CLI_PATH) + " " + argsLine + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return (status >> 8) & 0xff;
}

json load_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    json j;
    in >> j;
    return j;
}

std::string slurp(const fs::path& p) { return skewlab::io::read_file(p); }

}  // namespace

TEST_CASE("cli: ce command reports the chebyshev growth rate") {
    Sandbox sb;
    auto map = sb.file("cheb.map", kCheb);
    fs::path out = sb.dir / "out";
    REQUIRE(run("ce --map " + map.string() + " --out " + out.string() + " --n 200") == 0);
    json s = load_json(out / "summary.json");
    CHECK(std::abs(s["mu_ce"]["value"].get<double>() - 4.0) < 0.01);
    CHECK(s["ce_plausible"].get<bool>());
    CHECK(fs::exists(out / "ce.csv"));
    CHECK(fs::exists(out / "manifest.cfg"));
}

TEST_CASE("cli: pliss on a constant sequence") {
    Sandbox sb;
    fs::path out = sb.dir / "out";
    REQUIRE(run("pliss --sigma 1.5 --logs const:log2:1000 --out " + out.string()) == 0);
    json s = load_json(out / "summary.json");
    CHECK(s["density"]["value"].get<double>() == 1.0);
}

TEST_CASE("cli: missing map file exits with the input-error code") {
    Sandbox sb;
    fs::path out = sb.dir / "out";
    CHECK(run("ce --map /definitely/not/here.map --out " + out.string()) == 2);
    json err = load_json(out / "error.json");
    CHECK(err["code"].get<std::string>() == "io-not-found");
}

TEST_CASE("cli: unknown flags and bad config keys are rejected") {
    Sandbox sb;
    auto map = sb.file("cheb.map", kCheb);
    fs::path out = sb.dir / "out";
    CHECK(run("ce --map " + map.string() + " --out " + out.string() + " --bogus 3") == 2);
    auto cfg = sb.file("bad.cfg", "command = ce\nnot_a_key = 7\n");
    CHECK(run("--config " + cfg.string() + " --map " + map.string() + " --out " + out.string()) ==
          2);
}

TEST_CASE("cli: manifest round trip reproduces outputs byte for byte") {
    Sandbox sb;
    auto map = sb.file("cheb.map", kCheb);
    fs::path out1 = sb.dir / "o1", out2 = sb.dir / "o2";
    REQUIRE(run("orbit --map " + map.string() + " --out " + out1.string() +
                " --z-re -2 --n 40 --seed 777") == 0);
    REQUIRE(run("--config " + (out1 / "manifest.cfg").string() + " --out " + out2.string()) == 0);
    CHECK(slurp(out1 / "orbit.csv") == slurp(out2 / "orbit.csv"));
    CHECK(slurp(out1 / "summary.json") == slurp(out2 / "summary.json"));
}

TEST_CASE("cli: outputs are identical across thread counts") {
    Sandbox sb;
    auto map = sb.file("sq.map", kSquare);
    fs::path o1 = sb.dir / "t1", o8 = sb.dir / "t8";
    std::string base = "km --map " + map.string() +
                       " --m-max 8 --resolution 256 --half-width 2.5 --inf-radius 2 ";
    REQUIRE(run(base + "--threads 1 --out " + o1.string()) == 0);
    REQUIRE(run(base + "--threads 8 --out " + o8.string()) == 0);
    CHECK(slurp(o1 / "km.csv") == slurp(o8 / "km.csv"));

    auto cheb = sb.file("cheb.map", kCheb);
    fs::path a1 = sb.dir / "a1", a8 = sb.dir / "a8";
    std::string area = "area --map " + cheb.string() +
                       " --resolutions 128 --budgets 50,100 ";
    REQUIRE(run(area + "--threads 1 --out " + a1.string()) == 0);
    REQUIRE(run(area + "--threads 8 --out " + a8.string()) == 0);
    CHECK(slurp(a1 / "area.csv") == slurp(a8 / "area.csv"));
    CHECK(slurp(a1 / "raster_128_100.pgm") == slurp(a8 / "raster_128_100.pgm"));
    CHECK(slurp(a1 / "raster_128_100.pgm").substr(0, 3) == "P5\n");
}

TEST_CASE("cli: stable and renorm pipelines run end to end") {
    Sandbox sb;
    auto map = sb.file("cheb.map", kCheb);
    fs::path out = sb.dir / "st";
    REQUIRE(run("stable --map " + map.string() + " --out " + out.string() +
                " --depth 20 --r0 0.001") == 0);
    json s = load_json(out / "summary.json");
    CHECK(s["max_residual"].get<double>() < 1e-10);
    CHECK(s["lambda1"]["value"].get<double>() < 0.6);
    CHECK(fs::exists(out / "stable.csv"));

    fs::path ro = sb.dir / "rn";
    REQUIRE(run("renorm --map " + map.string() + " --out " + ro.string() +
                " --depth 8 --r0 0.001") == 0);
    json r = load_json(ro / "summary.json");
    CHECK(std::abs(r["scale_slope"]["value"].get<double>() + std::log(4.0)) < 0.3);
    // export format: n, rho_n, diamD_n, degree_n
    std::string head = slurp(ro / "renorm.csv").substr(0, 24);
    CHECK(head.rfind("n,rho_n,diamD_n,degree_n", 0) == 0);
}
