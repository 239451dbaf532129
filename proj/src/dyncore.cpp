#include "skewlab/dyncore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace skewlab::dyncore {

double FiberPolynomial::escapeRadius() const {
    int d = p.degree();
    double sum = 1.0;
    for (int j = 0; j <= d; ++j) sum += std::abs(p.c[static_cast<std::size_t>(j)]);
    double lead = std::abs(p.c[static_cast<std::size_t>(d)]);
    return std::max(2.0, sum / lead);
}

SkewMap::SkewMap(cnum lambda, std::vector<Poly> coeffs, double rDelta)
    : lambda_(lambda), coeffs_(std::move(coeffs)), rDelta_(rDelta) {
    if (!(std::abs(lambda_) > 0.0 && std::abs(lambda_) < 1.0))
        throw Error("precondition", "dyncore", "multiplier must satisfy 0 < |lambda| < 1");
    if (static_cast<int>(coeffs_.size()) - 1 < 2)
        throw Error("precondition", "dyncore", "fiber degree must be at least 2");
    if (coeffs_.back().c.empty() || coeffs_.back().c[0] == cnum(0.0, 0.0))
        throw Error("precondition", "dyncore", "leading fiber coefficient vanishes at t = 0");
    if (!(rDelta_ > 0.0)) throw Error("precondition", "dyncore", "r_delta must be positive");
    coeffDeriv_.reserve(coeffs_.size());
    coeffTail_.reserve(coeffs_.size());
    for (const auto& a : coeffs_) {
        coeffDeriv_.push_back(a.derivative());
        coeffTail_.push_back(a.tail());
    }
}

FiberPolynomial SkewMap::fiber() const {
    std::vector<cnum> c(coeffs_.size());
    for (std::size_t j = 0; j < coeffs_.size(); ++j)
        c[j] = coeffs_[j].c.empty() ? cnum(0.0, 0.0) : coeffs_[j].c[0];
    return FiberPolynomial{Poly{std::move(c)}};
}

cnum SkewMap::h(cnum t, cnum z) const {
    cnum acc = coeffs_.back().eval(t);
    for (std::size_t j = coeffs_.size() - 1; j-- > 0;) acc = acc * z + coeffs_[j].eval(t);
    return acc;
}

cnum SkewMap::dhdz(cnum t, cnum z) const {
    std::size_t d = coeffs_.size() - 1;
    cnum acc = static_cast<double>(d) * coeffs_[d].eval(t);
    for (std::size_t j = d; j-- > 1;) acc = acc * z + static_cast<double>(j) * coeffs_[j].eval(t);
    return acc;
}

cnum SkewMap::dhdt(cnum t, cnum z) const {
    cnum acc = coeffDeriv_.back().eval(t);
    for (std::size_t j = coeffDeriv_.size() - 1; j-- > 0;) acc = acc * z + coeffDeriv_[j].eval(t);
    return acc;
}

cnum SkewMap::d2hdz2(cnum t, cnum z) const {
    std::size_t d = coeffs_.size() - 1;
    if (d < 2) return cnum(0.0, 0.0);
    cnum acc = static_cast<double>(d) * static_cast<double>(d - 1) * coeffs_[d].eval(t);
    for (std::size_t j = d; j-- > 2;)
        acc = acc * z + static_cast<double>(j) * static_cast<double>(j - 1) * coeffs_[j].eval(t);
    return acc;
}

cnum SkewMap::hTail(cnum t, cnum z) const {
    cnum acc = coeffTail_.back().eval(t);
    for (std::size_t j = coeffTail_.size() - 1; j-- > 0;) acc = acc * z + coeffTail_[j].eval(t);
    return acc;
}

cnum SkewMap::dhdzTail(cnum t, cnum z) const {
    std::size_t d = coeffTail_.size() - 1;
    cnum acc = static_cast<double>(d) * coeffTail_[d].eval(t);
    for (std::size_t j = d; j-- > 1;) acc = acc * z + static_cast<double>(j) * coeffTail_[j].eval(t);
    return acc;
}

Point2 SkewMap::apply(Point2 x) const {
    if (std::abs(x.t) > rDelta_ * (1.0 + 1e-12))
        throw Error("domain-exceeded", "dyncore", "|t| exceeds r_delta");
    return Point2{lambda_ * x.t, h(x.t, x.z)};
}

cnum vertical_derivative(const SkewMap& f, Point2 x) {
    if (std::abs(x.t) > f.rDelta() * (1.0 + 1e-12))
        throw Error("domain-exceeded", "dyncore", "|t| exceeds r_delta");
    return f.dhdz(x.t, x.z);
}

OrbitTrace orbit(const SkewMap& f, Point2 x, std::size_t n) {
    OrbitTrace tr;
    tr.points.reserve(n + 1);
    tr.vderivs.reserve(n + 1);
    double cutoff = 2.0 * f.fiber().escapeRadius();
    Point2 cur = x;
    tr.points.push_back(cur);
    tr.vderivs.push_back(f.dhdz(cur.t, cur.z));
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(cur.z) > cutoff) {
            tr.escaped = true;
            break;
        }
        cur = f.apply(cur);
        tr.points.push_back(cur);
        tr.vderivs.push_back(f.dhdz(cur.t, cur.z));
    }
    if (!tr.escaped && std::abs(cur.z) > cutoff) tr.escaped = true;
    return tr;
}

cnum vertical_cocycle(const OrbitTrace& trace, std::size_t i, std::size_t k) {
    if (i + k > trace.steps() || i > trace.steps())
        throw Error("index-out-of-range", "dyncore", "cocycle window exceeds trace length");
    cnum prod = 1.0;
    for (std::size_t j = i; j < i + k; ++j) prod *= trace.vderivs[j];
    return prod;
}

PartialSupBound sup_partials(const SkewMap& f, const Region& region, int gridResolution) {
    if (gridResolution < 2)
        throw Error("precondition", "dyncore", "grid resolution must be at least 2");
    double m = 0.0;
    int g = gridResolution;
    for (int i = 0; i < g; ++i) {
        double a = 2.0 * kPi * i / g;
        cnum t = region.tCenter + region.tRadius * cnum(std::cos(a), std::sin(a));
        for (int j = 0; j < g; ++j) {
            double b = 2.0 * kPi * j / g;
            cnum z = region.zCenter + region.zRadius * cnum(std::cos(b), std::sin(b));
            m = std::max(m, std::abs(f.dhdz(t, z)));
            m = std::max(m, std::abs(f.dhdt(t, z)));
        }
    }
    double M = std::max(m * 1.1, std::abs(f.lambda()));
    return PartialSupBound{M, region};
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_num(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error("io-parse", "dyncore", "bad numeric value for " + what + ": '" + s + "'");
    }
}

}  // namespace

SkewMap SkewMap::parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    bool haveLamRe = false, haveLamIm = false, haveDeg = false, haveR = false;
    double lamRe = 0, lamIm = 0, rDelta = 0;
    int deg = -1;
    std::vector<std::pair<int, std::vector<cnum>>> rows;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw Error("io-parse", "dyncore", "missing '=' on line " + std::to_string(lineno));
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key == "lambda_re") {
            lamRe = parse_num(val, key);
            haveLamRe = true;
        } else if (key == "lambda_im") {
            lamIm = parse_num(val, key);
            haveLamIm = true;
        } else if (key == "fiber_degree") {
            deg = static_cast<int>(parse_num(val, key));
            haveDeg = true;
        } else if (key == "r_delta") {
            rDelta = parse_num(val, key);
            haveR = true;
        } else if (key.size() > 3 && key.substr(0, 2) == "a[" && key.back() == ']') {
            int j = static_cast<int>(parse_num(key.substr(2, key.size() - 3), "coefficient index"));
            std::istringstream vs(val);
            std::vector<double> nums;
            std::string tok;
            while (vs >> tok) nums.push_back(parse_num(tok, key));
            if (nums.empty() || nums.size() % 2 != 0)
                throw Error("io-parse", "dyncore",
                            key + " needs whitespace-separated re im pairs (even count)");
            std::vector<cnum> cs(nums.size() / 2);
            for (std::size_t k = 0; k < cs.size(); ++k) cs[k] = cnum(nums[2 * k], nums[2 * k + 1]);
            rows.emplace_back(j, std::move(cs));
        } else {
            throw Error("io-parse", "dyncore", "unknown key '" + key + "'");
        }
    }
    if (!haveLamRe || !haveLamIm || !haveDeg || !haveR)
        throw Error("io-parse", "dyncore",
                    "map file requires lambda_re, lambda_im, fiber_degree, r_delta");
    if (deg < 2) throw Error("io-parse", "dyncore", "fiber_degree must be at least 2");
    std::vector<Poly> coeffs(static_cast<std::size_t>(deg) + 1, Poly{{cnum(0.0, 0.0)}});
    for (auto& [j, cs] : rows) {
        if (j < 0 || j > deg)
            throw Error("io-parse", "dyncore", "coefficient index a[" + std::to_string(j) +
                                                   "] outside 0..fiber_degree");
        coeffs[static_cast<std::size_t>(j)] = Poly{std::move(cs)};
    }
    return SkewMap(cnum(lamRe, lamIm), std::move(coeffs), rDelta);
}

SkewMap SkewMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io-not-found", "dyncore", "cannot open map file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string SkewMap::format() const {
    std::ostringstream os;
    os.precision(17);
    os << "lambda_re = " << lambda_.real() << "\n";
    os << "lambda_im = " << lambda_.imag() << "\n";
    os << "fiber_degree = " << fiberDegree() << "\n";
    os << "r_delta = " << rDelta_ << "\n";
    for (std::size_t j = 0; j < coeffs_.size(); ++j) {
        os << "a[" << j << "] =";
        for (const auto& ck : coeffs_[j].c) os << " " << ck.real() << " " << ck.imag();
        os << "\n";
    }
    return os.str();
}

}  // namespace skewlab::dyncore
