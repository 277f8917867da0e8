#pragma once
#include "report.hpp"
#include "spectral.hpp"

namespace ovtl {

inline std::string join_doubles(const std::vector<double>& v)
{
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
    return s;
}

inline std::vector<double> split_doubles(const std::string& s)
{
    std::vector<double> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ','))
        if (!trim(cur).empty()) out.push_back(parse_double(trim(cur)));
    return out;
}

struct Config {
    // grid
    int d = 1;
    long N = 256;
    // algebra
    int n = 2;
    // spectral
    double sigma = 0; // 0 picks d/2 + 1/2
    double window = 0; // 0 picks N/4
    std::string kappa_profile = "gauss*bump";
    // norms
    std::vector<double> alphas{0.0, 0.5};
    std::vector<double> ps{1.0, 2.0};
    std::string kernel = "lp"; // lp | poisson
    // decomposition
    int K = 1, L = 0;
    double margin = 100;
    double size_constant = 1;
    // generator
    std::string gen_kind = "band-limited-random";
    IVec mode{4, 0, 0};
    double r_lo = 0, r_hi = 0; // r_hi 0 picks N/4
    double bump_radius = 0.125;
    int cube_mu = 2;
    // run
    unsigned long long seed = 1;
    int trials = 20;
    std::string out = ".";

    double sigma_or_default() const { return sigma > 0 ? sigma : default_sigma(d); }
    double r_hi_or_default() const { return r_hi > 0 ? r_hi : double(N) / 4; }
    Grid grid() const { return Grid(d, N); }

    void validate() const
    {
        Grid g = grid();
        if (n < 1) throw DomainError("matrix size n must be >= 1");
        if (sigma != 0 && !(sigma > d / 2.0)) throw DomainError("sigma must exceed d/2");
        for (double p : ps)
            if (!(p >= 1)) throw DomainError("p must be >= 1");
        if (kernel != "lp" && kernel != "poisson") throw DomainError("kernel must be lp or poisson");
        if (trials < 1) throw DomainError("trials must be >= 1");
        if (!(margin > 0) || !(size_constant > 0)) throw DomainError("margins must be positive");
        if (r_lo < 0 || (r_hi != 0 && r_hi < r_lo)) throw DomainError("bad frequency annulus");
        if (cube_mu < 0 || (g.N >> cube_mu) < 1) throw ResolutionError("cube level finer than the lattice");
    }

    Document to_document() const
    {
        Document doc;
        doc.add("grid").set("d", d).set("N", N);
        doc.add("algebra").set("n", n);
        doc.add("spectral").set("sigma", sigma).set("window", window).set("kappa_profile", kappa_profile);
        doc.add("norms").set("alpha", join_doubles(alphas)).set("p", join_doubles(ps)).set("kernel", kernel);
        doc.add("decomposition").set("K", K).set("L", L).set("margin", margin).set("size_constant", size_constant);
        doc.add("gen")
            .set("kind", gen_kind)
            .set("mode", join_doubles({double(mode[0]), double(mode[1]), double(mode[2])}))
            .set("r_lo", r_lo)
            .set("r_hi", r_hi)
            .set("bump_radius", bump_radius)
            .set("cube_mu", cube_mu);
        doc.add("run").set("seed", seed).set("trials", trials).set("out", out);
        return doc;
    }

    static Config from_document(const Document& doc)
    {
        Config c;
        auto get = [&](const char* sec, const char* key, auto fn) {
            if (const Section* s = doc.find(sec))
                if (const std::string* v = s->find(key)) fn(*v);
        };
        auto integer = [](const std::string& v) {
            size_t used = 0;
            long x = std::stol(v, &used);
            if (used != v.size()) throw FormatError("not an integer: " + v);
            return x;
        };
        try {
            get("grid", "d", [&](auto& v) { c.d = int(integer(v)); });
            get("grid", "N", [&](auto& v) { c.N = integer(v); });
            get("algebra", "n", [&](auto& v) { c.n = int(integer(v)); });
            get("spectral", "sigma", [&](auto& v) { c.sigma = parse_double(v); });
            get("spectral", "window", [&](auto& v) { c.window = parse_double(v); });
            get("spectral", "kappa_profile", [&](auto& v) { c.kappa_profile = v; });
            get("norms", "alpha", [&](auto& v) { c.alphas = split_doubles(v); });
            get("norms", "p", [&](auto& v) { c.ps = split_doubles(v); });
            get("norms", "kernel", [&](auto& v) { c.kernel = v; });
            get("decomposition", "K", [&](auto& v) { c.K = int(integer(v)); });
            get("decomposition", "L", [&](auto& v) { c.L = int(integer(v)); });
            get("decomposition", "margin", [&](auto& v) { c.margin = parse_double(v); });
            get("decomposition", "size_constant", [&](auto& v) { c.size_constant = parse_double(v); });
            get("gen", "kind", [&](auto& v) { c.gen_kind = v; });
            get("gen", "mode", [&](auto& v) {
                auto m = split_doubles(v);
                for (size_t i = 0; i < std::min<size_t>(3, m.size()); ++i) c.mode[i] = long(m[i]);
            });
            get("gen", "r_lo", [&](auto& v) { c.r_lo = parse_double(v); });
            get("gen", "r_hi", [&](auto& v) { c.r_hi = parse_double(v); });
            get("gen", "bump_radius", [&](auto& v) { c.bump_radius = parse_double(v); });
            get("gen", "cube_mu", [&](auto& v) { c.cube_mu = int(integer(v)); });
            get("run", "seed", [&](auto& v) { c.seed = std::stoull(v); });
            get("run", "trials", [&](auto& v) { c.trials = int(integer(v)); });
            get("run", "out", [&](auto& v) { c.out = v; });
        } catch (const std::logic_error& e) {
            throw FormatError(std::string("bad config value: ") + e.what());
        }
        return c;
    }

    static Config load(const std::string& path) { return from_document(Document::load(path)); }
};

inline bool operator==(const Config& a, const Config& b) { return a.to_document().str() == b.to_document().str(); }

} // namespace ovtl
