#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "ovtl/ovtl.hpp"

using namespace ovtl;
namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::string config;
    std::optional<unsigned long long> seed;
    std::optional<std::string> out;
    std::optional<long> grid;
    std::optional<int> dim, matrix;
    std::optional<double> alpha, p, sigma;
};

void add_common(CLI::App* app, Overrides& o)
{
    app->add_option("--config", o.config, "config file (key = value, [sections])");
    app->add_option("--seed", o.seed, "64-bit seed");
    app->add_option("--out", o.out, "output directory");
    app->add_option("--grid", o.grid, "lattice points per axis (power of two, >= 16)");
    app->add_option("--dim", o.dim, "dimension d in {1,2,3}");
    app->add_option("--matrix", o.matrix, "matrix size n");
    app->add_option("--alpha", o.alpha, "smoothness alpha");
    app->add_option("--p", o.p, "integrability p");
    app->add_option("--sigma", o.sigma, "Sobolev smoothness sigma > d/2");
}

Config resolve(const Overrides& o)
{
    Config c = o.config.empty() ? Config{} : Config::load(o.config);
    if (o.seed) c.seed = *o.seed;
    if (o.out) c.out = *o.out;
    if (o.grid) c.N = *o.grid;
    if (o.dim) c.d = *o.dim;
    if (o.matrix) c.n = *o.matrix;
    if (o.alpha) c.alphas = {*o.alpha};
    if (o.p) c.ps = {*o.p};
    if (o.sigma) c.sigma = *o.sigma;
    c.validate();
    fs::create_directories(c.out);
    return c;
}

std::string out_path(const Config& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

Document header(const Config& c, const std::string& command)
{
    Document doc;
    doc.add("command").set("name", command);
    for (auto& s : c.to_document().sections) {
        Section e = s;
        e.name = "config." + s.name;
        doc.sections.push_back(e);
    }
    return doc;
}

void emit(const Document& doc, const std::string& path)
{
    doc.save(path);
    std::cout << doc.str();
}

// ---------------------------------------------------------------- gen

OperatorField generate(const Config& c)
{
    Grid g = c.grid();
    CounterRng rng(c.seed);
    if (c.gen_kind == "single-mode") return single_mode(g, c.mode, random_matrix(c.n, rng));
    if (c.gen_kind == "band-limited-random") return band_limited_random(g, c.n, c.r_lo, c.r_hi_or_default(), rng);
    if (c.gen_kind == "bump") return bump(g, {0.5, 0.5, 0.5}, c.bump_radius, random_matrix(c.n, rng));
    if (c.gen_kind == "haar") {
        DyadicCube q;
        q.mu = c.cube_mu;
        return haar(g, q, random_matrix(c.n, rng));
    }
    throw DomainError("unknown generator kind " + c.gen_kind);
}

int cmd_gen(const Config& c, const std::string& kind, const std::string& from)
{
    Config k = c;
    if (!kind.empty()) k.gen_kind = kind;
    OperatorField f = k.gen_kind == "from-file" ? read_field(from) : generate(k);
    std::string path = out_path(k, "field.ovtl");
    write_field(path, f);
    Document doc = header(k, "gen");
    doc.add("field").set("path", path).set("l2", l2_norm(f)).set("max_abs", f.max_abs());
    emit(doc, out_path(k, "gen.txt"));
    return 0;
}

// ---------------------------------------------------------------- norm

int cmd_norm(const Config& c, const std::string& field, const std::vector<std::string>& which)
{
    OperatorField f = read_field(field);
    if (f.grid().d != c.d || f.grid().N != c.N || f.n() != c.n) {
        Config k = c;
        k.d = f.grid().d;
        k.N = f.grid().N;
        k.n = f.n();
        return cmd_norm(k, field, which);
    }
    LPFamily fam = make_lp_family(f.grid());
    Document doc = header(c, "norm");
    doc.add("field").set("path", field);
    for (auto& w : which) {
        if (w == "bmo") {
            doc.sections.push_back(bmo_norm(f).to_section());
            continue;
        }
        for (double a : c.alphas) {
            if (w == "F_inf") {
                doc.sections.push_back(tl_infty_norm(f, a, fam).to_section());
                continue;
            }
            for (double p : c.ps) {
                NormReport r;
                if (w == "F_col") r = tl_norm_column(f, a, p, fam);
                else if (w == "F_row") r = tl_norm_row(f, a, p, fam);
                else if (w == "F_mix") r = tl_norm_mixture(f, a, p, fam);
                else if (w == "h") r = hardy_norm(f, p, fam, c.kernel == "poisson" ? HardyMode::poisson : HardyMode::lp);
                else throw DomainError("unknown norm " + w);
                r.seed = c.seed;
                Section s = r.to_section();
                s.name += ".alpha=" + fmt_double(a) + ".p=" + fmt_double(p);
                doc.sections.push_back(s);
            }
            if (w == "h") break;
        }
    }
    emit(doc, out_path(c, "norms.txt"));
    return 0;
}

// ---------------------------------------------------------------- verify

struct Suite {
    Document doc;
    bool ok = true;
    void hard(const std::string& name, bool pass, double measured, double bound)
    {
        doc.add("check." + name).set("kind", "hard").set("measured", measured).set("bound", bound).set("pass", pass);
        ok = ok && pass;
    }
    void soft(const std::string& name, double value)
    {
        doc.add("measure." + name).set("kind", "soft").set("value", value);
    }
};

SymbolSequence named_sequence(const std::string& name, const LPFamily& fam)
{
    int J = fam.j_max();
    if (name == "identity") return constant_sequence(1.0, J);
    if (name == "bessel") return bessel_sequence(fam.grid().d, -1.0, J);
    if (name == "riesz") return riesz_sequence(fam.grid().d, 1.0, J);
    if (name == "lp") return lp_sequence(fam, J);
    // rho_j = lp_{j+1}: supp rho_j leaves the j-th annulus
    if (name == "offset-lp") {
        SymbolSequence s = lp_sequence(fam, J);
        s.id = "offset-lp";
        s.member = [fam](int j, const Vec& xi) { return cplx(fam.member(j + 1, xi, fam.grid().d), 0); };
        return s;
    }
    throw DomainError("unknown sequence " + name);
}

void suite_lp(const Config& c, Suite& s)
{
    LPFamily fam = make_lp_family(c.grid());
    LPCheck k = validate_lp_family(fam);
    s.hard("support", k.support, k.support ? 0 : 1, 0);
    s.hard("range", k.range, k.range ? 0 : 1, 0);
    s.hard("partition", k.partition, k.partition_err, 4e-16);
}

void suite_multiplier(const Config& c, Suite& s, const std::string& phi_name, const std::string& rho_name = "lp")
{
    Grid g = c.grid();
    LPFamily fam = make_lp_family(g);
    SymbolSequence rho = named_sequence(rho_name, fam);
    MultiplierOptions opt;
    opt.sigma = c.sigma_or_default();
    opt.margin = c.margin;
    opt.seed = c.seed;
    opt.window = c.window;
    FieldGenerator gen = band_limited_generator(g, c.n, 0, double(g.N) / 4);
    std::vector<std::string> names = phi_name.empty() ? std::vector<std::string>{"identity", "bessel"} : std::vector<std::string>{phi_name};
    for (auto& name : names) {
        SymbolSequence phi = named_sequence(name, fam);
        for (double a : c.alphas)
            for (double p : c.ps) {
                std::string tag = name + ".alpha=" + fmt_double(a) + ".p=" + fmt_double(p);
                MultiplierCertificate cert = empirical_square_bound(phi, rho, gen, fam, a, p, c.trials, opt);
                Section sec = cert.to_section();
                sec.name = "multiplier." + tag;
                s.doc.sections.push_back(sec);
                s.hard("multiplier." + tag, cert.pass(), cert.r_emp, cert.margin * cert.c_hyp);
            }
    }
    if (phi_name.empty()) {
        bool raised = false;
        try {
            empirical_square_bound(named_sequence("identity", fam), named_sequence("offset-lp", fam), gen, fam, 0, 2, 1, opt);
        } catch (const HypothesisError&) {
            raised = true;
        }
        s.hard("support_violation_raises", raised, raised ? 0 : 1, 0);
    }
}

void suite_cz(const Config& c, Suite& s)
{
    for (auto name : {"lp", "bessel*lp"}) {
        double prev = 0;
        for (long N : {c.N, 2 * c.N}) {
            LPFamily fam = make_lp_family(Grid(c.d, N));
            SymbolSequence seq = name == std::string("lp") ? lp_sequence(fam, fam.j_max())
                                                            : product(bessel_sequence(c.d, -1.0, fam.j_max()), lp_sequence(fam, fam.j_max()));
            CZEstimates e = cz_kernel_estimates(seq, c.sigma_or_default(), fam);
            Section sec = e.to_section();
            sec.name = std::string("cz.") + name + ".N=" + std::to_string(N);
            s.doc.sections.push_back(sec);
            s.hard(std::string("cz_finite.") + name + ".N=" + std::to_string(N), std::isfinite(e.constant()), e.constant(), INFINITY);
            if (prev > 0) s.soft(std::string("cz_refinement_ratio.") + name, e.constant() / prev);
            prev = e.constant();
        }
    }
}

void suite_lifting(const Config& c, Suite& s)
{
    Grid g = c.grid();
    LPFamily fam = make_lp_family(g);
    for (double beta : {-1.0, 1.0, 2.0}) {
        double worst = 0;
        for (int t = 0; t < c.trials; ++t) {
            CounterRng rng(c.seed + t);
            OperatorField f = band_limited_random(g, c.n, 0, double(g.N) / 4, rng);
            OperatorField back = apply_symbol(bessel(g, -beta), apply_symbol(bessel(g, beta), f));
            worst = std::max(worst, max_diff(back, f) / f.max_abs());
            for (double a : c.alphas)
                for (double p : c.ps) {
                    double r = tl_norm_column(apply_symbol(bessel(g, beta), f), a - beta, p, fam).value / tl_norm_column(f, a, p, fam).value;
                    s.soft("lifting_ratio.beta=" + fmt_double(beta) + ".alpha=" + fmt_double(a) + ".p=" + fmt_double(p) + ".trial=" +
                               std::to_string(t),
                           r);
                }
        }
        s.hard("lifting_identity.beta=" + fmt_double(beta), worst <= 1e-11, worst, 1e-11);
    }
}

void suite_equivalence(const Config& c, Suite& s)
{
    Grid g = c.grid();
    LPFamily fam = make_lp_family(g);
    for (int t = 0; t < c.trials; ++t) {
        CounterRng rng(c.seed + t);
        OperatorField f = band_limited_random(g, c.n, 0, double(g.N) / 4, rng);
        double f2 = tl_norm_column(f, 0, 2, fam).value, l2 = l2_norm(f);
        std::string tag = ".trial=" + std::to_string(t);
        s.hard("p2_upper" + tag, f2 <= l2 * (1 + 1e-12), f2, l2);
        s.hard("p2_lower" + tag, f2 >= l2 / std::sqrt(2.0) * (1 - 1e-12), l2 / std::sqrt(2.0), f2);
        for (double p : c.ps) {
            double hp = hardy_norm(f, p, fam, HardyMode::poisson).value, hl = hardy_norm(f, p, fam).value;
            s.soft("poisson_over_lp.p=" + fmt_double(p) + tag, hp / hl);
            for (double a : c.alphas)
                if (a > 0) s.soft("hom_ratio.alpha=" + fmt_double(a) + ".p=" + fmt_double(p) + tag,
                                  homogeneous_equiv_report(f, a, p, fam, make_hom_family(fam, -3, fam.j_max())).value);
        }
    }
}

void suite_atoms(const Config& c, Suite& s)
{
    Grid g = c.grid();
    DecomposeOptions opt;
    opt.size_constant = c.size_constant;
    opt.profile = c.kappa_profile;
    for (int t = 0; t < c.trials; ++t) {
        CounterRng rng(c.seed + t);
        OperatorField f = band_limited_random(g, c.n, 0, double(g.N) / 4, rng);
        std::string tag = ".trial=" + std::to_string(t);
        AtomicDecomposition h = smooth_decompose_h1(f, opt);
        s.hard("h1_residual" + tag, h.residual <= 1e-9, h.residual, 1e-9);
        s.hard("h1_valid" + tag, h.all_valid(), h.all_valid() ? 0 : 1, 0);
        s.soft("h1_mass_ratio" + tag, h.mass_ratio());
        for (double a : c.alphas) {
            AtomicDecomposition d = smooth_decompose_tl(f, a, c.K, c.L, opt);
            std::string at = ".alpha=" + fmt_double(a) + tag;
            s.hard("tl_residual" + at, d.residual <= 1e-9, d.residual, 1e-9);
            s.hard("tl_valid" + at, d.all_valid(), d.all_valid() ? 0 : 1, 0);
            s.soft("tl_mass_ratio" + at, d.mass_ratio());
        }
    }
}

int cmd_verify(const Config& c, const std::string& suite)
{
    Suite s;
    s.doc = header(c, "verify");
    s.doc.add("suite").set("name", suite);
    if (suite == "lp-family") suite_lp(c, s);
    else if (suite == "multiplier") suite_multiplier(c, s, "");
    else if (suite == "cz") suite_cz(c, s);
    else if (suite == "lifting") suite_lifting(c, s);
    else if (suite == "equivalence") suite_equivalence(c, s);
    else if (suite == "atoms") suite_atoms(c, s);
    else throw DomainError("unknown suite " + suite);
    s.doc.add("result").set("pass", s.ok);
    emit(s.doc, out_path(c, "verify-" + suite + ".txt"));
    return s.ok ? 0 : 1;
}

int cmd_multiplier(const Config& c, const std::string& phi, const std::string& rho)
{
    Suite s;
    s.doc = header(c, "multiplier-check");
    suite_multiplier(c, s, phi, rho);
    s.doc.add("result").set("pass", s.ok);
    emit(s.doc, out_path(c, "multiplier.txt"));
    return s.ok ? 0 : 1;
}

// ---------------------------------------------------------------- decompose / reconstruct

int cmd_decompose(const Config& c, const std::string& field, const std::string& target)
{
    OperatorField f = read_field(field);
    DecomposeOptions opt;
    opt.size_constant = c.size_constant;
    opt.profile = c.kappa_profile;
    AtomicDecomposition D;
    if (target == "h1") D = smooth_decompose_h1(f, opt);
    else if (target == "tl") D = smooth_decompose_tl(f, c.alphas.at(0), c.K, c.L, opt);
    else throw DomainError("unknown target " + target);
    Manifest m = encode_decomposition(D, c.seed);
    std::string path = out_path(c, "decomposition.txt");
    write_manifest(path, m);
    const Section& top = *m.doc.find("decomposition");
    for (auto& e : top.entries) std::cout << e.first << " = " << e.second << "\n";
    std::cout << "manifest = " << path << "\n";
    return 0;
}

int cmd_reconstruct(const Config& c, const std::string& manifest, const std::string& compare)
{
    OperatorField f = reconstruct_from(manifest);
    std::string path = out_path(c, "reconstructed.ovtl");
    write_field(path, f);
    Document doc;
    Section& s = doc.add("reconstruct");
    s.set("manifest", manifest).set("path", path).set("l2", l2_norm(f));
    int rc = 0;
    if (!compare.empty()) {
        OperatorField ref = read_field(compare);
        double nr = l2_norm(ref);
        double res = nr > 0 ? l2_norm(f - ref) / nr : l2_norm(f);
        s.set("residual", res).set("pass", res <= 1e-9);
        rc = res <= 1e-9 ? 0 : 1;
    }
    emit(doc, out_path(c, "reconstruct.txt"));
    return rc;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"operator-valued Triebel-Lizorkin and local Hardy toolkit"};
    app.require_subcommand(1);
    Overrides o;

    std::string kind, from;
    auto gen = app.add_subcommand("gen", "generate a field file");
    add_common(gen, o);
    gen->add_option("--kind", kind, "single-mode | band-limited-random | bump | haar | from-file");
    gen->add_option("--from", from, "input field for --kind from-file");

    std::string field;
    std::vector<std::string> which{"F_col"};
    auto norm = app.add_subcommand("norm", "compute norms of a field file");
    add_common(norm, o);
    norm->add_option("field", field, "field file")->required();
    norm->add_option("--which", which, "F_col F_row F_mix F_inf h bmo")->delimiter(',');

    std::string suite;
    auto verify = app.add_subcommand("verify", "run an invariant suite");
    add_common(verify, o);
    verify->add_option("suite", suite, "lp-family | multiplier | cz | lifting | equivalence | atoms")->required();

    std::string target = "h1";
    auto decompose = app.add_subcommand("decompose", "smooth atomic decomposition of a field file");
    add_common(decompose, o);
    decompose->add_option("field", field, "field file")->required();
    decompose->add_option("--target", target, "h1 | tl");

    std::string manifest, compare;
    auto reconstruct = app.add_subcommand("reconstruct", "rebuild a field from a decomposition manifest");
    add_common(reconstruct, o);
    reconstruct->add_option("manifest", manifest, "manifest path")->required();
    reconstruct->add_option("--compare", compare, "field file to measure the residual against");

    std::string phi = "bessel", rho = "lp";
    auto mult = app.add_subcommand("multiplier-check", "empirical multiplier certificate");
    add_common(mult, o);
    mult->add_option("--phi", phi, "identity | bessel | riesz | lp");
    mult->add_option("--rho", rho, "lp | offset-lp");

    CLI11_PARSE(app, argc, argv);
    try {
        Config c = resolve(o);
        if (*gen) return cmd_gen(c, kind, from);
        if (*norm) return cmd_norm(c, field, which);
        if (*verify) return cmd_verify(c, suite);
        if (*decompose) return cmd_decompose(c, field, target);
        if (*reconstruct) return cmd_reconstruct(c, manifest, compare);
        if (*mult) return cmd_multiplier(c, phi, rho);
    } catch (const HypothesisError& e) {
        std::cerr << "hypothesis error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
