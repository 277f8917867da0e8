// acceptance run: one PASS/FAIL line per criterion
#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>

#include "ovtl/ovtl.hpp"
#include "scalar_reference.hpp"

using namespace ovtl;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream note;
    void require(bool ok, const std::string& what)
    {
        if (!ok && pass) note << "failed: " << what << "; ";
        pass = pass && ok;
    }
};

struct Desk {
    int d;
    long N;
    int n;
};

// d = 1 at N = 1024 and d = 2 at N = 128, n cycling through 1, 2, 4
Desk desk(int t)
{
    static const int ns[] = {1, 2, 4};
    return t % 2 == 0 ? Desk{1, 1024, ns[(t / 2) % 3]} : Desk{2, 128, ns[(t / 2) % 3]};
}

OperatorField band(const Grid& g, int n, std::uint64_t seed)
{
    CounterRng rng(seed);
    return band_limited_random(g, n, 0, double(g.N) / 4, rng);
}

double spread(const std::vector<double>& v)
{
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo > 0 ? *hi / *lo : INFINITY;
}

std::string f6(double x)
{
    std::ostringstream os;
    os.precision(4);
    os << x;
    return os.str();
}

// ---------------------------------------------------------------- criteria

void spectral_exactness(Outcome& o)
{
    double worst_p = 0, worst_r = 0;
    for (int t = 0; t < 50; ++t) {
        Desk k = desk(t);
        Grid g(k.d, k.N);
        CounterRng rng(100 + t);
        OperatorField f = random_field(g, k.n, rng);
        OperatorField fh = fft_forward(f);
        double a = std::pow(l2_norm(f), 2), b = 0;
        for (long p = 0; p < g.points(); ++p) b += fh.mat(p).squaredNorm();
        worst_p = std::max(worst_p, std::abs(a - b) / a);
        worst_r = std::max(worst_r, max_diff(fft_inverse(fh), f) / f.max_abs());
    }
    o.require(worst_p <= 1e-12, "Plancherel");
    o.require(worst_r <= 1e-12, "round trip");
    o.note << "plancherel " << f6(worst_p) << ", round trip " << f6(worst_r);
}

void lp_family(Outcome& o)
{
    double worst = 0;
    for (auto [d, N] : std::vector<std::pair<int, long>>{{1, 1024}, {2, 128}, {3, 32}}) {
        LPCheck c = validate_lp_family(make_lp_family(Grid(d, N)));
        o.require(c.support, "support d=" + std::to_string(d));
        o.require(c.range, "positivity d=" + std::to_string(d));
        o.require(c.partition, "partition d=" + std::to_string(d));
        worst = std::max(worst, c.partition_err);
    }
    o.note << "partition error " << f6(worst);
}

void cauchy_schwarz(Outcome& o)
{
    double worst = INFINITY;
    for (int t = 0; t < 100; ++t) {
        Desk k = desk(t);
        Grid g(k.d, k.d == 1 ? 256 : 32);
        CounterRng rng(200 + t);
        OperatorField f = random_field(g, k.n, rng);
        std::vector<cplx> phi(g.points());
        for (auto& x : phi) x = rng.cnormal();
        double a = 0;
        for (auto& x : phi) a += std::norm(x);
        double scale = a * g.vol() * op_norm(integrate(gram(f)));
        double gap = op_cauchy_schwarz_gap(phi, f) / scale;
        worst = std::min(worst, gap);
    }
    o.require(worst >= -1e-9, "gap eigenvalue");
    o.note << "min gap / scale " << f6(worst);
}

void sandwich(Outcome& o)
{
    double worst = 0, c0 = 1;
    for (int t = 0; t < 50; ++t) {
        Desk k = desk(t);
        Grid g(k.d, k.N);
        LPFamily fam = make_lp_family(g);
        double top = std::ldexp(1.0, fam.j_max());
        std::vector<double> w(g.points(), 0.0);
        for (long p = 0; p < g.points(); ++p) {
            for (int j = 0; j <= fam.j_max(); ++j) w[p] += std::norm(fam[j][p]);
            if (g.freq_norm2(p) <= top * top) c0 = std::min(c0, w[p]);
        }
        OperatorField f = band(g, k.n, 300 + t);
        OperatorField fh = fft_forward(f);
        double side = 0;
        for (long p = 0; p < g.points(); ++p) side += w[p] * fh.mat(p).squaredNorm();
        double v = tl_norm_column(f, 0, 2, fam).value, nf = l2_norm(f);
        worst = std::max(worst, std::abs(v * v - side) / side);
        o.require(v <= nf * (1 + 1e-12), "upper bound");
        o.require(v >= std::sqrt(c0) * nf * (1 - 1e-12), "lower bound");
    }
    c0 = std::sqrt(c0);
    o.require(c0 >= 1 / std::sqrt(2.0) - 1e-15, "c0 >= 1/sqrt 2");
    o.require(worst <= 1e-11, "frequency-side identity");
    o.note << "c0 " << f6(c0) << ", identity error " << f6(worst);
}

void embedding(Outcome& o)
{
    long checks = 0;
    for (int t = 0; t < 20; ++t) {
        Desk k = desk(t);
        Grid g(k.d, k.N);
        LPFamily fam = make_lp_family(g);
        CounterRng rng(400 + t);
        OperatorField f = random_field(g, k.n, rng);
        for (double p : {1.0, 2.0, 3.0}) {
            double prev = 0;
            for (double a : {-1.0, -0.5, 0.0, 0.5, 1.0, 2.0}) {
                double v = tl_norm_column(f, a, p, fam).value;
                o.require(prev <= v * (1 + 1e-14), "monotone at alpha " + fmt_double(a));
                prev = v;
                ++checks;
            }
        }
    }
    o.note << checks << " comparisons";
}

void lifting(Outcome& o)
{
    double worst_id = 0, worst_spread = 0;
    for (auto [a, b] : std::vector<std::pair<double, double>>{{0, 1}, {0, -1}, {0.5, 1}, {1, 2}})
        for (double p : {1.0, 2.0, 3.0}) {
            std::vector<double> r;
            for (long N : {512L, 1024L}) {
                Grid g(1, N);
                LPFamily fam = make_lp_family(g);
                for (int t = 0; t < 20; ++t) {
                    OperatorField f = band(g, 2, 500 + t);
                    OperatorField jf = apply_symbol(bessel(g, b), f);
                    if (p == 1.0) worst_id = std::max(worst_id, max_diff(apply_symbol(bessel(g, -b), jf), f) / f.max_abs());
                    r.push_back(tl_norm_column(jf, a - b, p, fam).value / tl_norm_column(f, a, p, fam).value);
                }
            }
            worst_spread = std::max(worst_spread, spread(r));
        }
    o.require(worst_id <= 1e-11, "J^-b J^b identity");
    o.require(worst_spread <= 2, "ratio bracket drift");
    o.note << "identity " << f6(worst_id) << ", worst bracket max/min " << f6(worst_spread);
}

void independence(Outcome& o)
{
    double fam_spread = 0, hom_spread = 0;
    Grid g(1, 1024);
    LPFamily a = make_lp_family(g, 1), b = make_lp_family(g, 2);
    HomLPFamily hom = make_hom_family(a, -3, a.j_max());
    for (double alpha : {0.5, 1.0})
        for (double p : {1.0, 2.0}) {
            std::vector<double> rf, rl, rp;
            for (int t = 0; t < 20; ++t) {
                OperatorField f = band(g, 2, 600 + t);
                rf.push_back(tl_norm_column(f, alpha, p, a).value / tl_norm_column(f, alpha, p, b).value);
                NormReport h = homogeneous_equiv_report(f, alpha, p, a, hom);
                rl.push_back(h.term("ratio_low"));
                rp.push_back(h.term("ratio_lp"));
            }
            fam_spread = std::max(fam_spread, spread(rf));
            hom_spread = std::max({hom_spread, spread(rl), spread(rp)});
        }
    o.require(fam_spread <= 2, "family ratio bracket");
    o.require(hom_spread <= 2, "homogeneous ratio bracket");
    o.note << "family max/min " << f6(fam_spread) << ", homogeneous max/min " << f6(hom_spread);
}

void multipliers(Outcome& o)
{
    double worst = 0;
    for (auto [d, N, n] : std::vector<std::tuple<int, long, int>>{{1, 1024, 2}, {2, 128, 1}}) {
        Grid g(d, N);
        LPFamily fam = make_lp_family(g);
        SymbolSequence rho = lp_sequence(fam, fam.j_max());
        FieldGenerator gen = band_limited_generator(g, n, 0, double(N) / 4);
        MultiplierOptions opt;
        opt.seed = 700;
        for (auto& phi : {constant_sequence(1.0, fam.j_max()), bessel_sequence(d, -1.0, fam.j_max())}) {
            for (double alpha : {0.0, 0.5})
                for (double p : {1.0, 2.0}) {
                    MultiplierCertificate c = empirical_square_bound(phi, rho, gen, fam, alpha, p, 20, opt);
                    o.require(c.pass(), "radial " + phi.id);
                    worst = std::max(worst, c.r_emp / c.c_hyp);
                }
            MultiplierCertificate c = empirical_conic_bound(phi, rho, gen, fam, 0.5, 1, d == 1 ? 20 : 5, opt);
            o.require(c.pass(), "conic " + phi.id);
            worst = std::max(worst, c.r_emp / c.c_hyp);
        }
        SymbolSequence off = rho;
        off.member = [fam](int j, const Vec& xi) { return cplx(fam.member(j + 1, xi, fam.grid().d), 0); };
        bool raised = false;
        try {
            empirical_square_bound(constant_sequence(1.0, fam.j_max()), off, gen, fam, 0, 2, 1, opt);
        } catch (const HypothesisError&) {
            raised = true;
        }
        o.require(raised, "support violation raises");
    }
    o.note << "max R_emp / C_hyp " << f6(worst) << " (margin 100)";
}

void cz(Outcome& o)
{
    std::ostringstream detail;
    for (int which = 0; which < 2; ++which) {
        std::vector<double> cs;
        for (long N : {512L, 1024L}) {
            LPFamily fam = make_lp_family(Grid(1, N));
            SymbolSequence s = which == 0 ? lp_sequence(fam, 3) : product(bessel_sequence(1, 1.0, 3), lp_sequence(fam, 3));
            CZEstimates e = cz_kernel_estimates(s, default_sigma(1), fam);
            o.require(std::isfinite(e.constant()) && e.phi_norm > 0, "finite estimates");
            cs.push_back(e.constant());
        }
        double drift = std::abs(cs[1] / cs[0] - 1);
        o.require(drift <= 0.2, which == 0 ? "lp refinement" : "bessel*lp refinement");
        detail << (which ? ", " : "") << (which == 0 ? "lp" : "bessel*lp") << " C " << f6(cs[1]) << " drift " << f6(drift);
    }
    o.note << detail.str();
}

void decompositions(Outcome& o)
{
    double worst_res = 0;
    std::ostringstream detail;
    auto stable = [&](const std::vector<double>& r, const std::string& what) {
        double s = spread(r);
        o.require(s <= 2, what + " mass ratio spread");
        detail << what << " " << f6(*std::min_element(r.begin(), r.end())) << ".." << f6(*std::max_element(r.begin(), r.end())) << "; ";
    };
    // tent atomization on raw random strips
    for (auto [d, N, n] : std::vector<std::tuple<int, long, int>>{{1, 1024, 2}, {2, 128, 1}}) {
        Grid g(d, N);
        std::vector<double> r;
        for (int t = 0; t < 20; ++t) {
            CounterRng rng(800 + t);
            StripField F(g, n, g.log2N() - 2);
            for (int j = 1; j <= F.j_max(); ++j) F.level(j) = random_field(g, n, rng);
            TentDecomposition T = tent_atomize(F);
            worst_res = std::max(worst_res, T.residual);
            for (auto& term : T.terms) o.require(validate_atom(term.atom).pass(), "tent atom valid");
            r.push_back(T.mass_ratio());
        }
        stable(r, "tent d=" + std::to_string(d));
    }
    // smooth decompositions
    DecomposeOptions opt;
    for (auto [d, N, n, target] : std::vector<std::tuple<int, long, int, std::string>>{
             {1, 1024, 2, "h1"}, {2, 128, 1, "h1"}, {1, 1024, 2, "tl"}, {2, 64, 1, "tl"}}) {
        Grid g(d, N);
        std::vector<double> r;
        for (int t = 0; t < 20; ++t) {
            OperatorField f = band(g, n, 900 + t);
            AtomicDecomposition D = target == "h1" ? smooth_decompose_h1(f, opt) : smooth_decompose_tl(f, 0.5, 1, 0, opt);
            worst_res = std::max(worst_res, D.residual);
            o.require(D.all_valid(), target + " atoms valid");
            r.push_back(D.mass_ratio());
        }
        stable(r, target + " d=" + std::to_string(d));
    }
    // converse: F_1^{alpha,c} norms of generated atoms
    Grid g(1, 512);
    LPFamily fam = make_lp_family(g);
    double alpha = 0.5;
    CalderonResolution cal = calderon_resolution(g, calderon_order(alpha, 0));
    std::vector<double> norms;
    CounterRng rng(950);
    for (int t = 0; t < 50; ++t) {
        DyadicCube q;
        q.mu = int(rng.next() % 4);
        q.l[0] = long(rng.next() % (1UL << q.mu));
        TentAtom a = random_tent_atom(g, 2, q, cal.j_max, rng);
        auto A = smooth_atom_from_tent(a, cal, alpha, 1, 0);
        if (!A) continue;
        o.require(validate_atom(*A).pass(), "generated (alpha,Q)-atom valid");
        norms.push_back(tl_norm_column(A->data.to_field(), alpha, 1, fam).value);
    }
    for (int t = 0; t < 50; ++t) {
        SmoothAtom b;
        b.kind = SmoothKind::alpha_one;
        b.alpha = alpha;
        b.K = 1;
        b.L = 0;
        OperatorField low = apply_symbol(cal.low, band(g, 2, 1000 + t));
        auto sz = derivative_sizes(fft_forward(low), multi_indices(1, 1));
        b.data = LocalField::window(low, {0, 0, 0}, g.N);
        b.data *= 1 / *std::max_element(sz.begin(), sz.end());
        o.require(validate_atom(b).pass(), "generated (alpha,1)-atom valid");
        norms.push_back(tl_norm_column(b.data.to_field(), alpha, 1, fam).value);
    }
    o.require(norms.size() == 100, "100 atoms generated");
    o.require(spread(norms) <= 10, "converse norm spread");
    o.require(worst_res <= 1e-9, "reconstruction");
    o.note << detail.str() << "converse spread " << f6(spread(norms)) << " (max " << f6(*std::max_element(norms.begin(), norms.end()))
           << "), worst residual " << f6(worst_res);
}

void projection(Outcome& o)
{
    double worst_mean = 0, worst_leak = 0, C = 0;
    for (int t = 0; t < 50; ++t) {
        Desk k = desk(t);
        Grid g(k.d, k.N);
        static std::map<long, CalderonResolution> cache;
        long key = k.d * 100000 + k.N;
        if (!cache.count(key)) cache.emplace(key, calderon_resolution(g));
        const CalderonResolution& cal = cache.at(key);
        CounterRng rng(1100 + t);
        DyadicCube q;
        q.mu = int(rng.next() % 4);
        for (int i = 0; i < k.d; ++i) q.l[i] = long(rng.next() % (1UL << q.mu));
        TentAtom a = random_tent_atom(g, k.n, q, cal.j_max, rng);
        LocalField pa = project_tent(a, cal);
        OperatorField full = pa.to_field();
        StripField F(g, k.n, cal.j_max);
        for (size_t i = 0; i < a.levels.size(); ++i) a.levels[i].add_to(F.level(a.j_lo + int(i)));
        OperatorField spec = project_tent(F, cal);
        double leak = 0;
        for (long p = 0; p < g.points(); ++p)
            if (!in_doubled(g, q, p)) leak = std::max(leak, spec.mat(p).norm());
        worst_leak = std::max(worst_leak, leak / spec.max_abs());
        o.require(max_diff(full, spec) <= 1e-12 * spec.max_abs(), "local and spectral projections agree");
        double mass = 0;
        for (long p = 0; p < pa.points(); ++p) mass += pa.at(p).norm();
        worst_mean = std::max(worst_mean, integrate(full).norm() / (mass * g.vol()));
        C = std::max(C, local_l2_trace(pa) * std::sqrt(q.volume(k.d)));
    }
    o.require(worst_leak <= 1e-12, "support in 2Q");
    o.require(worst_mean <= 1e-12, "zero mean");
    o.require(std::isfinite(C), "size constant");
    o.note << "mean " << f6(worst_mean) << ", leak " << f6(worst_leak) << ", size constant C " << f6(C);
}

void pointwise(Outcome& o)
{
    Grid g(1, 1024);
    LPFamily fam = make_lp_family(g);
    double worst = 0;
    for (double alpha : {0.0, 0.5})
        for (int t = 0; t < 20; ++t) {
            CounterRng rng(1200 + t);
            Vec c{rng.uniform(), 0, 0};
            OperatorField h = bump(g, c, 0.25 + 0.5 * rng.uniform(), Mat::Identity(2, 2));
            for (int k = 1; k <= 3; ++k) h += single_mode(g, {k, 0, 0}, random_matrix(2, rng) * (0.3 / k));
            OperatorField f = band(g, 2, 1300 + t);
            PointwiseResult r = pointwise_multiply_test(h, f, alpha, fam, -1, 10);
            o.require(r.pass(), "ratio within margin");
            worst = std::max(worst, r.ratio / r.bound);
        }
    o.note << "max ratio / bound " << f6(worst) << " (margin 10)";
}

void commutative(Outcome& o)
{
    double worst = 0;
    std::string worst_name;
    for (int t = 0; t < 20; ++t) {
        Desk k = desk(t);
        Grid g(k.d, k.N);
        scalar_ref::Lattice L{k.d, k.N};
        static std::map<long, LPFamily> fams;
        static std::map<long, scalar_ref::Family> refs;
        if (!fams.count(k.N)) {
            fams.emplace(k.N, make_lp_family(g));
            refs.emplace(k.N, scalar_ref::Family(L));
        }
        const LPFamily& fam = fams.at(k.N);
        const scalar_ref::Family& ref = refs.at(k.N);
        CounterRng rng(1400 + t);
        OperatorField f = random_field(g, 1, rng);
        std::vector<std::complex<double>> v(f.raw().begin(), f.raw().end());
        auto cmp = [&](const std::string& name, double lib, double expect) {
            double e = std::abs(lib - expect) / std::max(std::abs(expect), 1e-300);
            if (e > worst) {
                worst = e;
                worst_name = name;
            }
        };
        for (double a : {-0.5, 0.0, 0.5})
            for (double p : {1.0, 2.0, 3.0}) {
                double r = scalar_ref::tl(v, ref, a, p);
                cmp("F_col", tl_norm_column(f, a, p, fam).value, r);
                cmp("F_row", tl_norm_row(f, a, p, fam).value, r);
            }
        cmp("h", hardy_norm(f, 1, fam).value, scalar_ref::tl(v, ref, 0, 1));
        cmp("h_poisson", hardy_norm(f, 1, fam, HardyMode::poisson).value, scalar_ref::hardy_poisson(v, L, 1));
        cmp("bmo", bmo_norm(f).value, scalar_ref::bmo(v, L));
        cmp("F_inf", tl_infty_norm(f, 0.5, fam).value, scalar_ref::tl_infty(v, ref, 0.5));
    }
    o.require(worst <= 1e-10, "scalar reference agreement");
    o.note << "worst relative error " << f6(worst) << " (" << worst_name << ")";
}

} // namespace

int main()
{
    struct Item {
        int id;
        const char* name;
        std::function<void(Outcome&)> run;
    };
    std::vector<Item> items{
        {1, "spectral exactness", spectral_exactness},
        {2, "LP family", lp_family},
        {3, "operator Cauchy-Schwarz", cauchy_schwarz},
        {4, "p=2 sandwich", sandwich},
        {5, "monotone embedding", embedding},
        {6, "lifting", lifting},
        {7, "family independence and homogeneous equivalence", independence},
        {8, "multiplier certificates", multipliers},
        {9, "CZ kernel estimates", cz},
        {10, "atom validators and decompositions", decompositions},
        {11, "tent projection contract", projection},
        {12, "pointwise multiplier", pointwise},
        {13, "commutative reduction", commutative},
    };
    int failed = 0;
    for (auto& it : items) {
        Outcome o;
        auto t0 = std::chrono::steady_clock::now();
        try {
            it.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.note << "exception: " << e.what();
        }
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << it.id << " " << it.name << " [" << f6(s) << " s] " << o.note.str() << std::endl;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
    return failed ? 1 : 0;
}
