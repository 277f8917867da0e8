#pragma once
#include <algorithm>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lattice.hpp"

namespace ovtl {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using CMatMap = Eigen::Map<const RowMat>;

// pairwise sum, fixed order
inline double tree_sum(std::span<const double> v)
{
    if (v.size() <= 16) {
        double s = 0;
        for (double x : v) s += x;
        return s;
    }
    size_t h = v.size() / 2;
    return tree_sum(v.subspan(0, h)) + tree_sum(v.subspan(h));
}

inline Mat hermitian_part(const Mat& a) { return (a + a.adjoint()) / 2.0; }

// eigenvalues ascending; a assumed Hermitian
inline Eigen::VectorXd herm_eigenvalues(const Mat& a)
{
    if (a.rows() == 1) return Eigen::VectorXd::Constant(1, a(0, 0).real());
    Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

template <class F>
Mat herm_apply(const Mat& a, F fn)
{
    if (a.rows() == 1) return Mat::Constant(1, 1, cplx(fn(a(0, 0).real()), 0));
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    Eigen::VectorXd ev = es.eigenvalues().unaryExpr([&](double x) { return fn(x); });
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

inline Mat psd_sqrt(const Mat& s)
{
    return herm_apply(hermitian_part(s), [](double x) { return x > 0 ? std::sqrt(x) : 0.0; });
}

// |x| = (x*x)^{1/2}
inline Mat modulus(const Mat& x) { return psd_sqrt(x.adjoint() * x); }

// tr (S^{1/2}) for PSD S
inline double trace_sqrt(const Mat& s)
{
    Eigen::VectorXd ev = herm_eigenvalues(hermitian_part(s));
    double t = 0;
    for (int i = 0; i < ev.size(); ++i) t += ev[i] > 0 ? std::sqrt(ev[i]) : 0.0;
    return t;
}

inline double op_norm(const Mat& x)
{
    if (x.size() == 0) return 0;
    if (x.rows() == 1) return std::abs(x(0, 0));
    Eigen::VectorXd ev = herm_eigenvalues(x.adjoint() * x);
    return std::sqrt(std::max(0.0, ev[ev.size() - 1]));
}

inline double max_eigenvalue(const Mat& s)
{
    Eigen::VectorXd ev = herm_eigenvalues(hermitian_part(s));
    return ev[ev.size() - 1];
}

class OperatorField {
public:
    OperatorField() = default;
    OperatorField(const Grid& g, int n) : grid_(g), n_(n), data_(size_t(g.points()) * n * n, cplx(0)) {}

    const Grid& grid() const { return grid_; }
    int n() const { return n_; }
    long points() const { return grid_.points(); }
    size_t block() const { return size_t(n_) * n_; }

    MatMap at(long p) { return MatMap(data_.data() + p * block(), n_, n_); }
    CMatMap at(long p) const { return CMatMap(data_.data() + p * block(), n_, n_); }
    Mat mat(long p) const { return at(p); }

    std::vector<cplx>& raw() { return data_; }
    const std::vector<cplx>& raw() const { return data_; }

    OperatorField& operator+=(const OperatorField& o)
    {
        require(o);
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    OperatorField& operator-=(const OperatorField& o)
    {
        require(o);
        for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    OperatorField& operator*=(cplx c)
    {
        for (auto& x : data_) x *= c;
        return *this;
    }
    void axpy(cplx c, const OperatorField& o)
    {
        require(o);
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += c * o.data_[i];
    }

    bool is_finite() const
    {
        for (auto& x : data_)
            if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
        return true;
    }
    bool is_zero() const
    {
        for (auto& x : data_)
            if (x != cplx(0)) return false;
        return true;
    }
    double max_abs() const
    {
        double m = 0;
        for (auto& x : data_) m = std::max(m, std::abs(x));
        return m;
    }

private:
    void require(const OperatorField& o) const
    {
        require_same(grid_, o.grid_);
        if (n_ != o.n_) throw GridMismatch("matrix size mismatch");
    }

    Grid grid_;
    int n_ = 0;
    std::vector<cplx> data_;
};

inline OperatorField operator+(OperatorField a, const OperatorField& b) { return a += b; }
inline OperatorField operator-(OperatorField a, const OperatorField& b) { return a -= b; }
inline OperatorField operator*(cplx c, OperatorField a) { return a *= c; }

inline OperatorField constant_field(const Grid& g, const Mat& a)
{
    OperatorField f(g, int(a.rows()));
    for (long p = 0; p < g.points(); ++p) f.at(p) = a;
    return f;
}

inline OperatorField adjoint(const OperatorField& f)
{
    OperatorField r(f.grid(), f.n());
    for (long p = 0; p < f.points(); ++p) r.at(p) = f.at(p).adjoint();
    return r;
}

// left pointwise product h(s) f(s)
inline OperatorField multiply(const OperatorField& h, const OperatorField& f)
{
    require_same(h.grid(), f.grid());
    OperatorField r(f.grid(), f.n());
    for (long p = 0; p < f.points(); ++p) r.at(p) = h.at(p) * f.at(p);
    return r;
}

// (sum_s h^d ||f(s)||_HS^2)^{1/2}
inline double l2_norm(const OperatorField& f)
{
    std::vector<double> v(f.points());
    for (long p = 0; p < f.points(); ++p) v[p] = f.at(p).squaredNorm();
    return std::sqrt(f.grid().vol() * tree_sum(v));
}

inline double max_diff(const OperatorField& a, const OperatorField& b)
{
    double m = 0;
    for (size_t i = 0; i < a.raw().size(); ++i) m = std::max(m, std::abs(a.raw()[i] - b.raw()[i]));
    return m;
}

inline Mat integrate(const OperatorField& f)
{
    Mat s = Mat::Zero(f.n(), f.n());
    for (long p = 0; p < f.points(); ++p) s += f.at(p);
    return s * f.grid().vol();
}

// F(s, 2^{-j}) for 1 <= j <= j_max
class StripField {
public:
    StripField() = default;
    StripField(const Grid& g, int n, int j_max) : grid_(g), n_(n), j_max_(j_max), levels_(j_max, OperatorField(g, n)) {}

    const Grid& grid() const { return grid_; }
    int n() const { return n_; }
    int j_max() const { return j_max_; }
    OperatorField& level(int j) { return levels_.at(j - 1); }
    const OperatorField& level(int j) const { return levels_.at(j - 1); }

    StripField& operator*=(cplx c)
    {
        for (auto& l : levels_) l *= c;
        return *this;
    }
    StripField& operator+=(const StripField& o)
    {
        for (int j = 1; j <= j_max_; ++j) level(j) += o.level(j);
        return *this;
    }
    bool is_zero() const
    {
        for (auto& l : levels_)
            if (!l.is_zero()) return false;
        return true;
    }
    double max_abs() const
    {
        double m = 0;
        for (auto& l : levels_) m = std::max(m, l.max_abs());
        return m;
    }

private:
    Grid grid_;
    int n_ = 0, j_max_ = 0;
    std::vector<OperatorField> levels_;
};

// S(s) = sum_k w_k g_k(s)* g_k(s)
class PSDAccumulator {
public:
    PSDAccumulator(const Grid& g, int n) : s_(g, n) {}

    void add_gram(double w, const OperatorField& g)
    {
        if (w < 0) throw DomainError("negative accumulator weight");
        for (long p = 0; p < g.points(); ++p) s_.at(p).noalias() += w * (g.at(p).adjoint() * g.at(p));
    }
    // rel_noise: round-off of s relative to its largest entry, e.g. for FFT convolutions
    void add_psd(double w, const OperatorField& s, double rel_noise = 0)
    {
        if (w < 0) throw DomainError("negative accumulator weight");
        s_.axpy(w, s);
        if (rel_noise > 0) floor_ += w * rel_noise * s.max_abs();
    }
    const OperatorField& field() const { return s_; }
    OperatorField& field() { return s_; }
    // eigenvalues at or below this are round-off and clip to 0
    double floor() const { return floor_; }

private:
    OperatorField s_;
    double floor_ = 0;
};

inline OperatorField sqrt_psd(const PSDAccumulator& acc, double herm_tol = 1e-12)
{
    const OperatorField& s = acc.field();
    OperatorField r(s.grid(), s.n());
    for (long p = 0; p < s.points(); ++p) {
        Mat a = s.at(p);
        double scale = a.norm();
        if (scale > 0 && (a - a.adjoint()).norm() > herm_tol * scale * 2)
            throw ValidationError("accumulator not Hermitian");
        double fl = acc.floor();
        r.at(p) = herm_apply(hermitian_part(a), [fl](double x) { return x > fl ? std::sqrt(x) : 0.0; });
    }
    return r;
}

inline double trace_lp_norm(const OperatorField& f, double p)
{
    if (!(p >= 1)) throw DomainError("trace_lp_norm requires p >= 1");
    long P = f.points();
    if (std::isinf(p)) {
        double m = 0;
        for (long s = 0; s < P; ++s) m = std::max(m, op_norm(f.at(s)));
        return m;
    }
    std::vector<double> v(P);
    for (long s = 0; s < P; ++s) {
        Mat x = f.at(s);
        if (f.n() == 1) {
            v[s] = std::pow(std::abs(x(0, 0)), p);
            continue;
        }
        Eigen::VectorXd ev = herm_eigenvalues(x.adjoint() * x);
        double t = 0;
        for (int i = 0; i < ev.size(); ++i) t += ev[i] > 0 ? std::pow(ev[i], p / 2) : 0.0;
        v[s] = t;
    }
    return std::pow(f.grid().vol() * tree_sum(v), 1.0 / p);
}

// lambda_min[ int|phi|^2 int f*f - (int phi f)*(int phi f) ]
inline double op_cauchy_schwarz_gap(std::span<const cplx> phi, const OperatorField& f)
{
    if (long(phi.size()) != f.points()) throw GridMismatch("phi size");
    double vol = f.grid().vol(), a = 0;
    Mat ff = Mat::Zero(f.n(), f.n()), pf = Mat::Zero(f.n(), f.n());
    for (long p = 0; p < f.points(); ++p) {
        a += std::norm(phi[p]);
        ff += f.at(p).adjoint() * f.at(p);
        pf += phi[p] * f.at(p);
    }
    a *= vol;
    ff *= vol;
    pf *= vol;
    Mat gap = a * ff - pf.adjoint() * pf;
    return herm_eigenvalues(hermitian_part(gap))[0];
}

} // namespace ovtl
