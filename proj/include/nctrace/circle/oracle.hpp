#pragma once

#include <nctrace/circle/model.hpp>

#include <Eigen/Dense>
#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/complex128.hpp>
#include <boost/multiprecision/float128.hpp>

#include <cmath>
#include <map>
#include <vector>

namespace nctrace::circle {

/// Brute-force traces of the circle model in quad precision.  Diagonal
/// entries come from applying the word to each basis vector; the
/// continuation in z extrapolates partial sums over |m| <= M against the
/// known powers M^{1-z-i}, and Laurent data come from contour integrals.
/// No asymptotic expansion of the model is used.
struct OracleParams
{
    int base = 48;            ///< smallest cutoff M_0
    double ratio = 1.25;      ///< M_{j+1} / M_j
    int unknowns = 18;        ///< power-law corrections fitted besides the limit
    double radius = 0.5;      ///< contour radius for Laurent coefficients
    int contour_points = 64;
};

class ContinuationOracle
{
public:
    using Real = boost::multiprecision::float128;
    using Cplx = boost::multiprecision::complex128;

    ContinuationOracle(CircleModel const& model, Word const& word, OracleParams params = {})
        : params_(params)
    {
        double M = params_.base;
        for (int j = 0; j <= params_.unknowns; ++j) {
            cutoffs_.push_back(static_cast<long long>(std::llround(M)));
            M *= params_.ratio;
        }
        long long const top = cutoffs_.back();
        diag_.assign(static_cast<std::size_t>(2 * top + 1), Cplx(0));
        log_lambda_.resize(diag_.size());
        for (long long m = -top; m <= top; ++m) {
            diag_[m + top] = diagonal(model, word, m);
            log_lambda_[m + top] = log(lambda(m));
        }
        top_ = top;
    }

    /// <e_m, w e_m> by direct application of the factors, right to left.
    static Cplx diagonal(CircleModel const& model, Word const& word, long long m)
    {
        std::map<long long, Cplx> vec{{0, Cplx(1)}};
        for (auto it = word.factors.rbegin(); it != word.factors.rend(); ++it) {
            std::map<long long, Cplx> next;
            for (auto const& [offset, value] : vec)
                for (auto const& [k, a] : model.generator(it->base)) {
                    Cplx c(Real(a.real()), Real(a.imag()));
                    if (it->kind == GeneratorKind::bracket) c *= Real(k);
                    Real const gap = lambda(m + offset + k) - lambda(m + offset);
                    for (int n = 0; n < it->delta_power; ++n) c *= gap;
                    next[offset + k] += c * value;
                }
            vec = std::move(next);
        }
        auto it = vec.find(0);
        return it == vec.end() ? Cplx(0) : it->second;
    }

    static Real lambda(long long m)
    {
        Real const x = Real(m);
        return sqrt(Real(1) + x * x);
    }

    /// Continued value of z -> sum_m d(m) lambda_m^{-z}; z must avoid the integers <= 1.
    Cplx value(Cplx const& z) const { return fit(z, 0); }

    /// Difference between the full fit and one using the cutoffs shifted by one.
    double error_estimate(Cplx const& z) const
    {
        auto const sums = partial_sums(z);
        return to_double(modulus(fit(z, 0, sums) - fit(z, 1, sums)));
    }

    F value(F z) const { return to_f(value(Cplx(Real(z.real()), Real(z.imag())))); }

    /// Laurent coefficients a_{-1}, ..., a_K at z0 from a circle of radius `radius`.
    std::vector<F> laurent(F z0, int K) const
    {
        int const P = params_.contour_points;
        std::vector<Cplx> acc(static_cast<std::size_t>(K) + 2, Cplx(0));
        Real const pi = boost::math::constants::pi<Real>();
        Real const rho = params_.radius;
        Cplx const c0(Real(z0.real()), Real(z0.imag()));
        for (int p = 0; p < P; ++p) {
            Real const theta = 2 * pi * (Real(p) + Real(0.5)) / P;
            Cplx const e(cos(theta), sin(theta));
            Cplx const f = value(c0 + rho * e);
            for (int n = -1; n <= K; ++n) acc[n + 1] += f * pow(e, -n) / pow(rho, Real(n));
        }
        std::vector<F> out;
        for (auto const& a : acc) out.push_back(to_f(a / Real(P)));
        return out;
    }

    static Real modulus(Cplx const& c) { return sqrt(c.real() * c.real() + c.imag() * c.imag()); }
    static double to_double(Real const& x) { return static_cast<double>(x.backend().value()); }
    static F to_f(Cplx const& c) { return F(to_double(c.real()), to_double(c.imag())); }

private:
    /// S(M_j) = sum_{|m| <= M_j} d(m) lambda_m^{-z} for every cutoff, in one pass over |m|.
    std::vector<Cplx> partial_sums(Cplx const& z) const
    {
        std::vector<Cplx> out;
        out.reserve(cutoffs_.size());
        Cplx s = diag_[top_];
        std::size_t next = 0;
        for (long long m = 1; m <= top_; ++m) {
            while (next < cutoffs_.size() && cutoffs_[next] < m) out.push_back(s), ++next;
            Cplx const d = diag_[top_ + m] + diag_[top_ - m];
            if (d != Cplx(0)) s += d * exp(-z * log_lambda_[top_ + m]);
        }
        while (out.size() < cutoffs_.size()) out.push_back(s);
        return out;
    }

    /// Solve S(M_j) = F + sum_i e_i (M_j/M_s)^{1-z-i} for F over nodes s..s+n.
    Cplx fit(Cplx const& z, int skip) const { return fit(z, skip, partial_sums(z)); }

    Cplx fit(Cplx const& z, int skip, std::vector<Cplx> const& sums) const
    {
        int const n = params_.unknowns - skip;
        std::vector<std::vector<Cplx>> A(static_cast<std::size_t>(n) + 1, std::vector<Cplx>(n + 2));
        Real const logM0 = log(Real(cutoffs_[skip]));
        for (int r = 0; r <= n; ++r) {
            long long const M = cutoffs_[r + skip];
            Real const lr = log(Real(M)) - logM0;
            A[r][0] = Cplx(1);
            for (int i = 0; i < n; ++i) A[r][i + 1] = exp((Real(1) - z - Real(i)) * lr);
            A[r][n + 1] = sums[r + skip];
        }
        return solve_first(A);
    }

    /// Gaussian elimination with partial pivoting on an augmented matrix; returns x_0.
    static Cplx solve_first(std::vector<std::vector<Cplx>>& A)
    {
        int const n = static_cast<int>(A.size());
        for (int c = 0; c < n; ++c) {
            int piv = c;
            for (int r = c + 1; r < n; ++r)
                if (modulus(A[r][c]) > modulus(A[piv][c])) piv = r;
            std::swap(A[c], A[piv]);
            for (int r = c + 1; r < n; ++r) {
                Cplx const f = A[r][c] / A[c][c];
                if (f == Cplx(0)) continue;
                for (int k = c; k <= n; ++k) A[r][k] -= f * A[c][k];
            }
        }
        std::vector<Cplx> x(static_cast<std::size_t>(n));
        for (int r = n - 1; r >= 0; --r) {
            Cplx s = A[r][n];
            for (int k = r + 1; k < n; ++k) s -= A[r][k] * x[k];
            x[r] = s / A[r][r];
        }
        return x[0];
    }

    OracleParams params_;
    std::vector<long long> cutoffs_;
    std::vector<Cplx> diag_;
    std::vector<Real> log_lambda_;
    long long top_ = 0;
};

/// Tr(A (|D| + P)^{-z}) on the truncated mode space from a dense eigendecomposition.
/// P must be self-adjoint; the truncation must keep the spectrum positive.
inline F perturbed_trace(BandedOp const& A, BandedOp const& P, F z)
{
    int const N = P.cutoff();
    int const size = 2 * N + 1;
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(size, size);
    Eigen::MatrixXcd Am = Eigen::MatrixXcd::Zero(size, size);
    for (int m = -N; m <= N; ++m) H(m + N, m + N) = eigenvalue(m);
    for (auto const& [k, v] : P.bands())
        for (int m = -N; m <= N; ++m)
            if (P.contains(m + k)) H(m + k + N, m + N) += v[m + N];
    for (auto const& [k, v] : A.bands())
        for (int m = -N; m <= N; ++m)
            if (A.contains(m + k)) Am(m + k + N, m + N) += v[m + N];
    if ((H - H.adjoint()).norm() > 1e-12 * H.norm())
        throw std::invalid_argument("perturbed_trace: |D| + P is not self-adjoint");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> const es(H);
    auto const& mu = es.eigenvalues();
    if (mu.minCoeff() <= 0.0) throw std::invalid_argument("perturbed_trace: |D| + P is not positive");
    Eigen::MatrixXcd const V = es.eigenvectors();
    Eigen::MatrixXcd const B = V.adjoint() * Am * V;
    F t{};
    for (int i = 0; i < size; ++i) t += B(i, i) * std::pow(F(mu(i)), -z);
    return t;
}

} // namespace nctrace::circle
