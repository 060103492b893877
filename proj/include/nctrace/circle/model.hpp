#pragma once

#include <nctrace/circle/hurwitz.hpp>
#include <nctrace/zetatrace.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

namespace nctrace::circle {

/// Trigonometric polynomial sum_k a_k e^{ik theta}: acts on Fourier modes as sum_k a_k S_k, S_k e_m = e_{m+k}.
using TrigPolynomial = std::map<int, F>;

inline double eigenvalue(long long m) { return std::sqrt(1.0 + static_cast<double>(m) * static_cast<double>(m)); }

/// lambda_{m+b} - lambda_{m+a} without cancellation.
inline double eigen_gap(long long m, int a, int b)
{
    double const x = static_cast<double>(m + a), y = static_cast<double>(m + b);
    return (y - x) * (y + x) / (eigenvalue(m + b) + eigenvalue(m + a));
}

struct CircleParams
{
    int mode_cutoff = 256; ///< matrix realizations live on modes -N..N
    int asym_order = 40;   ///< depth of the 1/n expansion of diagonal entries
    int em_depth = 14;     ///< Euler-Maclaurin correction depth of the Hurwitz germs
    int head = 32;         ///< modes |m| <= head are summed exactly
};

/// Operator on the modes -N..N stored by diagonals: bands[k][m + N] is the (m+k, m) entry.
class BandedOp
{
public:
    explicit BandedOp(int cutoff) : cutoff_(cutoff) {}

    static BandedOp identity(int cutoff)
    {
        BandedOp r(cutoff);
        r.bands_[0].assign(static_cast<std::size_t>(2 * cutoff + 1), F(1.0));
        return r;
    }
    /// diag(f(m)).
    template <typename Fn> static BandedOp diagonal(int cutoff, Fn&& f)
    {
        BandedOp r(cutoff);
        auto& b = r.bands_[0];
        b.resize(static_cast<std::size_t>(2 * cutoff + 1));
        for (int m = -cutoff; m <= cutoff; ++m) b[m + cutoff] = f(m);
        return r;
    }

    int cutoff() const { return cutoff_; }
    int size() const { return 2 * cutoff_ + 1; }
    std::map<int, std::vector<F>> const& bands() const { return bands_; }
    bool contains(int m) const { return m >= -cutoff_ && m <= cutoff_; }

    int support() const
    {
        int s = 0;
        for (auto const& [k, v] : bands_) s = std::max(s, std::abs(k));
        return s;
    }

    F entry(int row, int col) const
    {
        auto it = bands_.find(row - col);
        if (it == bands_.end() || !contains(col) || !contains(row)) return F{};
        return it->second[col + cutoff_];
    }

    /// Adds v to the (m+k, m) entry.
    void add(int k, int m, F v)
    {
        auto& b = bands_[k];
        if (b.empty()) b.assign(static_cast<std::size_t>(size()), F{});
        b[m + cutoff_] += v;
    }

    friend BandedOp operator+(BandedOp x, BandedOp const& y)
    {
        for (auto const& [k, v] : y.bands_)
            for (int m = -x.cutoff_; m <= x.cutoff_; ++m)
                if (v[m + x.cutoff_] != F{}) x.add(k, m, v[m + x.cutoff_]);
        return x;
    }

    BandedOp scaled(F s) const
    {
        BandedOp r = *this;
        for (auto& [k, v] : r.bands_)
            for (auto& e : v) e *= s;
        return r;
    }

    /// Matrix product of the truncated operators; paths leaving -N..N are dropped.
    friend BandedOp operator*(BandedOp const& x, BandedOp const& y)
    {
        BandedOp r(x.cutoff_);
        int const N = x.cutoff_;
        for (auto const& [ky, vy] : y.bands_)
            for (auto const& [kx, vx] : x.bands_)
                for (int m = -N; m <= N; ++m) {
                    int const mid = m + ky;
                    if (mid < -N || mid > N || mid + kx < -N || mid + kx > N) continue;
                    F const e = vx[mid + N] * vy[m + N];
                    if (e != F{}) r.add(kx + ky, m, e);
                }
        return r;
    }

    /// [x, y] = xy - yx.
    friend BandedOp commutator(BandedOp const& x, BandedOp const& y) { return x * y + (y * x).scaled(F(-1.0)); }

    std::vector<F> apply(std::vector<F> const& in) const
    {
        std::vector<F> out(in.size(), F{});
        for (auto const& [k, v] : bands_)
            for (int m = -cutoff_; m <= cutoff_; ++m) {
                int const row = m + k;
                if (contains(row)) out[row + cutoff_] += v[m + cutoff_] * in[m + cutoff_];
            }
        return out;
    }

    F trace() const
    {
        auto it = bands_.find(0);
        F t{};
        if (it != bands_.end())
            for (auto const& e : it->second) t += e;
        return t;
    }

private:
    int cutoff_;
    std::map<int, std::vector<F>> bands_;
};

/// One diagonal contribution of a word: coefficient times the product over
/// steps of (lambda_{m+to} - lambda_{m+from})^power.
struct DiagonalPath
{
    struct Step
    {
        int from;
        int to;
        int power;
    };
    F coefficient;
    std::vector<Step> steps;
};

/// Expansion d(n) ~ sum_r c_r n^{-r} of a diagonal entry, separately as n -> +inf and n -> -inf (in |n|).
struct DiagAsymptotics
{
    std::vector<F> plus;
    std::vector<F> minus;
};

class CircleModel final : public TraceModel<F>
{
public:
    explicit CircleModel(CircleParams params = {}) : params_(params)
    {
        if (params_.mode_cutoff < 1 || params_.asym_order < 1 || params_.em_depth < 1 || params_.head < 1)
            throw std::invalid_argument("CircleModel: all depths must be positive");
        declare("u", {{1, F(1.0)}});
        declare("v", {{-1, F(1.0)}});
        declare("c", {{1, F(0.5)}, {-1, F(0.5)}});
        declare("s", {{1, F(0.0, -0.5)}, {-1, F(0.0, 0.5)}});
    }

    CircleParams const& params() const { return params_; }

    /// Registers a trigonometric polynomial under a generator name; not thread-safe.
    void declare(std::string name, TrigPolynomial p)
    {
        std::erase_if(p, [](auto const& e) { return e.second == F{}; });
        generators_[std::move(name)] = std::move(p);
    }
    TrigPolynomial const& generator(std::string const& name) const
    {
        auto it = generators_.find(name);
        if (it == generators_.end()) throw std::invalid_argument("CircleModel: undeclared generator " + name);
        return it->second;
    }

    /// Shift components (k, coefficient) of one generator; [D, S_k] = k S_k.
    std::vector<std::pair<int, F>> components(Generator const& g) const
    {
        std::vector<std::pair<int, F>> out;
        for (auto const& [k, a] : generator(g.base)) {
            F c = a;
            if (g.kind == GeneratorKind::bracket) c *= static_cast<double>(k);
            if (g.delta_power > 0 && k == 0) c = F{};
            if (c != F{}) out.emplace_back(k, c);
        }
        return out;
    }

    /// Largest total shift a word can reach.
    int band_support(Word const& w) const
    {
        int s = 0;
        for (auto const& g : w.factors) {
            int m = 0;
            for (auto const& [k, c] : components(g)) m = std::max(m, std::abs(k));
            s += m;
        }
        return s;
    }

    /// Diagonal paths: factors act right to left, the offset must return to 0.
    std::vector<DiagonalPath> diagonal_paths(Word const& w) const
    {
        std::vector<DiagonalPath> out;
        DiagonalPath cur{F(1.0), {}};
        int const r = static_cast<int>(w.factors.size());
        auto rec = [&](auto&& self, int i, int offset) -> void {
            if (i < 0) {
                if (offset == 0) out.push_back(cur);
                return;
            }
            auto const& g = w.factors[i];
            for (auto const& [k, c] : components(g)) {
                DiagonalPath const saved = cur;
                cur.coefficient *= c;
                if (g.delta_power > 0) cur.steps.push_back({offset, offset + k, g.delta_power});
                self(self, i - 1, offset + k);
                cur = saved;
            }
        };
        rec(rec, r - 1, 0);
        return out;
    }

    /// <e_m, w e_m> from the path decomposition.
    F diagonal_entry(std::vector<DiagonalPath> const& paths, long long m) const
    {
        F d{};
        for (auto const& p : paths) {
            F t = p.coefficient;
            for (auto const& s : p.steps) t *= std::pow(eigen_gap(m, s.from, s.to), s.power);
            d += t;
        }
        return d;
    }

    /// Coefficients c_0..c_M of d(+-n) in powers of 1/n, from
    /// lambda_{n+a} = n sqrt(1 + 2a/n + (a^2+1)/n^2); the negative branch uses negated offsets.
    DiagAsymptotics diag_asymptotics(Word const& w, int M) const
    {
        auto const paths = diagonal_paths(w);
        auto branch = [&](int sign) {
            Jet<F> total = Jet<F>::zero(M);
            std::map<int, Jet<F>> roots;
            auto root = [&](int a) -> Jet<F> const& {
                auto it = roots.find(a);
                if (it == roots.end()) {
                    std::vector<F> c(static_cast<std::size_t>(std::max(M + 2, 3)), F{});
                    c[0] = 1.0;
                    c[1] = 2.0 * a;
                    c[2] = static_cast<double>(a) * a + 1.0;
                    it = roots.emplace(a, sqrt(Jet<F>(F{}, std::move(c)))).first;
                }
                return it->second;
            };
            for (auto const& p : paths) {
                Jet<F> t = Jet<F>::constant(p.coefficient, M);
                for (auto const& s : p.steps) {
                    // (sqrt_b - sqrt_a)/t: the constant terms cancel.
                    auto const& rb = root(sign * s.to);
                    auto const& ra = root(sign * s.from);
                    std::vector<F> gap(static_cast<std::size_t>(M) + 1);
                    for (int i = 0; i <= M; ++i) gap[i] = rb[i + 1] - ra[i + 1];
                    Jet<F> const g(F{}, std::move(gap));
                    for (int n = 0; n < s.power; ++n) t = t * g;
                }
                total = total + t;
            }
            return total.coefficients();
        };
        return {branch(1), branch(-1)};
    }

    LaurentJet<F> word_trace(Word const& w, F const& center, int pole_bound, int K) const override
    {
        auto const key = std::make_tuple(w, center.real(), center.imag(), K);
        {
            std::lock_guard lock(cache_mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) return it->second;
        }
        auto germ = compute_word_trace(w, center, K);
        if (germ.pole_order() > pole_bound + 1)
            throw ModelContractViolation("pole multiplicity", "circle germ of " + w.str() + " exceeds the bound");
        std::lock_guard lock(cache_mutex_);
        cache_.emplace(key, germ);
        return germ;
    }

    /// Sd = integers <= 1.
    bool in_dimension_spectrum(F const& x) const override
    {
        if (std::abs(x.imag()) > 1e-12) return false;
        double const r = std::round(x.real());
        return std::abs(x.real() - r) <= 1e-12 && r <= 1.0;
    }
    std::vector<F> dimension_spectrum_window(double lo, double hi) const override
    {
        std::vector<F> out;
        for (double x = std::ceil(lo); x <= std::min(hi, 1.0); x += 1.0) out.emplace_back(x);
        return out;
    }
    double summability_degree() const override { return 1.0; }
    int pole_multiplicity_bound() const override { return 0; }
    std::string name() const override { return "circle"; }

    BandedOp realize_generator(Generator const& g) const
    {
        int const N = params_.mode_cutoff;
        BandedOp r(N);
        for (auto const& [k, c] : components(g))
            for (int m = -N; m <= N; ++m) {
                if (m + k < -N || m + k > N) continue;
                F e = c;
                if (g.delta_power > 0) e *= std::pow(eigen_gap(m, 0, k), g.delta_power);
                r.add(k, m, e);
            }
        return r;
    }

    BandedOp realize(Word const& w) const
    {
        if (band_support(w) >= params_.mode_cutoff)
            throw std::invalid_argument("realize: cutoff " + std::to_string(params_.mode_cutoff) +
                                        " too small for band support " + std::to_string(band_support(w)));
        BandedOp r = BandedOp::identity(params_.mode_cutoff);
        for (auto const& g : w.factors) r = r * realize_generator(g);
        return r;
    }

    BandedOp realize(BElement<F> const& b) const
    {
        BandedOp r(params_.mode_cutoff);
        for (auto const& [w, c] : b.terms()) r = r + realize(w).scaled(c);
        return r;
    }

    BandedOp abs_d() const { return BandedOp::diagonal(params_.mode_cutoff, [](int m) { return F(eigenvalue(m)); }); }

    /// Apply the expansion of A(z) to a vector over the modes -N..N:
    /// sum_{j,l} b_{j,l}(z) |D|^{alpha(z)-j} log^l|D| x.
    std::vector<F> apply_symbol(Symbol<F> const& A, F const& z, std::vector<F> const& x) const
    {
        int const N = params_.mode_cutoff;
        if (static_cast<int>(x.size()) != 2 * N + 1) throw std::invalid_argument("apply_symbol: vector size mismatch");
        std::vector<F> out(x.size(), F{});
        F const alpha = A.order().at(z);
        for (auto const& [key, fam] : A.terms()) {
            BElement<F> b;
            F power(1.0);
            for (int m = 0; m <= fam.order(); ++m) {
                b += fam[m].scaled(power);
                power *= z - fam.center();
            }
            std::vector<F> y(x.size());
            for (int m = -N; m <= N; ++m) {
                double const lam = eigenvalue(m);
                y[m + N] = x[m + N] * std::pow(F(lam), alpha - static_cast<double>(key.j)) *
                           std::pow(std::log(lam), key.l);
            }
            auto const by = realize(b).apply(y);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += by[i];
        }
        return out;
    }

private:
    LaurentJet<F> compute_word_trace(Word const& w, F const& s0, int K) const
    {
        auto const paths = diagonal_paths(w);
        LaurentJet<F> germ = LaurentJet<F>::zero(K, s0);
        if (paths.empty()) return germ;

        int const N0 = std::max(params_.head, 2 * band_support(w) + 2);
        for (long long m = -N0; m <= N0; ++m) {
            F const d = diagonal_entry(paths, m);
            if (d == F{}) continue;
            germ = germ + LaurentJet<F>(inverse_power_jet(eigenvalue(m), s0, K).scaled(d));
        }

        // Terms with r + 2i > T are below N0^{-12} relative to the leading tail.
        int const T = std::max(0, static_cast<int>(std::ceil(1.0 - s0.real() + 12.0 / std::log10(N0 + 1.0))));
        if (T > params_.asym_order)
            throw TruncationError("circle word_trace: asym_order " + std::to_string(params_.asym_order) +
                                  " below the required depth " + std::to_string(T) + " at center " +
                                  to_string(s0));
        auto const asym = diag_asymptotics(w, T);
        for (int r = 0; r <= T; ++r) {
            F const c = asym.plus[r] + asym.minus[r];
            if (std::abs(c) < 1e-300) continue;
            for (int i = 0; r + 2 * i <= T; ++i) {
                // C(-s/2, i) expanded at s0.
                auto poly = compose_affine(binomial_polynomial<F>(i), F{}, F(-0.5));
                poly = taylor_shift(poly, s0);
                poly.resize(static_cast<std::size_t>(K) + 2, F{});
                Jet<F> const binom(s0, poly);
                F const x0 = s0 + static_cast<double>(r + 2 * i);
                auto const h = hurwitz_germ(x0, N0 + 1, K + 1, params_.em_depth, N0 + 1);
                double const scale = std::max(1.0, std::abs(h.germ.coeff(0)));
                if (h.tail_estimate > 1e-13 * scale)
                    throw TruncationError("circle word_trace: em_depth " + std::to_string(params_.em_depth) +
                                          " leaves a correction of " + std::to_string(h.tail_estimate));
                auto const shifted = h.germ.translated(s0);
                germ = germ + (LaurentJet<F>(binom.scaled(c)) * shifted).truncated(K);
            }
        }
        return germ;
    }

    CircleParams params_;
    std::map<std::string, TrigPolynomial> generators_;
    mutable std::mutex cache_mutex_;
    mutable std::map<std::tuple<Word, double, double, int>, LaurentJet<F>> cache_;
};

} // namespace nctrace::circle
