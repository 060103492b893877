#pragma once

#include <nctrace/symbol.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace nctrace {

/// The model broke one of its declared analytic properties.
class ModelContractViolation : public Error
{
public:
    ModelContractViolation(std::string invariant, std::string const& detail)
        : Error(invariant + ": " + detail), invariant_(std::move(invariant))
    {
    }
    std::string const& invariant() const { return invariant_; }

private:
    std::string invariant_;
};

/// The canonical trace was requested for an operator whose order lies in -Sd.
class OrderInDimensionSpectrum : public Error
{
public:
    using Error::Error;
};

/// Analytic data of a concrete spectral triple: germs of z -> Tr(w |D|^{-z}) for
/// words of the coefficient algebra, and the dimension spectrum.
template <Scalar S> class TraceModel
{
public:
    virtual ~TraceModel() = default;

    /// Laurent germ of w -> Tr(word |D|^{-w}) at `center`, known to order K.
    virtual LaurentJet<S> word_trace(Word const& word, S const& center, int pole_bound, int K) const = 0;

    virtual bool in_dimension_spectrum(S const& x) const = 0;
    /// Points of Sd with real part in [lo, hi], ascending.
    virtual std::vector<S> dimension_spectrum_window(double lo, double hi) const = 0;
    virtual double summability_degree() const = 0;
    virtual int pole_multiplicity_bound() const = 0;
    virtual std::string name() const = 0;
};

template <Scalar S> struct MeroTrace
{
    LaurentJet<S> germ;
    std::vector<std::pair<std::string, LaurentJet<S>>> contributing_terms;
    double dropped_remainder_order = -std::numeric_limits<double>::infinity();
};

/// Default Laurent depth: k + 4.
template <Scalar S> int default_trace_order(TraceModel<S> const& model) { return model.pole_multiplicity_bound() + 4; }

namespace detail {

/// (-d/dw)^l of a germ.
template <Scalar S> LaurentJet<S> minus_derivative(LaurentJet<S> g, int l)
{
    for (int i = 0; i < l; ++i) g = g.derivative().scaled(from_ratio<S>(-1));
    return g;
}

template <Scalar S> Jet<S> padded_jet(std::vector<S> c, S center, int K)
{
    c.resize(static_cast<std::size_t>(K) + 1, S{});
    return Jet<S>(std::move(center), std::move(c));
}

} // namespace detail

/// Laurent germ at z0 of the meromorphic extension of z -> Tr(A(z)) for a
/// family of affine order a - q z, assembled term by term: the word germs of
/// the model are re-centered through w = q z - (a - j), and log^l|D| factors
/// act as (-d/dw)^l.
///
/// For a truncated expansion the holomorphic trace of the dropped remainder is
/// not included; the remainder must be trace class near z0.
template <Scalar S>
MeroTrace<S> tr_mer(Symbol<S> const& A, S const& z0, TraceModel<S> const& model, int K = -1, bool audit = false)
{
    if (K < 0) K = default_trace_order(model);
    S const q = A.order().q;
    S const a = A.order().a;
    if (is_zero(q)) throw IncompatibleOrders("tr_mer: the family order must be non-constant (q != 0)");
    int const kbound = model.pole_multiplicity_bound();

    MeroTrace<S> out{LaurentJet<S>::zero(K, z0), {}, -std::numeric_limits<double>::infinity()};
    double const alpha_z0 = to_complex(A.order().at(z0)).real();
    if (!A.exact()) {
        out.dropped_remainder_order = alpha_z0 - A.truncation();
        if (!(out.dropped_remainder_order < -model.summability_degree()))
            throw TruncationError("tr_mer: truncation N=" + std::to_string(A.truncation()) +
                                  " leaves a remainder of order " + std::to_string(out.dropped_remainder_order) +
                                  " that is not trace class at the requested point (need N > Re(a) + n - q Re(z0))");
    }

    for (auto const& [key, fam] : A.terms()) {
        BFamily<S> const f = fam.center() == z0 ? fam : fam.recentered(z0);
        // Group family coefficients by word: word -> Taylor coefficients in (z - z0).
        std::map<Word, std::vector<S>> by_word;
        for (int m = 0; m <= f.order(); ++m)
            for (auto const& [w, c] : f[m].terms()) {
                auto& v = by_word[w];
                v.resize(static_cast<std::size_t>(f.order()) + 1, S{});
                v[m] = c;
            }
        S const shift = from_ratio<S>(key.j) - a; // w = q z + shift
        S const w0 = q * z0 + shift;
        for (auto const& [w, coeffs] : by_word) {
            auto g = model.word_trace(w, w0, kbound, K + key.l);
            if (g.pole_order() > kbound + 1)
                throw ModelContractViolation("pole multiplicity", "germ of " + w.str() + " has pole order " +
                                                                      std::to_string(g.pole_order()) + " > k+1");
            g = detail::minus_derivative(g, key.l);
            auto const in_z = recenter_affine(g, q, shift).translated(z0);
            int const need = K + in_z.pole_order();
            if (need > f.order() && !f.exact())
                throw TruncationError("tr_mer: family truncation too short for the requested Laurent depth");
            auto const contribution =
                (LaurentJet<S>(detail::padded_jet(coeffs, z0, need)) * in_z).truncated(K);
            out.germ = out.germ + contribution;
            if (audit)
                out.contributing_terms.emplace_back(
                    "j=" + std::to_string(key.j) + ",l=" + std::to_string(key.l) + "," + w.str(), contribution);
        }
    }
    return out;
}

/// A |D|^{-z}: the weight attached to an operator of constant order.
template <Scalar S> Symbol<S> weighted(Symbol<S> const& A, S const& q = from_ratio<S>(1))
{
    if (!is_zero(A.order().q)) throw IncompatibleOrders("weighted: expected an operator of constant order");
    Symbol<S> r(AffineOrder<S>{A.order().a, q}, A.truncation());
    for (auto const& [k, f] : A.terms()) r.add(k, f);
    return r;
}

/// tau_j(A) = Res^{j+1}_0 Tr(A |D|^{-z})^{mer}; j = -1 is the finite part.
template <Scalar S> S tau(int j, Symbol<S> const& A, TraceModel<S> const& model, int K = -1)
{
    if (j < -1) throw std::invalid_argument("tau: j must be >= -1");
    if (j > model.pole_multiplicity_bound()) return S{};
    if (A.is_zero()) return S{};
    return residue(tr_mer(weighted(A), S{}, model, K).germ, j);
}

/// Outcome of one verification.
struct CheckReport
{
    std::string check_name;
    std::string anchor;
    FloatComplex lhs{};
    FloatComplex rhs{};
    std::string lhs_exact; ///< exact values on the rational backend, empty otherwise
    std::string rhs_exact;
    double abs_err = 0.0;
    double rel_err = 0.0;
    double tolerance = 0.0;
    bool exact = false;
    bool pass = false;
    bool skipped = false;
    std::string notes;
};

/// pass <=> abs_err <= tol or rel_err <= tol; the exact backend demands equality.
template <Scalar S>
CheckReport make_report(std::string name, std::string anchor, S const& lhs, S const& rhs, double tol,
                        std::string notes = {})
{
    CheckReport r;
    r.check_name = std::move(name);
    r.anchor = std::move(anchor);
    r.lhs = to_complex(lhs);
    r.rhs = to_complex(rhs);
    r.abs_err = std::abs(r.lhs - r.rhs);
    double const scale = std::max(std::abs(r.lhs), std::abs(r.rhs));
    r.rel_err = scale > 0 ? r.abs_err / scale : 0.0;
    r.tolerance = tol;
    r.notes = std::move(notes);
    if constexpr (scalar_traits<S>::exact) {
        r.exact = true;
        r.lhs_exact = to_string(lhs);
        r.rhs_exact = to_string(rhs);
        r.pass = lhs == rhs;
    } else {
        r.pass = r.abs_err <= tol || r.rel_err <= tol;
    }
    return r;
}

inline CheckReport skipped_report(std::string name, std::string anchor, std::string reason)
{
    CheckReport r;
    r.check_name = std::move(name);
    r.anchor = std::move(anchor);
    r.skipped = true;
    r.pass = true;
    r.notes = std::move(reason);
    return r;
}

/// Residue of the family's trace at 0 against
///     sum_{n=0}^{k-j} tau_{j+n}( d^n_z(A(z)|D|^{qz})|_0 ) / (q^{j+n+1} n!).
template <Scalar S>
CheckReport residue_theorem_check(Symbol<S> const& A, int j, TraceModel<S> const& model, double tol, int K = -1)
{
    int const k = model.pole_multiplicity_bound();
    if (j < -1 || j > k) throw std::invalid_argument("residue_theorem_check: j must lie in [-1, k]");
    S const q = A.order().q;
    if (!(to_complex(q).real() > 0.0) || to_complex(q).imag() != 0.0)
        throw IncompatibleOrders("residue_theorem_check: the order slope q must be positive");

    S const lhs = residue(tr_mer(A, S{}, model, K).germ, j);
    S rhs{};
    for (int n = 0; n <= k - j; ++n) {
        auto const C = compensated_derivative_at_zero(A, n);
        S const t = tau(j + n, C, model, K);
        S const den = int_power(q, j + n + 1) * scalar_traits<S>::from_rational(factorial(n));
        rhs += scalar_traits<S>::divide(t, den);
    }
    return make_report("residue_theorem", "higher residue theorem j=" + std::to_string(j), lhs, rhs, tol);
}

/// Calculus parameters for expansions of (|D| + P)^{-z} and log(|D| + P).
struct PerturbationSettings
{
    int N = 6;
    PerturbationBounds bounds{5, 4};
    int M_ch = 5;
    AlgebraLimits limits{};
};

/// tau^{|D|+P}_j(A) = Res^{j+1}_0 Tr(A (|D|+P)^{-z})^{mer}.
template <Scalar S>
S tau_perturbed(int j, Symbol<S> const& A, Symbol<S> const& P, TraceModel<S> const& model,
                PerturbationSettings const& ps, int K = -1)
{
    if (j > model.pole_multiplicity_bound()) return S{};
    auto const weight = perturbed_power(P, ps.N, ps.bounds, ps.limits);
    return residue(tr_mer(sym_mul(A, weight, ps.N, ps.limits), S{}, model, K).germ, j);
}

/// tau^{|D|+P}_j(A) - tau_j(A) against
///     sum_{n=1}^{k-j} tau_{j+n}(A d^n_z((|D|+P)^{-z}|D|^z)|_0) / n!.
/// For j = k the right-hand side is empty: tau_k does not see the perturbation.
template <Scalar S>
CheckReport weight_discrepancy_check(int j, Symbol<S> const& A, Symbol<S> const& P, TraceModel<S> const& model,
                                     PerturbationSettings const& ps, double tol, int K = -1)
{
    int const k = model.pole_multiplicity_bound();
    if (j < -1 || j > k) throw std::invalid_argument("weight_discrepancy_check: j must lie in [-1, k]");
    S const lhs = tau_perturbed(j, A, P, model, ps, K) - tau(j, A, model, K);
    auto const weight = perturbed_power(P, ps.N, ps.bounds, ps.limits);
    S rhs{};
    for (int n = 1; n <= k - j; ++n) {
        auto const C = sym_mul(A, compensated_derivative_at_zero(weight, n), ps.N, ps.limits);
        rhs += scalar_traits<S>::divide(tau(j + n, C, model, K), scalar_traits<S>::from_rational(factorial(n)));
    }
    std::string const anchor =
        j == k ? "weight invariance of tau_k" : "weight discrepancy j=" + std::to_string(j);
    return make_report("weight_discrepancy", anchor, lhs, rhs, tol);
}

/// For k = 0: tau^{|D|+P}_{-1}(A) - tau_{-1}(A) = tau_0(A (log|D| - log(|D|+P))),
/// with the logarithm difference taken from the Campbell-Hausdorff expansion.
template <Scalar S>
CheckReport weight_discrepancy_log_check(Symbol<S> const& A, Symbol<S> const& P, TraceModel<S> const& model,
                                         PerturbationSettings const& ps, double tol, int K = -1)
{
    if (model.pole_multiplicity_bound() != 0)
        return skipped_report("weight_discrepancy_log", "log form of the weight discrepancy",
                              "the logarithmic form applies to k = 0 only");
    S const lhs = tau_perturbed(-1, A, P, model, ps, K) - tau(-1, A, model, K);
    auto const logdiff = log_difference(P, ps.M_ch, ps.N, ps.limits);
    S const rhs = S{} - tau(0, sym_mul(A, logdiff, ps.N, ps.limits), model, K);
    return make_report("weight_discrepancy_log", "log form of the weight discrepancy", lhs, rhs, tol,
                       "inner logarithm uses the Mercator coefficients 1/i");
}

/// tau_j([A,B]) against sum_{n=1}^{k-j} (-1)^{n+1} tau_{j+n}(A L^n(B)) / n!, L = [log|D|, .].
/// For j = k the right-hand side is empty: tau_k vanishes on commutators.
template <Scalar S>
CheckReport commutator_discrepancy_check(int j, Symbol<S> const& A, Symbol<S> const& B, TraceModel<S> const& model,
                                         int N, double tol, AlgebraLimits const& limits = {}, int K = -1)
{
    int const k = model.pole_multiplicity_bound();
    if (j < -1 || j > k) throw std::invalid_argument("commutator_discrepancy_check: j must lie in [-1, k]");
    S const lhs = tau(j, sym_bracket(A, B, N, limits), model, K);
    S rhs{};
    for (int n = 1; n <= k - j; ++n) {
        auto const C = sym_mul(A, log_ad_power(B, n, N, limits), N, limits);
        S const t = scalar_traits<S>::divide(tau(j + n, C, model, K), scalar_traits<S>::from_rational(factorial(n)));
        rhs = n % 2 == 1 ? rhs + t : rhs - t;
    }
    std::string const anchor =
        j == k ? "tau_k vanishes on commutators" : "commutator discrepancy j=" + std::to_string(j);
    return make_report("commutator_discrepancy", anchor, lhs, rhs, tol);
}

/// For k = 0: tau_{-1}([A,B]) = tau_0(A (log|D| B - B log|D|)), with both
/// products brought to right-normal form directly.
template <Scalar S>
CheckReport commutator_discrepancy_log_check(Symbol<S> const& A, Symbol<S> const& B, TraceModel<S> const& model, int N,
                                             double tol, AlgebraLimits const& limits = {}, int K = -1)
{
    std::string const anchor = "log form of the commutator discrepancy";
    if (model.pole_multiplicity_bound() != 0)
        return skipped_report("commutator_discrepancy_log", anchor, "the logarithmic form applies to k = 0 only");
    S const lhs = tau(-1, sym_bracket(A, B, N, limits), model, K);
    auto const LB = sym_sub(commute_log(B, N, limits), sym_mul(B, Symbol<S>::log_power(1), N, limits));
    S const rhs = tau(0, sym_mul(A, LB, N, limits), model, K);
    return make_report("commutator_discrepancy_log", anchor, lhs, rhs, tol);
}

/// Whether an operator of order `a` (at z = 0) lies in -Sd.
template <Scalar S> bool order_in_minus_sd(S const& a, TraceModel<S> const& model)
{
    return model.in_dimension_spectrum(S{} - a);
}

/// tau_{-1}(A) for an operator whose order does not lie in -Sd.  The germ of
/// Tr(A|D|^{-z}) is then regular at 0, so every tau_j(A) with j >= 0 vanishes;
/// residues above `tol` are reported as a model contract violation.
template <Scalar S>
S canonical_trace(Symbol<S> const& A, TraceModel<S> const& model, double tol = 1e-9, int K = -1)
{
    if (order_in_minus_sd(A.order().a, model))
        throw OrderInDimensionSpectrum("canonical trace undefined: order " + to_string(A.order().a) + " lies in -Sd");
    auto const germ = tr_mer(weighted(A), S{}, model, K).germ;
    for (int j = 0; j < germ.pole_order(); ++j) {
        double const r = std::abs(to_complex(residue(germ, j)));
        if constexpr (scalar_traits<S>::exact) {
            if (r != 0.0)
                throw ModelContractViolation("regularity off -Sd", "residue at an order outside -Sd");
        } else if (r > tol) {
            throw ModelContractViolation("regularity off -Sd", "tau_" + std::to_string(j) + " = " +
                                                                   std::to_string(r) + " for an order outside -Sd");
        }
    }
    return residue(germ, -1);
}

/// tau_{-1}([A,B]) = 0 when ord(A) + ord(B) is not in -Sd; otherwise the check is skipped.
template <Scalar S>
CheckReport canonical_trace_commutator_check(Symbol<S> const& A, Symbol<S> const& B, TraceModel<S> const& model,
                                             int N, double tol, AlgebraLimits const& limits = {}, int K = -1)
{
    std::string const anchor = "canonical trace vanishes on commutators";
    S const total = A.order().a + B.order().a;
    if (order_in_minus_sd(total, model))
        return skipped_report("canonical_trace_commutator", anchor,
                              "order " + to_string(total) + " of the commutator lies in -Sd");
    S const value = canonical_trace(sym_bracket(A, B, N, limits), model, tol, K);
    return make_report("canonical_trace_commutator", anchor, value, S{}, tol);
}

/// tau_{-1}^{|D|+P}(A) against tau_{-1}(A) for an operator of order outside -Sd.
template <Scalar S>
CheckReport canonical_trace_perturbation_check(Symbol<S> const& A, Symbol<S> const& P, TraceModel<S> const& model,
                                               PerturbationSettings const& ps, double tol, int K = -1)
{
    std::string const anchor = "canonical trace is insensitive to weight perturbations";
    S const plain = canonical_trace(A, model, tol, K);
    S const perturbed = tau_perturbed(-1, A, P, model, ps, K);
    return make_report("canonical_trace_perturbation", anchor, perturbed, plain, tol);
}

} // namespace nctrace
