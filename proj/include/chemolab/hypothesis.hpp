#pragma once

// Closed-form quantities behind the uniform-in-time boundedness argument:
// the (H1)/(H2) thresholds, the critical test exponent p-bar, the exponent
// ratios used to absorb the reaction terms, and the exponent sequences of
// the Moser-Alikakos iteration.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chemolab/error.hpp"
#include "chemolab/params.hpp"

namespace chemolab {

/// l = 2n/(n-2).
inline double sobolev_exponent(int n) {
    if (n < 3) throw Error(ErrorCode::DimensionTooLow, "n must be >= 3, got " + std::to_string(n));
    return 2.0 * n / (n - 2.0);
}

/// max{(4l-4-ml)/(l-2), (2 eta l - m l - 2 eta)/(l-2), m}
inline double h1_threshold(const ModelParams& p) {
    const double l = sobolev_exponent(p.n);
    const double aggregation = (4.0 * l - 4.0 - p.m * l) / (l - 2.0);
    const double growth = (2.0 * p.eta * l - p.m * l - 2.0 * p.eta) / (l - 2.0);
    return std::max({aggregation, growth, p.m});
}

/// The repulsive threshold drops the aggregation branch of h1_threshold.
inline double h2_threshold(const ModelParams& p) {
    const double l = sobolev_exponent(p.n);
    const double growth = (2.0 * p.eta * l - p.m * l - 2.0 * p.eta) / (l - 2.0);
    return std::max(growth, p.m);
}

/// alpha + beta > (2 eta l - m l - 2 eta)/(l-2), the growth branch alone.
inline bool growth_branch_holds(const ModelParams& p) {
    const double l = sobolev_exponent(p.n);
    return p.alpha + p.beta > (2.0 * p.eta * l - p.m * l - 2.0 * p.eta) / (l - 2.0);
}

/// alpha < 1 + 2 beta / n. For m = 1 and eta = alpha this is the growth
/// branch rewritten; the other two branches of (H1) are not implied by it.
inline bool reduced_linear_condition(const ModelParams& p) {
    return p.alpha < 1.0 + 2.0 * p.beta / p.n;
}

/// The eleven candidates whose maximum is p-bar, in their listed order.
inline std::array<double, 11> p_bar_entries(const ModelParams& p) {
    const double l = sobolev_exponent(p.n);
    const double d = l - 2.0;
    const double m = p.m;
    const double eta = p.eta;
    const double ab = p.alpha + p.beta;
    return {
        1.0,
        (l + 2.0 - l * m) / d,
        -ab + (5.0 * l - 2.0 * l * m - 2.0) / d,
        (2.0 * eta + l - l * m - 2.0) / d,
        -ab + (l + 2.0 * eta * l - 2.0 - 2.0 * m * l) / d,
        m - 1.0,
        ab - 1.0,
        ab + 1.0 - 2.0 * eta,
        1.0 - ab + 2.0 * l * (eta - m) / d,
        1.0 - ab + 2.0 * l * (2.0 - m) / d,
        (2.0 * eta + l - l * m - 2.0) / d,
    };
}

/// p-bar without the (H1) precondition, for reports on out-of-scope parameters.
inline double p_bar_unchecked(const ModelParams& p) {
    const auto entries = p_bar_entries(p);
    return *std::max_element(entries.begin(), entries.end());
}

/// Critical test exponent: every p > p-bar yields an absorptive L^p estimate.
inline double p_bar(const ModelParams& p) {
    if (!(p.alpha + p.beta > h1_threshold(p))) {
        throw Error(ErrorCode::H1Violated, "p_bar requires alpha + beta > h1 threshold");
    }
    return p_bar_unchecked(p);
}

enum class Prediction { bounded, no_guarantee };

inline std::string_view to_string(Prediction p) {
    return p == Prediction::bounded ? "bounded" : "no_guarantee";
}

struct HypothesisReport {
    ModelParams params;
    double l = 0.0;
    double h1_threshold = 0.0;
    double h2_threshold = 0.0;
    double h1_margin = 0.0;  // alpha + beta - h1_threshold
    double h2_margin = 0.0;
    bool h1_holds = false;
    bool h2_holds = false;
    /// False when (H1) fails; p_bar is then reported but carries no guarantee.
    bool p_bar_in_scope = false;
    double p_bar = 0.0;
    bool reduced_linear_condition = false;
    Prediction predicted = Prediction::no_guarantee;
};

/// Evaluates both thresholds regardless of the sign so that margins are
/// always available. The boundedness guarantee additionally needs a, b > 0.
inline HypothesisReport check_hypothesis(const ModelParams& p) {
    validate_for_dynamics(p);
    HypothesisReport r;
    r.params = p;
    r.l = sobolev_exponent(p.n);
    r.h1_threshold = h1_threshold(p);
    r.h2_threshold = h2_threshold(p);
    const double ab = p.alpha + p.beta;
    r.h1_margin = ab - r.h1_threshold;
    r.h2_margin = ab - r.h2_threshold;
    r.h1_holds = ab > r.h1_threshold;
    r.h2_holds = ab > r.h2_threshold;
    r.p_bar = p_bar_unchecked(p);
    r.p_bar_in_scope = r.h1_holds;
    r.reduced_linear_condition = reduced_linear_condition(p);
    const bool source = p.a > 0.0 && p.b > 0.0;
    const bool holds = p.sign == Sign::attractive ? r.h1_holds : r.h2_holds;
    r.predicted = (source && holds) ? Prediction::bounded : Prediction::no_guarantee;
    return r;
}

inline void to_json(nlohmann::json& j, const HypothesisReport& r) {
    j = nlohmann::json{
        {"params", r.params},
        {"l", r.l},
        {"h1_threshold", r.h1_threshold},
        {"h2_threshold", r.h2_threshold},
        {"h1_margin", r.h1_margin},
        {"h2_margin", r.h2_margin},
        {"h1_holds", r.h1_holds},
        {"h2_holds", r.h2_holds},
        {"p_bar", r.p_bar},
        {"p_bar_in_scope", r.p_bar_in_scope},
        {"reduced_linear_condition", r.reduced_linear_condition},
        {"predicted", std::string(to_string(r.predicted))},
    };
}

/// p' = (p + alpha - 1 + beta)/2, checked to lie in (beta, p + alpha - 1).
inline double p_prime(double p_exp, double alpha, double beta) {
    const double value = (p_exp + alpha - 1.0 + beta) / 2.0;
    const double top = p_exp + alpha - 1.0;
    if (!(beta < value && value < top)) {
        throw Error(ErrorCode::IntervalViolation,
                    "p' = " + std::to_string(value) + " not in (" + std::to_string(beta) + ", " +
                        std::to_string(top) + ")");
    }
    return value;
}

struct LambdaTriple {
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double lambda_eta = 0.0;
};

/// Numerators and denominators of the three absorption ratios, unreduced.
struct LambdaFractions {
    std::array<double, 3> numerator{};
    std::array<double, 3> denominator{};

    LambdaTriple ratios() const {
        return {numerator[0] / denominator[0], numerator[1] / denominator[1],
                numerator[2] / denominator[2]};
    }
};

inline LambdaFractions lambda_fractions(double p_exp, const ModelParams& p) {
    const double l = sobolev_exponent(p.n);
    const double m = p.m;
    const double eta = p.eta;
    const double base = (l - 2.0) * (p.alpha + p.beta + p_exp);
    LambdaFractions f;
    f.numerator[0] = p_exp * (l - 2.0) + l * (m - 1.0);
    f.denominator[0] = base - 3.0 * l + p.alpha * l + 2.0 * m * l;
    f.numerator[1] = p_exp * (l - 2.0) + (m - 1.0) * l - 2.0;
    f.denominator[1] = base - 5.0 * l + 2.0 + 2.0 * m * l;
    f.numerator[2] = 2.0 - 2.0 * eta + p_exp * (l - 2.0) + l * (m - 1.0);
    f.denominator[2] = base + 2.0 + 2.0 * m * l - l - 2.0 * eta * l;
    return f;
}

/// The three ratios, each required to lie in (0,1).
inline LambdaTriple lambda_tildes(double p_exp, const ModelParams& p) {
    const LambdaTriple t = lambda_fractions(p_exp, p).ratios();
    auto inside = [](double v) { return v > 0.0 && v < 1.0; };
    if (!(inside(t.lambda0) && inside(t.lambda1) && inside(t.lambda_eta))) {
        throw Error(ErrorCode::RangeViolation,
                    "lambda ratios (" + std::to_string(t.lambda0) + ", " + std::to_string(t.lambda1) +
                        ", " + std::to_string(t.lambda_eta) + ") leave (0,1)");
    }
    return t;
}

inline void to_json(nlohmann::json& j, const LambdaTriple& t) {
    j = nlohmann::json{{"lambda0", t.lambda0}, {"lambda1", t.lambda1}, {"lambdaEta", t.lambda_eta}};
}

/// Which side condition the Gagliardo-Nirenberg interpolation is checked
/// against: q/r < 2/r + 1 - 2/l (strict, equivalent to 2 - lambda q > 0) or
/// the looser q/r < 2/r + 1 + 2/l.
enum class GNAdmissibility { strict, loose };

struct GNExponents {
    double q = 0.0;
    double r = 0.0;
    double l = 0.0;
    double lambda = 0.0;
    double gamma = 0.0;
};

inline GNExponents gn_exponents(double q, double r, double l,
                                GNAdmissibility rule = GNAdmissibility::strict) {
    const double side = rule == GNAdmissibility::strict ? -2.0 / l : 2.0 / l;
    if (!(1.0 <= r && r < q && q < l)) {
        throw Error(ErrorCode::InadmissibleExponents,
                    "need 1 <= r < q < l, got q=" + std::to_string(q) + " r=" + std::to_string(r) +
                        " l=" + std::to_string(l));
    }
    if (!(q / r < 2.0 / r + 1.0 + side)) {
        throw Error(ErrorCode::InadmissibleExponents,
                    "q/r = " + std::to_string(q / r) + " violates the side condition");
    }
    GNExponents g{q, r, l, 0.0, 0.0};
    g.lambda = (1.0 / r - 1.0 / q) / (1.0 / r - 1.0 / l);
    const double slack = 2.0 - g.lambda * q;
    if (!(slack > 0.0)) {
        throw Error(ErrorCode::InadmissibleExponents, "2 - lambda q = " + std::to_string(slack));
    }
    g.gamma = 2.0 * (1.0 - g.lambda) * q / slack;
    return g;
}

/// Interpolation weight of the L^beta norm when bounding L^{p'} between
/// L^beta and L^top.
inline double interpolation_a1(double p_prime_exp, double beta, double top) {
    if (!(beta <= p_prime_exp && p_prime_exp <= top && beta < top)) {
        throw Error(ErrorCode::OrderingViolation,
                    "need beta <= p' <= top and beta < top, got beta=" + std::to_string(beta) +
                        " p'=" + std::to_string(p_prime_exp) + " top=" + std::to_string(top));
    }
    const double a1 = (1.0 / p_prime_exp - 1.0 / top) / (1.0 / beta - 1.0 / top);
    if (!(a1 >= 0.0 && a1 <= 1.0)) {
        throw Error(ErrorCode::OrderingViolation, "a1 = " + std::to_string(a1) + " outside [0,1]");
    }
    return a1;
}

/// c1 = 2 m p (p-1) / (m + p - 1)^2, the weight of Int |grad rho^{(m+p-1)/2}|^2
/// in the L^p energy identity.
inline double dissipation_c1(double p_exp, double m) {
    const double s = m + p_exp - 1.0;
    return 2.0 * m * p_exp * (p_exp - 1.0) / (s * s);
}

/// Convention for the lower exponent r_k of the iteration step.
///   unshifted: r_k = 2 p_{k-1} / (m + p_k - 1)        (default)
///   shifted:   r_k = 2 (p_{k-1} + 1) / (m + p_k - 1)
enum class MoserConvention { unshifted, shifted };

struct MoserRow {
    int k = 0;
    double p_k = 0.0;
    double q1_k = 0.0;
    double qEta_k = 0.0;
    double q0_k = 0.0;
    double r_k = 0.0;
    double lambda1_k = 0.0;
    double lambdaEta_k = 0.0;
    double lambda0_k = 0.0;
    double mu1_k = 0.0;
    double muEta_k = 0.0;
    double mu0_k = 0.0;
};

/// Exponent table of the iteration with p_k = 2^k + p-bar for k = 1..k_max.
inline std::vector<MoserRow> moser_table(const ModelParams& p, int k_max,
                                         MoserConvention conv = MoserConvention::unshifted) {
    if (k_max < 1) throw Error(ErrorCode::InvalidParams, "k_max must be >= 1");
    const double pb = p_bar(p);
    const double l = sobolev_exponent(p.n);
    std::vector<MoserRow> rows;
    rows.reserve(static_cast<std::size_t>(k_max));
    for (int k = 1; k <= k_max; ++k) {
        MoserRow row;
        row.k = k;
        row.p_k = std::ldexp(1.0, k) + pb;
        const double prev = std::ldexp(1.0, k - 1) + pb;
        const double denom = p.m + row.p_k - 1.0;
        row.q1_k = 2.0 * (row.p_k + 1.0) / denom;
        row.qEta_k = 2.0 * (row.p_k + p.eta - 1.0) / denom;
        row.q0_k = 2.0 * row.p_k / denom;
        row.r_k = conv == MoserConvention::unshifted ? 2.0 * prev / denom : 2.0 * (prev + 1.0) / denom;

        const GNExponents g1 = gn_exponents(row.q1_k, row.r_k, l);
        const GNExponents geta = gn_exponents(row.qEta_k, row.r_k, l);
        const GNExponents g0 = gn_exponents(row.q0_k, row.r_k, l);
        row.lambda1_k = g1.lambda;
        row.lambdaEta_k = geta.lambda;
        row.lambda0_k = g0.lambda;
        row.mu1_k = g1.gamma / row.r_k;
        row.muEta_k = geta.gamma / row.r_k;
        row.mu0_k = g0.gamma / row.r_k;
        if (row.mu1_k > 2.0 || row.muEta_k > 2.0 || row.mu0_k > 2.0) {
            throw Error(ErrorCode::MuBoundViolation, "mu exceeds 2 at k=" + std::to_string(k));
        }
        rows.push_back(row);
    }
    return rows;
}

inline void to_json(nlohmann::json& j, const MoserRow& r) {
    j = nlohmann::json{{"k", r.k},
                       {"p_k", r.p_k},
                       {"q1_k", r.q1_k},
                       {"qEta_k", r.qEta_k},
                       {"q0_k", r.q0_k},
                       {"r_k", r.r_k},
                       {"lambda1_k", r.lambda1_k},
                       {"lambdaEta_k", r.lambdaEta_k},
                       {"lambda0_k", r.lambda0_k},
                       {"mu1_k", r.mu1_k},
                       {"muEta_k", r.muEta_k},
                       {"mu0_k", r.mu0_k}};
}

struct RecursiveBound {
    double value = 0.0;
    bool overflow = false;
};

/// L^k * M0^(2^k). Evaluated in log space; +inf with overflow set when the
/// result does not fit a double.
inline RecursiveBound recursive_bound(double L, double M0, int k) {
    if (!(L > 0.0) || !(M0 >= 1.0) || k < 1) {
        throw Error(ErrorCode::InvalidParams, "recursive_bound needs L > 0, M0 >= 1, k >= 1");
    }
    const double log_value = k * std::log(L) + std::ldexp(1.0, k) * std::log(M0);
    if (log_value > std::log(std::numeric_limits<double>::max())) {
        return {std::numeric_limits<double>::infinity(), true};
    }
    return {std::exp(log_value), false};
}

/// L^(2^k - 1) * M0^(2^k), the bound obtained by unrolling M_k <= L M_{k-1}^2.
inline RecursiveBound unrolled_recursive_bound(double L, double M0, int k) {
    if (!(L > 0.0) || !(M0 >= 1.0) || k < 1) {
        throw Error(ErrorCode::InvalidParams, "unrolled_recursive_bound needs L > 0, M0 >= 1, k >= 1");
    }
    const double two_k = std::ldexp(1.0, k);
    const double log_value = (two_k - 1.0) * std::log(L) + two_k * std::log(M0);
    if (log_value > std::log(std::numeric_limits<double>::max())) {
        return {std::numeric_limits<double>::infinity(), true};
    }
    return {std::exp(log_value), false};
}

struct RecursionCheck {
    bool recursion_holds = true;      // M_k <= L M_{k-1}^theta_k for all k
    bool stays_below_bound = true;    // M_k <= L^k M_0^(2^k) for all k
    int first_bound_violation = -1;   // k of the first bound violation, -1 if none
};

/// Checks a concrete sequence M_0..M_K (all >= 1) against the recursion with
/// exponents theta_1..theta_K (each in (0,2]) and against recursive_bound.
inline RecursionCheck check_recursive_sequence(std::span<const double> M, std::span<const double> theta,
                                               double L) {
    if (M.empty() || theta.size() + 1 != M.size()) {
        throw Error(ErrorCode::InputMismatch, "need theta.size() == M.size() - 1");
    }
    RecursionCheck out;
    for (std::size_t k = 1; k < M.size(); ++k) {
        if (!(theta[k - 1] > 0.0 && theta[k - 1] <= 2.0) || M[k] < 1.0) {
            throw Error(ErrorCode::InvalidParams, "theta_k must lie in (0,2] and M_k >= 1");
        }
        if (M[k] > L * std::pow(M[k - 1], theta[k - 1])) out.recursion_holds = false;
        const RecursiveBound bound = recursive_bound(L, M[0], static_cast<int>(k));
        if (M[k] > bound.value && out.stays_below_bound) {
            out.stays_below_bound = false;
            out.first_bound_violation = static_cast<int>(k);
        }
    }
    return out;
}

}  // namespace chemolab
