#pragma once

// Norm functionals, integral identities checked as numerical residuals, and
// the atlas that joins numerical verdicts with the theoretical predictions.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "chemolab/dynamics.hpp"
#include "chemolab/error.hpp"
#include "chemolab/geometry.hpp"
#include "chemolab/hypothesis.hpp"
#include "chemolab/initial_data.hpp"
#include "chemolab/params.hpp"

namespace chemolab {

inline constexpr double kInfinityNorm = std::numeric_limits<double>::infinity();

/// (sum_i w_i rho_i^p)^{1/p}; the maximum for p = kInfinityNorm.
inline double lp_norm(const Field& rho, double p_exp) {
    if (std::isinf(p_exp) && p_exp > 0.0) return linf_norm(rho);
    if (!(p_exp >= 1.0)) throw Error(ErrorCode::InvalidExponent, "p must be >= 1, got " + std::to_string(p_exp));
    return std::pow(power_integral(rho, p_exp), 1.0 / p_exp);
}

struct IdentityResidual {
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double rel_residual = 0.0;
};

inline IdentityResidual make_residual(double t, double lhs, double rhs) {
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-30});
    return {t, lhs, rhs, std::abs(lhs - rhs) / scale};
}

/// True when every residual is within rel_tol, or both sides are below
/// abs_floor (an equilibrium, where the relative residual is meaningless).
inline bool residuals_within(std::span<const IdentityResidual> rs, double rel_tol, double abs_floor) {
    return std::all_of(rs.begin(), rs.end(), [&](const IdentityResidual& r) {
        return r.rel_residual <= rel_tol || std::max(std::abs(r.lhs), std::abs(r.rhs)) <= abs_floor;
    });
}

inline double max_rel_residual(std::span<const IdentityResidual> rs) {
    double m = 0.0;
    for (const auto& r : rs) m = std::max(m, r.rel_residual);
    return m;
}

namespace detail {

/// Second-order derivative at the middle of three unevenly spaced samples.
inline double centered_derivative(double t0, double f0, double t1, double f1, double t2, double f2) {
    const double h1 = t1 - t0;
    const double h2 = t2 - t1;
    return -h2 / (h1 * (h1 + h2)) * f0 + (h2 - h1) / (h1 * h2) * f1 + h1 / (h2 * (h1 + h2)) * f2;
}

}  // namespace detail

/// d/dt Int rho  versus  a Int rho^eta - b Int rho^alpha Int rho^beta at every
/// interior sample.
inline std::vector<IdentityResidual> mass_balance_residual(std::span<const NormRecord> series,
                                                           const ModelParams& p) {
    if (series.size() < 3) throw Error(ErrorCode::NotEnoughData, "mass balance needs >= 3 samples");
    std::vector<IdentityResidual> out;
    for (std::size_t k = 1; k + 1 < series.size(); ++k) {
        const auto& a = series[k - 1];
        const auto& b = series[k];
        const auto& c = series[k + 1];
        if (!(b.t > a.t && c.t > b.t)) continue;
        const double lhs = detail::centered_derivative(a.t, a.mass, b.t, b.mass, c.t, c.mass);
        const double rhs = p.a * b.int_eta - p.b * b.int_alpha * b.int_beta;
        out.push_back(make_residual(b.t, lhs, rhs));
    }
    if (out.empty()) throw Error(ErrorCode::NotEnoughData, "no interior samples with distinct times");
    return out;
}

/// Int |grad psi|^2 by face differences, consistent with the flux form of the
/// solver.
inline double gradient_energy(const Geometry& geometry, std::span<const double> psi) {
    double sum = 0.0;
    if (const auto* mesh = std::get_if<RadialMesh>(&geometry)) {
        const double dr = mesh->spacing();
        for (int i = 0; i + 1 < mesh->cells(); ++i) {
            const double d = (psi[i + 1] - psi[i]) / dr;
            sum += mesh->area(mesh->outer_face(i)) * dr * d * d;
        }
        return sum;
    }
    const BoxGrid& g = std::get<BoxGrid>(geometry);
    const int N = g.points_per_axis;
    const double h = g.spacing();
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                const double here = psi[g.index(i, j, k)];
                for (std::size_t nb : {g.index((i + 1) % N, j, k), g.index(i, (j + 1) % N, k),
                                       g.index(i, j, (k + 1) % N)}) {
                    const double d = (psi[nb] - here) / h;
                    sum += d * d;
                }
            }
    return sum * g.cell_volume();
}

/// Terms of the L^p energy identity for one state.
struct LpIdentityTerms {
    double lp_integral = 0.0;   // Int rho^p
    double dissipation = 0.0;   // 2 c1 Int |grad rho^{(m+p-1)/2}|^2
    double damping = 0.0;       // p b Int rho^{p+alpha-1} Int rho^beta
    double growth = 0.0;        // p a Int rho^{p+eta-1}
    double aggregation = 0.0;   // +/- n (p-1) alpha_n Int rho^{p+1}
};

inline LpIdentityTerms lp_identity_terms(const Field& rho, const ModelParams& p, double p_exp) {
    LpIdentityTerms t;
    t.lp_integral = power_integral(rho, p_exp);
    const double s = (p.m + p_exp - 1.0) / 2.0;
    std::vector<double> psi(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) psi[i] = rho.values[i] > 0.0 ? std::pow(rho.values[i], s) : 0.0;
    t.dissipation = 2.0 * dissipation_c1(p_exp, p.m) * gradient_energy(rho.geometry, psi);
    t.damping = p_exp * p.b * power_integral(rho, p_exp + p.alpha - 1.0) * power_integral(rho, p.beta);
    t.growth = p_exp * p.a * power_integral(rho, p_exp + p.eta - 1.0);
    t.aggregation = sign_factor(p.sign) * p.n * (p_exp - 1.0) * unit_ball_volume(p.n) *
                    power_integral(rho, p_exp + 1.0);
    return t;
}

/// Residual of
///   d/dt Int rho^p + 2 c1 Int |grad rho^{(m+p-1)/2}|^2 + p b Int rho^{p+alpha-1} Int rho^beta
///     = p a Int rho^{p+eta-1} +/- n (p-1) alpha_n Int rho^{p+1}
/// at every interior snapshot, with centred time differences.
inline std::vector<IdentityResidual> lp_identity_residual(std::span<const Snapshot> snapshots,
                                                          const Geometry& geometry, const ModelParams& p,
                                                          double p_exp) {
    if (snapshots.size() < 3) throw Error(ErrorCode::NotEnoughData, "identity residual needs >= 3 snapshots");
    std::vector<LpIdentityTerms> terms;
    terms.reserve(snapshots.size());
    for (const auto& s : snapshots) terms.push_back(lp_identity_terms(Field(geometry, s.values), p, p_exp));

    std::vector<IdentityResidual> out;
    for (std::size_t k = 1; k + 1 < snapshots.size(); ++k) {
        const double t0 = snapshots[k - 1].t, t1 = snapshots[k].t, t2 = snapshots[k + 1].t;
        if (!(t1 > t0 && t2 > t1)) continue;
        const double dF = detail::centered_derivative(t0, terms[k - 1].lp_integral, t1, terms[k].lp_integral, t2,
                                                      terms[k + 1].lp_integral);
        const auto& T = terms[k];
        out.push_back(make_residual(t1, dF + T.dissipation + T.damping, T.growth + T.aggregation));
    }
    if (out.empty()) throw Error(ErrorCode::NotEnoughData, "no interior snapshots with distinct times");
    return out;
}

inline std::vector<IdentityResidual> lp_identity_residual(const RunOutcome& run, double p_exp) {
    if (run.snapshots.empty()) throw Error(ErrorCode::NotEnoughData, "run kept no snapshots");
    return lp_identity_residual(run.snapshots, run.final_field.geometry, run.params, p_exp);
}

enum class Consistency { consistent, consistent_with_no_guarantee, counterexample_candidate, inconclusive };

inline std::string_view to_string(Consistency c) {
    switch (c) {
        case Consistency::consistent: return "consistent";
        case Consistency::consistent_with_no_guarantee: return "consistent_with_no_guarantee";
        case Consistency::counterexample_candidate: return "counterexample_candidate";
        case Consistency::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

struct AtlasRecord {
    std::vector<double> coordinates;  // one per sweep axis
    ModelParams params;
    Verdict verdict = Verdict::inconclusive;
    bool h1_holds = false;
    bool h2_holds = false;
    double h1_margin = 0.0;
    double h2_margin = 0.0;
    bool reduced_linear_condition = false;
    Prediction predicted = Prediction::no_guarantee;
    Consistency consistency = Consistency::inconclusive;
    bool refinement_required = false;
    bool refined = false;
    double t_final = 0.0;
    double max_linf = 0.0;
    std::size_t steps = 0;
    std::string reason;

    bool operator==(const AtlasRecord&) const = default;
};

inline AtlasRecord classify(const RunOutcome& outcome, const HypothesisReport& report) {
    if (!(outcome.params == report.params)) {
        throw Error(ErrorCode::InputMismatch, "run and hypothesis report describe different parameters");
    }
    AtlasRecord r;
    r.params = report.params;
    r.verdict = outcome.verdict;
    r.h1_holds = report.h1_holds;
    r.h2_holds = report.h2_holds;
    r.h1_margin = report.h1_margin;
    r.h2_margin = report.h2_margin;
    r.reduced_linear_condition = report.reduced_linear_condition;
    r.predicted = report.predicted;
    r.t_final = outcome.t_final;
    r.max_linf = outcome.max_linf;
    r.steps = outcome.step_count;
    r.reason = outcome.reason;
    if (report.predicted == Prediction::no_guarantee) {
        r.consistency = Consistency::consistent_with_no_guarantee;
    } else if (outcome.verdict == Verdict::bounded) {
        r.consistency = Consistency::consistent;
    } else if (outcome.verdict == Verdict::blow_up) {
        r.consistency = Consistency::counterexample_candidate;
        r.refinement_required = true;
    } else {
        r.consistency = Consistency::inconclusive;
    }
    return r;
}

struct SweepAxis {
    std::string name;  // m, alpha, beta, eta, a, b or mass
    std::vector<double> values;

    bool operator==(const SweepAxis&) const = default;
};

struct SweepSpec {
    std::vector<SweepAxis> axes;
    ModelParams base;
    Geometry geometry;
    InitialData initial;
    SolverConfig solver;
    int threads = 1;
    bool refine_counterexamples = true;
};

struct SweepAtlas {
    std::vector<SweepAxis> axes;
    std::vector<AtlasRecord> records;

    std::size_t unresolved_counterexamples() const {
        return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const AtlasRecord& r) {
            return r.consistency == Consistency::counterexample_candidate;
        }));
    }
};

inline void apply_axis(std::string_view name, double value, ModelParams& p, InitialData& init) {
    if (name == "m") p.m = value;
    else if (name == "alpha") p.alpha = value;
    else if (name == "beta") p.beta = value;
    else if (name == "eta") p.eta = value;
    else if (name == "a") p.a = value;
    else if (name == "b") p.b = value;
    else if (name == "mass") init.mass = value;
    else throw Error(ErrorCode::ConfigError, "unknown sweep axis '" + std::string(name) + "'");
}

/// Same geometry with half the spacing.
inline Geometry refine(const Geometry& g) {
    if (const auto* mesh = std::get_if<RadialMesh>(&g)) {
        return RadialMesh(mesh->n(), mesh->r_max(), 2 * mesh->cells());
    }
    BoxGrid box = std::get<BoxGrid>(g);
    box.points_per_axis *= 2;
    return box;
}

/// Worker count: the requested value capped by CHEMOLAB_THREADS.
inline int resolve_threads(int requested) {
    int n = std::max(1, requested);
    if (const char* env = std::getenv("CHEMOLAB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

inline AtlasRecord run_sweep_point(const SweepSpec& spec, const std::vector<double>& coords) {
    ModelParams p = spec.base;
    InitialData init = spec.initial;
    for (std::size_t a = 0; a < spec.axes.size(); ++a) apply_axis(spec.axes[a].name, coords[a], p, init);

    AtlasRecord record;
    record.coordinates = coords;
    record.params = p;
    try {
        const HypothesisReport report = check_hypothesis(p);
        RunOutcome outcome = run(make_initial_field(spec.geometry, init), p, spec.solver);
        record = classify(outcome, report);
        if (record.consistency == Consistency::counterexample_candidate && spec.refine_counterexamples) {
            SolverConfig finer = spec.solver;
            finer.dt_init *= 0.5;
            finer.dt_min *= 0.5;
            finer.cfl_safety *= 0.5;
            outcome = run(make_initial_field(refine(spec.geometry), init), p, finer);
            record = classify(outcome, report);
            record.refined = true;
        }
    } catch (const std::exception& e) {
        record.verdict = Verdict::inconclusive;
        record.consistency = Consistency::inconclusive;
        record.reason = std::string("failed: ") + e.what();
    }
    record.coordinates = coords;
    return record;
}

/// Runs every point of the Cartesian product of the axes (last axis fastest)
/// and classifies it. Point failures become inconclusive records.
inline SweepAtlas sweep(const SweepSpec& spec) {
    std::vector<std::vector<double>> points{{}};
    for (const auto& axis : spec.axes) {
        if (axis.values.empty()) throw Error(ErrorCode::ConfigError, "sweep axis '" + axis.name + "' has no values");
        std::vector<std::vector<double>> next;
        for (const auto& prefix : points) {
            for (double v : axis.values) {
                auto extended = prefix;
                extended.push_back(v);
                next.push_back(std::move(extended));
            }
        }
        points = std::move(next);
    }

    SweepAtlas atlas;
    atlas.axes = spec.axes;
    atlas.records.resize(points.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (std::size_t i = cursor++; i < points.size(); i = cursor++) {
            atlas.records[i] = run_sweep_point(spec, points[i]);
        }
    };
    const int threads = std::min<int>(resolve_threads(spec.threads), static_cast<int>(points.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return atlas;
}

inline void to_json(nlohmann::json& j, const IdentityResidual& r) {
    j = nlohmann::json{{"t", r.t}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"rel_residual", r.rel_residual}};
}

inline void to_json(nlohmann::json& j, const AtlasRecord& r) {
    j = nlohmann::json{{"coordinates", r.coordinates},
                       {"params", r.params},
                       {"verdict", std::string(to_string(r.verdict))},
                       {"h1_holds", r.h1_holds},
                       {"h2_holds", r.h2_holds},
                       {"h1_margin", r.h1_margin},
                       {"h2_margin", r.h2_margin},
                       {"reduced_linear_condition", r.reduced_linear_condition},
                       {"predicted", std::string(to_string(r.predicted))},
                       {"consistency", std::string(to_string(r.consistency))},
                       {"refinement_required", r.refinement_required},
                       {"refined", r.refined},
                       {"t_final", r.t_final},
                       {"max_linf", r.max_linf},
                       {"steps", r.steps},
                       {"reason", r.reason}};
}

}  // namespace chemolab
