#pragma once

// Time integration of
//   rho_t = Lap(rho^m) + s div(rho grad c) + a rho^eta - b rho^alpha Int(rho^beta),
// c = U * rho, s = +1 (attractive) or -1 (repulsive), with conservative
// finite volumes on a radial mesh (explicit Euler) or a periodic box (IMEX
// Euler, diffusion linearised implicitly).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chemolab/error.hpp"
#include "chemolab/geometry.hpp"
#include "chemolab/params.hpp"
#include "chemolab/potential.hpp"

namespace chemolab {

enum class Scheme { explicit_radial, semi_implicit_box };

inline std::string_view to_string(Scheme s) {
    return s == Scheme::explicit_radial ? "explicit_radial" : "semi_implicit_box";
}

inline Scheme scheme_from_string(std::string_view s) {
    if (s == "explicit_radial") return Scheme::explicit_radial;
    if (s == "semi_implicit_box") return Scheme::semi_implicit_box;
    throw Error(ErrorCode::ConfigError, "unknown scheme '" + std::string(s) + "'");
}

enum class Verdict { bounded, blow_up, inconclusive };

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::bounded: return "bounded";
        case Verdict::blow_up: return "blow_up";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

inline Verdict verdict_from_string(std::string_view s) {
    if (s == "bounded") return Verdict::bounded;
    if (s == "blow_up") return Verdict::blow_up;
    if (s == "inconclusive") return Verdict::inconclusive;
    throw Error(ErrorCode::ConfigError, "unknown verdict '" + std::string(s) + "'");
}

struct SolverConfig {
    double t_end = 1.0;
    double dt_init = 1e-4;
    double dt_min = 1e-12;
    double cfl_safety = 0.4;
    /// Regularisation of rho^m as (rho + eps)^m - eps^m.
    double eps = 1e-8;
    /// Absolute L-infinity blow-up threshold; <= 0 means blowup_factor * ||rho0||_inf.
    double blowup_linf_threshold = 0.0;
    double blowup_factor = 1e6;
    Scheme scheme = Scheme::explicit_radial;
    /// Norm sampling cadence; <= 0 means t_end / 200.
    double sample_interval = 0.0;
    std::vector<double> p_list{2.0};
    bool keep_snapshots = false;
    /// Radial only: subtract the domain-mean density from the Poisson source,
    /// which is what the periodic box does implicitly.
    bool neutralizing_background = false;
    int pinned_steps_limit = 100;
    double tail_fraction = 0.1;
    /// Relative rise tolerated between consecutive tail samples of ||rho||_inf.
    double tail_tolerance = 1e-9;
    double boundary_radius_fraction = 0.9;
    /// Mass fraction beyond boundary_radius_fraction * r_max that flags a run.
    double boundary_mass_tolerance = 1e-6;
    std::size_t max_steps = 50'000'000;

    bool operator==(const SolverConfig&) const = default;
};

inline void validate(const SolverConfig& c) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw Error(ErrorCode::ConfigError, msg);
    };
    require(c.t_end > 0.0, "t_end must be > 0");
    require(c.dt_init > 0.0, "dt_init must be > 0");
    require(c.dt_min > 0.0 && c.dt_min < c.dt_init, "need 0 < dt_min < dt_init");
    require(c.cfl_safety > 0.0 && c.cfl_safety <= 1.0, "cfl_safety must lie in (0,1]");
    require(c.eps >= 0.0, "eps must be >= 0");
    require(c.blowup_factor > 1.0, "blowup_factor must be > 1");
    require(c.pinned_steps_limit >= 1, "pinned_steps_limit must be >= 1");
    require(c.tail_fraction > 0.0 && c.tail_fraction < 1.0, "tail_fraction must lie in (0,1)");
    for (double p : c.p_list) require(p >= 1.0, "p_list entries must be >= 1");
}

/// Drift data for one state: face gradients of c on the radial mesh, or c
/// itself on the box (face differences are taken where needed).
struct Drift {
    std::vector<double> face_gradient;  // radial
    std::vector<double> potential;      // box
    double max_gradient = 0.0;
    double mean_density = 0.0;
};

inline Drift compute_drift(const Field& rho, const SolverConfig& cfg) {
    Drift d;
    if (rho.is_radial()) {
        const double bg = cfg.neutralizing_background ? total_mass(rho) / rho.radial().ball_volume() : 0.0;
        d.mean_density = bg;
        d.face_gradient = interaction_gradient_faces(rho, bg);
        d.face_gradient.back() = 0.0;  // closed wall at r_max
        for (double g : d.face_gradient) d.max_gradient = std::max(d.max_gradient, std::abs(g));
        return d;
    }
    BoxInteraction box = interaction_field_box(rho);
    d.mean_density = box.mean_density;
    const BoxGrid& g = rho.box();
    const int N = g.points_per_axis;
    const double h = g.spacing();
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                const double c0 = box.c[g.index(i, j, k)];
                d.max_gradient = std::max({d.max_gradient,
                                           std::abs(box.c[g.index((i + 1) % N, j, k)] - c0) / h,
                                           std::abs(box.c[g.index(i, (j + 1) % N, k)] - c0) / h,
                                           std::abs(box.c[g.index(i, j, (k + 1) % N)] - c0) / h});
            }
    d.potential = std::move(box.c);
    return d;
}

/// a rho^eta - b rho^alpha S with S = Int rho^beta evaluated once.
inline std::vector<double> reaction_term(const Field& rho, const ModelParams& p) {
    std::vector<double> out(rho.size(), 0.0);
    if (p.a == 0.0 && p.b == 0.0) return out;
    const double S = p.b == 0.0 ? 0.0 : power_integral(rho, p.beta);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double v = rho.values[i];
        if (v <= 0.0) continue;
        out[i] = p.a * std::pow(v, p.eta) - p.b * std::pow(v, p.alpha) * S;
    }
    return out;
}

/// (rho + eps)^m - eps^m.
inline double regularized_power(double rho, double m, double eps) {
    return std::pow(rho + eps, m) - std::pow(eps, m);
}

/// Lap of the regularised rho^m: flux form on the radial mesh with a closed
/// wall at r_max, seven-point stencil on the box.
inline std::vector<double> diffusion_term(const Field& rho, double m, double eps) {
    std::vector<double> phi(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) phi[i] = regularized_power(rho.values[i], m, eps);
    if (!rho.is_radial()) return box_laplacian(rho.box(), phi);

    const RadialMesh& mesh = rho.radial();
    const int N = mesh.cells();
    const double dr = mesh.spacing();
    std::vector<double> out(rho.size(), 0.0);
    for (int i = 0; i + 1 < N; ++i) {
        const double flux = mesh.area(mesh.outer_face(i)) * (phi[i + 1] - phi[i]) / dr;
        out[i] += flux;
        out[i + 1] -= flux;
    }
    for (int i = 0; i < N; ++i) out[i] /= mesh.volume(i);
    return out;
}

/// s div(rho grad c) with first-order upwind face densities.
inline std::vector<double> advection_term(const Field& rho, const Drift& drift, Sign sign) {
    const double s = sign_factor(sign);
    std::vector<double> out(rho.size(), 0.0);
    if (rho.is_radial()) {
        const RadialMesh& mesh = rho.radial();
        const int N = mesh.cells();
        for (int i = 0; i + 1 < N; ++i) {
            const double v = -s * drift.face_gradient[i];  // outward velocity
            const double upwind = v > 0.0 ? rho.values[i] : rho.values[i + 1];
            const double outflow = mesh.area(mesh.outer_face(i)) * upwind * v;
            out[i] -= outflow;
            out[i + 1] += outflow;
        }
        for (int i = 0; i < N; ++i) out[i] /= mesh.volume(i);
        return out;
    }
    const BoxGrid& g = rho.box();
    const int N = g.points_per_axis;
    const double inv_h = 1.0 / g.spacing();
    const auto& c = drift.potential;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                const std::size_t here = g.index(i, j, k);
                const std::size_t next[3] = {g.index((i + 1) % N, j, k), g.index(i, (j + 1) % N, k),
                                             g.index(i, j, (k + 1) % N)};
                for (std::size_t nb : next) {
                    const double v = -s * (c[nb] - c[here]) * inv_h;
                    const double upwind = v > 0.0 ? rho.values[here] : rho.values[nb];
                    const double flux = upwind * v * inv_h;
                    out[here] -= flux;
                    out[nb] += flux;
                }
            }
    return out;
}

struct DtChoice {
    double dt = 0.0;
    bool pinned = false;  // the stability bound fell below dt_min
    double diffusion_bound = 0.0;
    double advection_bound = 0.0;
    double reaction_bound = 0.0;
};

inline double grid_spacing(const Field& rho) {
    return rho.is_radial() ? rho.radial().spacing() : rho.box().spacing();
}

inline DtChoice adapt_dt(const Field& rho, const ModelParams& p, const SolverConfig& cfg, const Drift& drift) {
    const auto [lo, hi] = std::minmax_element(rho.values.begin(), rho.values.end());
    const double rho_min = std::max(*lo, 0.0);
    const double rho_max = std::max(*hi, 0.0);
    const int n = dimension(rho.geometry);
    const double h = grid_spacing(rho);

    // phi'(rho) = m (rho + eps)^{m-1} peaks at rho_max for m >= 1, at rho_min otherwise.
    const double at = p.m >= 1.0 ? rho_max : rho_min;
    const double base = at + cfg.eps;
    double d_max = 0.0;
    if (p.m == 1.0) {
        d_max = 1.0;
    } else if (base > 0.0) {
        d_max = p.m * std::pow(base, p.m - 1.0);
    } else {
        d_max = p.m > 1.0 ? 0.0 : INFINITY;
    }

    DtChoice out;
    out.diffusion_bound = d_max > 0.0 ? h * h / (2.0 * n * d_max) : INFINITY;

    // Transport across a face, and compression Lap c = n alpha_n rho inside a cell.
    const double transport = drift.max_gradient > 0.0 ? h / drift.max_gradient : INFINITY;
    const double compression = rho_max > 0.0 ? 1.0 / (n * unit_ball_volume(n) * rho_max) : INFINITY;
    out.advection_bound = std::min(transport, compression);

    double rate = 1e-30;
    if (rho_max > 0.0) {
        const double S = p.b == 0.0 ? 0.0 : power_integral(rho, p.beta);
        rate += p.a * p.eta * std::pow(rho_max, p.eta - 1.0) +
                p.b * (p.alpha + p.beta) * std::pow(rho_max, p.alpha - 1.0) * S;
    }
    out.reaction_bound = 1.0 / rate;

    out.dt = cfg.cfl_safety * std::min({out.diffusion_bound, out.advection_bound, out.reaction_bound});
    if (!(out.dt >= cfg.dt_min)) {
        out.dt = cfg.dt_min;
        out.pinned = true;
    }
    return out;
}

inline DtChoice adapt_dt(const Field& rho, const ModelParams& p, const SolverConfig& cfg) {
    return adapt_dt(rho, p, cfg, compute_drift(rho, cfg));
}

struct StepResult {
    Field field;
    double clipped_mass = 0.0;  // mass added back by clipping negative undershoots
};

namespace detail {

inline void check_scheme(const Field& rho, const SolverConfig& cfg) {
    const bool radial = rho.is_radial();
    if (radial != (cfg.scheme == Scheme::explicit_radial)) {
        throw Error(ErrorCode::InputMismatch, std::string("scheme ") + std::string(to_string(cfg.scheme)) +
                                                  " does not match the field geometry");
    }
}

inline void clip_and_check(StepResult& r) {
    double clipped = 0.0;
    for (std::size_t i = 0; i < r.field.size(); ++i) {
        double& v = r.field.values[i];
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteState, "non-finite density after update");
        if (v < 0.0) {
            clipped -= v * weight(r.field.geometry, i);
            v = 0.0;
        }
    }
    r.clipped_mass = clipped;
}

}  // namespace detail

inline StepResult step(const Field& rho, const ModelParams& p, const SolverConfig& cfg, double dt,
                       const Drift& drift) {
    detail::check_scheme(rho, cfg);
    const std::vector<double> adv = advection_term(rho, drift, p.sign);
    const std::vector<double> react = reaction_term(rho, p);
    StepResult r{rho, 0.0};

    if (cfg.scheme == Scheme::explicit_radial) {
        const std::vector<double> diff = diffusion_term(rho, p.m, cfg.eps);
        for (std::size_t i = 0; i < rho.size(); ++i) {
            r.field.values[i] = rho.values[i] + dt * (diff[i] + adv[i] + react[i]);
        }
    } else {
        // (1 - dt D0 Lap) rho_new = rho + dt (Lap(phi - D0 rho) + adv + react)
        const double rho_max = *std::max_element(rho.values.begin(), rho.values.end());
        const double d0 = p.m * std::pow(std::max(rho_max, 0.0) + cfg.eps, p.m - 1.0);
        std::vector<double> excess(rho.size());
        for (std::size_t i = 0; i < rho.size(); ++i) {
            excess[i] = regularized_power(rho.values[i], p.m, cfg.eps) - d0 * rho.values[i];
        }
        const std::vector<double> lap = box_laplacian(rho.box(), excess);
        std::vector<double> rhs(rho.size());
        for (std::size_t i = 0; i < rho.size(); ++i) {
            rhs[i] = rho.values[i] + dt * (lap[i] + adv[i] + react[i]);
        }
        r.field.values = box_helmholtz_solve(rho.box(), rhs, dt * d0);
    }
    detail::clip_and_check(r);
    return r;
}

inline StepResult step(const Field& rho, const ModelParams& p, const SolverConfig& cfg, double dt) {
    return step(rho, p, cfg, dt, compute_drift(rho, cfg));
}

struct NormRecord {
    double t = 0.0;
    double mass = 0.0;
    std::vector<double> lp;  // one entry per SolverConfig::p_list
    double linf = 0.0;
    double dt = 0.0;
    double int_eta = 0.0;    // Int rho^eta
    double int_alpha = 0.0;  // Int rho^alpha
    double int_beta = 0.0;   // Int rho^beta
    double clipped_mass = 0.0;
};

struct Snapshot {
    double t = 0.0;
    std::vector<double> values;
};

struct RunOutcome {
    ModelParams params;
    Verdict verdict = Verdict::inconclusive;
    std::string reason;
    double t_final = 0.0;
    std::size_t step_count = 0;
    double max_linf = 0.0;
    double blowup_threshold = 0.0;
    double total_clipped_mass = 0.0;
    double eps = 0.0;
    double mean_density_initial = 0.0;
    bool reached_boundary = false;
    std::vector<double> p_list;
    std::vector<NormRecord> norm_series;
    std::vector<Snapshot> snapshots;
    Field final_field;
};

inline double linf_norm(const Field& rho) {
    double m = 0.0;
    for (double v : rho.values) m = std::max(m, v);
    return m;
}

/// Fraction of the mass located beyond `fraction` of the domain radius
/// (radial) or half-width along any axis (box).
inline double outer_mass_fraction(const Field& rho, double fraction) {
    const double mass = total_mass(rho);
    if (!(mass > 0.0)) return 0.0;
    double outer = 0.0;
    if (rho.is_radial()) {
        const RadialMesh& mesh = rho.radial();
        for (int i = 0; i < mesh.cells(); ++i) {
            if (mesh.outer_face(i) > fraction * mesh.r_max()) outer += mesh.volume(i) * rho.values[i];
        }
    } else {
        const BoxGrid& g = rho.box();
        const int N = g.points_per_axis;
        const double lim = fraction * g.extent;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                for (int k = 0; k < N; ++k) {
                    if (std::abs(g.coordinate(i)) > lim || std::abs(g.coordinate(j)) > lim ||
                        std::abs(g.coordinate(k)) > lim) {
                        outer += g.cell_volume() * rho.values[g.index(i, j, k)];
                    }
                }
    }
    return outer / mass;
}

inline NormRecord make_record(const Field& rho, const ModelParams& p, const std::vector<double>& p_list,
                              double t, double dt, double clipped) {
    NormRecord r;
    r.t = t;
    r.dt = dt;
    r.mass = total_mass(rho);
    r.linf = linf_norm(rho);
    for (double q : p_list) r.lp.push_back(std::pow(power_integral(rho, q), 1.0 / q));
    r.int_eta = power_integral(rho, p.eta);
    r.int_alpha = power_integral(rho, p.alpha);
    r.int_beta = power_integral(rho, p.beta);
    r.clipped_mass = clipped;
    return r;
}

/// Bounded-verdict surrogate: ||rho||_inf does not rise across the samples
/// in the last tail_fraction of the run (within tail_tolerance, relative).
inline bool tail_non_increasing(const std::vector<NormRecord>& series, double tail_fraction, double tol) {
    if (series.size() < 2) return true;
    const double t_end = series.back().t;
    const double start = t_end * (1.0 - tail_fraction);
    const NormRecord* prev = nullptr;
    for (const auto& rec : series) {
        if (rec.t < start) continue;
        if (prev != nullptr && rec.linf > prev->linf * (1.0 + tol)) return false;
        prev = &rec;
    }
    return true;
}

inline RunOutcome run(const Field& rho0, const ModelParams& p, const SolverConfig& cfg) {
    validate_for_dynamics(p);
    validate(cfg);
    detail::check_scheme(rho0, cfg);
    if (dimension(rho0.geometry) != p.n) {
        throw Error(ErrorCode::InputMismatch, "field dimension differs from model dimension");
    }
    for (double v : rho0.values) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidParams, "initial density must be finite and >= 0");
    }

    RunOutcome out;
    out.params = p;
    out.eps = cfg.eps;
    out.p_list = cfg.p_list;
    const double linf0 = linf_norm(rho0);
    out.blowup_threshold = cfg.blowup_linf_threshold > 0.0 ? cfg.blowup_linf_threshold
                                                           : cfg.blowup_factor * (linf0 > 0.0 ? linf0 : 1.0);
    if (!(out.blowup_threshold > linf0)) {
        throw Error(ErrorCode::ConfigError, "blowup_linf_threshold must exceed ||rho0||_inf");
    }
    const double cadence = cfg.sample_interval > 0.0 ? cfg.sample_interval : cfg.t_end / 200.0;

    Field rho = rho0;
    double t = 0.0;
    double dt_prev = cfg.dt_init;
    bool first = true;
    double linf_prev = linf0;
    out.max_linf = linf0;
    int pinned_run = 0;
    double clipped_since_sample = 0.0;
    double next_sample = cadence;
    double last_dt = 0.0;
    {
        const Drift d0 = compute_drift(rho, cfg);
        out.mean_density_initial = d0.mean_density;
    }

    auto sample = [&](double dt_used) {
        out.norm_series.push_back(make_record(rho, p, cfg.p_list, t, dt_used, clipped_since_sample));
        clipped_since_sample = 0.0;
        if (cfg.keep_snapshots) out.snapshots.push_back({t, rho.values});
        if (outer_mass_fraction(rho, cfg.boundary_radius_fraction) > cfg.boundary_mass_tolerance) {
            out.reached_boundary = true;
        }
    };
    sample(0.0);

    const double t_stop = cfg.t_end * (1.0 - 1e-14);
    while (t < t_stop) {
        if (out.step_count >= cfg.max_steps) {
            out.verdict = Verdict::inconclusive;
            out.reason = "step budget exhausted";
            break;
        }
        const Drift drift = compute_drift(rho, cfg);
        const DtChoice choice = adapt_dt(rho, p, cfg, drift);
        double dt = first ? std::min(choice.dt, cfg.dt_init) : std::min(choice.dt, 2.0 * dt_prev);
        if (choice.pinned) dt = cfg.dt_min;
        dt_prev = dt;
        first = false;
        bool at_sample = false;
        if (t + dt >= next_sample * (1.0 - 1e-12)) {
            dt = next_sample - t;
            at_sample = true;
        }
        if (t + dt > cfg.t_end) {
            dt = cfg.t_end - t;
            at_sample = true;
        }

        StepResult next;
        try {
            next = step(rho, p, cfg, dt, drift);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NonFiniteState) throw;
            // Report the last finite state.
            ++out.step_count;
            out.verdict = Verdict::blow_up;
            out.reason = "non-finite state";
            out.t_final = t;
            out.final_field = rho;
            return out;
        }
        rho = std::move(next.field);
        t += dt;
        last_dt = dt;
        ++out.step_count;
        out.total_clipped_mass += next.clipped_mass;
        clipped_since_sample += next.clipped_mass;

        const double linf = linf_norm(rho);
        out.max_linf = std::max(out.max_linf, linf);
        pinned_run = (choice.pinned && linf > linf_prev) ? pinned_run + 1 : 0;
        linf_prev = linf;

        if (at_sample) {
            sample(dt);
            while (next_sample <= t * (1.0 + 1e-12)) next_sample += cadence;
        }
        if (linf > out.blowup_threshold) {
            out.verdict = Verdict::blow_up;
            out.reason = "L-infinity threshold exceeded";
            break;
        }
        if (pinned_run >= cfg.pinned_steps_limit) {
            out.verdict = Verdict::blow_up;
            out.reason = "time step collapsed to dt_min with rising L-infinity norm";
            break;
        }
    }

    out.t_final = t;
    if (out.norm_series.back().t < t) sample(last_dt);
    out.final_field = rho;
    if (out.verdict == Verdict::blow_up || !out.reason.empty()) return out;

    if (out.reached_boundary) {
        out.verdict = Verdict::inconclusive;
        out.reason = "mass reached the outer boundary region";
    } else if (out.max_linf <= out.blowup_threshold &&
               tail_non_increasing(out.norm_series, cfg.tail_fraction, cfg.tail_tolerance)) {
        out.verdict = Verdict::bounded;
        out.reason = "reached t_end with a non-increasing L-infinity tail";
    } else {
        out.verdict = Verdict::inconclusive;
        out.reason = "L-infinity norm still rising at t_end";
    }
    return out;
}

}  // namespace chemolab
