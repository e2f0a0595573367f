#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "chemolab/error.hpp"

namespace chemolab {

/// Orientation of the Newtonian interaction term.
enum class Sign { attractive, repulsive };

inline std::string_view to_string(Sign s) {
    return s == Sign::attractive ? "attractive" : "repulsive";
}

inline Sign sign_from_string(std::string_view s) {
    if (s == "attractive" || s == "+") return Sign::attractive;
    if (s == "repulsive" || s == "-") return Sign::repulsive;
    throw Error(ErrorCode::ConfigError, "unknown interaction sign '" + std::string(s) + "'");
}

/// +1 for attraction, -1 for repulsion.
inline double sign_factor(Sign s) { return s == Sign::attractive ? 1.0 : -1.0; }

/// One instance of
///   rho_t = Lap(rho^m) +/- div(rho grad(U * rho)) + a rho^eta - b rho^alpha Int(rho^beta)
/// with U the Newtonian kernel in n dimensions.
struct ModelParams {
    int n = 3;
    double m = 1.0;
    double a = 1.0;
    double b = 1.0;
    double alpha = 2.0;
    double beta = 2.0;
    double eta = 1.0;
    Sign sign = Sign::attractive;

    bool operator==(const ModelParams&) const = default;
};

namespace detail {
inline void require(bool ok, ErrorCode code, const std::string& msg) {
    if (!ok) throw Error(code, msg);
}
}  // namespace detail

/// Full model invariants: n >= 3, m, a, b, alpha, eta > 0, beta >= 1.
inline void validate(const ModelParams& p) {
    using detail::require;
    require(p.n >= 3, ErrorCode::DimensionTooLow, "n must be >= 3, got " + std::to_string(p.n));
    require(std::isfinite(p.m) && p.m > 0.0, ErrorCode::InvalidParams, "m must be > 0");
    require(std::isfinite(p.a) && p.a > 0.0, ErrorCode::InvalidParams, "a must be > 0");
    require(std::isfinite(p.b) && p.b > 0.0, ErrorCode::InvalidParams, "b must be > 0");
    require(std::isfinite(p.alpha) && p.alpha > 0.0, ErrorCode::InvalidParams, "alpha must be > 0");
    require(std::isfinite(p.beta) && p.beta >= 1.0, ErrorCode::InvalidParams, "beta must be >= 1");
    require(std::isfinite(p.eta) && p.eta > 0.0, ErrorCode::InvalidParams, "eta must be > 0");
}

/// The time integrator also accepts a = b = 0, the source-free model used
/// for conservation and blow-up reference runs.
inline void validate_for_dynamics(const ModelParams& p) {
    using detail::require;
    require(p.n >= 3, ErrorCode::DimensionTooLow, "n must be >= 3, got " + std::to_string(p.n));
    require(std::isfinite(p.m) && p.m > 0.0, ErrorCode::InvalidParams, "m must be > 0");
    require(std::isfinite(p.a) && p.a >= 0.0, ErrorCode::InvalidParams, "a must be >= 0");
    require(std::isfinite(p.b) && p.b >= 0.0, ErrorCode::InvalidParams, "b must be >= 0");
    require(std::isfinite(p.alpha) && p.alpha > 0.0, ErrorCode::InvalidParams, "alpha must be > 0");
    require(std::isfinite(p.beta) && p.beta >= 1.0, ErrorCode::InvalidParams, "beta must be >= 1");
    require(std::isfinite(p.eta) && p.eta > 0.0, ErrorCode::InvalidParams, "eta must be > 0");
}

inline void to_json(nlohmann::json& j, const ModelParams& p) {
    j = nlohmann::json{{"n", p.n},         {"m", p.m},       {"a", p.a},
                       {"b", p.b},         {"alpha", p.alpha}, {"beta", p.beta},
                       {"eta", p.eta},     {"sign", std::string(to_string(p.sign))}};
}

inline void from_json(const nlohmann::json& j, ModelParams& p) {
    p.n = j.at("n").get<int>();
    p.m = j.at("m").get<double>();
    p.a = j.at("a").get<double>();
    p.b = j.at("b").get<double>();
    p.alpha = j.at("alpha").get<double>();
    p.beta = j.at("beta").get<double>();
    p.eta = j.at("eta").get<double>();
    p.sign = sign_from_string(j.at("sign").get<std::string>());
}

}  // namespace chemolab
