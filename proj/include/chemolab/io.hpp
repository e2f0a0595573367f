#pragma once

// File formats: JSON with 17 significant digits, CSV series with the resolved
// config embedded as '#' comment lines, and the binary field checkpoint.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chemolab/diagnostics.hpp"
#include "chemolab/dynamics.hpp"
#include "chemolab/error.hpp"
#include "chemolab/geometry.hpp"

namespace chemolab {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void dump_json(std::ostream& os, const nlohmann::json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << '{' << nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ',' << nl;
                first = false;
                os << pad << nlohmann::json(it.key()).dump() << (indent > 0 ? ": " : ":");
                dump_json(os, it.value(), indent, depth + 1);
            }
            os << nl << close_pad << '}';
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            os << '[' << nl;
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i > 0) os << ',' << nl;
                os << pad;
                dump_json(os, j[i], indent, depth + 1);
            }
            os << nl << close_pad << ']';
            return;
        }
        case nlohmann::json::value_t::number_float: {
            const double v = j.get<double>();
            // JSON has no literal for non-finite values.
            if (!std::isfinite(v)) {
                os << "null";
            } else {
                os << format_double(v);
            }
            return;
        }
        default:
            os << j.dump();
    }
}

}  // namespace detail

/// Like json::dump, but floats always carry 17 significant digits.
inline std::string dump_json(const nlohmann::json& j, int indent = 2) {
    std::ostringstream os;
    detail::dump_json(os, j, indent, 0);
    return os.str();
}

/// Prefixes every line of `text` with "# ".
inline void write_comment_block(std::ostream& os, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) os << "# " << line << '\n';
}

inline std::string p_column_name(double p) {
    std::string s = format_double(p);
    if (s.find_first_of(".e") != std::string::npos) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", p);
        s = buf;
    }
    return "L" + s;
}

/// Columns: t, mass, L<p> per p_list entry, linf, dt, int_rho_eta,
/// int_rho_alpha, int_rho_beta, clipped_mass.
inline void write_norms_csv(std::ostream& os, const RunOutcome& run, const std::string& config_text) {
    write_comment_block(os, config_text);
    os << "t,mass";
    for (double p : run.p_list) os << ',' << p_column_name(p);
    os << ",linf,dt,int_rho_eta,int_rho_alpha,int_rho_beta,clipped_mass\n";
    for (const auto& r : run.norm_series) {
        os << format_double(r.t) << ',' << format_double(r.mass);
        for (double v : r.lp) os << ',' << format_double(v);
        os << ',' << format_double(r.linf) << ',' << format_double(r.dt) << ',' << format_double(r.int_eta) << ','
           << format_double(r.int_alpha) << ',' << format_double(r.int_beta) << ','
           << format_double(r.clipped_mass) << '\n';
    }
}

inline void write_residuals_csv(std::ostream& os, const std::vector<IdentityResidual>& rs,
                                const std::string& config_text) {
    write_comment_block(os, config_text);
    os << "t,lhs,rhs,rel_residual\n";
    for (const auto& r : rs) {
        os << format_double(r.t) << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
           << format_double(r.rel_residual) << '\n';
    }
}

/// One row per grid point: axis columns, then model and verdict columns; the
/// consistency column is included when compare_theory is set.
inline void write_atlas_csv(std::ostream& os, const SweepAtlas& atlas, bool compare_theory,
                            const std::string& config_text) {
    write_comment_block(os, config_text);
    for (const auto& axis : atlas.axes) os << axis.name << ',';
    os << "n,m,a,b,alpha,beta,eta,sign,verdict,h1_holds,h2_holds,h1_margin,h2_margin,"
          "reduced_linear_condition,predicted";
    if (compare_theory) os << ",consistency,refined";
    os << ",t_final,max_linf,steps,reason\n";
    for (const auto& r : atlas.records) {
        for (double c : r.coordinates) os << format_double(c) << ',';
        const auto& p = r.params;
        os << p.n << ',' << format_double(p.m) << ',' << format_double(p.a) << ',' << format_double(p.b) << ','
           << format_double(p.alpha) << ',' << format_double(p.beta) << ',' << format_double(p.eta) << ','
           << to_string(p.sign) << ',' << to_string(r.verdict) << ',' << (r.h1_holds ? "true" : "false") << ','
           << (r.h2_holds ? "true" : "false") << ',' << format_double(r.h1_margin) << ','
           << format_double(r.h2_margin) << ',' << (r.reduced_linear_condition ? "true" : "false") << ','
           << to_string(r.predicted);
        if (compare_theory) os << ',' << to_string(r.consistency) << ',' << (r.refined ? "true" : "false");
        std::string reason = r.reason;
        for (char& ch : reason) {
            if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
        }
        os << ',' << format_double(r.t_final) << ',' << format_double(r.max_linf) << ',' << r.steps << ','
           << reason << '\n';
    }
}

inline nlohmann::json atlas_json(const SweepAtlas& atlas, bool compare_theory) {
    nlohmann::json axes = nlohmann::json::array();
    for (const auto& a : atlas.axes) axes.push_back({{"name", a.name}, {"values", a.values}});
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : atlas.records) {
        nlohmann::json j = r;
        if (!compare_theory) {
            j.erase("consistency");
            j.erase("refined");
        }
        records.push_back(std::move(j));
    }
    return {{"axes", axes},
            {"records", records},
            {"unresolved_counterexamples", atlas.unresolved_counterexamples()}};
}

// Checkpoint layout (native little-endian):
//   char[8]  magic "CHEMOCHK"
//   u32      format version
//   u32      dimension n
//   u32      geometry kind (0 = box, 1 = radial)
//   f64 u64  extent and points_per_axis (box) or r_max and cells (radial)
//   u64 + bytes  config text
//   u64 + f64[]  row-major samples
inline constexpr char kCheckpointMagic[8] = {'C', 'H', 'E', 'M', 'O', 'C', 'H', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    Field field;
    std::string config_text;
};

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T take(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw Error(ErrorCode::ConfigError, "truncated checkpoint");
    }
    return v;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Field& field, const std::string& config_text) {
    static_assert(std::endian::native == std::endian::little, "checkpoint layout is little-endian");
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    detail::put<std::uint32_t>(os, kCheckpointVersion);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(dimension(field.geometry)));
    if (field.is_radial()) {
        detail::put<std::uint32_t>(os, 1);
        detail::put<double>(os, field.radial().r_max());
        detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(field.radial().cells()));
    } else {
        detail::put<std::uint32_t>(os, 0);
        detail::put<double>(os, field.box().extent);
        detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(field.box().points_per_axis));
    }
    detail::put<std::uint64_t>(os, config_text.size());
    os.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
    detail::put<std::uint64_t>(os, field.values.size());
    os.write(reinterpret_cast<const char*>(field.values.data()),
             static_cast<std::streamsize>(field.values.size() * sizeof(double)));
}

inline Checkpoint read_checkpoint(std::istream& is) {
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
        throw Error(ErrorCode::ConfigError, "not a checkpoint file");
    }
    if (detail::take<std::uint32_t>(is) != kCheckpointVersion) {
        throw Error(ErrorCode::ConfigError, "unsupported checkpoint version");
    }
    const auto n = static_cast<int>(detail::take<std::uint32_t>(is));
    const auto kind = detail::take<std::uint32_t>(is);
    const double length = detail::take<double>(is);
    const auto count = static_cast<int>(detail::take<std::uint64_t>(is));
    Geometry geometry;
    if (kind == 1) {
        geometry = RadialMesh(n, length, count);
    } else if (kind == 0) {
        geometry = BoxGrid{n, length, count};
    } else {
        throw Error(ErrorCode::ConfigError, "unknown geometry kind in checkpoint");
    }
    Checkpoint out;
    out.config_text.resize(detail::take<std::uint64_t>(is));
    if (!is.read(out.config_text.data(), static_cast<std::streamsize>(out.config_text.size()))) {
        throw Error(ErrorCode::ConfigError, "truncated checkpoint");
    }
    std::vector<double> values(detail::take<std::uint64_t>(is));
    if (!is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)))) {
        throw Error(ErrorCode::ConfigError, "truncated checkpoint");
    }
    out.field = Field(std::move(geometry), std::move(values));
    return out;
}

}  // namespace chemolab
