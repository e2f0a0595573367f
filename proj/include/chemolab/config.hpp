#pragma once

// Experiment configuration in INI form with dotted section names:
//
//   [model]         n m a b alpha beta eta sign
//   [geometry]      kind = radial | box; r_max cells (radial); extent points_per_axis (box)
//   [initial_data]  family mass width center
//   [solver]        SolverConfig knobs
//   [outputs]       directory sample_interval p_list keep_snapshots
//   [sweep]         axes threads refine_counterexamples
//   [sweep.<axis>]  values = v1, v2, ...   or   range = lo:hi:count

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "chemolab/diagnostics.hpp"
#include "chemolab/dynamics.hpp"
#include "chemolab/error.hpp"
#include "chemolab/geometry.hpp"
#include "chemolab/initial_data.hpp"
#include "chemolab/io.hpp"
#include "chemolab/params.hpp"

namespace chemolab {

struct OutputSettings {
    std::string directory = "out";

    bool operator==(const OutputSettings&) const = default;
};

struct SweepSettings {
    std::vector<SweepAxis> axes;
    int threads = 1;
    bool refine_counterexamples = true;

    bool operator==(const SweepSettings&) const = default;
};

struct ExperimentConfig {
    ModelParams model;
    Geometry geometry = RadialMesh(3, 5.0, 200);
    InitialData initial;
    /// Carries the output cadence, p-list and snapshot flag as well.
    SolverConfig solver;
    OutputSettings outputs;
    SweepSettings sweep;

    bool operator==(const ExperimentConfig&) const = default;

    SweepSpec sweep_spec() const {
        return {sweep.axes, model, geometry, initial, solver, sweep.threads, sweep.refine_counterexamples};
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(const std::string& key, std::string_view text) {
    const std::string t = trim(text);
    if (t == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw Error(ErrorCode::ConfigError, "'" + key + "': expected a number, got '" + t + "'");
    }
    return v;
}

inline long long parse_integer(const std::string& key, std::string_view text) {
    const std::string t = trim(text);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw Error(ErrorCode::ConfigError, "'" + key + "': expected an integer, got '" + t + "'");
    }
    return v;
}

inline bool parse_bool(const std::string& key, std::string_view text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw Error(ErrorCode::ConfigError, "'" + key + "': expected true or false, got '" + t + "'");
}

inline std::vector<double> parse_list(const std::string& key, std::string_view text) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_double(key, item));
    return out;
}

/// lo:hi:count, inclusive of both ends.
inline std::vector<double> parse_range(const std::string& key, std::string_view text) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw Error(ErrorCode::ConfigError, "'" + key + "': range must be lo:hi:count");
    const double lo = parse_double(key, parts[0]);
    const double hi = parse_double(key, parts[1]);
    const long long count = parse_integer(key, parts[2]);
    if (count < 1) throw Error(ErrorCode::ConfigError, "'" + key + "': range count must be >= 1");
    if (count == 1) return {lo};
    std::vector<double> out;
    for (long long i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * static_cast<double>(i) / (count - 1));
    return out;
}

inline std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s;
}

using Ptree = boost::property_tree::ptree;

/// Reads the keys of one section, rejecting anything not in `known`.
class Section {
public:
    Section(const Ptree* tree, std::string name, std::set<std::string> known)
        : tree_(tree), name_(std::move(name)) {
        if (tree_ == nullptr) return;
        for (const auto& [key, child] : *tree_) {
            if (!child.empty()) throw Error(ErrorCode::ConfigError, "[" + name_ + "] has nested entries");
            if (!known.contains(key)) throw Error(ErrorCode::ConfigError, "unknown key '" + key + "' in [" + name_ + "]");
        }
    }

    bool has(const std::string& key) const { return tree_ != nullptr && tree_->find(key) != tree_->not_found(); }
    std::string raw(const std::string& key) const { return trim(tree_->find(key)->second.data()); }
    std::string label(const std::string& key) const { return name_ + "." + key; }

    void read(const std::string& key, double& out) const {
        if (has(key)) out = parse_double(label(key), raw(key));
    }
    void read(const std::string& key, int& out) const {
        if (has(key)) out = static_cast<int>(parse_integer(label(key), raw(key)));
    }
    void read(const std::string& key, std::size_t& out) const {
        if (has(key)) {
            const long long v = parse_integer(label(key), raw(key));
            if (v < 0) throw Error(ErrorCode::ConfigError, "'" + label(key) + "' must be >= 0");
            out = static_cast<std::size_t>(v);
        }
    }
    void read(const std::string& key, bool& out) const {
        if (has(key)) out = parse_bool(label(key), raw(key));
    }
    void read(const std::string& key, std::string& out) const {
        if (has(key)) out = raw(key);
    }

private:
    const Ptree* tree_;
    std::string name_;
};

inline const Ptree* find_section(const Ptree& root, const std::string& name) {
    const auto it = root.find(name);
    return it == root.not_found() ? nullptr : &it->second;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
    using detail::Section;
    detail::Ptree root;
    try {
        boost::property_tree::ini_parser::read_ini(in, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorCode::ConfigError, std::string("malformed config: ") + e.what());
    }

    std::set<std::string> known_sections{"model", "geometry", "initial_data", "solver", "outputs", "sweep"};
    for (const auto& [name, child] : root) {
        if (child.empty() && !child.data().empty()) {
            throw Error(ErrorCode::ConfigError, "key '" + name + "' outside of any section");
        }
        if (!known_sections.contains(name) && name.rfind("sweep.", 0) != 0) {
            throw Error(ErrorCode::ConfigError, "unknown section [" + name + "]");
        }
    }

    ExperimentConfig cfg;

    const Section model(detail::find_section(root, "model"),
                        "model", {"n", "m", "a", "b", "alpha", "beta", "eta", "sign"});
    model.read("n", cfg.model.n);
    model.read("m", cfg.model.m);
    model.read("a", cfg.model.a);
    model.read("b", cfg.model.b);
    model.read("alpha", cfg.model.alpha);
    model.read("beta", cfg.model.beta);
    model.read("eta", cfg.model.eta);
    if (model.has("sign")) cfg.model.sign = sign_from_string(model.raw("sign"));
    validate_for_dynamics(cfg.model);

    const Section geo(detail::find_section(root, "geometry"), "geometry",
                      {"kind", "r_max", "cells", "extent", "points_per_axis"});
    std::string kind = "radial";
    geo.read("kind", kind);
    if (kind == "radial") {
        double r_max = 5.0;
        int cells = 200;
        geo.read("r_max", r_max);
        geo.read("cells", cells);
        cfg.geometry = RadialMesh(cfg.model.n, r_max, cells);
        cfg.solver.scheme = Scheme::explicit_radial;
    } else if (kind == "box") {
        BoxGrid g;
        g.n = cfg.model.n;
        geo.read("extent", g.extent);
        geo.read("points_per_axis", g.points_per_axis);
        validate(g);
        cfg.geometry = g;
        cfg.solver.scheme = Scheme::semi_implicit_box;
    } else {
        throw Error(ErrorCode::ConfigError, "geometry.kind must be radial or box, got '" + kind + "'");
    }

    const Section init(detail::find_section(root, "initial_data"), "initial_data",
                       {"family", "mass", "width", "center"});
    if (init.has("family")) cfg.initial.family = initial_family_from_string(init.raw("family"));
    init.read("mass", cfg.initial.mass);
    init.read("width", cfg.initial.width);
    if (init.has("center")) {
        const auto c = detail::parse_list(init.label("center"), init.raw("center"));
        if (c.size() != 3) throw Error(ErrorCode::ConfigError, "initial_data.center needs three values");
        cfg.initial.center = {c[0], c[1], c[2]};
    }

    const Section solver(detail::find_section(root, "solver"), "solver",
                         {"t_end", "dt_init", "dt_min", "cfl_safety", "eps", "blowup_linf_threshold",
                          "blowup_factor", "neutralizing_background", "pinned_steps_limit", "tail_fraction",
                          "tail_tolerance", "boundary_radius_fraction", "boundary_mass_tolerance", "max_steps"});
    auto& s = cfg.solver;
    solver.read("t_end", s.t_end);
    solver.read("dt_init", s.dt_init);
    solver.read("dt_min", s.dt_min);
    solver.read("cfl_safety", s.cfl_safety);
    solver.read("eps", s.eps);
    solver.read("blowup_linf_threshold", s.blowup_linf_threshold);
    solver.read("blowup_factor", s.blowup_factor);
    solver.read("neutralizing_background", s.neutralizing_background);
    solver.read("pinned_steps_limit", s.pinned_steps_limit);
    solver.read("tail_fraction", s.tail_fraction);
    solver.read("tail_tolerance", s.tail_tolerance);
    solver.read("boundary_radius_fraction", s.boundary_radius_fraction);
    solver.read("boundary_mass_tolerance", s.boundary_mass_tolerance);
    solver.read("max_steps", s.max_steps);

    const Section outputs(detail::find_section(root, "outputs"), "outputs",
                          {"directory", "sample_interval", "p_list", "keep_snapshots"});
    outputs.read("directory", cfg.outputs.directory);
    outputs.read("sample_interval", s.sample_interval);
    if (outputs.has("p_list")) s.p_list = detail::parse_list(outputs.label("p_list"), outputs.raw("p_list"));
    outputs.read("keep_snapshots", s.keep_snapshots);
    validate(s);

    const Section sweep(detail::find_section(root, "sweep"), "sweep", {"axes", "threads", "refine_counterexamples"});
    sweep.read("threads", cfg.sweep.threads);
    sweep.read("refine_counterexamples", cfg.sweep.refine_counterexamples);
    std::set<std::string> listed;
    if (sweep.has("axes")) {
        for (const auto& name : detail::split(sweep.raw("axes"), ',')) {
            if (name.empty()) continue;
            ModelParams probe_p;
            InitialData probe_i;
            apply_axis(name, 1.0, probe_p, probe_i);  // rejects unknown axis names
            if (!listed.insert(name).second) throw Error(ErrorCode::ConfigError, "sweep axis '" + name + "' listed twice");
            const std::string sec = "sweep." + name;
            const Section axis(detail::find_section(root, sec), sec, {"values", "range"});
            SweepAxis a{name, {}};
            if (axis.has("values") == axis.has("range")) {
                throw Error(ErrorCode::ConfigError, "[" + sec + "] needs exactly one of values or range");
            }
            a.values = axis.has("values") ? detail::parse_list(axis.label("values"), axis.raw("values"))
                                          : detail::parse_range(axis.label("range"), axis.raw("range"));
            cfg.sweep.axes.push_back(std::move(a));
        }
    }
    for (const auto& [name, child] : root) {
        if (name.rfind("sweep.", 0) == 0 && !listed.contains(name.substr(6))) {
            throw Error(ErrorCode::ConfigError, "section [" + name + "] is not listed in sweep.axes");
        }
    }
    return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read config '" + path + "'");
    return parse_config(in);
}

/// Every field written explicitly, floats with 17 significant digits, so
/// that parsing the text reproduces the config exactly.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    using detail::join;
    std::ostringstream os;
    const auto& p = cfg.model;
    os << "[model]\n"
       << "n = " << p.n << "\n"
       << "m = " << format_double(p.m) << "\n"
       << "a = " << format_double(p.a) << "\n"
       << "b = " << format_double(p.b) << "\n"
       << "alpha = " << format_double(p.alpha) << "\n"
       << "beta = " << format_double(p.beta) << "\n"
       << "eta = " << format_double(p.eta) << "\n"
       << "sign = " << to_string(p.sign) << "\n\n";

    os << "[geometry]\n";
    if (const auto* mesh = std::get_if<RadialMesh>(&cfg.geometry)) {
        os << "kind = radial\n"
           << "r_max = " << format_double(mesh->r_max()) << "\n"
           << "cells = " << mesh->cells() << "\n\n";
    } else {
        const auto& g = std::get<BoxGrid>(cfg.geometry);
        os << "kind = box\n"
           << "extent = " << format_double(g.extent) << "\n"
           << "points_per_axis = " << g.points_per_axis << "\n\n";
    }

    const auto& in = cfg.initial;
    os << "[initial_data]\n"
       << "family = " << to_string(in.family) << "\n"
       << "mass = " << format_double(in.mass) << "\n"
       << "width = " << format_double(in.width) << "\n"
       << "center = " << join({in.center[0], in.center[1], in.center[2]}) << "\n\n";

    const auto& s = cfg.solver;
    os << "[solver]\n"
       << "t_end = " << format_double(s.t_end) << "\n"
       << "dt_init = " << format_double(s.dt_init) << "\n"
       << "dt_min = " << format_double(s.dt_min) << "\n"
       << "cfl_safety = " << format_double(s.cfl_safety) << "\n"
       << "eps = " << format_double(s.eps) << "\n"
       << "blowup_linf_threshold = " << format_double(s.blowup_linf_threshold) << "\n"
       << "blowup_factor = " << format_double(s.blowup_factor) << "\n"
       << "neutralizing_background = " << (s.neutralizing_background ? "true" : "false") << "\n"
       << "pinned_steps_limit = " << s.pinned_steps_limit << "\n"
       << "tail_fraction = " << format_double(s.tail_fraction) << "\n"
       << "tail_tolerance = " << format_double(s.tail_tolerance) << "\n"
       << "boundary_radius_fraction = " << format_double(s.boundary_radius_fraction) << "\n"
       << "boundary_mass_tolerance = " << format_double(s.boundary_mass_tolerance) << "\n"
       << "max_steps = " << s.max_steps << "\n\n";

    os << "[outputs]\n"
       << "directory = " << cfg.outputs.directory << "\n"
       << "sample_interval = " << format_double(s.sample_interval) << "\n"
       << "p_list = " << join(s.p_list) << "\n"
       << "keep_snapshots = " << (s.keep_snapshots ? "true" : "false") << "\n";

    os << "\n[sweep]\n";
    std::string names;
    for (const auto& a : cfg.sweep.axes) names += (names.empty() ? "" : ", ") + a.name;
    os << "axes = " << names << "\n"
       << "threads = " << cfg.sweep.threads << "\n"
       << "refine_counterexamples = " << (cfg.sweep.refine_counterexamples ? "true" : "false") << "\n";
    for (const auto& a : cfg.sweep.axes) os << "\n[sweep." << a.name << "]\nvalues = " << join(a.values) << "\n";
    return os.str();
}

}  // namespace chemolab
