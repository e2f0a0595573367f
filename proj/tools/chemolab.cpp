// chemolab: check | run | sweep
//
// Exit codes: 0 success, 2 invalid input, 3 expectation mismatch.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "chemolab/config.hpp"
#include "chemolab/diagnostics.hpp"
#include "chemolab/dynamics.hpp"
#include "chemolab/hypothesis.hpp"
#include "chemolab/initial_data.hpp"
#include "chemolab/io.hpp"

#ifndef CHEMOLAB_VERSION
#define CHEMOLAB_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace chemolab;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kMismatch = 3;

struct CheckArgs {
    ModelParams params;
    std::string sign = "attractive";
    std::string config;
    std::optional<bool> expect_h1;
    std::optional<bool> expect_h2;
    bool json = false;
};

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path.string() + "'");
    return out;
}

fs::path prepare_directory(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) throw Error(ErrorCode::ConfigError, "output directory '" + dir + "' is not writable");
    return p;
}

int cmd_check(CheckArgs& args) {
    ModelParams p = args.params;
    if (!args.config.empty()) {
        p = load_config(args.config).model;
    } else {
        p.sign = sign_from_string(args.sign);
    }
    validate(p);
    const HypothesisReport report = check_hypothesis(p);

    nlohmann::json j = report;
    std::optional<LambdaTriple> lambdas;
    std::string lambda_note;
    const double sample_p = report.p_bar + 1.0;
    if (report.h1_holds) {
        try {
            lambdas = lambda_tildes(sample_p, p);
        } catch (const Error& e) {
            lambda_note = e.what();
        }
    } else {
        lambda_note = "H1 fails, p_bar is outside its range of validity";
    }
    j["lambda_sample_p"] = sample_p;
    j["lambda_tilde"] = lambdas ? nlohmann::json(*lambdas) : nlohmann::json(nullptr);
    if (!lambda_note.empty()) j["lambda_note"] = lambda_note;

    if (args.json) {
        std::cout << dump_json(j) << '\n';
    } else {
        std::cout << "params      n=" << p.n << " m=" << format_double(p.m) << " a=" << format_double(p.a)
                  << " b=" << format_double(p.b) << " alpha=" << format_double(p.alpha)
                  << " beta=" << format_double(p.beta) << " eta=" << format_double(p.eta) << " sign=" << to_string(p.sign)
                  << '\n'
                  << "l           " << format_double(report.l) << '\n'
                  << "h1          threshold=" << format_double(report.h1_threshold)
                  << " margin=" << format_double(report.h1_margin) << " holds=" << std::boolalpha << report.h1_holds
                  << '\n'
                  << "h2          threshold=" << format_double(report.h2_threshold)
                  << " margin=" << format_double(report.h2_margin) << " holds=" << report.h2_holds << '\n'
                  << "p_bar       " << format_double(report.p_bar) << (report.p_bar_in_scope ? "" : " (out of scope)")
                  << '\n';
        if (lambdas) {
            std::cout << "lambda      p=" << format_double(sample_p) << " lambda0=" << format_double(lambdas->lambda0)
                      << " lambda1=" << format_double(lambdas->lambda1)
                      << " lambdaEta=" << format_double(lambdas->lambda_eta) << '\n';
        } else {
            std::cout << "lambda      p=" << format_double(sample_p) << " unavailable: " << lambda_note << '\n';
        }
        std::cout << "reduced     alpha < 1 + 2 beta / n: " << report.reduced_linear_condition << '\n'
                  << "prediction  " << to_string(report.predicted) << '\n';
    }

    int code = kOk;
    if (args.expect_h1 && *args.expect_h1 != report.h1_holds) {
        std::cerr << "expectation mismatch: h1_holds=" << std::boolalpha << report.h1_holds << '\n';
        code = kMismatch;
    }
    if (args.expect_h2 && *args.expect_h2 != report.h2_holds) {
        std::cerr << "expectation mismatch: h2_holds=" << std::boolalpha << report.h2_holds << '\n';
        code = kMismatch;
    }
    return code;
}

int cmd_run(const std::string& config_path, const std::string& output_override) {
    ExperimentConfig cfg = load_config(config_path);
    if (!output_override.empty()) cfg.outputs.directory = output_override;
    const fs::path dir = prepare_directory(cfg.outputs.directory);
    const std::string config_text = serialize_config(cfg);

    const Field rho0 = make_initial_field(cfg.geometry, cfg.initial);
    const RunOutcome outcome = run(rho0, cfg.model, cfg.solver);

    {
        auto out = open_output(dir / "norms.csv");
        write_norms_csv(out, outcome, config_text);
    }
    {
        auto out = open_output(dir / "final.chk");
        write_checkpoint(out, outcome.final_field, config_text);
    }
    nlohmann::json summary{{"verdict", std::string(to_string(outcome.verdict))},
                           {"reason", outcome.reason},
                           {"t_final", outcome.t_final},
                           {"t_end", cfg.solver.t_end},
                           {"max_linf", outcome.max_linf},
                           {"final_linf", linf_norm(outcome.final_field)},
                           {"final_mass", total_mass(outcome.final_field)},
                           {"step_count", outcome.step_count},
                           {"blowup_threshold", outcome.blowup_threshold},
                           {"total_clipped_mass", outcome.total_clipped_mass},
                           {"eps", outcome.eps},
                           {"reached_boundary", outcome.reached_boundary},
                           {"hypothesis", check_hypothesis(cfg.model)},
                           {"code_version", CHEMOLAB_VERSION},
                           {"config", config_text}};
    if (outcome.norm_series.size() >= 3) {
        try {
            const auto residuals = mass_balance_residual(outcome.norm_series, cfg.model);
            summary["mass_balance_max_rel_residual"] = max_rel_residual(residuals);
            auto out = open_output(dir / "mass_balance.csv");
            write_residuals_csv(out, residuals, config_text);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NotEnoughData) throw;
        }
    }
    {
        auto out = open_output(dir / "summary.json");
        out << dump_json(summary) << '\n';
    }
    std::cout << "verdict " << to_string(outcome.verdict) << " (" << outcome.reason << ")\n"
              << "t_final " << format_double(outcome.t_final) << "  max_linf " << format_double(outcome.max_linf)
              << "  steps " << outcome.step_count << '\n'
              << "wrote " << (dir / "summary.json").string() << '\n';
    return kOk;
}

int cmd_sweep(const std::string& config_path, const std::string& output_override, bool compare_theory) {
    ExperimentConfig cfg = load_config(config_path);
    if (!output_override.empty()) cfg.outputs.directory = output_override;
    if (cfg.sweep.axes.empty() || cfg.sweep.axes.size() > 2) {
        throw Error(ErrorCode::ConfigError, "sweep needs one or two axes in [sweep] axes");
    }
    const fs::path dir = prepare_directory(cfg.outputs.directory);
    const std::string config_text = serialize_config(cfg);

    const SweepAtlas atlas = sweep(cfg.sweep_spec());
    {
        auto out = open_output(dir / "atlas.csv");
        write_atlas_csv(out, atlas, compare_theory, config_text);
    }
    {
        nlohmann::json j = atlas_json(atlas, compare_theory);
        j["code_version"] = CHEMOLAB_VERSION;
        j["config"] = config_text;
        auto out = open_output(dir / "atlas.json");
        out << dump_json(j) << '\n';
    }
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& r : atlas.records) ++counts[static_cast<int>(r.verdict)];
    std::cout << atlas.records.size() << " points: " << counts[0] << " bounded, " << counts[1] << " blow_up, "
              << counts[2] << " inconclusive\n";
    if (compare_theory) std::cout << "unresolved counterexample candidates: " << atlas.unresolved_counterexamples() << '\n';
    std::cout << "wrote " << (dir / "atlas.csv").string() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chemotaxis model laboratory: hypothesis checks, simulations and parameter sweeps"};
    app.set_version_flag("--version", CHEMOLAB_VERSION);
    app.require_subcommand(1);

    CheckArgs check;
    auto* check_cmd = app.add_subcommand("check", "Evaluate the boundedness hypotheses for one parameter set");
    check_cmd->add_option("-n", check.params.n, "Dimension (>= 3)")->capture_default_str();
    check_cmd->add_option("-m", check.params.m, "Diffusion exponent")->capture_default_str();
    check_cmd->add_option("--eta", check.params.eta, "Growth exponent")->capture_default_str();
    check_cmd->add_option("--alpha", check.params.alpha, "Local death exponent")->capture_default_str();
    check_cmd->add_option("--beta", check.params.beta, "Nonlocal exponent")->capture_default_str();
    check_cmd->add_option("-a,--a", check.params.a, "Growth coefficient")->capture_default_str();
    check_cmd->add_option("-b,--b", check.params.b, "Damping coefficient")->capture_default_str();
    check_cmd->add_option("--sign", check.sign, "attractive or repulsive")->capture_default_str();
    check_cmd->add_option("--config", check.config, "Read the [model] section of a config file instead");
    check_cmd->add_option("--expect-h1", check.expect_h1, "Exit 3 unless h1_holds equals this");
    check_cmd->add_option("--expect-h2", check.expect_h2, "Exit 3 unless h2_holds equals this");
    check_cmd->add_flag("--json", check.json, "Print the report as JSON");

    std::string run_config, run_output;
    auto* run_cmd = app.add_subcommand("run", "Integrate one configuration and write norms, checkpoint and summary");
    run_cmd->add_option("config", run_config, "Experiment config (INI)")->required();
    run_cmd->add_option("-o,--output", run_output, "Override outputs.directory");

    std::string sweep_config, sweep_output;
    bool compare_theory = false;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter grid and write the atlas");
    sweep_cmd->add_option("config", sweep_config, "Experiment config with [sweep] axes")->required();
    sweep_cmd->add_option("-o,--output", sweep_output, "Override outputs.directory");
    sweep_cmd->add_flag("--compare-theory", compare_theory, "Add the consistency column from the hypothesis check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*check_cmd) return cmd_check(check);
        if (*run_cmd) return cmd_run(run_config, run_output);
        if (*sweep_cmd) return cmd_sweep(sweep_config, sweep_output, compare_theory);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    }
    return kOk;
}
