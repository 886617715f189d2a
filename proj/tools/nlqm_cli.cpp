// nlqm: command-line driver for two-particle correlation experiments.
//
//   nlqm run --config <path> --out <path> [--format csv|json] [overrides]
//   nlqm figure1|figure2 --out <path> [--format csv|json]
//   nlqm audit --config <path> --perturb field=value... --target 1|2
//   nlqm check [--seed N]
//
// Exit codes: 0 success, 1 validation or I/O error, 2 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlqm/checks.hpp"
#include "nlqm/scenario.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct RunOverrides {
    std::optional<double> dt;
    std::optional<double> t_max;
    std::optional<std::size_t> stride;
    std::optional<std::string> algorithm;
    std::optional<std::string> engine;
};

void apply(nlqm::ExperimentConfig& c, const RunOverrides& o) {
    if (o.dt) c.dt = *o.dt;
    if (o.t_max) c.t_max = *o.t_max;
    if (o.stride) c.sample_stride = *o.stride;
    if (o.algorithm) c.algorithm = nlqm::parse_algorithm(*o.algorithm, "--algorithm");
    if (o.engine) c.engine = nlqm::parse_engine(*o.engine, "--engine");
    c.validate();
}

void emit(const nlqm::ExperimentConfig& c, const std::string& out, const std::string& format) {
    const auto series = nlqm::run(c);
    nlqm::export_series(series, nlqm::parse_format(format), out, nlqm::to_json(c));
    std::cerr << "wrote " << series.size() << " series to " << out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Correlation experiments for entangled spin pairs under nonlinear Schrodinger dynamics"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    RunOverrides overrides;

    auto* run = app.add_subcommand("run", "Run a config and export its time series");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_path, "Output file")->required();
    run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    run->add_option("--dt", overrides.dt, "Override integrator step");
    run->add_option("--t-max", overrides.t_max, "Override final time");
    run->add_option("--stride", overrides.stride, "Override sample stride");
    run->add_option("--algorithm", overrides.algorithm, "open, projection_standard or projection_generalized");
    run->add_option("--engine", overrides.engine, "automatic, closed_form or integrator");

    auto* fig1 = app.add_subcommand("figure1", "Reference scenario, open-system algorithm");
    auto* fig2 = app.add_subcommand("figure2", "Reference scenario, standard projection at a distance");
    for (auto* fig : {fig1, fig2}) {
        fig->add_option("--out", out_path, "Output file")->required();
        fig->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    }

    std::vector<std::string> perturbations;
    int target = 1;
    auto* audit = app.add_subcommand("audit", "Locality audit under perturbations of the other particle");
    audit->add_option("--config", config_path, "Base config (JSON)")->required()->check(CLI::ExistingFile);
    audit->add_option("--perturb", perturbations, "field=value (A, B, t1, t2, axis1, axis2)")->required();
    audit->add_option("--target", target, "Audited particle")->check(CLI::IsMember({1, 2}));

    std::uint64_t seed = 20240101;
    auto* check = app.add_subcommand("check", "Run the invariant self-check suite");
    check->add_option("--seed", seed, "Seed for random scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*run) {
            nlqm::ExperimentConfig c = nlqm::load_config(config_path);
            apply(c, overrides);
            emit(c, out_path, format);
        } else if (*fig1 || *fig2) {
            emit(nlqm::figure_config(*fig1 ? 1 : 2), out_path, format);
        } else if (*audit) {
            const auto base = nlqm::load_config(config_path);
            const auto who = target == 1 ? nlqm::Subsystem::first : nlqm::Subsystem::second;
            const auto report = nlqm::locality_audit(base, perturbations, who);
            std::cout << report.text();
            return report.pass() ? 0 : kExitNumerical;
        } else if (*check) {
            bool ok = true;
            for (const auto& r : nlqm::run_invariant_suite(seed)) {
                ok = ok && r.passed;
                char buf[96];
                std::snprintf(buf, sizeof buf, "%.3e (tol %.1e)", r.measured, r.tolerance);
                std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  "
                          << (r.error.empty() ? std::string(buf) : "error: " + r.error) << "\n";
            }
            return ok ? 0 : kExitNumerical;
        }
    } catch (const nlqm::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const nlqm::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const nlqm::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
