// qbattery: command-line front end (simulate, sweep, calibrate, validate, check, version)

#include "qbattery/qbattery.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace qbattery;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kIntegrationError = 3 };

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    const ProtocolConfig cfg = load_config(config_path);
    const auto start = std::chrono::steady_clock::now();
    const RunResult result = run(cfg);
    ManifestInfo info;
    info.wall_seconds = seconds_since(start);
    write_run_outputs(out_dir, cfg, result, info);
    if (cfg.mode == ProtocolMode::Charging) {
        const auto s = summarize(result.records);
        std::cout << "ratio_max " << format_number(s.ratio_max) << " at t " << format_number(s.t_ratio_max)
                  << ", p_peak " << format_number(s.p_peak) << " at t " << format_number(s.t_p_peak) << "\n";
    }
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << out_dir << " (" << format_number(info.wall_seconds) << " s)\n";
    return kOk;
}

SweepAxis parse_axis(const std::string& s) {
    if (s == "chain_size") return SweepAxis::ChainSize;
    if (s == "noise_strength") return SweepAxis::NoiseStrength;
    throw ConfigError("--axis", "expected chain_size or noise_strength");
}

int cmd_sweep(const std::string& config_path, const std::string& axis_name, const std::string& values_text,
              const std::string& out_dir, int workers) {
    const ProtocolConfig base = load_config(config_path);
    const SweepAxis axis = parse_axis(axis_name);
    const auto values = parse_double_list("--values", values_text);
    if (values.empty()) throw ConfigError("--values", "empty values list");
    for (double v : values) {
        try {
            with_axis_value(base, axis, v).validate();
        } catch (const DomainError& e) {
            throw ConfigError("--values", e.what());
        }
    }
    const auto entries = sweep(base, axis, values, workers);
    fs::create_directories(out_dir);
    bool failed = false;
    for (const auto& e : entries) {
        if (!e.ok()) {
            failed = true;
            std::cerr << "run " << format_exact(e.value) << " failed: " << e.error << "\n";
            continue;
        }
        ManifestInfo info;
        info.wall_seconds = e.wall_seconds;
        info.extra.emplace("sweep_axis", axis_name);
        info.extra.emplace("sweep_value", format_exact(e.value));
        write_run_outputs(fs::path(out_dir) / sweep_subdir_name(axis, e.value), e.config, *e.result, info);
    }
    std::ostringstream summary;
    write_summary_csv(summary, entries);
    write_file(fs::path(out_dir) / "summary.csv", summary.str());
    std::cout << "wrote " << entries.size() << " runs + summary.csv to " << out_dir << "\n";
    return failed ? kIntegrationError : kOk;
}

int cmd_calibrate(const std::string& config_path, const std::string& out_dir, double step, int workers) {
    ProtocolConfig base = load_config(config_path);
    if (base.mode != ProtocolMode::Charging) throw ConfigError("protocol.mode", "calibration needs charging");
    const auto start = std::chrono::steady_clock::now();
    const CalibrationResult c = calibrate_omega(base, {}, step, workers);
    std::cout << "omega " << format_exact(c.omega) << ": ratio_max " << format_number(c.summary.ratio_max)
              << " at t " << format_number(c.summary.t_ratio_max) << " (ratio band "
              << (c.ratio_in_band ? "met" : "missed") << ", time band " << (c.time_in_band ? "met" : "missed")
              << ")\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ostringstream scan;
        scan << "omega,ratio_max,t_ratio_max\n";
        for (const auto& [w, s] : c.scan)
            scan << format_exact(w) << ',' << format_number(s.ratio_max) << ',' << format_number(s.t_ratio_max) << "\n";
        write_file(fs::path(out_dir) / "calibration.csv", scan.str());
        base.omega = c.omega;
        ManifestInfo info;
        info.wall_seconds = seconds_since(start);
        info.outputs.push_back("calibration.csv");
        info.extra.emplace("calibrated_omega", format_exact(c.omega));
        info.extra.emplace("calibration_ratio_in_band", c.ratio_in_band ? "true" : "false");
        info.extra.emplace("calibration_time_in_band", c.time_in_band ? "true" : "false");
        write_file(fs::path(out_dir) / "manifest.ini", manifest_text(base, info));
    }
    return kOk;
}

int cmd_validate(std::uint64_t seed, bool perturb) {
    ValidationOptions o;
    o.seed = seed;
    if (perturb) o.perturbation = 1e-3;
    const auto report = run_validation(o);
    for (const auto& c : report.checks) {
        std::printf("%-4s  %-62s  worst %-10.3g tol %-8.1g %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                    c.worst, c.tolerance, c.detail.c_str());
    }
    const auto failed = std::count_if(report.checks.begin(), report.checks.end(),
                                      [](const CheckResult& c) { return !c.passed; });
    std::printf("%zu checks, %ld failed\n", report.checks.size(), static_cast<long>(failed));
    return report.all_passed() ? kOk : kFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spin-chain quantum battery simulator"};
    app.require_subcommand(1);

    std::string config, out, axis, values;
    int workers = 0;
    double step = 0.01;
    std::uint64_t seed = 7;
    bool perturb = false;

    auto* sim = app.add_subcommand("simulate", "run one charging or discharging protocol");
    sim->add_option("--config", config, "INI configuration")->required();
    sim->add_option("--out", out, "output directory")->required();

    auto* sw = app.add_subcommand("sweep", "one run per value of a chain-size or noise-strength axis");
    sw->add_option("--config", config, "INI configuration")->required();
    sw->add_option("--axis", axis, "chain_size or noise_strength")->required();
    sw->add_option("--values", values, "comma-separated values")->required();
    sw->add_option("--out", out, "output directory")->required();
    sw->add_option("--workers", workers, "parallel runs (default: QBATTERY_WORKERS or hardware threads)");

    auto* cal = app.add_subcommand("calibrate", "grid search for the drive strength omega");
    cal->add_option("--config", config, "INI configuration (charging)")->required();
    cal->add_option("--out", out, "optional output directory for the scan and manifest");
    cal->add_option("--step", step, "coarse grid step in (0, 0.5)");
    cal->add_option("--workers", workers, "parallel runs");

    auto* val = app.add_subcommand("validate", "built-in invariant and oracle checks");
    val->add_option("--seed", seed, "seed for the random draws");
    val->add_flag("--perturb", perturb, "shift the engine side of every comparison (self-test)");

    auto* chk = app.add_subcommand("check", "parse a configuration and print it fully resolved");
    chk->add_option("--config", config, "INI configuration")->required();

    app.add_subcommand("version", "print the tool and CSV schema versions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*sim) return cmd_simulate(config, out);
        if (*sw) return cmd_sweep(config, axis, values, out, workers);
        if (*cal) return cmd_calibrate(config, out, step, workers);
        if (*val) return cmd_validate(seed, perturb);
        if (*chk) {
            std::cout << config_to_ini(load_config(config));
            return kOk;
        }
        std::cout << "qbattery " << kToolVersion << " (csv schema " << kCsvSchemaVersion << ")\n";
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const IntegrationError& e) {
        std::cerr << "integration error at t = " << e.time() << ": " << e.what() << "\n";
        return kIntegrationError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
