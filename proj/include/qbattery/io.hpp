// io.hpp: INI-style configuration, CSV emission and run manifests

#pragma once

#include "qbattery/protocol.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace qbattery {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr int kCsvSchemaVersion = 1;
inline constexpr std::string_view kMetricsHeader =
    "t,energy,ergotropy,power_b,power_w,purity,coherence_l1,trace_distance,ratio_w_over_e";
inline constexpr std::string_view kDischargeHeader = "t,energy,ergotropy,discharge_ratio";
inline constexpr std::string_view kSummaryHeader =
    "value,status,ratio_max,t_ratio_max,e_plateau,w_plateau,p_peak,t_p_peak,plateau_drift,wall_seconds,error";

/// Invalid or unknown configuration entry; `key()` is "section.name".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// 12 significant digits, '.' decimal point regardless of locale.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

/// Shortest representation that parses back to the same double.
inline std::string format_exact(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_optional(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string{};
}

inline double parse_double(const std::string& key, std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v))
        throw ConfigError(key, "expected a finite number, got '" + std::string(text) + "'");
    return v;
}

inline int parse_int(const std::string& key, std::string_view text) {
    const double v = parse_double(key, text);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(key, "expected an integer");
    return static_cast<int>(v);
}

inline std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    if (!cur.empty() || !out.empty()) out.push_back(cur);
    return out;
}

inline std::vector<double> parse_double_list(const std::string& key, std::string_view text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double(key, item));
    return out;
}

inline PauliAxis parse_noise_axis(const std::string& key, const std::string& s) {
    if (s == "x" || s == "bit_flip") return PauliAxis::X;
    if (s == "y" || s == "bit_phase_flip") return PauliAxis::Y;
    if (s == "z" || s == "phase_flip") return PauliAxis::Z;
    throw ConfigError(key, "noise axis must be x, y or z, got '" + s + "'");
}

namespace detail {

using Ptree = boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"chain", {"n", "h", "lambda", "gamma", "jz", "xy_convention"}},
        {"protocol",
         {"mode", "omega", "gamma_plus", "gamma_minus", "noise_axis", "noise_strength", "discharge_init",
          "precharge_gamma_plus", "precharge_t_max"}},
        {"time", {"t_max", "dt", "stride"}},
        {"integrator", {"method", "rel_tol", "abs_tol", "max_step_shrink"}},
    };
    return keys;
}

} // namespace detail

/// Parses the INI text. Unknown sections or keys are rejected, except the
/// `[run]` metadata block that manifests carry.
inline ProtocolConfig parse_config(std::istream& in) {
    detail::Ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("<file>", std::string("malformed config: ") + e.message() + " at line " +
                                         std::to_string(e.line()));
    }
    const auto& known = detail::known_keys();
    for (const auto& [section, body] : tree) {
        if (section == "run") continue;
        if (body.empty()) throw ConfigError(section, "entries must live inside a [section]");
        const auto it = known.find(section);
        if (it == known.end()) throw ConfigError(section, "unknown section");
        for (const auto& [key, value] : body)
            if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
    }

    const auto get = [&](const std::string& path) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(detail::Ptree::path_type(path, '.'))) return *v;
        return std::nullopt;
    };
    const auto num = [&](const std::string& path, double fallback) {
        const auto v = get(path);
        return v ? parse_double(path, *v) : fallback;
    };

    ProtocolConfig cfg;
    // [chain]
    const double h = num("chain.h", 1.0);
    if (h == 0.0) throw ConfigError("chain.h", "field must be nonzero (lambda = J/|h|)");
    const auto n_text = get("chain.n");
    if (!n_text) throw ConfigError("chain.n", "required key missing");
    cfg.chain = SpinChainParams::from_lambda(parse_int("chain.n", *n_text), h, num("chain.lambda", 0.5),
                                             num("chain.gamma", 0.5), num("chain.jz", 0.2));
    if (const auto conv = get("chain.xy_convention")) {
        if (*conv == "matrix") cfg.chain.xy_convention = XYConvention::TwoSiteMatrix;
        else if (*conv == "quarter") cfg.chain.xy_convention = XYConvention::Quarter;
        else throw ConfigError("chain.xy_convention", "expected 'matrix' or 'quarter'");
    }

    // [protocol]
    const auto mode = get("protocol.mode");
    if (!mode) throw ConfigError("protocol.mode", "required key missing");
    if (*mode == "charging") cfg.mode = ProtocolMode::Charging;
    else if (*mode == "discharging") cfg.mode = ProtocolMode::Discharging;
    else throw ConfigError("protocol.mode", "expected 'charging' or 'discharging'");
    const bool charging = cfg.mode == ProtocolMode::Charging;
    if (charging && !get("protocol.omega"))
        throw ConfigError("protocol.omega", "required for charging (drive strength in units of the spectral width)");
    cfg.omega = num("protocol.omega", 0.5);
    cfg.gamma_plus = num("protocol.gamma_plus", charging ? 0.01 : 0.0);
    cfg.gamma_minus = num("protocol.gamma_minus", charging ? 0.0 : 0.01);
    cfg.noise.clear();
    const auto axes = get("protocol.noise_axis");
    const auto strengths = get("protocol.noise_strength");
    if (axes || strengths) {
        const auto a = split_list(axes.value_or("z"));
        const auto s = parse_double_list("protocol.noise_strength", strengths.value_or("0"));
        if (a.size() != s.size())
            throw ConfigError("protocol.noise_strength", "needs one strength per noise axis");
        for (std::size_t i = 0; i < a.size(); ++i)
            cfg.noise.push_back({parse_noise_axis("protocol.noise_axis", a[i]), s[i]});
    }
    if (const auto init = get("protocol.discharge_init")) {
        if (*init == "top_eigenstate") cfg.discharge_init = DischargeInit::TopEigenstate;
        else if (*init == "end_of_charge") cfg.discharge_init = DischargeInit::EndOfCharge;
        else throw ConfigError("protocol.discharge_init", "expected 'top_eigenstate' or 'end_of_charge'");
    }
    cfg.precharge_gamma_plus = num("protocol.precharge_gamma_plus", cfg.precharge_gamma_plus);
    cfg.precharge_t_max = num("protocol.precharge_t_max", cfg.precharge_t_max);

    // [time]
    cfg.t_max = num("time.t_max", 20.0);
    cfg.integrator.dt = num("time.dt", 0.005);
    if (const auto s = get("time.stride")) cfg.output_stride = parse_int("time.stride", *s);

    // [integrator]
    if (const auto m = get("integrator.method")) {
        if (*m == "rk4") cfg.integrator.method = IntegratorMethod::FixedRK4;
        else if (*m == "rk45") cfg.integrator.method = IntegratorMethod::AdaptiveRK45;
        else throw ConfigError("integrator.method", "expected 'rk4' or 'rk45'");
    }
    cfg.integrator.rel_tol = num("integrator.rel_tol", cfg.integrator.rel_tol);
    cfg.integrator.abs_tol = num("integrator.abs_tol", cfg.integrator.abs_tol);
    if (const auto s = get("integrator.max_step_shrink"))
        cfg.integrator.max_step_shrink = parse_int("integrator.max_step_shrink", *s);

    try {
        cfg.validate();
    } catch (const DomainError& e) {
        std::string what = e.what();
        std::string key = "config";
        if (what.find("gamma_minus") != std::string::npos) key = "protocol.gamma_minus";
        else if (what.find("gamma_plus") != std::string::npos) key = "protocol.gamma_plus";
        else if (what.find("n_sites") != std::string::npos) key = "chain.n";
        else if (what.find("gamma") != std::string::npos) key = "chain.gamma";
        else if (what.find("noise") != std::string::npos) key = "protocol.noise_strength";
        else if (what.find("dt") != std::string::npos || what.find("toler") != std::string::npos)
            key = "integrator";
        else if (what.find("t_max") != std::string::npos) key = "time.t_max";
        else if (what.find("stride") != std::string::npos) key = "time.stride";
        throw ConfigError(key, what);
    }
    return cfg;
}

inline ProtocolConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline ProtocolConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path.string());
    return parse_config(in);
}

inline std::string_view axis_name(PauliAxis a) { return to_string(a); }

/// Fully resolved configuration in the same INI format; parsing it back
/// yields an identical configuration.
inline std::string config_to_ini(const ProtocolConfig& cfg) {
    std::ostringstream o;
    o << "[chain]\n"
      << "n = " << cfg.chain.n_sites << "\n"
      << "h = " << format_exact(cfg.chain.field_h) << "\n"
      << "lambda = " << format_exact(cfg.chain.lambda_ratio()) << "\n"
      << "gamma = " << format_exact(cfg.chain.gamma) << "\n"
      << "jz = " << format_exact(cfg.chain.coupling_jz) << "\n"
      << "xy_convention = " << (cfg.chain.xy_convention == XYConvention::TwoSiteMatrix ? "matrix" : "quarter")
      << "\n\n[protocol]\n"
      << "mode = " << (cfg.mode == ProtocolMode::Charging ? "charging" : "discharging") << "\n"
      << "omega = " << format_exact(cfg.omega) << "\n"
      << "gamma_plus = " << format_exact(cfg.gamma_plus) << "\n"
      << "gamma_minus = " << format_exact(cfg.gamma_minus) << "\n";
    if (!cfg.noise.empty()) {
        o << "noise_axis = ";
        for (std::size_t i = 0; i < cfg.noise.size(); ++i) o << (i ? "," : "") << axis_name(cfg.noise[i].axis);
        o << "\nnoise_strength = ";
        for (std::size_t i = 0; i < cfg.noise.size(); ++i) o << (i ? "," : "") << format_exact(cfg.noise[i].strength);
        o << "\n";
    }
    o << "discharge_init = "
      << (cfg.discharge_init == DischargeInit::TopEigenstate ? "top_eigenstate" : "end_of_charge") << "\n"
      << "precharge_gamma_plus = " << format_exact(cfg.precharge_gamma_plus) << "\n"
      << "precharge_t_max = " << format_exact(cfg.precharge_t_max) << "\n\n[time]\n"
      << "t_max = " << format_exact(cfg.t_max) << "\n"
      << "dt = " << format_exact(cfg.integrator.dt) << "\n"
      << "stride = " << cfg.output_stride << "\n\n[integrator]\n"
      << "method = " << (cfg.integrator.method == IntegratorMethod::FixedRK4 ? "rk4" : "rk45") << "\n"
      << "rel_tol = " << format_exact(cfg.integrator.rel_tol) << "\n"
      << "abs_tol = " << format_exact(cfg.integrator.abs_tol) << "\n"
      << "max_step_shrink = " << cfg.integrator.max_step_shrink << "\n";
    return o.str();
}

inline void write_metrics_csv(std::ostream& o, const std::vector<MetricsRecord>& records) {
    o << kMetricsHeader << "\n";
    for (const auto& r : records) {
        o << format_number(r.t) << ',' << format_number(r.energy) << ',' << format_number(r.ergotropy) << ','
          << format_number(r.power_b) << ',' << format_number(r.power_w) << ',' << format_number(r.purity) << ','
          << format_number(r.coherence_l1) << ',' << format_optional(r.trace_distance) << ','
          << format_optional(r.ratio_w_over_e) << "\n";
    }
}

inline void write_discharge_csv(std::ostream& o, const std::vector<MetricsRecord>& records) {
    o << kDischargeHeader << "\n";
    for (const auto& r : records)
        o << format_number(r.t) << ',' << format_number(r.energy) << ',' << format_number(r.ergotropy) << ','
          << format_optional(r.discharge_ratio) << "\n";
}

struct ManifestInfo {
    double wall_seconds = 0.0;
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;
    std::map<std::string, std::string> extra; // additional [run] entries
};

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream o;
    o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return o.str();
}

inline std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

/// Manifest = resolved config plus a [run] block; it is itself a valid config.
inline std::string manifest_text(const ProtocolConfig& cfg, const ManifestInfo& info) {
    std::ostringstream o;
    o << config_to_ini(cfg) << "\n[run]\n"
      << "tool_version = " << kToolVersion << "\n"
      << "csv_schema_version = " << kCsvSchemaVersion << "\n"
      << "timestamp = " << utc_timestamp() << "\n"
      << "wall_seconds = " << format_number(info.wall_seconds) << "\n"
      << "outputs = " << join(info.outputs, ",") << "\n";
    std::vector<std::string> warnings = info.warnings;
    for (auto& w : warnings)
        for (auto& c : w)
            if (c == ';' || c == '\n') c = ' ';
    o << "warnings = " << join(warnings, "; ") << "\n";
    for (const auto& [k, v] : info.extra) o << k << " = " << v << "\n";
    return o.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

/// Writes metrics.csv (+ discharge.csv for discharging runs) and manifest.ini.
inline std::vector<std::string> write_run_outputs(const std::filesystem::path& dir, const ProtocolConfig& cfg,
                                                  const RunResult& result, ManifestInfo info) {
    std::filesystem::create_directories(dir);
    std::ostringstream metrics;
    write_metrics_csv(metrics, result.records);
    write_file(dir / "metrics.csv", metrics.str());
    info.outputs.push_back("metrics.csv");
    if (cfg.mode == ProtocolMode::Discharging) {
        std::ostringstream d;
        write_discharge_csv(d, result.records);
        write_file(dir / "discharge.csv", d.str());
        info.outputs.push_back("discharge.csv");
    }
    info.warnings.insert(info.warnings.end(), result.warnings.begin(), result.warnings.end());
    info.extra.emplace("delta_e_raw", format_exact(result.delta_e_raw));
    info.extra.emplace("integrator_steps", std::to_string(result.stats.steps));
    info.extra.emplace("integrator_rejected", std::to_string(result.stats.rejected));
    info.extra.emplace("max_trace_error", format_number(result.stats.max_trace_error));
    info.extra.emplace("max_hermiticity_error", format_number(result.stats.max_hermiticity_error));
    info.extra.emplace("min_eigenvalue", format_number(result.stats.min_eigenvalue));
    write_file(dir / "manifest.ini", manifest_text(cfg, info));
    return info.outputs;
}

inline void write_summary_csv(std::ostream& o, const std::vector<SweepEntry>& entries) {
    o << kSummaryHeader << "\n";
    for (const auto& e : entries) {
        o << format_exact(e.value) << ',' << (e.ok() ? "ok" : "failed") << ',';
        if (e.summary) {
            const auto& s = *e.summary;
            o << (s.ratio_defined ? format_number(s.ratio_max) : "") << ','
              << (s.ratio_defined ? format_number(s.t_ratio_max) : "") << ',' << format_number(s.e_plateau) << ','
              << format_number(s.w_plateau) << ',' << format_number(s.p_peak) << ',' << format_number(s.t_p_peak)
              << ',' << format_number(s.plateau_drift) << ',';
        } else {
            o << ",,,,,,,";
        }
        std::string err = e.error;
        for (auto& c : err)
            if (c == ',' || c == '\n') c = ' ';
        o << format_number(e.wall_seconds) << ',' << err << "\n";
    }
}

inline std::string sweep_subdir_name(SweepAxis axis, double value) {
    return (axis == SweepAxis::ChainSize ? "n_" : "noise_") + format_exact(value);
}

} // namespace qbattery
