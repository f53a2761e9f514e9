// protocol.hpp: charging/discharging experiments, sweeps and summaries

#pragma once

#include "qbattery/core.hpp"
#include "qbattery/lindblad.hpp"
#include "qbattery/metrics.hpp"
#include "qbattery/spin_chain.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace qbattery {

enum class ProtocolMode { Charging, Discharging };
enum class DischargeInit { TopEigenstate, EndOfCharge };

struct ProtocolConfig {
    ProtocolMode mode = ProtocolMode::Charging;
    SpinChainParams chain = SpinChainParams::from_lambda(6, 1.0, 0.5, 0.5, 0.2);
    double omega = 0.5;
    double gamma_plus = 0.01;
    double gamma_minus = 0.0;
    std::vector<NoiseChannel> noise{NoiseChannel{PauliAxis::Z, 0.06}};
    double t_max = 20.0;
    IntegratorOptions integrator;
    int output_stride = 1;
    DischargeInit discharge_init = DischargeInit::TopEigenstate;
    // used only when discharge_init == EndOfCharge
    double precharge_gamma_plus = 0.01;
    double precharge_t_max = 20.0;

    void validate() const {
        chain.validate();
        integrator.validate();
        for (const auto& ch : noise) ch.validate();
        if (gamma_plus < 0.0 || gamma_minus < 0.0) throw DomainError("rates must be non-negative");
        if (mode == ProtocolMode::Charging && gamma_minus != 0.0)
            throw DomainError("charging requires gamma_minus = 0");
        if (mode == ProtocolMode::Discharging && gamma_plus != 0.0)
            throw DomainError("discharging requires gamma_plus = 0");
        if (mode == ProtocolMode::Charging && !(omega >= 0.0))
            throw DomainError("omega must be non-negative");
        if (!(t_max > 0.0)) throw DomainError("t_max must be positive");
        if (output_stride < 1) throw DomainError("output_stride must be >= 1");
        if (mode == ProtocolMode::Discharging && discharge_init == DischargeInit::EndOfCharge &&
            (!(precharge_t_max > 0.0) || precharge_gamma_plus < 0.0))
            throw DomainError("invalid pre-charge settings");
    }

    double sample_spacing() const { return integrator.dt * output_stride; }
    std::vector<double> time_grid() const { return uniform_grid(t_max, sample_spacing()); }
};

/// Everything needed to integrate one protocol run.
struct ProtocolSystem {
    NormalizedHamiltonian battery;
    OperatorMatrix h_total;
    std::vector<CollapseTerm> terms;
    DensityMatrix rho0;
    std::vector<std::string> warnings;
};

struct RunResult {
    std::vector<MetricsRecord> records;
    EvolveStats stats;
    std::vector<std::string> warnings;
    double delta_e_raw = 0.0;
    CMatrix rho_final;
};

inline RunResult run_charging(const ProtocolConfig& cfg);

inline constexpr double kClampReportLevel = 1e-12;

inline ProtocolSystem prepare(const ProtocolConfig& cfg) {
    cfg.validate();
    ProtocolSystem sys{normalized_battery(cfg.chain), {}, {}, {}, {}};
    const int n = cfg.chain.n_sites;
    if (cfg.mode == ProtocolMode::Charging) {
        sys.h_total = sys.battery.h0 + build_hc(n, cfg.omega);
        sys.terms = assemble_collapse(n, cfg.gamma_plus, 0.0, cfg.noise);
        auto g = extremal_state(sys.battery.normalized, Extremal::Ground);
        if (g.degenerate) sys.warnings.emplace_back("degenerate ground state; solver order used");
        sys.rho0 = std::move(g.rho);
    } else {
        sys.h_total = sys.battery.h0;
        sys.terms = assemble_collapse(n, 0.0, cfg.gamma_minus, cfg.noise);
        if (cfg.discharge_init == DischargeInit::TopEigenstate) {
            auto top = extremal_state(sys.battery.normalized, Extremal::Top);
            if (top.degenerate) sys.warnings.emplace_back("degenerate top state; solver order used");
            sys.rho0 = std::move(top.rho);
        } else {
            ProtocolConfig pre = cfg;
            pre.mode = ProtocolMode::Charging;
            pre.gamma_plus = cfg.precharge_gamma_plus;
            pre.gamma_minus = 0.0;
            pre.t_max = cfg.precharge_t_max;
            pre.output_stride = std::max(1, static_cast<int>(std::lround(pre.t_max / cfg.integrator.dt)));
            RunResult charged = run_charging(pre);
            CMatrix r = 0.5 * (charged.rho_final + charged.rho_final.adjoint());
            sys.rho0 = DensityMatrix(std::move(r));
        }
    }
    return sys;
}

inline RunResult run_protocol(const ProtocolConfig& cfg, const ProtocolSystem& sys,
                              const TrajectoryObserver& extra = {}) {
    RunResult out;
    out.warnings = sys.warnings;
    out.delta_e_raw = sys.battery.raw.delta_e;
    const auto grid = cfg.time_grid();
    out.records.reserve(grid.size());
    const bool charging = cfg.mode == ProtocolMode::Charging;
    const CMatrix& ref = sys.rho0.matrix();
    double e0 = 0.0;
    IntegratorOptions opts = cfg.integrator;
    opts.check_positivity = true; // ergotropy needs the eigenvalues anyway

    try {
        out.stats = evolve(sys.rho0, sys.h_total, sys.terms, grid, opts, [&](const TrajectorySample& s) {
            MetricsRecord m = compute_metrics(s.t, s.rho, s.eigenvalues, sys.battery.h0,
                                              sys.battery.normalized, charging ? &ref : nullptr);
            if (!charging) {
                if (s.index == 0) e0 = m.energy;
                m.discharge_ratio = discharge_ratio(m.energy, e0);
            }
            out.records.push_back(std::move(m));
            if (s.index + 1 == grid.size()) out.rho_final = s.rho;
            if (extra) extra(s);
        });
    } catch (const IntegrationError& e) {
        throw IntegrationError(std::string(e.what()) + " [N=" + std::to_string(cfg.chain.n_sites) +
                                   ", omega=" + std::to_string(cfg.omega) + "]",
                               e.time());
    }
    // round-off level negatives are routine; report clamping beyond that
    if (out.stats.min_eigenvalue < -kClampReportLevel) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "negative eigenvalues clamped in metrics (min %.3g)",
                      out.stats.min_eigenvalue);
        out.warnings.emplace_back(buf);
    }
    return out;
}

inline RunResult run_charging(const ProtocolConfig& cfg) {
    if (cfg.mode != ProtocolMode::Charging) throw DomainError("run_charging needs mode = charging");
    return run_protocol(cfg, prepare(cfg));
}

inline RunResult run_discharging(const ProtocolConfig& cfg) {
    if (cfg.mode != ProtocolMode::Discharging) throw DomainError("run_discharging needs mode = discharging");
    return run_protocol(cfg, prepare(cfg));
}

inline RunResult run(const ProtocolConfig& cfg) {
    return cfg.mode == ProtocolMode::Charging ? run_charging(cfg) : run_discharging(cfg);
}

struct SummaryStats {
    bool ratio_defined = false;
    double ratio_max = 0.0;
    double t_ratio_max = 0.0;
    double e_plateau = 0.0;
    double w_plateau = 0.0;
    double p_peak = 0.0;
    double t_p_peak = 0.0;
    double plateau_drift = 0.0; // relative change of E between the two halves of the window
    bool plateau_stable() const { return plateau_drift < 0.01; }
};

inline constexpr double kPlateauWindow = 0.1;

/// Maxima break ties toward the earliest sample; plateaus average the final
/// 10% of the time span.
inline SummaryStats summarize(const std::vector<MetricsRecord>& records) {
    SummaryStats s;
    if (records.empty()) return s;
    double best_ratio = -std::numeric_limits<double>::infinity();
    double best_power = -std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
        if (r.ratio_w_over_e && r.energy > kRatioEnergyFloor && *r.ratio_w_over_e > best_ratio) {
            best_ratio = *r.ratio_w_over_e;
            s.t_ratio_max = r.t;
            s.ratio_defined = true;
        }
        if (r.power_b > best_power) {
            best_power = r.power_b;
            s.t_p_peak = r.t;
        }
    }
    s.ratio_max = s.ratio_defined ? best_ratio : 0.0;
    s.p_peak = best_power;

    const double t0 = records.front().t;
    const double t1 = records.back().t;
    const double start = t1 - kPlateauWindow * (t1 - t0);
    std::vector<const MetricsRecord*> window;
    for (const auto& r : records)
        if (r.t >= start - 1e-12) window.push_back(&r);
    double e_sum = 0.0, w_sum = 0.0;
    for (const auto* r : window) {
        e_sum += r->energy;
        w_sum += r->ergotropy;
    }
    const auto n = static_cast<double>(window.size());
    s.e_plateau = e_sum / n;
    s.w_plateau = w_sum / n;
    if (window.size() >= 2) {
        const std::size_t half = window.size() / 2;
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < half; ++i) a += window[i]->energy;
        for (std::size_t i = half; i < window.size(); ++i) b += window[i]->energy;
        a /= static_cast<double>(half);
        b /= static_cast<double>(window.size() - half);
        s.plateau_drift = std::abs(s.e_plateau) > 0.0 ? std::abs(b - a) / std::abs(s.e_plateau) : 0.0;
    }
    return s;
}

enum class SweepAxis { ChainSize, NoiseStrength };

inline ProtocolConfig with_axis_value(ProtocolConfig cfg, SweepAxis axis, double value) {
    if (axis == SweepAxis::ChainSize) {
        const double r = std::round(value);
        if (std::abs(r - value) > 1e-12 || r < 1 || r > kMaxSites)
            throw DomainError("chain size sweep value must be an integer in [1, 12]");
        cfg.chain.n_sites = static_cast<int>(r);
    } else {
        if (cfg.noise.empty()) throw DomainError("noise-strength sweep needs a noise channel");
        for (auto& ch : cfg.noise) ch.strength = value;
    }
    return cfg;
}

struct SweepEntry {
    double value = 0.0;
    ProtocolConfig config;
    std::optional<RunResult> result;
    std::optional<SummaryStats> summary;
    std::string error;
    double wall_seconds = 0.0;

    bool ok() const { return result.has_value(); }
};

/// Worker count from QBATTERY_WORKERS, falling back to the hardware concurrency.
inline int default_workers() {
    if (const char* env = std::getenv("QBATTERY_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const auto threads = static_cast<std::size_t>(std::clamp<int>(workers, 1, static_cast<int>(std::max<std::size_t>(n, 1))));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
}

/// One independent run per value; failures are recorded and the sweep continues.
/// Entries come back sorted by value.
inline std::vector<SweepEntry> sweep(const ProtocolConfig& base, SweepAxis axis,
                                     const std::vector<double>& values, int workers = 0) {
    if (values.empty()) throw DomainError("sweep needs at least one value");
    std::vector<SweepEntry> entries(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) entries[i].value = values[i];
    parallel_for(values.size(), workers > 0 ? workers : default_workers(), [&](std::size_t i) {
        auto& e = entries[i];
        const auto start = std::chrono::steady_clock::now();
        try {
            e.config = with_axis_value(base, axis, e.value);
            e.result = run(e.config);
            e.summary = summarize(e.result->records);
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
        e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    std::stable_sort(entries.begin(), entries.end(),
                     [](const SweepEntry& a, const SweepEntry& b) { return a.value < b.value; });
    return entries;
}

struct CalibrationTarget {
    double ratio = 0.89;
    double ratio_tol = 0.02;
    double t_peak = 2.70;
    double t_tol = 0.3;
};

struct CalibrationResult {
    double omega = 0.0;
    SummaryStats summary;
    bool ratio_in_band = false;
    bool time_in_band = false;
    std::vector<std::pair<double, SummaryStats>> scan;
};

namespace detail {

struct CalibrationScore {
    int tier = 3; // 0: both bands, 1: ratio band only, 2: neither
    double distance = std::numeric_limits<double>::infinity();
};

inline CalibrationScore score(const SummaryStats& s, const CalibrationTarget& t) {
    if (!s.ratio_defined) return {};
    const double dr = std::abs(s.ratio_max - t.ratio) / t.ratio_tol;
    const double dt = std::abs(s.t_ratio_max - t.t_peak) / t.t_tol;
    if (dr <= 1.0 && dt <= 1.0) return {0, std::max(dr, dt)};
    if (dr <= 1.0) return {1, dt};
    return {2, dr};
}

// grid points without the binary residue of k * step (0.41, not 0.41000000000000003)
inline double tidy(double w) { return std::round(w * 1e9) / 1e9; }

inline bool better(const CalibrationScore& a, const CalibrationScore& b) {
    return a.tier != b.tier ? a.tier < b.tier : a.distance < b.distance;
}

} // namespace detail

/// Grid search for the drive strength omega in (0, 1).
///
/// Preference order: omegas whose ratio peak falls inside both the ratio and
/// the time band (closest in normalized distance), then omegas inside the
/// ratio band (closest peak time), then the closest ratio. A second pass
/// refines around the winner with a ten times finer step. Ties keep the
/// smaller omega.
inline CalibrationResult calibrate_omega(const ProtocolConfig& base, const CalibrationTarget& target = {},
                                         double step = 0.01, int workers = 0) {
    if (base.mode != ProtocolMode::Charging) throw DomainError("calibration uses a charging protocol");
    if (!(step > 0.0 && step < 0.5)) throw DomainError("calibration step must lie in (0, 0.5)");

    const auto evaluate = [&](const std::vector<double>& omegas) {
        std::vector<std::pair<double, SummaryStats>> out(omegas.size());
        parallel_for(omegas.size(), workers > 0 ? workers : default_workers(), [&](std::size_t i) {
            ProtocolConfig cfg = base;
            cfg.omega = omegas[i];
            out[i] = {omegas[i], summarize(run_charging(cfg).records)};
        });
        return out;
    };
    const auto pick = [&](const std::vector<std::pair<double, SummaryStats>>& scan) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < scan.size(); ++i)
            if (detail::better(detail::score(scan[i].second, target), detail::score(scan[best].second, target)))
                best = i;
        return scan[best];
    };

    std::vector<double> coarse;
    for (int k = 1; k * step < 1.0 - 1e-12; ++k) coarse.push_back(detail::tidy(k * step));
    CalibrationResult res;
    res.scan = evaluate(coarse);
    auto best = pick(res.scan);

    std::vector<double> fine;
    const double fine_step = step / 10.0;
    for (int k = -9; k <= 9; ++k) {
        const double w = detail::tidy(best.first + k * fine_step);
        if (k != 0 && w > 0.0 && w < 1.0) fine.push_back(w);
    }
    auto refined = evaluate(fine);
    refined.push_back(best);
    std::sort(refined.begin(), refined.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    best = pick(refined);
    res.scan.insert(res.scan.end(), refined.begin(), refined.end());
    std::sort(res.scan.begin(), res.scan.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    res.scan.erase(std::unique(res.scan.begin(), res.scan.end(),
                               [](const auto& a, const auto& b) { return a.first == b.first; }),
                   res.scan.end());

    res.omega = best.first;
    res.summary = best.second;
    res.ratio_in_band = std::abs(best.second.ratio_max - target.ratio) <= target.ratio_tol;
    res.time_in_band = std::abs(best.second.t_ratio_max - target.t_peak) <= target.t_tol;
    return res;
}

} // namespace qbattery
