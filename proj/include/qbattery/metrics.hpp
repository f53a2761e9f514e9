// metrics.hpp: energetic and information-theoretic figures of merit

#pragma once

#include "qbattery/core.hpp"
#include "qbattery/spin_chain.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace qbattery {

/// Energy threshold below which ratios are reported as absent.
inline constexpr double kRatioEnergyFloor = 1e-9;
inline constexpr double kDischargeFloor = 1e-12;

struct MetricsRecord {
    double t = 0.0;
    double energy = 0.0;
    double ergotropy = 0.0;
    double power_b = 0.0;
    double power_w = 0.0;
    double purity = 1.0;
    double coherence_l1 = 0.0;
    std::optional<double> trace_distance;
    std::optional<double> ratio_w_over_e;
    std::optional<double> discharge_ratio;
};

/// Tr[H0 rho] for the normalized battery Hamiltonian.
inline double energy(const CMatrix& rho, const OperatorMatrix& h0) {
    if (rho.rows() != h0.dim() || rho.cols() != h0.dim())
        throw DomainError("energy: dimension mismatch");
    const cplx e = (h0.matrix().transpose().cwiseProduct(rho)).sum();
    if (std::abs(e.imag()) >= 1e-8)
        throw NumericalError("energy has imaginary part " + std::to_string(e.imag()));
    return e.real();
}

inline double energy(const DensityMatrix& rho, const OperatorMatrix& h0) {
    return energy(rho.matrix(), h0);
}

/// Eigenvalues in (-1e-8, 0) are set to zero and the rest renormalized to unit sum.
inline RVector clamp_populations(RVector r) {
    for (Index i = 0; i < r.size(); ++i)
        if (r(i) < 0.0 && r(i) > -DensityMatrix::kPositivityTol) r(i) = 0.0;
    const double s = r.sum();
    if (s > 0.0) r /= s;
    return r;
}

/// sum_n r_n eps_n with r descending and eps ascending, from precomputed
/// eigenvalues of rho (any order).
inline double passive_energy_from_eigenvalues(const RVector& rho_eigenvalues, const SpectrumData& spectrum) {
    if (rho_eigenvalues.size() != spectrum.dim())
        throw DomainError("passive_energy: dimension mismatch");
    RVector r = clamp_populations(rho_eigenvalues);
    std::sort(r.data(), r.data() + r.size(), std::greater<>());
    return r.dot(spectrum.eigenvalues);
}

inline double passive_energy(const DensityMatrix& rho, const SpectrumData& spectrum) {
    return passive_energy_from_eigenvalues(rho.eigenvalues(), spectrum);
}

/// Energy above the passive state; tiny negative residues are clamped to zero.
inline double ergotropy_from(double energy_value, double passive) {
    const double w = energy_value - passive;
    return w < 0.0 && w > -1e-9 ? 0.0 : w;
}

inline double ergotropy(const DensityMatrix& rho, const OperatorMatrix& h0, const SpectrumData& spectrum) {
    return ergotropy_from(energy(rho, h0), passive_energy(rho, spectrum));
}

struct Powers {
    double power_b = 0.0;
    double power_w = 0.0;
};

/// Average powers E/t and W/t, both zero at t = 0.
inline Powers powers(double energy_value, double ergotropy_value, double t) {
    if (t < 0.0) throw DomainError("powers: t must be non-negative");
    if (t == 0.0) return {};
    return {energy_value / t, ergotropy_value / t};
}

inline double purity(const CMatrix& rho) { return rho.cwiseAbs2().sum(); }
inline double purity(const DensityMatrix& rho) { return purity(rho.matrix()); }

/// l1 coherence in the computational basis.
inline double coherence_l1(const CMatrix& rho) {
    return rho.cwiseAbs().sum() - rho.diagonal().cwiseAbs().sum();
}
inline double coherence_l1(const DensityMatrix& rho) { return coherence_l1(rho.matrix()); }

inline double trace_norm_hermitian(const CMatrix& m) {
    const CMatrix sym = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

/// (1/2) || rho - sigma ||_1
inline double trace_distance(const CMatrix& rho, const CMatrix& sigma) {
    if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
        throw DomainError("trace_distance: dimension mismatch");
    return 0.5 * trace_norm_hermitian(rho - sigma);
}

inline double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
    return trace_distance(rho.matrix(), sigma.matrix());
}

/// E*(t*) / E*(0); absent when the starting energy is numerically zero.
inline std::optional<double> discharge_ratio(double e_released_t, double e_at_start) {
    if (!(e_at_start > kDischargeFloor)) return std::nullopt;
    return e_released_t / e_at_start;
}

inline std::optional<double> ratio_w_over_e(double energy_value, double ergotropy_value) {
    if (!(energy_value > kRatioEnergyFloor)) return std::nullopt;
    return ergotropy_value / energy_value;
}

/// Everything except the discharge ratio, from a state and its eigenvalues.
/// Pass `reference` to fill the trace distance.
inline MetricsRecord compute_metrics(double t, const CMatrix& rho, const RVector& rho_eigenvalues,
                                     const OperatorMatrix& h0, const SpectrumData& spectrum,
                                     const CMatrix* reference = nullptr) {
    MetricsRecord m;
    m.t = t;
    m.energy = energy(rho, h0);
    m.ergotropy = ergotropy_from(m.energy, passive_energy_from_eigenvalues(rho_eigenvalues, spectrum));
    const auto p = powers(m.energy, m.ergotropy, t);
    m.power_b = p.power_b;
    m.power_w = p.power_w;
    m.purity = purity(rho);
    m.coherence_l1 = coherence_l1(rho);
    if (reference) m.trace_distance = trace_distance(rho, *reference);
    m.ratio_w_over_e = ratio_w_over_e(m.energy, m.ergotropy);
    return m;
}

inline MetricsRecord compute_metrics(double t, const DensityMatrix& rho, const OperatorMatrix& h0,
                                     const SpectrumData& spectrum,
                                     const DensityMatrix* reference = nullptr) {
    return compute_metrics(t, rho.matrix(), rho.eigenvalues(), h0, spectrum,
                           reference ? &reference->matrix() : nullptr);
}

} // namespace qbattery
