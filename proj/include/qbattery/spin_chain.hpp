// spin_chain.hpp: Pauli embeddings, the XYZ battery Hamiltonian and its spectrum

#pragma once

#include "qbattery/core.hpp"

#include <array>
#include <cmath>
#include <string>
#include <string_view>

namespace qbattery {

enum class PauliAxis { X, Y, Z, Plus, Minus };

inline std::string_view to_string(PauliAxis a) {
    switch (a) {
    case PauliAxis::X: return "x";
    case PauliAxis::Y: return "y";
    case PauliAxis::Z: return "z";
    case PauliAxis::Plus: return "+";
    case PauliAxis::Minus: return "-";
    }
    return "?";
}

/// 2x2 single-spin matrix in the basis {|0>, |1>}, |0> being the sigma_z = +1 state.
inline std::array<cplx, 4> pauli_2x2(PauliAxis a) {
    switch (a) {
    case PauliAxis::X: return {0.0, 1.0, 1.0, 0.0};
    case PauliAxis::Y: return {0.0, -kI, kI, 0.0};
    case PauliAxis::Z: return {1.0, 0.0, 0.0, -1.0};
    case PauliAxis::Plus: return {0.0, 1.0, 0.0, 0.0};  // |0><1|
    case PauliAxis::Minus: return {0.0, 0.0, 1.0, 0.0}; // |1><0|
    }
    return {};
}

inline constexpr int kMaxSites = 12;

/// How the in-plane XX/YY coupling is scaled.
///
/// `TwoSiteMatrix` uses (J/2)[(1+g) XX + (1-g) YY], which reproduces the
/// closed-form two-spin matrix (corners J*g, centre block J).  `Quarter` uses
/// (J/4)[...], the same prefactor as the J_z term.
enum class XYConvention { TwoSiteMatrix, Quarter };

struct SpinChainParams {
    int n_sites = 2;
    double field_h = 1.0;
    double coupling_j = 0.5;
    double gamma = 0.5;
    double coupling_jz = 0.2;
    XYConvention xy_convention = XYConvention::TwoSiteMatrix;

    /// lambda = J / |h|
    double lambda_ratio() const { return coupling_j / std::abs(field_h); }

    static SpinChainParams from_lambda(int n, double h, double lambda, double gamma, double jz) {
        SpinChainParams p;
        p.n_sites = n;
        p.field_h = h;
        p.coupling_j = lambda * std::abs(h);
        p.gamma = gamma;
        p.coupling_jz = jz;
        return p;
    }

    double xy_prefactor() const {
        return xy_convention == XYConvention::TwoSiteMatrix ? coupling_j / 2.0 : coupling_j / 4.0;
    }

    void validate() const {
        if (n_sites < 1 || n_sites > kMaxSites)
            throw DomainError("n_sites must lie in [1, " + std::to_string(kMaxSites) + "], got " +
                              std::to_string(n_sites));
        if (!(gamma >= 0.0 && gamma <= 1.0))
            throw DomainError("anisotropy gamma must lie in [0, 1]");
        if (!std::isfinite(field_h) || !std::isfinite(coupling_j) || !std::isfinite(coupling_jz))
            throw DomainError("chain parameters must be finite");
    }

    Index dim() const { return Index{1} << n_sites; }
};

/// Bit of basis index `b` that belongs to `site` (1-based, site 1 leftmost).
inline int site_bit(Index b, int site, int n_sites) {
    return static_cast<int>((b >> (n_sites - site)) & 1);
}

inline Index site_mask(int site, int n_sites) { return Index{1} << (n_sites - site); }

/// I x ... x sigma_axis x ... x I with sigma_axis on `site` (1-based).
inline OperatorMatrix pauli_site(PauliAxis axis, int site, int n_sites) {
    if (n_sites < 1 || n_sites > kMaxSites)
        throw DomainError("n_sites out of range");
    if (site < 1 || site > n_sites)
        throw DomainError("site " + std::to_string(site) + " outside [1, " +
                          std::to_string(n_sites) + "]");
    const auto op = pauli_2x2(axis);
    const Index dim = Index{1} << n_sites;
    const Index mask = site_mask(site, n_sites);
    CMatrix m = CMatrix::Zero(dim, dim);
    for (Index col = 0; col < dim; ++col) {
        const int in = site_bit(col, site, n_sites);
        for (int out = 0; out < 2; ++out) {
            const cplx v = op[2 * out + in];
            if (v == cplx{}) continue;
            const Index row = out == in ? col : (col ^ mask);
            m(row, col) = v;
        }
    }
    const bool herm = axis == PauliAxis::X || axis == PauliAxis::Y || axis == PauliAxis::Z;
    return OperatorMatrix(std::move(m), herm);
}

/// Raw (unnormalized) battery Hamiltonian with open boundaries, assembled
/// directly in the computational basis.
inline OperatorMatrix build_h0_raw(const SpinChainParams& p) {
    p.validate();
    const int n = p.n_sites;
    const Index dim = p.dim();
    const double xy = p.xy_prefactor();
    const double flip_same = xy * ((1.0 + p.gamma) - (1.0 - p.gamma)); // |00> <-> |11>
    const double flip_diff = xy * ((1.0 + p.gamma) + (1.0 - p.gamma)); // |01> <-> |10>

    CMatrix h = CMatrix::Zero(dim, dim);
    for (Index b = 0; b < dim; ++b) {
        double diag = 0.0;
        for (int s = 1; s <= n; ++s)
            diag += 0.5 * p.field_h * (site_bit(b, s, n) ? -1.0 : 1.0);
        for (int s = 1; s < n; ++s) {
            const int bi = site_bit(b, s, n);
            const int bj = site_bit(b, s + 1, n);
            diag += 0.25 * p.coupling_jz * (bi == bj ? 1.0 : -1.0);
            const Index partner = b ^ site_mask(s, n) ^ site_mask(s + 1, n);
            h(partner, b) += bi == bj ? flip_same : flip_diff;
        }
        h(b, b) += diag;
    }
    return OperatorMatrix(std::move(h), true);
}

struct SpectrumData {
    RVector eigenvalues;  // ascending
    CMatrix eigenvectors; // column k pairs with eigenvalues(k)
    double e_min = 0.0;
    double e_max = 0.0;
    double delta_e = 0.0;

    Index dim() const { return eigenvalues.size(); }
};

inline SpectrumData spectrum_of(const OperatorMatrix& h) {
    const CMatrix sym = 0.5 * (h.matrix() + h.matrix().adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(sym);
    if (es.info() != Eigen::Success)
        throw NumericalError("Hermitian eigendecomposition failed");
    SpectrumData s;
    s.eigenvalues = es.eigenvalues();
    s.eigenvectors = es.eigenvectors();
    s.e_min = s.eigenvalues(0);
    s.e_max = s.eigenvalues(s.eigenvalues.size() - 1);
    s.delta_e = s.e_max - s.e_min;
    return s;
}

/// Spectrum of (H - E_min)/(E_max - E_min) given the raw spectrum; the
/// endpoints are exactly 0 and 1.
inline SpectrumData normalized_spectrum(const SpectrumData& raw) {
    SpectrumData s;
    s.eigenvectors = raw.eigenvectors;
    s.eigenvalues = (raw.eigenvalues.array() - raw.e_min) / raw.delta_e;
    s.eigenvalues(0) = 0.0;
    s.eigenvalues(s.eigenvalues.size() - 1) = 1.0;
    s.e_min = 0.0;
    s.e_max = 1.0;
    s.delta_e = 1.0;
    return s;
}

struct NormalizedHamiltonian {
    OperatorMatrix h0;       // spectrum in [0, 1]
    SpectrumData raw;        // spectrum of the input
    SpectrumData normalized; // spectrum of h0, sharing eigenvectors with raw
};

/// Affine map of a Hermitian operator onto the unit spectral interval.
inline NormalizedHamiltonian normalize_h0(const OperatorMatrix& h0) {
    SpectrumData raw = spectrum_of(h0);
    if (!(raw.delta_e > 0.0) || raw.delta_e <= 1e-14 * std::max(1.0, std::abs(raw.e_max)))
        throw DomainError("degenerate spectrum: E_max == E_min, cannot normalize");
    const Index dim = h0.dim();
    CMatrix m = (h0.matrix() - raw.e_min * CMatrix::Identity(dim, dim)) / raw.delta_e;
    m = 0.5 * (m + m.adjoint()).eval();
    SpectrumData norm = normalized_spectrum(raw);
    return {OperatorMatrix(std::move(m), true), std::move(raw), std::move(norm)};
}

inline NormalizedHamiltonian normalized_battery(const SpinChainParams& p) {
    return normalize_h0(build_h0_raw(p));
}

/// Local transverse drive (omega/2) sum_i sigma_x^i.
inline OperatorMatrix build_hc(int n_sites, double omega) {
    if (n_sites < 1 || n_sites > kMaxSites)
        throw DomainError("n_sites out of range");
    const Index dim = Index{1} << n_sites;
    CMatrix m = CMatrix::Zero(dim, dim);
    for (Index b = 0; b < dim; ++b)
        for (int s = 1; s <= n_sites; ++s)
            m(b ^ site_mask(s, n_sites), b) = 0.5 * omega;
    return OperatorMatrix(std::move(m), true);
}

enum class Extremal { Ground, Top };

struct ExtremalState {
    DensityMatrix rho;
    bool degenerate = false; // extremal eigenvalue is (numerically) degenerate
};

inline constexpr double kDegeneracyTol = 1e-10;

inline ExtremalState extremal_state(const SpectrumData& spectrum, Extremal which) {
    const Index d = spectrum.dim();
    if (d == 0) throw DomainError("empty spectrum");
    const Index k = which == Extremal::Ground ? 0 : d - 1;
    bool degenerate = false;
    if (d > 1) {
        const Index nb = which == Extremal::Ground ? 1 : d - 2;
        degenerate = std::abs(spectrum.eigenvalues(nb) - spectrum.eigenvalues(k)) <
                     kDegeneracyTol * std::max(1.0, spectrum.delta_e);
    }
    return {DensityMatrix::pure(spectrum.eigenvectors.col(k)), degenerate};
}

} // namespace qbattery
