// two_spin.hpp: closed-form N = 2 results used as independent oracles
//
// Basis order |00>, |01>, |10>, |11> with |0> the sigma_z = +1 state.

#pragma once

#include "qbattery/core.hpp"
#include "qbattery/spin_chain.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <array>
#include <cmath>

namespace qbattery::two_spin {

/// In-plane coupling entering the closed forms. Under the default convention
/// this is J itself; under the quarter convention the effective value is J/2.
inline double effective_j(const SpinChainParams& p) { return 2.0 * p.xy_prefactor(); }

struct Eigensystem {
    double eps0 = 0.0, eps1 = 0.0, eps2 = 0.0, eps3 = 0.0;
    double eta = 0.0;
    double kappa = 0.0;
    double delta_minus = 0.0, delta_plus = 0.0;
    double norm_minus = 0.0, norm_plus = 0.0; // NaN when kappa == 0
    double mu_plus = 0.0, mu_minus = 0.0;
    std::array<CVector, 4> vectors;           // vectors[k] pairs with eps_k

    std::array<double, 4> eigenvalues() const { return {eps0, eps1, eps2, eps3}; }
    double e_min() const { return std::min({eps0, eps1, eps2, eps3}); }
    double e_max() const { return std::max({eps0, eps1, eps2, eps3}); }
};

/// The explicit 4x4 Hamiltonian: mu_+ and mu_- on the outer diagonal,
/// -J_z/4 on the inner diagonal, kappa = J*gamma on the corners, J in the centre.
inline OperatorMatrix analytic_h0(const SpinChainParams& p) {
    const double j = effective_j(p);
    const double kappa = j * p.gamma;
    const double mu_plus = p.coupling_jz / 4.0 + p.field_h;
    const double mu_minus = p.coupling_jz / 4.0 - p.field_h;
    CMatrix h(4, 4);
    // clang-format off
    h << mu_plus, 0.0,                   0.0,                   kappa,
         0.0,     -p.coupling_jz / 4.0,  j,                     0.0,
         0.0,     j,                     -p.coupling_jz / 4.0,  0.0,
         kappa,   0.0,                   0.0,                   mu_minus;
    // clang-format on
    return OperatorMatrix(std::move(h), true);
}

namespace detail {

/// Normalized N (delta/kappa |00> + |11>), or its kappa -> 0 limit.
inline CVector corner_vector(double delta, double kappa) {
    CVector v = CVector::Zero(4);
    if (kappa == 0.0) {
        if (delta == 0.0) v(3) = 1.0;
        else v(0) = 1.0;
        return v;
    }
    const double norm = 1.0 / std::sqrt(delta * delta / (kappa * kappa) + 1.0);
    v(0) = norm * delta / kappa;
    v(3) = norm;
    // |11> amplitude positive
    if (v(3).real() < 0.0) v = -v;
    return v;
}

} // namespace detail

inline Eigensystem analytic_eigs(const SpinChainParams& p) {
    const double j = effective_j(p);
    Eigensystem e;
    e.kappa = j * p.gamma;
    e.eta = std::sqrt(p.field_h * p.field_h + e.kappa * e.kappa);
    e.mu_plus = p.coupling_jz / 4.0 + p.field_h;
    e.mu_minus = p.coupling_jz / 4.0 - p.field_h;
    e.eps0 = p.coupling_jz / 4.0 - e.eta;
    e.eps3 = p.coupling_jz / 4.0 + e.eta;
    e.eps1 = -p.coupling_jz / 4.0 - j;
    e.eps2 = -p.coupling_jz / 4.0 + j;
    e.delta_minus = p.field_h - e.eta;
    e.delta_plus = p.field_h + e.eta;
    const auto norm = [&](double d) {
        return e.kappa == 0.0 ? std::nan("") : 1.0 / std::sqrt(d * d / (e.kappa * e.kappa) + 1.0);
    };
    e.norm_minus = norm(e.delta_minus);
    e.norm_plus = norm(e.delta_plus);

    e.vectors[0] = detail::corner_vector(e.delta_minus, e.kappa);
    e.vectors[3] = detail::corner_vector(e.delta_plus, e.kappa);
    const double s = 1.0 / std::sqrt(2.0);
    // centre block [[-Jz/4, J], [J, -Jz/4]]: the antisymmetric combination
    // carries -Jz/4 - J, the symmetric one -Jz/4 + J
    e.vectors[1] = CVector::Zero(4);
    e.vectors[1](1) = -s;
    e.vectors[1](2) = s;
    e.vectors[2] = CVector::Zero(4);
    e.vectors[2](1) = s;
    e.vectors[2](2) = s;
    return e;
}

enum class Polarization { Up, Down };

/// Rank-one state built from delta_-/+ : Down is the ground state (charging
/// start), Up the top corner-block state (discharging start).
inline DensityMatrix rho_initial(Polarization which, const SpinChainParams& p) {
    const Eigensystem e = analytic_eigs(p);
    const double delta = which == Polarization::Down ? e.delta_minus : e.delta_plus;
    const double k = e.kappa;
    CMatrix rho = CMatrix::Zero(4, 4);
    if (k == 0.0) {
        const Index idx = delta == 0.0 ? 3 : 0;
        rho(idx, idx) = 1.0;
        return DensityMatrix(std::move(rho));
    }
    const double den = delta * delta + k * k;
    rho(0, 0) = delta * delta / den;
    rho(0, 3) = k * delta / den;
    rho(3, 0) = k * delta / den;
    rho(3, 3) = k * k / den;
    return DensityMatrix(std::move(rho));
}

enum class Mode { Charging, Discharging };

/// Two-spin phase-flip generator written out term by term. The battery
/// Hamiltonian is normalized with the closed-form extremal eigenvalues.
inline CMatrix phase_flip_rhs(const CMatrix& rho, Mode mode, const SpinChainParams& p, double omega,
                              double gamma_plus, double gamma_minus, double gamma_z) {
    if (rho.rows() != 4 || rho.cols() != 4) throw DomainError("two-spin state must be 4x4");
    const Eigensystem e = analytic_eigs(p);
    const double e_min = e.e_min();
    const double de = e.e_max() - e_min;
    if (!(de > 0.0)) throw DomainError("degenerate two-spin spectrum");

    CMatrix id2 = CMatrix::Identity(2, 2);
    CMatrix sp(2, 2), sm(2, 2), sz(2, 2), sx(2, 2);
    sp << 0.0, 1.0, 0.0, 0.0;
    sm << 0.0, 0.0, 1.0, 0.0;
    sz << 1.0, 0.0, 0.0, -1.0;
    sx << 0.0, 1.0, 1.0, 0.0;
    const CMatrix id4 = CMatrix::Identity(4, 4);
    const auto kron = [](const CMatrix& a, const CMatrix& b) { return CMatrix(Eigen::kroneckerProduct(a, b)); };

    CMatrix h = (analytic_h0(p).matrix() - e_min * id4) / de;
    if (mode == Mode::Charging) h += 0.5 * omega * (kron(sx, id2) + kron(id2, sx));

    const auto anti = [](const CMatrix& a, const CMatrix& r) -> CMatrix { return a * r + r * a; };
    CMatrix out = -kI * (h * rho - rho * h);

    const CMatrix sp1 = kron(sp, id2), sm1 = kron(sm, id2);
    const CMatrix sp2 = kron(id2, sp), sm2 = kron(id2, sm);
    if (mode == Mode::Charging) {
        out += gamma_plus * (sp1 * rho * sm1 - 0.5 * anti(sm1 * sp1, rho) +
                             sp2 * rho * sm2 - 0.5 * anti(sm2 * sp2, rho));
    } else {
        out += gamma_minus * (sm1 * rho * sp1 - 0.5 * anti(sp1 * sm1, rho) +
                              sm2 * rho * sp2 - 0.5 * anti(sp2 * sm2, rho));
    }
    const CMatrix sz1 = kron(sz, id2), sz2 = kron(id2, sz);
    out += gamma_z * (sz1 * rho * sz1 + sz2 * rho * sz2 - 2.0 * rho);
    return out;
}

} // namespace qbattery::two_spin
