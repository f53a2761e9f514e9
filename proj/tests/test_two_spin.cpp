#include "qbattery/lindblad.hpp"
#include "qbattery/two_spin.hpp"
#include "qbattery/validate.hpp"

#include <gtest/gtest.h>

using namespace qbattery;
using namespace qbattery::two_spin;

namespace {

SpinChainParams base() { return SpinChainParams::from_lambda(2, 1.0, 0.5, 0.5, 0.2); }

} // namespace

TEST(TwoSpin, DiagonalCoefficients) {
    const auto e = analytic_eigs(base());
    EXPECT_DOUBLE_EQ(e.mu_plus, 1.05);
    EXPECT_DOUBLE_EQ(e.mu_minus, -0.95);
    EXPECT_DOUBLE_EQ(e.kappa, 0.25);
}

TEST(TwoSpin, EigenvaluesAtReferencePoint) {
    const auto e = analytic_eigs(base());
    EXPECT_NEAR(e.eta, 1.0307764064, 1e-10);
    EXPECT_NEAR(e.eps0, 0.05 - 1.0307764064, 1e-10);
    EXPECT_NEAR(e.eps1, -0.55, 1e-15);
    EXPECT_NEAR(e.eps2, 0.45, 1e-15);
    EXPECT_NEAR(e.eps3, 0.05 + 1.0307764064, 1e-10);
    EXPECT_NEAR(e.e_max() - e.e_min(), 2.0615528128, 1e-10);
}

TEST(TwoSpin, HamiltonianMatchesChainBuilder) {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto p = random_params(2, rng);
        EXPECT_LT((analytic_h0(p).matrix() - build_h0_raw(p).matrix()).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(TwoSpin, VectorsAreEigenvectors) {
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        const auto p = random_params(2, rng);
        const auto e = analytic_eigs(p);
        const CMatrix h = analytic_h0(p).matrix();
        const auto ev = e.eigenvalues();
        for (std::size_t k = 0; k < 4; ++k) {
            EXPECT_NEAR(e.vectors[k].norm(), 1.0, 1e-14);
            EXPECT_LT((h * e.vectors[k] - ev[k] * e.vectors[k]).norm(), 1e-13);
        }
    }
}

TEST(TwoSpin, NormalizationConstants) {
    const auto e = analytic_eigs(base());
    const double nm = e.norm_minus, np = e.norm_plus;
    EXPECT_NEAR(nm * nm * (e.delta_minus * e.delta_minus / (e.kappa * e.kappa) + 1.0), 1.0, 1e-14);
    EXPECT_NEAR(np * np * (e.delta_plus * e.delta_plus / (e.kappa * e.kappa) + 1.0), 1.0, 1e-14);
    // corner eigenvectors are orthogonal
    EXPECT_NEAR(std::abs(e.vectors[0].dot(e.vectors[3])), 0.0, 1e-14);
}

TEST(TwoSpin, IsotropicLimit) {
    auto p = base();
    p.gamma = 0.0;
    const auto e = analytic_eigs(p);
    EXPECT_EQ(e.kappa, 0.0);
    EXPECT_TRUE(std::isnan(e.norm_minus));
    EXPECT_DOUBLE_EQ(e.eta, 1.0);
    // delta_- = 0 picks |11>, delta_+ = 2 picks |00>
    EXPECT_EQ(e.vectors[0](3), cplx(1.0));
    EXPECT_EQ(e.vectors[3](0), cplx(1.0));
    const auto down = rho_initial(Polarization::Down, p);
    EXPECT_EQ(down.matrix()(3, 3), cplx(1.0));
    const auto up = rho_initial(Polarization::Up, p);
    EXPECT_EQ(up.matrix()(0, 0), cplx(1.0));
}

TEST(TwoSpin, InitialStatesAreProjectors) {
    const auto p = base();
    const auto e = analytic_eigs(p);
    for (auto pol : {Polarization::Down, Polarization::Up}) {
        const CMatrix r = rho_initial(pol, p).matrix();
        EXPECT_NEAR(r.trace().real(), 1.0, 1e-14);
        EXPECT_LT((r * r - r).cwiseAbs().maxCoeff(), 1e-14);
        const CVector& v = pol == Polarization::Down ? e.vectors[0] : e.vectors[3];
        EXPECT_LT((r - v * v.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(TwoSpin, DownIsGroundAndUpIsTop) {
    const auto p = base();
    const auto spec = spectrum_of(build_h0_raw(p));
    const auto g = extremal_state(spec, Extremal::Ground);
    const auto t = extremal_state(spec, Extremal::Top);
    EXPECT_LT((rho_initial(Polarization::Down, p).matrix() - g.rho.matrix()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((rho_initial(Polarization::Up, p).matrix() - t.rho.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TwoSpin, QuarterConventionHalvesEffectiveCoupling) {
    auto p = base();
    p.xy_convention = XYConvention::Quarter;
    EXPECT_DOUBLE_EQ(effective_j(p), 0.25);
    EXPECT_LT((analytic_h0(p).matrix() - build_h0_raw(p).matrix()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PhaseFlipRhs, RejectsWrongShape) {
    EXPECT_THROW(phase_flip_rhs(CMatrix::Identity(2, 2), Mode::Charging, base(), 0.5, 0.01, 0.0, 0.06),
                 DomainError);
}

TEST(PhaseFlipRhs, GroundIsStationaryWithoutDriveOrNoise) {
    const auto p = base();
    const CMatrix g = rho_initial(Polarization::Down, p).matrix();
    EXPECT_LT(phase_flip_rhs(g, Mode::Charging, p, 0.0, 0.0, 0.0, 0.0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PhaseFlipRhs, PureDephasingOfDiagonalStateVanishes) {
    CMatrix r = CMatrix::Zero(4, 4);
    r(1, 1) = 0.5;
    r(2, 2) = 0.5;
    // diagonal states commute with every sigma_z, so only the coherent part survives
    const auto p = base();
    const CMatrix with = phase_flip_rhs(r, Mode::Discharging, p, 0.0, 0.0, 0.0, 0.3);
    const CMatrix without = phase_flip_rhs(r, Mode::Discharging, p, 0.0, 0.0, 0.0, 0.0);
    EXPECT_LT((with - without).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PhaseFlipRhs, IsTraceless) {
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        const CMatrix r = random_state(4, rng).matrix();
        for (auto mode : {Mode::Charging, Mode::Discharging})
            EXPECT_NEAR(std::abs(phase_flip_rhs(r, mode, base(), 0.7, 0.01, 0.02, 0.06).trace()), 0.0, 1e-14);
    }
}
