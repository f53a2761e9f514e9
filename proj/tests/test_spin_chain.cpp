#include "qbattery/spin_chain.hpp"
#include "qbattery/validate.hpp"

#include <gtest/gtest.h>

#include <bit>

using namespace qbattery;

namespace {

CMatrix diag(std::initializer_list<double> v) {
    CMatrix m = CMatrix::Zero(static_cast<Index>(v.size()), static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) m(i, i) = x, ++i;
    return m;
}

// Tensor product of 2x2 factors, site 1 leftmost.
CMatrix embed(const std::vector<CMatrix>& factors) {
    CMatrix out = CMatrix::Identity(1, 1);
    for (const auto& f : factors) out = Eigen::kroneckerProduct(out, f).eval();
    return out;
}

CMatrix sx() { CMatrix m(2, 2); m << 0, 1, 1, 0; return m; }
CMatrix sy() { CMatrix m(2, 2); m << 0, cplx(0, -1), cplx(0, 1), 0; return m; }
CMatrix sz() { CMatrix m(2, 2); m << 1, 0, 0, -1; return m; }
CMatrix id2() { return CMatrix::Identity(2, 2); }

CMatrix on_site(const CMatrix& op, int site, int n) {
    std::vector<CMatrix> f(n, id2());
    f[site - 1] = op;
    return embed(f);
}

CMatrix on_bond(const CMatrix& op, int site, int n) {
    std::vector<CMatrix> f(n, id2());
    f[site - 1] = op;
    f[site] = op;
    return embed(f);
}

} // namespace

TEST(PauliSite, SingleSiteX) {
    CMatrix expect(2, 2);
    expect << 0, 1, 1, 0;
    EXPECT_EQ(pauli_site(PauliAxis::X, 1, 1).matrix(), expect);
}

TEST(PauliSite, ZOnFirstOfTwo) {
    EXPECT_EQ(pauli_site(PauliAxis::Z, 1, 2).matrix(), diag({1, 1, -1, -1}));
}

TEST(PauliSite, RaisingTimesLoweringProjectsSiteTwoOnZero) {
    const CMatrix p = pauli_site(PauliAxis::Plus, 2, 2).matrix() * pauli_site(PauliAxis::Minus, 2, 2).matrix();
    EXPECT_EQ(p, diag({1, 0, 1, 0}));
}

TEST(PauliSite, RaisingMapsOneToZero) {
    const CMatrix sp = pauli_site(PauliAxis::Plus, 1, 1).matrix();
    EXPECT_EQ(sp(0, 1), cplx(1.0));
    EXPECT_EQ(sp(1, 0), cplx(0.0));
}

TEST(PauliSite, MatchesKroneckerEmbedding) {
    for (int n = 1; n <= 4; ++n)
        for (int s = 1; s <= n; ++s) {
            EXPECT_EQ(pauli_site(PauliAxis::X, s, n).matrix(), on_site(sx(), s, n));
            EXPECT_EQ(pauli_site(PauliAxis::Y, s, n).matrix(), on_site(sy(), s, n));
            EXPECT_EQ(pauli_site(PauliAxis::Z, s, n).matrix(), on_site(sz(), s, n));
        }
}

TEST(PauliSite, SiteOutOfRangeThrows) {
    EXPECT_THROW(pauli_site(PauliAxis::X, 0, 2), DomainError);
    EXPECT_THROW(pauli_site(PauliAxis::X, 3, 2), DomainError);
}

TEST(PauliSite, DistinctSitesCommute) {
    const PauliAxis axes[] = {PauliAxis::X, PauliAxis::Y, PauliAxis::Z, PauliAxis::Plus, PauliAxis::Minus};
    for (auto a : axes)
        for (auto b : axes) {
            const CMatrix x = pauli_site(a, 1, 3).matrix(), y = pauli_site(b, 3, 3).matrix();
            EXPECT_LT(max_abs(x * y - y * x), 1e-14);
        }
}

TEST(PauliSite, LadderFromXY) {
    for (int s = 1; s <= 3; ++s) {
        const CMatrix x = pauli_site(PauliAxis::X, s, 3).matrix(), y = pauli_site(PauliAxis::Y, s, 3).matrix();
        EXPECT_LT(max_abs(pauli_site(PauliAxis::Plus, s, 3).matrix() - 0.5 * (x + kI * y)), 1e-15);
        EXPECT_LT(max_abs(pauli_site(PauliAxis::Minus, s, 3).matrix() - 0.5 * (x - kI * y)), 1e-15);
        EXPECT_LT(max_abs(pauli_site(PauliAxis::Plus, s, 3).matrix() + pauli_site(PauliAxis::Minus, s, 3).matrix() - x),
                  1e-15);
    }
}

TEST(SpinChainParams, LambdaIsDerived) {
    const auto p = SpinChainParams::from_lambda(4, -2.0, 0.5, 0.3, 0.2);
    EXPECT_DOUBLE_EQ(p.coupling_j, 1.0);
    EXPECT_DOUBLE_EQ(p.lambda_ratio(), 0.5);
}

TEST(SpinChainParams, Validation) {
    SpinChainParams p;
    p.n_sites = 13;
    EXPECT_THROW(p.validate(), DomainError);
    p.n_sites = 0;
    EXPECT_THROW(p.validate(), DomainError);
    p.n_sites = 3;
    p.gamma = 1.5;
    EXPECT_THROW(p.validate(), DomainError);
    p.gamma = -0.1;
    EXPECT_THROW(p.validate(), DomainError);
    p.gamma = 1.0;
    EXPECT_NO_THROW(p.validate());
    p.coupling_jz = std::nan("");
    EXPECT_THROW(p.validate(), DomainError);
}

TEST(BuildH0, TwoSiteStructure) {
    const auto p = SpinChainParams::from_lambda(2, 1.0, 0.5, 0.5, 0.2);
    const CMatrix h = build_h0_raw(p).matrix();
    CMatrix expect(4, 4);
    // mu_+ = 1.05, mu_- = -0.95, kappa = 0.25, centre 0.5, inner diagonal -Jz/4
    expect << 1.05, 0, 0, 0.25,
              0, -0.05, 0.5, 0,
              0, 0.5, -0.05, 0,
              0.25, 0, 0, -0.95;
    EXPECT_LT(max_abs(h - expect), 1e-15);
}

TEST(BuildH0, FieldOnly) {
    SpinChainParams p;
    p.n_sites = 2;
    p.field_h = 1.0;
    p.coupling_j = 0.0;
    p.coupling_jz = 0.0;
    EXPECT_LT(max_abs(build_h0_raw(p).matrix() - diag({1, 0, 0, -1})), 1e-15);
}

TEST(BuildH0, MatchesBruteForceSum) {
    for (auto conv : {XYConvention::TwoSiteMatrix, XYConvention::Quarter}) {
        auto p = SpinChainParams::from_lambda(3, 1.0, 0.5, 0.5, 0.2);
        p.xy_convention = conv;
        const double pre = conv == XYConvention::TwoSiteMatrix ? p.coupling_j / 2 : p.coupling_j / 4;
        const int n = 3;
        CMatrix h = CMatrix::Zero(8, 8);
        for (int s = 1; s <= n; ++s) h += 0.5 * p.field_h * on_site(sz(), s, n);
        for (int s = 1; s < n; ++s) {
            h += pre * ((1 + p.gamma) * on_bond(sx(), s, n) + (1 - p.gamma) * on_bond(sy(), s, n));
            h += 0.25 * p.coupling_jz * on_bond(sz(), s, n);
        }
        EXPECT_LT(max_abs(build_h0_raw(p).matrix() - h), 1e-14);
    }
}

TEST(BuildH0, HermitianForRandomParameters) {
    Rng rng(11);
    for (int i = 0; i < 30; ++i) {
        const auto p = random_params(2 + i % 5, rng);
        EXPECT_LT(hermiticity_error(build_h0_raw(p).matrix()), 1e-12);
    }
}

TEST(Normalize, AffineMapOfDiagonal) {
    const auto nb = normalize_h0(OperatorMatrix(diag({1, 0, 0, -1}), true));
    EXPECT_LT(max_abs(nb.h0.matrix() - diag({1, 0.5, 0.5, 0})), 1e-15);
    EXPECT_DOUBLE_EQ(nb.raw.delta_e, 2.0);
    EXPECT_DOUBLE_EQ(nb.normalized.eigenvalues(0), 0.0);
    EXPECT_DOUBLE_EQ(nb.normalized.eigenvalues(1), 0.5);
    EXPECT_DOUBLE_EQ(nb.normalized.eigenvalues(3), 1.0);
}

TEST(Normalize, TwoSiteRawSpectrum) {
    const auto nb = normalized_battery(SpinChainParams::from_lambda(2, 1.0, 0.5, 0.5, 0.2));
    const double eta = std::sqrt(1.0 + 0.0625);
    EXPECT_NEAR(nb.raw.eigenvalues(0), 0.05 - eta, 1e-12);
    EXPECT_NEAR(nb.raw.eigenvalues(1), -0.55, 1e-12);
    EXPECT_NEAR(nb.raw.eigenvalues(2), 0.45, 1e-12);
    EXPECT_NEAR(nb.raw.eigenvalues(3), 0.05 + eta, 1e-12);
    EXPECT_NEAR(nb.raw.eigenvalues(0), -0.98078, 1e-5);
    EXPECT_NEAR(nb.raw.eigenvalues(3), 1.08078, 1e-5);
    EXPECT_NEAR(nb.raw.delta_e, 2.0 * eta, 1e-12);
    EXPECT_NEAR(nb.raw.delta_e, 2.0616, 1e-4);
}

TEST(Normalize, EndpointsAndIdempotence) {
    Rng rng(12);
    for (int i = 0; i < 10; ++i) {
        const auto nb = normalized_battery(random_params(2 + i % 4, rng));
        const RVector ev = spectrum_of(nb.h0).eigenvalues;
        EXPECT_LT(std::abs(ev(0)), 1e-12);
        EXPECT_LT(std::abs(ev(ev.size() - 1) - 1.0), 1e-12);
        EXPECT_GE(ev.minCoeff(), -1e-12);
        const auto twice = normalize_h0(nb.h0);
        EXPECT_LT(max_abs(twice.h0.matrix() - nb.h0.matrix()), 1e-12);
    }
}

TEST(Normalize, EigenvectorsOrthonormal) {
    const auto nb = normalized_battery(SpinChainParams::from_lambda(4, 1.0, 0.5, 0.5, 0.2));
    const CMatrix v = nb.raw.eigenvectors;
    EXPECT_LT(max_abs(v.adjoint() * v - CMatrix::Identity(16, 16)), 1e-10);
}

TEST(Normalize, DegenerateSpectrumThrows) {
    EXPECT_THROW(normalize_h0(OperatorMatrix(CMatrix::Identity(4, 4), true)), DomainError);
}

TEST(BuildHc, SingleSite) {
    CMatrix expect(2, 2);
    expect << 0, 0.35, 0.35, 0;
    EXPECT_LT(max_abs(build_hc(1, 0.7).matrix() - expect), 1e-16);
}

TEST(BuildHc, TwoSites) {
    const CMatrix h = build_hc(2, 1.0).matrix();
    EXPECT_LT(max_abs(h - 0.5 * (on_site(sx(), 1, 2) + on_site(sx(), 2, 2))), 1e-16);
    EXPECT_EQ(h.imag().cwiseAbs().maxCoeff(), 0.0);
}

TEST(BuildHc, ThreeSitesSingleFlipEntries) {
    const CMatrix h = build_hc(3, 0.5).matrix();
    EXPECT_EQ(h.trace(), cplx(0.0));
    for (Index a = 0; a < 8; ++a)
        for (Index b = 0; b < 8; ++b) {
            const int flips = std::popcount(static_cast<unsigned>(a ^ b));
            EXPECT_EQ(h(a, b), cplx(flips == 1 ? 0.25 : 0.0));
        }
}

TEST(ExtremalState, FieldOnlyGroundIsAllDown) {
    SpinChainParams p;
    p.n_sites = 3;
    p.coupling_j = 0.0;
    p.coupling_jz = 0.0;
    const auto g = extremal_state(normalized_battery(p).normalized, Extremal::Ground);
    EXPECT_FALSE(g.degenerate);
    EXPECT_NEAR(std::abs(g.rho(7, 7)), 1.0, 1e-14);
    const auto t = extremal_state(normalized_battery(p).normalized, Extremal::Top);
    EXPECT_NEAR(std::abs(t.rho(0, 0)), 1.0, 1e-14);
}

TEST(ExtremalState, RankOne) {
    const auto nb = normalized_battery(SpinChainParams::from_lambda(4, 1.0, 0.5, 0.5, 0.2));
    for (auto which : {Extremal::Ground, Extremal::Top}) {
        const auto s = extremal_state(nb.normalized, which);
        EXPECT_NEAR(s.rho.matrix().trace().real(), 1.0, 1e-14);
        EXPECT_NEAR((s.rho.matrix() * s.rho.matrix()).trace().real(), 1.0, 1e-12);
    }
}

TEST(ExtremalState, TwoSiteGroundOnCornerBlock) {
    const auto g = extremal_state(normalized_battery(SpinChainParams::from_lambda(2, 1.0, 0.5, 0.5, 0.2)).normalized,
                                  Extremal::Ground);
    for (Index r = 0; r < 4; ++r)
        for (Index c = 0; c < 4; ++c) {
            const bool corner = (r == 0 || r == 3) && (c == 0 || c == 3);
            if (!corner) {
                EXPECT_LT(std::abs(g.rho(r, c)), 1e-14);
            }
        }
}

TEST(ExtremalState, DegenerateGroundIsFlagged) {
    SpinChainParams p;
    p.n_sites = 2;
    p.field_h = 0.0;
    p.coupling_j = 0.0;
    p.coupling_jz = 1.0;
    const auto g = extremal_state(normalized_battery(p).normalized, Extremal::Ground);
    EXPECT_TRUE(g.degenerate);
}
