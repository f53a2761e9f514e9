// validate.hpp: built-in invariant and oracle checks

#pragma once

#include "qbattery/lindblad.hpp"
#include "qbattery/metrics.hpp"
#include "qbattery/spin_chain.hpp"
#include "qbattery/two_spin.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace qbattery {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Ginibre-distributed full-rank density matrix.
inline DensityMatrix random_state(Index dim, Rng& rng) {
    std::normal_distribution<double> g;
    CMatrix a(dim, dim);
    for (Index c = 0; c < dim; ++c)
        for (Index r = 0; r < dim; ++r) a(r, c) = cplx(g(rng), g(rng));
    CMatrix rho = a * a.adjoint();
    rho /= rho.trace().real();
    return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

inline DensityMatrix random_pure_state(Index dim, Rng& rng) {
    std::normal_distribution<double> g;
    CVector v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = cplx(g(rng), g(rng));
    return DensityMatrix::pure(v);
}

/// Haar unitary via QR of a complex Gaussian matrix with the phase fix.
inline CMatrix random_unitary(Index dim, Rng& rng) {
    std::normal_distribution<double> g;
    CMatrix a(dim, dim);
    for (Index c = 0; c < dim; ++c)
        for (Index r = 0; r < dim; ++r) a(r, c) = cplx(g(rng), g(rng));
    Eigen::HouseholderQR<CMatrix> qr(a);
    CMatrix q = qr.householderQ();
    const CMatrix rr = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < dim; ++i) {
        const cplx d = rr(i, i);
        q.col(i) *= std::abs(d) > 0.0 ? d / std::abs(d) : cplx(1.0);
    }
    return q;
}

/// Random chain parameters with gamma in (0, 1] and |J| bounded away from 0.
inline SpinChainParams random_params(int n, Rng& rng) {
    SpinChainParams p;
    p.n_sites = n;
    p.field_h = uniform(rng, 0.1, 2.0);
    const double j = uniform(rng, 0.05, 2.0);
    p.coupling_j = uniform(rng, 0.0, 1.0) < 0.5 ? -j : j;
    p.gamma = 1.0 - uniform(rng, 0.0, 1.0); // (0, 1]
    p.coupling_jz = uniform(rng, -1.0, 1.0);
    return p;
}

inline PauliAxis random_noise_axis(Rng& rng) {
    static constexpr PauliAxis axes[] = {PauliAxis::X, PauliAxis::Y, PauliAxis::Z};
    return axes[std::uniform_int_distribution<int>(0, 2)(rng)];
}

/// Random generator for oracle checks: normalized battery Hamiltonian plus a
/// drive, one of sigma_+ / sigma_- at a random rate and one random Pauli channel.
struct RandomGenerator {
    OperatorMatrix h;
    std::vector<CollapseTerm> terms;
};

inline RandomGenerator random_generator(int n, Rng& rng, double rate_scale = 1.0) {
    const SpinChainParams p = random_params(n, rng);
    const double omega = uniform(rng, 0.01, 0.99);
    const bool charging = uniform(rng, 0.0, 1.0) < 0.5;
    const double rate = uniform(rng, 0.0, 0.5) * rate_scale;
    const NoiseChannel noise{random_noise_axis(rng), uniform(rng, 0.0, 0.5) * rate_scale};
    RandomGenerator g{normalized_battery(p).h0 + build_hc(n, omega), {}};
    g.terms = assemble_collapse(n, charging ? rate : 0.0, charging ? 0.0 : rate, std::vector<NoiseChannel>{noise});
    return g;
}

/// Largest increase of the trace distance between consecutive samples when
/// two states are evolved under the same generator (negative or zero when
/// contractive). Uses linearity: only rho_a - rho_b is propagated.
inline double contractivity_violation(const OperatorMatrix& h, const std::vector<CollapseTerm>& terms,
                                      const CMatrix& rho_a, const CMatrix& rho_b, const std::vector<double>& grid,
                                      double dt) {
    double prev = 0.0;
    double worst = -std::numeric_limits<double>::infinity();
    propagate_hermitian(rho_a - rho_b, h, terms, grid, dt, [&](std::size_t k, double, const CMatrix& x) {
        const double d = 0.5 * trace_norm_hermitian(x);
        if (k > 0) worst = std::max(worst, d - prev);
        prev = d;
    });
    return worst;
}

struct CheckResult {
    std::string name;
    bool passed = false;
    double worst = 0.0;     // largest observed error
    double tolerance = 0.0;
    std::string detail;
};

struct ValidationOptions {
    std::uint64_t seed = 7;
    // Relative shift applied to the engine side of every comparison; nonzero
    // values must make the suite fail.
    double perturbation = 0.0;
};

namespace detail {

inline CheckResult make_check(std::string name, double worst, double tol, std::string detail = {}) {
    return {std::move(name), worst < tol, worst, tol, std::move(detail)};
}

inline SpinChainParams perturbed(SpinChainParams p, double eps) {
    p.field_h *= 1.0 + eps;
    return p;
}

inline std::vector<CollapseTerm> perturbed(std::vector<CollapseTerm> terms, double eps) {
    for (auto& t : terms) t.rate *= 1.0 + eps;
    return terms;
}

} // namespace detail

/// Closed-form two-spin eigenvalues against the numerical spectrum.
inline CheckResult check_two_spin_eigenvalues(const ValidationOptions& o, int draws = 200) {
    Rng rng(o.seed);
    double worst = 0.0;
    for (int i = 0; i < draws; ++i) {
        const SpinChainParams p = random_params(2, rng);
        const auto e = two_spin::analytic_eigs(p);
        auto closed = e.eigenvalues();
        std::sort(closed.begin(), closed.end());
        const RVector num = spectrum_of(build_h0_raw(detail::perturbed(p, o.perturbation))).eigenvalues;
        for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(num(k) - closed[k]));
    }
    return detail::make_check("two-spin eigenvalues (closed form vs eigensolver)", worst, 1e-10,
                              std::to_string(draws) + " draws");
}

/// Two-spin Hamiltonian written out explicitly against the generic builder.
inline CheckResult check_two_spin_hamiltonian(const ValidationOptions& o, int draws = 200) {
    Rng rng(o.seed + 1);
    double worst = 0.0;
    for (int i = 0; i < draws; ++i) {
        const SpinChainParams p = random_params(2, rng);
        worst = std::max(worst, max_abs(two_spin::analytic_h0(p).matrix() -
                                        build_h0_raw(detail::perturbed(p, o.perturbation)).matrix()));
    }
    return detail::make_check("two-spin Hamiltonian (explicit 4x4 vs builder)", worst, 1e-14);
}

/// Closed-form rank-one initial states against the numerical extremal
/// projectors. Draws where the corner-block state is not the non-degenerate
/// extremum are skipped.
inline CheckResult check_two_spin_states(const ValidationOptions& o, int draws = 200) {
    Rng rng(o.seed + 2);
    double worst = 0.0;
    int used = 0;
    const auto compare = [&](const SpinChainParams& p) {
        const auto e = two_spin::analytic_eigs(p);
        const auto spec = normalized_battery(detail::perturbed(p, o.perturbation)).normalized;
        const auto ev = e.eigenvalues();
        const double second_low = std::min({ev[1], ev[2], ev[3]});
        const double second_high = std::max({ev[0], ev[1], ev[2]});
        if (e.eps0 < second_low - 1e-3) {
            const auto g = extremal_state(spec, Extremal::Ground);
            worst = std::max(worst, max_abs(g.rho.matrix() -
                                            two_spin::rho_initial(two_spin::Polarization::Down, p).matrix()));
            ++used;
        }
        if (e.eps3 > second_high + 1e-3) {
            const auto t = extremal_state(spec, Extremal::Top);
            worst = std::max(worst, max_abs(t.rho.matrix() -
                                            two_spin::rho_initial(two_spin::Polarization::Up, p).matrix()));
            ++used;
        }
    };
    compare(SpinChainParams::from_lambda(2, 1.0, 0.5, 0.5, 0.2));
    for (int i = 0; i < draws; ++i) compare(random_params(2, rng));
    return detail::make_check("two-spin initial states vs extremal projectors", worst, 1e-12,
                              std::to_string(used) + " comparisons");
}

/// Term-by-term two-spin phase-flip generator against the generic engine.
inline CheckResult check_two_spin_generator(const ValidationOptions& o, two_spin::Mode mode, int states = 50) {
    Rng rng(o.seed + (mode == two_spin::Mode::Charging ? 3 : 4));
    double worst = 0.0;
    for (int i = 0; i < states; ++i) {
        const SpinChainParams p = random_params(2, rng);
        const double omega = uniform(rng, 0.01, 0.99);
        const double g_pm = uniform(rng, 0.0, 0.5);
        const double g_z = uniform(rng, 0.0, 0.5);
        const DensityMatrix rho = random_state(4, rng);
        const bool charging = mode == two_spin::Mode::Charging;
        const CMatrix lit = two_spin::phase_flip_rhs(rho.matrix(), mode, p, omega, charging ? g_pm : 0.0,
                                                     charging ? 0.0 : g_pm, g_z);
        const auto bat = normalized_battery(p);
        const OperatorMatrix h = charging ? bat.h0 + build_hc(2, omega) : bat.h0;
        const auto terms = detail::perturbed(
            assemble_collapse(2, charging ? g_pm : 0.0, charging ? 0.0 : g_pm, NoiseChannel{PauliAxis::Z, g_z}),
            o.perturbation);
        worst = std::max(worst, max_abs(lit - master_rhs(rho, h, terms)));
    }
    return detail::make_check(std::string("two-spin phase-flip generator, ") +
                                  (mode == two_spin::Mode::Charging ? "charging" : "discharging"),
                              worst, 1e-12, std::to_string(states) + " random states");
}

/// RK4 trajectories against exp(L t) for random generators.
inline CheckResult check_expm_oracle(const ValidationOptions& o, const std::vector<int>& sizes = {1, 2, 3},
                                     int draws = 20, double t_max = 5.0) {
    Rng rng(o.seed + 5);
    double worst = 0.0;
    std::vector<double> grid;
    for (int k = 0; k <= 10; ++k) grid.push_back(t_max * k / 10.0);
    const std::vector<double> times(grid.begin() + 1, grid.end());
    for (int n : sizes) {
        for (int i = 0; i < draws; ++i) {
            const auto gen = random_generator(n, rng);
            const DensityMatrix rho0 = random_state(Index{1} << n, rng);
            const auto exact = expm_propagate(gen.h, gen.terms, rho0.matrix(), times);
            const auto traj = evolve(rho0, gen.h, detail::perturbed(gen.terms, o.perturbation), grid);
            for (std::size_t k = 0; k < times.size(); ++k)
                worst = std::max(worst, 2.0 * trace_distance(traj[k + 1].matrix(), exact[k]));
        }
    }
    return detail::make_check("RK4 trajectory vs superoperator exponential (trace norm)", worst, 1e-6,
                              std::to_string(draws) + " draws per size, 10 times");
}

/// Single-qubit dephasing and relaxation against their analytic solutions.
inline std::vector<CheckResult> check_analytic_decays(const ValidationOptions& o) {
    const OperatorMatrix h0(CMatrix::Zero(2, 2), true);
    const std::vector<double> grid = {0.0, 1.0, 10.0, 50.0};
    const double eps = 1.0 + o.perturbation;
    std::vector<CheckResult> out;

    {
        const double gz = 0.06;
        CMatrix r(2, 2);
        r << 0.5, 0.5, 0.5, 0.5;
        const auto traj = evolve(DensityMatrix(r), h0, {{gz * eps, pauli_site(PauliAxis::Z, 1, 1)}}, grid);
        double worst = 0.0;
        for (std::size_t k = 1; k < grid.size(); ++k) {
            const double expect = 0.5 * std::exp(-2.0 * gz * grid[k]);
            worst = std::max(worst, std::abs(traj[k](0, 1) - expect) / expect);
        }
        out.push_back(detail::make_check("dephasing coherence exp(-2 G t), t = 1, 10, 50 (relative)", worst, 1e-8));
    }
    {
        const double gm = 0.01;
        CMatrix r = CMatrix::Zero(2, 2);
        r(0, 0) = 1.0;
        const auto traj = evolve(DensityMatrix(r), h0, {{gm * eps, pauli_site(PauliAxis::Minus, 1, 1)}}, grid);
        double worst = 0.0;
        for (std::size_t k = 1; k < grid.size(); ++k) {
            const double expect = std::exp(-gm * grid[k]);
            worst = std::max(worst, std::abs(traj[k](0, 0).real() - expect) / expect);
        }
        out.push_back(detail::make_check("relaxation population exp(-G t), t = 1, 10, 50 (relative)", worst, 1e-8));
    }
    return out;
}

/// Local operators on distinct sites commute; sigma_+- = (sigma_x +- i sigma_y)/2.
inline CheckResult check_pauli_algebra(const ValidationOptions& o) {
    double worst = 0.0;
    const int n = 3;
    static constexpr PauliAxis axes[] = {PauliAxis::X, PauliAxis::Y, PauliAxis::Z, PauliAxis::Plus,
                                         PauliAxis::Minus};
    for (int a = 1; a <= n; ++a)
        for (int b = a + 1; b <= n; ++b)
            for (auto pa : axes)
                for (auto pb : axes) {
                    const CMatrix x = pauli_site(pa, a, n).matrix();
                    const CMatrix y = pauli_site(pb, b, n).matrix();
                    worst = std::max(worst, max_abs(x * y - y * x));
                }
    for (int s = 1; s <= n; ++s) {
        const CMatrix x = pauli_site(PauliAxis::X, s, n).matrix();
        const CMatrix y = pauli_site(PauliAxis::Y, s, n).matrix();
        worst = std::max(worst, max_abs(pauli_site(PauliAxis::Plus, s, n).matrix() * (1.0 + o.perturbation) -
                                        0.5 * (x + kI * y)));
        worst = std::max(worst, max_abs(pauli_site(PauliAxis::Minus, s, n).matrix() - 0.5 * (x - kI * y)));
    }
    return detail::make_check("Pauli algebra (site commutation, raising/lowering identity)", worst, 1e-14);
}

/// Hermiticity of the raw Hamiltonian and exact endpoints of the normalized spectrum.
inline CheckResult check_normalization(const ValidationOptions& o, int draws = 20) {
    Rng rng(o.seed + 6);
    double worst = 0.0;
    for (int i = 0; i < draws; ++i) {
        const int n = 2 + i % 4;
        const SpinChainParams p = random_params(n, rng);
        const OperatorMatrix raw = build_h0_raw(p);
        worst = std::max(worst, hermiticity_error(raw.matrix()));
        const auto nb = normalize_h0((1.0 + o.perturbation) * raw);
        const RVector ev = spectrum_of(nb.h0).eigenvalues;
        worst = std::max(worst, std::abs(ev(0)));
        worst = std::max(worst, std::abs(ev(ev.size() - 1) - 1.0));
        worst = std::max(worst, std::abs(nb.raw.delta_e - spectrum_of(raw).delta_e));
    }
    return detail::make_check("Hamiltonian Hermiticity and normalized spectrum endpoints", worst, 1e-12);
}

/// Trace of the generator output vanishes for random states and generators.
inline CheckResult check_trace_preservation(const ValidationOptions& o, int draws = 30) {
    Rng rng(o.seed + 7);
    double worst = 0.0;
    for (int i = 0; i < draws; ++i) {
        const int n = 1 + i % 4;
        const auto gen = random_generator(n, rng);
        const DensityMatrix rho = random_state(gen.h.dim(), rng);
        const CMatrix d = master_rhs(rho, gen.h, gen.terms);
        worst = std::max(worst, std::abs(d.trace()) + o.perturbation);
        worst = std::max(worst, hermiticity_error(d));
    }
    return detail::make_check("generator output traceless and Hermitian", worst, 1e-12);
}

/// Closed evolution under the battery Hamiltonian keeps energy and purity.
inline CheckResult check_closed_evolution(const ValidationOptions& o) {
    Rng rng(o.seed + 8);
    const SpinChainParams p = random_params(3, rng);
    const auto bat = normalized_battery(p);
    const DensityMatrix rho0 = random_pure_state(8, rng);
    const auto grid = uniform_grid(10.0, 0.5);
    const OperatorMatrix h = (1.0 + o.perturbation) * bat.h0;
    const double e0 = energy(rho0, bat.h0);
    double worst = 0.0;
    evolve(rho0, h, {}, grid, {}, [&](const TrajectorySample& s) {
        worst = std::max(worst, std::abs(energy(s.rho, bat.h0) - e0));
        worst = std::max(worst, std::abs(purity(s.rho) - 1.0));
    });
    return detail::make_check("closed evolution conserves energy and purity", worst, 1e-9);
}

/// Trace distance between two evolved states never grows.
inline CheckResult check_contractivity(const ValidationOptions& o, int pairs = 5) {
    Rng rng(o.seed + 9);
    double worst = -1.0;
    for (int n : {1, 2, 3}) {
        const auto gen = random_generator(n, rng);
        for (int i = 0; i < pairs; ++i) {
            const auto a = random_state(gen.h.dim(), rng);
            const auto b = random_state(gen.h.dim(), rng);
            worst = std::max(worst, contractivity_violation(gen.h, gen.terms, a.matrix(), b.matrix(),
                                                            uniform_grid(10.0, 0.1), 0.005) -
                                        1e-9 + o.perturbation);
        }
    }
    // shifted so that "passed" means no increase beyond 1e-9
    return {"trace-distance contractivity", worst <= 0.0, worst + 1e-9, 1e-9, std::to_string(pairs) + " pairs per size"};
}

/// Ergotropy bound: no unitary lowers the energy below the passive energy.
inline CheckResult check_passive_bound(const ValidationOptions& o, int unitaries = 50) {
    Rng rng(o.seed + 10);
    const auto bat = normalized_battery(random_params(2, rng));
    const DensityMatrix rho = random_state(4, rng);
    const double pas = passive_energy(rho, bat.normalized) * (1.0 + o.perturbation) + o.perturbation;
    double worst = 0.0;
    for (int i = 0; i < unitaries; ++i) {
        const CMatrix u = random_unitary(4, rng);
        const double e = energy(CMatrix(u * rho.matrix() * u.adjoint()), bat.h0);
        worst = std::max(worst, pas - e);
    }
    return detail::make_check("passive energy is a lower bound over random unitaries", worst, 1e-9);
}

struct ValidationReport {
    std::vector<CheckResult> checks;
    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }
};

inline ValidationReport run_validation(const ValidationOptions& o = {}) {
    ValidationReport r;
    r.checks.push_back(check_two_spin_eigenvalues(o));
    r.checks.push_back(check_two_spin_hamiltonian(o));
    r.checks.push_back(check_two_spin_states(o));
    r.checks.push_back(check_two_spin_generator(o, two_spin::Mode::Charging));
    r.checks.push_back(check_two_spin_generator(o, two_spin::Mode::Discharging));
    r.checks.push_back(check_expm_oracle(o));
    for (auto& c : check_analytic_decays(o)) r.checks.push_back(std::move(c));
    r.checks.push_back(check_pauli_algebra(o));
    r.checks.push_back(check_normalization(o));
    r.checks.push_back(check_trace_preservation(o));
    r.checks.push_back(check_closed_evolution(o));
    r.checks.push_back(check_contractivity(o));
    r.checks.push_back(check_passive_bound(o));
    return r;
}

} // namespace qbattery
