// lindblad.hpp: GKSL generator, trajectory integration and the superoperator oracle

#pragma once

#include "qbattery/core.hpp"
#include "qbattery/spin_chain.hpp"

#include <Eigen/SparseCore>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qbattery {

/// Local Pauli noise: X = bit flip, Z = phase flip, Y = bit-phase flip.
struct NoiseChannel {
    PauliAxis axis = PauliAxis::Z;
    double strength = 0.0;

    void validate() const {
        if (axis != PauliAxis::X && axis != PauliAxis::Y && axis != PauliAxis::Z)
            throw DomainError("noise channel axis must be x, y or z");
        if (!(strength >= 0.0 && strength <= 1.0))
            throw DomainError("noise strength must lie in [0, 1]");
    }
};

struct CollapseTerm {
    double rate = 0.0;
    OperatorMatrix op;
};

/// Per-site collapse operators; zero-rate channels are dropped.
/// Ordering: site-major, then sigma_+, sigma_-, noise channels.
inline std::vector<CollapseTerm> assemble_collapse(int n_sites, double gamma_plus,
                                                   double gamma_minus,
                                                   const std::vector<NoiseChannel>& noise) {
    if (gamma_plus < 0.0 || gamma_minus < 0.0)
        throw DomainError("collapse rates must be non-negative");
    for (const auto& ch : noise) ch.validate();
    std::vector<CollapseTerm> terms;
    for (int s = 1; s <= n_sites; ++s) {
        if (gamma_plus > 0.0) terms.push_back({gamma_plus, pauli_site(PauliAxis::Plus, s, n_sites)});
        if (gamma_minus > 0.0)
            terms.push_back({gamma_minus, pauli_site(PauliAxis::Minus, s, n_sites)});
        for (const auto& ch : noise)
            if (ch.strength > 0.0) terms.push_back({ch.strength, pauli_site(ch.axis, s, n_sites)});
    }
    return terms;
}

inline std::vector<CollapseTerm> assemble_collapse(int n_sites, double gamma_plus,
                                                   double gamma_minus, NoiseChannel noise) {
    return assemble_collapse(n_sites, gamma_plus, gamma_minus, std::vector<NoiseChannel>{noise});
}

namespace detail {

using SparseRowMajor = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Operator with at most one nonzero per row: (L x)_a = coef[a] * x[src[a]].
struct MonomialOperator {
    std::vector<Index> rows; // rows with a nonzero entry
    std::vector<Index> src;
    std::vector<cplx> coef;

    static std::optional<MonomialOperator> from(const CMatrix& m) {
        MonomialOperator out;
        for (Index r = 0; r < m.rows(); ++r) {
            Index hit = -1;
            for (Index c = 0; c < m.cols(); ++c) {
                if (m(r, c) == cplx{}) continue;
                if (hit >= 0) return std::nullopt;
                hit = c;
            }
            if (hit >= 0) {
                out.rows.push_back(r);
                out.src.push_back(hit);
                out.coef.push_back(m(r, hit));
            }
        }
        return out;
    }
};

inline SparseRowMajor to_sparse(const CMatrix& m) {
    SparseRowMajor s = m.sparseView(cplx(0.0), 0.0);
    s.makeCompressed();
    return s;
}

/// Real matrix in compressed-row form.
struct RealCsr {
    std::vector<Index> row_start{0};
    std::vector<Index> cols;
    std::vector<double> vals;

    static RealCsr from(const Eigen::MatrixXd& m) {
        RealCsr s;
        for (Index r = 0; r < m.rows(); ++r) {
            for (Index c = 0; c < m.cols(); ++c)
                if (m(r, c) != 0.0) {
                    s.cols.push_back(c);
                    s.vals.push_back(m(r, c));
                }
            s.row_start.push_back(static_cast<Index>(s.cols.size()));
        }
        return s;
    }
    bool empty() const { return vals.empty(); }
};

/// out (+)= S * x with S real sparse and x complex column-major dense.
inline void real_sparse_times_dense(const RealCsr& s, const CMatrix& x, CMatrix& out, bool accumulate,
                                    cplx scale = 1.0) {
    const Index n = x.cols();
    const Index rows = static_cast<Index>(s.row_start.size()) - 1;
    if (!accumulate) out.setZero(rows, n);
    for (Index c = 0; c < n; ++c) {
        const double* xc = reinterpret_cast<const double*>(x.col(c).data());
        cplx* oc = out.col(c).data();
        for (Index r = 0; r < rows; ++r) {
            double re = 0.0, im = 0.0;
            for (Index k = s.row_start[r]; k < s.row_start[r + 1]; ++k) {
                const double v = s.vals[k];
                const Index j = 2 * s.cols[k];
                re += v * xc[j];
                im += v * xc[j + 1];
            }
            oc[r] += scale * cplx(re, im);
        }
    }
}

} // namespace detail

/// Prepared GKSL generator
///   L[rho] = -i[H, rho] + sum_k G_k (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho}),
/// evaluated as -i(H_eff rho - rho H_eff^dag) + sum_k G_k L_k rho L_k^dag with
/// H_eff = H - (i/2) sum_k G_k L_k^dag L_k.
///
/// Jumps with at most one nonzero per row (all Pauli and ladder operators)
/// take an indexed path; diagonal ones are merged into a single elementwise
/// weight matrix.
class LindbladGenerator {
public:
    static constexpr Index kMergeDiagonalMaxDim = 1024;

    LindbladGenerator(const OperatorMatrix& h_total, const std::vector<CollapseTerm>& terms)
        : dim_(h_total.dim()) {
        CMatrix heff = h_total.matrix();
        bool have_diag = false;
        for (const auto& t : terms) {
            if (t.op.dim() != dim_)
                throw DomainError("collapse operator dimension does not match Hamiltonian");
            if (t.rate < 0.0) throw DomainError("collapse rate must be non-negative");
            if (t.rate == 0.0) continue;
            const CMatrix& l = t.op.matrix();
            heff -= 0.5 * kI * t.rate * (l.adjoint() * l);
            auto mono = detail::MonomialOperator::from(l);
            if (mono && dim_ <= kMergeDiagonalMaxDim && is_diagonal(*mono)) {
                if (!have_diag) diag_weights_ = CMatrix::Zero(dim_, dim_);
                have_diag = true;
                CVector c = CVector::Zero(dim_);
                for (std::size_t k = 0; k < mono->rows.size(); ++k) c(mono->rows[k]) = mono->coef[k];
                diag_weights_ += t.rate * (c * c.adjoint());
                continue;
            }
            Jump j;
            j.rate = t.rate;
            if (mono) {
                j.monomial = std::move(mono);
                // common phase: coef_a conj(coef_b) is then real
                const cplx ref = j.monomial->coef.empty() ? cplx(1.0) : j.monomial->coef.front();
                const cplx phase = ref / std::abs(ref);
                j.real_weights = true;
                for (const cplx& c : j.monomial->coef) {
                    const cplx w = c / phase;
                    if (std::abs(w.imag()) > 0.0) j.real_weights = false;
                    j.weights.push_back(w.real());
                }
            } else {
                j.sparse = detail::to_sparse(l);
            }
            jumps_.push_back(std::move(j));
        }
        if (have_diag) {
            diag_real_ = diag_weights_.imag().cwiseAbs().maxCoeff() == 0.0;
            if (diag_real_) diag_weights_real_ = diag_weights_.real();
        }
        heff_re_ = detail::RealCsr::from(heff.real());
        heff_im_ = detail::RealCsr::from(heff.imag());
    }

    Index dim() const noexcept { return dim_; }

    /// General right-hand side; valid for any square input.
    void apply(const CMatrix& rho, CMatrix& out) const {
        check_dim(rho);
        heff_times(rho, scratch_);
        // rho * H_eff^dag = (H_eff * rho^dag)^dag
        heff_times(rho.adjoint(), scratch2_);
        out.noalias() = -kI * (scratch_ - scratch2_.adjoint());
        add_jumps(rho, out);
    }

    /// Right-hand side for Hermitian input. The output is exactly Hermitian in
    /// floating point when the input is, which the integrator relies on.
    void apply_hermitian(const CMatrix& rho, CMatrix& out) const {
        check_dim(rho);
        // Y = rho H_eff^dag, so H_eff rho = Y^dag for Hermitian rho
        times_heff_adjoint(rho, scratch_);
        out.noalias() = -kI * (scratch_.adjoint() - scratch_);
        add_jumps(rho, out);
    }

private:
    struct Jump {
        double rate = 0.0;
        std::optional<detail::MonomialOperator> monomial;
        bool real_weights = false;
        std::vector<double> weights; // coef / common phase, when real
        detail::SparseRowMajor sparse;
    };

    static bool is_diagonal(const detail::MonomialOperator& m) {
        for (std::size_t k = 0; k < m.rows.size(); ++k)
            if (m.rows[k] != m.src[k]) return false;
        return true;
    }

    void check_dim(const CMatrix& rho) const {
        if (rho.rows() != dim_ || rho.cols() != dim_)
            throw DomainError("state dimension " + std::to_string(rho.rows()) +
                              " does not match generator dimension " + std::to_string(dim_));
    }

    /// out = x H_eff^dag as column updates: column c collects row c of H_eff.
    void times_heff_adjoint(const CMatrix& x, CMatrix& out) const {
        const Index n = x.rows();
        out.setZero(n, dim_);
        const auto axpy = [n](double v, const cplx* src, cplx* dst) {
            const double* s = reinterpret_cast<const double*>(src);
            double* d = reinterpret_cast<double*>(dst);
            for (Index i = 0; i < 2 * n; ++i) d[i] += v * s[i];
        };
        for (Index c = 0; c < dim_; ++c) {
            cplx* oc = out.col(c).data();
            for (Index k = heff_re_.row_start[c]; k < heff_re_.row_start[c + 1]; ++k)
                axpy(heff_re_.vals[k], x.col(heff_re_.cols[k]).data(), oc);
        }
        if (heff_im_.empty()) return;
        // conj(H_eff) contributes -i * Im part
        for (Index c = 0; c < dim_; ++c) {
            for (Index k = heff_im_.row_start[c]; k < heff_im_.row_start[c + 1]; ++k)
                out.col(c) -= (kI * heff_im_.vals[k]) * x.col(heff_im_.cols[k]);
        }
    }

    void heff_times(const CMatrix& x, CMatrix& out) const {
        detail::real_sparse_times_dense(heff_re_, x, out, false);
        if (!heff_im_.empty()) detail::real_sparse_times_dense(heff_im_, x, out, true, kI);
    }

    void add_jumps(const CMatrix& rho, CMatrix& out) const {
        if (diag_weights_.size()) {
            if (diag_real_) {
                const double* w = diag_weights_real_.data();
                const cplx* r = rho.data();
                cplx* o = out.data();
                for (Index k = 0; k < rho.size(); ++k) o[k] += w[k] * r[k];
            } else {
                out += diag_weights_.cwiseProduct(rho);
            }
        }
        for (const auto& j : jumps_) {
            if (j.monomial) {
                const auto& m = *j.monomial;
                const std::size_t n = m.rows.size();
                if (j.real_weights) {
                    for (std::size_t kb = 0; kb < n; ++kb) {
                        const double wb = j.rate * j.weights[kb];
                        const cplx* src_col = rho.col(m.src[kb]).data();
                        cplx* out_col = out.col(m.rows[kb]).data();
                        for (std::size_t ka = 0; ka < n; ++ka)
                            out_col[m.rows[ka]] += (j.weights[ka] * wb) * src_col[m.src[ka]];
                    }
                } else {
                    for (std::size_t kb = 0; kb < n; ++kb) {
                        const cplx cb = j.rate * std::conj(m.coef[kb]);
                        const cplx* src_col = rho.col(m.src[kb]).data();
                        cplx* out_col = out.col(m.rows[kb]).data();
                        for (std::size_t ka = 0; ka < n; ++ka)
                            out_col[m.rows[ka]] += (m.coef[ka] * cb) * src_col[m.src[ka]];
                    }
                }
            } else {
                CMatrix lr = j.sparse * rho;
                // (L rho) L^dag = (L (L rho)^dag)^dag
                CMatrix tmp = j.sparse * lr.adjoint();
                out += j.rate * tmp.adjoint();
            }
        }
    }

    Index dim_;
    detail::RealCsr heff_re_;
    detail::RealCsr heff_im_;
    CMatrix diag_weights_;
    Eigen::MatrixXd diag_weights_real_;
    bool diag_real_ = false;
    std::vector<Jump> jumps_;
    mutable CMatrix scratch_;
    mutable CMatrix scratch2_;
};

/// -i[H, rho] + sum_k G_k (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho})
inline CMatrix master_rhs(const CMatrix& rho, const OperatorMatrix& h_total,
                          const std::vector<CollapseTerm>& terms) {
    if (rho.rows() != h_total.dim() || rho.cols() != h_total.dim())
        throw DomainError("dimension mismatch between state and Hamiltonian");
    LindbladGenerator gen(h_total, terms);
    CMatrix out;
    gen.apply(rho, out);
    return out;
}

inline CMatrix master_rhs(const DensityMatrix& rho, const OperatorMatrix& h_total,
                          const std::vector<CollapseTerm>& terms) {
    return master_rhs(rho.matrix(), h_total, terms);
}

enum class IntegratorMethod { FixedRK4, AdaptiveRK45 };

struct IntegratorOptions {
    IntegratorMethod method = IntegratorMethod::FixedRK4;
    double dt = 0.005;        // fixed step, or initial step for the adaptive method
    double rel_tol = 1e-8;    // adaptive only
    double abs_tol = 1e-10;   // adaptive only
    int max_step_shrink = 40; // adaptive steps may shrink to dt * 2^-max_step_shrink
    bool check_positivity = true;

    void validate() const {
        if (!(dt > 0.0)) throw DomainError("integrator dt must be positive");
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw DomainError("integrator tolerances must be positive");
        if (max_step_shrink < 0) throw DomainError("max_step_shrink must be non-negative");
    }
};

/// Positivity violations beyond this bound abort the integration.
inline constexpr double kPositivityFailure = 1e-6;

struct TrajectorySample {
    std::size_t index;
    double t;
    const CMatrix& rho;
    const RVector& eigenvalues; // ascending; empty when positivity checks are off
    StateDiagnostics diagnostics;
};

using TrajectoryObserver = std::function<void(const TrajectorySample&)>;

struct EvolveStats {
    std::size_t steps = 0;
    std::size_t rejected = 0;
    double min_eigenvalue = 0.0;
    double max_trace_error = 0.0;
    double max_hermiticity_error = 0.0;
};

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw DomainError("time grid is empty");
    if (grid.front() != 0.0) throw DomainError("time grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw DomainError("time grid must be strictly increasing");
}

class Stepper {
public:
    Stepper(const LindbladGenerator& gen, const IntegratorOptions& opts) : gen_(gen), opts_(opts) {}

    void rk4(CMatrix& rho, double h) {
        gen_.apply_hermitian(rho, k1_);
        tmp_ = rho + (0.5 * h) * k1_;
        gen_.apply_hermitian(tmp_, k2_);
        tmp_ = rho + (0.5 * h) * k2_;
        gen_.apply_hermitian(tmp_, k3_);
        tmp_ = rho + h * k3_;
        gen_.apply_hermitian(tmp_, k4_);
        rho += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

    /// One Dormand-Prince attempt; returns the scaled error norm.
    double dopri(const CMatrix& rho, double h, CMatrix& out) {
        static constexpr double a21 = 1.0 / 5.0;
        static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                                a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
        static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                                a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                                a65 = -5103.0 / 18656.0;
        static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                                b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
        static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                                e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0,
                                e7 = -1.0 / 40.0;
        gen_.apply_hermitian(rho, k1_);
        tmp_ = rho + h * a21 * k1_;
        gen_.apply_hermitian(tmp_, k2_);
        tmp_ = rho + h * (a31 * k1_ + a32 * k2_);
        gen_.apply_hermitian(tmp_, k3_);
        tmp_ = rho + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
        gen_.apply_hermitian(tmp_, k4_);
        tmp_ = rho + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
        gen_.apply_hermitian(tmp_, k5_);
        tmp_ = rho + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        gen_.apply_hermitian(tmp_, k6_);
        out = rho + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        gen_.apply_hermitian(out, k7_);
        const CMatrix err = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
        double norm = 0.0;
        for (Index c = 0; c < err.cols(); ++c)
            for (Index r = 0; r < err.rows(); ++r) {
                const double scale =
                    opts_.abs_tol + opts_.rel_tol * std::max(std::abs(rho(r, c)), std::abs(out(r, c)));
                norm = std::max(norm, std::abs(err(r, c)) / scale);
            }
        return norm;
    }

private:
    const LindbladGenerator& gen_;
    const IntegratorOptions& opts_;
    CMatrix k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_;
};

} // namespace detail

/// Integrates the master equation and reports the state at every grid time.
///
/// Fixed RK4 splits each grid interval into ceil(interval / dt) equal steps.
/// Adaptive RK45 (Dormand-Prince) lands exactly on grid times. States are
/// checked at grid times only.
inline EvolveStats evolve(const DensityMatrix& rho0, const OperatorMatrix& h_total,
                          const std::vector<CollapseTerm>& terms, const std::vector<double>& t_grid,
                          const IntegratorOptions& opts, const TrajectoryObserver& observer) {
    opts.validate();
    detail::check_grid(t_grid);
    if (rho0.dim() != h_total.dim()) throw DomainError("initial state dimension mismatch");
    if (hermiticity_error(rho0.matrix()) >= DensityMatrix::kHermitianTol)
        throw DomainError("initial state is not Hermitian");

    const LindbladGenerator gen(h_total, terms);
    detail::Stepper stepper(gen, opts);
    EvolveStats stats;
    stats.min_eigenvalue = std::numeric_limits<double>::infinity();

    CMatrix rho = 0.5 * (rho0.matrix() + rho0.matrix().adjoint());
    RVector eig;

    auto emit = [&](std::size_t k, double t) {
        if (!rho.allFinite()) throw IntegrationError("non-finite state", t);
        StateDiagnostics d;
        d.trace_error = std::abs(rho.trace() - cplx(1.0, 0.0));
        d.hermiticity_error = hermiticity_error(rho);
        if (opts.check_positivity) {
            Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
            eig = es.eigenvalues();
            d.min_eigenvalue = eig(0);
            if (d.min_eigenvalue < -kPositivityFailure)
                throw IntegrationError("positivity violated, min eigenvalue " +
                                           std::to_string(d.min_eigenvalue),
                                       t);
            stats.min_eigenvalue = std::min(stats.min_eigenvalue, d.min_eigenvalue);
        }
        stats.max_trace_error = std::max(stats.max_trace_error, d.trace_error);
        stats.max_hermiticity_error = std::max(stats.max_hermiticity_error, d.hermiticity_error);
        if (observer) observer(TrajectorySample{k, t, rho, eig, d});
    };

    emit(0, t_grid[0]);
    if (opts.method == IntegratorMethod::FixedRK4) {
        for (std::size_t k = 1; k < t_grid.size(); ++k) {
            const double span = t_grid[k] - t_grid[k - 1];
            const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(span / opts.dt - 1e-9)));
            const double h = span / static_cast<double>(n);
            for (std::size_t s = 0; s < n; ++s) stepper.rk4(rho, h);
            stats.steps += n;
            emit(k, t_grid[k]);
        }
    } else {
        const double h_min = opts.dt * std::ldexp(1.0, -opts.max_step_shrink);
        double h = opts.dt;
        double t = 0.0;
        CMatrix trial;
        for (std::size_t k = 1; k < t_grid.size(); ++k) {
            const double target = t_grid[k];
            while (t < target) {
                const bool last = t + h >= target;
                const double step = last ? target - t : h;
                const double err = stepper.dopri(rho, step, trial);
                if (!std::isfinite(err)) throw IntegrationError("non-finite error estimate", t);
                if (err <= 1.0) {
                    rho = 0.5 * (trial + trial.adjoint());
                    t = last ? target : t + step;
                    ++stats.steps;
                    const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
                    if (!last || grow < 1.0) h = std::max(step, h_min) * grow;
                } else {
                    ++stats.rejected;
                    h = step * std::max(0.2, 0.9 * std::pow(err, -0.2));
                    if (h < h_min) throw IntegrationError("step size underflow", t);
                }
            }
            emit(k, target);
        }
    }
    if (!opts.check_positivity) stats.min_eigenvalue = 0.0;
    return stats;
}

/// Convenience overload that keeps every sample in memory.
inline std::vector<DensityMatrix> evolve(const DensityMatrix& rho0, const OperatorMatrix& h_total,
                                         const std::vector<CollapseTerm>& terms,
                                         const std::vector<double>& t_grid,
                                         const IntegratorOptions& opts = {}) {
    std::vector<DensityMatrix> out;
    out.reserve(t_grid.size());
    evolve(rho0, h_total, terms, t_grid, opts,
           [&](const TrajectorySample& s) { out.emplace_back(s.rho); });
    return out;
}

/// Fixed-step RK4 propagation of an arbitrary Hermitian operator (e.g. a
/// difference of two states) with no state checks. The generator is linear,
/// so propagating rho_a - rho_b equals the difference of the two trajectories.
inline void propagate_hermitian(const CMatrix& x0, const OperatorMatrix& h_total,
                                const std::vector<CollapseTerm>& terms, const std::vector<double>& t_grid,
                                double dt, const std::function<void(std::size_t, double, const CMatrix&)>& observer) {
    detail::check_grid(t_grid);
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    if (hermiticity_error(x0) >= DensityMatrix::kHermitianTol) throw DomainError("operator is not Hermitian");
    const LindbladGenerator gen(h_total, terms);
    IntegratorOptions opts;
    opts.dt = dt;
    detail::Stepper stepper(gen, opts);
    CMatrix x = 0.5 * (x0 + x0.adjoint());
    observer(0, t_grid[0], x);
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        const double span = t_grid[k] - t_grid[k - 1];
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(span / dt - 1e-9)));
        for (std::size_t s = 0; s < n; ++s) stepper.rk4(x, span / static_cast<double>(n));
        observer(k, t_grid[k], x);
    }
}

/// Uniform grid 0, spacing, 2*spacing, ... up to t_max (inclusive within 1e-9).
inline std::vector<double> uniform_grid(double t_max, double spacing) {
    if (!(t_max > 0.0) || !(spacing > 0.0)) throw DomainError("grid needs t_max > 0 and spacing > 0");
    const auto n = static_cast<std::size_t>(std::floor(t_max / spacing + 1e-9));
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g[i] = static_cast<double>(i) * spacing;
    return g;
}

inline constexpr Index kLiouvillianMaxDim = 64;

/// Column-stacking superoperator: vec(master_rhs(rho)) = L vec(rho).
inline CMatrix liouvillian_matrix(const OperatorMatrix& h_total, const std::vector<CollapseTerm>& terms) {
    const Index d = h_total.dim();
    if (d > kLiouvillianMaxDim)
        throw DomainError("Liouvillian oracle limited to dim <= 64, got " + std::to_string(d));
    const CMatrix id = CMatrix::Identity(d, d);
    const CMatrix& h = h_total.matrix();
    CMatrix lv = -kI * (CMatrix(Eigen::kroneckerProduct(id, h)) -
                        CMatrix(Eigen::kroneckerProduct(h.transpose(), id)));
    for (const auto& t : terms) {
        if (t.rate == 0.0) continue;
        if (t.op.dim() != d) throw DomainError("collapse operator dimension mismatch");
        const CMatrix& l = t.op.matrix();
        const CMatrix ldl = l.adjoint() * l;
        lv += t.rate * (CMatrix(Eigen::kroneckerProduct(l.conjugate(), l)) -
                        0.5 * CMatrix(Eigen::kroneckerProduct(id, ldl)) -
                        0.5 * CMatrix(Eigen::kroneckerProduct(ldl.transpose(), id)));
    }
    return lv;
}

inline CVector vectorize(const CMatrix& m) {
    return Eigen::Map<const CVector>(m.data(), m.size());
}

inline CMatrix unvectorize(const CVector& v, Index dim) {
    return Eigen::Map<const CMatrix>(v.data(), dim, dim);
}

/// Exact propagation rho(t) = unvec(exp(L t) vec(rho0)) for each requested time.
inline std::vector<CMatrix> expm_propagate(const OperatorMatrix& h_total,
                                           const std::vector<CollapseTerm>& terms,
                                           const CMatrix& rho0, const std::vector<double>& times) {
    const CMatrix lv = liouvillian_matrix(h_total, terms);
    const CVector v0 = vectorize(rho0);
    std::vector<CMatrix> out;
    out.reserve(times.size());
    for (double t : times) {
        const CMatrix prop = (lv * t).exp();
        out.push_back(unvectorize(prop * v0, rho0.rows()));
    }
    return out;
}

} // namespace qbattery
