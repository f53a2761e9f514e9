// core.hpp: matrix aliases, error types and the operator/state carriers

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <bit>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qbattery {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr cplx kI{0.0, 1.0};

/// Raised when an argument violates a documented precondition.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a quantity that must be real or finite is numerically corrupted.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the integrator; carries the normalized time at which it gave up.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double time)
        : std::runtime_error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

inline double max_abs(const CMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_error(const CMatrix& m) {
    return max_abs(m - m.adjoint());
}

inline bool is_power_of_two(Index n) {
    return n > 0 && std::has_single_bit(static_cast<std::size_t>(n));
}

/// Dense square matrix on a 2^N-dimensional Hilbert space.
class OperatorMatrix {
public:
    static constexpr double kHermitianTol = 1e-12;

    OperatorMatrix() = default;

    explicit OperatorMatrix(CMatrix entries, bool hermitian_hint = false)
        : entries_(std::move(entries)), hermitian_(hermitian_hint) {
        if (entries_.rows() != entries_.cols())
            throw DomainError("operator matrix must be square");
        if (!is_power_of_two(entries_.rows()))
            throw DomainError("operator dimension must be a power of two, got " +
                              std::to_string(entries_.rows()));
        if (hermitian_ && hermiticity_error(entries_) >= kHermitianTol)
            throw DomainError("operator flagged Hermitian is not Hermitian to 1e-12");
    }

    const CMatrix& matrix() const noexcept { return entries_; }
    Index dim() const noexcept { return entries_.rows(); }
    bool hermitian_hint() const noexcept { return hermitian_; }
    int n_sites() const noexcept { return std::countr_zero(static_cast<std::size_t>(dim())); }

    cplx operator()(Index r, Index c) const { return entries_(r, c); }

    friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
        return OperatorMatrix(a.entries_ + b.entries_, a.hermitian_ && b.hermitian_);
    }
    friend OperatorMatrix operator*(double s, const OperatorMatrix& a) {
        return OperatorMatrix(s * a.entries_, a.hermitian_);
    }
    friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
        return OperatorMatrix(a.entries_ * b.entries_);
    }

private:
    CMatrix entries_;
    bool hermitian_ = false;
};

/// Invariant residuals of a density matrix.
struct StateDiagnostics {
    double trace_error = 0.0;       // |Tr rho - 1|
    double hermiticity_error = 0.0; // max |rho - rho^dagger|
    double min_eigenvalue = 0.0;
};

/// Trace-one, Hermitian, positive semidefinite state.
///
/// Construction does not validate (trajectories are checked by the integrator
/// at sample times); call diagnostics() or validate() when a check is needed.
class DensityMatrix {
public:
    static constexpr double kTraceTol = 1e-9;
    static constexpr double kHermitianTol = 1e-10;
    static constexpr double kPositivityTol = 1e-8;

    DensityMatrix() = default;
    explicit DensityMatrix(CMatrix entries) : entries_(std::move(entries)) {
        if (entries_.rows() != entries_.cols())
            throw DomainError("density matrix must be square");
    }

    static DensityMatrix pure(const CVector& psi) {
        const CVector v = psi / psi.norm();
        return DensityMatrix(v * v.adjoint());
    }

    static DensityMatrix maximally_mixed(Index dim) {
        return DensityMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
    }

    const CMatrix& matrix() const noexcept { return entries_; }
    Index dim() const noexcept { return entries_.rows(); }
    cplx operator()(Index r, Index c) const { return entries_(r, c); }

    /// Eigenvalues in ascending order; the input is symmetrized first.
    RVector eigenvalues() const {
        const CMatrix sym = 0.5 * (entries_ + entries_.adjoint());
        Eigen::SelfAdjointEigenSolver<CMatrix> es(sym, Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }

    StateDiagnostics diagnostics() const {
        StateDiagnostics d;
        d.trace_error = std::abs(entries_.trace() - cplx(1.0, 0.0));
        d.hermiticity_error = hermiticity_error(entries_);
        d.min_eigenvalue = dim() ? eigenvalues()(0) : 0.0;
        return d;
    }

    bool valid() const {
        const auto d = diagnostics();
        return d.trace_error < kTraceTol && d.hermiticity_error < kHermitianTol &&
               d.min_eigenvalue >= -kPositivityTol;
    }

    void validate() const {
        const auto d = diagnostics();
        if (d.trace_error >= kTraceTol)
            throw DomainError("density matrix trace deviates from one by " +
                              std::to_string(d.trace_error));
        if (d.hermiticity_error >= kHermitianTol)
            throw DomainError("density matrix is not Hermitian");
        if (d.min_eigenvalue < -kPositivityTol)
            throw DomainError("density matrix has negative eigenvalue " +
                              std::to_string(d.min_eigenvalue));
    }

private:
    CMatrix entries_;
};

} // namespace qbattery
