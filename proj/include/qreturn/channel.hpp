#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qreturn/numerics.hpp"

namespace qreturn {

/// Density operator rho. Conditional (monitored) states carry trace < 1,
/// so the trace is bounded by 1 + eps but not required to equal it.
/// Construction checks hermiticity, the trace bound and finiteness;
/// positivity needs an eigendecomposition and is checked on demand via
/// min_eigenvalue().
class DensityOperator {
public:
    explicit DensityOperator(ComplexMatrix m, const Tolerance& tol = {})
        : mat_(std::move(m)) {
        require_hermitian(mat_, tol.eps_check, "DensityOperator");
        if (!all_finite(mat_))
            throw Error("DensityOperator: non-finite entries");
        if (trace() > 1.0 + tol.eps_check)
            throw Error("DensityOperator: trace " + std::to_string(trace()) +
                        " exceeds 1");
    }

    static DensityOperator pure(const StateVector& psi) {
        return DensityOperator(psi.amplitudes() * psi.amplitudes().adjoint());
    }

    static DensityOperator maximally_mixed(Eigen::Index dim) {
        return DensityOperator(ComplexMatrix::Identity(dim, dim) /
                               static_cast<double>(dim));
    }

    const ComplexMatrix& matrix() const { return mat_; }
    Eigen::Index dim() const { return mat_.rows(); }
    double trace() const { return mat_.trace().real(); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(
            mat_, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

private:
    ComplexMatrix mat_;
};

/// A quantum channel as an ordered Kraus set {A_j}; one application maps
/// rho to sum_j A_j rho A_j^dagger. The set is never pruned or
/// canonicalized, so constructed channels stay bit-stable across runs.
class QuantumChannel {
public:
    /// Validating constructor: requires sum_j A_j^dagger A_j = I.
    QuantumChannel(Eigen::Index dim, std::vector<ComplexMatrix> kraus,
                   const Tolerance& tol = {})
        : QuantumChannel(dim, std::move(kraus), Raw{}) {
        const double defect = normalization_defect();
        if (defect > tol.eps_check)
            throw Error("QuantumChannel: Kraus normalization defect " +
                        std::to_string(defect));
    }

    /// Raw Kraus set with the normalization check skipped. Needed for
    /// restrictions (normalized against a projector, not I) and for duals
    /// of non-unital channels, which are not physical channels.
    static QuantumChannel unchecked(Eigen::Index dim,
                                    std::vector<ComplexMatrix> kraus) {
        return QuantumChannel(dim, std::move(kraus), Raw{});
    }

    static QuantumChannel identity(Eigen::Index dim) {
        return QuantumChannel(dim, {ComplexMatrix::Identity(dim, dim)});
    }

    /// Single-Kraus channel rho -> U rho U^dagger.
    static QuantumChannel unitary(const ComplexMatrix& u,
                                  const Tolerance& tol = {}) {
        require_square(u, "QuantumChannel::unitary");
        const double defect = max_abs(
            u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols()));
        if (defect > tol.eps_check)
            throw Error("QuantumChannel::unitary: unitarity defect " +
                        std::to_string(defect));
        return QuantumChannel(u.rows(), {u});
    }

    Eigen::Index dim() const { return dim_; }
    const std::vector<ComplexMatrix>& kraus() const { return kraus_; }
    size_t kraus_count() const { return kraus_.size(); }

    /// || sum_j A_j^dagger A_j - I ||_max
    double normalization_defect() const {
        ComplexMatrix s = ComplexMatrix::Zero(dim_, dim_);
        for (const auto& a : kraus_) s += a.adjoint() * a;
        return max_abs(s - ComplexMatrix::Identity(dim_, dim_));
    }

    /// || sum_j A_j A_j^dagger - I ||_max
    double unitality_defect() const {
        ComplexMatrix s = ComplexMatrix::Zero(dim_, dim_);
        for (const auto& a : kraus_) s += a * a.adjoint();
        return max_abs(s - ComplexMatrix::Identity(dim_, dim_));
    }

private:
    struct Raw {};
    QuantumChannel(Eigen::Index dim, std::vector<ComplexMatrix> kraus, Raw)
        : dim_(dim), kraus_(std::move(kraus)) {
        if (dim_ < 1) throw Error("QuantumChannel: dim must be positive");
        if (kraus_.empty()) throw Error("QuantumChannel: empty Kraus set");
        for (const auto& a : kraus_)
            if (a.rows() != dim_ || a.cols() != dim_)
                throw DimensionMismatch("QuantumChannel: Kraus operator shape");
    }

    Eigen::Index dim_;
    std::vector<ComplexMatrix> kraus_;
};

struct ValidationReport {
    bool trace_preserving = false;
    bool completely_positive = false;
    bool unital_global = false;
    double max_normalization_defect = 0.0;
    double max_unitality_defect = 0.0;
};

/// rho -> sum_j A_j rho A_j^dagger
inline DensityOperator apply(const QuantumChannel& channel,
                             const DensityOperator& rho) {
    if (channel.dim() != rho.dim())
        throw DimensionMismatch("apply: channel dim " +
                                std::to_string(channel.dim()) + " vs state dim " +
                                std::to_string(rho.dim()));
    ComplexMatrix out = ComplexMatrix::Zero(rho.dim(), rho.dim());
    for (const auto& a : channel.kraus()) out += a * rho.matrix() * a.adjoint();
    return DensityOperator(std::move(out));
}

/// Choi matrix sum_j vec(A_j) vec(A_j)^dagger under the column-stacking
/// convention. PSD by construction for any Kraus set; the validation
/// report recomputes its spectrum anyway so externally loaded matrices
/// get an honest verdict.
inline ComplexMatrix choi_matrix(const QuantumChannel& channel) {
    const Eigen::Index d2 = channel.dim() * channel.dim();
    ComplexMatrix choi = ComplexMatrix::Zero(d2, d2);
    for (const auto& a : channel.kraus()) {
        const ComplexVector v = vectorize(a);
        choi += v * v.adjoint();
    }
    return choi;
}

inline ValidationReport validate(const QuantumChannel& channel,
                                 const Tolerance& tol = {}) {
    ValidationReport report;
    report.max_normalization_defect = channel.normalization_defect();
    report.max_unitality_defect = channel.unitality_defect();
    report.trace_preserving = report.max_normalization_defect < tol.eps_check;
    report.unital_global = report.max_unitality_defect < tol.eps_check;

    const ComplexMatrix choi = choi_matrix(channel);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(choi, Eigen::EigenvaluesOnly);
    const double cutoff = -tol.eps_check * choi.trace().real() /
                          static_cast<double>(channel.dim());
    report.completely_positive = es.eigenvalues().minCoeff() >= cutoff;
    return report;
}

/// Heisenberg-picture dual, Kraus set {A_j^dagger}. Trace preserving iff
/// the input is unital; for non-unital inputs the result is returned raw
/// (it is not a physical channel).
inline QuantumChannel dual(const QuantumChannel& channel) {
    std::vector<ComplexMatrix> kraus;
    kraus.reserve(channel.kraus_count());
    for (const auto& a : channel.kraus()) kraus.push_back(a.adjoint());
    return QuantumChannel::unchecked(channel.dim(), std::move(kraus));
}

/// Concatenation (outer after inner): Kraus set {B_k A_j}, inner-major
/// order, so kraus[k*D_in + j] = B_k * A_j.
inline QuantumChannel compose(const QuantumChannel& outer,
                              const QuantumChannel& inner) {
    if (outer.dim() != inner.dim())
        throw DimensionMismatch("compose: channel dims differ");
    std::vector<ComplexMatrix> kraus;
    kraus.reserve(outer.kraus_count() * inner.kraus_count());
    for (const auto& b : outer.kraus())
        for (const auto& a : inner.kraus()) kraus.push_back(b * a);
    return QuantumChannel::unchecked(outer.dim(), std::move(kraus));
}

/// Restriction to a subspace: Kraus set {A_j P}. Trace preserving only on
/// states supported inside P, so normalization is checked against P in
/// place of I: sum_j P A_j^dagger A_j P = P.
inline QuantumChannel restrict(const QuantumChannel& channel,
                               const Projector& pi,
                               const Tolerance& tol = {}) {
    if (channel.dim() != pi.dim())
        throw DimensionMismatch("restrict: projector dim");
    std::vector<ComplexMatrix> kraus;
    kraus.reserve(channel.kraus_count());
    ComplexMatrix norm = ComplexMatrix::Zero(channel.dim(), channel.dim());
    for (const auto& a : channel.kraus()) {
        kraus.push_back(a * pi.matrix());
        norm += kraus.back().adjoint() * kraus.back();
    }
    if (max_abs(norm - pi.matrix()) > tol.eps_check)
        throw Error("restrict: normalization against projector failed");
    return QuantumChannel::unchecked(channel.dim(), std::move(kraus));
}

/// The no-return filter I - |psi><psi|. Applying it to a state is
/// conjugation: sigma -> P sigma P.
inline Projector measurement_filter(const StateVector& psi) {
    const Eigen::Index d = psi.dim();
    return Projector(ComplexMatrix::Identity(d, d) -
                     psi.amplitudes() * psi.amplitudes().adjoint());
}

/// dim^2 x dim^2 matrix of rho -> S[rho] under column stacking:
/// sum_j conj(A_j) (x) A_j.
inline ComplexMatrix to_superoperator_matrix(const QuantumChannel& channel) {
    const Eigen::Index d2 = channel.dim() * channel.dim();
    ComplexMatrix s = ComplexMatrix::Zero(d2, d2);
    for (const auto& a : channel.kraus()) s += kronecker(a.conjugate(), a);
    return s;
}

/// Matrix of rho -> filter * S[rho] * filter (the monitored step M S).
inline ComplexMatrix to_superoperator_matrix(const QuantumChannel& channel,
                                             const Projector& filter) {
    if (filter.dim() != channel.dim())
        throw DimensionMismatch("to_superoperator_matrix: filter dim");
    const ComplexMatrix& p = filter.matrix();
    return kronecker(p.conjugate(), p) * to_superoperator_matrix(channel);
}

/// Psi-unitality test: sum_j A_j P A_j^dagger = P.
inline bool is_unital_on(const QuantumChannel& channel, const Projector& pi,
                         const Tolerance& tol = {}) {
    if (channel.dim() != pi.dim())
        throw DimensionMismatch("is_unital_on: projector dim");
    ComplexMatrix s = ComplexMatrix::Zero(channel.dim(), channel.dim());
    for (const auto& a : channel.kraus()) s += a * pi.matrix() * a.adjoint();
    return max_abs(s - pi.matrix()) < tol.eps_check;
}

} // namespace qreturn
