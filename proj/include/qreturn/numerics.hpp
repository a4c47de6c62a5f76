#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "qreturn/errors.hpp"

namespace qreturn {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Numerical cutoffs used throughout the library.
///
/// eps_rank     — rank / support decisions, relative to the largest
///                eigenvalue magnitude of the operator at hand;
/// eps_check    — invariant validation (hermiticity, normalization, ...);
/// eps_converge — truncation of infinite series.
struct Tolerance {
    double eps_rank = 1e-10;
    double eps_check = 1e-9;
    double eps_converge = 1e-12;

    void validate() const {
        auto ok = [](double e) { return e > 0.0 && e < 1e-2; };
        if (!ok(eps_rank) || !ok(eps_check) || !ok(eps_converge))
            throw std::invalid_argument(
                "Tolerance fields must be strictly positive and < 1e-2");
    }
};

inline double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const ComplexMatrix& m) {
    return m.allFinite();
}

inline double hermiticity_defect(const ComplexMatrix& m) {
    return max_abs(m - m.adjoint());
}

inline void require_square(const ComplexMatrix& m, const char* what) {
    if (m.rows() != m.cols())
        throw DimensionMismatch(std::string(what) + ": matrix is not square");
}

inline void require_hermitian(const ComplexMatrix& m, double eps,
                              const char* what) {
    require_square(m, what);
    const double defect = hermiticity_defect(m);
    if (defect > eps)
        throw NotHermitian(std::string(what) + ": hermiticity defect " +
                           std::to_string(defect));
}

/// Column-stacking vectorization. vec(A rho B) = (B^T (x) A) vec(rho);
/// this convention is fixed once here and used everywhere a superoperator
/// matrix is built or consumed.
inline ComplexVector vectorize(const ComplexMatrix& m) {
    return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

inline ComplexMatrix unvectorize(const ComplexVector& v, Eigen::Index dim) {
    if (v.size() != dim * dim)
        throw DimensionMismatch("unvectorize: size mismatch");
    return Eigen::Map<const ComplexMatrix>(v.data(), dim, dim);
}

inline ComplexMatrix kronecker(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
    return out;
}

/// Hermitian idempotent operator. Houses both the relevant-subspace
/// projector and the no-return measurement filter.
class Projector {
public:
    explicit Projector(ComplexMatrix m, const Tolerance& tol = {})
        : mat_(std::move(m)) {
        require_hermitian(mat_, tol.eps_check, "Projector");
        const double idem = max_abs(mat_ * mat_ - mat_);
        if (idem > tol.eps_check)
            throw Error("Projector: idempotency defect " + std::to_string(idem));
    }

    static Projector identity(Eigen::Index dim) {
        return Projector(ComplexMatrix::Identity(dim, dim));
    }

    static Projector zero(Eigen::Index dim) {
        return Projector(ComplexMatrix::Zero(dim, dim));
    }

    /// Sum of |b><b| over an orthonormal set.
    static Projector onto_span(const std::vector<ComplexVector>& basis,
                               Eigen::Index dim) {
        ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
        for (const auto& b : basis) {
            if (b.size() != dim)
                throw DimensionMismatch("Projector::onto_span: vector size");
            m += b * b.adjoint();
        }
        return Projector(std::move(m));
    }

    const ComplexMatrix& matrix() const { return mat_; }
    Eigen::Index dim() const { return mat_.rows(); }

    /// Trace of a projector is its rank, an integer up to roundoff.
    int rank() const { return static_cast<int>(std::lround(mat_.trace().real())); }

private:
    ComplexMatrix mat_;
};

/// Normalized pure state.
class StateVector {
public:
    explicit StateVector(ComplexVector amplitudes, const Tolerance& tol = {})
        : amps_(std::move(amplitudes)) {
        const double n = amps_.norm();
        if (std::abs(n - 1.0) > tol.eps_check)
            throw NotNormalized("StateVector: norm " + std::to_string(n));
    }

    static StateVector basis(Eigen::Index dim, Eigen::Index index) {
        if (index < 0 || index >= dim)
            throw IndexOutOfRange("StateVector::basis: index " +
                                  std::to_string(index) + " for dim " +
                                  std::to_string(dim));
        ComplexVector v = ComplexVector::Zero(dim);
        v(index) = 1.0;
        return StateVector(std::move(v));
    }

    const ComplexVector& amplitudes() const { return amps_; }
    Eigen::Index dim() const { return amps_.size(); }

private:
    ComplexVector amps_;
};

/// Projector onto the nonzero eigenspace (support) of a Hermitian PSD
/// operator. Eigenvalues are kept when they exceed eps_rank times the
/// largest eigenvalue; the cutoff is relative so the result is invariant
/// under trace normalization.
inline Projector support_projector(const ComplexMatrix& sigma,
                                   const Tolerance& tol = {}) {
    require_hermitian(sigma, tol.eps_check, "support_projector");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sigma);
    const RealVector& lam = es.eigenvalues();
    const double lam_max = lam.maxCoeff();
    if (lam_max <= tol.eps_check)
        return Projector::zero(sigma.rows());
    if (lam.minCoeff() < -tol.eps_check * lam_max)
        throw NegativeEigenvalue("support_projector: eigenvalue " +
                                 std::to_string(lam.minCoeff()));
    ComplexMatrix proj = ComplexMatrix::Zero(sigma.rows(), sigma.cols());
    for (Eigen::Index k = 0; k < lam.size(); ++k)
        if (lam(k) > tol.eps_rank * lam_max)
            proj += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
    return Projector(std::move(proj), tol);
}

/// U = exp(-i H) through the eigendecomposition of the Hermitian H.
/// Exact to machine precision for Hermitian generators.
inline ComplexMatrix unitary_from_hamiltonian(const ComplexMatrix& hamiltonian,
                                              const Tolerance& tol = {}) {
    require_hermitian(hamiltonian, tol.eps_check, "unitary_from_hamiltonian");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hamiltonian);
    ComplexVector phases(es.eigenvalues().size());
    for (Eigen::Index k = 0; k < phases.size(); ++k)
        phases(k) = std::exp(Complex(0.0, -es.eigenvalues()(k)));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// Right/left eigendecomposition of a general (non-Hermitian) matrix.
/// `left` is the inverse of the right-eigenvector matrix, so rows of
/// `left` are the left eigenvectors and left * right = I. A matrix whose
/// right-eigenvector basis is numerically singular is flagged defective
/// instead of failing; callers fall back to direct summation.
struct EigenSystem {
    ComplexVector eigenvalues;
    ComplexMatrix right; // columns: right eigenvectors
    ComplexMatrix left;  // rows: left eigenvectors (empty when defective)
    bool defective = false;
    double rcond = 0.0; // reciprocal condition estimate of `right`
};

inline EigenSystem eig_general(const ComplexMatrix& m, const Tolerance& tol = {}) {
    require_square(m, "eig_general");
    Eigen::ComplexEigenSolver<ComplexMatrix> es(m);
    if (es.info() != Eigen::Success)
        throw Error("eig_general: eigensolver failed to converge");
    EigenSystem sys;
    sys.eigenvalues = es.eigenvalues();
    sys.right = es.eigenvectors();
    Eigen::PartialPivLU<ComplexMatrix> lu(sys.right);
    sys.rcond = lu.rcond();
    if (!(sys.rcond > tol.eps_rank)) {
        sys.defective = true;
        return sys;
    }
    sys.left = lu.solve(ComplexMatrix::Identity(m.rows(), m.cols()));
    return sys;
}

/// Gram-Schmidt extension of an orthonormal basis. Each candidate's
/// component orthogonal to the current span is appended when its norm
/// exceeds eps_rank; candidates already inside the span are absorbed
/// silently. Two projection passes keep the result orthonormal to
/// machine precision.
inline std::vector<ComplexVector> extend_orthonormal_basis(
    std::vector<ComplexVector> basis, const std::vector<ComplexVector>& candidates,
    const Tolerance& tol = {}) {
    for (size_t i = 0; i < basis.size(); ++i)
        for (size_t k = 0; k < i; ++k)
            if (std::abs(basis[i].dot(basis[k])) > tol.eps_check)
                throw Error("extend_orthonormal_basis: input basis not orthonormal");
    for (const auto& cand : candidates) {
        ComplexVector v = cand;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis)
                v -= b * b.dot(v);
        const double n = v.norm();
        if (n > tol.eps_rank)
            basis.push_back(v / n);
    }
    return basis;
}

} // namespace qreturn
