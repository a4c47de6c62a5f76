#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "qreturn/builders.hpp"
#include "qreturn/channel.hpp"

namespace qreturn {

/// Everything a single monitored-walk analysis produces. Series use the
/// q_0 = 1 convention: q[t] is the no-return probability after t steps
/// (q[0] = 1), p[t-1] is the first-return probability at step t, and
/// partial_T[t] = sum_{s<=t} q[s] is the horizon-t expected return time.
struct ReturnAnalysis {
    enum class Method { Spectral, Summation };

    std::vector<double> q;
    std::vector<double> p;
    std::vector<double> partial_T;
    double exact_T = std::numeric_limits<double>::quiet_NaN();
    bool recurrent = false;
    int relevant_dim = 0;
    bool psi_unital = false;
    Method method = Method::Spectral;
};

/// Spectral decomposition of the monitored timestep M S: eigenvalues
/// alpha_n, expansion coefficients c_n of |psi><psi| over the
/// eigen-operators chi_n, and the traces Tr chi_n. All lists have length
/// dim^2. When the eigenbasis is numerically singular only `eigenvalues`
/// and `defective` are meaningful.
struct SpectralData {
    ComplexVector eigenvalues;
    ComplexVector coefficients;
    ComplexVector traces;
    bool defective = false;
};

struct RelevantSubspace {
    Projector projector;
    int dim = 0;
    std::vector<ComplexVector> basis; // orthonormal Kraus-orbit basis, basis[0] = psi
};

/// Smallest subspace containing |psi> and invariant under every Kraus
/// operator, built by orbit closure: repeatedly apply all Kraus operators
/// to the frontier of newly found directions and orthonormalize.
/// Terminates after at most dim rounds.
inline RelevantSubspace relevant_subspace(const QuantumChannel& channel,
                                          const StateVector& psi,
                                          const Tolerance& tol = {}) {
    if (channel.dim() != psi.dim())
        throw DimensionMismatch("relevant_subspace: psi dim");
    std::vector<ComplexVector> basis = {psi.amplitudes()};
    std::vector<ComplexVector> frontier = basis;
    while (!frontier.empty() &&
           basis.size() < static_cast<size_t>(channel.dim())) {
        std::vector<ComplexVector> candidates;
        candidates.reserve(frontier.size() * channel.kraus_count());
        for (const auto& f : frontier)
            for (const auto& a : channel.kraus()) candidates.push_back(a * f);
        const size_t before = basis.size();
        basis = extend_orthonormal_basis(std::move(basis), candidates, tol);
        frontier.assign(basis.begin() + before, basis.end());
    }
    RelevantSubspace out{Projector::onto_span(basis, channel.dim()),
                         static_cast<int>(basis.size()), std::move(basis)};
    return out;
}

/// One monitored step: rho -> (I - |psi><psi|) S[rho] (I - |psi><psi|).
inline DensityOperator conditional_step(const QuantumChannel& channel,
                                        const StateVector& psi,
                                        const DensityOperator& rho) {
    if (psi.dim() != channel.dim())
        throw DimensionMismatch("conditional_step: psi dim");
    const DensityOperator evolved = apply(channel, rho);
    const ComplexMatrix filter =
        ComplexMatrix::Identity(channel.dim(), channel.dim()) -
        psi.amplitudes() * psi.amplitudes().adjoint();
    return DensityOperator(filter * evolved.matrix() * filter);
}

/// q_t, p_t and the partial expected return times up to the horizon,
/// computed by direct iteration of the monitored step.
inline ReturnAnalysis return_series(const QuantumChannel& channel,
                                    const StateVector& psi, long horizon,
                                    const Tolerance& tol = {}) {
    (void)tol;
    if (horizon < 1) throw Error("return_series: horizon must be >= 1");
    ReturnAnalysis out;
    out.method = ReturnAnalysis::Method::Summation;
    out.q.reserve(horizon + 1);
    out.p.reserve(horizon);
    out.partial_T.reserve(horizon + 1);
    out.q.push_back(1.0);
    out.partial_T.push_back(1.0);
    DensityOperator rho = DensityOperator::pure(psi);
    for (long t = 1; t <= horizon; ++t) {
        rho = conditional_step(channel, psi, rho);
        const double qt = rho.trace();
        out.p.push_back(out.q.back() - qt);
        out.q.push_back(qt);
        out.partial_T.push_back(out.partial_T.back() + qt);
    }
    return out;
}

/// Matrix of the monitored step restricted to the relevant subspace,
/// expressed in the orbit-closure basis (rank^2 x rank^2). Working in
/// this basis keeps exterior eigenvalue-1 modes out of the spectrum.
inline ComplexMatrix restricted_monitored_matrix(
    const QuantumChannel& channel, const StateVector& psi,
    const std::vector<ComplexVector>& basis) {
    const Eigen::Index d = channel.dim();
    const Eigen::Index r = static_cast<Eigen::Index>(basis.size());
    ComplexMatrix b(d, r);
    for (Eigen::Index k = 0; k < r; ++k) b.col(k) = basis[k];
    const ComplexMatrix filter = ComplexMatrix::Identity(d, d) -
                                 psi.amplitudes() * psi.amplitudes().adjoint();
    ComplexMatrix out = ComplexMatrix::Zero(r * r, r * r);
    for (const auto& a : channel.kraus()) {
        const ComplexMatrix k = b.adjoint() * filter * a * b;
        out += kronecker(k.conjugate(), k);
    }
    return out;
}

namespace detail {

/// Direct-summation expected return time with a geometric tail bound:
/// accumulate q_t until the measured decay ratio rho_hat = q_t/q_{t-1}
/// is < 1 and the tail estimate q_t rho_hat/(1 - rho_hat) drops below
/// eps_converge (heuristic bound; the ratio is validated < 1).
inline double summed_return_time(const QuantumChannel& channel,
                                 const StateVector& psi, const Tolerance& tol,
                                 long max_horizon) {
    DensityOperator rho = DensityOperator::pure(psi);
    double total = 1.0;
    double prev_q = 1.0;
    for (long t = 1; t <= max_horizon; ++t) {
        rho = conditional_step(channel, psi, rho);
        const double qt = rho.trace();
        total += qt;
        if (qt <= 0.0) return total; // series terminated exactly
        if (prev_q > 0.0) {
            const double ratio = qt / prev_q;
            if (ratio < 1.0) {
                const double tail = qt * ratio / (1.0 - ratio);
                if (tail < tol.eps_converge) return total + tail;
            }
        }
        prev_q = qt;
    }
    throw NonConvergent(
        "summed_return_time: tail bound not met within horizon " +
        std::to_string(max_horizon));
}

} // namespace detail

struct SpectralReturn {
    ReturnAnalysis analysis;
    SpectralData spectral;
};

/// Expected return time through the spectral decomposition of the
/// monitored step M S on the full operator space:
///   T = sum_n c_n/(1 - alpha_n) Tr chi_n,
/// with terms |c_n Tr chi_n| < eps_converge dropped. A surviving term
/// with |alpha_n| >= 1 - eps_rank makes the walk non-recurrent and T
/// infinite; division by (1 - alpha_n) is therefore never taken near the
/// unit circle. Near-defective eigenbases fall back to direct summation.
inline SpectralReturn expected_return_spectral(const QuantumChannel& channel,
                                               const StateVector& psi,
                                               const Tolerance& tol = {},
                                               long max_horizon = 1000000) {
    if (channel.dim() != psi.dim())
        throw DimensionMismatch("expected_return_spectral: psi dim");
    const ComplexMatrix monitored =
        to_superoperator_matrix(channel, measurement_filter(psi));
    const EigenSystem es = eig_general(monitored, tol);

    SpectralReturn out;
    out.spectral.eigenvalues = es.eigenvalues;
    out.spectral.defective = es.defective;

    if (es.defective) {
        out.analysis.exact_T =
            detail::summed_return_time(channel, psi, tol, max_horizon);
        out.analysis.recurrent = true;
        out.analysis.method = ReturnAnalysis::Method::Summation;
        return out;
    }

    const Eigen::Index n = monitored.rows();
    const Eigen::Index d = channel.dim();
    const ComplexVector rho0 =
        vectorize(psi.amplitudes() * psi.amplitudes().adjoint());
    out.spectral.coefficients = es.left * rho0;
    out.spectral.traces = ComplexVector::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Complex tr = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) tr += es.right(i * d + i, k);
        out.spectral.traces(k) = tr;
    }

    Complex total = 0.0;
    double scale = 1.0;
    bool infinite = false;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Complex w = out.spectral.coefficients(k) * out.spectral.traces(k);
        if (std::abs(w) < tol.eps_converge) continue;
        const Complex alpha = es.eigenvalues(k);
        if (std::abs(alpha) >= 1.0 - tol.eps_rank) {
            infinite = true;
            break;
        }
        total += w / (1.0 - alpha);
        scale += std::abs(w) / std::abs(1.0 - alpha);
    }

    out.analysis.method = ReturnAnalysis::Method::Spectral;
    if (infinite) {
        out.analysis.exact_T = std::numeric_limits<double>::infinity();
        out.analysis.recurrent = false;
        return out;
    }
    if (std::abs(total.imag()) > tol.eps_check * scale)
        throw Error("expected_return_spectral: imaginary residue " +
                    std::to_string(total.imag()));
    out.analysis.exact_T = total.real();
    out.analysis.recurrent = true;
    return out;
}

/// Horizon-L expected return time from the spectral data:
/// T^(L) = sum_n c_n (alpha_n^{L+1} - 1)/(alpha_n - 1) Tr chi_n.
inline double partial_return_from_spectral(const SpectralData& sd, long horizon) {
    if (sd.defective)
        throw Error("partial_return_from_spectral: spectral data is defective");
    Complex total = 0.0;
    for (Eigen::Index k = 0; k < sd.eigenvalues.size(); ++k) {
        const Complex w = sd.coefficients(k) * sd.traces(k);
        if (std::abs(w) == 0.0) continue;
        const Complex alpha = sd.eigenvalues(k);
        if (std::abs(alpha - 1.0) < 1e-12) {
            total += w * static_cast<double>(horizon + 1);
        } else {
            total += w * (std::pow(alpha, static_cast<double>(horizon + 1)) - 1.0) /
                     (alpha - 1.0);
        }
    }
    return total.real();
}

/// Full analysis: relevant subspace, Psi-unitality, exact expected return
/// time, and the return-probability series up to `series_horizon`.
/// For Psi-unital walks |exact_T - dim| must stay below quantization_tol;
/// a violation throws TheoremViolation since it can only be a numerical
/// defect.
inline ReturnAnalysis quantization_verdict(const QuantumChannel& channel,
                                           const StateVector& psi,
                                           const Tolerance& tol = {},
                                           double quantization_tol = 1e-6,
                                           long series_horizon = 100) {
    const RelevantSubspace rel = relevant_subspace(channel, psi, tol);
    const bool unital = is_unital_on(channel, rel.projector, tol);
    SpectralReturn spectral = expected_return_spectral(channel, psi, tol);
    ReturnAnalysis series = return_series(channel, psi, series_horizon, tol);

    ReturnAnalysis out = std::move(spectral.analysis);
    out.q = std::move(series.q);
    out.p = std::move(series.p);
    out.partial_T = std::move(series.partial_T);
    out.relevant_dim = rel.dim;
    out.psi_unital = unital;

    if (unital) {
        const double defect = std::abs(out.exact_T - rel.dim);
        if (!(defect < quantization_tol))
            throw TheoremViolation(
                "quantization_verdict: Psi-unital walk returned T = " +
                    std::to_string(out.exact_T) + " but relevant dim = " +
                    std::to_string(rel.dim) + " (defect " +
                    std::to_string(defect) + ")",
                defect);
    }
    return out;
}

/// Accumulated conditional state sum_t rho_cond(t). For Psi-unital
/// dynamics this equals the relevant-subspace projector; its trace is the
/// expected return time. Trace may exceed 1, so the result is a plain
/// Hermitian PSD matrix rather than a DensityOperator.
inline ComplexMatrix tilde_rho(const QuantumChannel& channel,
                               const StateVector& psi,
                               const Tolerance& tol = {},
                               long max_horizon = 1000000) {
    const RelevantSubspace rel = relevant_subspace(channel, psi, tol);
    const ComplexMatrix restricted =
        restricted_monitored_matrix(channel, psi, rel.basis);
    Eigen::ComplexEigenSolver<ComplexMatrix> es(restricted, false);
    if (es.info() != Eigen::Success)
        throw Error("tilde_rho: eigensolver failed");
    const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
    if (radius >= 1.0 - tol.eps_rank)
        throw NonRecurrent("tilde_rho: monitored spectral radius " +
                           std::to_string(radius));

    DensityOperator rho = DensityOperator::pure(psi);
    ComplexMatrix acc = rho.matrix();
    for (long t = 1; t <= max_horizon; ++t) {
        rho = conditional_step(channel, psi, rho);
        if (rho.trace() < tol.eps_converge) return acc;
        acc += rho.matrix();
    }
    throw NonConvergent("tilde_rho: no convergence within horizon " +
                        std::to_string(max_horizon));
}

/// Classical expected return time to state j of a row-stochastic chain:
/// infinite when j is transient, otherwise the reciprocal stationary
/// weight of j in its closed communicating class (the class size itself
/// when the restricted chain is doubly stochastic).
inline double classical_kac_oracle(const RealMatrix& p, int j,
                                   const Tolerance& tol = {}) {
    if (p.rows() != p.cols()) throw NotStochastic("classical_kac_oracle: not square");
    const int n = static_cast<int>(p.rows());
    if (j < 0 || j >= n) throw IndexOutOfRange("classical_kac_oracle: state index");
    if (p.minCoeff() < -tol.eps_check)
        throw NotStochastic("classical_kac_oracle: negative entry");
    for (int i = 0; i < n; ++i)
        if (std::abs(p.row(i).sum() - 1.0) > tol.eps_check)
            throw NotStochastic("classical_kac_oracle: row " + std::to_string(i) +
                                " sums to " + std::to_string(p.row(i).sum()));

    auto reach = [&](int start) {
        std::vector<bool> seen(n, false);
        std::queue<int> queue;
        queue.push(start);
        seen[start] = true;
        while (!queue.empty()) {
            const int i = queue.front();
            queue.pop();
            for (int k = 0; k < n; ++k)
                if (!seen[k] && p(i, k) > tol.eps_check) {
                    seen[k] = true;
                    queue.push(k);
                }
        }
        return seen;
    };

    const std::vector<bool> from_j = reach(j);
    std::vector<int> klass;
    for (int k = 0; k < n; ++k)
        if (from_j[k]) klass.push_back(k);
    for (int k : klass)
        if (!reach(k)[j]) return std::numeric_limits<double>::infinity();

    const int m = static_cast<int>(klass.size());
    RealMatrix pr(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) pr(a, b) = p(klass[a], klass[b]);

    bool doubly = true;
    for (int b = 0; b < m; ++b)
        if (std::abs(pr.col(b).sum() - 1.0) > tol.eps_check) doubly = false;
    if (doubly) return static_cast<double>(m);

    Eigen::EigenSolver<RealMatrix> es(pr.transpose());
    if (es.info() != Eigen::Success)
        throw Error("classical_kac_oracle: eigensolver failed");
    Eigen::Index best = 0;
    (es.eigenvalues().array() - Complex(1.0, 0.0)).abs().minCoeff(&best);
    if (std::abs(es.eigenvalues()(best) - Complex(1.0, 0.0)) > 1e-8)
        throw Error("classical_kac_oracle: no eigenvalue 1 in closed class");
    ComplexVector pi = es.eigenvectors().col(best);
    pi /= pi.sum();
    if (pi.imag().cwiseAbs().maxCoeff() > tol.eps_check ||
        pi.real().minCoeff() < -tol.eps_check)
        throw Error("classical_kac_oracle: invalid stationary vector");

    const auto pos = std::find(klass.begin(), klass.end(), j) - klass.begin();
    return 1.0 / pi(pos).real();
}

} // namespace qreturn
