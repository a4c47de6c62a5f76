#pragma once

// Shared generators and matrix comparisons for the test suites. Random
// objects are drawn from seeded SplitMix64 streams so every test run is
// identical.

#include <cstdint>
#include <vector>

#include "qreturn/builders.hpp"
#include "qreturn/channel.hpp"
#include "qreturn/rng.hpp"

namespace qtest {

using namespace qreturn;

inline double diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    return max_abs(a - b);
}

inline ComplexMatrix random_matrix(int dim, std::uint64_t seed) {
    SplitMix64 rng(seed);
    ComplexMatrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = rng.next_complex_gaussian();
    return m;
}

/// Random density operator: normalized G G^dagger.
inline DensityOperator random_density(int dim, std::uint64_t seed) {
    const ComplexMatrix g = random_matrix(dim, seed);
    ComplexMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return DensityOperator(std::move(rho));
}

/// Trace-preserving channel from a Haar-random isometry: stack a random
/// (n_kraus*dim) x dim Gaussian, orthonormalize its columns, slice into
/// dim x dim blocks. sum A^dag A = I holds exactly by construction.
/// Generically not unital.
inline QuantumChannel random_kraus_channel(int dim, int n_kraus,
                                           std::uint64_t seed) {
    SplitMix64 rng(seed);
    ComplexMatrix g(n_kraus * dim, dim);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            g(i, j) = rng.next_complex_gaussian();
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    const ComplexMatrix q =
        ComplexMatrix(qr.householderQ()).leftCols(dim);
    std::vector<ComplexMatrix> kraus;
    kraus.reserve(n_kraus);
    for (int k = 0; k < n_kraus; ++k)
        kraus.push_back(q.block(k * dim, 0, dim, dim));
    return QuantumChannel(dim, std::move(kraus));
}

/// Mixed-unitary channel sum_j p_j U_j . U_j^dag: trace preserving and
/// unital.
inline QuantumChannel random_mixed_unitary_channel(int dim, int n_kraus,
                                                   std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<double> weights(n_kraus);
    double total = 0.0;
    for (auto& w : weights) {
        w = 0.1 + rng.next_double();
        total += w;
    }
    std::vector<ComplexMatrix> kraus;
    kraus.reserve(n_kraus);
    for (int k = 0; k < n_kraus; ++k)
        kraus.push_back(std::sqrt(weights[k] / total) *
                        cue_unitary(dim, derive_seed(seed, 7, k)));
    return QuantumChannel(dim, std::move(kraus));
}

inline ComplexMatrix pauli_x() {
    ComplexMatrix sx(2, 2);
    sx << 0, 1, 1, 0;
    return sx;
}

} // namespace qtest
