#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "qreturn/channel.hpp"
#include "qreturn/rng.hpp"

namespace qreturn {

/// Star graph of `nodes` sites: hopping v_j between the center 0 and each
/// leaf j = 1..M-1, followed by uniform decoherence at rate d.
struct StarGraphSpec {
    int nodes = 2;
    std::vector<Complex> hoppings; // v_1 .. v_{M-1}, all nonzero
    double decoherence_rate = 0.0;

    void validate() const {
        if (nodes < 2) throw Error("StarGraphSpec: nodes must be >= 2");
        if (static_cast<int>(hoppings.size()) != nodes - 1)
            throw Error("StarGraphSpec: expected " + std::to_string(nodes - 1) +
                        " hopping amplitudes");
        for (const auto& v : hoppings)
            if (std::abs(v) == 0.0)
                throw ZeroHopping("StarGraphSpec: zero hopping amplitude");
        if (decoherence_rate < 0.0 || decoherence_rate > 1.0)
            throw RateOutOfRange("StarGraphSpec: decoherence rate " +
                                 std::to_string(decoherence_rate));
    }

    /// Hoppings drawn uniformly from the complex unit disk (never zero).
    static StarGraphSpec random(int nodes, double decoherence_rate,
                                std::uint64_t seed) {
        StarGraphSpec spec;
        spec.nodes = nodes;
        spec.decoherence_rate = decoherence_rate;
        SplitMix64 rng(seed);
        spec.hoppings.reserve(nodes - 1);
        for (int j = 1; j < nodes; ++j) spec.hoppings.push_back(rng.next_disk(1.0));
        spec.validate();
        return spec;
    }

    double v_bar() const {
        double s = 0.0;
        for (const auto& v : hoppings) s += std::norm(v);
        return std::sqrt(s);
    }
};

enum class TransferMode { SingleEdge, FullLoop };

/// Incoherent population transfer on a graph of `nodes` sites, either
/// along one directed edge source -> target or around the full loop.
struct TransferSpec {
    int nodes = 2;
    int source = 1;
    int target = 0;
    double rate = 0.0;
    TransferMode mode = TransferMode::SingleEdge;

    void validate() const {
        if (nodes < 2) throw Error("TransferSpec: nodes must be >= 2");
        if (rate < 0.0 || rate > 1.0)
            throw RateOutOfRange("TransferSpec: rate " + std::to_string(rate));
        if (mode == TransferMode::SingleEdge) {
            if (source < 0 || source >= nodes || target < 0 || target >= nodes)
                throw IndexOutOfRange("TransferSpec: site index out of range");
            if (source == target)
                throw Error("TransferSpec: source equals target");
        }
    }
};

/// H = sum_j v_j |j><0| + h.c. — hopping only between the center and the
/// leaves.
inline ComplexMatrix star_hamiltonian(const StarGraphSpec& spec) {
    spec.validate();
    const int m = spec.nodes;
    ComplexMatrix h = ComplexMatrix::Zero(m, m);
    for (int j = 1; j < m; ++j) {
        h(j, 0) = spec.hoppings[j - 1];
        h(0, j) = std::conj(spec.hoppings[j - 1]);
    }
    return h;
}

/// Uniform decoherence D at rate d: Kraus {sqrt(d)|j><j|} plus
/// sqrt(1-d) I. Acts entrywise as rho_mn -> rho_mn on the diagonal and
/// (1-d) rho_mn off it.
inline QuantumChannel uniform_decoherence(int nodes, double rate) {
    if (rate < 0.0 || rate > 1.0)
        throw RateOutOfRange("uniform_decoherence: rate " + std::to_string(rate));
    if (nodes < 1) throw Error("uniform_decoherence: nodes must be >= 1");
    std::vector<ComplexMatrix> kraus;
    kraus.reserve(nodes + 1);
    for (int j = 0; j < nodes; ++j) {
        ComplexMatrix b = ComplexMatrix::Zero(nodes, nodes);
        b(j, j) = std::sqrt(rate);
        kraus.push_back(std::move(b));
    }
    kraus.push_back(std::sqrt(1.0 - rate) *
                    ComplexMatrix::Identity(nodes, nodes));
    return QuantumChannel(nodes, std::move(kraus));
}

/// One full star-walk timestep: unitary e^{-iH} followed by uniform
/// decoherence. (M+1) Kraus operators.
inline QuantumChannel star_channel(const StarGraphSpec& spec) {
    spec.validate();
    const ComplexMatrix u = unitary_from_hamiltonian(star_hamiltonian(spec));
    return compose(uniform_decoherence(spec.nodes, spec.decoherence_rate),
                   QuantumChannel::unitary(u));
}

/// Partial population transfer along one directed edge source -> target:
///   B0 = sqrt(d) |target><source|
///   B1 = I + (sqrt(1-d) - 1) |source><source|
/// The damping in B1 must sit on the source site; that is what makes
/// B0^dag B0 + B1^dag B1 = I.
inline QuantumChannel population_transfer_edge(int nodes, int target,
                                               int source, double rate) {
    if (rate < 0.0 || rate > 1.0)
        throw RateOutOfRange("population_transfer: rate " + std::to_string(rate));
    if (target < 0 || target >= nodes || source < 0 || source >= nodes)
        throw IndexOutOfRange("population_transfer: site index out of range");
    if (source == target)
        throw Error("population_transfer: source equals target");
    ComplexMatrix b0 = ComplexMatrix::Zero(nodes, nodes);
    b0(target, source) = std::sqrt(rate);
    ComplexMatrix b1 = ComplexMatrix::Identity(nodes, nodes);
    b1(source, source) = std::sqrt(1.0 - rate);
    return QuantumChannel(nodes, {std::move(b0), std::move(b1)});
}

/// Transfer into `target` from its cyclic successor (target+1) mod M.
inline QuantumChannel population_transfer(int nodes, int target, double rate) {
    if (target < 0 || target >= nodes)
        throw IndexOutOfRange("population_transfer: target out of range");
    return population_transfer_edge(nodes, target, (target + 1) % nodes, rate);
}

/// Population transfer around the full directed loop at uniform rate d:
/// Kraus {sqrt(d)|j><j+1|}, sqrt(d)|M-1><0|, sqrt(1-d) I. Both
/// sum B^dag B and sum B B^dag equal I, so the channel is unital.
inline QuantumChannel loop_transfer(int nodes, double rate) {
    if (rate < 0.0 || rate > 1.0)
        throw RateOutOfRange("loop_transfer: rate " + std::to_string(rate));
    if (nodes < 2) throw Error("loop_transfer: nodes must be >= 2");
    std::vector<ComplexMatrix> kraus;
    kraus.reserve(nodes + 1);
    for (int j = 0; j + 1 < nodes; ++j) {
        ComplexMatrix b = ComplexMatrix::Zero(nodes, nodes);
        b(j, j + 1) = std::sqrt(rate);
        kraus.push_back(std::move(b));
    }
    ComplexMatrix wrap = ComplexMatrix::Zero(nodes, nodes);
    wrap(nodes - 1, 0) = std::sqrt(rate);
    kraus.push_back(std::move(wrap));
    kraus.push_back(std::sqrt(1.0 - rate) *
                    ComplexMatrix::Identity(nodes, nodes));
    return QuantumChannel(nodes, std::move(kraus));
}

inline QuantumChannel make_channel(const TransferSpec& spec) {
    spec.validate();
    if (spec.mode == TransferMode::FullLoop)
        return loop_transfer(spec.nodes, spec.rate);
    return population_transfer_edge(spec.nodes, spec.target, spec.source,
                                    spec.rate);
}

/// Haar-distributed unitary: complex Ginibre sample, QR decomposition,
/// then each column of Q rephased by r_kk/|r_kk| so the distribution is
/// exactly the circular unitary ensemble. Deterministic per seed.
inline ComplexMatrix cue_unitary(int dim, std::uint64_t seed) {
    if (dim < 1) throw Error("cue_unitary: dim must be >= 1");
    SplitMix64 rng(seed);
    ComplexMatrix g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = rng.next_complex_gaussian();
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ();
    const ComplexMatrix r = qr.matrixQR();
    for (int k = 0; k < dim; ++k) {
        const Complex rkk = r(k, k);
        const double mag = std::abs(rkk);
        if (mag > 0.0) q.col(k) *= rkk / mag;
    }
    return q;
}

/// Random Hermitian matrix with every entry inside the complex disk of
/// the given radius: strict upper triangle uniform on the disk, diagonal
/// real uniform on [-radius, radius] (hermiticity forces it real), lower
/// triangle by conjugation. `random_diagonal = false` zeroes the diagonal.
inline ComplexMatrix random_disk_hamiltonian(int dim, double radius,
                                             std::uint64_t seed,
                                             bool random_diagonal = true) {
    if (radius <= 0.0) throw Error("random_disk_hamiltonian: radius must be > 0");
    if (dim < 1) throw Error("random_disk_hamiltonian: dim must be >= 1");
    SplitMix64 rng(seed);
    ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) {
            h(i, j) = rng.next_disk(radius);
            h(j, i) = std::conj(h(i, j));
        }
    if (random_diagonal)
        for (int i = 0; i < dim; ++i) h(i, i) = rng.next_symmetric(radius);
    return h;
}

/// The M-2 zero-energy eigenstates of the star Hamiltonian with no
/// amplitude on the center. Leaf amplitudes carry the (M-1)-th roots of
/// unity divided by conj(v_l); the root-of-unity sum over the M-1 leaves
/// is what cancels the hopping into node 0.
inline std::vector<StateVector> dark_states(const StarGraphSpec& spec) {
    spec.validate();
    const int m = spec.nodes;
    std::vector<StateVector> states;
    states.reserve(m >= 2 ? m - 2 : 0);
    for (int j = 1; j <= m - 2; ++j) {
        ComplexVector v = ComplexVector::Zero(m);
        for (int l = 1; l < m; ++l) {
            const double phase =
                2.0 * std::numbers::pi * static_cast<double>(j) *
                static_cast<double>(l) / static_cast<double>(m - 1);
            v(l) = std::exp(Complex(0.0, phase)) / std::conj(spec.hoppings[l - 1]);
        }
        states.emplace_back(v / v.norm());
    }
    return states;
}

/// The two star-Hamiltonian eigenstates with support on the center:
/// (|0> +- |v>)/sqrt(2) with eigenvalues +-v_bar.
inline std::pair<StateVector, StateVector> plus_minus_states(
    const StarGraphSpec& spec) {
    spec.validate();
    const int m = spec.nodes;
    const double vbar = spec.v_bar();
    ComplexVector v = ComplexVector::Zero(m);
    for (int j = 1; j < m; ++j) v(j) = spec.hoppings[j - 1] / vbar;
    ComplexVector zero = ComplexVector::Zero(m);
    zero(0) = 1.0;
    const double s = 1.0 / std::sqrt(2.0);
    return {StateVector((zero + v) * s), StateVector((zero - v) * s)};
}

/// Channel family description shared by the CLI and the ensemble driver.
/// `build()` produces the fixed instance described by the embedded seeds;
/// `build_at(d, seed)` redraws every random element (hoppings, CUE
/// unitary, random Hamiltonian) from `seed` at sweep value d.
struct BuilderSpec {
    enum class Family { Star, Decoherence, Transfer, Loop, Cue, DiskHamiltonian };
    enum class UnitaryKind { None, Cue, Disk };

    Family family = Family::Star;
    int nodes = 6;
    double rate = 0.0;                    // d
    int target = 0;                       // transfer target site
    int source = -1;                      // transfer source; -1 = (target+1) mod M
    double radius = 0.1;                  // disk-Hamiltonian radius
    bool random_diagonal = true;
    std::uint64_t seed = 0;
    std::vector<Complex> hoppings;        // star: explicit amplitudes, else drawn

    UnitaryKind unitary = UnitaryKind::None; // coherent part before transfer/loop
    std::uint64_t unitary_seed = 0;
    double unitary_radius = 0.1;

    bool stochastic() const {
        switch (family) {
            case Family::Star: return hoppings.empty();
            case Family::Cue:
            case Family::DiskHamiltonian: return true;
            case Family::Transfer:
            case Family::Loop: return unitary != UnitaryKind::None;
            default: return false;
        }
    }

    QuantumChannel build_at(double d, std::uint64_t draw_seed) const {
        switch (family) {
            case Family::Star: {
                StarGraphSpec spec;
                if (hoppings.empty()) {
                    spec = StarGraphSpec::random(nodes, d, derive_seed(draw_seed, 1, 0));
                } else {
                    spec.nodes = nodes;
                    spec.hoppings = hoppings;
                    spec.decoherence_rate = d;
                }
                return star_channel(spec);
            }
            case Family::Decoherence:
                return uniform_decoherence(nodes, d);
            case Family::Transfer: {
                const int src = source < 0 ? (target + 1) % nodes : source;
                QuantumChannel incoherent =
                    population_transfer_edge(nodes, target, src, d);
                return attach_unitary(std::move(incoherent), draw_seed);
            }
            case Family::Loop:
                return attach_unitary(loop_transfer(nodes, d), draw_seed);
            case Family::Cue:
                return QuantumChannel::unitary(
                    cue_unitary(nodes, derive_seed(draw_seed, 2, 0)));
            case Family::DiskHamiltonian:
                return QuantumChannel::unitary(
                    unitary_from_hamiltonian(random_disk_hamiltonian(
                        nodes, radius, derive_seed(draw_seed, 3, 0),
                        random_diagonal)));
        }
        throw Error("BuilderSpec: unknown family");
    }

    QuantumChannel build() const { return build_at(rate, seed); }

private:
    QuantumChannel attach_unitary(QuantumChannel incoherent,
                                  std::uint64_t draw_seed) const {
        switch (unitary) {
            case UnitaryKind::None:
                return incoherent;
            case UnitaryKind::Cue:
                return compose(incoherent,
                               QuantumChannel::unitary(cue_unitary(
                                   nodes, derive_seed(draw_seed, 2, 0))));
            case UnitaryKind::Disk:
                return compose(
                    incoherent,
                    QuantumChannel::unitary(unitary_from_hamiltonian(
                        random_disk_hamiltonian(nodes, unitary_radius,
                                                derive_seed(draw_seed, 3, 0),
                                                random_diagonal))));
        }
        throw Error("BuilderSpec: unknown unitary kind");
    }
};

} // namespace qreturn
