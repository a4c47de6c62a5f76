#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>

#include "qreturn/builders.hpp"
#include "test_helpers.hpp"

using namespace qreturn;
using qtest::diff;

TEST_CASE("star_hamiltonian", "[builders]") {
    SECTION("two nodes with unit hopping give Pauli-x") {
        StarGraphSpec spec;
        spec.nodes = 2;
        spec.hoppings = {Complex(1.0, 0.0)};
        REQUIRE(diff(star_hamiltonian(spec), qtest::pauli_x()) == 0.0);
    }
    SECTION("spectrum is {+v_bar, -v_bar, 0, ...}") {
        const auto spec = StarGraphSpec::random(6, 0.0, 11);
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(star_hamiltonian(spec));
        std::vector<double> lam(es.eigenvalues().data(),
                                es.eigenvalues().data() + 6);
        std::sort(lam.begin(), lam.end());
        const double vbar = spec.v_bar();
        REQUIRE(std::abs(lam.front() + vbar) < 1e-12);
        REQUIRE(std::abs(lam.back() - vbar) < 1e-12);
        for (int k = 1; k < 5; ++k) REQUIRE(std::abs(lam[k]) < 1e-12);
    }
    SECTION("zero hopping is rejected") {
        StarGraphSpec spec;
        spec.nodes = 3;
        spec.hoppings = {Complex(1.0, 0.0), Complex(0.0, 0.0)};
        REQUIRE_THROWS_AS(star_hamiltonian(spec), ZeroHopping);
    }
}

TEST_CASE("dark states", "[builders]") {
    SECTION("M = 3 with unit hoppings") {
        StarGraphSpec spec;
        spec.nodes = 3;
        spec.hoppings = {Complex(1.0, 0.0), Complex(1.0, 0.0)};
        const auto states = dark_states(spec);
        REQUIRE(states.size() == 1);
        ComplexVector expected(3);
        expected << 0.0, -1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
        // equal up to a global phase
        REQUIRE(std::abs(std::abs(expected.dot(states[0].amplitudes())) - 1.0) <
                1e-12);
    }
    SECTION("annihilated by H, no overlap with the center") {
        for (std::uint64_t seed : {21, 22, 23}) {
            const auto spec = StarGraphSpec::random(6, 0.4, seed);
            const ComplexMatrix h = star_hamiltonian(spec);
            const auto states = dark_states(spec);
            REQUIRE(states.size() == 4);
            for (const auto& s : states) {
                REQUIRE(std::abs(s.amplitudes()(0)) == 0.0);
                REQUIRE((h * s.amplitudes()).norm() < 1e-10);
            }
        }
    }
    SECTION("dark states and +- states together span everything") {
        const auto spec = StarGraphSpec::random(6, 0.0, 29);
        const auto states = dark_states(spec);
        const auto [plus, minus] = plus_minus_states(spec);
        ComplexMatrix gram(6, 6);
        std::vector<ComplexVector> all;
        for (const auto& s : states) all.push_back(s.amplitudes());
        all.push_back(plus.amplitudes());
        all.push_back(minus.amplitudes());
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) gram(i, j) = all[i].dot(all[j]);
        Eigen::JacobiSVD<ComplexMatrix> svd(gram);
        REQUIRE(svd.singularValues().minCoeff() > 1e-8);
    }
}

TEST_CASE("plus_minus_states", "[builders]") {
    SECTION("M = 2 gives the symmetric/antisymmetric pair") {
        StarGraphSpec spec;
        spec.nodes = 2;
        spec.hoppings = {Complex(1.0, 0.0)};
        const auto [plus, minus] = plus_minus_states(spec);
        ComplexVector p(2), m(2);
        p << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
        m << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
        REQUIRE((plus.amplitudes() - p).norm() < 1e-12);
        REQUIRE((minus.amplitudes() - m).norm() < 1e-12);
    }
    SECTION("eigenstates of H with eigenvalues +-v_bar") {
        const auto spec = StarGraphSpec::random(5, 0.2, 31);
        const ComplexMatrix h = star_hamiltonian(spec);
        const double vbar = spec.v_bar();
        const auto [plus, minus] = plus_minus_states(spec);
        REQUIRE((h * plus.amplitudes() - vbar * plus.amplitudes()).norm() < 1e-9);
        REQUIRE((h * minus.amplitudes() + vbar * minus.amplitudes()).norm() <
                1e-9);
        REQUIRE(std::abs(plus.amplitudes().dot(minus.amplitudes())) < 1e-12);
        const double w0 = std::norm(plus.amplitudes()(0)) +
                          std::norm(minus.amplitudes()(0));
        REQUIRE(std::abs(w0 - 1.0) < 1e-12);
    }
}

TEST_CASE("uniform_decoherence", "[builders]") {
    SECTION("d = 0 acts as the identity") {
        const auto chan = uniform_decoherence(3, 0.0);
        const auto rho = qtest::random_density(3, 41);
        REQUIRE(diff(apply(chan, rho).matrix(), rho.matrix()) < 1e-12);
    }
    SECTION("d = 1 projects onto the diagonal") {
        ComplexMatrix m(2, 2);
        m << 0.7, 0.3, 0.3, 0.3;
        const auto out = apply(uniform_decoherence(2, 1.0), DensityOperator(m));
        ComplexMatrix expected = ComplexMatrix::Zero(2, 2);
        expected.diagonal() << 0.7, 0.3;
        REQUIRE(diff(out.matrix(), expected) < 1e-12);
    }
    SECTION("Kraus action matches the entrywise (1-d) rule") {
        for (double d : {0.1, 0.5, 0.9}) {
            const auto chan = uniform_decoherence(4, d);
            const auto rho = qtest::random_density(4, 47);
            const auto out = apply(chan, rho);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) {
                    const Complex expected =
                        i == j ? rho.matrix()(i, j)
                               : (1.0 - d) * rho.matrix()(i, j);
                    REQUIRE(std::abs(out.matrix()(i, j) - expected) < 1e-12);
                }
        }
    }
    SECTION("rate out of range") {
        REQUIRE_THROWS_AS(uniform_decoherence(3, 1.5), RateOutOfRange);
        REQUIRE_THROWS_AS(uniform_decoherence(3, -0.1), RateOutOfRange);
    }
}

TEST_CASE("population_transfer", "[builders]") {
    SECTION("d = 0 acts as the identity") {
        const auto chan = population_transfer(4, 1, 0.0);
        const auto rho = qtest::random_density(4, 51);
        REQUIRE(diff(apply(chan, rho).matrix(), rho.matrix()) < 1e-12);
    }
    SECTION("d = 1 moves the source population to the target") {
        const int target = 2, source = 3;
        const auto chan = population_transfer(6, target, 1.0);
        const auto rho = DensityOperator::pure(StateVector::basis(6, source));
        const auto out = apply(chan, rho);
        REQUIRE(std::abs(out.matrix()(target, target).real() - 1.0) < 1e-12);
    }
    SECTION("breaks unitality at intermediate rates") {
        const auto chan = population_transfer(6, 0, 0.5);
        const auto mixed = DensityOperator::maximally_mixed(6);
        const auto out = apply(chan, mixed);
        REQUIRE(std::abs(out.trace() - 1.0) < 1e-12);
        REQUIRE(diff(out.matrix(), mixed.matrix()) > 1e-3);
    }
    SECTION("index and rate validation") {
        REQUIRE_THROWS_AS(population_transfer(4, 7, 0.5), IndexOutOfRange);
        REQUIRE_THROWS_AS(population_transfer(4, 0, 1.5), RateOutOfRange);
    }
}

TEST_CASE("loop_transfer", "[builders]") {
    SECTION("unital at every rate") {
        for (double d : {0.0, 0.4, 1.0})
            REQUIRE(validate(loop_transfer(6, d)).unital_global);
    }
    SECTION("d = 1 shifts deterministically") {
        const auto chan = loop_transfer(6, 1.0);
        const auto out =
            apply(chan, DensityOperator::pure(StateVector::basis(6, 1)));
        REQUIRE(std::abs(out.matrix()(0, 0).real() - 1.0) < 1e-12);
    }
    SECTION("d = 0 acts as the identity") {
        const auto rho = qtest::random_density(6, 61);
        REQUIRE(diff(apply(loop_transfer(6, 0.0), rho).matrix(), rho.matrix()) <
                1e-12);
    }
}

TEST_CASE("cue_unitary", "[builders]") {
    SECTION("unitary and deterministic") {
        const auto u1 = cue_unitary(6, 123);
        const auto u2 = cue_unitary(6, 123);
        REQUIRE(diff(u1.adjoint() * u1, ComplexMatrix::Identity(6, 6)) < 1e-9);
        REQUIRE(diff(u1, u2) == 0.0); // bit-identical
        REQUIRE(diff(u1, cue_unitary(6, 124)) > 1e-3);
    }
    SECTION("Haar first moment: E|U_00|^2 = 1/M") {
        // 3 standard errors with Var(|U|^2) = 2/(M(M+1)) - 1/M^2
        const int m = 6, n = 2000;
        double mean = 0.0;
        for (int k = 0; k < n; ++k)
            mean += std::norm(cue_unitary(m, 5000 + k)(0, 0));
        mean /= n;
        const double var = 2.0 / (m * (m + 1.0)) - 1.0 / (m * m);
        const double band = 3.0 * std::sqrt(var / n);
        REQUIRE(std::abs(mean - 1.0 / m) < band);
    }
}

TEST_CASE("random_disk_hamiltonian", "[builders]") {
    const auto h = random_disk_hamiltonian(6, 0.1, 77);
    SECTION("every entry inside the disk, exactly Hermitian") {
        REQUIRE(max_abs(h) < 0.1);
        REQUIRE(hermiticity_defect(h) == 0.0);
        for (int i = 0; i < 6; ++i) REQUIRE(h(i, i).imag() == 0.0);
    }
    SECTION("deterministic per seed") {
        REQUIRE(diff(h, random_disk_hamiltonian(6, 0.1, 77)) == 0.0);
    }
    SECTION("diagonal can be disabled") {
        const auto h0 = random_disk_hamiltonian(6, 0.1, 77, false);
        for (int i = 0; i < 6; ++i) REQUIRE(std::abs(h0(i, i)) == 0.0);
    }
}

TEST_CASE("every builder output is trace preserving", "[builders]") {
    std::vector<QuantumChannel> channels;
    channels.push_back(star_channel(StarGraphSpec::random(6, 0.0, 1)));
    channels.push_back(star_channel(StarGraphSpec::random(6, 0.5, 2)));
    channels.push_back(uniform_decoherence(5, 0.3));
    channels.push_back(population_transfer(6, 2, 0.7));
    channels.push_back(loop_transfer(6, 0.6));
    channels.push_back(QuantumChannel::unitary(cue_unitary(4, 3)));
    for (const auto& chan : channels) {
        const auto report = validate(chan);
        REQUIRE(report.trace_preserving);
        REQUIRE(report.completely_positive);
    }
}

TEST_CASE("star channel structure and unitality", "[builders]") {
    const auto spec = StarGraphSpec::random(6, 0.0, 13);
    SECTION("(M+1) Kraus operators; d = 0 is Kraus-equivalent to U alone") {
        const auto chan = star_channel(spec);
        REQUIRE(chan.kraus_count() == 7);
        const auto u = unitary_from_hamiltonian(star_hamiltonian(spec));
        REQUIRE(diff(to_superoperator_matrix(chan),
                     to_superoperator_matrix(QuantumChannel::unitary(u))) <
                1e-12);
    }
    SECTION("unital for every decoherence rate") {
        for (double d : {0.0, 0.3, 1.0}) {
            auto s = spec;
            s.decoherence_rate = d;
            REQUIRE(is_unital_on(star_channel(s), Projector::identity(6)));
        }
    }
}

TEST_CASE("transfer after a unitary: loop stays unital, edge does not",
          "[builders]") {
    const auto u = QuantumChannel::unitary(cue_unitary(6, 17));
    REQUIRE(validate(compose(loop_transfer(6, 0.5), u)).unital_global);
    REQUIRE_FALSE(
        validate(compose(population_transfer(6, 5, 0.5), u)).unital_global);
}

TEST_CASE("random star specs are reproducible and nonzero", "[builders]") {
    const auto a = StarGraphSpec::random(6, 0.2, 99);
    const auto b = StarGraphSpec::random(6, 0.2, 99);
    for (int j = 0; j < 5; ++j) {
        REQUIRE(a.hoppings[j] == b.hoppings[j]);
        REQUIRE(std::abs(a.hoppings[j]) > 0.0);
        REQUIRE(std::abs(a.hoppings[j]) < 1.0);
    }
}

TEST_CASE("builder spec construction", "[builders]") {
    SECTION("loop + CUE redraw changes with the sample seed") {
        BuilderSpec spec;
        spec.family = BuilderSpec::Family::Loop;
        spec.nodes = 6;
        spec.unitary = BuilderSpec::UnitaryKind::Cue;
        const auto c1 = spec.build_at(0.3, 1);
        const auto c2 = spec.build_at(0.3, 1);
        const auto c3 = spec.build_at(0.3, 2);
        REQUIRE(diff(to_superoperator_matrix(c1), to_superoperator_matrix(c2)) ==
                0.0);
        REQUIRE(diff(to_superoperator_matrix(c1), to_superoperator_matrix(c3)) >
                1e-3);
        REQUIRE(spec.stochastic());
    }
    SECTION("star with explicit hoppings is deterministic") {
        BuilderSpec spec;
        spec.family = BuilderSpec::Family::Star;
        spec.nodes = 2;
        spec.hoppings = {Complex(0.5, 0.1)};
        REQUIRE_FALSE(spec.stochastic());
        const auto chan = spec.build_at(0.2, 5);
        REQUIRE(chan.dim() == 2);
    }
}
