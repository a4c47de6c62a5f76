#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qreturn/ensemble.hpp"
#include "qreturn/recurrence.hpp"
#include "test_helpers.hpp"

using namespace qreturn;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("aggregate_band nearest-rank statistics", "[ensemble]") {
    SECTION("values 1..10") {
        std::vector<double> values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        const Band band = aggregate_band(values);
        REQUIRE(band.lower_decile == 1.0);  // rank ceil(0.1*10) = 1
        REQUIRE(band.median == 5.0);        // rank ceil(0.5*10) = 5
        REQUIRE(band.upper_decile == 9.0);  // rank ceil(0.9*10) = 9
        REQUIRE(band.mean == 5.5);
        REQUIRE(band.count_infinite == 0);
    }
    SECTION("permuting the samples changes nothing") {
        std::vector<double> values;
        SplitMix64 rng(5);
        for (int k = 0; k < 101; ++k) values.push_back(rng.next_double() * 10);
        const Band a = aggregate_band(values);
        std::shuffle(values.begin(), values.end(), std::mt19937(7));
        const Band b = aggregate_band(values);
        REQUIRE(a.median == b.median);
        REQUIRE(a.lower_decile == b.lower_decile);
        REQUIRE(a.upper_decile == b.upper_decile);
        REQUIRE(a.mean == b.mean);
    }
    SECTION("infinite values are counted, not ranked") {
        const Band band = aggregate_band({1.0, kInf, 2.0, 3.0, kInf});
        REQUIRE(band.count_infinite == 2);
        REQUIRE(band.median == 2.0);
        REQUIRE(band.count == 5);
    }
    SECTION("all-infinite input leaves the statistics undefined") {
        const Band band = aggregate_band({kInf, kInf});
        REQUIRE(band.count_infinite == 2);
        REQUIRE(std::isnan(band.median));
    }
}

TEST_CASE("loop ensembles concentrate on the node count", "[ensemble]") {
    EnsembleSpec spec;
    spec.builder.family = BuilderSpec::Family::Loop;
    spec.builder.nodes = 6;
    spec.builder.unitary = BuilderSpec::UnitaryKind::Cue;
    spec.n_samples = 50;
    spec.seed = 11;
    spec.sweep.values = {0.3, 0.8};
    const EnsembleStats stats = run_ensemble(spec);
    for (size_t g = 0; g < 2; ++g) {
        REQUIRE(std::abs(stats.exact[g].median - 6.0) < 1e-6);
        REQUIRE(std::abs(stats.exact[g].lower_decile - 6.0) < 1e-6);
        REQUIRE(std::abs(stats.exact[g].upper_decile - 6.0) < 1e-6);
        REQUIRE(decile_band_width(stats, g) < 1e-6);
    }
}

TEST_CASE("degenerate ensembles have zero band width", "[ensemble]") {
    EnsembleSpec spec;
    spec.builder.family = BuilderSpec::Family::Decoherence;
    spec.builder.nodes = 4;
    spec.n_samples = 2;
    spec.sweep.values = {0.5};
    const EnsembleStats stats = run_ensemble(spec);
    REQUIRE(decile_band_width(stats, 0) == 0.0);
}

TEST_CASE("ensembles are deterministic and worker-count independent",
          "[ensemble]") {
    EnsembleSpec spec;
    spec.builder.family = BuilderSpec::Family::Star;
    spec.builder.nodes = 5;
    spec.n_samples = 12;
    spec.seed = 21;
    spec.sweep.values = {0.0, 0.4};
    spec.horizons = {50};
    const EnsembleStats a = run_ensemble(spec, 1);
    const EnsembleStats b = run_ensemble(spec, 1);
    const EnsembleStats c = run_ensemble(spec, 4);
    for (const auto* other : {&b, &c})
        for (size_t g = 0; g < 2; ++g) {
            REQUIRE(a.exact[g].median == other->exact[g].median);
            REQUIRE(a.exact[g].mean == other->exact[g].mean);
            REQUIRE(a.raw_exact[g] == other->raw_exact[g]);
            REQUIRE(a.raw_partial[0][g] == other->raw_partial[0][g]);
        }
}

TEST_CASE("unital families quantize sample-wise", "[ensemble]") {
    EnsembleSpec spec;
    spec.builder.family = BuilderSpec::Family::Star;
    spec.builder.nodes = 6;
    spec.n_samples = 20;
    spec.seed = 31;
    spec.sweep.values = {0.3};
    const EnsembleStats stats = run_ensemble(spec);
    const StateVector psi = StateVector::basis(6, 0);
    for (size_t k = 0; k < 20; ++k) {
        const double t = stats.raw_exact[0][k];
        // regenerate the sample from its derived seed and compare against
        // its own relevant dimension
        const auto chan =
            spec.builder.build_at(0.3, derive_seed(spec.seed, 0, k));
        const auto rel = relevant_subspace(chan, psi);
        REQUIRE(std::abs(t - rel.dim) < 1e-6);
    }
}

TEST_CASE("partial horizons shrink toward the exact value", "[ensemble]") {
    EnsembleSpec spec;
    spec.builder.family = BuilderSpec::Family::Star;
    spec.builder.nodes = 6;
    spec.n_samples = 40;
    spec.seed = 41;
    spec.sweep.values = {0.3};
    spec.horizons = {30, 300};
    const EnsembleStats stats = run_ensemble(spec);
    const double w30 = decile_band_width(stats, 0, 0);
    const double w300 = decile_band_width(stats, 0, 1);
    const double wexact = decile_band_width(stats, 0);
    REQUIRE(w300 < w30);
    REQUIRE(wexact < 1e-6);
}

TEST_CASE("decile_band_width is undefined with infinite samples",
          "[ensemble]") {
    EnsembleStats stats;
    stats.param = "d";
    stats.grid = {0.5};
    stats.exact.push_back(aggregate_band({1.0, kInf}));
    REQUIRE_THROWS_AS(decile_band_width(stats, 0), UndefinedBand);
    REQUIRE_THROWS_AS(decile_band_width(stats, 3), IndexOutOfRange);
}

TEST_CASE("ensemble spec validation", "[ensemble]") {
    EnsembleSpec spec;
    spec.builder.family = BuilderSpec::Family::Star;
    spec.builder.nodes = 4;
    spec.sweep.values = {0.2};

    SECTION("sample count") {
        spec.n_samples = 1;
        REQUIRE_THROWS_AS(run_ensemble(spec), Error);
    }
    SECTION("unknown sweep parameter") {
        spec.sweep.param = "radius";
        REQUIRE_THROWS_AS(run_ensemble(spec), Error);
    }
    SECTION("grid outside the rate domain") {
        spec.sweep.values = {1.2};
        REQUIRE_THROWS_AS(run_ensemble(spec), RateOutOfRange);
    }
    SECTION("psi index out of range") {
        spec.psi_index = 9;
        REQUIRE_THROWS_AS(run_ensemble(spec), IndexOutOfRange);
    }
}
