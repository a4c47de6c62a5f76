#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qreturn/builders.hpp"
#include "qreturn/recurrence.hpp"

namespace qreturn {

struct SweepGrid {
    std::string param = "d";
    std::vector<double> values;
};

/// A random-ensemble experiment: one channel family, n_samples draws per
/// grid point of the swept parameter, optional finite horizons for the
/// partial return times (the exact time is always computed).
struct EnsembleSpec {
    BuilderSpec builder;
    int n_samples = 2000;
    std::uint64_t seed = 0;
    SweepGrid sweep;
    std::vector<long> horizons;
    int psi_index = 0;
    Tolerance tol;

    void validate() const {
        if (n_samples < 2) throw Error("EnsembleSpec: n_samples must be >= 2");
        if (sweep.param != "d")
            throw Error("EnsembleSpec: only parameter \"d\" can be swept, got \"" +
                        sweep.param + "\"");
        if (sweep.values.empty()) throw Error("EnsembleSpec: empty sweep grid");
        const bool has_rate =
            builder.family != BuilderSpec::Family::Cue &&
            builder.family != BuilderSpec::Family::DiskHamiltonian;
        if (has_rate)
            for (double v : sweep.values)
                if (v < 0.0 || v > 1.0)
                    throw RateOutOfRange("EnsembleSpec: grid value " +
                                         std::to_string(v));
        for (long h : horizons)
            if (h < 1) throw Error("EnsembleSpec: horizon must be >= 1");
        if (psi_index < 0 || psi_index >= builder.nodes)
            throw IndexOutOfRange("EnsembleSpec: psi index");
        tol.validate();
    }
};

/// Order statistics of one distribution of return times. Infinite values
/// are counted separately and excluded from the order statistics; all
/// ranks use the nearest-rank rule ceil(q*n) on the sorted finite values.
struct Band {
    double median = std::numeric_limits<double>::quiet_NaN();
    double lower_decile = std::numeric_limits<double>::quiet_NaN();
    double upper_decile = std::numeric_limits<double>::quiet_NaN();
    double mean = std::numeric_limits<double>::quiet_NaN();
    int count_infinite = 0;
    int count = 0;
};

inline Band aggregate_band(std::vector<double> values) {
    Band band;
    band.count = static_cast<int>(values.size());
    std::vector<double> finite;
    finite.reserve(values.size());
    for (double v : values) {
        if (std::isinf(v))
            ++band.count_infinite;
        else
            finite.push_back(v);
    }
    if (finite.empty()) return band;
    std::sort(finite.begin(), finite.end());
    const auto n = static_cast<double>(finite.size());
    auto nearest_rank = [&](double quantile) {
        const auto rank = static_cast<size_t>(std::ceil(quantile * n));
        return finite[std::max<size_t>(rank, 1) - 1];
    };
    band.lower_decile = nearest_rank(0.1);
    band.median = nearest_rank(0.5);
    band.upper_decile = nearest_rank(0.9);
    double sum = 0.0;
    for (double v : finite) sum += v;
    band.mean = sum / n;
    return band;
}

struct EnsembleStats {
    std::string param;
    std::vector<double> grid;
    std::vector<long> horizons;
    std::vector<Band> exact;                // [grid]
    std::vector<std::vector<Band>> partial; // [horizon][grid]
    std::vector<std::vector<double>> raw_exact;                // [grid][sample]
    std::vector<std::vector<std::vector<double>>> raw_partial; // [horizon][grid][sample]
};

/// Run the ensemble. Sample (g, k) uses the derived seed
/// derive_seed(spec.seed, g, k), so results are independent of execution
/// order and of the worker count; statistics are aggregated only after
/// every sample has been collected.
inline EnsembleStats run_ensemble(const EnsembleSpec& spec, int jobs = 1) {
    spec.validate();
    const size_t n_grid = spec.sweep.values.size();
    const size_t n_samples = static_cast<size_t>(spec.n_samples);
    const size_t n_h = spec.horizons.size();
    const long max_h =
        spec.horizons.empty()
            ? 0
            : *std::max_element(spec.horizons.begin(), spec.horizons.end());
    const StateVector psi = StateVector::basis(spec.builder.nodes, spec.psi_index);

    std::vector<std::vector<double>> exact_values(
        n_grid, std::vector<double>(n_samples, 0.0));
    std::vector<std::vector<std::vector<double>>> partial_values(
        n_h, std::vector<std::vector<double>>(
                 n_grid, std::vector<double>(n_samples, 0.0)));

    auto run_sample = [&](size_t flat) {
        const size_t g = flat / n_samples;
        const size_t k = flat % n_samples;
        const std::uint64_t sample_seed = derive_seed(spec.seed, g, k);
        try {
            const QuantumChannel channel =
                spec.builder.build_at(spec.sweep.values[g], sample_seed);
            const SpectralReturn sr =
                expected_return_spectral(channel, psi, spec.tol);
            exact_values[g][k] = sr.analysis.exact_T;
            if (n_h > 0) {
                if (!sr.spectral.defective) {
                    for (size_t h = 0; h < n_h; ++h)
                        partial_values[h][g][k] = partial_return_from_spectral(
                            sr.spectral, spec.horizons[h]);
                } else {
                    const ReturnAnalysis series =
                        return_series(channel, psi, max_h, spec.tol);
                    for (size_t h = 0; h < n_h; ++h)
                        partial_values[h][g][k] = series.partial_T[spec.horizons[h]];
                }
            }
        } catch (const Error& e) {
            throw Error("ensemble sample (grid " + std::to_string(g) +
                        ", index " + std::to_string(k) + ", seed " +
                        std::to_string(sample_seed) + "): " + e.what());
        }
    };

    const size_t total = n_grid * n_samples;
    const size_t workers = std::min<size_t>(std::max(jobs, 1), total);
    if (workers <= 1) {
        for (size_t flat = 0; flat < total; ++flat) run_sample(flat);
    } else {
        std::atomic<size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const size_t flat = next.fetch_add(1);
                    if (flat >= total) return;
                    try {
                        run_sample(flat);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                        next.store(total);
                        return;
                    }
                }
            });
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    EnsembleStats stats;
    stats.param = spec.sweep.param;
    stats.grid = spec.sweep.values;
    stats.horizons = spec.horizons;
    stats.raw_exact = exact_values;
    stats.raw_partial = partial_values;
    stats.exact.reserve(n_grid);
    for (size_t g = 0; g < n_grid; ++g)
        stats.exact.push_back(aggregate_band(exact_values[g]));
    stats.partial.resize(n_h);
    for (size_t h = 0; h < n_h; ++h) {
        stats.partial[h].reserve(n_grid);
        for (size_t g = 0; g < n_grid; ++g)
            stats.partial[h].push_back(aggregate_band(partial_values[h][g]));
    }
    return stats;
}

/// Width of the decile band at one grid point; horizon = -1 selects the
/// exact-time band, otherwise an index into stats.horizons. Undefined
/// when infinite samples are present at that point.
inline double decile_band_width(const EnsembleStats& stats, size_t grid_index,
                                long horizon_index = -1) {
    if (grid_index >= stats.grid.size())
        throw IndexOutOfRange("decile_band_width: grid index");
    const Band& band =
        horizon_index < 0
            ? stats.exact[grid_index]
            : stats.partial.at(static_cast<size_t>(horizon_index))[grid_index];
    if (band.count_infinite > 0)
        throw UndefinedBand("decile_band_width: " +
                            std::to_string(band.count_infinite) +
                            " infinite samples at this grid point");
    return band.upper_decile - band.lower_decile;
}

} // namespace qreturn
