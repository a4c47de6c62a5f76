// qreturn: simulate iterated, measurement-monitored quantum channels and
// compute first-return-time statistics.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "qreturn/qreturn.hpp"

namespace {

namespace fs = std::filesystem;
using namespace qreturn;

constexpr int kExitOk = 0;
constexpr int kExitInvalidChannel = 1;
constexpr int kExitParseError = 2;
constexpr int kExitTheoremViolation = 3;

struct Options {
    std::string channel_file;
    std::string builder_json;
    std::string spec_source;
    int psi = 0;
    long horizon = 100;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int jobs = 0;
    std::string out_dir;
    std::string values_csv;
    std::string param = "d";
    int figure = 0;
    int samples = 0;
    double quantization_tol = 1e-6;
    Tolerance tol;
};

void add_tolerance_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--tol-rank", opt.tol.eps_rank, "Relative rank cutoff");
    cmd->add_option("--tol-check", opt.tol.eps_check, "Invariant-check tolerance");
    cmd->add_option("--tol-converge", opt.tol.eps_converge,
                    "Series truncation tolerance");
}

void add_channel_flags(CLI::App* cmd, Options& opt) {
    auto* file = cmd->add_option("--channel", opt.channel_file,
                                 "Channel spec file (JSON Kraus set)");
    auto* builder = cmd->add_option(
        "--builder", opt.builder_json,
        "Builder spec: inline JSON or a path to a JSON file");
    file->excludes(builder);
    builder->excludes(file);
}

Json read_inline_or_file(const std::string& text) {
    if (!text.empty() && text.front() == '{') {
        try {
            return Json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("inline JSON: ") + e.what());
        }
    }
    return parse_json_file(text);
}

QuantumChannel resolve_channel(const Options& opt) {
    if (!opt.channel_file.empty() == !opt.builder_json.empty())
        throw ParseError("exactly one of --channel or --builder is required");
    if (!opt.channel_file.empty())
        return load_channel_file(opt.channel_file, opt.tol);
    BuilderSpec spec = builder_from_json(read_inline_or_file(opt.builder_json));
    if (opt.seed_given) spec.seed = opt.seed;
    return spec.build();
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    const fs::path path = fs::path(dir) / name;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

int jobs_or_default(const Options& opt) {
    if (opt.jobs > 0) return opt.jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ParseError("bad sweep value \"" + item + "\"");
        }
    }
    if (values.empty()) throw ParseError("--values is empty");
    return values;
}

int cmd_validate(const Options& opt) {
    const QuantumChannel channel = resolve_channel(opt);
    const ValidationReport report = validate(channel, opt.tol);
    std::cout << validation_to_json(report).dump(2) << '\n';
    return report.trace_preserving && report.completely_positive
               ? kExitOk
               : kExitInvalidChannel;
}

int cmd_return_time(const Options& opt) {
    const QuantumChannel channel = resolve_channel(opt);
    const StateVector psi = StateVector::basis(channel.dim(), opt.psi);
    const ReturnAnalysis analysis = quantization_verdict(
        channel, psi, opt.tol, opt.quantization_tol, opt.horizon);
    std::cout << analysis_to_json(analysis).dump(2) << '\n';
    return kExitOk;
}

int cmd_distribution(const Options& opt) {
    const QuantumChannel channel = resolve_channel(opt);
    const StateVector psi = StateVector::basis(channel.dim(), opt.psi);
    const ReturnAnalysis analysis =
        return_series(channel, psi, opt.horizon, opt.tol);
    if (opt.out_dir.empty()) {
        write_distribution_csv(std::cout, analysis);
    } else {
        auto out = open_output(opt.out_dir, "distribution.csv");
        write_distribution_csv(out, analysis);
    }
    return kExitOk;
}

int cmd_sweep(const Options& opt) {
    if (opt.builder_json.empty())
        throw ParseError("sweep requires --builder");
    if (opt.param != "d")
        throw ParseError("only parameter \"d\" can be swept");
    BuilderSpec builder = builder_from_json(read_inline_or_file(opt.builder_json));
    if (opt.seed_given) builder.seed = opt.seed;
    const std::vector<double> values = parse_values(opt.values_csv);

    std::ostringstream body;
    body << opt.param << ",exact_T,relevant_dim,psi_unital,recurrent,method\n";
    for (double d : values) {
        const QuantumChannel channel = builder.build_at(d, builder.seed);
        const StateVector psi = StateVector::basis(channel.dim(), opt.psi);
        const ReturnAnalysis a = quantization_verdict(
            channel, psi, opt.tol, opt.quantization_tol, 1);
        body << format_double(d) << ',' << format_double(a.exact_T) << ','
             << a.relevant_dim << ',' << (a.psi_unital ? 1 : 0) << ','
             << (a.recurrent ? 1 : 0) << ','
             << (a.method == ReturnAnalysis::Method::Spectral ? "spectral"
                                                              : "summation")
             << '\n';
    }
    if (opt.out_dir.empty()) {
        std::cout << body.str();
    } else {
        auto out = open_output(opt.out_dir, "sweep.csv");
        out << body.str();
    }
    return kExitOk;
}

int cmd_ensemble(const Options& opt) {
    if (opt.spec_source.empty())
        throw ParseError("ensemble requires --spec");
    EnsembleSpec spec = ensemble_from_json(read_inline_or_file(opt.spec_source));
    spec.tol = opt.tol;
    if (opt.seed_given) spec.seed = opt.seed;
    if (opt.samples > 0) spec.n_samples = opt.samples;
    const EnsembleStats stats = run_ensemble(spec, jobs_or_default(opt));
    if (opt.out_dir.empty()) {
        write_stats_csv(std::cout, stats);
    } else {
        auto out = open_output(opt.out_dir, "ensemble_stats.csv");
        write_stats_csv(out, stats);
        auto raw = open_output(opt.out_dir, "ensemble_raw.csv");
        write_raw_csv(raw, stats);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// figure reproduction presets

std::vector<double> linspace01(int points) {
    std::vector<double> grid;
    grid.reserve(points);
    for (int i = 0; i < points; ++i)
        grid.push_back(static_cast<double>(i) / (points - 1));
    return grid;
}

int reproduce_fig2(const Options& opt, Json& manifest) {
    const std::vector<double> rates = {0.0, 0.1, 0.5};
    const long horizon = opt.horizon;
    manifest["nodes"] = 6;
    manifest["rates"] = rates;
    manifest["horizon"] = horizon;
    Json sets = Json::array();
    for (int set = 0; set < 2; ++set) {
        const std::uint64_t hop_seed = derive_seed(opt.seed, 100, set);
        Json entry;
        entry["hop_seed"] = hop_seed;
        Json curves = Json::array();
        for (double d : rates) {
            const StarGraphSpec spec = StarGraphSpec::random(6, d, hop_seed);
            const QuantumChannel channel = star_channel(spec);
            const StateVector psi = StateVector::basis(6, 0);
            const ReturnAnalysis series = return_series(channel, psi, horizon, opt.tol);
            const ReturnAnalysis full =
                quantization_verdict(channel, psi, opt.tol, opt.quantization_tol, 1);
            const std::string name = "fig2_set" + std::to_string(set) + "_d" +
                                     format_double(d) + ".csv";
            auto out = open_output(opt.out_dir, name);
            write_distribution_csv(out, series);
            Json curve;
            curve["file"] = name;
            curve["d"] = d;
            curve["exact_T"] = full.exact_T;
            curve["relevant_dim"] = full.relevant_dim;
            curves.push_back(std::move(curve));
        }
        entry["curves"] = std::move(curves);
        sets.push_back(std::move(entry));
    }
    manifest["sets"] = std::move(sets);
    return kExitOk;
}

int reproduce_fig3(const Options& opt, Json& manifest) {
    EnsembleSpec spec;
    spec.builder.family = BuilderSpec::Family::Star;
    spec.builder.nodes = 6;
    spec.n_samples = opt.samples > 0 ? opt.samples : 500;
    spec.seed = opt.seed;
    spec.sweep.values = linspace01(21);
    spec.horizons = {700, 7000};
    spec.tol = opt.tol;
    const EnsembleStats stats = run_ensemble(spec, jobs_or_default(opt));
    auto out = open_output(opt.out_dir, "fig3_bands.csv");
    write_stats_csv(out, stats);
    auto raw = open_output(opt.out_dir, "fig3_raw.csv");
    write_raw_csv(raw, stats);
    manifest["nodes"] = 6;
    manifest["n_samples"] = spec.n_samples;
    manifest["grid"] = spec.sweep.values;
    manifest["horizons"] = spec.horizons;
    manifest["files"] = {"fig3_bands.csv", "fig3_raw.csv"};
    return kExitOk;
}

int reproduce_fig5(const Options& opt, Json& manifest) {
    const std::vector<std::pair<std::string, int>> cases = {
        {"a", 5}, {"b", 0}, {"c", 2}};
    std::vector<double> grid;
    for (int i = 0; i <= 9; ++i) grid.push_back(0.1 * i);
    grid.push_back(0.95);
    grid.push_back(0.99);
    manifest["nodes"] = 6;
    manifest["grid"] = grid;
    Json case_list = Json::array();
    for (const auto& [label, target] : cases) {
        EnsembleSpec spec;
        spec.builder.family = BuilderSpec::Family::Transfer;
        spec.builder.nodes = 6;
        spec.builder.target = target;
        spec.builder.unitary = BuilderSpec::UnitaryKind::Cue;
        spec.n_samples = opt.samples > 0 ? opt.samples : 2000;
        spec.seed = derive_seed(opt.seed, 500, target);
        spec.sweep.values = grid;
        spec.tol = opt.tol;
        const EnsembleStats stats = run_ensemble(spec, jobs_or_default(opt));
        const std::string name = "fig5_case_" + label + ".csv";
        auto out = open_output(opt.out_dir, name);
        write_stats_csv(out, stats);
        auto raw = open_output(opt.out_dir, "fig5_case_" + label + "_raw.csv");
        write_raw_csv(raw, stats);
        Json entry;
        entry["case"] = label;
        entry["target"] = target;
        entry["n_samples"] = spec.n_samples;
        entry["file"] = name;
        case_list.push_back(std::move(entry));
    }
    manifest["cases"] = std::move(case_list);
    return kExitOk;
}

int reproduce_fig7(const Options& opt, Json& manifest) {
    const std::vector<double> rates = {0.05, 0.5, 0.95};
    const long horizon = opt.horizon > 0 ? opt.horizon : 60;
    BuilderSpec builder;
    builder.family = BuilderSpec::Family::Loop;
    builder.nodes = 6;
    builder.unitary = BuilderSpec::UnitaryKind::Disk;
    builder.unitary_radius = 0.1;
    builder.seed = opt.seed;
    manifest["nodes"] = 6;
    manifest["rates"] = rates;
    manifest["horizon"] = horizon;
    manifest["disk_radius"] = builder.unitary_radius;
    Json curves = Json::array();
    for (double d : rates) {
        const QuantumChannel channel = builder.build_at(d, builder.seed);
        const StateVector psi = StateVector::basis(6, 0);
        const ReturnAnalysis series = return_series(channel, psi, horizon, opt.tol);
        const ReturnAnalysis full =
            quantization_verdict(channel, psi, opt.tol, opt.quantization_tol, 1);
        const std::string name = "fig7_d" + format_double(d) + ".csv";
        auto out = open_output(opt.out_dir, name);
        write_distribution_csv(out, series);
        Json curve;
        curve["file"] = name;
        curve["d"] = d;
        curve["exact_T"] = full.exact_T;
        curve["p1"] = series.p.front();
        curve["p6"] = series.p.size() >= 6 ? series.p[5] : 0.0;
        curves.push_back(std::move(curve));
    }
    manifest["curves"] = std::move(curves);
    return kExitOk;
}

int cmd_reproduce(const Options& opt) {
    if (opt.out_dir.empty()) throw ParseError("reproduce requires --out");
    Json manifest;
    manifest["figure"] = opt.figure;
    manifest["seed"] = opt.seed;
    int code = kExitOk;
    switch (opt.figure) {
        case 2: code = reproduce_fig2(opt, manifest); break;
        case 3: code = reproduce_fig3(opt, manifest); break;
        case 5: code = reproduce_fig5(opt, manifest); break;
        case 7: code = reproduce_fig7(opt, manifest); break;
        default:
            throw ParseError("unknown figure " + std::to_string(opt.figure) +
                             " (supported: 2, 3, 5, 7)");
    }
    auto out = open_output(opt.out_dir, "manifest.json");
    out << manifest.dump(2) << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Iterated open quantum walks: first-return times and "
                 "return-time quantization checks"};
    app.require_subcommand(1);

    Options opt;

    auto* validate_cmd =
        app.add_subcommand("validate", "Check a channel spec (Kraus set)");
    add_channel_flags(validate_cmd, opt);
    add_tolerance_flags(validate_cmd, opt);

    auto* return_cmd = app.add_subcommand(
        "return-time", "Exact expected return time and unitality verdict");
    add_channel_flags(return_cmd, opt);
    add_tolerance_flags(return_cmd, opt);
    return_cmd->add_option("--psi", opt.psi, "Initial basis state (default 0)");
    return_cmd->add_option("--horizon", opt.horizon,
                           "Series horizon included in the report");
    return_cmd->add_option("--tol-quantization", opt.quantization_tol,
                           "Quantization tolerance (default 1e-6)");

    auto* dist_cmd = app.add_subcommand(
        "distribution", "First-return distribution p_t, q_t up to a horizon");
    add_channel_flags(dist_cmd, opt);
    add_tolerance_flags(dist_cmd, opt);
    dist_cmd->add_option("--psi", opt.psi, "Initial basis state");
    dist_cmd->add_option("--horizon", opt.horizon, "Number of timesteps")
        ->required();
    dist_cmd->add_option("--out", opt.out_dir, "Output directory");

    auto* sweep_cmd = app.add_subcommand(
        "sweep", "Exact return time across a grid of rate values");
    add_tolerance_flags(sweep_cmd, opt);
    sweep_cmd->add_option("--builder", opt.builder_json, "Builder spec")
        ->required();
    sweep_cmd->add_option("--values", opt.values_csv,
                          "Comma-separated rate values")
        ->required();
    sweep_cmd->add_option("--param", opt.param, "Swept parameter (only d)");
    sweep_cmd->add_option("--psi", opt.psi, "Initial basis state");
    sweep_cmd->add_option("--out", opt.out_dir, "Output directory");
    sweep_cmd->add_option("--tol-quantization", opt.quantization_tol,
                          "Quantization tolerance");

    auto* ens_cmd = app.add_subcommand(
        "ensemble", "Random-ensemble order statistics of return times");
    add_tolerance_flags(ens_cmd, opt);
    ens_cmd->add_option("--spec", opt.spec_source,
                        "Ensemble spec: inline JSON or a path")
        ->required();
    ens_cmd->add_option("--samples", opt.samples, "Override sample count");
    ens_cmd->add_option("--jobs", opt.jobs, "Worker threads (default: cores)");
    ens_cmd->add_option("--out", opt.out_dir, "Output directory");

    auto* rep_cmd = app.add_subcommand(
        "reproduce", "Write the data files behind a preset figure");
    add_tolerance_flags(rep_cmd, opt);
    rep_cmd->add_option("--figure", opt.figure, "Figure number: 2, 3, 5 or 7")
        ->required();
    rep_cmd->add_option("--out", opt.out_dir, "Output directory")->required();
    rep_cmd->add_option("--samples", opt.samples, "Override sample count");
    rep_cmd->add_option("--horizon", opt.horizon, "Override distribution horizon");
    rep_cmd->add_option("--jobs", opt.jobs, "Worker threads");
    rep_cmd->add_option("--tol-quantization", opt.quantization_tol,
                        "Quantization tolerance");

    for (auto* cmd : {validate_cmd, return_cmd, dist_cmd, sweep_cmd, ens_cmd,
                      rep_cmd})
        cmd->add_option("--seed", opt.seed, "Random seed")
            ->each([&](const std::string&) { opt.seed_given = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitParseError;
    }

    try {
        opt.tol.validate();
        if (validate_cmd->parsed()) return cmd_validate(opt);
        if (return_cmd->parsed()) return cmd_return_time(opt);
        if (dist_cmd->parsed()) return cmd_distribution(opt);
        if (sweep_cmd->parsed()) return cmd_sweep(opt);
        if (ens_cmd->parsed()) return cmd_ensemble(opt);
        if (rep_cmd->parsed()) return cmd_reproduce(opt);
    } catch (const TheoremViolation& e) {
        Json diag;
        diag["error"] = "theorem_violation";
        diag["message"] = e.what();
        diag["defect"] = e.defect;
        std::cerr << diag.dump(2) << '\n';
        return kExitTheoremViolation;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParseError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalidChannel;
    }
    return kExitOk;
}
