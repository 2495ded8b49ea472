// Copyright 2026 The qrr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qrr/qrr.hpp"

namespace {

using qrr::format_double;
using json = nlohmann::ordered_json;

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Collects inputs and outputs of one command and writes its manifest.
class RunRecord {
   public:
    RunRecord(std::vector<std::string> argv, uint64_t seed) : argv_(std::move(argv)), seed_(seed), started_(utc_now()) {
    }

    void input(const std::string &path, const std::string &bytes) {
        inputs_.push_back({path, qrr::fnv1a64(bytes)});
    }

    void output(const std::string &path, const std::string &bytes) {
        qrr::write_file(path, bytes);
        outputs_.push_back({path, bytes.size(), qrr::fnv1a64(bytes)});
    }

    void set_seed(uint64_t seed) {
        seed_ = seed;
    }

    uint64_t config_hash() const {
        uint64_t h = qrr::fnv1a64("qrr-config");
        for (const auto &a : argv_) {
            h = qrr::fnv1a64(a, h);
            h = qrr::fnv1a64(std::string_view("\0", 1), h);
        }
        for (const auto &in : inputs_) {
            h = qrr::fnv1a64(hex64(in.hash), h);
        }
        return h;
    }

    /// Writes `<first output>.manifest.json`; no-op when nothing was written.
    void finish() const {
        if (outputs_.empty()) {
            return;
        }
        json doc;
        doc["version"] = 1;
        doc["qrr_version"] = qrr::kVersion;
        doc["argv"] = argv_;
        doc["cwd"] = std::filesystem::current_path().string();
        doc["config_hash"] = hex64(config_hash());
        doc["seed"] = seed_;
        doc["started"] = started_;
        doc["finished"] = utc_now();
        auto ins = json::array();
        for (const auto &in : inputs_) {
            ins.push_back({{"path", in.path}, {"fnv1a64", hex64(in.hash)}});
        }
        doc["inputs"] = ins;
        auto outs = json::array();
        for (const auto &out : outputs_) {
            outs.push_back({{"path", out.path}, {"bytes", out.bytes}, {"fnv1a64", hex64(out.hash)}});
        }
        doc["outputs"] = outs;
        qrr::write_file(outputs_.front().path + ".manifest.json", doc.dump(2) + "\n");
    }

   private:
    struct Input {
        std::string path;
        uint64_t hash;
    };
    struct Output {
        std::string path;
        std::size_t bytes;
        uint64_t hash;
    };
    std::vector<std::string> argv_;
    uint64_t seed_;
    std::string started_;
    std::vector<Input> inputs_;
    std::vector<Output> outputs_;
};

qrr::ProblemInstance read_instance(RunRecord &record, const std::string &path) {
    const std::string text = qrr::read_file(path);
    record.input(path, text);
    try {
        return qrr::parse_instance(text, qrr::detect_instance_format(text));
    } catch (const qrr::SchemaError &e) {
        throw qrr::SchemaError(path + ": " + e.what());
    }
}

qrr::StatsFile read_stats(RunRecord &record, const std::string &path) {
    const std::string text = qrr::read_file(path);
    record.input(path, text);
    try {
        return qrr::parse_stats(text);
    } catch (const qrr::SchemaError &e) {
        throw qrr::SchemaError(path + ": " + e.what());
    }
}

json ratio_json(const qrr::RatioReport &r) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json doc;
    doc["kind"] = qrr::to_string(r.kind);
    doc["method"] = r.method;
    doc["circuit_cost"] = num(r.circuit_cost);
    doc["rounded_cost"] = num(r.rounded_cost);
    doc["ratio"] = num(r.ratio);
    doc["ratio_se"] = num(r.ratio_se);
    doc["degenerate"] = r.degenerate;
    if (r.method == "monte_carlo") {
        doc["shots"] = r.shots;
    }
    doc["sigma_edges"] = {{"min", r.sigma_min}, {"max", r.sigma_max}, {"mean", r.sigma_mean}};
    auto edges = json::array();
    for (const auto &e : r.edges) {
        edges.push_back(
            {{"i", e.i}, {"j", e.j}, {"w", e.w}, {"sigma", e.sigma}, {"circuit", e.circuit}, {"rounded", e.rounded}});
    }
    doc["edges"] = edges;
    return doc;
}

json apriori_json(const qrr::AprioriBound &b) {
    json doc;
    doc["epsilon"] = b.epsilon;
    doc["applicable"] = b.applicable;
    doc["bound"] = b.applicable ? json(b.bound) : json(nullptr);
    doc["one_minus_h"] = b.applicable ? json(b.one_minus_h) : json(nullptr);
    return doc;
}

std::pair<int, int> parse_range(const std::string &text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw qrr::ArgumentError("--d-range must look like LO:HI");
    }
    try {
        std::size_t used_lo = 0;
        std::size_t used_hi = 0;
        const int lo = std::stoi(text.substr(0, colon), &used_lo);
        const int hi = std::stoi(text.substr(colon + 1), &used_hi);
        if (used_lo != colon || used_hi != text.size() - colon - 1 || lo < 1 || hi < lo) {
            throw qrr::ArgumentError("");
        }
        return {lo, hi};
    } catch (const std::exception &) {
        throw qrr::ArgumentError("--d-range must look like LO:HI with 1 <= LO <= HI");
    }
}

qrr::QaoaSpec qaoa_from_flags(int p, const std::vector<double> &betas, const std::vector<double> &gammas,
                              const std::string &layering) {
    const auto l = qrr::noise_layering_from_string(layering);
    if (betas.empty() && gammas.empty()) {
        return qrr::QaoaSpec::fixed_angles(p, l);
    }
    qrr::QaoaSpec spec{p, betas, gammas, l};
    spec.check();
    return spec;
}

int run(const std::vector<std::string> &args);

int run_rerun(const std::string &manifest_path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(qrr::read_file(manifest_path));
    } catch (const nlohmann::json::parse_error &e) {
        throw qrr::SchemaError(manifest_path + ": " + e.what());
    }
    for (const char *field : {"argv", "cwd", "outputs"}) {
        if (!doc.contains(field)) {
            throw qrr::SchemaError(manifest_path + ": missing field '" + field + "'");
        }
    }
    const auto argv = doc["argv"].get<std::vector<std::string>>();
    if (!argv.empty() && argv[0] == "rerun") {
        throw qrr::ArgumentError("a manifest cannot rerun itself");
    }
    const auto previous = std::filesystem::current_path();
    std::filesystem::current_path(doc["cwd"].get<std::string>());
    int status = 0;
    try {
        status = run(argv);
    } catch (...) {
        std::filesystem::current_path(previous);
        throw;
    }
    int mismatches = 0;
    for (const auto &out : doc["outputs"]) {
        const std::string path = out.at("path").get<std::string>();
        const std::string bytes = qrr::read_file(path);
        const bool same = hex64(qrr::fnv1a64(bytes)) == out.at("fnv1a64").get<std::string>() &&
                          bytes.size() == out.at("bytes").get<std::size_t>();
        std::cout << (same ? "identical " : "DIFFERENT ") << path << "\n";
        mismatches += same ? 0 : 1;
    }
    std::filesystem::current_path(previous);
    if (status != 0) {
        return status;
    }
    if (mismatches > 0) {
        std::cerr << "qrr: " << mismatches << " output(s) differ from the manifest\n";
        return 1;
    }
    return 0;
}

int run(const std::vector<std::string> &args) {
    CLI::App app{"Randomized rounding of noisy QAOA correlations", "qrr"};
    app.require_subcommand(1);
    app.set_version_flag("--version", qrr::kVersion);

    // instance
    auto *instance_cmd = app.add_subcommand("instance", "Generate or inspect problem instances");
    instance_cmd->require_subcommand(1);
    auto *gen = instance_cmd->add_subcommand("gen", "Generate a random regular instance");
    int gen_nodes = 0;
    int gen_degree = 3;
    std::string gen_kind = "maxcut";
    uint64_t gen_seed = 0;
    std::string gen_out;
    std::string gen_format = "auto";
    gen->add_option("--nodes", gen_nodes, "Number of nodes")->required();
    gen->add_option("--degree", gen_degree, "Regular degree");
    gen->add_option("--kind", gen_kind, "maxcut or qubo")->check(CLI::IsMember({"maxcut", "qubo"}));
    gen->add_option("--seed", gen_seed, "Master seed");
    gen->add_option("--format", gen_format, "edgelist, json or auto")->check(CLI::IsMember({"auto", "edgelist", "json"}));
    gen->add_option("-o,--output", gen_out, "Output file")->required();
    auto *show = instance_cmd->add_subcommand("show", "Print an instance summary");
    std::string show_in;
    show->add_option("-i,--instance", show_in, "Instance file")->required();

    // simulate
    auto *sim = app.add_subcommand("simulate", "Simulate QAOA and write correlation statistics");
    std::string sim_in, sim_out, sim_samples, sim_noise = "none", sim_engine = "density", sim_layering = "gate";
    int sim_p = 1;
    std::vector<double> sim_betas, sim_gammas;
    long sim_shots = 0;
    int sim_spt = 1;
    uint64_t sim_seed = 0;
    sim->add_option("-i,--instance", sim_in, "Instance file")->required();
    sim->add_option("--qaoa-p", sim_p, "QAOA rounds (0 leaves |+>^n)");
    sim->add_option("--betas", sim_betas, "Mixer angles")->delimiter(',');
    sim->add_option("--gammas", sim_gammas, "Cost angles")->delimiter(',');
    sim->add_option("--layering", sim_layering, "Noise after every gate layer or every round")
        ->check(CLI::IsMember({"gate", "macro"}));
    sim->add_option("--noise", sim_noise, "none, dp:STRENGTH or ad:STRENGTH");
    sim->add_option("--engine", sim_engine, "density or trajectory")->check(CLI::IsMember({"density", "trajectory"}));
    sim->add_option("--shots", sim_shots, "Measurement shots (density) or trajectories");
    sim->add_option("--samples-per-trajectory", sim_spt, "Measurements per trajectory");
    sim->add_option("--seed", sim_seed, "Master seed");
    sim->add_option("-o,--output", sim_out, "Stats JSON")->required();
    sim->add_option("--samples", sim_samples, "Also write circuit samples CSV");

    // round
    auto *round = app.add_subcommand("round", "Sample sign-rounded Gaussian vectors");
    std::string round_stats, round_in, round_out, round_model = "second_moment";
    long round_shots = 1000;
    uint64_t round_seed = 0;
    round->add_option("--stats", round_stats, "Stats JSON")->required();
    round->add_option("-i,--instance", round_in, "Instance for the cost column");
    round->add_option("--shots", round_shots, "Number of samples");
    round->add_option("--seed", round_seed, "Master seed");
    round->add_option("--gaussian", round_model, "second_moment or centered")
        ->check(CLI::IsMember({"second_moment", "centered"}));
    round->add_option("-o,--output", round_out, "Samples CSV")->required();

    // analyze
    auto *analyze = app.add_subcommand("analyze", "Report the approximation ratio and applicable bounds");
    std::string an_in, an_stats, an_out, an_noise, an_model = "second_moment";
    int an_depth = 0;
    long an_shots = 100000;
    uint64_t an_seed = 0;
    analyze->add_option("-i,--instance", an_in, "Instance file")->required();
    analyze->add_option("--stats", an_stats, "Stats JSON")->required();
    analyze->add_option("--noise", an_noise, "Noise the stats came from, for a-priori bounds");
    analyze->add_option("--depth", an_depth, "Noisy layer count D, for a-priori bounds");
    analyze->add_option("--shots", an_shots, "Monte Carlo shots when mu != 0");
    analyze->add_option("--seed", an_seed, "Monte Carlo seed");
    analyze->add_option("--gaussian", an_model, "second_moment or centered")
        ->check(CLI::IsMember({"second_moment", "centered"}));
    analyze->add_option("-o,--output", an_out, "Also write the report to a file");

    // bounds
    auto *bounds = app.add_subcommand("bounds", "Emit a-priori bound curves over D");
    double b_p = 0;
    int b_delta = 3;
    int b_n = 0;
    bool b_nonregular = false;
    std::string b_range = "1:300", b_out;
    bounds->add_option("--p", b_p, "Depolarizing strength")->required();
    bounds->add_option("--delta", b_delta, "Maximum degree");
    bounds->add_option("--n", b_n, "Node count (adds covariance and QUBO columns)");
    bounds->add_flag("--non-regular", b_nonregular, "Use the non-regular epsilon");
    bounds->add_option("--d-range", b_range, "LO:HI");
    bounds->add_option("-o,--output", b_out, "Curve CSV")->required();

    // experiment
    auto *experiment = app.add_subcommand("experiment", "Run a configured experiment");
    std::string ex_kind, ex_config, ex_out;
    experiment->add_option("kind", ex_kind, "ratios, distribution or noise-sweep")
        ->required()
        ->check(CLI::IsMember({"ratios", "distribution", "noise-sweep"}));
    experiment->add_option("--config", ex_config, "Config JSON")->required();
    experiment->add_option("-o,--output", ex_out, "Output file (overrides the config)");

    // rerun
    auto *rerun = app.add_subcommand("rerun", "Re-execute a manifest and compare outputs");
    std::string rr_manifest;
    rerun->add_option("--manifest", rr_manifest, "Manifest JSON")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2;
    }

    RunRecord record(args, 0);

    if (*gen) {
        record.set_seed(gen_seed);
        const auto kind = qrr::problem_kind_from_string(gen_kind);
        const auto instance = kind == qrr::ProblemKind::MaxCut ? qrr::gen_regular(gen_nodes, gen_degree, gen_seed)
                                                               : qrr::gen_qubo(gen_nodes, gen_degree, gen_seed);
        qrr::InstanceFormat fmt = kind == qrr::ProblemKind::MaxCut ? qrr::InstanceFormat::EdgeList
                                                                   : qrr::InstanceFormat::Structured;
        if (gen_format == "edgelist") {
            fmt = qrr::InstanceFormat::EdgeList;
        } else if (gen_format == "json") {
            fmt = qrr::InstanceFormat::Structured;
        }
        record.output(gen_out, qrr::serialize_instance(instance, fmt));
    } else if (*show) {
        const auto instance = read_instance(record, show_in);
        std::cout << "kind " << qrr::to_string(instance.kind()) << "\n"
                  << "n " << instance.n() << "\n"
                  << "edges " << instance.edges().size() << "\n"
                  << "max_degree " << instance.max_degree() << "\n"
                  << "regular " << (instance.is_regular() ? "yes" : "no") << "\n"
                  << "total_weight " << format_double(instance.total_weight()) << "\n";
    } else if (*sim) {
        record.set_seed(sim_seed);
        const auto instance = read_instance(record, sim_in);
        const auto noise = qrr::NoiseModel::parse(sim_noise);
        const auto qaoa = qaoa_from_flags(sim_p, sim_betas, sim_gammas, sim_layering);
        qrr::SimulationRequest request{qrr::engine_from_string(sim_engine), sim_shots, sim_spt, sim_seed};
        if (request.engine == qrr::Engine::Density && instance.n() > qrr::kDensityMaxQubits) {
            throw qrr::LimitError("density engine supports n <= " + std::to_string(qrr::kDensityMaxQubits) +
                                  "; use --engine trajectory (n <= " + std::to_string(qrr::kTrajectoryMaxQubits) +
                                  ")");
        }
        if (request.engine == qrr::Engine::Trajectory && request.shots < 1) {
            throw qrr::ArgumentError("--engine trajectory needs --shots >= 1");
        }
        if (!sim_samples.empty() && request.shots < 1) {
            throw qrr::ArgumentError("--samples needs --shots >= 1");
        }
        const auto result = qrr::simulate(instance, qaoa, noise, request);
        record.output(sim_out, qrr::serialize_stats(result.stats, result.sigma_se ? &*result.sigma_se : nullptr));
        if (!sim_samples.empty()) {
            record.output(sim_samples, qrr::serialize_samples(result.samples));
        }
        std::cerr << "D " << result.depth << "\n";
    } else if (*round) {
        record.set_seed(round_seed);
        const auto stats = read_stats(record, round_stats);
        auto batch = qrr::sample_rounded(stats.stats, round_shots, round_seed,
                                         qrr::gaussian_model_from_string(round_model));
        if (!round_in.empty()) {
            batch.fill_costs(read_instance(record, round_in));
        }
        record.output(round_out, qrr::serialize_samples(batch));
    } else if (*analyze) {
        record.set_seed(an_seed);
        const auto instance = read_instance(record, an_in);
        const auto stats = read_stats(record, an_stats);
        if (stats.stats.n() != instance.n()) {
            throw qrr::SchemaError("stats n=" + std::to_string(stats.stats.n()) + " does not match instance n=" +
                                   std::to_string(instance.n()));
        }
        const bool centered_mean = stats.stats.mu.cwiseAbs().maxCoeff() <= 1e-9;
        const auto report = centered_mean ? qrr::posterior_ratio(instance, stats.stats)
                                          : qrr::monte_carlo_ratio(instance, stats.stats, an_shots, an_seed,
                                                                   qrr::gaussian_model_from_string(an_model));
        json doc;
        doc["version"] = 1;
        doc["report"] = ratio_json(report);
        const auto diag = qrr::validate(stats.stats, 1e-9);
        doc["diagnostics"] = {{"symmetric_dev", diag.symmetric_dev},
                              {"diag_dev", diag.diag_dev},
                              {"min_eigenvalue", diag.min_eigenvalue}};
        if (instance.kind() == qrr::ProblemKind::Qubo) {
            const double alpha = qrr::gershgorin_certificate(stats.stats.sigma);
            doc["gershgorin_alpha"] = alpha;
            doc["m_alpha_min_eigenvalue"] = qrr::m_alpha_spectrum(stats.stats.sigma, alpha);
        }
        if (!an_noise.empty() || an_depth > 0) {
            if (an_noise.empty() || an_depth < 1) {
                throw qrr::ArgumentError("a-priori bounds need both --noise and --depth");
            }
            const auto noise = qrr::NoiseModel::parse(an_noise);
            if (noise.kind == qrr::NoiseKind::Depolarizing) {
                if (instance.kind() == qrr::ProblemKind::MaxCut) {
                    doc["apriori_maxcut"] = apriori_json(qrr::apriori_maxcut_bound(
                        noise.strength, an_depth, instance.max_degree(), instance.is_regular()));
                    doc["covariance_sum_bound"] =
                        qrr::covariance_sum_bound(noise.strength, an_depth, instance.max_degree(), instance.n());
                } else {
                    const auto q = qrr::apriori_qubo_bound(noise.strength, an_depth, instance.max_degree(), instance.n());
                    doc["apriori_qubo"] = {{"noisy_term", q.noisy_term}, {"floor", q.floor}, {"bound", q.bound}};
                }
            } else {
                doc["apriori_note"] = "a-priori bounds cover depolarizing noise only";
            }
        }
        const std::string text = doc.dump(2) + "\n";
        std::cout << text;
        if (!an_out.empty()) {
            record.output(an_out, text);
        }
    } else if (*bounds) {
        const auto [lo, hi] = parse_range(b_range);
        if (!(b_p >= 0 && b_p <= 1)) {
            throw qrr::ArgumentError("--p must lie in [0, 1]");
        }
        if (b_delta < 1) {
            throw qrr::ArgumentError("--delta must be >= 1");
        }
        std::string csv = "D,epsilon,applicable,maxcut_bound,one_minus_h";
        if (b_n > 0) {
            csv += ",covariance_sum_bound,qubo_noisy_term,qubo_bound";
        }
        csv += '\n';
        for (int d = lo; d <= hi; ++d) {
            const auto b = qrr::apriori_maxcut_bound(b_p, d, b_delta, !b_nonregular);
            csv += std::to_string(d) + ',' + format_double(b.epsilon) + ',' + (b.applicable ? "1" : "0") + ',' +
                   (b.applicable ? format_double(b.bound) : "") + ',' + (b.applicable ? format_double(b.one_minus_h) : "");
            if (b_n > 0) {
                const auto q = qrr::apriori_qubo_bound(b_p, d, b_delta, b_n);
                csv += ',' + format_double(qrr::covariance_sum_bound(b_p, d, b_delta, b_n)) + ',' +
                       format_double(q.noisy_term) + ',' + format_double(q.bound);
            }
            csv += '\n';
        }
        record.output(b_out, csv);
    } else if (*experiment) {
        const std::string text = qrr::read_file(ex_config);
        record.input(ex_config, text);
        qrr::ExperimentConfig config;
        try {
            config = qrr::parse_experiment_config(text);
        } catch (const qrr::SchemaError &e) {
            throw qrr::SchemaError(ex_config + ": " + e.what());
        }
        for (const auto &f : config.instances.files) {
            record.input(f, qrr::read_file(f));
        }
        record.set_seed(config.seed);
        const std::string out = ex_out.empty() ? config.output : ex_out;
        if (out.empty()) {
            throw qrr::ArgumentError("no output path: pass -o or set 'output' in the config");
        }
        if (ex_kind == "ratios") {
            record.output(out, qrr::serialize_ratio_experiment(qrr::run_ratio_experiment(config)));
        } else if (ex_kind == "distribution") {
            record.output(out, qrr::serialize_distribution_report(qrr::run_distribution_experiment(config)));
        } else {
            record.output(out, qrr::serialize_sweep_csv(qrr::run_noise_sweep(config)));
        }
    } else if (*rerun) {
        return run_rerun(rr_manifest);
    }
    record.finish();
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run(args);
    } catch (const qrr::Error &e) {
        std::cerr << "qrr: " << e.what() << "\n";
        return e.exit_code();
    } catch (const nlohmann::json::exception &e) {
        std::cerr << "qrr: malformed JSON: " << e.what() << "\n";
        return 4;
    } catch (const std::filesystem::filesystem_error &e) {
        std::cerr << "qrr: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "qrr: " << e.what() << "\n";
        return 1;
    }
}
