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

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrr/bounds.hpp"
#include "qrr/correlation.hpp"
#include "qrr/error.hpp"
#include "qrr/formats.hpp"
#include "qrr/parallel.hpp"
#include "qrr/problem.hpp"
#include "qrr/rounding.hpp"
#include "qrr/simulator.hpp"

namespace qrr {

// ---------------------------------------------------------------------------
// Sample statistics
// ---------------------------------------------------------------------------

/// Mean of the ceil(alpha N) largest costs.
inline double cvar(std::vector<double> costs, double alpha) {
    if (costs.empty()) {
        throw ArgumentError("cvar: empty cost list");
    }
    if (!(alpha > 0 && alpha <= 1)) {
        throw ArgumentError("cvar: alpha must lie in (0, 1]");
    }
    const auto count = static_cast<std::size_t>(
        std::max(1.0, std::ceil(alpha * static_cast<double>(costs.size()) - 1e-12)));
    std::partial_sort(costs.begin(), costs.begin() + static_cast<std::ptrdiff_t>(count), costs.end(),
                      std::greater<>());
    double sum = 0;
    for (std::size_t k = 0; k < count; ++k) {
        sum += costs[k];
    }
    return sum / static_cast<double>(count);
}

/// Fraction of costs <= grid[k], for a sorted grid.
inline std::vector<double> ecdf(std::vector<double> costs, const std::vector<double> &grid) {
    std::sort(costs.begin(), costs.end());
    std::vector<double> out;
    out.reserve(grid.size());
    for (double x : grid) {
        const auto le = std::upper_bound(costs.begin(), costs.end(), x) - costs.begin();
        out.push_back(costs.empty() ? 0.0 : static_cast<double>(le) / static_cast<double>(costs.size()));
    }
    return out;
}

inline std::vector<double> unique_sorted(const std::vector<std::vector<double>> &lists) {
    std::vector<double> all;
    for (const auto &l : lists) {
        all.insert(all.end(), l.begin(), l.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

/// Smallest positive gap between distinct values (0 if fewer than two).
inline double min_positive_gap(const std::vector<double> &sorted_unique) {
    double gap = 0;
    for (std::size_t k = 1; k < sorted_unique.size(); ++k) {
        const double d = sorted_unique[k] - sorted_unique[k - 1];
        if (d > 0 && (gap == 0 || d < gap)) {
            gap = d;
        }
    }
    return gap;
}

/// Total variation between the cost histograms of `a` and `b`, with bins
/// [origin + k width, origin + (k+1) width).
inline double tv_distance(const std::vector<double> &a, const std::vector<double> &b, double width, double origin) {
    if (a.empty() || b.empty()) {
        throw ArgumentError("tv_distance: empty cost list");
    }
    if (!(width > 0)) {
        throw ArgumentError("tv_distance: bin width must be positive");
    }
    std::map<long, double> diff;
    // Half a bin of slack keeps values sitting on a grid point in their own bin.
    auto bin = [&](double c) { return static_cast<long>(std::floor((c - origin) / width + 0.5)); };
    for (double c : a) {
        diff[bin(c)] += 1.0 / static_cast<double>(a.size());
    }
    for (double c : b) {
        diff[bin(c)] -= 1.0 / static_cast<double>(b.size());
    }
    double tv = 0;
    for (const auto &[k, d] : diff) {
        tv += std::abs(d);
    }
    return 0.5 * tv;
}

/// Quantile with linear interpolation between order statistics (type 7).
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw ArgumentError("quantile: empty list");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(values.size() - 1, lo + 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct BoxSummary {
    double min = 0;
    double q1 = 0;
    double median = 0;
    double q3 = 0;
    double max = 0;
    std::size_t count = 0;
};

inline BoxSummary box_summary(const std::vector<double> &values) {
    BoxSummary b;
    b.count = values.size();
    if (values.empty()) {
        return b;
    }
    b.min = *std::min_element(values.begin(), values.end());
    b.max = *std::max_element(values.begin(), values.end());
    b.q1 = quantile(values, 0.25);
    b.median = quantile(values, 0.5);
    b.q3 = quantile(values, 0.75);
    return b;
}

inline SampleBatch sample_uniform(int n, long shots, uint64_t seed) {
    if (shots < 1) {
        throw ArgumentError("sample_uniform: shots must be >= 1");
    }
    SampleBatch batch(n, static_cast<std::size_t>(shots), Provenance::Uniform);
    parallel_blocks(static_cast<std::size_t>(shots), kSampleBlock, [&](std::size_t b, std::size_t begin, std::size_t end) {
        Rng rng = make_rng(seed, "uniform", b);
        for (std::size_t k = begin; k < end; ++k) {
            auto row = batch.row(k);
            for (int i = 0; i < n; ++i) {
                row[i] = (rng() >> 63) ? Spin{-1} : Spin{1};
            }
        }
    });
    return batch;
}

// ---------------------------------------------------------------------------
// Simulation front end
// ---------------------------------------------------------------------------

enum class Engine { Auto, Density, Trajectory };

inline Engine engine_from_string(const std::string &s) {
    if (s == "auto") {
        return Engine::Auto;
    }
    if (s == "density") {
        return Engine::Density;
    }
    if (s == "trajectory") {
        return Engine::Trajectory;
    }
    throw ArgumentError("unknown engine '" + s + "' (expected auto, density or trajectory)");
}

inline const char *to_string(Engine e) {
    switch (e) {
        case Engine::Auto:
            return "auto";
        case Engine::Density:
            return "density";
        case Engine::Trajectory:
            return "trajectory";
    }
    return "auto";
}

struct SimulationRequest {
    Engine engine = Engine::Auto;
    long shots = 0;  // measurement shots (density) or trajectories; 0 = stats only
    int samples_per_trajectory = 1;
    uint64_t seed = 0;
};

struct SimulationResult {
    Engine engine = Engine::Density;
    int depth = 0;
    CorrelationStats stats;
    std::optional<Eigen::MatrixXd> sigma_se;
    SampleBatch samples;  // empty when no shots were requested
};

/// Builds the QAOA circuit, evolves it with the chosen engine and returns
/// exact (density) or estimated (trajectory) moments plus optional samples.
inline SimulationResult simulate(const ProblemInstance &instance, const QaoaSpec &qaoa, const NoiseModel &noise,
                                 const SimulationRequest &request) {
    const CircuitDescription circuit = build_qaoa_circuit(instance, qaoa);
    SimulationResult out;
    out.depth = circuit.depth();
    out.engine = request.engine;
    if (out.engine == Engine::Auto) {
        out.engine = instance.n() <= kDensityMaxQubits ? Engine::Density : Engine::Trajectory;
    }
    if (out.engine == Engine::Density) {
        const DensityMatrix rho = evolve_density(circuit, noise);
        out.stats = extract_stats(rho);
        if (request.shots > 0) {
            out.samples = measure(rho, request.shots, derive_seed(request.seed, "simulate/measure"));
        }
    } else {
        if (request.shots < 1) {
            throw ArgumentError("trajectory engine needs shots >= 1");
        }
        TrajectoryResult tr = evolve_trajectories(circuit, noise, request.shots,
                                                  derive_seed(request.seed, "simulate/trajectories"),
                                                  request.samples_per_trajectory);
        out.stats = std::move(tr.stats);
        out.sigma_se = std::move(tr.sigma_stderr);
        out.samples = std::move(tr.samples);
    }
    if (out.samples.size() > 0) {
        out.samples.fill_costs(instance);
    }
    return out;
}

inline double mean_offdiagonal(const Eigen::MatrixXd &sigma) {
    const Eigen::Index n = sigma.rows();
    if (n < 2) {
        return 0;
    }
    return (sigma.sum() - sigma.trace()) / static_cast<double>(n * (n - 1));
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct InstanceSource {
    std::vector<std::string> files;
    // Generator parameters, used when `files` is empty.
    ProblemKind kind = ProblemKind::MaxCut;
    int nodes = 8;
    int degree = 3;
    int count = 1;
    uint64_t seed = 0;
};

struct ExperimentConfig {
    InstanceSource instances;
    QaoaSpec qaoa = QaoaSpec::fixed_angles(1);
    bool qaoa_fixed_angles = true;
    std::vector<int> qaoa_depths;  // noise sweep; defaults to {qaoa.p}
    std::vector<NoiseModel> noise = {NoiseModel::none()};
    Engine engine = Engine::Auto;
    long shots = 100000;
    long trajectories = 2000;
    int samples_per_trajectory = 50;
    uint64_t seed = 0;
    std::vector<double> cvar_alphas = {1.0, 0.1, 0.01};
    double bin_width = 0;  // 0 selects the smallest positive cost gap
    GaussianModel gaussian_model = GaussianModel::SecondMoment;
    std::string output;

    std::vector<ProblemInstance> load_instances() const {
        std::vector<ProblemInstance> out;
        if (!instances.files.empty()) {
            for (const auto &f : instances.files) {
                out.push_back(load_instance(f));
            }
            return out;
        }
        for (int k = 0; k < instances.count; ++k) {
            const uint64_t s = derive_seed(instances.seed, "instance", static_cast<uint64_t>(k));
            out.push_back(instances.kind == ProblemKind::MaxCut ? gen_regular(instances.nodes, instances.degree, s)
                                                                : gen_qubo(instances.nodes, instances.degree, s));
        }
        return out;
    }

    QaoaSpec qaoa_for_depth(int p) const {
        if (qaoa_fixed_angles) {
            return QaoaSpec::fixed_angles(p, qaoa.layering);
        }
        if (p != qaoa.p) {
            throw ArgumentError("explicit angles are given for depth " + std::to_string(qaoa.p) +
                                " only; remove qaoa_depths or use fixed angles");
        }
        return qaoa;
    }
};

namespace detail {

template <typename T>
T config_get(const nlohmann::json &obj, const std::string &path, const char *field, const T &fallback) {
    if (!obj.contains(field)) {
        return fallback;
    }
    try {
        return obj.at(field).get<T>();
    } catch (const nlohmann::json::exception &) {
        throw SchemaError("config: field '" + path + field + "' has the wrong type");
    }
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string &text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw SchemaError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) {
        throw SchemaError("config: top level must be an object");
    }
    static const std::vector<std::string> kKnown = {
        "instances", "qaoa",          "qaoa_depths",          "noise",      "engine",         "shots",
        "trajectories", "samples_per_trajectory", "seed", "cvar_alphas", "bin_width", "gaussian_model", "output"};
    for (const auto &[key, value] : doc.items()) {
        if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
            throw SchemaError("config: unknown field '" + key + "'");
        }
    }
    ExperimentConfig c;
    auto rethrow = [](const std::string &field, const Error &e) {
        throw SchemaError("config: field '" + field + "': " + e.what());
    };

    if (!doc.contains("instances") || !doc["instances"].is_object()) {
        throw SchemaError("config: missing object field 'instances'");
    }
    const auto &inst = doc["instances"];
    if (inst.contains("files")) {
        c.instances.files = detail::config_get<std::vector<std::string>>(inst, "instances.", "files", {});
        if (c.instances.files.empty()) {
            throw SchemaError("config: field 'instances.files' must list at least one file");
        }
    } else if (inst.contains("generate")) {
        const auto &g = inst["generate"];
        if (!g.is_object()) {
            throw SchemaError("config: field 'instances.generate' must be an object");
        }
        try {
            c.instances.kind =
                problem_kind_from_string(detail::config_get<std::string>(g, "instances.generate.", "kind", "maxcut"));
        } catch (const ArgumentError &e) {
            rethrow("instances.generate.kind", e);
        }
        c.instances.nodes = detail::config_get<int>(g, "instances.generate.", "nodes", 8);
        c.instances.degree = detail::config_get<int>(g, "instances.generate.", "degree", 3);
        c.instances.count = detail::config_get<int>(g, "instances.generate.", "count", 1);
        c.instances.seed = detail::config_get<uint64_t>(g, "instances.generate.", "seed", 0);
        if (c.instances.count < 1) {
            throw SchemaError("config: field 'instances.generate.count' must be >= 1");
        }
    } else {
        throw SchemaError("config: field 'instances' needs 'files' or 'generate'");
    }

    if (doc.contains("qaoa")) {
        const auto &q = doc["qaoa"];
        if (!q.is_object()) {
            throw SchemaError("config: field 'qaoa' must be an object");
        }
        const int p = detail::config_get<int>(q, "qaoa.", "p", 1);
        NoiseLayering layering = NoiseLayering::PerGateLayer;
        try {
            layering = noise_layering_from_string(detail::config_get<std::string>(q, "qaoa.", "layering", "gate"));
        } catch (const ArgumentError &e) {
            rethrow("qaoa.layering", e);
        }
        if (q.contains("betas") || q.contains("gammas")) {
            c.qaoa_fixed_angles = false;
            c.qaoa = QaoaSpec{p, detail::config_get<std::vector<double>>(q, "qaoa.", "betas", {}),
                              detail::config_get<std::vector<double>>(q, "qaoa.", "gammas", {}), layering};
            try {
                c.qaoa.check();
            } catch (const ArgumentError &e) {
                rethrow("qaoa", e);
            }
        } else {
            try {
                c.qaoa = QaoaSpec::fixed_angles(p, layering);
            } catch (const ArgumentError &e) {
                rethrow("qaoa.p", e);
            }
        }
    }
    c.qaoa_depths = detail::config_get<std::vector<int>>(doc, "", "qaoa_depths", {c.qaoa.p});
    if (c.qaoa_depths.empty()) {
        throw SchemaError("config: field 'qaoa_depths' must not be empty");
    }
    if (doc.contains("noise")) {
        c.noise.clear();
        for (const auto &s : detail::config_get<std::vector<std::string>>(doc, "", "noise", {})) {
            try {
                c.noise.push_back(NoiseModel::parse(s));
            } catch (const ArgumentError &e) {
                rethrow("noise", e);
            }
        }
        if (c.noise.empty()) {
            throw SchemaError("config: field 'noise' must not be empty");
        }
    }
    try {
        c.engine = engine_from_string(detail::config_get<std::string>(doc, "", "engine", "auto"));
    } catch (const ArgumentError &e) {
        rethrow("engine", e);
    }
    c.shots = detail::config_get<long>(doc, "", "shots", c.shots);
    c.trajectories = detail::config_get<long>(doc, "", "trajectories", c.trajectories);
    c.samples_per_trajectory = detail::config_get<int>(doc, "", "samples_per_trajectory", c.samples_per_trajectory);
    if (c.shots < 1) {
        throw SchemaError("config: field 'shots' must be >= 1");
    }
    if (c.trajectories < 1 || c.samples_per_trajectory < 1) {
        throw SchemaError("config: fields 'trajectories' and 'samples_per_trajectory' must be >= 1");
    }
    c.seed = detail::config_get<uint64_t>(doc, "", "seed", 0);
    c.cvar_alphas = detail::config_get<std::vector<double>>(doc, "", "cvar_alphas", c.cvar_alphas);
    for (double a : c.cvar_alphas) {
        if (!(a > 0 && a <= 1)) {
            throw SchemaError("config: field 'cvar_alphas' entries must lie in (0, 1]");
        }
    }
    c.bin_width = detail::config_get<double>(doc, "", "bin_width", 0.0);
    if (c.bin_width < 0) {
        throw SchemaError("config: field 'bin_width' must be >= 0");
    }
    try {
        c.gaussian_model =
            gaussian_model_from_string(detail::config_get<std::string>(doc, "", "gaussian_model", "second_moment"));
    } catch (const ArgumentError &e) {
        rethrow("gaussian_model", e);
    }
    c.output = detail::config_get<std::string>(doc, "", "output", "");
    return c;
}

// ---------------------------------------------------------------------------
// Ratio experiment
// ---------------------------------------------------------------------------

struct RatioRow {
    int instance = 0;
    std::string noise;
    int depth = 0;
    double circuit_cost = 0;
    std::optional<double> closed_form_ratio;
    double mc_ratio = 0;
    double mc_se = 0;
    std::optional<double> apriori_bound;
    double sigma_edge_mean = 0;
};

struct RatioExperimentResult {
    std::vector<RatioRow> rows;
    std::map<std::string, BoxSummary> closed_form_box;  // keyed by noise
    std::map<std::string, BoxSummary> mc_box;
};

namespace detail {

/// Ratio of sample means with a delta-method standard error.
inline std::pair<double, double> ratio_of_means(const std::vector<double> &num, const std::vector<double> &den) {
    auto moments = [](const std::vector<double> &v) {
        double m = 0;
        for (double x : v) {
            m += x;
        }
        m /= static_cast<double>(v.size());
        double var = 0;
        for (double x : v) {
            var += (x - m) * (x - m);
        }
        var /= std::max<double>(1, static_cast<double>(v.size()) - 1);
        return std::pair<double, double>{m, var / static_cast<double>(v.size())};
    };
    auto [mn, vn] = moments(num);
    auto [md, vd] = moments(den);
    if (md == 0) {
        return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    }
    const double r = mn / md;
    return {r, std::abs(r) * std::sqrt(vn / (mn * mn + 1e-300) + vd / (md * md))};
}

}  // namespace detail

/// Per instance and noise level: simulate, compute the closed-form ratio
/// when mu = 0, and a Monte Carlo ratio of rounded to measured mean costs.
inline RatioExperimentResult run_ratio_experiment(const ExperimentConfig &config) {
    const auto instances = config.load_instances();
    const QaoaSpec qaoa = config.qaoa_for_depth(config.qaoa.p);
    RatioExperimentResult result;
    std::map<std::string, std::vector<double>> closed, mc;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        const auto &instance = instances[k];
        for (std::size_t a = 0; a < config.noise.size(); ++a) {
            const NoiseModel &noise = config.noise[a];
            const uint64_t run_seed = derive_seed(config.seed, "ratios", k * 1000003ULL + a);
            SimulationRequest request{config.engine, 0, config.samples_per_trajectory, run_seed};
            const bool density = config.engine == Engine::Density ||
                                 (config.engine == Engine::Auto && instance.n() <= kDensityMaxQubits);
            request.shots = density ? config.shots : config.trajectories;
            const SimulationResult sim = simulate(instance, qaoa, noise, request);

            RatioRow row;
            row.instance = static_cast<int>(k);
            row.noise = noise.to_string();
            row.depth = sim.depth;
            row.circuit_cost = expected_cost_circuit(instance, sim.stats);
            if (sim.stats.mu.cwiseAbs().maxCoeff() <= 1e-9) {
                const RatioReport r = posterior_ratio(instance, sim.stats);
                if (!r.degenerate) {
                    row.closed_form_ratio = r.ratio;
                }
                row.sigma_edge_mean = r.sigma_mean;
            } else {
                row.sigma_edge_mean = detail::edge_summary(instance, sim.stats).sigma_mean;
            }
            SampleBatch rounded = sample_rounded(sim.stats, config.shots, derive_seed(run_seed, "round"),
                                                 config.gaussian_model);
            rounded.fill_costs(instance);
            std::tie(row.mc_ratio, row.mc_se) = detail::ratio_of_means(rounded.costs, sim.samples.costs);
            if (noise.kind == NoiseKind::Depolarizing && instance.kind() == ProblemKind::MaxCut) {
                const AprioriBound b =
                    apriori_maxcut_bound(noise.strength, sim.depth, instance.max_degree(), instance.is_regular());
                if (b.applicable) {
                    row.apriori_bound = b.bound;
                }
            }
            if (row.closed_form_ratio) {
                closed[row.noise].push_back(*row.closed_form_ratio);
            }
            mc[row.noise].push_back(row.mc_ratio);
            result.rows.push_back(row);
        }
    }
    for (const auto &[noise, values] : closed) {
        result.closed_form_box[noise] = box_summary(values);
    }
    for (const auto &[noise, values] : mc) {
        result.mc_box[noise] = box_summary(values);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Distribution experiment
// ---------------------------------------------------------------------------

struct SourceSummary {
    std::string name;
    std::vector<double> costs;  // sorted ascending
    double mean = 0;
    std::vector<double> cvar;   // one per configured alpha
    std::vector<double> cdf;    // on the report grid
    double tv_to_circuit = 0;
};

struct DistributionReport {
    int n = 0;
    std::string noise;
    int depth = 0;
    double bin_width = 0;
    std::vector<double> cvar_alphas;
    std::vector<double> grid;
    std::vector<SourceSummary> sources;  // circuit, rounded_noisy, rounded_noiseless, uniform

    const SourceSummary &source(const std::string &name) const {
        for (const auto &s : sources) {
            if (s.name == name) {
                return s;
            }
        }
        throw ArgumentError("no source named '" + name + "'");
    }
};

/// Cost distributions of the noisy circuit (trajectory samples), rounding of
/// the noisy moments, rounding of the exact noiseless moments, and uniform
/// assignments, for the first configured instance and noise model.
inline DistributionReport run_distribution_experiment(const ExperimentConfig &config) {
    const auto instances = config.load_instances();
    const ProblemInstance &instance = instances.front();
    const NoiseModel &noise = config.noise.front();
    const QaoaSpec qaoa = config.qaoa_for_depth(config.qaoa.p);
    const CircuitDescription circuit = build_qaoa_circuit(instance, qaoa);

    DistributionReport report;
    report.n = instance.n();
    report.noise = noise.to_string();
    report.depth = circuit.depth();
    report.cvar_alphas = config.cvar_alphas;

    TrajectoryResult noisy = evolve_trajectories(circuit, noise, config.trajectories,
                                                 derive_seed(config.seed, "distribution/circuit"),
                                                 config.samples_per_trajectory);
    noisy.samples.fill_costs(instance);
    SampleBatch rounded_noisy = sample_rounded(noisy.stats, config.shots,
                                               derive_seed(config.seed, "distribution/rounded_noisy"),
                                               config.gaussian_model);
    rounded_noisy.fill_costs(instance);
    const CorrelationStats ideal = extract_stats(evolve_statevector(circuit));
    SampleBatch rounded_ideal = sample_rounded(ideal, config.shots,
                                               derive_seed(config.seed, "distribution/rounded_noiseless"),
                                               config.gaussian_model);
    rounded_ideal.fill_costs(instance);
    SampleBatch uniform = sample_uniform(instance.n(), config.shots, derive_seed(config.seed, "distribution/uniform"));
    uniform.fill_costs(instance);

    const std::vector<std::pair<std::string, const SampleBatch *>> named = {
        {"circuit", &noisy.samples},
        {"rounded_noisy", &rounded_noisy},
        {"rounded_noiseless", &rounded_ideal},
        {"uniform", &uniform},
    };
    std::vector<std::vector<double>> all_costs;
    for (const auto &[name, batch] : named) {
        all_costs.push_back(batch->costs);
    }
    report.grid = unique_sorted(all_costs);
    report.bin_width = config.bin_width > 0 ? config.bin_width : min_positive_gap(report.grid);
    if (!(report.bin_width > 0)) {
        report.bin_width = 1;
    }
    const double origin = report.grid.front();
    for (std::size_t s = 0; s < named.size(); ++s) {
        SourceSummary summary;
        summary.name = named[s].first;
        summary.costs = all_costs[s];
        std::sort(summary.costs.begin(), summary.costs.end());
        summary.mean = named[s].second->mean_cost();
        for (double alpha : config.cvar_alphas) {
            summary.cvar.push_back(cvar(summary.costs, alpha));
        }
        summary.cdf = ecdf(summary.costs, report.grid);
        summary.tv_to_circuit = tv_distance(all_costs[0], summary.costs, report.bin_width, origin);
        report.sources.push_back(std::move(summary));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Noise sweep
// ---------------------------------------------------------------------------

struct SweepRow {
    int instance = 0;
    NoiseModel noise;
    int qaoa_p = 0;
    int depth = 0;
    double ratio = 0;
    std::string ratio_method;
    double ratio_se = 0;
    double mean_offdiag_sigma = 0;
    double mean_mu = 0;
};

/// Ratio and moment summaries over (instance, QAOA depth, noise model).
/// Rows with mu = 0 use the closed form; biased rows use Monte Carlo rounding
/// against the exact circuit cost.
inline std::vector<SweepRow> run_noise_sweep(const ExperimentConfig &config) {
    const auto instances = config.load_instances();
    std::vector<SweepRow> rows;
    uint64_t index = 0;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        const auto &instance = instances[k];
        for (int p : config.qaoa_depths) {
            const QaoaSpec qaoa = config.qaoa_for_depth(p);
            for (const auto &noise : config.noise) {
                const uint64_t run_seed = derive_seed(config.seed, "sweep", index++);
                SimulationRequest request{config.engine, 0, 1, run_seed};
                const bool density = config.engine == Engine::Density ||
                                     (config.engine == Engine::Auto && instance.n() <= kDensityMaxQubits);
                request.shots = density ? 0 : config.trajectories;
                const SimulationResult sim = simulate(instance, qaoa, noise, request);
                SweepRow row;
                row.instance = static_cast<int>(k);
                row.noise = noise;
                row.qaoa_p = p;
                row.depth = sim.depth;
                row.mean_offdiag_sigma = mean_offdiagonal(sim.stats.sigma);
                row.mean_mu = sim.stats.mu.mean();
                RatioReport r;
                if (sim.stats.mu.cwiseAbs().maxCoeff() <= 1e-9) {
                    r = posterior_ratio(instance, sim.stats);
                } else {
                    r = monte_carlo_ratio(instance, sim.stats, config.shots, derive_seed(run_seed, "round"),
                                          config.gaussian_model);
                }
                row.ratio = r.ratio;
                row.ratio_se = r.ratio_se;
                row.ratio_method = r.method;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json optional_number(const std::optional<double> &v) {
    if (!v || !std::isfinite(*v)) {
        return nullptr;
    }
    return *v;
}

inline nlohmann::ordered_json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json box_json(const BoxSummary &b) {
    return {{"count", b.count}, {"min", b.min}, {"q1", b.q1}, {"median", b.median}, {"q3", b.q3}, {"max", b.max}};
}

}  // namespace detail

inline std::string serialize_ratio_experiment(const RatioExperimentResult &r) {
    nlohmann::ordered_json doc;
    doc["version"] = 1;
    auto rows = nlohmann::ordered_json::array();
    for (const auto &row : r.rows) {
        rows.push_back({{"instance", row.instance},
                        {"noise", row.noise},
                        {"D", row.depth},
                        {"circuit_cost", row.circuit_cost},
                        {"closed_form_ratio", detail::optional_number(row.closed_form_ratio)},
                        {"mc_ratio", detail::number_or_null(row.mc_ratio)},
                        {"mc_se", detail::number_or_null(row.mc_se)},
                        {"apriori_bound", detail::optional_number(row.apriori_bound)},
                        {"sigma_edge_mean", row.sigma_edge_mean}});
    }
    doc["rows"] = rows;
    auto boxes = nlohmann::ordered_json::object();
    for (const auto &[noise, b] : r.closed_form_box) {
        boxes[noise]["closed_form"] = detail::box_json(b);
    }
    for (const auto &[noise, b] : r.mc_box) {
        boxes[noise]["monte_carlo"] = detail::box_json(b);
    }
    doc["box"] = boxes;
    return doc.dump(2) + "\n";
}

inline std::string serialize_distribution_report(const DistributionReport &r) {
    nlohmann::ordered_json doc;
    doc["version"] = 1;
    doc["n"] = r.n;
    doc["noise"] = r.noise;
    doc["D"] = r.depth;
    doc["bin_width"] = r.bin_width;
    doc["cvar_alphas"] = r.cvar_alphas;
    doc["grid"] = r.grid;
    auto sources = nlohmann::ordered_json::array();
    for (const auto &s : r.sources) {
        sources.push_back({{"name", s.name},
                           {"count", s.costs.size()},
                           {"mean", s.mean},
                           {"cvar", s.cvar},
                           {"tv_to_circuit", s.tv_to_circuit},
                           {"cdf", s.cdf}});
    }
    doc["sources"] = sources;
    return doc.dump(2) + "\n";
}

inline std::string serialize_sweep_csv(const std::vector<SweepRow> &rows) {
    std::string out = "instance,kind,strength,qaoa_p,D,ratio,ratio_method,ratio_se,mean_offdiag_sigma,mean_mu\n";
    for (const auto &r : rows) {
        const char *kind = r.noise.kind == NoiseKind::None              ? "none"
                           : r.noise.kind == NoiseKind::Depolarizing    ? "dp"
                                                                        : "ad";
        out += std::to_string(r.instance) + ',' + kind + ',' + format_double(r.noise.strength) + ',' +
               std::to_string(r.qaoa_p) + ',' + std::to_string(r.depth) + ',' +
               (std::isfinite(r.ratio) ? format_double(r.ratio) : std::string()) + ',' + r.ratio_method + ',' +
               (std::isfinite(r.ratio_se) ? format_double(r.ratio_se) : std::string()) + ',' +
               format_double(r.mean_offdiag_sigma) + ',' + format_double(r.mean_mu) + '\n';
    }
    return out;
}

}  // namespace qrr
