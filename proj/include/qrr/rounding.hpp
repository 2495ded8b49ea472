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
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qrr/correlation.hpp"
#include "qrr/error.hpp"
#include "qrr/parallel.hpp"
#include "qrr/problem.hpp"
#include "qrr/samples.hpp"

namespace qrr {

/// P(Y1 >= 0, Y2 >= 0) for a standard bivariate normal with correlation rho.
inline double quadrant_probability(double rho) {
    if (!(std::abs(rho) <= 1 + 1e-12)) {
        throw ArgumentError("quadrant_probability: |rho| > 1 (rho = " + std::to_string(rho) + ")");
    }
    rho = std::clamp(rho, -1.0, 1.0);
    return 0.25 + std::asin(rho) / (2 * std::numbers::pi);
}

/// Which Gaussian the rounding samples from when mu != 0.
///   Centered:     N(mu, sigma - mu mu^T)
///   SecondMoment: N(0, sigma), sigma used as-is
/// Both coincide when mu = 0.
enum class GaussianModel { Centered, SecondMoment };

inline const char *to_string(GaussianModel m) {
    return m == GaussianModel::Centered ? "centered" : "second_moment";
}

inline GaussianModel gaussian_model_from_string(const std::string &s) {
    if (s == "centered") {
        return GaussianModel::Centered;
    }
    if (s == "second_moment") {
        return GaussianModel::SecondMoment;
    }
    throw ArgumentError("unknown gaussian model '" + s + "' (expected centered or second_moment)");
}

namespace detail {

inline Eigen::MatrixXd psd_or_projected(const Eigen::MatrixXd &m) {
    const Eigen::MatrixXd sym = symmetrized(m);
    if (sym.rows() == 0) {
        return sym;
    }
    const double top = std::max(sym.cwiseAbs().maxCoeff(), 1e-300);
    if (min_eigenvalue(sym) < -kPsdRelativeTolerance * top) {
        return project_psd(sym);
    }
    return sym;
}

inline double clamp_correlation(double s) {
    if (!(std::abs(s) <= 1 + 1e-9)) {
        throw ArgumentError("correlation entry " + std::to_string(s) + " lies outside [-1, 1]");
    }
    return std::clamp(s, -1.0, 1.0);
}

inline void check_dimension(const ProblemInstance &instance, const CorrelationStats &stats) {
    stats.check_shape();
    if (stats.n() != instance.n()) {
        throw ArgumentError("stats dimension " + std::to_string(stats.n()) + " does not match instance n=" +
                            std::to_string(instance.n()));
    }
}

}  // namespace detail

/// Sign rounding of Gaussian samples: z_i = +1 if y_i >= 0 else -1.
inline SampleBatch sample_rounded(const CorrelationStats &stats, long shots, uint64_t seed,
                                  GaussianModel model = GaussianModel::Centered) {
    stats.check_shape();
    if (shots < 1) {
        throw ArgumentError("sample_rounded: shots must be >= 1");
    }
    const int n = stats.n();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd cov;
    if (model == GaussianModel::Centered) {
        mean = stats.mu;
        cov = centered_covariance(stats);
    } else {
        cov = detail::psd_or_projected(stats.sigma);
    }
    GaussianSampler sampler(mean, cov);
    SampleBatch batch(n, static_cast<std::size_t>(shots), Provenance::RandomizedRounding);
    parallel_blocks(static_cast<std::size_t>(shots), kSampleBlock, [&](std::size_t b, std::size_t begin, std::size_t end) {
        Rng rng = make_rng(seed, "gaussian", b);
        std::vector<double> y(n);
        for (std::size_t k = begin; k < end; ++k) {
            sampler.draw(rng, y);
            auto row = batch.row(k);
            for (int i = 0; i < n; ++i) {
                row[i] = y[i] >= 0 ? Spin{1} : Spin{-1};
            }
        }
    });
    return batch;
}

/// Expected cost of computational-basis measurements with second moments sigma.
inline double expected_cost_circuit(const ProblemInstance &instance, const CorrelationStats &stats) {
    detail::check_dimension(instance, stats);
    double total = 0;
    for (const auto &e : instance.edges()) {
        const double s = stats.sigma(e.i, e.j);
        total += instance.kind() == ProblemKind::MaxCut ? 0.5 * e.w * (1 - s) : 2 * e.w * s;
    }
    return total + instance.diagonal_sum();
}

/// Closed-form expected cost of sign-rounded samples; requires mu = 0.
inline double expected_cost_rounded(const ProblemInstance &instance, const CorrelationStats &stats) {
    detail::check_dimension(instance, stats);
    if (stats.mu.size() > 0 && stats.mu.cwiseAbs().maxCoeff() > 1e-9) {
        throw LimitError("closed-form rounded cost needs mu = 0; use a Monte Carlo estimate for biased states");
    }
    const double inv_pi = 1 / std::numbers::pi;
    double total = 0;
    for (const auto &e : instance.edges()) {
        const double s = detail::clamp_correlation(stats.sigma(e.i, e.j));
        total += instance.kind() == ProblemKind::MaxCut ? inv_pi * e.w * std::acos(s)
                                                        : 2 * inv_pi * 2 * e.w * std::asin(s);
    }
    return total + instance.diagonal_sum();
}

struct EdgeContribution {
    int i;
    int j;
    double w;
    double sigma;
    double circuit;
    double rounded;
};

struct RatioReport {
    ProblemKind kind = ProblemKind::MaxCut;
    std::string method = "closed_form";  // or "monte_carlo"
    double circuit_cost = 0;
    double rounded_cost = 0;
    double ratio = 0;
    double ratio_se = 0;  // zero for closed form
    bool degenerate = false;
    long shots = 0;
    std::vector<EdgeContribution> edges;
    double sigma_min = 0;
    double sigma_max = 0;
    double sigma_mean = 0;
};

namespace detail {

inline RatioReport edge_summary(const ProblemInstance &instance, const CorrelationStats &stats) {
    RatioReport r;
    r.kind = instance.kind();
    const double inv_pi = 1 / std::numbers::pi;
    double sum = 0;
    r.sigma_min = 1;
    r.sigma_max = -1;
    for (const auto &e : instance.edges()) {
        const double s = stats.sigma(e.i, e.j);
        const double c = clamp_correlation(s);
        EdgeContribution ec{e.i, e.j, e.w, s, 0, 0};
        if (instance.kind() == ProblemKind::MaxCut) {
            ec.circuit = 0.5 * e.w * (1 - s);
            ec.rounded = inv_pi * e.w * std::acos(c);
        } else {
            ec.circuit = 2 * e.w * s;
            ec.rounded = 2 * inv_pi * 2 * e.w * std::asin(c);
        }
        r.edges.push_back(ec);
        sum += s;
        r.sigma_min = std::min(r.sigma_min, s);
        r.sigma_max = std::max(r.sigma_max, s);
    }
    if (instance.edges().empty()) {
        r.sigma_min = r.sigma_max = 0;
    } else {
        r.sigma_mean = sum / static_cast<double>(instance.edges().size());
    }
    return r;
}

inline void finish_ratio(RatioReport &r) {
    const bool bad = r.kind == ProblemKind::MaxCut ? !(r.circuit_cost > 0) : r.circuit_cost == 0;
    if (bad) {
        if (r.kind == ProblemKind::Qubo) {
            throw NumericalError("approximation ratio undefined: circuit cost is zero");
        }
        r.degenerate = true;
        r.ratio = std::numeric_limits<double>::quiet_NaN();
        r.ratio_se = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    r.ratio = r.rounded_cost / r.circuit_cost;
}

}  // namespace detail

/// Ratio of the closed-form rounded cost to the circuit cost (mu = 0 only).
inline RatioReport posterior_ratio(const ProblemInstance &instance, const CorrelationStats &stats) {
    detail::check_dimension(instance, stats);
    RatioReport r = detail::edge_summary(instance, stats);
    r.circuit_cost = expected_cost_circuit(instance, stats);
    r.rounded_cost = expected_cost_rounded(instance, stats);
    detail::finish_ratio(r);
    return r;
}

/// Ratio of the empirical mean cost of `shots` rounded samples to the exact
/// circuit cost implied by `stats`; valid for any mu.
inline RatioReport monte_carlo_ratio(const ProblemInstance &instance, const CorrelationStats &stats, long shots,
                                     uint64_t seed, GaussianModel model = GaussianModel::Centered) {
    detail::check_dimension(instance, stats);
    RatioReport r = detail::edge_summary(instance, stats);
    r.method = "monte_carlo";
    r.shots = shots;
    r.circuit_cost = expected_cost_circuit(instance, stats);
    SampleBatch batch = sample_rounded(stats, shots, seed, model);
    batch.fill_costs(instance);
    const double mean = batch.mean_cost();
    double var = 0;
    for (double c : batch.costs) {
        var += (c - mean) * (c - mean);
    }
    var = shots > 1 ? var / static_cast<double>(shots - 1) : 0.0;
    r.rounded_cost = mean;
    detail::finish_ratio(r);
    if (!r.degenerate) {
        r.ratio_se = std::sqrt(var / static_cast<double>(shots)) / std::abs(r.circuit_cost);
    }
    return r;
}

}  // namespace qrr
