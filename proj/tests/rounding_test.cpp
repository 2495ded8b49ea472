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

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qrr/bounds.hpp"
#include "qrr/rounding.hpp"
#include "qrr/simulator.hpp"
#include "test_util.hpp"

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using qrr::CorrelationStats;
using qrr::GaussianModel;
using qrr::ProblemInstance;
using qrr::ProblemKind;

constexpr double kPi = std::numbers::pi;

ProblemInstance unit_triangle() {
    return ProblemInstance::make(3, ProblemKind::MaxCut, {{0, 1, 1}, {0, 2, 1}, {1, 2, 1}});
}

/// Max-Cut instance on n nodes with random positive weights on a random edge set.
ProblemInstance random_graph(int n, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> w(0.1, 2.0);
    std::vector<qrr::Edge> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng() % 3 != 0) {
                edges.push_back({i, j, w(rng)});
            }
        }
    }
    if (edges.empty()) {
        edges.push_back({0, 1, 1.0});
    }
    return ProblemInstance::make(n, ProblemKind::MaxCut, edges);
}

MatrixXd empirical_second_moments(const qrr::SampleBatch &b) {
    MatrixXd m = MatrixXd::Zero(b.n, b.n);
    for (std::size_t k = 0; k < b.size(); ++k) {
        auto row = b.row(k);
        for (int i = 0; i < b.n; ++i) {
            for (int j = 0; j < b.n; ++j) {
                m(i, j) += row[i] * row[j];
            }
        }
    }
    return m / static_cast<double>(b.size());
}

TEST(QuadrantProbability, exact_values) {
    EXPECT_DOUBLE_EQ(qrr::quadrant_probability(0), 0.25);
    EXPECT_DOUBLE_EQ(qrr::quadrant_probability(1), 0.5);
    EXPECT_NEAR(qrr::quadrant_probability(0.5), 1.0 / 3.0, 1e-15);
    EXPECT_DOUBLE_EQ(qrr::quadrant_probability(-1), 0);
    EXPECT_DOUBLE_EQ(qrr::quadrant_probability(1 + 1e-13), 0.5);
    EXPECT_THROW(qrr::quadrant_probability(1.01), qrr::ArgumentError);
    EXPECT_THROW(qrr::quadrant_probability(NAN), qrr::ArgumentError);
}

TEST(QuadrantProbability, cut_probability_identity) {
    // P(signs differ) = 2 P(Y1 >= 0, Y2 < 0) = 1 - 2 P(Y1 >= 0, Y2 >= 0) = arccos(rho) / pi.
    for (double rho = -1; rho <= 1; rho += 0.01) {
        EXPECT_NEAR(1 - 2 * qrr::quadrant_probability(rho), std::acos(std::clamp(rho, -1.0, 1.0)) / kPi, 1e-14);
        EXPECT_NEAR(std::acos(std::clamp(rho, -1.0, 1.0)), kPi / 2 - std::asin(std::clamp(rho, -1.0, 1.0)), 1e-14);
    }
}

TEST(SampleRounded, independent_signs) {
    const long shots = 1000000;
    auto b = qrr::sample_rounded(CorrelationStats::centered(MatrixXd::Identity(4, 4)), shots, 1);
    EXPECT_EQ(b.provenance, qrr::Provenance::RandomizedRounding);
    MatrixXd m = empirical_second_moments(b);
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            EXPECT_LE(std::abs(m(i, j)), 0.005);
        }
    }
}

TEST(SampleRounded, rank_one_correlation) {
    const long shots = 20000;
    auto b = qrr::sample_rounded(CorrelationStats::centered(MatrixXd::Ones(5, 5)), shots, 2);
    long plus = 0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        auto row = b.row(k);
        for (int i = 1; i < 5; ++i) {
            ASSERT_EQ(row[i], row[0]);
        }
        plus += row[0] > 0;
    }
    EXPECT_NEAR(double(plus) / shots, 0.5, 4 * 0.5 / std::sqrt(double(shots)));
}

TEST(SampleRounded, zero_maps_to_plus_one) {
    auto b = qrr::sample_rounded(CorrelationStats::centered(MatrixXd::Zero(3, 3)), 10, 3, GaussianModel::SecondMoment);
    for (auto s : b.spins) {
        EXPECT_EQ(s, 1);
    }
}

TEST(SampleRounded, grothendieck_identity) {
    std::mt19937_64 rng(4);
    const long shots = 200000;
    for (int t = 0; t < 3; ++t) {
        MatrixXd c = qrr_test::random_correlation(6, rng, 3);
        auto b = qrr::sample_rounded(CorrelationStats::centered(c), shots, 10 + t);
        MatrixXd m = empirical_second_moments(b);
        for (int i = 0; i < 6; ++i) {
            for (int j = i + 1; j < 6; ++j) {
                EXPECT_NEAR(m(i, j), 2 / kPi * std::asin(c(i, j)), 5 / std::sqrt(double(shots)));
            }
        }
    }
}

TEST(SampleRounded, gaussian_models) {
    VectorXd mu(2);
    mu << 0.6, -0.2;
    MatrixXd sigma(2, 2);
    sigma << 1, 0.1, 0.1, 1;
    CorrelationStats s{mu, sigma};
    const long shots = 200000;
    // Centered: y_i ~ N(mu_i, 1 - mu_i^2), so E[z_i] = erf(mu_i / sqrt(2 (1 - mu_i^2))).
    auto centered = qrr::sample_rounded(s, shots, 5, GaussianModel::Centered);
    // Second moment: zero-mean Gaussian, so E[z_i] = 0.
    auto second = qrr::sample_rounded(s, shots, 5, GaussianModel::SecondMoment);
    for (int i = 0; i < 2; ++i) {
        double mc = 0;
        double ms = 0;
        for (std::size_t k = 0; k < centered.size(); ++k) {
            mc += centered.row(k)[i];
            ms += second.row(k)[i];
        }
        const double expected = std::erf(mu(i) / std::sqrt(2 * (1 - mu(i) * mu(i))));
        EXPECT_NEAR(mc / shots, expected, 5 / std::sqrt(double(shots)));
        EXPECT_NEAR(ms / shots, 0.0, 5 / std::sqrt(double(shots)));
    }
    EXPECT_EQ(qrr::gaussian_model_from_string("centered"), GaussianModel::Centered);
    EXPECT_THROW(qrr::gaussian_model_from_string("other"), qrr::ArgumentError);
}

TEST(SampleRounded, deterministic_per_seed) {
    std::mt19937_64 rng(5);
    auto s = CorrelationStats::centered(qrr_test::random_correlation(6, rng));
    EXPECT_EQ(qrr::sample_rounded(s, 3000, 7), qrr::sample_rounded(s, 3000, 7));
    EXPECT_NE(qrr::sample_rounded(s, 3000, 7), qrr::sample_rounded(s, 3000, 8));
}

TEST(ExpectedCostCircuit, examples) {
    auto tri = unit_triangle();
    EXPECT_DOUBLE_EQ(qrr::expected_cost_circuit(tri, CorrelationStats::centered(MatrixXd::Identity(3, 3))), 1.5);
    EXPECT_DOUBLE_EQ(qrr::expected_cost_circuit(tri, CorrelationStats::centered(MatrixXd::Ones(3, 3))), 0);
    EXPECT_THROW(qrr::expected_cost_circuit(tri, CorrelationStats::centered(MatrixXd::Identity(2, 2))),
                 qrr::ArgumentError);
    auto q = ProblemInstance::make(2, ProblemKind::Qubo, {{0, 1, -0.5}}, {1, 2});
    MatrixXd s(2, 2);
    s << 1, 0.4, 0.4, 1;
    EXPECT_DOUBLE_EQ(qrr::expected_cost_circuit(q, CorrelationStats::centered(s)), 2 * -0.5 * 0.4 + 3);
}

TEST(ExpectedCostCircuit, matches_measured_mean) {
    for (auto inst : {qrr::gen_regular(6, 3, 1), qrr::gen_qubo(6, 3, 1)}) {
        auto c = qrr::build_qaoa_circuit(inst, qrr::QaoaSpec::fixed_angles(1));
        auto rho = qrr::evolve_density(c, qrr::NoiseModel::amplitude_damping(0.2));
        auto stats = qrr::extract_stats(rho);
        const long shots = 100000;
        auto batch = qrr::measure(rho, shots, 3);
        batch.fill_costs(inst);
        double mean = batch.mean_cost();
        double var = 0;
        for (double x : batch.costs) {
            var += (x - mean) * (x - mean);
        }
        const double se = std::sqrt(var / (shots - 1) / shots);
        EXPECT_NEAR(mean, qrr::expected_cost_circuit(inst, stats), 5 * se);
    }
}

TEST(ExpectedCostRounded, examples) {
    auto tri = unit_triangle();
    EXPECT_DOUBLE_EQ(qrr::expected_cost_rounded(tri, CorrelationStats::centered(MatrixXd::Identity(3, 3))), 1.5);
    // Bipartite 4-cycle with anti-correlated neighbours: every edge cut.
    auto cycle = ProblemInstance::make(4, ProblemKind::MaxCut, {{0, 1, 1}, {1, 2, 2}, {2, 3, 1}, {0, 3, 3}});
    VectorXd v(4);
    v << 1, -1, 1, -1;
    auto s = CorrelationStats::centered(v * v.transpose());
    EXPECT_NEAR(qrr::expected_cost_rounded(cycle, s), 7, 1e-12);
    EXPECT_NEAR(qrr::posterior_ratio(cycle, s).ratio, 1, 1e-12);

    CorrelationStats biased{VectorXd::Constant(3, 0.1), MatrixXd::Identity(3, 3)};
    EXPECT_THROW(qrr::expected_cost_rounded(tri, biased), qrr::LimitError);
    EXPECT_THROW(qrr::expected_cost_rounded(tri, CorrelationStats::centered(MatrixXd::Constant(3, 3, 1.5))),
                 qrr::ArgumentError);
}

TEST(PosteriorRatio, reference_points) {
    auto tri = unit_triangle();
    auto id = qrr::posterior_ratio(tri, CorrelationStats::centered(MatrixXd::Identity(3, 3)));
    EXPECT_DOUBLE_EQ(id.ratio, 1.0);
    EXPECT_EQ(id.edges.size(), 3u);
    EXPECT_EQ(id.method, "closed_form");

    // Every edge at the critical correlation: ratio is the worst case.
    auto g = qrr::gen_regular(8, 3, 2);
    MatrixXd s = MatrixXd::Identity(8, 8);
    for (const auto &e : g.edges()) {
        s(e.i, e.j) = s(e.j, e.i) = -0.689;
    }
    auto r = qrr::posterior_ratio(g, CorrelationStats::centered(s));
    EXPECT_NEAR(r.ratio, 0.87856, 5e-5);
    EXPECT_DOUBLE_EQ(r.sigma_min, -0.689);
    EXPECT_DOUBLE_EQ(r.sigma_mean, -0.689);

    auto degenerate = qrr::posterior_ratio(tri, CorrelationStats::centered(MatrixXd::Ones(3, 3)));
    EXPECT_TRUE(degenerate.degenerate);
    EXPECT_TRUE(std::isnan(degenerate.ratio));

    auto q = ProblemInstance::make(2, ProblemKind::Qubo, {{0, 1, 1}});
    EXPECT_THROW(qrr::posterior_ratio(q, CorrelationStats::centered(MatrixXd::Identity(2, 2))), qrr::NumericalError);
}

TEST(PosteriorRatio, goemans_williamson_guarantee) {
    std::mt19937_64 rng(6);
    const double floor = qrr::gw_constants().alpha_gw - 1e-9;
    for (int t = 0; t < 200; ++t) {
        const int n = 3 + t % 8;
        auto g = random_graph(n, rng);
        auto s = CorrelationStats::centered(qrr_test::random_correlation(n, rng, 1 + t % n));
        auto r = qrr::posterior_ratio(g, s);
        if (!r.degenerate) {
            EXPECT_GE(r.ratio, floor);
        }
    }
}

TEST(PosteriorRatio, nesterov_guarantee_for_psd_qubo) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
        auto q = qrr::gen_qubo(8, 3, t);
        auto s = CorrelationStats::centered(qrr_test::random_correlation(8, rng, 1 + t % 8));
        EXPECT_GE(qrr::posterior_ratio(q, s).ratio, 2 / kPi - 1e-9);
    }
}

TEST(PosteriorRatio, scale_invariance) {
    std::mt19937_64 rng(8);
    auto g = random_graph(7, rng);
    auto s = CorrelationStats::centered(qrr_test::random_correlation(7, rng));
    const double base = qrr::posterior_ratio(g, s).ratio;
    for (double lambda : {0.25, 4.0, 1024.0}) {
        std::vector<qrr::Edge> edges = g.edges();
        for (auto &e : edges) {
            e.w *= lambda;
        }
        auto scaled = ProblemInstance::make(7, ProblemKind::MaxCut, edges);
        EXPECT_EQ(qrr::posterior_ratio(scaled, s).ratio, base);
    }
}

TEST(MonteCarloRatio, converges_to_closed_form) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 3; ++t) {
        auto g = qrr::gen_regular(8, 3, t);
        auto s = CorrelationStats::centered(qrr_test::random_correlation(8, rng, 3));
        auto exact = qrr::posterior_ratio(g, s);
        auto mc = qrr::monte_carlo_ratio(g, s, 100000, 20 + t);
        EXPECT_EQ(mc.method, "monte_carlo");
        EXPECT_NEAR(mc.ratio, exact.ratio, 5 * mc.ratio_se);
        EXPECT_NEAR(mc.circuit_cost, exact.circuit_cost, 1e-12);
    }
}

TEST(MonteCarloRatio, noiseless_qaoa_matches_closed_form) {
    auto g = qrr::gen_regular(8, 3, 4);
    auto c = qrr::build_qaoa_circuit(g, qrr::QaoaSpec::fixed_angles(2));
    auto stats = qrr::extract_stats(qrr::evolve_statevector(c));
    auto exact = qrr::posterior_ratio(g, stats);
    EXPECT_GE(exact.ratio, qrr::gw_constants().alpha_gw);
    auto mc = qrr::monte_carlo_ratio(g, stats, 100000, 3);
    EXPECT_NEAR(mc.ratio, exact.ratio, 5 * mc.ratio_se);
}

}  // namespace
