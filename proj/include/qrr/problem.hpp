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
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qrr/error.hpp"
#include "qrr/parallel.hpp"

namespace qrr {

/// A spin value in {-1, +1}. +1 encodes the computational basis state |0>.
using Spin = int8_t;

enum class ProblemKind { MaxCut, Qubo };

inline const char *to_string(ProblemKind kind) {
    return kind == ProblemKind::MaxCut ? "maxcut" : "qubo";
}

inline ProblemKind problem_kind_from_string(const std::string &s) {
    if (s == "maxcut") {
        return ProblemKind::MaxCut;
    }
    if (s == "qubo") {
        return ProblemKind::Qubo;
    }
    throw ArgumentError("unknown problem kind '" + s + "' (expected maxcut or qubo)");
}

struct Edge {
    int i;
    int j;
    double w;

    bool operator==(const Edge &) const = default;
};

/// Weighted graph plus the problem it encodes.
///
/// Max-Cut: C(z) = 1/2 sum_E w_ij (1 - z_i z_j) with every w_ij > 0.
/// QUBO: C(z) = z^T A z with A symmetric, A_ij = A_ji = w_ij on edges and
/// A_ii = diagonal_i, so each edge contributes 2 w_ij z_i z_j.
class ProblemInstance {
   public:
    /// Validates and builds an instance. Edges must satisfy 0 <= i < j < n
    /// with no duplicates; Max-Cut weights must be strictly positive.
    static ProblemInstance make(
        int n, ProblemKind kind, std::vector<Edge> edges, std::vector<double> diagonal = {}, std::string label = {}) {
        if (n < 1) {
            throw ArgumentError("instance needs at least one node, got n=" + std::to_string(n));
        }
        std::set<std::pair<int, int>> seen;
        for (const auto &e : edges) {
            const std::string where = "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ")";
            if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) {
                throw ArgumentError(where + ": index out of range for n=" + std::to_string(n));
            }
            if (e.i >= e.j) {
                throw ArgumentError(where + ": indices must satisfy i < j");
            }
            if (!std::isfinite(e.w)) {
                throw ArgumentError(where + ": non-finite weight");
            }
            if (kind == ProblemKind::MaxCut && !(e.w > 0)) {
                throw ArgumentError(where + ": Max-Cut weights must be positive");
            }
            if (!seen.insert({e.i, e.j}).second) {
                throw ArgumentError(where + ": duplicate edge");
            }
        }
        if (!diagonal.empty()) {
            if (kind != ProblemKind::Qubo) {
                throw ArgumentError("diagonal terms are only meaningful for QUBO instances");
            }
            if (static_cast<int>(diagonal.size()) != n) {
                throw ArgumentError("diagonal has length " + std::to_string(diagonal.size()) + ", expected " +
                                    std::to_string(n));
            }
            for (double d : diagonal) {
                if (!std::isfinite(d)) {
                    throw ArgumentError("non-finite diagonal entry");
                }
            }
        }
        ProblemInstance out;
        out.n_ = n;
        out.kind_ = kind;
        out.edges_ = std::move(edges);
        out.diagonal_ = std::move(diagonal);
        out.label_ = std::move(label);
        return out;
    }

    int n() const {
        return n_;
    }
    ProblemKind kind() const {
        return kind_;
    }
    const std::vector<Edge> &edges() const {
        return edges_;
    }
    const std::vector<double> &diagonal() const {
        return diagonal_;
    }
    const std::string &label() const {
        return label_;
    }

    std::vector<int> degrees() const {
        std::vector<int> deg(n_, 0);
        for (const auto &e : edges_) {
            ++deg[e.i];
            ++deg[e.j];
        }
        return deg;
    }

    int max_degree() const {
        auto deg = degrees();
        return *std::max_element(deg.begin(), deg.end());
    }

    bool is_regular() const {
        auto deg = degrees();
        return std::all_of(deg.begin(), deg.end(), [&](int d) { return d == deg.front(); });
    }

    double total_weight() const {
        double s = 0;
        for (const auto &e : edges_) {
            s += e.w;
        }
        return s;
    }

    double diagonal_sum() const {
        double s = 0;
        for (double d : diagonal_) {
            s += d;
        }
        return s;
    }

    bool operator==(const ProblemInstance &) const = default;

   private:
    ProblemInstance() = default;

    int n_ = 0;
    ProblemKind kind_ = ProblemKind::MaxCut;
    std::vector<Edge> edges_;
    std::vector<double> diagonal_;
    std::string label_;
};

/// One Z_i Z_j term of the Ising Hamiltonian H = sum_{i<j} J_ij Z_i Z_j,
/// oriented so that minimizing H maximizes the instance cost.
struct Coupling {
    int i;
    int j;
    double J;
};

struct IsingCoefficients {
    int n = 0;
    std::vector<Coupling> couplings;
};

/// Max-Cut: J_ij = w_ij / 2. QUBO: J_ij = -w_ij (diagonal terms are constant).
inline IsingCoefficients ising_coefficients(const ProblemInstance &instance) {
    IsingCoefficients out;
    out.n = instance.n();
    for (const auto &e : instance.edges()) {
        double J = instance.kind() == ProblemKind::MaxCut ? 0.5 * e.w : -e.w;
        out.couplings.push_back({e.i, e.j, J});
    }
    return out;
}

inline double cost(const ProblemInstance &instance, std::span<const Spin> z) {
    if (static_cast<int>(z.size()) != instance.n()) {
        throw ArgumentError("assignment has length " + std::to_string(z.size()) + ", instance has n=" +
                            std::to_string(instance.n()));
    }
    double total = 0;
    if (instance.kind() == ProblemKind::MaxCut) {
        for (const auto &e : instance.edges()) {
            total += 0.5 * e.w * (1 - z[e.i] * z[e.j]);
        }
    } else {
        for (const auto &e : instance.edges()) {
            total += 2 * e.w * z[e.i] * z[e.j];
        }
        total += instance.diagonal_sum();
    }
    return total;
}

/// Matrix M with cost(z) = z^T M z. For Max-Cut this is the scaled weighted
/// Laplacian (off-diagonal -w/4, diagonal sum_k w_ik / 4); for QUBO it is A.
inline Eigen::MatrixXd cost_matrix(const ProblemInstance &instance) {
    const int n = instance.n();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    if (instance.kind() == ProblemKind::MaxCut) {
        for (const auto &e : instance.edges()) {
            m(e.i, e.j) -= 0.25 * e.w;
            m(e.j, e.i) -= 0.25 * e.w;
            m(e.i, e.i) += 0.25 * e.w;
            m(e.j, e.j) += 0.25 * e.w;
        }
    } else {
        for (const auto &e : instance.edges()) {
            m(e.i, e.j) = e.w;
            m(e.j, e.i) = e.w;
        }
        for (int i = 0; i < static_cast<int>(instance.diagonal().size()); ++i) {
            m(i, i) = instance.diagonal()[i];
        }
    }
    return m;
}

struct BruteForceResult {
    double best_cost;
    std::vector<Spin> argmax;
};

inline constexpr int kBruteForceMaxNodes = 24;

/// Exhaustive maximum of `cost`. Assignments are visited in lexicographic
/// order (-1 before +1, node 0 most significant) and the first maximizer is
/// kept, so ties resolve to the lexicographically smallest vector.
inline BruteForceResult brute_force_optimum(const ProblemInstance &instance) {
    const int n = instance.n();
    if (n > kBruteForceMaxNodes) {
        throw LimitError("brute force supports n <= " + std::to_string(kBruteForceMaxNodes) + ", got n=" +
                         std::to_string(n));
    }
    const uint64_t total = uint64_t{1} << n;
    auto spin_of = [n](uint64_t k, int i) -> int { return ((k >> (n - 1 - i)) & 1) ? 1 : -1; };
    const double diag = instance.diagonal_sum();
    const bool maxcut = instance.kind() == ProblemKind::MaxCut;
    const auto &edges = instance.edges();

    constexpr std::size_t kBlock = std::size_t{1} << 14;
    const std::size_t num_blocks = (total + kBlock - 1) / kBlock;
    std::vector<double> block_best(num_blocks);
    std::vector<uint64_t> block_arg(num_blocks);
    parallel_blocks(total, kBlock, [&](std::size_t b, std::size_t begin, std::size_t end) {
        double best = -INFINITY;
        uint64_t arg = begin;
        for (uint64_t k = begin; k < end; ++k) {
            double c = 0;
            if (maxcut) {
                for (const auto &e : edges) {
                    c += 0.5 * e.w * (1 - spin_of(k, e.i) * spin_of(k, e.j));
                }
            } else {
                for (const auto &e : edges) {
                    c += 2 * e.w * spin_of(k, e.i) * spin_of(k, e.j);
                }
                c += diag;
            }
            if (c > best) {
                best = c;
                arg = k;
            }
        }
        block_best[b] = best;
        block_arg[b] = arg;
    });
    std::size_t winner = 0;
    for (std::size_t b = 1; b < num_blocks; ++b) {
        if (block_best[b] > block_best[winner]) {
            winner = b;
        }
    }
    BruteForceResult out{block_best[winner], std::vector<Spin>(n)};
    for (int i = 0; i < n; ++i) {
        out.argmax[i] = static_cast<Spin>(spin_of(block_arg[winner], i));
    }
    return out;
}

/// Uniform-weight d-regular simple graph from the pairing model, rejecting
/// pairings with loops or repeated edges. Edges are returned sorted.
inline ProblemInstance gen_regular(int n, int d, uint64_t seed, int max_attempts = 10000) {
    if (n < 1 || d < 0) {
        throw ArgumentError("gen_regular needs n >= 1 and d >= 0");
    }
    if (d >= n) {
        throw ArgumentError("degree " + std::to_string(d) + " must be smaller than node count " + std::to_string(n));
    }
    if ((static_cast<long>(n) * d) % 2 != 0) {
        throw ArgumentError("no " + std::to_string(d) + "-regular graph on " + std::to_string(n) +
                            " nodes: n*d must be even");
    }
    Rng rng = make_rng(seed, "gen_regular");
    std::vector<int> points(static_cast<std::size_t>(n) * d);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        for (std::size_t k = 0; k < points.size(); ++k) {
            points[k] = static_cast<int>(k) / d;
        }
        std::shuffle(points.begin(), points.end(), rng);
        std::set<std::pair<int, int>> pairs;
        bool ok = true;
        for (std::size_t k = 0; k + 1 < points.size(); k += 2) {
            int a = std::min(points[k], points[k + 1]);
            int b = std::max(points[k], points[k + 1]);
            if (a == b || !pairs.insert({a, b}).second) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            continue;
        }
        std::vector<Edge> edges;
        edges.reserve(pairs.size());
        for (const auto &[a, b] : pairs) {
            edges.push_back({a, b, 1.0});
        }
        return ProblemInstance::make(n, ProblemKind::MaxCut, std::move(edges));
    }
    throw LimitError("gen_regular: rejection limit of " + std::to_string(max_attempts) + " attempts exceeded");
}

/// QUBO on a random d-regular graph: couplings uniform in [-1, 1] and a
/// diagonal equal to each row's absolute coupling sum, which makes A
/// diagonally dominant and therefore positive semidefinite.
inline ProblemInstance gen_qubo(int n, int d, uint64_t seed) {
    auto graph = gen_regular(n, d, seed);
    Rng rng = make_rng(seed, "gen_qubo");
    std::uniform_real_distribution<double> coupling(-1.0, 1.0);
    std::vector<Edge> edges = graph.edges();
    std::vector<double> diagonal(n, 0.0);
    for (auto &e : edges) {
        e.w = coupling(rng);
        diagonal[e.i] += std::abs(e.w);
        diagonal[e.j] += std::abs(e.w);
    }
    return ProblemInstance::make(n, ProblemKind::Qubo, std::move(edges), std::move(diagonal));
}

}  // namespace qrr
