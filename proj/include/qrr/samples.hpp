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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qrr/error.hpp"
#include "qrr/problem.hpp"

namespace qrr {

enum class Provenance { CircuitMeasurement, RandomizedRounding, Uniform };

inline const char *to_string(Provenance p) {
    switch (p) {
        case Provenance::CircuitMeasurement:
            return "circuit_measurement";
        case Provenance::RandomizedRounding:
            return "randomized_rounding";
        case Provenance::Uniform:
            return "uniform";
    }
    return "unknown";
}

/// Row-major batch of sign vectors, with costs filled on demand.
struct SampleBatch {
    int n = 0;
    Provenance provenance = Provenance::CircuitMeasurement;
    std::vector<Spin> spins;    // size() * n entries
    std::vector<double> costs;  // empty or one per sample

    SampleBatch() = default;
    SampleBatch(int n_, std::size_t count, Provenance p) : n(n_), provenance(p), spins(count * n_, 1) {
    }

    bool operator==(const SampleBatch &) const = default;

    std::size_t size() const {
        return n == 0 ? 0 : spins.size() / n;
    }

    std::span<const Spin> row(std::size_t k) const {
        return {spins.data() + k * n, static_cast<std::size_t>(n)};
    }

    std::span<Spin> row(std::size_t k) {
        return {spins.data() + k * n, static_cast<std::size_t>(n)};
    }

    void fill_costs(const ProblemInstance &instance) {
        if (instance.n() != n) {
            throw ArgumentError("sample width " + std::to_string(n) + " does not match instance n=" +
                                std::to_string(instance.n()));
        }
        costs.resize(size());
        for (std::size_t k = 0; k < size(); ++k) {
            costs[k] = cost(instance, row(k));
        }
    }

    double mean_cost() const {
        double s = 0;
        for (double c : costs) {
            s += c;
        }
        return costs.empty() ? 0.0 : s / static_cast<double>(costs.size());
    }
};

}  // namespace qrr
