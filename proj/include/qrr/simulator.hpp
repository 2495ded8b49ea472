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
#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qrr/correlation.hpp"
#include "qrr/error.hpp"
#include "qrr/parallel.hpp"
#include "qrr/problem.hpp"
#include "qrr/samples.hpp"

namespace qrr {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Circuit description
// ---------------------------------------------------------------------------

/// Where noise channels are inserted. PerGateLayer follows every
/// edge-colored layer; PerMacroLayer follows each complete QAOA round only.
enum class NoiseLayering { PerGateLayer, PerMacroLayer };

inline const char *to_string(NoiseLayering l) {
    return l == NoiseLayering::PerGateLayer ? "gate" : "macro";
}

inline NoiseLayering noise_layering_from_string(const std::string &s) {
    if (s == "gate" || s == "per_gate_layer") {
        return NoiseLayering::PerGateLayer;
    }
    if (s == "macro" || s == "per_macro_layer") {
        return NoiseLayering::PerMacroLayer;
    }
    throw ArgumentError("unknown noise layering '" + s + "' (expected gate or macro)");
}

struct QaoaSpec {
    int p = 1;
    std::vector<double> betas;
    std::vector<double> gammas;
    NoiseLayering layering = NoiseLayering::PerGateLayer;

    void check() const {
        if (p < 0) {
            throw ArgumentError("QAOA depth must be non-negative");
        }
        if (static_cast<int>(betas.size()) != p || static_cast<int>(gammas.size()) != p) {
            throw ArgumentError("QAOA depth " + std::to_string(p) + " needs " + std::to_string(p) +
                                " betas and gammas, got " + std::to_string(betas.size()) + " and " +
                                std::to_string(gammas.size()));
        }
    }

    /// Fixed angles for 3-regular Max-Cut (tabulated optima, p <= 4).
    static QaoaSpec fixed_angles(int p, NoiseLayering layering = NoiseLayering::PerGateLayer) {
        static const std::vector<std::vector<double>> kGammas = {
            {},
            {0.616},
            {0.488, 0.898},
            {0.422, 0.798, 0.937},
            {0.409, 0.781, 0.988, 1.156},
        };
        static const std::vector<std::vector<double>> kBetas = {
            {},
            {0.393},
            {0.555, 0.293},
            {0.609, 0.459, 0.235},
            {0.600, 0.434, 0.297, 0.159},
        };
        if (p < 0 || p >= static_cast<int>(kGammas.size())) {
            throw ArgumentError("no fixed-angle table entry for QAOA depth " + std::to_string(p) +
                                "; pass --betas/--gammas explicitly");
        }
        return QaoaSpec{p, kBetas[p], kGammas[p], layering};
    }
};

enum class NoiseKind { None, Depolarizing, AmplitudeDamping };

struct NoiseModel {
    NoiseKind kind = NoiseKind::None;
    double strength = 0;

    static NoiseModel make(NoiseKind kind, double strength) {
        if (!(strength >= 0 && strength <= 1)) {
            throw ArgumentError("noise strength must lie in [0, 1], got " + std::to_string(strength));
        }
        return {kind, kind == NoiseKind::None ? 0.0 : strength};
    }

    static NoiseModel none() {
        return {};
    }
    static NoiseModel depolarizing(double p) {
        return make(NoiseKind::Depolarizing, p);
    }
    static NoiseModel amplitude_damping(double p) {
        return make(NoiseKind::AmplitudeDamping, p);
    }

    /// Parses `kind:strength` with kind in {none, dp, ad}; bare `none` is accepted.
    static NoiseModel parse(const std::string &text) {
        auto colon = text.find(':');
        std::string kind = text.substr(0, colon);
        if (kind == "none") {
            return none();
        }
        if (colon == std::string::npos) {
            throw ArgumentError("noise '" + text + "' must have the form kind:strength");
        }
        char *end = nullptr;
        const std::string value = text.substr(colon + 1);
        double p = std::strtod(value.c_str(), &end);
        if (value.empty() || *end != '\0') {
            throw ArgumentError("noise '" + text + "': strength is not a number");
        }
        if (kind == "dp") {
            return depolarizing(p);
        }
        if (kind == "ad") {
            return amplitude_damping(p);
        }
        throw ArgumentError("unknown noise kind '" + kind + "' (expected none, dp or ad)");
    }

    std::string to_string() const {
        if (kind == NoiseKind::None) {
            return "none";
        }
        char buf[40];
        const auto res = std::to_chars(buf, buf + sizeof(buf), strength);
        return (kind == NoiseKind::Depolarizing ? "dp:" : "ad:") + std::string(buf, res.ptr);
    }

    bool is_identity() const {
        return kind == NoiseKind::None || strength == 0;
    }
};

enum class GateKind { H, RX, RZZ };

/// RX(theta) = exp(-i theta X / 2); RZZ(theta) = exp(-i theta Z_a Z_b / 2).
struct Gate {
    GateKind kind;
    int q0;
    int q1 = -1;
    double theta = 0;
};

struct Layer {
    std::vector<Gate> gates;
    bool noisy_after = true;
};

struct CircuitDescription {
    int n = 0;
    std::vector<Layer> layers;

    /// Number of noise insertions, the D every bound consumes.
    int depth() const {
        return static_cast<int>(std::count_if(layers.begin(), layers.end(), [](const Layer &l) {
            return l.noisy_after;
        }));
    }

    void check() const {
        for (std::size_t li = 0; li < layers.size(); ++li) {
            std::vector<bool> used(n, false);
            for (const auto &g : layers[li].gates) {
                for (int q : {g.q0, g.q1}) {
                    if (q == -1 && g.kind != GateKind::RZZ) {
                        continue;
                    }
                    if (q < 0 || q >= n) {
                        throw ArgumentError("layer " + std::to_string(li) + ": qubit index out of range");
                    }
                    if (used[q]) {
                        throw ArgumentError("layer " + std::to_string(li) + ": gates overlap on qubit " +
                                            std::to_string(q));
                    }
                    used[q] = true;
                }
            }
        }
    }
};

/// QAOA for the instance's Ising form H = sum J_ij Z_i Z_j:
///   |+>^n, then per round e^{-i gamma H} as edge-colored RZZ(2 gamma J_ij)
///   layers followed by e^{-i beta H_X}, H_X = -sum X, as RX(-2 beta).
/// Edges are greedily colored in instance order.
inline CircuitDescription build_qaoa_circuit(const ProblemInstance &instance, const QaoaSpec &spec) {
    spec.check();
    const int n = instance.n();
    CircuitDescription circuit;
    circuit.n = n;
    const bool macro = spec.layering == NoiseLayering::PerMacroLayer;

    Layer hadamards;
    for (int q = 0; q < n; ++q) {
        hadamards.gates.push_back({GateKind::H, q});
    }
    hadamards.noisy_after = !macro;
    circuit.layers.push_back(std::move(hadamards));

    const auto ising = ising_coefficients(instance);
    std::vector<int> color(ising.couplings.size(), -1);
    int num_colors = 0;
    {
        std::vector<std::vector<bool>> busy(n);
        for (std::size_t e = 0; e < ising.couplings.size(); ++e) {
            const auto &c = ising.couplings[e];
            int k = 0;
            while (true) {
                bool free_i = k >= static_cast<int>(busy[c.i].size()) || !busy[c.i][k];
                bool free_j = k >= static_cast<int>(busy[c.j].size()) || !busy[c.j][k];
                if (free_i && free_j) {
                    break;
                }
                ++k;
            }
            for (int q : {c.i, c.j}) {
                if (static_cast<int>(busy[q].size()) <= k) {
                    busy[q].resize(k + 1, false);
                }
                busy[q][k] = true;
            }
            color[e] = k;
            num_colors = std::max(num_colors, k + 1);
        }
    }

    for (int round = 0; round < spec.p; ++round) {
        for (int k = 0; k < num_colors; ++k) {
            Layer layer;
            layer.noisy_after = !macro;
            for (std::size_t e = 0; e < ising.couplings.size(); ++e) {
                if (color[e] == k) {
                    const auto &c = ising.couplings[e];
                    layer.gates.push_back({GateKind::RZZ, c.i, c.j, 2 * spec.gammas[round] * c.J});
                }
            }
            circuit.layers.push_back(std::move(layer));
        }
        Layer mixer;
        for (int q = 0; q < n; ++q) {
            mixer.gates.push_back({GateKind::RX, q, -1, -2 * spec.betas[round]});
        }
        mixer.noisy_after = true;
        circuit.layers.push_back(std::move(mixer));
    }
    return circuit;
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

using Mat2 = std::array<cplx, 4>;   // row-major 2x2
using Mat4 = std::array<cplx, 16>;  // row-major 4x4 superoperator

namespace detail {

inline Mat2 gate_matrix(const Gate &g) {
    const double s = 1 / std::numbers::sqrt2;
    switch (g.kind) {
        case GateKind::H:
            return {s, s, s, -s};
        case GateKind::RX: {
            const double c = std::cos(g.theta / 2);
            const double sn = std::sin(g.theta / 2);
            return {c, cplx(0, -sn), cplx(0, -sn), c};
        }
        case GateKind::RZZ:
            break;
    }
    throw ArgumentError("gate has no single-qubit matrix");
}

inline const Mat2 kPauliX = {0, 1, 1, 0};
inline const Mat2 kPauliY = {0, cplx(0, -1), cplx(0, 1), 0};
inline const Mat2 kPauliZ = {1, 0, 0, -1};

/// Applies m to bit `bit` of a vector indexed by `nbits`-bit integers.
inline void apply_1q(std::vector<cplx> &v, int bit, const Mat2 &m) {
    const std::size_t mask = std::size_t{1} << bit;
    for (std::size_t base = 0; base < v.size(); ++base) {
        if (base & mask) {
            continue;
        }
        const cplx a = v[base];
        const cplx b = v[base | mask];
        v[base] = m[0] * a + m[1] * b;
        v[base | mask] = m[2] * a + m[3] * b;
    }
}

/// Applies a 4x4 superoperator to the (row bit, column bit) pair of a
/// vectorized density matrix. Block element rho_rc sits at offset
/// r*hi + c*lo and has superoperator index 2r + c.
inline void apply_superop(std::vector<cplx> &v, int hi_bit, int lo_bit, const Mat4 &s) {
    const std::size_t hi = std::size_t{1} << hi_bit;
    const std::size_t lo = std::size_t{1} << lo_bit;
    for (std::size_t base = 0; base < v.size(); ++base) {
        if (base & (hi | lo)) {
            continue;
        }
        const std::array<cplx, 4> in = {v[base], v[base | lo], v[base | hi], v[base | hi | lo]};
        std::array<cplx, 4> out{};
        for (int r = 0; r < 4; ++r) {
            out[r] = s[4 * r] * in[0] + s[4 * r + 1] * in[1] + s[4 * r + 2] * in[2] + s[4 * r + 3] * in[3];
        }
        v[base] = out[0];
        v[base | lo] = out[1];
        v[base | hi] = out[2];
        v[base | hi | lo] = out[3];
    }
}

/// Superoperator of rho -> sum_k K rho K^dagger.
inline Mat4 kraus_superop(const std::vector<Mat2> &kraus) {
    Mat4 s{};
    for (const auto &k : kraus) {
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        s[4 * (2 * r + c) + (2 * a + b)] += k[2 * r + a] * std::conj(k[2 * c + b]);
                    }
                }
            }
        }
    }
    return s;
}

/// Per-basis-state phase of all RZZ gates in a layer, or empty if none.
inline std::vector<cplx> rzz_phases(int n, const Layer &layer) {
    std::vector<const Gate *> rzz;
    for (const auto &g : layer.gates) {
        if (g.kind == GateKind::RZZ) {
            rzz.push_back(&g);
        }
    }
    if (rzz.empty()) {
        return {};
    }
    std::vector<cplx> phase(std::size_t{1} << n);
    for (std::size_t x = 0; x < phase.size(); ++x) {
        double angle = 0;
        for (const Gate *g : rzz) {
            const bool same = ((x >> g->q0) & 1) == ((x >> g->q1) & 1);
            angle += same ? -g->theta / 2 : g->theta / 2;
        }
        phase[x] = std::polar(1.0, angle);
    }
    return phase;
}

/// In-place Walsh-Hadamard transform: out[m] = sum_x p[x] (-1)^{popcount(x & m)}.
inline void walsh_hadamard(std::vector<double> &p) {
    for (std::size_t h = 1; h < p.size(); h <<= 1) {
        for (std::size_t i = 0; i < p.size(); i += 2 * h) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double a = p[j];
                const double b = p[j + h];
                p[j] = a + b;
                p[j + h] = a - b;
            }
        }
    }
}

/// Z-basis moments of a distribution over n-bit strings (bit q = 1 means Z_q = -1).
inline CorrelationStats moments_from_probabilities(int n, std::vector<double> probs) {
    walsh_hadamard(probs);
    CorrelationStats s{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (int i = 0; i < n; ++i) {
        s.mu(i) = probs[std::size_t{1} << i];
        s.sigma(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            const double v = probs[(std::size_t{1} << i) | (std::size_t{1} << j)];
            s.sigma(i, j) = v;
            s.sigma(j, i) = v;
        }
    }
    return s;
}

inline void sample_from_probabilities(const std::vector<double> &cumulative, int n, Rng &rng, std::span<Spin> out) {
    std::uniform_real_distribution<double> unif(0.0, cumulative.back());
    const double u = unif(rng);
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t x = std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
    for (int q = 0; q < n; ++q) {
        out[q] = ((x >> q) & 1) ? Spin{-1} : Spin{1};
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

inline constexpr int kDensityMaxQubits = 12;
inline constexpr int kTrajectoryMaxQubits = 24;

/// Pure state on n qubits; qubit q is bit q of the basis index.
struct StateVector {
    int n = 0;
    std::vector<cplx> amp;

    static StateVector zero(int n) {
        StateVector s{n, std::vector<cplx>(std::size_t{1} << n)};
        s.amp[0] = 1;
        return s;
    }

    std::vector<double> probabilities() const {
        std::vector<double> p(amp.size());
        for (std::size_t x = 0; x < amp.size(); ++x) {
            p[x] = std::norm(amp[x]);
        }
        return p;
    }

    double norm() const {
        double s = 0;
        for (const auto &a : amp) {
            s += std::norm(a);
        }
        return std::sqrt(s);
    }
};

/// Density matrix stored row-major; element (r, c) sits at index r * 2^n + c,
/// so row bits are the high n bits and column bits the low n bits.
struct DensityMatrix {
    int n = 0;
    std::vector<cplx> data;

    static DensityMatrix zero(int n) {
        DensityMatrix d{n, std::vector<cplx>(std::size_t{1} << (2 * n))};
        d.data[0] = 1;
        return d;
    }

    static DensityMatrix maximally_mixed(int n) {
        DensityMatrix d{n, std::vector<cplx>(std::size_t{1} << (2 * n))};
        const std::size_t dim = std::size_t{1} << n;
        for (std::size_t x = 0; x < dim; ++x) {
            d.data[x * dim + x] = 1.0 / static_cast<double>(dim);
        }
        return d;
    }

    static DensityMatrix from_state(const StateVector &psi) {
        const std::size_t dim = psi.amp.size();
        DensityMatrix d{psi.n, std::vector<cplx>(dim * dim)};
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) {
                d.data[r * dim + c] = psi.amp[r] * std::conj(psi.amp[c]);
            }
        }
        return d;
    }

    std::size_t dim() const {
        return std::size_t{1} << n;
    }

    cplx at(std::size_t r, std::size_t c) const {
        return data[r * dim() + c];
    }

    double trace() const {
        double t = 0;
        for (std::size_t x = 0; x < dim(); ++x) {
            t += at(x, x).real();
        }
        return t;
    }

    double purity() const {
        double s = 0;
        for (const auto &v : data) {
            s += std::norm(v);
        }
        return s;
    }

    std::vector<double> probabilities() const {
        std::vector<double> p(dim());
        for (std::size_t x = 0; x < dim(); ++x) {
            p[x] = std::max(0.0, at(x, x).real());
        }
        return p;
    }

    Eigen::MatrixXcd to_matrix() const {
        Eigen::MatrixXcd m(dim(), dim());
        for (std::size_t r = 0; r < dim(); ++r) {
            for (std::size_t c = 0; c < dim(); ++c) {
                m(r, c) = at(r, c);
            }
        }
        return m;
    }

    double hermiticity_error() const {
        double e = 0;
        for (std::size_t r = 0; r < dim(); ++r) {
            for (std::size_t c = r; c < dim(); ++c) {
                e = std::max(e, std::abs(at(r, c) - std::conj(at(c, r))));
            }
        }
        return e;
    }

    double min_eigenvalue() const {
        Eigen::MatrixXcd m = to_matrix();
        m = 0.5 * (m + m.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m, Eigen::EigenvaluesOnly);
        return solver.eigenvalues()(0);
    }
};

// ---------------------------------------------------------------------------
// Channels and evolution
// ---------------------------------------------------------------------------

inline std::vector<Mat2> kraus_operators(const NoiseModel &noise) {
    const double p = noise.strength;
    switch (noise.kind) {
        case NoiseKind::None:
            return {{1, 0, 0, 1}};
        case NoiseKind::Depolarizing: {
            // (1-p) rho + p I/2 = (1 - 3p/4) rho + p/4 (X rho X + Y rho Y + Z rho Z)
            const double a = std::sqrt(1 - 0.75 * p);
            const double b = std::sqrt(0.25 * p);
            std::vector<Mat2> ks = {{a, 0, 0, a}};
            for (const Mat2 &pauli : {detail::kPauliX, detail::kPauliY, detail::kPauliZ}) {
                Mat2 k;
                for (int t = 0; t < 4; ++t) {
                    k[t] = b * pauli[t];
                }
                ks.push_back(k);
            }
            return ks;
        }
        case NoiseKind::AmplitudeDamping:
            return {{1, 0, 0, std::sqrt(1 - p)}, {0, std::sqrt(p), 0, 0}};
    }
    return {};
}

inline Mat4 channel_superop(const NoiseModel &noise) {
    if (noise.kind == NoiseKind::Depolarizing) {
        // Exact form (1-p) rho + p tr_q(rho) I/2 avoids square-root round-off.
        const double p = noise.strength;
        Mat4 s{};
        for (int k = 0; k < 4; ++k) {
            s[5 * k] = 1 - p;
        }
        for (int r : {0, 3}) {
            s[4 * r + 0] += p / 2;
            s[4 * r + 3] += p / 2;
        }
        return s;
    }
    return detail::kraus_superop(kraus_operators(noise));
}

inline void apply_channel(DensityMatrix &rho, const NoiseModel &noise, int qubit) {
    if (qubit < 0 || qubit >= rho.n) {
        throw ArgumentError("apply_channel: qubit " + std::to_string(qubit) + " out of range");
    }
    if (noise.kind == NoiseKind::None) {
        return;
    }
    detail::apply_superop(rho.data, rho.n + qubit, qubit, channel_superop(noise));
}

inline void apply_layer(DensityMatrix &rho, const Layer &layer) {
    for (const auto &g : layer.gates) {
        if (g.kind != GateKind::RZZ) {
            detail::apply_superop(rho.data, rho.n + g.q0, g.q0, detail::kraus_superop({detail::gate_matrix(g)}));
        }
    }
    auto phase = detail::rzz_phases(rho.n, layer);
    if (!phase.empty()) {
        const std::size_t dim = rho.dim();
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) {
                rho.data[r * dim + c] *= phase[r] * std::conj(phase[c]);
            }
        }
    }
}

/// `phase` is the layer's precomputed rzz_phases vector (empty if none).
inline void apply_layer(StateVector &psi, const Layer &layer, const std::vector<cplx> &phase) {
    for (const auto &g : layer.gates) {
        if (g.kind != GateKind::RZZ) {
            detail::apply_1q(psi.amp, g.q0, detail::gate_matrix(g));
        }
    }
    for (std::size_t x = 0; x < phase.size(); ++x) {
        psi.amp[x] *= phase[x];
    }
}

inline void apply_layer(StateVector &psi, const Layer &layer) {
    apply_layer(psi, layer, detail::rzz_phases(psi.n, layer));
}

using LayerObserver = std::function<void(std::size_t layer_index, const DensityMatrix &)>;

/// Exact noisy evolution from |0...0><0...0|: each layer's unitary, then the
/// channel on every qubit when the layer is marked noisy.
inline DensityMatrix evolve_density(const CircuitDescription &circuit, const NoiseModel &noise,
                                    const LayerObserver &observer = {}) {
    if (circuit.n > kDensityMaxQubits) {
        throw LimitError("density engine supports n <= " + std::to_string(kDensityMaxQubits) + " qubits, got " +
                         std::to_string(circuit.n));
    }
    circuit.check();
    DensityMatrix rho = DensityMatrix::zero(circuit.n);
    for (std::size_t li = 0; li < circuit.layers.size(); ++li) {
        const auto &layer = circuit.layers[li];
        apply_layer(rho, layer);
        if (layer.noisy_after && !noise.is_identity()) {
            for (int q = 0; q < circuit.n; ++q) {
                apply_channel(rho, noise, q);
            }
        }
        if (observer) {
            observer(li, rho);
        }
    }
    return rho;
}

inline StateVector evolve_statevector(const CircuitDescription &circuit) {
    if (circuit.n > kTrajectoryMaxQubits) {
        throw LimitError("statevector engine supports n <= " + std::to_string(kTrajectoryMaxQubits) + " qubits");
    }
    circuit.check();
    StateVector psi = StateVector::zero(circuit.n);
    for (const auto &layer : circuit.layers) {
        apply_layer(psi, layer);
    }
    return psi;
}

/// Exact Z moments; sigma has an exact unit diagonal.
inline CorrelationStats extract_stats(const DensityMatrix &rho) {
    return detail::moments_from_probabilities(rho.n, rho.probabilities());
}

inline CorrelationStats extract_stats(const StateVector &psi) {
    return detail::moments_from_probabilities(psi.n, psi.probabilities());
}

namespace detail {

inline SampleBatch measure_probabilities(int n, const std::vector<double> &probs, long shots, uint64_t seed) {
    if (shots < 1) {
        throw ArgumentError("measure: shots must be >= 1");
    }
    std::vector<double> cumulative(probs.size());
    double acc = 0;
    for (std::size_t x = 0; x < probs.size(); ++x) {
        acc += probs[x];
        cumulative[x] = acc;
    }
    SampleBatch batch(n, static_cast<std::size_t>(shots), Provenance::CircuitMeasurement);
    parallel_blocks(static_cast<std::size_t>(shots), kSampleBlock, [&](std::size_t b, std::size_t begin, std::size_t end) {
        Rng rng = make_rng(seed, "measure", b);
        for (std::size_t k = begin; k < end; ++k) {
            sample_from_probabilities(cumulative, n, rng, batch.row(k));
        }
    });
    return batch;
}

}  // namespace detail

/// Computational-basis samples; +1 encodes |0>.
inline SampleBatch measure(const DensityMatrix &rho, long shots, uint64_t seed) {
    return detail::measure_probabilities(rho.n, rho.probabilities(), shots, seed);
}

inline SampleBatch measure(const StateVector &psi, long shots, uint64_t seed) {
    return detail::measure_probabilities(psi.n, psi.probabilities(), shots, seed);
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

struct TrajectoryResult {
    SampleBatch samples;
    CorrelationStats stats;
    Eigen::VectorXd mu_stderr;
    Eigen::MatrixXd sigma_stderr;
    long trajectories = 0;
};

namespace detail {

/// Samples one Kraus branch of the channel on `qubit` and renormalizes.
inline void unravel_channel(StateVector &psi, const NoiseModel &noise, int qubit, Rng &rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double p = noise.strength;
    const double u = unif(rng);
    if (noise.kind == NoiseKind::Depolarizing) {
        if (u < 0.25 * p) {
            apply_1q(psi.amp, qubit, kPauliX);
        } else if (u < 0.5 * p) {
            apply_1q(psi.amp, qubit, kPauliY);
        } else if (u < 0.75 * p) {
            apply_1q(psi.amp, qubit, kPauliZ);
        }
        return;
    }
    if (noise.kind != NoiseKind::AmplitudeDamping) {
        return;
    }
    const std::size_t mask = std::size_t{1} << qubit;
    double excited = 0;
    for (std::size_t x = 0; x < psi.amp.size(); ++x) {
        if (x & mask) {
            excited += std::norm(psi.amp[x]);
        }
    }
    const double jump = p * excited;
    if (u < jump) {
        // K1 = sqrt(p) |0><1|
        const double scale = 1 / std::sqrt(excited);
        for (std::size_t x = 0; x < psi.amp.size(); ++x) {
            if (x & mask) {
                psi.amp[x ^ mask] = psi.amp[x] * scale;
                psi.amp[x] = 0;
            }
        }
    } else {
        // K0 = diag(1, sqrt(1-p))
        const double keep = std::sqrt(1 - p);
        const double scale = 1 / std::sqrt(1 - jump);
        for (std::size_t x = 0; x < psi.amp.size(); ++x) {
            psi.amp[x] *= (x & mask) ? keep * scale : scale;
        }
    }
}

}  // namespace detail

/// Monte Carlo unraveling of the same channel semantics as evolve_density.
/// Trajectory t uses its own stream derived from (seed, t). The moment
/// estimator averages each trajectory's exact <Z_i>, <Z_i Z_j>; the samples
/// take `samples_per_trajectory` measurements from every trajectory.
inline TrajectoryResult evolve_trajectories(const CircuitDescription &circuit, const NoiseModel &noise, long shots,
                                            uint64_t seed, int samples_per_trajectory = 1) {
    const int n = circuit.n;
    if (n > kTrajectoryMaxQubits) {
        throw LimitError("trajectory engine supports n <= " + std::to_string(kTrajectoryMaxQubits) + " qubits, got " +
                         std::to_string(n));
    }
    if (shots < 1 || samples_per_trajectory < 1) {
        throw ArgumentError("evolve_trajectories: shots and samples per trajectory must be >= 1");
    }
    circuit.check();

    constexpr std::size_t kBlock = 64;
    const std::size_t total = static_cast<std::size_t>(shots);
    const std::size_t num_blocks = (total + kBlock - 1) / kBlock;
    const std::size_t num_moments = static_cast<std::size_t>(n) + static_cast<std::size_t>(n) * (n - 1) / 2;
    // Per-block Welford mean and sum of squared deviations, merged in block order.
    std::vector<std::vector<double>> block_mean(num_blocks, std::vector<double>(num_moments, 0.0));
    std::vector<std::vector<double>> block_m2(num_blocks, std::vector<double>(num_moments, 0.0));

    TrajectoryResult result;
    result.trajectories = shots;
    result.samples = SampleBatch(n, total * samples_per_trajectory, Provenance::CircuitMeasurement);

    // Noiseless circuits share one state; only the measurement differs.
    const bool noiseless = noise.is_identity();
    StateVector reference;
    std::vector<std::vector<cplx>> phases;
    if (noiseless) {
        reference = evolve_statevector(circuit);
    } else {
        for (const auto &layer : circuit.layers) {
            phases.push_back(detail::rzz_phases(n, layer));
        }
    }

    parallel_blocks(total, kBlock, [&](std::size_t b, std::size_t begin, std::size_t end) {
        auto &mean = block_mean[b];
        auto &m2 = block_m2[b];
        auto accumulate = [&](std::size_t m, double v, double seen) {
            const double delta = v - mean[m];
            mean[m] += delta / seen;
            m2[m] += delta * (v - mean[m]);
        };
        for (std::size_t t = begin; t < end; ++t) {
            const double seen = static_cast<double>(t - begin + 1);
            Rng rng = make_rng(seed, "trajectory", t);
            StateVector psi;
            if (noiseless) {
                psi = reference;
            } else {
                psi = StateVector::zero(n);
                for (std::size_t li = 0; li < circuit.layers.size(); ++li) {
                    const auto &layer = circuit.layers[li];
                    apply_layer(psi, layer, phases[li]);
                    if (layer.noisy_after) {
                        for (int q = 0; q < n; ++q) {
                            detail::unravel_channel(psi, noise, q, rng);
                        }
                    }
                }
            }
            std::vector<double> probs = psi.probabilities();
            std::vector<double> cumulative(probs.size());
            double acc = 0;
            for (std::size_t x = 0; x < probs.size(); ++x) {
                acc += probs[x];
                cumulative[x] = acc;
            }
            for (int k = 0; k < samples_per_trajectory; ++k) {
                detail::sample_from_probabilities(cumulative, n, rng,
                                                  result.samples.row(t * samples_per_trajectory + k));
            }
            detail::walsh_hadamard(probs);
            std::size_t m = 0;
            for (int i = 0; i < n; ++i) {
                accumulate(m++, probs[std::size_t{1} << i], seen);
            }
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    accumulate(m++, probs[(std::size_t{1} << i) | (std::size_t{1} << j)], seen);
                }
            }
        }
    });

    std::vector<double> mean(num_moments, 0.0);
    std::vector<double> m2(num_moments, 0.0);
    double merged = 0;
    for (std::size_t b = 0; b < num_blocks; ++b) {
        const double nb = static_cast<double>(std::min(total, (b + 1) * kBlock) - b * kBlock);
        const double combined = merged + nb;
        for (std::size_t m = 0; m < num_moments; ++m) {
            const double delta = block_mean[b][m] - mean[m];
            mean[m] += delta * nb / combined;
            m2[m] += block_m2[b][m] + delta * delta * merged * nb / combined;
        }
        merged = combined;
    }
    const double count = static_cast<double>(shots);
    auto mean_se = [&](std::size_t m) {
        const double var = shots > 1 ? m2[m] / (count - 1) : 0.0;
        return std::pair<double, double>{mean[m], std::sqrt(var / count)};
    };
    result.stats = CorrelationStats{Eigen::VectorXd(n), Eigen::MatrixXd::Identity(n, n)};
    result.mu_stderr = Eigen::VectorXd::Zero(n);
    result.sigma_stderr = Eigen::MatrixXd::Zero(n, n);
    std::size_t m = 0;
    for (int i = 0; i < n; ++i, ++m) {
        auto [mean, se] = mean_se(m);
        result.stats.mu(i) = mean;
        result.mu_stderr(i) = se;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j, ++m) {
            auto [mean, se] = mean_se(m);
            result.stats.sigma(i, j) = result.stats.sigma(j, i) = mean;
            result.sigma_stderr(i, j) = result.sigma_stderr(j, i) = se;
        }
    }
    return result;
}

}  // namespace qrr
