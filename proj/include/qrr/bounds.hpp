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

namespace qrr {

/// g(x) = 2 arccos(x) / (pi (1 - x)): rounded-over-circuit ratio of one
/// edge with correlation x. Defined for x in [-1, 1).
inline double ratio_g(double x) {
    if (!(x >= -1 && x < 1)) {
        throw ArgumentError("ratio_g: x must lie in [-1, 1), got " + std::to_string(x));
    }
    return 2 * std::acos(x) / (std::numbers::pi * (1 - x));
}

inline double ratio_f(double x) {
    return 1 - ratio_g(x);
}

struct GwConstants {
    double alpha_gw;
    double x_star;
};

/// Minimum of g on [-1, 0] by golden-section search, computed once.
inline const GwConstants &gw_constants() {
    static const GwConstants constants = [] {
        const double inv_phi = (std::sqrt(5.0) - 1) / 2;
        double a = -1;
        double b = 0;
        double c = b - inv_phi * (b - a);
        double d = a + inv_phi * (b - a);
        double gc = ratio_g(c);
        double gd = ratio_g(d);
        while (b - a > 1e-10) {
            if (gc < gd) {
                b = d;
                d = c;
                gd = gc;
                c = b - inv_phi * (b - a);
                gc = ratio_g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + inv_phi * (b - a);
                gd = ratio_g(d);
            }
        }
        const double x = 0.5 * (a + b);
        return GwConstants{ratio_g(x), x};
    }();
    return constants;
}

/// h(x) = 1 - x alpha_GW - (1 - x) g(-x); defined for x in (-1, 1].
inline double ratio_h(double x) {
    if (!(x > -1 && x <= 1)) {
        throw ArgumentError("ratio_h: x must lie in (-1, 1], got " + std::to_string(x));
    }
    return 1 - x * gw_constants().alpha_gw - (1 - x) * ratio_g(-x);
}

struct RatioFunctions {
    double g;
    double f;
    double h;
};

/// g and f at x, and h at x when h is defined there (NaN otherwise).
inline RatioFunctions ratio_functions(double x) {
    const double g = ratio_g(x);
    const double h = x > -1 ? ratio_h(x) : std::numeric_limits<double>::quiet_NaN();
    return {g, 1 - g, h};
}

namespace detail {

inline void check_noise_inputs(double p, int depth) {
    if (!(p >= 0 && p <= 1)) {
        throw ArgumentError("noise strength must lie in [0, 1], got " + std::to_string(p));
    }
    if (depth < 1) {
        throw ArgumentError("layer count D must be >= 1, got " + std::to_string(depth));
    }
}

}  // namespace detail

/// Upper bound on the average edge correlation magnitude after D noisy layers:
/// eps^2 = 2 sqrt(2) (1-p)^D, with an extra factor Delta for non-regular graphs.
inline double depolarizing_epsilon(double p, int depth, int max_degree, bool regular) {
    detail::check_noise_inputs(p, depth);
    const double decay = std::pow(1 - p, depth);
    const double factor = regular ? 1.0 : static_cast<double>(std::max(max_degree, 1));
    return std::sqrt(2 * std::numbers::sqrt2 * factor * decay);
}

struct AprioriBound {
    double epsilon = 0;
    double bound = 0;        // (1-eps) g(-eps) + eps alpha_GW
    double one_minus_h = 0;  // equal to `bound` algebraically
    bool applicable = false;
    double p = 0;
    int depth = 0;
    int max_degree = 0;
    bool regular = true;
};

/// Worst-case Max-Cut ratio under depolarizing noise, valid when eps <= |x*|.
inline AprioriBound apriori_maxcut_bound(double p, int depth, int max_degree, bool regular) {
    AprioriBound b;
    b.p = p;
    b.depth = depth;
    b.max_degree = max_degree;
    b.regular = regular;
    b.epsilon = depolarizing_epsilon(p, depth, max_degree, regular);
    const auto &gw = gw_constants();
    b.applicable = b.epsilon <= std::abs(gw.x_star);
    if (b.applicable) {
        const double eps = b.epsilon;
        b.bound = eps == 0 ? 1.0 : (1 - eps) * ratio_g(-eps) + eps * gw.alpha_gw;
        b.one_minus_h = 1 - ratio_h(eps);
    }
    return b;
}

/// Sum over edges of |Sigma_ij| is at most sqrt(2) Delta n (1-p)^D.
inline double covariance_sum_bound(double p, int depth, int max_degree, int n) {
    detail::check_noise_inputs(p, depth);
    return std::numbers::sqrt2 * max_degree * n * std::pow(1 - p, depth);
}

struct QuboBound {
    double noisy_term;  // 1 - c Delta n (1-p)^D, may be negative
    double floor;       // 2/pi, needs a PSD cost matrix
    double bound;       // max of the two
};

inline constexpr double kQuboNoiseCoefficient = std::numbers::sqrt2 * (2 * std::numbers::pi - 4) / std::numbers::pi;

inline QuboBound apriori_qubo_bound(double p, int depth, int max_degree, int n) {
    detail::check_noise_inputs(p, depth);
    const double noisy = 1 - kQuboNoiseCoefficient * max_degree * n * std::pow(1 - p, depth);
    const double floor = 2 / std::numbers::pi;
    return {noisy, floor, std::max(floor, noisy)};
}

/// M_alpha with entries (2/pi) arcsin(sigma_ij) - alpha sigma_ij.
inline Eigen::MatrixXd m_alpha(const Eigen::MatrixXd &sigma, double alpha) {
    if (sigma.rows() != sigma.cols()) {
        throw ArgumentError("m_alpha: sigma must be square");
    }
    Eigen::MatrixXd m(sigma.rows(), sigma.cols());
    for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
        for (Eigen::Index j = 0; j < sigma.cols(); ++j) {
            const double s = std::clamp(sigma(i, j), -1.0, 1.0);
            m(i, j) = 2 / std::numbers::pi * std::asin(s) - alpha * s;
        }
    }
    return m;
}

inline double m_alpha_spectrum(const Eigen::MatrixXd &sigma, double alpha) {
    return min_eigenvalue(symmetrized(m_alpha(sigma, alpha)));
}

/// Largest alpha in [2/pi, 1] whose Gershgorin discs certify M_alpha >= 0,
/// i.e. max_i R_i(alpha) <= 1 - alpha with R_i = sum_{j!=i} |a_ij - alpha s_ij|.
/// Returns 2/pi when no larger alpha is certified.
inline double gershgorin_certificate(const Eigen::MatrixXd &sigma) {
    const Eigen::Index n = sigma.rows();
    if (sigma.cols() != n) {
        throw ArgumentError("gershgorin_certificate: sigma must be square");
    }
    const double lo = 2 / std::numbers::pi;
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = 2 / std::numbers::pi * std::asin(std::clamp(sigma(i, j), -1.0, 1.0));
        }
    }
    // F(alpha) = max_i R_i(alpha) + alpha is convex and piecewise linear.
    auto excess = [&](double alpha) {
        double worst = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double r = 0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j != i) {
                    r += std::abs(a(i, j) - alpha * sigma(i, j));
                }
            }
            worst = std::max(worst, r);
        }
        return worst + alpha;
    };
    if (excess(1.0) <= 1) {
        return 1.0;
    }
    std::vector<double> candidates = {lo, 1.0};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j && sigma(i, j) != 0) {
                const double t = a(i, j) / sigma(i, j);
                if (t > lo && t < 1) {
                    candidates.push_back(t);
                }
            }
        }
    }
    double best_alpha = lo;
    double best_value = excess(lo);
    for (double t : candidates) {
        const double v = excess(t);
        if (v < best_value) {
            best_value = v;
            best_alpha = t;
        }
    }
    if (best_value > 1) {
        return lo;
    }
    double left = best_alpha;  // F(left) <= 1
    double right = 1.0;        // F(right) > 1
    while (right - left > 1e-10) {
        const double mid = 0.5 * (left + right);
        (excess(mid) <= 1 ? left : right) = mid;
    }
    return std::max(lo, left);
}

struct Counterexample {
    double s;        // common off-diagonal correlation
    Eigen::MatrixXd sigma;
    double predicted_min_eigenvalue;  // (1-alpha) - (n-1) eps_c
};

/// Correlation matrix (1-s) I + s J with (2/pi) arcsin(s) - alpha s = -eps_c,
/// for which M_alpha = (1-alpha) I - eps_c (J - I).
inline Counterexample counterexample_family(int n, double alpha, double eps_c) {
    const double two_over_pi = 2 / std::numbers::pi;
    if (n < 2 || !(alpha > two_over_pi && alpha <= 1) || !(eps_c > 0)) {
        throw ArgumentError("counterexample_family needs n >= 2, alpha in (2/pi, 1], eps_c > 0");
    }
    auto phi = [&](double s) { return two_over_pi * std::asin(s) - alpha * s; };
    // phi decreases on [0, s_min] with s_min = sqrt(1 - (2/(pi alpha))^2).
    const double ratio = two_over_pi / alpha;
    const double s_min = std::sqrt(std::max(0.0, 1 - ratio * ratio));
    if (phi(s_min) > -eps_c) {
        throw ArgumentError("counterexample_family: eps_c exceeds the largest reachable gap " +
                            std::to_string(-phi(s_min)));
    }
    double left = 0;
    double right = s_min;
    for (int it = 0; it < 200 && right - left > 1e-16; ++it) {
        const double mid = 0.5 * (left + right);
        (phi(mid) > -eps_c ? left : right) = mid;
    }
    Counterexample c;
    c.s = 0.5 * (left + right);
    c.sigma = Eigen::MatrixXd::Constant(n, n, c.s);
    c.sigma.diagonal().setOnes();
    c.predicted_min_eigenvalue = (1 - alpha) - (n - 1) * eps_c;
    return c;
}

struct PrecisionBudget {
    double eta;            // per-coefficient precision
    double runtime;        // Delta n^3 D (Delta^1.5 n^2.5 / delta)^(1/p)
    double log10_runtime;
};

inline PrecisionBudget precision_budget(int n, int max_degree, double failure, int qaoa_p, int depth) {
    if (n < 1 || max_degree < 1 || qaoa_p < 1 || depth < 1 || !(failure > 0 && failure < 1)) {
        throw ArgumentError("precision_budget needs positive n, degree, p, D and failure in (0, 1)");
    }
    const double dn = n;
    const double dd = max_degree;
    const double scale = std::pow(dd, 1.5) * std::pow(dn, 2.5);
    PrecisionBudget b;
    b.eta = failure / scale;
    b.log10_runtime = std::log10(dd) + 3 * std::log10(dn) + std::log10(static_cast<double>(depth)) +
                      std::log10(scale / failure) / qaoa_p;
    b.runtime = std::pow(10.0, b.log10_runtime);
    return b;
}

}  // namespace qrr
