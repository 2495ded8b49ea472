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
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qrr/error.hpp"
#include "qrr/parallel.hpp"

namespace qrr {

/// First and second moments of computational-basis measurements:
/// mu_i = tr(rho Z_i) and sigma_ij = tr(rho Z_i Z_j).
struct CorrelationStats {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;

    int n() const {
        return static_cast<int>(mu.size());
    }

    /// Zero-mean stats with the given second-moment matrix.
    static CorrelationStats centered(Eigen::MatrixXd sigma) {
        CorrelationStats s{Eigen::VectorXd::Zero(sigma.rows()), std::move(sigma)};
        s.check_shape();
        return s;
    }

    void check_shape() const {
        if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
            throw ArgumentError("stats shape mismatch: mu has " + std::to_string(mu.size()) + " entries, sigma is " +
                                std::to_string(sigma.rows()) + "x" + std::to_string(sigma.cols()));
        }
    }
};

struct PsdDiagnostics {
    double symmetric_dev = 0;  // max |sigma_ij - sigma_ji|
    double diag_dev = 0;       // max |sigma_ii - 1|
    double min_eigenvalue = 0;
    bool within_tolerance = false;
};

inline bool all_finite(const Eigen::MatrixXd &m) {
    return m.allFinite();
}

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd &m) {
    return 0.5 * (m + m.transpose());
}

inline double min_eigenvalue(const Eigen::MatrixXd &symmetric) {
    if (symmetric.rows() == 0) {
        return 0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigensolver failed");
    }
    return solver.eigenvalues()(0);
}

inline PsdDiagnostics validate(const CorrelationStats &stats, double tol) {
    if (!(tol > 0)) {
        throw ArgumentError("validate: tolerance must be positive");
    }
    stats.check_shape();
    if (!stats.mu.allFinite() || !all_finite(stats.sigma)) {
        throw NumericalError("validate: stats contain non-finite entries");
    }
    PsdDiagnostics d;
    d.symmetric_dev = (stats.sigma - stats.sigma.transpose()).cwiseAbs().maxCoeff();
    d.diag_dev = (stats.sigma.diagonal().array() - 1.0).abs().maxCoeff();
    d.min_eigenvalue = min_eigenvalue(symmetrized(stats.sigma));
    d.within_tolerance = d.symmetric_dev <= tol && d.diag_dev <= tol && d.min_eigenvalue >= -tol;
    return d;
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clamped to zero.
/// PSD inputs are returned unchanged.
inline Eigen::MatrixXd project_psd(const Eigen::MatrixXd &sigma) {
    if (sigma.rows() != sigma.cols()) {
        throw ArgumentError("project_psd: matrix must be square");
    }
    if (!all_finite(sigma)) {
        throw NumericalError("project_psd: non-finite entries");
    }
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw ArgumentError("project_psd: matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetrized(sigma));
    if (solver.info() != Eigen::Success) {
        throw NumericalError("project_psd: eigensolver failed");
    }
    if (solver.eigenvalues().minCoeff() >= 0) {
        return sigma;
    }
    const Eigen::VectorXd clamped = solver.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd out = solver.eigenvectors() * clamped.asDiagonal() * solver.eigenvectors().transpose();
    return symmetrized(out);
}

struct UnitDiagonalResult {
    Eigen::MatrixXd correlation;
    std::vector<int> degenerate;  // coordinates whose diagonal fell below the floor
};

/// D^{-1/2} sigma D^{-1/2} with D = diag(max(sigma_ii, floor)); the returned
/// diagonal is exactly one.
inline UnitDiagonalResult renormalize_unit_diagonal(const Eigen::MatrixXd &sigma, double floor) {
    if (!(floor > 0)) {
        throw ArgumentError("renormalize_unit_diagonal: floor must be positive");
    }
    const Eigen::Index n = sigma.rows();
    UnitDiagonalResult out;
    Eigen::VectorXd inv_sqrt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double d = sigma(i, i);
        if (d < floor) {
            out.degenerate.push_back(static_cast<int>(i));
            d = floor;
        }
        inv_sqrt(i) = 1.0 / std::sqrt(d);
    }
    out.correlation = inv_sqrt.asDiagonal() * sigma * inv_sqrt.asDiagonal();
    out.correlation.diagonal().setOnes();
    return out;
}

/// Negative eigenvalues above this fraction of the largest one are treated as
/// round-off; anything below is projected (covariances) or rejected (sampling).
inline constexpr double kPsdRelativeTolerance = 1e-10;

/// sigma - mu mu^T, projected onto the PSD cone when its smallest eigenvalue
/// is below -1e-10 relative to the largest.
inline Eigen::MatrixXd centered_covariance(const CorrelationStats &stats) {
    stats.check_shape();
    Eigen::MatrixXd k = symmetrized(stats.sigma - stats.mu * stats.mu.transpose());
    if (k.rows() == 0) {
        return k;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k, Eigen::EigenvaluesOnly);
    const double top = std::max(solver.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    if (solver.eigenvalues()(0) < -kPsdRelativeTolerance * top) {
        return project_psd(k);
    }
    return k;
}

/// Multivariate normal N(mean, cov) through a factor F with F F^T = cov.
///
/// The factor comes from a pivoted LDL^T decomposition, which stays exact on
/// rank-deficient matrices; if that is inaccurate the eigen-based factor
/// V sqrt(max(lambda, 0)) is used instead.
class GaussianSampler {
   public:
    GaussianSampler(Eigen::VectorXd mean, const Eigen::MatrixXd &cov) : mean_(std::move(mean)) {
        const Eigen::Index n = cov.rows();
        if (cov.cols() != n || mean_.size() != n) {
            throw ArgumentError("gaussian_sample: mean/covariance dimension mismatch");
        }
        if (!all_finite(cov) || !mean_.allFinite()) {
            throw NumericalError("gaussian_sample: non-finite mean or covariance");
        }
        if (n == 0) {
            return;
        }
        const double scale = std::max(cov.diagonal().cwiseAbs().maxCoeff(), 1e-300);
        if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
            throw ArgumentError("gaussian_sample: covariance is not symmetric");
        }
        const Eigen::MatrixXd sym = symmetrized(cov);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(sym);
        if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= -kPsdRelativeTolerance * scale) {
            Eigen::MatrixXd lower = ldlt.matrixL();
            lower = lower * ldlt.vectorD().cwiseMax(0.0).cwiseSqrt().asDiagonal();
            factor_ = ldlt.transpositionsP().transpose() * lower;
            if ((factor_ * factor_.transpose() - sym).cwiseAbs().maxCoeff() <= 1e-9 * scale) {
                return;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
        if (solver.info() != Eigen::Success) {
            throw NumericalError("gaussian_sample: eigensolver failed");
        }
        const double top = std::max(solver.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
        if (solver.eigenvalues()(0) < -kPsdRelativeTolerance * top) {
            throw NumericalError("gaussian_sample: covariance is indefinite (min eigenvalue " +
                                 std::to_string(solver.eigenvalues()(0)) + ")");
        }
        factor_ = solver.eigenvectors() * solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    int n() const {
        return static_cast<int>(mean_.size());
    }

    const Eigen::MatrixXd &factor() const {
        return factor_;
    }

    /// Draws the next sample of `rng` into `out`.
    void draw(Rng &rng, std::span<double> out) const {
        std::normal_distribution<double> normal;
        const int dim = n();
        Eigen::VectorXd x(dim);
        for (int k = 0; k < dim; ++k) {
            x(k) = normal(rng);
        }
        for (int i = 0; i < dim; ++i) {
            double acc = mean_(i);
            for (int k = 0; k < dim; ++k) {
                acc += factor_(i, k) * x(k);
            }
            out[i] = acc;
        }
    }

   private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd factor_;
};

using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// `shots` rows of N(mean, cov). Row k depends only on (seed, k).
inline SampleMatrix gaussian_sample(const Eigen::VectorXd &mean, const Eigen::MatrixXd &cov, long shots, uint64_t seed) {
    if (shots < 1) {
        throw ArgumentError("gaussian_sample: shots must be >= 1");
    }
    GaussianSampler sampler(mean, cov);
    SampleMatrix out(shots, sampler.n());
    parallel_blocks(static_cast<std::size_t>(shots), kSampleBlock, [&](std::size_t b, std::size_t begin, std::size_t end) {
        Rng rng = make_rng(seed, "gaussian", b);
        for (std::size_t k = begin; k < end; ++k) {
            sampler.draw(rng, std::span<double>(out.row(static_cast<Eigen::Index>(k)).data(), out.cols()));
        }
    });
    return out;
}

}  // namespace qrr
