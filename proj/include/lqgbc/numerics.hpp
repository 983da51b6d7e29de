// SPDX-License-Identifier: Apache-2.0
//
// Dense complex matrix helpers: DFT/circulant construction, Hermitian PSD
// square roots, spectral radius, and seeded circularly-symmetric Gaussian
// sampling. Everything here operates on Eigen dynamic matrices.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <random>

namespace lqgbc {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Unitary k-point DFT matrix, F(j,l) = exp(-2*pi*i*j*l/k)/sqrt(k).
inline CMatrix dft_matrix(int k) {
    if (k < 1) throw std::invalid_argument("dft_matrix: k must be >= 1");
    CMatrix f(k, k);
    const double w = -2.0 * std::numbers::pi / static_cast<double>(k);
    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    for (int j = 0; j < k; ++j)
        for (int l = 0; l < k; ++l)
            f(j, l) = scale * std::polar(1.0, w * static_cast<double>(j) * static_cast<double>(l));
    return f;
}

/// F' * diag(lambda) * F, pairing lambda(i) with the +i-exponent Fourier
/// vector of frequency i. Hermitian whenever lambda is real.
inline CMatrix circulant_from_eigenvalues(const Eigen::VectorXd& lambda) {
    const int k = static_cast<int>(lambda.size());
    const CMatrix f = dft_matrix(k);
    return f.adjoint() * lambda.cast<Complex>().asDiagonal() * f;
}

/// Largest eigenvalue modulus of a square matrix.
inline double spectral_radius(const CMatrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius: matrix not square");
    Eigen::ComplexEigenSolver<CMatrix> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw std::runtime_error("spectral_radius: eigensolver failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Square root of a Hermitian PSD matrix via eigendecomposition.
/// Eigenvalues in [-1e-10, 0) are clamped to zero; anything below -1e-6
/// is rejected as an invalid covariance. Handles the rank-deficient
/// covariances that defeat Cholesky.
inline CMatrix hermitian_psd_sqrt(const CMatrix& k) {
    if (k.rows() != k.cols()) throw std::invalid_argument("hermitian_psd_sqrt: matrix not square");
    if ((k - k.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("hermitian_psd_sqrt: matrix not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(k);
    if (es.info() != Eigen::Success) throw std::runtime_error("hermitian_psd_sqrt: eigensolver failed");
    Eigen::VectorXd ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-6)
            throw std::invalid_argument("hermitian_psd_sqrt: matrix has a negative eigenvalue");
        if (ev(i) < 0.0) ev(i) = 0.0;
    }
    return es.eigenvectors() * ev.cwiseSqrt().cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}
} // namespace detail

/// Deterministic Gaussian source keyed by (seed, stream). Each parallel
/// trial owns one Rng; identical keys give identical draws regardless of
/// platform (Box-Muller on explicit 53-bit uniforms, no libc++ variance).
class Rng {
  public:
    Rng(std::uint64_t seed, std::uint64_t stream)
        : engine_(detail::splitmix64(seed ^ detail::splitmix64(stream + 0x632be59bd9b4e019ull))) {}

    double uniform01() {
        // 53 random bits into [0,1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    /// CN(0,1): independent real/imaginary parts of variance 1/2.
    Complex cnormal() {
        const double s = std::numbers::sqrt2;
        return {normal() / s, normal() / s};
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Samples CN(0, K) as L*w with L the PSD square root of K and w having
/// i.i.d. CN(0,1) entries.
class GaussianSampler {
  public:
    GaussianSampler(CMatrix covariance, std::uint64_t seed, std::uint64_t stream)
        : cov_(std::move(covariance)), factor_(hermitian_psd_sqrt(cov_)), rng_(seed, stream) {}

    const CMatrix& covariance() const { return cov_; }
    const CMatrix& factor() const { return factor_; }

    CVector sample() {
        CVector w(cov_.rows());
        for (int i = 0; i < w.size(); ++i) w(i) = rng_.cnormal();
        return factor_ * w;
    }

  private:
    CMatrix cov_;
    CMatrix factor_;
    Rng rng_;
};

} // namespace lqgbc
