// SPDX-License-Identifier: Apache-2.0
//
// Closed-form layer: the power-gain coefficient phi(k,P) and the sum rate
// it induces, MAC duality, the rank-r pre-log covariance constructions,
// and the SIMO cooperative upper bound. All rates are in nats.
#pragma once

#include "lqgbc/numerics.hpp"
#include "lqgbc/solver.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lqgbc {

namespace detail {
/// Bisection on [1,k] for the log-residual of
/// (1 + s*P*phi)^{k-1} = (1 + P*phi*(k-phi)/d)^k,
/// covering both the broadcast form (s=1, d=k) and the MAC form (s=k, d=1).
inline double phi_bisect(int k, double p, double s, double d) {
    if (k < 1 || p <= 0.0) throw std::invalid_argument("phi: need k >= 1, P > 0");
    if (k == 1) return 1.0;
    auto g = [&](double phi) {
        return (k - 1) * std::log1p(s * p * phi) - k * std::log1p(p * phi * (k - phi) / d);
    };
    double lo = 1.0, hi = static_cast<double>(k);
    // g(1) <= 0 and g(k) > 0 on the valid domain
    if (g(lo) > 0.0 || g(hi) < 0.0)
        throw NumericalError("phi: no sign change on [1,k]");
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) <= 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}
} // namespace detail

/// Unique solution in [1,k] of (1+P*phi)^{k-1} = (1+(P/k)*phi*(k-phi))^k.
inline double phi(int k, double p) {
    return detail::phi_bisect(k, p, 1.0, static_cast<double>(k));
}

/// Symmetric broadcast sum rate (1/2)log(1 + P*phi(k,P)).
inline double sum_rate(int k, double p) { return 0.5 * std::log1p(p * phi(k, p)); }

/// MAC power gain: unique solution of (1+kP*phi)^{k-1} = (1+P*phi*(k-phi))^k.
inline double mac_phi(int k, double p) {
    return detail::phi_bisect(k, p, static_cast<double>(k), 1.0);
}

/// Symmetric MAC sum rate (1/2)log(1 + kP*phi) with per-sender power P.
inline double mac_sum_rate(int k, double p) {
    return 0.5 * std::log1p(static_cast<double>(k) * p * mac_phi(k, p));
}

/// |R_BC(k,P) - R_MAC(k,P/k)|; zero under the sum-power duality.
inline double duality_check(int k, double p) {
    return std::abs(sum_rate(k, p) - mac_sum_rate(k, p / static_cast<double>(k)));
}

/// Circulant rank-one covariance F diag(0,...,0,k) F': Hermitian PSD with
/// unit diagonal.
inline CMatrix rank_one_circulant_cov(int k) {
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(k);
    lambda(k - 1) = static_cast<double>(k);
    return circulant_from_eigenvalues(lambda);
}

/// Rank-r covariance: a (k-r+1)-dimensional rank-one circulant block padded
/// with an (r-1)-dimensional identity tail. Unit diagonal, rank exactly r.
inline CMatrix rank_r_cov(int k, int r) {
    if (r < 1 || r > k) throw std::invalid_argument("rank_r_cov: need 1 <= r <= k");
    const int block = k - r + 1;
    CMatrix cov = CMatrix::Identity(k, k);
    cov.topLeftCorner(block, block) = rank_one_circulant_cov(block);
    return cov;
}

/// Cooperative SIMO upper bound (1/2)log(1 + P * 1' K^{-1} 1) for a
/// full-rank receive-noise covariance.
inline double simo_upper_bound(const CMatrix& noise_cov, double p) {
    const int r = static_cast<int>(noise_cov.rows());
    Eigen::FullPivLU<CMatrix> lu(noise_cov);
    if (!lu.isInvertible()) throw std::invalid_argument("simo_upper_bound: singular covariance");
    const CVector ones = CVector::Ones(r);
    const double combining = (ones.adjoint() * lu.solve(ones)).value().real();
    return 0.5 * std::log1p(p * combining);
}

struct PrelogPoint {
    double a = 0.0;
    double rate = 0.0;  // k' log a, nats
    double power = 0.0; // (a^{2k'}-1)/a^{2(k'-1)}
    double ratio = 0.0; // rate / ((1/2) log(1+power))
};

struct PrelogExperiment {
    int k = 0;
    int r = 0;
    int effective_k = 0; // k - r + 1
    CMatrix noise_cov;
    std::vector<PrelogPoint> points;
};

/// Pre-log sweep: for effective dimension k' = k-r+1, the symmetric code on
/// the rank-one circulant block runs at rate k' log a under power
/// (a^{2k'}-1)/a^{2(k'-1)}. Cross-checks tr(G K_z) from the numeric solver
/// against the closed form at every grid point.
inline PrelogExperiment prelog_achieved(int k, int r, const std::vector<double>& a_grid) {
    PrelogExperiment exp;
    exp.k = k;
    exp.r = r;
    exp.effective_k = k - r + 1;
    exp.noise_cov = rank_r_cov(k, r);
    const int kp = exp.effective_k;
    const CMatrix block_cov = rank_one_circulant_cov(kp);
    for (double a : a_grid) {
        if (a <= 1.0) throw std::invalid_argument("prelog_achieved: grid values must exceed 1");
        PrelogPoint pt;
        pt.a = a;
        pt.rate = kp * std::log(a);
        pt.power = (std::pow(a, 2 * kp) - 1.0) / std::pow(a, 2 * (kp - 1));
        pt.ratio = pt.rate / (0.5 * std::log1p(pt.power));

        // dense-trace cross-check cancels ~lambda_1 down to ~power, so it is
        // only meaningful while eps*lambda_1 stays below the tolerance
        if (a <= 10.0) {
            const auto [spectrum, g] = solve_symmetric(kp, a);
            (void)spectrum;
            const double solver_power = (g * block_cov).trace().real();
            if (std::abs(solver_power - pt.power) > 1e-8 * (1.0 + std::abs(pt.power)))
                throw NumericalError("prelog_achieved: solver power disagrees with closed form");
        }
        exp.points.push_back(pt);
    }
    return exp;
}

} // namespace lqgbc
