// SPDX-License-Identifier: Apache-2.0
//
// Cost-free LQG solver for the broadcast feedback code: Riccati fixed point
// for G, the scalar-input gain row C, the Lyapunov equation for the steady
// state covariance K_s, and the asymptotic control power tr(G K_z).
#pragma once

#include "lqgbc/numerics.hpp"

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace lqgbc {

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One broadcast instance: diagonal open-loop matrix A = diag(modes),
/// all-ones input map, unit-diagonal Hermitian PSD noise covariance.
struct SystemSpec {
    std::vector<Complex> modes;
    CMatrix noise_cov;

    int k() const { return static_cast<int>(modes.size()); }

    CMatrix open_loop() const {
        const int n = k();
        CMatrix a = CMatrix::Zero(n, n);
        for (int i = 0; i < n; ++i) a(i, i) = modes[static_cast<std::size_t>(i)];
        return a;
    }

    CVector input_map() const { return CVector::Ones(k()); }

    void validate() const {
        const int n = k();
        if (n < 1) throw std::invalid_argument("SystemSpec: no modes");
        for (int i = 0; i < n; ++i) {
            if (std::abs(modes[static_cast<std::size_t>(i)]) <= 1.0)
                throw std::invalid_argument("SystemSpec: mode " + std::to_string(i + 1) +
                                            " is not outside the unit circle");
            for (int j = i + 1; j < n; ++j)
                if (modes[static_cast<std::size_t>(i)] == modes[static_cast<std::size_t>(j)])
                    throw std::invalid_argument("SystemSpec: modes must be pairwise distinct");
        }
        if (noise_cov.rows() != n || noise_cov.cols() != n)
            throw std::invalid_argument("SystemSpec: covariance dimension mismatch");
        if ((noise_cov - noise_cov.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
            throw std::invalid_argument("SystemSpec: covariance not Hermitian");
        for (int i = 0; i < n; ++i)
            if (std::abs(noise_cov(i, i) - 1.0) > 1e-12)
                throw std::invalid_argument("SystemSpec: covariance diagonal must be 1");
    }

    /// Symmetric configuration: modes a*exp(2*pi*i*(j-1)/k) on a common radius.
    static SystemSpec symmetric(int k, double a, CMatrix cov) {
        SystemSpec s;
        s.modes.reserve(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j)
            s.modes.push_back(std::polar(a, 2.0 * std::numbers::pi * j / static_cast<double>(k)));
        s.noise_cov = std::move(cov);
        return s;
    }

    static SystemSpec symmetric(int k, double a) {
        return symmetric(k, a, CMatrix::Identity(k, k));
    }
};

/// Gain row C = (B'GB + 1)^{-1} B'GA.
inline Eigen::RowVectorXcd gain(const CMatrix& g, const CMatrix& a, const CVector& b) {
    const Complex denom = (b.adjoint() * g * b).value() + 1.0;
    return (b.adjoint() * g * a) / denom;
}

inline double dare_residual(const CMatrix& g, const CMatrix& a, const CVector& b) {
    const Complex denom = (b.adjoint() * g * b).value() + 1.0;
    const CMatrix rhs = a.adjoint() * g * a - (a.adjoint() * g * b) * (b.adjoint() * g * a) / denom;
    return (g - rhs).cwiseAbs().maxCoeff();
}

/// Stabilizing DARE solution by plain fixed-point iteration from G = I.
/// Iterates G <- A'GA - A'GB(B'GB+1)^{-1}B'GA until the max-norm step is
/// below tol (default tighter than the contract so k=1 lands on a^2-1 to
/// machine precision). This overload takes an explicit input map.
inline CMatrix solve_dare(const CMatrix& a, const CVector& b, double step_tol = 1e-14,
                          int max_iters = 100000) {
    CMatrix g = CMatrix::Identity(a.rows(), a.cols());
    double best_step = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int it = 0; it < max_iters; ++it) {
        const Complex denom = (b.adjoint() * g * b).value() + 1.0;
        CMatrix next = a.adjoint() * g * a - (a.adjoint() * g * b) * (b.adjoint() * g * a) / denom;
        next = ((next + next.adjoint()) / 2.0).eval(); // keep Hermitian under roundoff
        const double step = (next - g).cwiseAbs().maxCoeff();
        const double scale = 1.0 + next.cwiseAbs().maxCoeff();
        g = std::move(next);
        if (step < 0.9 * best_step) {
            best_step = step;
            stale = 0;
        } else {
            ++stale;
        }
        // a large-norm iterate can plateau on roundoff above step_tol; accept
        // once progress has stalled there, subject to the residual check below
        const bool plateaued = stale >= 200 && best_step <= 1e-10 * scale;
        if (step <= step_tol * scale || plateaued) {
            if (dare_residual(g, a, b) > 1e-9 * scale)
                throw NumericalError("solve_dare: converged point violates residual tolerance");
            const Eigen::RowVectorXcd c = gain(g, a, b);
            if (spectral_radius(a - b * c) >= 1.0)
                throw NumericalError("solve_dare: closed loop unstable");
            return g;
        }
    }
    throw NumericalError("solve_dare: fixed point iteration did not converge");
}

inline CMatrix solve_dare(const SystemSpec& spec, double step_tol = 1e-14,
                          int max_iters = 100000) {
    spec.validate();
    return solve_dare(spec.open_loop(), spec.input_map(), step_tol, max_iters);
}

/// Unique PSD fixed point of K -> M K M' + K_z for a stable M, by iteration
/// from K_z.
inline CMatrix solve_dale(const CMatrix& closed_loop, const CMatrix& noise_cov,
                          double step_tol = 1e-13, int max_iters = 100000) {
    if (spectral_radius(closed_loop) >= 1.0)
        throw NumericalError("solve_dale: closed loop is not stable");
    CMatrix k = noise_cov;
    double best_step = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int it = 0; it < max_iters; ++it) {
        CMatrix next = closed_loop * k * closed_loop.adjoint() + noise_cov;
        next = ((next + next.adjoint()) / 2.0).eval();
        const double step = (next - k).cwiseAbs().maxCoeff();
        const double scale = 1.0 + next.cwiseAbs().maxCoeff();
        k = std::move(next);
        if (step < 0.9 * best_step) {
            best_step = step;
            stale = 0;
        } else {
            ++stale;
        }
        // the step is the DALE residual itself; accept a roundoff plateau
        if (step <= step_tol * scale || (stale >= 200 && best_step <= 1e-10 * scale)) return k;
    }
    throw NumericalError("solve_dale: iteration did not converge");
}

/// Complete solution bundle for one SystemSpec.
struct LqgSolution {
    CMatrix riccati;          // G
    Eigen::RowVectorXcd gain; // C
    CMatrix state_cov;        // K_s
    double power = 0.0;       // tr(G K_z) = C K_s C'
};

/// tr(G K_z), cross-checked against C K_s C'.
inline double asymptotic_power(const LqgSolution& sol, const CMatrix& noise_cov) {
    const double via_trace = (sol.riccati * noise_cov).trace().real();
    const double via_state = (sol.gain * sol.state_cov * sol.gain.adjoint()).value().real();
    if (std::abs(via_trace - via_state) > 1e-8 * (1.0 + std::abs(via_trace)))
        throw NumericalError("asymptotic_power: tr(GK_z) and CK_sC' disagree");
    return via_trace;
}

inline LqgSolution solve(const SystemSpec& spec) {
    LqgSolution sol;
    sol.riccati = solve_dare(spec);
    const CMatrix a = spec.open_loop();
    const CVector b = spec.input_map();
    sol.gain = gain(sol.riccati, a, b);
    sol.state_cov = solve_dale(a - b * sol.gain, spec.noise_cov);
    sol.power = asymptotic_power(sol, spec.noise_cov);
    return sol;
}

/// Eigenvalues of the circulant Riccati solution for the symmetric
/// configuration, lambda_1 = (a^{2k}-1)/k and lambda_i = lambda_1 a^{-2(i-1)},
/// with the common diagonal value G_jj = (sum_i lambda_i)/k.
struct CirculantSpectrum {
    std::vector<double> eigenvalues;
    double diag_value = 0.0;

    double trace() const {
        double t = 0.0;
        for (double l : eigenvalues) t += l;
        return t;
    }
};

inline CirculantSpectrum symmetric_spectrum(int k, double a) {
    if (k < 1 || a <= 1.0) throw std::invalid_argument("symmetric_spectrum: need k >= 1, a > 1");
    CirculantSpectrum s;
    s.eigenvalues.resize(static_cast<std::size_t>(k));
    const double lambda1 = (std::pow(a, 2 * k) - 1.0) / static_cast<double>(k);
    for (int i = 0; i < k; ++i)
        s.eigenvalues[static_cast<std::size_t>(i)] = lambda1 * std::pow(a, -2.0 * i);
    s.diag_value = s.trace() / static_cast<double>(k);
    return s;
}

/// Closed-form symmetric solution: spectrum plus G = F' diag(lambda) F.
inline std::pair<CirculantSpectrum, CMatrix> solve_symmetric(int k, double a) {
    CirculantSpectrum s = symmetric_spectrum(k, a);
    Eigen::VectorXd lambda = Eigen::Map<const Eigen::VectorXd>(s.eigenvalues.data(), k);
    CMatrix g = circulant_from_eigenvalues(lambda);
    return {std::move(s), std::move(g)};
}

/// Closed form for the minimum two-receiver power at modes (a1, a2) and
/// noise correlation rho. Derived from the inverse-Cauchy form of the
/// Riccati solution, G^{-1}(j,l) = 1/(a_j conj(a_l) - 1):
///   P = (|w|^2 (m1 + m2) - 2 rho m1 m2 Re(w)) / |a1 - a2|^2,
/// with w = a1 conj(a2) - 1 and m_j = |a_j|^2 - 1.
inline double two_receiver_power(Complex a1, Complex a2, double rho) {
    if (a1 == a2) throw std::invalid_argument("two_receiver_power: coincident modes");
    const double m1 = std::norm(a1) - 1.0;
    const double m2 = std::norm(a2) - 1.0;
    const Complex w = a1 * std::conj(a2) - 1.0;
    return (std::norm(w) * (m1 + m2) - 2.0 * rho * m1 * m2 * w.real()) / std::norm(a1 - a2);
}

} // namespace lqgbc
