// SPDX-License-Identifier: Apache-2.0
//
// Encoder/decoder state machines for the feedback codes: the scalar
// point-to-point code, the k-receiver broadcast code, the two-receiver
// Ozarow-Leung code, and discrete message grids layered on the continuous
// messages.
#pragma once

#include "lqgbc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lqgbc {

// ---------------------------------------------------------------------------
// Point-to-point code (real channel, unit noise)
// ---------------------------------------------------------------------------

/// Encoder state S with S_1 = theta, transmit x = -c*S, update S <- a*S + y.
/// The stationary gain c = (a^2-1)/a is the minimum-power stabilizing control.
class P2pEncoder {
  public:
    P2pEncoder(double a, double theta) : a_(a), c_((a * a - 1.0) / a), s_(theta) {
        if (a <= 1.0) throw std::invalid_argument("P2pEncoder: need a > 1");
    }

    double transmit() const { return -c_ * s_; }
    void observe(double y) { s_ = a_ * s_ + y; }

    double state() const { return s_; }
    double gain() const { return c_; }

  private:
    double a_;
    double c_;
    double s_;
};

/// Decoder mirror of the encoder recursion from S_hat_1 = 0; after i
/// observed outputs the estimate is -a^{-i} * S_hat_{i+1}.
class P2pDecoder {
  public:
    explicit P2pDecoder(double a) : a_(a) {}

    void observe(double y) {
        s_hat_ = a_ * s_hat_ + y;
        ++steps_;
    }

    double estimate() const { return -std::pow(a_, -static_cast<double>(steps_)) * s_hat_; }
    double state() const { return s_hat_; }
    int steps() const { return steps_; }

  private:
    double a_;
    double s_hat_ = 0.0;
    int steps_ = 0;
};

/// Per-time empirical ratios E[X_i Y_i] / E[Y_i^2] over an ensemble of
/// point-to-point traces. The asymptote is c/a = (a^2-1)/a^2.
inline std::vector<double> sk_coefficient_track(const std::vector<std::vector<double>>& x_traces,
                                                const std::vector<std::vector<double>>& y_traces) {
    if (x_traces.size() < 100)
        throw std::invalid_argument("sk_coefficient_track: need at least 100 trials");
    if (x_traces.size() != y_traces.size())
        throw std::invalid_argument("sk_coefficient_track: trace count mismatch");
    const std::size_t n = x_traces.front().size();
    std::vector<double> ratios(n);
    for (std::size_t i = 0; i < n; ++i) {
        double xy = 0.0, yy = 0.0;
        for (std::size_t t = 0; t < x_traces.size(); ++t) {
            xy += x_traces[t][i] * y_traces[t][i];
            yy += y_traces[t][i] * y_traces[t][i];
        }
        ratios[i] = xy / yy;
    }
    return ratios;
}

// ---------------------------------------------------------------------------
// Broadcast code (complex channel)
// ---------------------------------------------------------------------------

/// Broadcast encoder: S_1 = Theta, transmit x = -C*S, update S <- A*S + Y
/// on the fed-back full output vector.
class BcEncoder {
  public:
    BcEncoder(const SystemSpec& spec, Eigen::RowVectorXcd gain, CVector theta)
        : modes_(spec.modes), gain_(std::move(gain)), s_(std::move(theta)) {
        if (s_.size() != spec.k() || gain_.size() != spec.k())
            throw std::invalid_argument("BcEncoder: dimension mismatch");
    }

    Complex transmit() const { return -(gain_ * s_).value(); }

    void observe(const CVector& y) {
        for (int j = 0; j < s_.size(); ++j)
            s_(j) = modes_[static_cast<std::size_t>(j)] * s_(j) + y(j);
    }

    const CVector& state() const { return s_; }

  private:
    std::vector<Complex> modes_;
    Eigen::RowVectorXcd gain_;
    CVector s_;
};

/// Receiver-side estimator for one broadcast receiver; sees only its own
/// output stream.
class BcDecoder {
  public:
    explicit BcDecoder(Complex mode) : a_(mode) {}

    void observe(Complex y) {
        s_hat_ = a_ * s_hat_ + y;
        ++steps_;
    }

    Complex estimate() const { return -s_hat_ / pow_int(a_, steps_); }
    Complex state() const { return s_hat_; }
    int steps() const { return steps_; }

    static Complex pow_int(Complex a, int i) {
        Complex r = 1.0;
        for (int t = 0; t < i; ++t) r *= a;
        return r;
    }

  private:
    Complex a_;
    Complex s_hat_ = 0.0;
    int steps_ = 0;
};

// ---------------------------------------------------------------------------
// Ozarow-Leung code, k = 2, real channel, independent unit noises
// ---------------------------------------------------------------------------

/// OL code with modes (a, -a): transmits S_1 + S_2 and updates each state
/// with its receiver's MMSE coefficient E[S_j Y_j]/E[Y_j^2]. The
/// coefficients come from an exact second-moment recursion carried
/// alongside the states, so the code is well defined per trial. Messages
/// are taken zero-mean with variance 1/12 per state.
class OlCode {
  public:
    OlCode(double a, double theta1, double theta2)
        : a_(a), s1_(theta1), s2_(theta2) {
        if (a <= 1.0) throw std::invalid_argument("OlCode: need a > 1");
        m11_ = m22_ = 1.0 / 12.0;
        m12_ = 0.0;
    }

    double transmit() const { return s1_ + s2_; }

    double coefficient(int receiver) const {
        const double q = m11_ + 2.0 * m12_ + m22_ + 1.0; // E[Y_j^2]
        const double e = (receiver == 1) ? m11_ + m12_ : m12_ + m22_;
        return e / q;
    }

    void observe(double y1, double y2) {
        const double b1 = coefficient(1);
        const double b2 = coefficient(2);

        // exact propagation of the joint second moments
        const double q = m11_ + 2.0 * m12_ + m22_; // E[X^2]
        const double e1 = m11_ + m12_;
        const double e2 = m12_ + m22_;
        const double u11 = m11_ - 2.0 * b1 * e1 + b1 * b1 * q + b1 * b1;
        const double u22 = m22_ - 2.0 * b2 * e2 + b2 * b2 * q + b2 * b2;
        const double u12 = m12_ - b1 * e2 - b2 * e1 + b1 * b2 * q;
        if (u11 < 0.0 || u22 < 0.0 || u11 * u22 < u12 * u12 - 1e-9 * (1.0 + u11 * u22))
            throw NumericalError("OlCode: moment recursion lost positive semidefiniteness");
        m11_ = a_ * a_ * u11;
        m22_ = a_ * a_ * u22;
        m12_ = -a_ * a_ * u12;

        s1_ = a_ * (s1_ - b1 * y1);
        s2_ = -a_ * (s2_ - b2 * y2);
    }

    double state1() const { return s1_; }
    double state2() const { return s2_; }

  private:
    double a_;
    double s1_, s2_;
    double m11_, m12_, m22_; // second moments of (S_1, S_2)
};

/// Steady-state value of the LQG code's per-receiver output coefficient in
/// OL form, b*a^3*(a^2-1)/(a^6+a^4+a^2-1); strictly below b/a, which is
/// why the two codes are not asymptotically equivalent.
inline double lqg_ol_form_coefficient(double a, double b) {
    const double a2 = a * a;
    return b * a * a2 * (a2 - 1.0) / (a2 * a2 * a2 + a2 * a2 + a2 - 1.0);
}

// ---------------------------------------------------------------------------
// Discrete message grids
// ---------------------------------------------------------------------------

/// Uniform grid of message points in (0,1)x(0,1) with per-real-dimension
/// spacing at least 2^{-n R_bits / 2}; the rate is split evenly between the
/// two real dimensions. Decoding picks the nearest point, ties toward the
/// smallest index.
class MessageGrid {
  public:
    /// rate in nats per complex channel use
    MessageGrid(double rate_nats, int n) : rate_(rate_nats), n_(n) {
        if (rate_nats <= 0.0 || n < 1)
            throw std::invalid_argument("MessageGrid: need rate > 0, n >= 1");
        const double total = static_cast<double>(n) * rate_nats;
        if (total > 24.0 * std::numbers::ln2)
            throw std::invalid_argument("MessageGrid: cardinality cap exceeded");
        const double bits_per_dim = total / std::numbers::ln2 / 2.0;
        per_dim_ = std::max(1, static_cast<int>(std::floor(std::pow(2.0, bits_per_dim) + 1e-9)));
        spacing_ = 1.0 / static_cast<double>(per_dim_);
    }

    double rate() const { return rate_; }
    int block_length() const { return n_; }
    int per_dim() const { return per_dim_; }
    int size() const { return per_dim_ * per_dim_; }
    double spacing() const { return spacing_; }

    Complex point(int index) const {
        if (index < 0 || index >= size()) throw std::out_of_range("MessageGrid: bad index");
        const int re = index / per_dim_;
        const int im = index % per_dim_;
        return {(re + 0.5) * spacing_, (im + 0.5) * spacing_};
    }

    int decode(Complex estimate) const {
        return nearest_1d(estimate.real()) * per_dim_ + nearest_1d(estimate.imag());
    }

  private:
    int nearest_1d(double v) const {
        int idx = static_cast<int>(std::floor(v * per_dim_));
        idx = std::clamp(idx, 0, per_dim_ - 1);
        // candidate cell and its lower neighbor; tie goes to the smaller index
        int best = std::max(0, idx - 1);
        double best_d = std::abs(v - (best + 0.5) * spacing_);
        for (int c = best + 1; c <= std::min(per_dim_ - 1, idx + 1); ++c) {
            const double d = std::abs(v - (c + 0.5) * spacing_);
            if (d < best_d) {
                best = c;
                best_d = d;
            }
        }
        return best;
    }

    double rate_;
    int n_;
    int per_dim_;
    double spacing_;
};

/// Demonstration helper: one complex transmission reproduced as two
/// consecutive real-channel uses (real part, then imaginary part). Power is
/// then accounted per real dimension.
inline std::vector<double> complex_trace_to_real(const std::vector<Complex>& xs) {
    std::vector<double> out;
    out.reserve(xs.size() * 2);
    for (Complex x : xs) {
        out.push_back(x.real());
        out.push_back(x.imag());
    }
    return out;
}

} // namespace lqgbc
