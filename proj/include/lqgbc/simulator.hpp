// SPDX-License-Identifier: Apache-2.0
//
// Closed-loop Monte Carlo driver: channel sampling, encoder/decoder
// stepping, metric collection, and seeded parallel ensembles with a fixed
// reduction order.
#pragma once

#include "lqgbc/codes.hpp"
#include "lqgbc/solver.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lqgbc {

/// One noise source per trial: CN(0, K_z) samples keyed by (seed, trial).
class ChannelInstance {
  public:
    ChannelInstance(const CMatrix& noise_cov, std::uint64_t seed, std::uint64_t stream,
                    bool zero_noise = false)
        : sampler_(noise_cov, seed, stream), zero_noise_(zero_noise) {}

    int receivers() const { return static_cast<int>(sampler_.covariance().rows()); }

    /// Y = 1*x + Z componentwise.
    CVector output(Complex x) {
        if (zero_noise_) return CVector::Constant(receivers(), x);
        return CVector::Constant(receivers(), x) + sampler_.sample();
    }

  private:
    GaussianSampler sampler_;
    bool zero_noise_;
};

/// Least-squares slope of -log D_i against 2i over the last half of the
/// horizon (transient discarded). D must be strictly positive there.
inline double mse_exponent_fit(const std::vector<double>& d_series) {
    const int n = static_cast<int>(d_series.size());
    if (n < 2) throw std::invalid_argument("mse_exponent_fit: series too short");
    const int start = n / 2;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (int i = start; i < n; ++i) {
        if (!(d_series[static_cast<std::size_t>(i)] > 0.0))
            throw std::invalid_argument("mse_exponent_fit: nonpositive MSE in fit window");
        const double x = 2.0 * (i + 1);
        const double y = -std::log(d_series[static_cast<std::size_t>(i)]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    const double denom = count * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("mse_exponent_fit: degenerate window");
    return (count * sxy - sx * sy) / denom;
}

struct TrialMetrics {
    std::vector<double> final_mse;       // D_j^(n)
    double avg_power = 0.0;              // (1/n) sum |X_i|^2
    std::vector<bool> grid_error;        // per-receiver decode failure
    std::vector<double> exponent_est;    // regression slope per receiver (NaN if D hit 0)
    double max_identity_residual = 0.0;  // worst |(Theta - est) - a^{-i} S|
};

struct TrialOptions {
    bool zero_noise = false;
    bool center_messages = false; // translate messages to (-0.5,0.5)^2
};

/// One full closed-loop run over n channel uses. Messages are drawn
/// uniformly from the unit square (or taken from the grid when given),
/// the per-step decoder error identity is tracked, and per-receiver MSE
/// series feed the exponent regression.
inline TrialMetrics run_trial(const SystemSpec& spec, const LqgSolution& sol, int n,
                              std::uint64_t base_seed, std::uint64_t trial_index,
                              const MessageGrid* grid = nullptr,
                              const TrialOptions& opts = {}) {
    if (n < 1) throw std::invalid_argument("run_trial: need n >= 1");
    const int k = spec.k();
    for (int j = 0; j < k; ++j)
        if (n * std::log(std::abs(spec.modes[static_cast<std::size_t>(j)])) > 300.0)
            throw std::invalid_argument("run_trial: horizon underflows a_j^{-2n}");

    // message draw and channel noise share one per-trial stream
    Rng rng(base_seed, trial_index);
    CVector theta(k);
    std::vector<int> sent_index(static_cast<std::size_t>(k), 0);
    for (int j = 0; j < k; ++j) {
        if (grid) {
            sent_index[static_cast<std::size_t>(j)] =
                static_cast<int>(rng.uniform01() * grid->size());
            if (sent_index[static_cast<std::size_t>(j)] >= grid->size())
                sent_index[static_cast<std::size_t>(j)] = grid->size() - 1;
            theta(j) = grid->point(sent_index[static_cast<std::size_t>(j)]);
        } else {
            theta(j) = Complex(rng.uniform01(), rng.uniform01());
        }
        if (opts.center_messages) theta(j) -= Complex(0.5, 0.5);
    }

    ChannelInstance channel(spec.noise_cov, base_seed, trial_index ^ 0x9e3779b97f4a7c15ull,
                            opts.zero_noise);
    BcEncoder enc(spec, sol.gain, theta);
    std::vector<BcDecoder> decs;
    decs.reserve(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) decs.emplace_back(spec.modes[static_cast<std::size_t>(j)]);

    TrialMetrics m;
    m.final_mse.assign(static_cast<std::size_t>(k), 0.0);
    m.grid_error.assign(static_cast<std::size_t>(k), false);
    m.exponent_est.assign(static_cast<std::size_t>(k),
                          std::numeric_limits<double>::quiet_NaN());
    std::vector<std::vector<double>> mse_series(static_cast<std::size_t>(k));

    double power_sum = 0.0;
    for (int i = 1; i <= n; ++i) {
        const Complex x = enc.transmit();
        power_sum += std::norm(x);
        const CVector y = channel.output(x);
        enc.observe(y);
        for (int j = 0; j < k; ++j) {
            auto& dec = decs[static_cast<std::size_t>(j)];
            dec.observe(y(j));
            const Complex err = theta(j) - dec.estimate();
            mse_series[static_cast<std::size_t>(j)].push_back(std::norm(err));
            // Theta_j - est_{j,i} = a_j^{-i} S_{j,i+1}
            const Complex predicted =
                enc.state()(j) / BcDecoder::pow_int(spec.modes[static_cast<std::size_t>(j)], i);
            m.max_identity_residual =
                std::max(m.max_identity_residual, std::abs(err - predicted));
        }
    }
    m.avg_power = power_sum / static_cast<double>(n);

    for (int j = 0; j < k; ++j) {
        const auto& series = mse_series[static_cast<std::size_t>(j)];
        m.final_mse[static_cast<std::size_t>(j)] = series.back();
        if (grid) {
            const int decoded = grid->decode(decs[static_cast<std::size_t>(j)].estimate());
            m.grid_error[static_cast<std::size_t>(j)] =
                decoded != sent_index[static_cast<std::size_t>(j)];
        }
        if (n >= 4) {
            bool positive = true;
            for (int i = n / 2; i < n; ++i)
                if (!(series[static_cast<std::size_t>(i)] > 0.0)) positive = false;
            if (positive)
                m.exponent_est[static_cast<std::size_t>(j)] = mse_exponent_fit(series);
        }
    }
    return m;
}

namespace detail {
/// Pairwise sum in index order; associative reduction independent of the
/// degree of parallelism used to produce the values.
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_mean(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return pairwise_sum(v, 0, v.size()) / static_cast<double>(v.size());
}

inline double stderr_of_mean(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
    const double var = pairwise_sum(sq, 0, sq.size()) / static_cast<double>(v.size() - 1);
    return std::sqrt(var / static_cast<double>(v.size()));
}
} // namespace detail

struct EnsembleResult {
    std::uint64_t base_seed = 0;
    int trials = 0;
    double mean_power = 0.0;
    double stderr_power = 0.0;
    std::vector<double> mean_mse;          // per receiver
    std::vector<double> mean_exponent;     // per receiver
    std::vector<double> stderr_exponent;   // per receiver
    std::vector<double> grid_error_rate;   // per receiver (grid runs only)
    double max_identity_residual = 0.0;
    std::vector<TrialMetrics> per_trial;
};

/// Runs `trials` independent trials keyed by (base_seed, trial index) on up
/// to `jobs` threads. The reduction walks trials in index order, so the
/// result is bit-identical for any parallelism degree.
inline EnsembleResult run_ensemble(const SystemSpec& spec, const LqgSolution& sol, int n,
                                   int trials, std::uint64_t base_seed, int jobs = 1,
                                   const MessageGrid* grid = nullptr,
                                   const TrialOptions& opts = {}) {
    if (trials < 1) throw std::invalid_argument("run_ensemble: need trials >= 1");
    const int k = spec.k();
    std::vector<TrialMetrics> results(static_cast<std::size_t>(trials));

    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int t = next.fetch_add(1);
            if (t >= trials || failed.load()) break;
            try {
                results[static_cast<std::size_t>(t)] =
                    run_trial(spec, sol, n, base_seed, static_cast<std::uint64_t>(t), grid, opts);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                failed.store(true);
                error_message = "trial " + std::to_string(t) + ": " + e.what();
            }
        }
    };

    jobs = std::max(1, std::min(jobs, trials));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw NumericalError("run_ensemble: " + error_message);

    EnsembleResult out;
    out.base_seed = base_seed;
    out.trials = trials;
    std::vector<double> powers(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t)
        powers[static_cast<std::size_t>(t)] = results[static_cast<std::size_t>(t)].avg_power;
    out.mean_power = detail::pairwise_mean(powers);
    out.stderr_power = detail::stderr_of_mean(powers, out.mean_power);

    out.mean_mse.assign(static_cast<std::size_t>(k), 0.0);
    out.mean_exponent.assign(static_cast<std::size_t>(k), 0.0);
    out.stderr_exponent.assign(static_cast<std::size_t>(k), 0.0);
    out.grid_error_rate.assign(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < k; ++j) {
        std::vector<double> mses(static_cast<std::size_t>(trials));
        std::vector<double> exps;
        exps.reserve(static_cast<std::size_t>(trials));
        double errors = 0.0;
        for (int t = 0; t < trials; ++t) {
            const auto& m = results[static_cast<std::size_t>(t)];
            mses[static_cast<std::size_t>(t)] = m.final_mse[static_cast<std::size_t>(j)];
            if (std::isfinite(m.exponent_est[static_cast<std::size_t>(j)]))
                exps.push_back(m.exponent_est[static_cast<std::size_t>(j)]);
            if (grid && m.grid_error[static_cast<std::size_t>(j)]) errors += 1.0;
            out.max_identity_residual =
                std::max(out.max_identity_residual, m.max_identity_residual);
        }
        out.mean_mse[static_cast<std::size_t>(j)] = detail::pairwise_mean(mses);
        out.mean_exponent[static_cast<std::size_t>(j)] = detail::pairwise_mean(exps);
        out.stderr_exponent[static_cast<std::size_t>(j)] =
            detail::stderr_of_mean(exps, out.mean_exponent[static_cast<std::size_t>(j)]);
        out.grid_error_rate[static_cast<std::size_t>(j)] =
            errors / static_cast<double>(trials);
    }
    out.per_trial = std::move(results);
    return out;
}

// ---------------------------------------------------------------------------
// Real-channel ensembles: point-to-point and the OL comparison
// ---------------------------------------------------------------------------

struct P2pEnsemble {
    std::vector<std::vector<double>> x_traces;
    std::vector<std::vector<double>> y_traces;
    std::vector<double> final_mse;
    double mean_power = 0.0;
};

inline P2pEnsemble run_p2p_ensemble(double a, int n, int trials, std::uint64_t base_seed) {
    P2pEnsemble out;
    out.x_traces.resize(static_cast<std::size_t>(trials));
    out.y_traces.resize(static_cast<std::size_t>(trials));
    out.final_mse.resize(static_cast<std::size_t>(trials));
    std::vector<double> powers(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        Rng rng(base_seed, static_cast<std::uint64_t>(t));
        const double theta = rng.uniform01();
        P2pEncoder enc(a, theta);
        P2pDecoder dec(a);
        auto& xs = out.x_traces[static_cast<std::size_t>(t)];
        auto& ys = out.y_traces[static_cast<std::size_t>(t)];
        double p = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = enc.transmit();
            const double y = x + rng.normal();
            xs.push_back(x);
            ys.push_back(y);
            p += x * x;
            enc.observe(y);
            dec.observe(y);
        }
        const double err = theta - dec.estimate();
        out.final_mse[static_cast<std::size_t>(t)] = err * err;
        powers[static_cast<std::size_t>(t)] = p / static_cast<double>(n);
    }
    out.mean_power = detail::pairwise_mean(powers);
    return out;
}

struct OlComparison {
    double ol_mean_power = 0.0;
    double ol_stderr = 0.0;
    double lqg_mean_power = 0.0;
    double lqg_stderr = 0.0;
    double lqg_nominal_power = 0.0; // tr(G) from the solver
    // paired per-trial difference (shared noise): much tighter than the
    // unpaired comparison for the same trial budget
    double diff_mean = 0.0;
    double diff_stderr = 0.0;
};

/// OL code vs the LQG code at the common rate pair (log a, log a): both run
/// the real two-receiver channel with independent unit noises and shared
/// per-trial noise realizations.
inline OlComparison run_ol_comparison(double a, int n, int trials, std::uint64_t base_seed) {
    SystemSpec spec;
    spec.modes = {Complex(a, 0.0), Complex(-a, 0.0)};
    spec.noise_cov = CMatrix::Identity(2, 2);
    const LqgSolution sol = solve(spec);
    const double c1 = sol.gain(0).real();
    const double c2 = sol.gain(1).real();

    OlComparison out;
    out.lqg_nominal_power = sol.power;
    std::vector<double> ol_powers(static_cast<std::size_t>(trials));
    std::vector<double> lqg_powers(static_cast<std::size_t>(trials));
    // first half of the horizon is transient; average power over the rest
    const int warmup = n / 2;
    for (int t = 0; t < trials; ++t) {
        Rng rng(base_seed, static_cast<std::uint64_t>(t));
        const double th1 = rng.uniform01() - 0.5;
        const double th2 = rng.uniform01() - 0.5;
        OlCode ol(a, th1, th2);
        double s1 = th1, s2 = th2; // LQG states
        double ol_p = 0.0, lqg_p = 0.0;
        for (int i = 0; i < n; ++i) {
            const double z1 = rng.normal();
            const double z2 = rng.normal();

            const double xo = ol.transmit();
            ol.observe(xo + z1, xo + z2);

            const double xl = -(c1 * s1 + c2 * s2);
            const double y1 = xl + z1;
            const double y2 = xl + z2;
            s1 = a * s1 + y1;
            s2 = -a * s2 + y2;

            if (i >= warmup) {
                ol_p += xo * xo;
                lqg_p += xl * xl;
            }
        }
        const double steps = static_cast<double>(n - warmup);
        ol_powers[static_cast<std::size_t>(t)] = ol_p / steps;
        lqg_powers[static_cast<std::size_t>(t)] = lqg_p / steps;
    }
    out.ol_mean_power = detail::pairwise_mean(ol_powers);
    out.ol_stderr = detail::stderr_of_mean(ol_powers, out.ol_mean_power);
    out.lqg_mean_power = detail::pairwise_mean(lqg_powers);
    out.lqg_stderr = detail::stderr_of_mean(lqg_powers, out.lqg_mean_power);
    std::vector<double> diffs(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t)
        diffs[static_cast<std::size_t>(t)] = ol_powers[static_cast<std::size_t>(t)] -
                                             lqg_powers[static_cast<std::size_t>(t)];
    out.diff_mean = detail::pairwise_mean(diffs);
    out.diff_stderr = detail::stderr_of_mean(diffs, out.diff_mean);
    return out;
}

} // namespace lqgbc
