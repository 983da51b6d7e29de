// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lqgbc/simulator.hpp"

#include <cmath>

using namespace lqgbc;

TEST_CASE("channel is purely additive when the noise is stubbed out") {
    const SystemSpec spec = SystemSpec::symmetric(2, std::sqrt(2.0));
    ChannelInstance ch(spec.noise_cov, 1, 0, /*zero_noise=*/true);
    const Complex x(0.3, -0.7);
    const CVector y = ch.output(x);
    CHECK(y(0) == x);
    CHECK(y(1) == x);
}

TEST_CASE("empirical noise covariance matches K_z") {
    CMatrix kz(2, 2);
    kz << Complex(1, 0), Complex(-0.6, 0.2), Complex(-0.6, -0.2), Complex(1, 0);
    ChannelInstance ch(kz, 7, 3);
    const int trials = 50000;
    CMatrix acc = CMatrix::Zero(2, 2);
    for (int t = 0; t < trials; ++t) {
        const CVector z = ch.output(0.0);
        acc += z * z.adjoint();
    }
    acc /= static_cast<double>(trials);
    // 5 sigma on entries of a 50k-sample covariance estimate
    CHECK((acc - kz).cwiseAbs().maxCoeff() <= 5.0 * 2.0 / std::sqrt(static_cast<double>(trials)));
}

TEST_CASE("exponent fit on exact geometric decay") {
    const double loga = std::log(2.0);
    std::vector<double> d;
    for (int i = 1; i <= 40; ++i) d.push_back(std::exp(-2.0 * i * loga));
    CHECK(std::abs(mse_exponent_fit(d) - loga) <= 1e-12);
    SUBCASE("zero entries rejected") {
        d[30] = 0.0;
        CHECK_THROWS(mse_exponent_fit(d));
    }
}

TEST_CASE("zero-noise trial decodes exactly") {
    const SystemSpec spec = SystemSpec::symmetric(2, std::sqrt(2.0));
    const auto sol = solve(spec);
    TrialOptions opts;
    opts.zero_noise = true;
    const MessageGrid grid(0.4, 10);
    const auto m = run_trial(spec, sol, 20, 1, 0, &grid, opts);
    // roundoff floor after 20 complex recursion steps, not exact zero
    CHECK(m.final_mse[0] <= 1e-12);
    CHECK(m.final_mse[1] <= 1e-12);
    CHECK_FALSE(m.grid_error[0]);
    CHECK_FALSE(m.grid_error[1]);
}

TEST_CASE("trial rejects underflowing horizons") {
    const SystemSpec spec = SystemSpec::symmetric(1, 2.0);
    const auto sol = solve(spec);
    CHECK_THROWS(run_trial(spec, sol, 500, 1, 0));
}

TEST_CASE("single-trial ensemble equals the trial") {
    const SystemSpec spec = SystemSpec::symmetric(2, std::sqrt(2.0));
    const auto sol = solve(spec);
    const auto m = run_trial(spec, sol, 50, 33, 0);
    const auto e = run_ensemble(spec, sol, 50, 1, 33);
    CHECK(e.mean_power == m.avg_power);
    CHECK(e.mean_mse[0] == m.final_mse[0]);
    CHECK(e.mean_mse[1] == m.final_mse[1]);
}

TEST_CASE("ensembles are bit-identical across parallelism degrees") {
    const SystemSpec spec = SystemSpec::symmetric(2, std::sqrt(2.0));
    const auto sol = solve(spec);
    const auto e1 = run_ensemble(spec, sol, 60, 64, 77, 1);
    const auto e8 = run_ensemble(spec, sol, 60, 64, 77, 8);
    CHECK(e1.mean_power == e8.mean_power);
    CHECK(e1.stderr_power == e8.stderr_power);
    CHECK(e1.mean_mse[0] == e8.mean_mse[0]);
    CHECK(e1.mean_exponent[1] == e8.mean_exponent[1]);
}

TEST_CASE("symmetric receivers agree within ensemble error") {
    const SystemSpec spec = SystemSpec::symmetric(2, std::sqrt(2.0));
    const auto sol = solve(spec);
    const auto e = run_ensemble(spec, sol, 30, 2000, 5, 4);
    const double sep = std::abs(e.mean_exponent[0] - e.mean_exponent[1]);
    const double band = 3.0 * (e.stderr_exponent[0] + e.stderr_exponent[1]);
    CHECK(sep <= band);
    CHECK(e.max_identity_residual <= 1e-9);
}

TEST_CASE("scalar exponent approaches log a") {
    const SystemSpec spec = SystemSpec::symmetric(1, 2.0);
    const auto sol = solve(spec);
    const auto e = run_ensemble(spec, sol, 20, 3000, 11, 4);
    CHECK(std::abs(e.mean_exponent[0] - std::log(2.0)) <= 0.1 * std::log(2.0));
}

TEST_CASE("power converges to tr(G K_z)") {
    const SystemSpec spec = SystemSpec::symmetric(2, std::sqrt(2.0));
    const auto sol = solve(spec);
    const auto e = run_ensemble(spec, sol, 300, 1000, 21, 4);
    CHECK(std::abs(e.mean_power - 2.25) <= 0.02 * 2.25);
}

TEST_CASE("error decay is log-linear in the horizon") {
    const SystemSpec spec = SystemSpec::symmetric(1, 2.0);
    const auto sol = solve(spec);
    const auto e20 = run_ensemble(spec, sol, 20, 2000, 3, 4);
    const auto e40 = run_ensemble(spec, sol, 40, 2000, 3, 4);
    // doubling n should roughly square the MSE
    const double slope = std::log(e40.mean_mse[0] / e20.mean_mse[0]) / (2.0 * 20.0);
    CHECK(std::abs(-slope - std::log(2.0)) <= 0.15 * std::log(2.0));
}

TEST_CASE("p2p ensemble sk ratio and power") {
    const double a = std::sqrt(2.0);
    const auto ens = run_p2p_ensemble(a, 200, 2000, 9);
    const auto ratios = sk_coefficient_track(ens.x_traces, ens.y_traces);
    CHECK(std::abs(ratios.back() - 0.5) <= 0.03);
    CHECK(std::abs(ens.mean_power - (a * a - 1.0)) <= 0.05);
}

TEST_CASE("OL needs more power than LQG at equal rates") {
    const auto cmp = run_ol_comparison(std::sqrt(2.0), 200, 500, 13);
    CHECK(std::abs(cmp.lqg_nominal_power - 2.25) <= 1e-8);
    CHECK(std::abs(cmp.lqg_mean_power - 2.25) <= 0.1);
    CHECK(cmp.diff_mean > 3.0 * cmp.diff_stderr);
}

TEST_CASE("grid decoding respects the Chebyshev bound") {
    const double a = std::sqrt(2.0);
    const SystemSpec spec = SystemSpec::symmetric(2, a);
    const auto sol = solve(spec);
    const double rate = 0.8 * std::log(a); // per receiver, nats
    double prev_rate_err = 1.0;
    for (int n : {10, 20, 30}) {
        const MessageGrid grid(rate, n);
        const auto e = run_ensemble(spec, sol, n, 2000, 31, 4, &grid);
        for (int j = 0; j < 2; ++j) {
            const double bound = 4.0 * std::exp(2.0 * n * rate) * e.mean_mse[static_cast<std::size_t>(j)];
            CHECK(e.grid_error_rate[static_cast<std::size_t>(j)] <= std::max(bound, 1e-12) + 1e-12);
        }
        const double avg_err = 0.5 * (e.grid_error_rate[0] + e.grid_error_rate[1]);
        CHECK(avg_err <= prev_rate_err + 1e-12);
        prev_rate_err = avg_err;
    }
}
