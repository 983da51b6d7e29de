// SPDX-License-Identifier: Apache-2.0
//
// Command-line harness: solve broadcast instances, run Monte Carlo
// simulations, and evaluate the closed-form rate/power expressions. Emits
// CSV tables plus a JSON summary with the fully resolved configuration.
#include "CLI11.hpp"
#include "json.hpp"

#include "lqgbc/analysis.hpp"
#include "lqgbc/codes.hpp"
#include "lqgbc/simulator.hpp"
#include "lqgbc/solver.hpp"
#include "lqgbc/table.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using json = nlohmann::json;
using namespace lqgbc;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

/// "re", "re+imj", or "re-imj"
Complex parse_mode(const std::string& text) {
    std::string t = text;
    if (!t.empty() && t.back() == 'j') {
        t.pop_back();
        // split at the last +/- that is not a leading sign or exponent sign
        std::size_t pos = std::string::npos;
        for (std::size_t i = t.size(); i-- > 1;) {
            if ((t[i] == '+' || t[i] == '-') && t[i - 1] != 'e' && t[i - 1] != 'E') {
                pos = i;
                break;
            }
        }
        if (pos == std::string::npos) throw ConfigError("bad complex literal: " + text);
        try {
            return {std::stod(t.substr(0, pos)), std::stod(t.substr(pos))};
        } catch (const std::exception&) {
            throw ConfigError("bad complex literal: " + text);
        }
    }
    try {
        return {std::stod(t), 0.0};
    } catch (const std::exception&) {
        throw ConfigError("bad mode literal: " + text);
    }
}

/// First line k, then k rows of k entries, each entry "re imj".
CMatrix parse_cov_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open covariance file: " + path);
    int k = 0;
    if (!(in >> k) || k < 1) throw ConfigError("covariance file: bad dimension line");
    CMatrix cov(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            double re = 0.0;
            std::string imtok;
            if (!(in >> re >> imtok) || imtok.empty() || imtok.back() != 'j')
                throw ConfigError("covariance file: malformed entry at row " +
                                  std::to_string(i + 1));
            try {
                cov(i, j) = Complex(re, std::stod(imtok.substr(0, imtok.size() - 1)));
            } catch (const std::exception&) {
                throw ConfigError("covariance file: malformed imaginary part at row " +
                                  std::to_string(i + 1));
            }
        }
    return cov;
}

CMatrix make_covariance(const std::string& cov_arg, int k) {
    if (cov_arg == "identity") return CMatrix::Identity(k, k);
    if (cov_arg == "rank1") return rank_one_circulant_cov(k);
    if (cov_arg.rfind("rho=", 0) == 0) {
        double rho = 0.0;
        try {
            rho = std::stod(cov_arg.substr(4));
        } catch (const std::exception&) {
            throw ConfigError("bad --cov rho value");
        }
        CMatrix cov = CMatrix::Identity(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                if (i != j) cov(i, j) = rho;
        return cov;
    }
    if (cov_arg.rfind("rank=", 0) == 0) {
        int r = 0;
        try {
            r = std::stoi(cov_arg.substr(5));
        } catch (const std::exception&) {
            throw ConfigError("bad --cov rank value");
        }
        if (r < 1 || r > k) throw ConfigError("--cov rank out of range [1,k]");
        return rank_r_cov(k, r);
    }
    if (cov_arg.rfind("file=", 0) == 0) {
        const CMatrix cov = parse_cov_file(cov_arg.substr(5));
        if (cov.rows() != k)
            throw ConfigError("covariance file dimension does not match --k");
        return cov;
    }
    throw ConfigError("unknown --cov option: " + cov_arg);
}

struct Options {
    std::string command;
    int k = 1;
    double a = std::sqrt(2.0);
    std::string modes_arg;
    std::string cov_arg = "identity";
    int r = 1;
    int n = 100;
    int trials = 1000;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string units = "nats";
    std::string p_grid_arg;
    std::string a_grid_arg;
    double grid_rate = 0.0; // nats per complex use; 0 disables discrete messaging
    std::string out;
};

double rate_out(double nats, const Options& o) {
    return o.units == "bits" ? nats / std::numbers::ln2 : nats;
}

SystemSpec make_spec(const Options& o) {
    SystemSpec spec;
    if (!o.modes_arg.empty()) {
        for (const auto& tok : split(o.modes_arg, ',')) spec.modes.push_back(parse_mode(tok));
    } else {
        spec.modes = SystemSpec::symmetric(o.k, o.a).modes;
    }
    const int k = static_cast<int>(spec.modes.size());
    spec.noise_cov = make_covariance(o.cov_arg, k);
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

json resolved_config(const Options& o) {
    return json{{"command", o.command}, {"k", o.k},       {"a", o.a},
                {"modes", o.modes_arg}, {"cov", o.cov_arg}, {"r", o.r},
                {"n", o.n},             {"trials", o.trials}, {"seed", o.seed},
                {"jobs", o.jobs},       {"units", o.units}, {"P", o.p_grid_arg},
                {"agrid", o.a_grid_arg}, {"rate", o.grid_rate}, {"out", o.out}};
}

void emit(const Options& o, const ResultTable& table, json summary) {
    summary["config"] = resolved_config(o);
    if (o.out.empty()) {
        std::cout << table.to_csv();
        return;
    }
    table.write_csv(o.out);
    std::filesystem::path jpath(o.out);
    jpath.replace_extension(".json");
    ResultTable::write_atomic(jpath, summary.dump(2) + "\n");
}

void add_matrix_rows(ResultTable& table, const std::string& name, const CMatrix& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            table.add_row({name, static_cast<long long>(i + 1), static_cast<long long>(j + 1),
                           m(i, j).real(), m(i, j).imag()});
}

int cmd_solve(const Options& o) {
    const SystemSpec spec = make_spec(o);
    const LqgSolution sol = solve(spec);
    const CMatrix a = spec.open_loop();
    const CVector b = spec.input_map();
    const double margin = 1.0 - spectral_radius(a - b * sol.gain);

    ResultTable table({"quantity", "row", "col", "re", "im"});
    add_matrix_rows(table, "G", sol.riccati);
    add_matrix_rows(table, "C", sol.gain);
    add_matrix_rows(table, "K_s", sol.state_cov);
    table.add_row({std::string("power"), 1LL, 1LL, sol.power, 0.0});
    table.add_row({std::string("stability_margin"), 1LL, 1LL, margin, 0.0});

    json summary{{"power", sol.power},
                 {"stability_margin", margin},
                 {"dare_residual", dare_residual(sol.riccati, a, b)},
                 {"rates", json::array()}};
    for (const auto& mode : spec.modes)
        summary["rates"].push_back(rate_out(std::log(std::abs(mode)), o));
    emit(o, table, summary);
    return 0;
}

std::vector<double> parse_grid(const std::string& arg, const char* what) {
    std::vector<double> vals;
    for (const auto& tok : split(arg, ',')) {
        try {
            vals.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError(std::string("bad ") + what + " value: " + tok);
        }
    }
    if (vals.empty()) throw ConfigError(std::string("empty ") + what + " grid");
    return vals;
}

int cmd_phi(const Options& o) {
    const auto grid = parse_grid(o.p_grid_arg.empty() ? "1" : o.p_grid_arg, "--P");
    ResultTable table({"k", "P", "phi", "R", "R_mac_dual", "duality_residual"});
    for (double p : grid) {
        if (p <= 0.0) throw ConfigError("--P values must be positive");
        table.add_row({static_cast<long long>(o.k), p, phi(o.k, p), rate_out(sum_rate(o.k, p), o),
                       rate_out(mac_sum_rate(o.k, p / o.k), o), duality_check(o.k, p)});
    }
    emit(o, table, json{{"points", grid.size()}});
    return 0;
}

int cmd_sweep(const Options& o) {
    const auto grid = parse_grid(o.p_grid_arg.empty() ? "0.1,1,10,100" : o.p_grid_arg, "--P");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1]) throw ConfigError("--P grid must be strictly ascending");
    ResultTable table({"P", "phi", "R", "R_no_feedback", "gain"});
    for (double p : grid) {
        if (p <= 0.0) throw ConfigError("--P values must be positive");
        const double g = phi(o.k, p);
        table.add_row({p, g, rate_out(sum_rate(o.k, p), o),
                       rate_out(0.5 * std::log1p(p), o), g});
    }
    emit(o, table, json{{"k", o.k}, {"points", grid.size()}});
    return 0;
}

int cmd_simulate(const Options& o) {
    const SystemSpec spec = make_spec(o);
    const LqgSolution sol = solve(spec);
    std::optional<MessageGrid> grid;
    if (o.grid_rate > 0.0) grid.emplace(o.grid_rate, o.n);

    const EnsembleResult e = run_ensemble(spec, sol, o.n, o.trials, o.seed, o.jobs,
                                          grid ? &*grid : nullptr);
    ResultTable table({"receiver", "n", "trials", "avg_power", "stderr_power", "mean_mse",
                       "exponent", "stderr_exponent", "rate_nominal", "grid_error_rate"});
    for (int j = 0; j < spec.k(); ++j) {
        table.add_row({static_cast<long long>(j + 1), static_cast<long long>(o.n),
                       static_cast<long long>(o.trials), e.mean_power, e.stderr_power,
                       e.mean_mse[static_cast<std::size_t>(j)],
                       e.mean_exponent[static_cast<std::size_t>(j)],
                       e.stderr_exponent[static_cast<std::size_t>(j)],
                       rate_out(std::log(std::abs(spec.modes[static_cast<std::size_t>(j)])), o),
                       grid ? e.grid_error_rate[static_cast<std::size_t>(j)] : 0.0});
    }
    json summary{{"trials", e.trials},
                 {"base_seed", e.base_seed},
                 {"mean_power", e.mean_power},
                 {"nominal_power", sol.power},
                 {"max_identity_residual", e.max_identity_residual}};
    emit(o, table, summary);
    return 0;
}

int cmd_prelog(const Options& o) {
    const auto grid = parse_grid(o.a_grid_arg.empty() ? "1.5,2,5,10" : o.a_grid_arg, "--agrid");
    const PrelogExperiment exp = prelog_achieved(o.k, o.r, grid);
    ResultTable table({"a", "R", "P", "ratio", "limit"});
    for (const auto& pt : exp.points)
        table.add_row({pt.a, rate_out(pt.rate, o), pt.power, pt.ratio,
                       static_cast<long long>(exp.effective_k)});
    json summary{{"k", exp.k}, {"r", exp.r}, {"effective_k", exp.effective_k}};
    emit(o, table, summary);
    return 0;
}

int cmd_compare_ol(const Options& o) {
    const OlComparison cmp = run_ol_comparison(o.a, o.n, o.trials, o.seed);
    const double b = (std::pow(o.a, 4) - 1.0) / (2.0 * std::pow(o.a, 3));
    ResultTable table({"a", "ol_power", "ol_stderr", "lqg_power", "lqg_stderr",
                       "lqg_nominal", "diff_mean", "diff_stderr", "separation_sigma",
                       "ol_form_coeff", "coeff_limit"});
    table.add_row({o.a, cmp.ol_mean_power, cmp.ol_stderr, cmp.lqg_mean_power, cmp.lqg_stderr,
                   cmp.lqg_nominal_power, cmp.diff_mean, cmp.diff_stderr,
                   cmp.diff_stderr > 0.0 ? cmp.diff_mean / cmp.diff_stderr : 0.0,
                   lqg_ol_form_coefficient(o.a, b), b / o.a});
    emit(o, table, json{{"trials", o.trials}, {"n", o.n}, {"seed", o.seed}});
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LQG feedback codes for the Gaussian broadcast channel"};
    app.set_config("--config");
    Options o;

    app.require_subcommand(1);
    std::map<std::string, std::function<int(const Options&)>> dispatch;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--k", o.k, "receiver count");
        sub->add_option("--a", o.a, "symmetric mode radius (a > 1)");
        sub->add_option("--modes", o.modes_arg, "explicit modes, comma-separated re+imj");
        sub->add_option("--cov", o.cov_arg,
                        "identity | rho=<r> | rank1 | rank=<r> | file=<path>");
        sub->add_option("--r", o.r, "covariance rank for prelog");
        sub->add_option("--n", o.n, "horizon (channel uses)");
        sub->add_option("--trials", o.trials, "Monte Carlo trials");
        sub->add_option("--seed", o.seed, "base seed");
        sub->add_option("--jobs", o.jobs, "worker threads");
        sub->add_option("--units", o.units, "nats | bits")
            ->check(CLI::IsMember({"nats", "bits"}));
        sub->add_option("--P", o.p_grid_arg, "power grid, comma-separated");
        sub->add_option("--agrid", o.a_grid_arg, "mode-radius grid, comma-separated");
        sub->add_option("--rate", o.grid_rate, "discrete message rate (nats/complex use)");
        sub->add_option("--out", o.out, "CSV output path (JSON summary written next to it)");
    };
    for (auto [name, fn] : std::initializer_list<
             std::pair<const char*, int (*)(const Options&)>>{{"solve", cmd_solve},
                                                              {"simulate", cmd_simulate},
                                                              {"phi", cmd_phi},
                                                              {"sweep", cmd_sweep},
                                                              {"prelog", cmd_prelog},
                                                              {"compare-ol", cmd_compare_ol}}) {
        add_common(app.add_subcommand(name));
        dispatch[name] = fn;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    o.command = command;
    try {
        return dispatch.at(command)(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
}
