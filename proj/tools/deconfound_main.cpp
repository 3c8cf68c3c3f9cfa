// Command-line front end: parse configs, dispatch runs, emit artifacts and
// bundle reproduction presets.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dts/config.hpp"

namespace fs = std::filesystem;
using dts::Json;

namespace {

#ifndef DTS_BUILD_ID
#define DTS_BUILD_ID "dev"
#endif

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<long> reps;
    std::optional<int> parallelism;
};

int env_parallelism_fallback() {
    if (const char* env = std::getenv("DECONFOUND_PARALLELISM")) {
        return std::max(1, std::atoi(env));
    }
    return 1;
}

// CLI flags become overrides so the config is validated exactly once and the
// echoed document already reflects them.
void fold_flags_into_overrides(CommonArgs& args) {
    if (args.seed) args.overrides.push_back("seed=" + std::to_string(*args.seed));
    if (args.reps) args.overrides.push_back("reps=" + std::to_string(*args.reps));
    const int par = args.parallelism ? *args.parallelism : env_parallelism_fallback();
    args.overrides.push_back("parallelism=" + std::to_string(par));
}

void write_json(const fs::path& path, const Json& doc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << doc.dump(2) << "\n";
}

void echo_config(const fs::path& dir, const Json& resolved) {
    write_json(dir / "config_resolved.json", resolved);
}

fs::path ensure_out_dir(const std::string& dir) {
    if (dir.empty()) throw std::invalid_argument("this command needs --out");
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

Json root_doc(const Json& resolved) {
    return Json{{"schema_version", 1}, {"build_id", DTS_BUILD_ID}, {"config", resolved}};
}

dts::StudySpec study_from_config(const dts::StudyConfig& cfg) {
    dts::StudySpec spec;
    spec.instance = cfg.instance;
    spec.process = cfg.process;
    spec.episode = cfg.episode;
    spec.truth_sampler = cfg.truth_sampler;
    spec.n_reps = cfg.n_reps;
    spec.base_seed = cfg.seed;
    spec.parallelism = cfg.parallelism;
    return spec;
}

int cmd_run(const CommonArgs& args) {
    dts::StudyConfig cfg = dts::load_config(args.config_path, args.overrides);
    dts::RunSummary summary = dts::monte_carlo(study_from_config(cfg));

    Json doc = root_doc(cfg.resolved);
    doc["summary"] = dts::summary_to_json(summary, cfg.instance.k);

    const fs::path out = ensure_out_dir(args.out_dir);
    echo_config(out, cfg.resolved);
    write_json(out / "summary.json", doc);
    if (!summary.first_trace.periods.empty()) {
        dts::write_trace_csv((out / "trace.csv").string(), summary.first_trace, cfg.instance.k);
    }
    std::cout << "reps=" << summary.n_reps << " regret_mean=" << summary.regret.mean
              << " tau_mean=" << summary.tau.mean << "\n";
    return 0;
}

int cmd_sweep(const CommonArgs& args) {
    dts::StudyConfig cfg = dts::load_config(args.config_path, args.overrides);
    if (cfg.sweep_costs.empty()) {
        throw std::invalid_argument("sweep.c_values missing from config");
    }
    dts::ThresholdMode mode = dts::ThresholdMode::ZPlusSqrt;
    long max_horizon = 1000000;
    if (cfg.episode.stopping) {
        mode = cfg.episode.stopping->mode;
        max_horizon = cfg.episode.stopping->max_horizon;
    }
    auto rows = dts::cost_sweep(cfg.instance, cfg.process, cfg.episode.policy, cfg.truth_sampler,
                                cfg.sweep_costs, cfg.n_reps, cfg.seed, mode, max_horizon,
                                cfg.parallelism);

    Json doc = root_doc(cfg.resolved);
    doc["sweep"] = dts::cost_sweep_to_json(rows);
    const fs::path out = ensure_out_dir(args.out_dir);
    echo_config(out, cfg.resolved);
    write_json(out / "sweep.json", doc);
    for (const auto& row : rows) {
        std::cout << "c=" << row.c << " tau=" << row.tau.mean << " regret=" << row.regret.mean
                  << " cost=" << row.cost.mean << " normalized=" << row.normalized_cost << "\n";
    }
    return 0;
}

int cmd_solve_allocation(const CommonArgs& args) {
    dts::StudyConfig cfg = dts::load_config(args.config_path, args.overrides);
    const dts::Vector truth = cfg.truth_sampler(cfg.seed);
    dts::Vector means(cfg.instance.k);
    for (int i = 0; i < cfg.instance.k; ++i) {
        means[i] = dts::population_mean(truth, i, cfg.instance.population);
    }
    const dts::Matrix lambda = cfg.process.second_moment();
    const dts::Vector& x_pop = cfg.instance.population.x_pop;
    const double scale =
        cfg.instance.prior.noise_variance * x_pop.dot(lambda.ldlt().solve(x_pop));

    const dts::AllocationSolution sol = dts::solve_p_star(means, scale);
    dts::Instance with_truth = cfg.instance;
    with_truth.truth = truth;
    const dts::EquilibriumCertificate cert = dts::verify_equilibrium(with_truth, lambda, sol);

    Json doc = root_doc(cfg.resolved);
    doc["allocation"] = dts::allocation_to_json(sol);
    doc["equilibrium_certificate"] = dts::certificate_to_json(cert);
    doc["scale"] = scale;
    std::cout << doc.dump(2) << "\n";
    if (!args.out_dir.empty()) {
        const fs::path out = ensure_out_dir(args.out_dir);
        echo_config(out, cfg.resolved);
        write_json(out / "allocation.json", doc);
    }
    return 0;
}

int cmd_diagnose(const CommonArgs& args) {
    dts::StudyConfig cfg = dts::load_config(args.config_path, args.overrides);
    const dts::Vector truth = cfg.truth_sampler(cfg.seed);

    dts::Vector means(cfg.instance.k);
    for (int i = 0; i < cfg.instance.k; ++i) {
        means[i] = dts::population_mean(truth, i, cfg.instance.population);
    }
    const dts::Matrix lambda = cfg.process.second_moment();
    const dts::Vector& x_pop = cfg.instance.population.x_pop;
    const double scale =
        cfg.instance.prior.noise_variance * x_pop.dot(lambda.ldlt().solve(x_pop));
    const dts::AllocationSolution sol = dts::solve_p_star(means, scale);

    dts::StudySpec spec = study_from_config(cfg);
    spec.truth_sampler = dts::fixed_truth(truth);
    spec.reference_proportions = sol.p_star;
    dts::RunSummary summary = dts::monte_carlo(spec);

    Json doc = root_doc(cfg.resolved);
    doc["allocation"] = dts::allocation_to_json(sol);
    doc["summary"] = dts::summary_to_json(summary, cfg.instance.k);
    Json table = Json::array();
    for (const auto& row : dts::convergence_diagnostics(summary, sol)) {
        Json r{{"t", row.t}, {"exponent_ratio", row.exponent_ratio}};
        if (std::isfinite(row.exponent_mean)) r["exponent_mean"] = row.exponent_mean;
        if (row.p_abs_err.size() > 0) {
            Json err = Json::array();
            for (Eigen::Index i = 0; i < row.p_abs_err.size(); ++i) err.push_back(row.p_abs_err[i]);
            r["p_abs_err"] = err;
        }
        table.push_back(std::move(r));
        std::cout << "t=" << row.t << " exponent_ratio=" << row.exponent_ratio << "\n";
    }
    doc["convergence"] = std::move(table);

    if (!args.out_dir.empty()) {
        const fs::path out = ensure_out_dir(args.out_dir);
        echo_config(out, cfg.resolved);
        write_json(out / "diagnostics.json", doc);
    }
    return 0;
}

int cmd_validate(const CommonArgs& args) {
    dts::StudyConfig cfg = dts::load_config(args.config_path, args.overrides);
    const long T = cfg.episode.horizon ? *cfg.episode.horizon : 1000;
    std::cout << "OK\n" << dts::describe_config(cfg, T).dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Reproduction presets

Json preset_doc(const std::string& name, std::uint64_t seed, long reps, int parallelism) {
    return Json{{"preset", name}, {"seed", seed}, {"reps", reps}, {"parallelism", parallelism}};
}

void run_policy_pair(const dts::Environment& env, long horizon, std::uint64_t seed, long reps,
                     int parallelism, const std::vector<dts::PolicyKind>& kinds,
                     const fs::path& out, Json& doc) {
    for (dts::PolicyKind kind : kinds) {
        dts::StudySpec spec;
        spec.instance = env.instance;
        spec.process = env.process;
        spec.episode.policy.kind = kind;
        spec.episode.horizon = horizon;
        spec.episode.record_periods = true;
        spec.truth_sampler = dts::prior_truth(env.instance);
        spec.n_reps = reps;
        spec.base_seed = seed;
        spec.parallelism = parallelism;
        dts::RunSummary summary = dts::monte_carlo(spec);
        const std::string name = dts::policy_name(kind);
        doc["summaries"][name] = dts::summary_to_json(summary, env.instance.k);
        dts::write_trace_csv((out / ("trace_" + name + ".csv")).string(), summary.first_trace,
                             env.instance.k);
        std::cout << name << ": regret_mean=" << summary.regret.mean << " +-"
                  << summary.regret.ci_half_width << "\n";
    }
}

int cmd_reproduce(const std::string& preset, const CommonArgs& args) {
    const std::uint64_t seed = args.seed.value_or(0);
    const int parallelism = args.parallelism ? *args.parallelism : env_parallelism_fallback();
    const fs::path out = ensure_out_dir(args.out_dir);

    if (preset == "counterexample-l1" || preset == "counterexample-l2") {
        const long reps = args.reps.value_or(500);
        const long horizon = 1000;
        Json doc = root_doc(preset_doc(preset, seed, reps, parallelism));
        dts::Environment env = dts::make_counterexample_instance(horizon);
        const std::vector<dts::PolicyKind> kinds =
            preset == "counterexample-l1"
                ? std::vector<dts::PolicyKind>{dts::PolicyKind::NaiveTs, dts::PolicyKind::Dts}
                : std::vector<dts::PolicyKind>{dts::PolicyKind::DeconfoundedUcb,
                                               dts::PolicyKind::Dts};
        run_policy_pair(env, horizon, seed, reps, parallelism, kinds, out, doc);
        echo_config(out, doc["config"]);
        write_json(out / "summary.json", doc);
        return 0;
    }
    if (preset == "day-of-week") {
        const long reps = args.reps.value_or(500);
        const int m = 10;
        dts::Environment env = dts::make_day_of_week_instance(2, m, 7, 1.0);
        const long horizon = 7L * m;
        Json doc = root_doc(preset_doc(preset, seed, reps, parallelism));

        dts::StudySpec spec;
        spec.instance = env.instance;
        spec.process = env.process;
        spec.episode.policy.kind = dts::PolicyKind::Dts;
        spec.episode.horizon = horizon;
        spec.episode.record_periods = true;
        spec.truth_sampler = dts::prior_truth(env.instance);
        spec.n_reps = reps;
        spec.base_seed = seed;
        spec.parallelism = parallelism;
        dts::RunSummary summary = dts::monte_carlo(spec);

        std::vector<dts::Vector> contexts;
        dts::Rng dummy(0);
        for (long t = 1; t <= horizon; ++t) contexts.push_back(env.process.step(t, dummy));
        const double V = dts::info_measure_V(contexts, env.instance.joint_prior_covariance()
                                                          .topLeftCorner(7, 7),
                                             1.0, env.instance.population.x_pop);
        const double bound =
            dts::prop1_bound(2, 7, horizon, env.instance.joint_prior_covariance().topLeftCorner(7, 7), V);

        doc["summary"] = dts::summary_to_json(summary, env.instance.k);
        doc["bounds"] = Json{{"V", V},
                             {"iota", dts::iota_factor(7, horizon,
                                                       env.instance.joint_prior_covariance()
                                                           .topLeftCorner(7, 7))},
                             {"regret_bound_logk", bound}};
        dts::write_trace_csv((out / "trace_dts.csv").string(), summary.first_trace,
                             env.instance.k);
        echo_config(out, doc["config"]);
        write_json(out / "summary.json", doc);
        std::cout << "regret_mean=" << summary.regret.mean << " bound=" << bound << "\n";
        return 0;
    }
    if (preset == "latent-kappa1000" || preset == "latent-kappa10000") {
        const long reps = args.reps.value_or(5);
        const double kappa = preset == "latent-kappa1000" ? 1000.0 : 10000.0;
        const long horizon = 1000;
        dts::Environment env = dts::make_latent_confounder_instance(horizon, 1.0, 1.0, kappa, true);
        Json doc = root_doc(preset_doc(preset, seed, reps, parallelism));

        dts::StudySpec spec;
        spec.instance = env.instance;
        spec.process = env.process;
        spec.episode.policy.kind = dts::PolicyKind::Dts;
        spec.episode.horizon = horizon;
        spec.episode.record_periods = true;
        spec.episode.compute_alpha = false;
        spec.truth_sampler = [horizon, kappa](std::uint64_t s) {
            return dts::latent_confounder_truth(horizon, 1.0, 1.0, kappa, true, s);
        };
        spec.n_reps = reps;
        spec.base_seed = seed;
        spec.parallelism = parallelism;
        dts::RunSummary summary = dts::monte_carlo(spec);

        doc["summary"] = dts::summary_to_json(summary, env.instance.k);
        dts::write_trace_csv((out / "trace_dts.csv").string(), summary.first_trace,
                             env.instance.k);
        echo_config(out, doc["config"]);
        write_json(out / "summary.json", doc);
        std::cout << "regret_mean=" << summary.regret.mean << "\n";
        return 0;
    }
    if (preset == "mainstream") {
        const long reps = args.reps.value_or(500);
        const long horizon = 10000;
        const long burnin = 50;
        Json doc = root_doc(preset_doc(preset, seed, reps, parallelism));

        std::vector<double> regrets;
        double arm3_after = 0.0;
        for (long r = 0; r < reps; ++r) {
            const auto ep = dts::run_mainstream_episode(horizon, burnin,
                                                        dts::replication_seed(seed, r));
            regrets.push_back(ep.regret);
            arm3_after += ep.periods_after > 0 ? static_cast<double>(ep.arm3_plays_after) /
                                                     static_cast<double>(ep.periods_after)
                                               : 0.0;
        }
        const dts::Stat regret = dts::summarize(regrets);
        doc["summary"] = Json{{"regret_mean", regret.mean},
                              {"regret_ci_half_width", regret.ci_half_width},
                              {"arm3_frequency_after_burnin", arm3_after / reps},
                              {"horizon", horizon},
                              {"burnin", burnin}};
        echo_config(out, doc["config"]);
        write_json(out / "summary.json", doc);
        std::cout << "regret_mean=" << regret.mean
                  << " arm3_freq=" << (arm3_after / reps) << "\n";
        return 0;
    }
    throw std::invalid_argument(
        "unknown preset: " + preset +
        " (known: counterexample-l1, counterexample-l2, day-of-week, latent-kappa1000, "
        "latent-kappa10000, mainstream)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian linear contextual bandit experiments with population-level "
                 "decision objectives"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string preset;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config) {
            cmd->add_option("-c,--config", args.config_path, "config file (JSON)")->required();
        }
        cmd->add_option("-o,--out", args.out_dir, "output directory");
        cmd->add_option("--seed", args.seed, "base seed; all randomness derives from it");
        cmd->add_option("--reps", args.reps, "replication count");
        cmd->add_option("--parallelism", args.parallelism,
                        "worker threads (env DECONFOUND_PARALLELISM as fallback)");
        cmd->add_option("--set", args.overrides, "override, dotted-key=value (repeatable)");
    };

    CLI::App* run = app.add_subcommand("run", "run a Monte Carlo study from a config");
    add_common(run, true);
    CLI::App* sweep = app.add_subcommand("sweep", "cost-objective sweep over c values");
    add_common(sweep, true);
    CLI::App* alloc = app.add_subcommand("solve-allocation",
                                         "optimal proportions, exponent and certificate");
    add_common(alloc, true);
    CLI::App* diag = app.add_subcommand("diagnose", "convergence diagnostics against p*");
    add_common(diag, true);
    CLI::App* validate = app.add_subcommand("validate-config", "validate and describe a config");
    add_common(validate, true);
    CLI::App* repro = app.add_subcommand("reproduce", "run a named reproduction preset");
    repro->add_option("preset", preset, "preset name")->required();
    add_common(repro, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run || *sweep || *alloc || *diag || *validate) fold_flags_into_overrides(args);
        if (*run) return cmd_run(args);
        if (*sweep) return cmd_sweep(args);
        if (*alloc) return cmd_solve_allocation(args);
        if (*diag) return cmd_diagnose(args);
        if (*validate) return cmd_validate(args);
        if (*repro) return cmd_reproduce(preset, args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const Json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
