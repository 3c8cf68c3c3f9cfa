#include "dts/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dts {

namespace {

Vector to_vector(const Json& j) {
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

Matrix to_matrix(const Json& j) {
    const std::size_t rows = j.size();
    const std::size_t cols = rows > 0 ? j[0].size() : 0;
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (j[r].size() != cols) throw std::invalid_argument("ragged matrix in config");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

std::vector<Vector> to_vector_list(const Json& j) {
    std::vector<Vector> out;
    for (const Json& row : j) out.push_back(to_vector(row));
    return out;
}

// Flattens either a flat stacked array or one array per arm.
Vector to_stacked(const Json& j, int k, int d) {
    if (!j.empty() && j[0].is_array()) {
        if (static_cast<int>(j.size()) != k) {
            throw std::invalid_argument("truth.explicit: expected one block per arm");
        }
        Vector v(k * d);
        for (int i = 0; i < k; ++i) {
            if (static_cast<int>(j[i].size()) != d) {
                throw std::invalid_argument("truth.explicit: block dimension mismatch");
            }
            for (int c = 0; c < d; ++c) v[i * d + c] = j[i][c].get<double>();
        }
        return v;
    }
    Vector v = to_vector(j);
    if (v.size() != k * d) throw std::invalid_argument("truth.explicit: length mismatch");
    return v;
}

std::vector<Vector> basis_list(int d) {
    std::vector<Vector> out;
    for (int i = 0; i < d; ++i) {
        Vector e = Vector::Zero(d);
        e[i] = 1.0;
        out.push_back(e);
    }
    return out;
}

}  // namespace

void apply_override(Json& doc, const std::string& key_value) {
    const std::size_t eq = key_value.find('=');
    if (eq == std::string::npos) {
        throw std::invalid_argument("override must look like key.path=value: " + key_value);
    }
    const std::string path = key_value.substr(0, eq);
    const std::string raw = key_value.substr(eq + 1);

    Json* node = &doc;
    std::istringstream keys(path);
    std::string key;
    std::vector<std::string> parts;
    while (std::getline(keys, key, '.')) parts.push_back(key);
    if (parts.empty()) throw std::invalid_argument("empty override key");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];

    Json value = Json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;  // plain string
    (*node)[parts.back()] = value;
}

StudyConfig parse_config(Json doc) {
    StudyConfig out;

    const int k = doc.at("k").get<int>();
    const int d = doc.at("d").get<int>();
    const double sigma2 = doc.value("sigma2", 1.0);
    const int delay = doc.value("delay", 1);

    // Environment first; several kinds imply a canonical context list.
    const Json env = doc.value("environment", Json{{"kind", "iid"}});
    const std::string kind = env.value("kind", "iid");

    ContextSpace ctx;
    ctx.dimension = d;
    ctx.norm_bound = doc.value("norm_bound", 1.0);
    if (doc.contains("contexts")) {
        ctx.contexts = to_vector_list(doc["contexts"]);
    } else if (kind == "day-of-week" || kind == "two-phase" || kind == "iid") {
        ctx.contexts = basis_list(d);
    }

    if (kind == "iid") {
        std::vector<double> probs;
        if (env.contains("probabilities")) {
            for (const Json& p : env["probabilities"]) probs.push_back(p.get<double>());
        } else {
            probs.assign(ctx.contexts.size(), 1.0 / static_cast<double>(ctx.contexts.size()));
        }
        out.process = make_iid(ctx.contexts, probs);
    } else if (kind == "day-of-week") {
        out.process = make_day_of_week(env.value("m", 1), env.value("days", d));
    } else if (kind == "two-phase") {
        out.process = make_two_phase(env.at("T").get<long>());
    } else if (kind == "fixed") {
        out.process = make_fixed(to_vector_list(env.at("sequence")));
    } else if (kind == "latent-time") {
        out.process = make_latent_time(env.at("T").get<long>());
    } else {
        throw std::invalid_argument("environment.kind: unknown kind " + kind);
    }

    PopulationSpec pop;
    if (doc.contains("population") && doc["population"].contains("x_pop")) {
        pop.x_pop = to_vector(doc["population"]["x_pop"]);
    } else if (doc.contains("population") && doc["population"].contains("weights")) {
        for (const Json& w : doc["population"]["weights"]) pop.weights.push_back(w.get<double>());
    } else {
        pop.weights.assign(ctx.contexts.size(), 1.0 / static_cast<double>(ctx.contexts.size()));
    }

    PriorSpec prior;
    prior.noise_variance = sigma2;
    const Json pj = doc.at("prior");
    const std::string mode = pj.value("mode", "independent-arms");
    if (mode == "independent-arms") {
        prior.mode = PriorMode::IndependentArms;
        if (pj.contains("means")) {
            prior.arm_means = to_vector_list(pj["means"]);
        } else {
            prior.arm_means.assign(k, Vector::Zero(d));
        }
        prior.arm_covariance =
            pj.contains("covariance") ? to_matrix(pj["covariance"]) : Matrix::Identity(d, d);
    } else if (mode == "joint") {
        prior.mode = PriorMode::Joint;
        prior.joint_mean = pj.contains("mean") ? to_vector(pj["mean"]) : Vector::Zero(k * d);
        prior.joint_covariance = to_matrix(pj.at("covariance"));
    } else {
        throw std::invalid_argument("prior.mode: unknown mode " + mode);
    }

    out.instance = build_instance(k, d, ctx, pop, prior, std::nullopt, delay);

    out.seed = doc.value("seed", 0ULL);
    out.n_reps = doc.value("reps", 1L);
    out.parallelism = doc.value("parallelism", 1);

    // Truth: fixed explicit vector, a fixed prior draw from a sub-seed, or a
    // fresh prior draw per replication.
    const Json tj = doc.value("truth", Json{{"mode", "prior"}});
    if (tj.contains("explicit")) {
        out.truth_sampler = fixed_truth(to_stacked(tj["explicit"], k, d));
    } else if (tj.contains("seed")) {
        const std::uint64_t tseed =
            splitmix64(out.seed ^ splitmix64(tj["seed"].get<std::uint64_t>()));
        out.truth_sampler = fixed_truth(draw_truth(out.instance, tseed));
    } else {
        out.truth_sampler = prior_truth(out.instance);
    }

    const Json policy = doc.value("policy", Json{{"name", "dts"}});
    out.episode.policy.kind = policy_kind_from_name(policy.value("name", "dts"));
    if (policy.contains("beta")) {
        const Json bj = policy["beta"];
        const std::string bmode = bj.value("mode", "fixed");
        if (bmode == "plugin") {
            out.episode.policy.beta_mode = BetaMode::Plugin;
            out.episode.policy.beta = bj.value("initial", 0.5);
        } else {
            out.episode.policy.beta_mode = BetaMode::Fixed;
            out.episode.policy.beta = bj.value("value", 0.5);
        }
    }
    out.episode.policy.max_resamples = policy.value("max_resamples", 10000);
    out.episode.policy.ucb_z = policy.value("z", 1.645);

    const Json run = doc.value("run", Json{{"T", 1000}});
    if (run.contains("stopping")) {
        const Json sj = run["stopping"];
        StoppingConfig sc;
        sc.delta = sj.at("delta").get<double>();
        sc.max_horizon = sj.value("max_horizon", 1000000L);
        const std::string tmode = sj.value("threshold", "default");
        if (tmode == "expansion") {
            sc.mode = ThresholdMode::SquaredExpansion;
        } else if (tmode == "default") {
            sc.mode = ThresholdMode::ZPlusSqrt;
        } else {
            throw std::invalid_argument("run.stopping.threshold: unknown mode " + tmode);
        }
        out.episode.stopping = sc;
        out.episode.cost_per_period = run.value("cost", 0.0);
    } else {
        out.episode.horizon = run.at("T").get<long>();
    }
    out.episode.record_periods = doc.value("record_trace", true);

    if (doc.contains("sweep")) {
        for (const Json& c : doc["sweep"].at("c_values")) out.sweep_costs.push_back(c.get<double>());
    }

    // Echo a fully-resolved document.
    doc["seed"] = out.seed;
    doc["reps"] = out.n_reps;
    doc["parallelism"] = out.parallelism;
    Json xp = Json::array();
    for (Eigen::Index i = 0; i < out.instance.population.x_pop.size(); ++i) {
        xp.push_back(out.instance.population.x_pop[i]);
    }
    doc["derived"] = Json{{"x_pop", xp}};
    out.resolved = std::move(doc);
    return out;
}

StudyConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    Json doc = Json::parse(in);
    for (const std::string& kv : overrides) apply_override(doc, kv);
    return parse_config(std::move(doc));
}

Json describe_config(const StudyConfig& config, long T) {
    Json out;
    Json xp = Json::array();
    for (Eigen::Index i = 0; i < config.instance.population.x_pop.size(); ++i) {
        xp.push_back(config.instance.population.x_pop[i]);
    }
    out["x_pop"] = xp;
    out["stacked_dimension"] = config.instance.stacked_dim();
    if (config.process.kind == ContextKind::Iid) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(config.process.second_moment());
        Json eig = Json::array();
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            eig.push_back(es.eigenvalues()[i]);
        }
        out["second_moment_eigenvalues"] = eig;
    }
    out["iota"] = iota_factor(config.instance.d, T, config.instance.joint_prior_covariance());
    out["horizon_for_iota"] = T;
    return out;
}

namespace {

Json stat_to_json(const Stat& s) {
    return Json{{"mean", s.mean},
                {"ci_half_width", s.ci_half_width},
                {"std_error", s.std_error},
                {"n", s.n}};
}

Json vector_to_json(const Vector& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

}  // namespace

Json summary_to_json(const RunSummary& summary, int k) {
    (void)k;
    Json out;
    out["n_reps"] = summary.n_reps;
    out["base_seed"] = summary.base_seed;
    out["simple_regret"] = stat_to_json(summary.regret);
    out["stopping_time"] = stat_to_json(summary.tau);
    if (summary.cost.n > 0) out["combined_cost"] = stat_to_json(summary.cost);
    out["cap_hit_fraction"] = summary.cap_hit_fraction;
    out["wrong_selection_fraction"] = summary.wrong_selection_fraction;
    Json cps = Json::array();
    for (const CheckpointSummary& cs : summary.checkpoints) {
        Json cp;
        cp["t"] = cs.t;
        cp["p_mean"] = vector_to_json(cs.p_mean);
        if (cs.p_abs_err.size() > 0) cp["p_abs_err"] = vector_to_json(cs.p_abs_err);
        if (std::isfinite(cs.exponent_mean)) {
            cp["exponent_mean"] = cs.exponent_mean;
            cp["exponent_se"] = cs.exponent_se;
        }
        cp["n"] = cs.n;
        cps.push_back(std::move(cp));
    }
    out["checkpoints"] = std::move(cps);
    return out;
}

Json allocation_to_json(const AllocationSolution& sol) {
    return Json{{"p_star", vector_to_json(sol.p_star)},
                {"gamma_inverse", sol.gamma_inverse},
                {"y_star", sol.y_star},
                {"beta", sol.p_star[sol.best_arm_index]},
                {"best_arm", sol.best_arm_index + 1},
                {"kkt_residuals",
                 Json{{"balance", sol.balance_residual}, {"share", sol.beta_residual}}}};
}

Json certificate_to_json(const EquilibriumCertificate& cert) {
    Json alts = Json::array();
    for (std::size_t i = 0; i < cert.nature_alternatives.size(); ++i) {
        alts.push_back(Json{{"challenger_arm", cert.challenger_arms[i] + 1},
                            {"theta", vector_to_json(cert.nature_alternatives[i])},
                            {"weight", cert.nature_weights[static_cast<Eigen::Index>(i)]}});
    }
    return Json{{"alternatives", std::move(alts)},
                {"max_tie_residual", cert.max_tie_residual},
                {"value_gap", cert.value_gap},
                {"weight_sum", cert.weight_sum}};
}

Json cost_sweep_to_json(const std::vector<CostSweepRow>& rows) {
    Json arr = Json::array();
    for (const CostSweepRow& row : rows) {
        arr.push_back(Json{{"c", row.c},
                           {"tau", stat_to_json(row.tau)},
                           {"regret", stat_to_json(row.regret)},
                           {"cost", stat_to_json(row.cost)},
                           {"normalized_cost", row.normalized_cost},
                           {"wrong_selection_fraction", row.wrong_selection_fraction},
                           {"cap_hits", row.cap_hits}});
    }
    return Json{{"rows", std::move(arr)}};
}

}  // namespace dts
