#include "gigfrail/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <algorithm>
#include <functional>
#include <map>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "gigfrail/csv_io.hpp"
#include "gigfrail/inference.hpp"
#include "gigfrail/simulate.hpp"

namespace gigfrail {

namespace {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); }

// Writes to `path` atomically, or to `out` when no path was given.
void emit(const std::string& content, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << content;
    } else {
        write_file_atomic(path, content);
    }
}

struct ModelFlags {
    double lambda = 0.0;
    int cuts = 10;
    std::string cut_method = "quantile";
    std::string baseline = "pe";
    std::string optimizer = "bfgs";
    double tol = 1e-6;
    int max_iter = 500;
    unsigned threads = 0;
    std::uint64_t seed = 1;
    bool plain_em = false;

    void add_to(CLI::App* cmd, bool with_lambda) {
        if (with_lambda) cmd->add_option("--lambda", lambda, "GIG index of the frailty law")->capture_default_str();
        cmd->add_option("--cuts", cuts, "number of interior cut points of the PE baseline")->capture_default_str();
        cmd->add_option("--cut-method", cut_method, "quantile|even")->capture_default_str();
        cmd->add_option("--baseline", baseline, "pe|weibull")->capture_default_str();
        cmd->add_option("--optimizer", optimizer, "bfgs|simplex")->capture_default_str();
        cmd->add_option("--tol", tol, "EM convergence tolerance")->capture_default_str();
        cmd->add_option("--max-iter", max_iter, "EM iteration cap")->capture_default_str();
        cmd->add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();
        cmd->add_option("--seed", seed, "random seed")->capture_default_str();
        cmd->add_flag("--plain-em", plain_em, "disable SQUAREM acceleration of EM");
    }

    EmConfig config() const {
        EmConfig cfg;
        cfg.lambda = lambda;
        cfg.k_cuts = cuts;
        cfg.tol = tol;
        cfg.max_iter = max_iter;
        cfg.accelerate = !plain_em;
        try {
            cfg.cut_method = parse_cut_method(cut_method);
            cfg.baseline = parse_baseline_kind(baseline);
            cfg.optimizer = parse_optimizer_kind(optimizer);
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        return cfg;
    }
};

Dataset load(const std::string& path) {
    try {
        return read_dataset_file(path);
    } catch (const CsvError& e) {
        throw InputError(e.what());
    }
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InputError(flag + ": '" + item + "' is not a number");
        }
    }
    if (values.empty()) throw InputError(flag + ": empty list");
    return values;
}

// ---------------------------------------------------------------- fit

struct FitFlags {
    std::string data;
    std::string out_path;
    std::string json_path;
    int bootstrap = 0;
    ModelFlags model;
};

int cmd_fit(const FitFlags& f, std::ostream& out, std::ostream& err) {
    const Dataset data = load(f.data);
    const EmConfig cfg = f.model.config();
    if (f.bootstrap < 0) throw InputError("--bootstrap must be non-negative");

    const FitResult fit = fit_model(data, cfg);
    const std::vector<double> est = parameter_vector(fit);
    const std::vector<std::string> names = parameter_names(fit, data);
    const std::size_t p = data.n_covariates();

    std::optional<BootstrapResult> boot;
    std::vector<double> exp_beta_se(p, std::nan(""));
    if (f.bootstrap > 0) {
        boot = bootstrap_se(data, cfg, f.bootstrap, f.model.seed, f.model.threads);
        if (!boot->degenerate) {
            for (std::size_t j = 0; j < p; ++j) {
                double n = 0.0, mean = 0.0, ss = 0.0;
                for (const auto& rep : boot->replicates) {
                    if (!rep.converged) continue;
                    n += 1.0;
                    const double v = std::exp(rep.estimates[j]);
                    const double d = v - mean;
                    mean += d / n;
                    ss += d * (v - mean);
                }
                exp_beta_se[j] = std::sqrt(ss / (n - 1.0));
            }
        } else {
            exp_beta_se.assign(p, 0.0);
        }
    }
    auto se_of = [&](std::size_t idx) { return boot ? boot->standard_errors[idx] : std::nan(""); };

    // Wide layout: one row of estimates, one row of bootstrap SEs.
    std::vector<std::string> cols{"row"};
    std::vector<double> est_row, se_row;
    const std::size_t alpha_idx = est.size() - 2;
    const std::size_t var_idx = est.size() - 1;
    for (std::size_t j = 0; j < p; ++j) {
        cols.push_back(names[j]);
        est_row.push_back(est[j]);
        se_row.push_back(se_of(j));
    }
    cols.emplace_back("Var");
    est_row.push_back(est[var_idx]);
    se_row.push_back(se_of(var_idx));
    cols.emplace_back("alpha");
    est_row.push_back(est[alpha_idx]);
    se_row.push_back(se_of(alpha_idx));
    for (std::size_t j = 0; j < p; ++j) {
        cols.push_back("exp_" + names[j]);
        est_row.push_back(std::exp(est[j]));
        se_row.push_back(exp_beta_se[j]);
    }
    for (std::size_t j = p; j < alpha_idx; ++j) {
        cols.push_back(names[j]);
        est_row.push_back(est[j]);
        se_row.push_back(se_of(j));
    }
    cols.emplace_back("loglik");
    est_row.push_back(fit.loglik);
    se_row.push_back(std::nan(""));

    std::ostringstream csv;
    for (std::size_t c = 0; c < cols.size(); ++c) csv << (c ? "," : "") << cols[c];
    csv << "\nestimate";
    for (double v : est_row) csv << ',' << fmt(v);
    csv << "\nse";
    for (double v : se_row) csv << ',' << fmt(v);
    csv << '\n';
    if (!f.out_path.empty()) write_file_atomic(f.out_path, csv.str());

    if (!f.json_path.empty()) {
        nlohmann::ordered_json j;
        j["model"] = {{"baseline", std::string(to_string(cfg.baseline))}, {"lambda", cfg.lambda}};
        if (const auto* pe = std::get_if<PeBaseline>(&fit.params.baseline)) j["model"]["cuts"] = pe->cuts();
        j["converged"] = fit.converged;
        j["iterations"] = fit.n_iter;
        j["message"] = fit.message;
        j["loglik"] = fit.loglik;
        j["loglik_trace"] = fit.loglik_trace;
        for (std::size_t c = 1; c < cols.size(); ++c) {
            j["estimates"][cols[c]] = est_row[c - 1];
            if (boot && std::isfinite(se_row[c - 1])) j["standard_errors"][cols[c]] = se_row[c - 1];
        }
        if (boot) {
            j["bootstrap"] = {{"resamples", boot->n_resamples},
                              {"excluded", boot->n_excluded},
                              {"seed", boot->seed},
                              {"degenerate", boot->degenerate}};
        }
        j["posterior_frailty_means"] = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < data.n_clusters(); ++i) {
            j["posterior_frailty_means"][data.clusters()[i].id] = fit.posterior_frailty_means[i];
        }
        write_file_atomic(f.json_path, j.dump(2) + "\n");
    }

    out << "GIG frailty model, lambda = " << fmt(cfg.lambda) << ", baseline = " << to_string(cfg.baseline) << "\n";
    out << data.n_clusters() << " clusters, " << data.n_subjects() << " subjects, " << data.n_events()
        << " events\n";
    out << (fit.converged ? "converged" : "NOT converged") << " after " << fit.n_iter << " iterations ("
        << fit.message << ")\n";
    out << "log-likelihood " << std::setprecision(10) << fit.loglik << "\n\n";
    out << std::left << std::setw(20) << "parameter" << std::setw(16) << "estimate" << "se\n";
    for (std::size_t c = 1; c < cols.size(); ++c) {
        if (cols[c] == "loglik") continue;
        out << std::setw(20) << cols[c] << std::setw(16) << std::setprecision(6) << est_row[c - 1]
            << (std::isfinite(se_row[c - 1]) ? fmt(se_row[c - 1]) : "-") << "\n";
    }
    if (boot) {
        out << "\nbootstrap: " << boot->n_resamples << " resamples, " << boot->n_excluded
            << " excluded (non-converged), seed " << boot->seed << (boot->degenerate ? ", degenerate" : "")
            << "\n";
    }
    if (!fit.converged) {
        err << "warning: " << fit.message << "\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
    std::string frailty = "gamma";
    double alpha = 1.0;
    double frailty_lambda = -0.5;
    int m = 200;
    int cluster_size = 2;
    std::string beta = "1.5,-1";
    std::string name = "scenario";
    std::uint64_t seed = 1;
    int replicas = 0;
    std::string fit_lambdas = "0.5";
    std::string fit_k = "10";
    std::string out_path;
    ModelFlags model;
};

int cmd_simulate(const SimulateFlags& f, std::ostream& out, std::ostream& err) {
    Scenario scn;
    scn.name = f.name;
    scn.m = f.m;
    scn.cluster_size = f.cluster_size;
    scn.seed = f.seed;
    scn.beta = parse_list(f.beta, "--beta");
    try {
        scn.frailty = FrailtyLaw{parse_frailty_kind(f.frailty), f.alpha,
                                 f.frailty == "gig" ? f.frailty_lambda : 0.0};
        if (scn.beta.size() > scn.covariates.size()) {
            throw std::invalid_argument("--beta: at most " + std::to_string(scn.covariates.size()) +
                                        " coefficients (Bernoulli(0.5), Uniform(-1,1))");
        }
        scn.covariates.resize(scn.beta.size());
        scn.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }

    if (f.replicas <= 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(f.seed), static_cast<std::uint32_t>(f.seed >> 32)};
        Rng rng(seq);
        const Dataset data = generate(scn, rng);
        std::ostringstream csv;
        write_dataset_csv(csv, data);
        emit(csv.str(), f.out_path, out);
        err << "generated " << data.n_subjects() << " subjects, censoring fraction "
            << fmt(censoring_fraction(data)) << "\n";
        return kExitOk;
    }

    std::vector<FitSpec> specs;
    for (double l : parse_list(f.fit_lambdas, "--fit-lambdas")) {
        for (double k : parse_list(f.fit_k, "--fit-k")) {
            if (k < 0 || k != std::floor(k)) throw InputError("--fit-k: cut counts must be non-negative integers");
            specs.push_back({l, static_cast<int>(k)});
        }
    }
    const StudyResult study = run_study(scn, specs, f.replicas, f.model.config(), f.model.threads);
    std::ostringstream csv;
    csv << "scenario,lambda,k,param,mean,rmse,n_ok,n_fail\n";
    bool any_fail = false;
    for (const auto& r : study.rows) {
        csv << r.scenario << ',' << fmt(r.lambda) << ',' << r.k << ',' << r.param << ',' << fmt(r.mean) << ','
            << fmt(r.rmse) << ',' << r.n_ok << ',' << r.n_fail << '\n';
        any_fail = any_fail || r.n_fail > 0;
    }
    emit(csv.str(), f.out_path, out);
    double cens = 0.0;
    for (double c : study.censoring) cens += c;
    err << f.replicas << " replicas, mean censoring fraction " << fmt(cens / f.replicas) << "\n";
    if (any_fail) err << "warning: some replicate fits failed or did not converge (see n_fail)\n";
    return kExitOk;
}

// ---------------------------------------------------------------- profile

struct ProfileFlags {
    std::string data;
    double lo = -5.0;
    double hi = 5.0;
    double step = 0.1;
    std::string out_path;
    ModelFlags model;
};

int cmd_profile(const ProfileFlags& f, std::ostream& out, std::ostream& err) {
    const Dataset data = load(f.data);
    const EmConfig cfg = f.model.config();
    std::vector<double> grid;
    try {
        grid = make_grid(f.lo, f.hi, f.step);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    const ProfileResult prof = profile_lambda(data, grid, cfg, f.model.threads);
    std::ostringstream csv;
    csv << "lambda,loglik,alpha,converged\n";
    for (const auto& pt : prof.points) {
        csv << fmt(pt.lambda) << ',' << fmt(pt.loglik) << ',' << fmt(pt.params.alpha) << ','
            << (pt.converged ? 1 : 0) << '\n';
    }
    emit(csv.str(), f.out_path, out);
    for (const auto& [lambda, why] : prof.failures) err << "lambda " << fmt(lambda) << " failed: " << why << "\n";
    if (prof.points.empty()) {
        err << "error: no grid point could be fitted\n";
        return kExitNotConverged;
    }
    const auto& best = prof.points[prof.argmax()];
    err << "profile maximum at lambda = " << fmt(best.lambda) << " (loglik " << fmt(best.loglik) << ")\n";
    bool all_converged = prof.failures.empty();
    for (const auto& pt : prof.points) all_converged = all_converged && pt.converged;
    return all_converged ? kExitOk : kExitNotConverged;
}

// ---------------------------------------------------------------- aic

struct AicFlags {
    std::string data;
    int kmin = 3;
    int kmax = 30;
    std::string out_path;
    ModelFlags model;
};

int cmd_aic(const AicFlags& f, std::ostream& out, std::ostream& err) {
    const Dataset data = load(f.data);
    const EmConfig cfg = f.model.config();
    if (f.kmin < 0 || f.kmax < f.kmin) throw InputError("need 0 <= --kmin <= --kmax");
    std::vector<int> ks;
    for (int k = f.kmin; k <= f.kmax; ++k) ks.push_back(k);
    const CutSelection sel = select_cuts_aic(data, cfg.lambda, ks, cfg, f.model.threads);
    std::ostringstream csv;
    csv << "k,aic,loglik,n_params\n";
    for (const auto& row : sel.table) {
        if (!row.ok) {
            err << "k = " << row.k << " failed: " << row.message << "\n";
            continue;
        }
        csv << row.k << ',' << fmt(row.aic) << ',' << fmt(row.loglik) << ',' << row.n_params << '\n';
    }
    emit(csv.str(), f.out_path, out);
    err << "smallest AIC at k = " << sel.k << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- rfv

struct RfvFlags {
    std::string lambdas = "-0.5,0,0.5,1";
    double target = 0.7;
    double alpha = 0.0;
    double s_max = 10.0;
    double s_step = 0.1;
    std::uint64_t seed = 1;
    std::string out_path;
};

int cmd_rfv(const RfvFlags& f, std::ostream& out, std::ostream& err) {
    if (!(f.s_step > 0.0) || !(f.s_max >= 0.0)) throw InputError("need --s-step > 0 and --s-max >= 0");
    const std::vector<double> s_grid = make_grid(0.0, f.s_max, f.s_step);
    std::ostringstream csv;
    csv << "lambda,alpha,s,rfv\n";
    int failures = 0;
    for (double lambda : parse_list(f.lambdas, "--lambdas")) {
        try {
            const double alpha = f.alpha > 0.0 ? f.alpha : rfv_alpha_for_target(lambda, f.target);
            const FrailtyLaw law = FrailtyLaw::gig(alpha, lambda);
            for (double s : s_grid) csv << fmt(lambda) << ',' << fmt(alpha) << ',' << fmt(s) << ',' << fmt(rfv(law, s)) << '\n';
        } catch (const std::exception& e) {
            ++failures;
            err << "lambda " << fmt(lambda) << " failed: " << e.what() << "\n";
        }
    }
    emit(csv.str(), f.out_path, out);
    return failures == 0 ? kExitOk : kExitNotConverged;
}

// ---------------------------------------------------------------- km

struct KmFlags {
    std::string data;
    std::string group;
    std::uint64_t seed = 1;
    std::string out_path;
};

int cmd_km(const KmFlags& f, std::ostream& out, std::ostream&) {
    const Dataset data = load(f.data);
    std::optional<std::size_t> col;
    if (!f.group.empty()) {
        const auto& names = data.covariate_names();
        const auto it = std::find(names.begin(), names.end(), f.group);
        if (it == names.end()) throw InputError("--group: no covariate column named '" + f.group + "'");
        col = static_cast<std::size_t>(it - names.begin());
    }
    std::map<double, std::pair<std::vector<double>, std::vector<int>>> groups;
    for (const auto& c : data.clusters()) {
        for (const auto& r : c.records) {
            auto& g = groups[col ? r.x[*col] : 0.0];
            g.first.push_back(r.time);
            g.second.push_back(r.status);
        }
    }
    std::ostringstream csv;
    csv << "group,time,survival\n";
    for (const auto& [key, g] : groups) {
        const std::string label = col ? fmt(key) : std::string("all");
        for (const auto& pt : kaplan_meier(g.first, g.second)) {
            csv << label << ',' << fmt(pt.time) << ',' << fmt(pt.survival) << '\n';
        }
    }
    emit(csv.str(), f.out_path, out);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"GIG shared-frailty models for clustered survival data", "gigfrail"};
    app.require_subcommand(1);
    std::function<int()> action;

    FitFlags fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit a frailty model to a CSV data set");
    fit_cmd->add_option("data", fit.data, "input CSV (cluster_id,time,status,covariates...)")->required();
    fit_cmd->add_option("--bootstrap", fit.bootstrap, "cluster bootstrap resamples (0 = none)")->capture_default_str();
    fit_cmd->add_option("--out", fit.out_path, "write the estimates table (CSV) here");
    fit_cmd->add_option("--json", fit.json_path, "write a JSON report here");
    fit.model.add_to(fit_cmd, true);
    fit_cmd->callback([&] { action = [&] { return cmd_fit(fit, out, err); }; });

    SimulateFlags sim;
    auto* sim_cmd = app.add_subcommand("simulate", "generate data or run a Monte Carlo study");
    sim_cmd->add_option("--frailty", sim.frailty, "gamma|gig|ge|lognormal")->capture_default_str();
    sim_cmd->add_option("--alpha", sim.alpha, "frailty dispersion parameter")->capture_default_str();
    sim_cmd->add_option("--frailty-lambda", sim.frailty_lambda, "GIG index when --frailty gig")
        ->capture_default_str();
    sim_cmd->add_option("--clusters", sim.m, "number of clusters")->capture_default_str();
    sim_cmd->add_option("--cluster-size", sim.cluster_size, "subjects per cluster")->capture_default_str();
    sim_cmd->add_option("--beta", sim.beta, "true coefficients, comma separated")->capture_default_str();
    sim_cmd->add_option("--name", sim.name, "scenario label for the summary")->capture_default_str();
    sim_cmd->add_option("--replicas", sim.replicas, "Monte Carlo replicas (0 = write one data set)")
        ->capture_default_str();
    sim_cmd->add_option("--fit-lambdas", sim.fit_lambdas, "lambda values fitted in a study")->capture_default_str();
    sim_cmd->add_option("--fit-k", sim.fit_k, "cut counts fitted in a study")->capture_default_str();
    sim_cmd->add_option("--out", sim.out_path, "output CSV (default: stdout)");
    sim.model.add_to(sim_cmd, false);
    sim_cmd->callback([&] {
        sim.seed = sim.model.seed;
        action = [&] { return cmd_simulate(sim, out, err); };
    });

    ProfileFlags prof;
    auto* prof_cmd = app.add_subcommand("profile", "profile log-likelihood over a lambda grid");
    prof_cmd->add_option("data", prof.data, "input CSV")->required();
    prof_cmd->add_option("--min", prof.lo, "grid start")->capture_default_str();
    prof_cmd->add_option("--max", prof.hi, "grid end")->capture_default_str();
    prof_cmd->add_option("--step", prof.step, "grid spacing")->capture_default_str();
    prof_cmd->add_option("--out", prof.out_path, "output CSV (default: stdout)");
    prof.model.add_to(prof_cmd, false);
    prof_cmd->callback([&] { action = [&] { return cmd_profile(prof, out, err); }; });

    AicFlags aic;
    auto* aic_cmd = app.add_subcommand("aic", "choose the number of cut points by AIC");
    aic_cmd->add_option("data", aic.data, "input CSV")->required();
    aic_cmd->add_option("--kmin", aic.kmin, "smallest cut count")->capture_default_str();
    aic_cmd->add_option("--kmax", aic.kmax, "largest cut count")->capture_default_str();
    aic_cmd->add_option("--out", aic.out_path, "output CSV (default: stdout)");
    aic.model.add_to(aic_cmd, true);
    aic_cmd->callback([&] { action = [&] { return cmd_aic(aic, out, err); }; });

    RfvFlags rfv_flags;
    auto* rfv_cmd = app.add_subcommand("rfv", "relative frailty variance curves");
    rfv_cmd->add_option("--lambdas", rfv_flags.lambdas, "GIG indices, comma separated")->capture_default_str();
    rfv_cmd->add_option("--target-rfv0", rfv_flags.target, "calibrate alpha so that RFV(0) equals this")
        ->capture_default_str();
    rfv_cmd->add_option("--alpha", rfv_flags.alpha, "use this alpha instead of calibrating");
    rfv_cmd->add_option("--s-max", rfv_flags.s_max, "largest s")->capture_default_str();
    rfv_cmd->add_option("--s-step", rfv_flags.s_step, "s spacing")->capture_default_str();
    rfv_cmd->add_option("--seed", rfv_flags.seed, "accepted for uniformity; the output is deterministic");
    rfv_cmd->add_option("--out", rfv_flags.out_path, "output CSV (default: stdout)");
    rfv_cmd->callback([&] { action = [&] { return cmd_rfv(rfv_flags, out, err); }; });

    KmFlags km;
    auto* km_cmd = app.add_subcommand("km", "Kaplan-Meier curves");
    km_cmd->add_option("data", km.data, "input CSV")->required();
    km_cmd->add_option("--group", km.group, "covariate column defining groups");
    km_cmd->add_option("--seed", km.seed, "accepted for uniformity; the output is deterministic");
    km_cmd->add_option("--out", km.out_path, "output CSV (default: stdout)");
    km_cmd->callback([&] { action = [&] { return cmd_km(km, out, err); }; });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        return action();
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNotConverged;
    }
}

}  // namespace gigfrail
