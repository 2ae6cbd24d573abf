#include "gigfrail/inference.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gigfrail/parallel.hpp"
#include "gigfrail/special.hpp"

namespace gigfrail {

namespace {

// Weibull log-likelihood without frailty; theta = (beta, log sigma, log gamma).
double weibull_no_frailty_loglik(const Dataset& data, std::span<const double> theta) {
    const std::size_t p = data.n_covariates();
    const WeibullBaseline base{std::exp(theta[p]), std::exp(theta[p + 1])};
    double ll = 0.0;
    for (const auto& c : data.clusters()) {
        for (const auto& r : c.records) {
            const double eta = linear_predictor(theta.first(p), r.x);
            if (r.status == 1) ll += std::log(base.hazard(r.time)) + eta;
            ll -= base.cum_hazard(r.time) * std::exp(eta);
        }
    }
    return ll;
}

ModelParams weibull_params(std::span<const double> theta, std::size_t p, double lambda) {
    ModelParams params;
    params.beta.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(p));
    params.baseline = WeibullBaseline{std::exp(theta[p]), std::exp(theta[p + 1])};
    params.alpha = std::exp(theta[p + 2]);
    params.lambda = lambda;
    return params;
}

}  // namespace

FitResult fit_parametric_weibull(const Dataset& data, const EmConfig& cfg) {
    cfg.validate();
    const std::size_t p = data.n_covariates();
    OptimOptions opt;
    opt.kind = cfg.optimizer;

    double events = 0.0;
    double total_time = 0.0;
    for (const auto& c : data.clusters())
        for (const auto& r : c.records) {
            events += r.status;
            total_time += r.time;
        }
    std::vector<double> theta(p, 0.0);
    theta.push_back(std::log(events / total_time));
    theta.push_back(0.0);
    const OptimResult stage1 =
        maximize([&](std::span<const double> th) { return weibull_no_frailty_loglik(data, th); }, theta, opt);

    theta = stage1.x;
    theta.push_back(0.0);  // log alpha
    const Objective full = [&](std::span<const double> th) {
        return observed_log_likelihood(weibull_params(th, p, cfg.lambda), data);
    };
    const OptimResult stage2 = maximize(full, theta, opt);

    FitResult result;
    result.params = weibull_params(stage2.x, p, cfg.lambda);
    result.loglik = stage2.value;
    result.loglik_trace = {full(theta), stage2.value};
    result.n_iter = stage2.iterations;
    result.converged = stage2.converged && std::isfinite(stage2.value);
    result.message = stage2.message;
    result.standardized_frailty_variance = frailty_variance_standardized(result.params.frailty());
    result.posterior_frailty_means = e_step(result.params, data).omega;
    return result;
}

FitResult fit_model(const Dataset& data, const EmConfig& cfg) {
    return cfg.baseline == BaselineKind::Weibull ? fit_parametric_weibull(data, cfg) : fit_em(data, cfg);
}

std::vector<double> parameter_vector(const FitResult& fit) {
    std::vector<double> out(fit.params.beta);
    if (const auto* pe = std::get_if<PeBaseline>(&fit.params.baseline)) {
        out.insert(out.end(), pe->rates().begin(), pe->rates().end());
    } else {
        const auto& w = std::get<WeibullBaseline>(fit.params.baseline);
        out.push_back(w.sigma);
        out.push_back(w.gamma);
    }
    out.push_back(fit.params.alpha);
    out.push_back(fit.standardized_frailty_variance);
    return out;
}

std::vector<std::string> parameter_names(const FitResult& fit, const Dataset& data) {
    std::vector<std::string> names;
    for (const auto& c : data.covariate_names()) names.push_back("beta_" + c);
    if (const auto* pe = std::get_if<PeBaseline>(&fit.params.baseline)) {
        for (std::size_t l = 0; l < pe->n_intervals(); ++l) names.push_back("eta_" + std::to_string(l + 1));
    } else {
        names.emplace_back("sigma");
        names.emplace_back("gamma");
    }
    names.emplace_back("alpha");
    names.emplace_back("Var");
    return names;
}

BootstrapResult bootstrap_se(const Dataset& data, const EmConfig& cfg, int n_resamples, std::uint64_t seed,
                             unsigned threads) {
    if (n_resamples < 1) {
        throw std::invalid_argument("bootstrap_se: need at least one resample");
    }
    EmConfig fixed = cfg;
    if (cfg.baseline == BaselineKind::PiecewiseExponential && !cfg.cuts) {
        fixed.cuts = make_cuts(data.all_times(), data.all_status(), cfg.k_cuts, cfg.cut_method);
    }

    const std::size_t m = data.n_clusters();
    const int width = static_cast<int>(std::to_string(m).size());
    BootstrapResult out;
    out.seed = seed;
    out.n_resamples = n_resamples;
    out.replicates.resize(static_cast<std::size_t>(n_resamples));

    parallel_for(static_cast<std::size_t>(n_resamples), threads, [&](std::size_t b) {
        BootstrapReplicate& rep = out.replicates[b];
        try {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(b)};
            Rng rng(seq);
            std::uniform_int_distribution<std::size_t> pick(0, m - 1);
            std::vector<Cluster> clusters;
            clusters.reserve(m);
            for (std::size_t i = 0; i < m; ++i) {
                Cluster c = data.clusters()[pick(rng)];
                // ids follow draw position so the refit never depends on the original labels
                std::string id = std::to_string(i);
                c.id = std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
                clusters.push_back(std::move(c));
            }
            const Dataset resampled(std::move(clusters), data.covariate_names());
            const FitResult fit = fit_model(resampled, fixed);
            rep.estimates = parameter_vector(fit);
            rep.loglik = fit.loglik;
            rep.converged = fit.converged && std::isfinite(fit.loglik);
            rep.message = fit.message;
        } catch (const std::exception& e) {
            rep.converged = false;
            rep.message = e.what();
        }
    });

    std::vector<const BootstrapReplicate*> usable;
    for (const auto& rep : out.replicates) {
        if (rep.converged) usable.push_back(&rep);
    }
    out.n_excluded = n_resamples - static_cast<int>(usable.size());
    if (usable.empty()) {
        throw std::runtime_error("bootstrap_se: every replicate failed to converge");
    }
    const std::size_t dim = usable.front()->estimates.size();
    out.standard_errors.assign(dim, 0.0);
    out.degenerate = usable.size() < 2;
    if (!out.degenerate) {
        const double count = static_cast<double>(usable.size());
        for (std::size_t j = 0; j < dim; ++j) {
            double mean = 0.0;
            for (const auto* rep : usable) mean += rep->estimates[j];
            mean /= count;
            double ss = 0.0;
            for (const auto* rep : usable) ss += (rep->estimates[j] - mean) * (rep->estimates[j] - mean);
            out.standard_errors[j] = std::sqrt(ss / (count - 1.0));
        }
    }
    return out;
}

std::size_t ProfileResult::argmax() const {
    if (points.empty()) {
        throw std::runtime_error("profile has no successful grid points");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].loglik > points[best].loglik) best = i;
    }
    return best;
}

ProfileResult profile_lambda(const Dataset& data, const std::vector<double>& grid, const EmConfig& cfg,
                             unsigned threads) {
    if (grid.empty()) {
        throw std::invalid_argument("profile_lambda: empty lambda grid");
    }
    struct Slot {
        std::optional<ProfilePoint> point;
        std::string error;
    };
    std::vector<Slot> slots(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t g) {
        try {
            EmConfig local = cfg;
            local.lambda = grid[g];
            const FitResult fit = fit_model(data, local);
            if (!std::isfinite(fit.loglik)) {
                slots[g].error = "non-finite log-likelihood";
                return;
            }
            slots[g].point = ProfilePoint{grid[g], fit.loglik, fit.params, fit.converged};
        } catch (const std::exception& e) {
            slots[g].error = e.what();
        }
    });
    ProfileResult out;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (slots[g].point) {
            out.points.push_back(std::move(*slots[g].point));
        } else {
            out.failures.emplace_back(grid[g], slots[g].error);
        }
    }
    return out;
}

std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) {
        throw std::invalid_argument("make_grid: need step > 0 and hi >= lo");
    }
    const auto count = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) {
        // snap to the step so that e.g. -5 + 50 * 0.1 prints as 0
        grid[i] = std::round((lo + static_cast<double>(i) * step) / step * 1e6) / 1e6 * step;
    }
    return grid;
}

CutSelection select_cuts_aic(const Dataset& data, double lambda, const std::vector<int>& k_range,
                             const EmConfig& cfg, unsigned threads) {
    if (k_range.empty()) {
        throw std::invalid_argument("select_cuts_aic: empty range of cut counts");
    }
    std::vector<std::optional<FitResult>> fits(k_range.size());
    CutSelection out;
    out.table.resize(k_range.size());
    parallel_for(k_range.size(), threads, [&](std::size_t i) {
        AicRow& row = out.table[i];
        row.k = k_range[i];
        try {
            EmConfig local = cfg;
            local.lambda = lambda;
            local.k_cuts = k_range[i];
            local.cuts.reset();
            local.baseline = BaselineKind::PiecewiseExponential;
            FitResult fit = fit_em(data, local);
            row.n_params = static_cast<int>(pack_transformed(fit.params).size());
            row.loglik = fit.loglik;
            row.aic = 2.0 * row.n_params - 2.0 * fit.loglik;
            row.ok = std::isfinite(row.aic);
            row.message = fit.message;
            fits[i] = std::move(fit);
        } catch (const std::exception& e) {
            row.message = e.what();
        }
    });
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < out.table.size(); ++i) {
        if (out.table[i].ok && (!best || out.table[i].aic < out.table[*best].aic)) best = i;
    }
    if (!best) {
        throw std::runtime_error("select_cuts_aic: no candidate cut count could be fitted");
    }
    out.k = out.table[*best].k;
    out.fit = std::move(*fits[*best]);
    return out;
}

JDerivatives rfv_j_derivatives(const FrailtyLaw& law, double u) {
    const GigParams p = law.gig_params();
    // J(u) = log L(-u) = log Psi_lambda(b (a - 2u)) + const, and
    // Psi' = -Psi_{lambda+1} / 2, Psi'' = Psi_{lambda+2} / 4.
    const double x = p.b * (p.a - 2.0 * u);
    if (!(x > 0.0)) {
        throw std::domain_error("rfv: argument outside the Laplace transform domain");
    }
    const double l0 = log_psi(p.lambda, x);
    const double l1 = log_psi(p.lambda + 1.0, x);
    const double l2 = log_psi(p.lambda + 2.0, x);
    const double r1 = std::exp(l1 - l0);
    const double r2 = std::exp(l2 - l0);
    return {p.b * r1, p.b * p.b * (r2 - r1 * r1)};
}

double rfv(const FrailtyLaw& law, double s) {
    const GigParams p = law.gig_params();
    if (!(s >= 0.0)) {
        throw std::domain_error("rfv: s must be non-negative");
    }
    const double mu = gig_moment(p, 1.0);
    const double x = p.b * (p.a + 2.0 * s / mu);
    // J''/J'^2 = Psi_{l+2} Psi_l / Psi_{l+1}^2 - 1
    return std::expm1(log_psi(p.lambda + 2.0, x) + log_psi(p.lambda, x) - 2.0 * log_psi(p.lambda + 1.0, x));
}

double rfv_alpha_for_target(double lambda, double target) {
    if (!(target > 0.0)) {
        throw std::invalid_argument("rfv_alpha_for_target: target must be positive");
    }
    auto gap = [&](double log_alpha) { return rfv(FrailtyLaw::gig(std::exp(log_alpha), lambda), 0.0) - target; };
    double lo = 0.0;
    double hi = 0.0;
    double g0 = gap(0.0);
    if (g0 == 0.0) return 1.0;
    // RFV(0) increases with alpha: walk outwards from alpha = 1 until the sign flips.
    const double step = g0 < 0.0 ? 1.0 : -1.0;
    double probe = 0.0;
    bool bracketed = false;
    for (int i = 0; i < 60; ++i) {
        const double next = probe + step;
        if ((gap(next) < 0.0) != (g0 < 0.0)) {
            lo = std::min(probe, next);
            hi = std::max(probe, next);
            bracketed = true;
            break;
        }
        probe = next;
    }
    if (!bracketed) {
        throw std::runtime_error("rfv_alpha_for_target: could not bracket RFV(0) = " + std::to_string(target) +
                                 " for lambda = " + std::to_string(lambda));
    }
    double g_lo = gap(lo);
    for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double g_mid = gap(mid);
        if (g_mid == 0.0) return std::exp(mid);
        if ((g_mid < 0.0) == (g_lo < 0.0)) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    return std::exp(0.5 * (lo + hi));
}

std::vector<KmPoint> kaplan_meier(const std::vector<double>& times, const std::vector<int>& events) {
    if (times.size() != events.size() || times.empty()) {
        throw std::invalid_argument("kaplan_meier: need matching, non-empty times and events");
    }
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

    std::vector<KmPoint> curve{{0.0, 1.0}};
    double survival = 1.0;
    std::size_t at_risk = times.size();
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = times[order[i]];
        std::size_t deaths = 0;
        std::size_t leaving = 0;
        while (i < order.size() && times[order[i]] == t) {
            deaths += events[order[i]] != 0 ? 1 : 0;
            ++leaving;
            ++i;
        }
        if (deaths > 0) {
            survival *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
            curve.push_back({t, survival});
        }
        at_risk -= leaving;
    }
    return curve;
}

}  // namespace gigfrail
