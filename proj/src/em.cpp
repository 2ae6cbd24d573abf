#include "gigfrail/em.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gigfrail/distributions.hpp"
#include "gigfrail/special.hpp"

namespace gigfrail {

std::string_view to_string(BaselineKind kind) {
    return kind == BaselineKind::PiecewiseExponential ? "pe" : "weibull";
}

BaselineKind parse_baseline_kind(std::string_view name) {
    if (name == "pe") return BaselineKind::PiecewiseExponential;
    if (name == "weibull") return BaselineKind::Weibull;
    throw std::invalid_argument("unknown baseline '" + std::string(name) + "'");
}

void EmConfig::validate() const {
    if (!(tol > 0.0)) throw std::invalid_argument("EM tolerance must be positive");
    if (max_iter < 1) throw std::invalid_argument("EM max_iter must be at least 1");
    if (k_cuts < 0) throw std::invalid_argument("number of cut points must be non-negative");
    if (!std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite");
}

EStep e_step(const ModelParams& params, const Dataset& data) {
    const FrailtyLaw prior = params.frailty();
    EStep out;
    out.omega.reserve(data.n_clusters());
    out.kappa.reserve(data.n_clusters());
    for (std::size_t i = 0; i < data.n_clusters(); ++i) {
        const ClusterRisk risk = cluster_risk(params, data.clusters()[i]);
        const GigParams post = posterior_frailty(prior, risk.cum_hazard_sum, risk.events);
        const double omega = gig_moment(post, 1.0);
        const double kappa = gig_moment(post, -1.0);
        if (!std::isfinite(omega) || !std::isfinite(kappa)) {
            throw std::runtime_error("e_step: non-finite posterior moment in cluster " + std::to_string(i) + " ('" +
                                     data.clusters()[i].id + "')");
        }
        out.omega.push_back(omega);
        out.kappa.push_back(kappa);
    }
    return out;
}

Q1Evaluator::Q1Evaluator(const Dataset& data, std::vector<double> cuts)
    : cuts_(std::move(cuts)), p_(data.n_covariates()), n_rates_(cuts_.size() + 1), n_(data.n_subjects()) {
    const PeBaseline shape(cuts_, std::vector<double>(n_rates_, 1.0));
    cluster_.reserve(n_);
    status_.reserve(n_);
    interval_.reserve(n_);
    x_.reserve(n_ * p_);
    exposure_.resize(n_ * n_rates_);
    std::size_t row = 0;
    for (std::size_t i = 0; i < data.n_clusters(); ++i) {
        for (const auto& r : data.clusters()[i].records) {
            cluster_.push_back(i);
            status_.push_back(r.status);
            interval_.push_back(shape.interval_of(r.time));
            x_.insert(x_.end(), r.x.begin(), r.x.end());
            shape.exposure(r.time, std::span<double>(exposure_).subspan(row * n_rates_, n_rates_));
            ++row;
        }
    }
}

double Q1Evaluator::operator()(std::span<const double> theta, std::span<const double> omega) const {
    const auto beta = theta.first(p_);
    const auto log_rates = theta.subspan(p_, n_rates_);
    thread_local std::vector<double> rates;
    rates.resize(n_rates_);
    for (std::size_t l = 0; l < n_rates_; ++l) rates[l] = std::exp(log_rates[l]);

    double event_part = 0.0;
    double risk_part = 0.0;
    for (std::size_t r = 0; r < n_; ++r) {
        const double* xr = x_.data() + r * p_;
        double eta = 0.0;
        for (std::size_t j = 0; j < p_; ++j) eta += beta[j] * xr[j];
        if (status_[r] != 0) event_part += eta + log_rates[interval_[r]];
        const double* er = exposure_.data() + r * n_rates_;
        double cum = 0.0;
        for (std::size_t l = 0; l < n_rates_; ++l) cum += rates[l] * er[l];
        risk_part += omega[cluster_[r]] * cum * std::exp(eta);
    }
    return event_part - risk_part;
}

double q1(std::span<const double> beta, const PeBaseline& baseline, const Dataset& data,
          std::span<const double> omega) {
    if (omega.size() != data.n_clusters()) {
        throw std::invalid_argument("q1: need one omega per cluster");
    }
    if (beta.size() != data.n_covariates()) {
        throw std::invalid_argument("q1: beta dimension does not match the data");
    }
    const Q1Evaluator eval(data, baseline.cuts());
    std::vector<double> theta(beta.begin(), beta.end());
    for (double r : baseline.rates()) theta.push_back(std::log(r));
    return eval(theta, omega);
}

double q2(double alpha, std::span<const double> omega, std::span<const double> kappa, double lambda) {
    if (omega.size() != kappa.size()) {
        throw std::invalid_argument("q2: omega and kappa differ in length");
    }
    const double m = static_cast<double>(omega.size());
    double total = 0.0;
    for (std::size_t i = 0; i < omega.size(); ++i) total += omega[i] + kappa[i];
    return -m * log_bessel_k(lambda, 1.0 / alpha) - total / (2.0 * alpha);
}

namespace {

const PeBaseline& pe_baseline(const ModelParams& params) {
    const auto* pe = std::get_if<PeBaseline>(&params.baseline);
    if (pe == nullptr) {
        throw std::invalid_argument("EM requires a piecewise-exponential baseline");
    }
    return *pe;
}

OptimOptions optim_options(const EmConfig& cfg) {
    OptimOptions opt;
    opt.kind = cfg.optimizer;
    return opt;
}

std::vector<double> derive_cuts(const Dataset& data, const EmConfig& cfg) {
    if (cfg.cuts) return *cfg.cuts;
    return make_cuts(data.all_times(), data.all_status(), cfg.k_cuts, cfg.cut_method);
}

ModelParams maximize_q1(const Q1Evaluator& eval, std::span<const double> omega, const ModelParams& current,
                        const EmConfig& cfg, OptimResult* report) {
    const PeBaseline& base = pe_baseline(current);
    std::vector<double> theta(current.beta);
    for (double r : base.rates()) theta.push_back(std::log(r));
    const Objective objective = [&](std::span<const double> th) { return eval(th, omega); };
    OptimResult fit = maximize(objective, theta, optim_options(cfg));

    ModelParams next = current;
    const std::size_t p = eval.n_beta();
    next.beta.assign(fit.x.begin(), fit.x.begin() + static_cast<std::ptrdiff_t>(p));
    next.baseline = PeBaseline::from_log_rates(eval.cuts(), std::span<const double>(fit.x).subspan(p));
    if (report != nullptr) *report = std::move(fit);
    return next;
}

// Clusters sorted by id so that every sum over clusters runs in an order that
// does not depend on how the input was arranged.
std::vector<std::size_t> canonical_order(const Dataset& data) {
    std::vector<std::size_t> order(data.n_clusters());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.clusters()[a].id < data.clusters()[b].id;
    });
    return order;
}

}  // namespace

MStepResult m_step(const Dataset& data, const EStep& moments, const ModelParams& current, const EmConfig& cfg) {
    const Q1Evaluator eval(data, pe_baseline(current).cuts());
    MStepResult out;
    out.params = maximize_q1(eval, moments.omega, current, cfg, &out.q1_fit);

    const double lambda = current.lambda;
    const Objective q2_objective = [&](std::span<const double> v) {
        return q2(std::exp(v[0]), moments.omega, moments.kappa, lambda);
    };
    out.q2_fit = maximize(q2_objective, {std::log(current.alpha)}, optim_options(cfg));
    out.params.alpha = std::exp(out.q2_fit.x[0]);
    return out;
}

std::vector<double> initial_rates(const Dataset& data, const std::vector<double>& cuts) {
    const PeBaseline shape(cuts, std::vector<double>(cuts.size() + 1, 1.0));
    std::vector<double> count(shape.n_intervals(), 0.0);
    std::vector<double> time_sum(shape.n_intervals(), 0.0);
    double total_events = 0.0;
    double total_time = 0.0;
    for (const auto& c : data.clusters()) {
        for (const auto& r : c.records) {
            total_time += r.time;
            if (r.status == 1) {
                total_events += 1.0;
                const std::size_t l = shape.interval_of(r.time);
                count[l] += 1.0;
                time_sum[l] += r.time;
            }
        }
    }
    const double global = total_events / total_time;
    std::vector<double> rates(shape.n_intervals());
    for (std::size_t l = 0; l < rates.size(); ++l) {
        rates[l] = count[l] > 0.0 ? count[l] / time_sum[l] : global;
    }
    return rates;
}

ModelParams initial_params(const Dataset& data, const EmConfig& cfg) {
    cfg.validate();
    std::vector<double> cuts = derive_cuts(data, cfg);
    ModelParams start;
    start.beta.assign(data.n_covariates(), 0.0);
    start.baseline = PeBaseline(cuts, initial_rates(data, cuts));
    start.alpha = 1.0;
    start.lambda = cfg.lambda;

    if (data.n_covariates() > 0) {
        // no-frailty piecewise-exponential PH model: q1 with every omega at 1
        const Q1Evaluator eval(data, cuts);
        const std::vector<double> ones(data.n_clusters(), 1.0);
        start.beta = maximize_q1(eval, ones, start, cfg, nullptr).beta;
    }
    return start;
}

std::vector<double> pack_transformed(const ModelParams& params) {
    std::vector<double> out(params.beta);
    for (double r : pe_baseline(params).rates()) out.push_back(std::log(r));
    out.push_back(std::log(params.alpha));
    return out;
}

ModelParams unpack_transformed(std::span<const double> theta, const ModelParams& like) {
    const PeBaseline& base = pe_baseline(like);
    const std::size_t p = like.beta.size();
    const std::size_t k = base.n_intervals();
    if (theta.size() != p + k + 1) {
        throw std::invalid_argument("unpack_transformed: vector length does not match the model");
    }
    ModelParams out = like;
    out.beta.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(p));
    out.baseline = PeBaseline::from_log_rates(base.cuts(), theta.subspan(p, k));
    out.alpha = std::exp(theta[p + k]);
    return out;
}

FitResult fit_em(const Dataset& data, const EmConfig& cfg) {
    cfg.validate();
    const std::vector<std::size_t> order = canonical_order(data);
    const Dataset ordered = data.reordered(order);
    return fit_em(data, cfg, initial_params(ordered, cfg));
}

FitResult fit_em(const Dataset& data, const EmConfig& cfg, const ModelParams& start) {
    cfg.validate();
    if (data.n_events() == 0) {
        throw std::invalid_argument("fit_em: dataset has no events");
    }
    if (start.beta.size() != data.n_covariates()) {
        throw std::invalid_argument("fit_em: starting beta does not match the covariate dimension");
    }
    const std::vector<std::size_t> order = canonical_order(data);
    const Dataset ordered = data.reordered(order);

    ModelParams params = start;
    params.lambda = cfg.lambda;
    FitResult result;
    double ll = observed_log_likelihood(params, ordered);
    result.loglik_trace.push_back(ll);

    auto em_map = [&](const ModelParams& p) { return m_step(ordered, e_step(p, ordered), p, cfg).params; };

    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        result.n_iter = iter;
        const std::vector<double> t0 = pack_transformed(params);
        ModelParams p1 = em_map(params);
        const std::vector<double> t1 = pack_transformed(p1);
        double change = 0.0;
        for (std::size_t j = 0; j < t0.size(); ++j) change = std::max(change, std::abs(t1[j] - t0[j]));
        if (change < cfg.tol || !cfg.accelerate) {
            params = std::move(p1);
            ll = observed_log_likelihood(params, ordered);
            result.loglik_trace.push_back(ll);
            if (!std::isfinite(ll)) {
                result.message = "non-finite log-likelihood at iteration " + std::to_string(iter);
                break;
            }
            if (change < cfg.tol) {
                result.converged = true;
                break;
            }
            continue;
        }

        // SQUAREM cycle: extrapolate along the two EM steps, then stabilise
        // with one more EM step; fall back to the plain double step when the
        // extrapolated point does worse.
        ModelParams p2 = em_map(p1);
        const std::vector<double> t2 = pack_transformed(p2);
        double rr = 0.0;
        double vv = 0.0;
        std::vector<double> r(t0.size()), v(t0.size());
        for (std::size_t j = 0; j < t0.size(); ++j) {
            r[j] = t1[j] - t0[j];
            v[j] = t2[j] - 2.0 * t1[j] + t0[j];
            rr += r[j] * r[j];
            vv += v[j] * v[j];
        }
        double ll_next = observed_log_likelihood(p2, ordered);
        ModelParams next = p2;
        const double step = vv > 0.0 ? -std::sqrt(rr / vv) : -1.0;
        if (step < -1.0) {
            std::vector<double> t_ext(t0.size());
            for (std::size_t j = 0; j < t0.size(); ++j) t_ext[j] = t0[j] - 2.0 * step * r[j] + step * step * v[j];
            try {
                ModelParams ext = em_map(unpack_transformed(t_ext, params));
                const double ll_ext = observed_log_likelihood(ext, ordered);
                if (std::isfinite(ll_ext) && ll_ext >= ll_next) {
                    next = std::move(ext);
                    ll_next = ll_ext;
                }
            } catch (const std::exception&) {
            }
        }
        params = std::move(next);
        ll = ll_next;
        result.loglik_trace.push_back(ll);
        if (!std::isfinite(ll)) {
            result.message = "non-finite log-likelihood at iteration " + std::to_string(iter);
            break;
        }
    }
    if (!result.converged && result.message.empty()) {
        result.message = "EM reached max_iter = " + std::to_string(cfg.max_iter) + " without convergence";
    } else if (result.converged) {
        result.message = "converged";
    }

    result.params = params;
    result.loglik = result.loglik_trace.back();
    result.standardized_frailty_variance = frailty_variance_standardized(params.frailty());
    const EStep final_moments = e_step(params, ordered);
    result.posterior_frailty_means.assign(data.n_clusters(), 0.0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        result.posterior_frailty_means[order[i]] = final_moments.omega[i];
    }
    return result;
}

}  // namespace gigfrail
