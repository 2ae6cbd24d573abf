#include "gigfrail/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gigfrail/likelihood.hpp"
#include "gigfrail/parallel.hpp"

namespace gigfrail {

void Scenario::validate() const {
    frailty.validate();
    event.validate();
    censor.validate();
    if (m < 1) throw std::invalid_argument("scenario: need at least one cluster");
    if (cluster_size < 1) throw std::invalid_argument("scenario: cluster size must be at least 1");
    if (beta.size() != covariates.size()) {
        throw std::invalid_argument("scenario: beta and covariate specs differ in length");
    }
    for (const auto& c : covariates) {
        const bool ok = c.kind == CovariateKind::Bernoulli ? (c.param >= 0.0 && c.param <= 1.0) : c.param > 0.0;
        if (!ok) throw std::invalid_argument("scenario: invalid covariate parameter");
    }
}

namespace {

double weibull_draw(const WeibullBaseline& w, double multiplier, Rng& rng) {
    std::exponential_distribution<double> expo(1.0);
    return std::pow(expo(rng) / (w.sigma * multiplier), 1.0 / w.gamma);
}

}  // namespace

Dataset generate(const Scenario& scn, Rng& rng) {
    scn.validate();
    const int width = static_cast<int>(std::to_string(scn.m - 1).size());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Cluster> clusters;
    clusters.reserve(static_cast<std::size_t>(scn.m));
    for (int i = 0; i < scn.m; ++i) {
        Cluster c;
        const std::string idx = std::to_string(i);
        c.id = std::string(static_cast<std::size_t>(width) - idx.size(), '0') + idx;
        const double z = sample_frailty(scn.frailty, rng);
        for (int j = 0; j < scn.cluster_size; ++j) {
            Record r;
            for (const auto& cov : scn.covariates) {
                const double u = unif(rng);
                r.x.push_back(cov.kind == CovariateKind::Bernoulli ? (u < cov.param ? 1.0 : 0.0)
                                                                   : cov.param * (2.0 * u - 1.0));
            }
            const double risk = z * std::exp(linear_predictor(scn.beta, r.x));
            const double t0 = weibull_draw(scn.event, risk, rng);
            const double cens = weibull_draw(scn.censor, 1.0, rng);
            r.time = std::min(t0, cens);
            r.status = t0 <= cens ? 1 : 0;
            c.records.push_back(std::move(r));
        }
        clusters.push_back(std::move(c));
    }
    return Dataset(std::move(clusters));
}

double censoring_fraction(const Dataset& data) {
    const auto n = static_cast<double>(data.n_subjects());
    return (n - static_cast<double>(data.n_events())) / n;
}

StudyResult run_study(const Scenario& scn, const std::vector<FitSpec>& specs, int n_replicas,
                      const EmConfig& cfg, unsigned threads) {
    scn.validate();
    if (n_replicas < 1) throw std::invalid_argument("run_study: need at least one replica");
    if (specs.empty()) throw std::invalid_argument("run_study: no fit specifications");

    const std::size_t n_rep = static_cast<std::size_t>(n_replicas);
    StudyResult out;
    out.estimates.assign(specs.size(), std::vector<std::vector<double>>(n_rep));
    out.censoring.assign(n_rep, 0.0);

    parallel_for(n_rep, threads, [&](std::size_t r) {
        std::seed_seq seq{static_cast<std::uint32_t>(scn.seed), static_cast<std::uint32_t>(scn.seed >> 32),
                          static_cast<std::uint32_t>(r)};
        Rng rng(seq);
        Dataset data;
        try {
            data = generate(scn, rng);
        } catch (const std::exception&) {
            return;  // e.g. a replica without events; every spec counts it as failed
        }
        out.censoring[r] = censoring_fraction(data);
        for (std::size_t s = 0; s < specs.size(); ++s) {
            try {
                EmConfig local = cfg;
                local.lambda = specs[s].lambda;
                local.k_cuts = specs[s].k;
                local.cuts.reset();
                local.baseline = BaselineKind::PiecewiseExponential;
                const FitResult fit = fit_em(data, local);
                if (!fit.converged) continue;
                std::vector<double> est = fit.params.beta;
                est.push_back(fit.standardized_frailty_variance);
                out.estimates[s][r] = std::move(est);
            } catch (const std::exception&) {
            }
        }
    });

    std::vector<std::string> names;
    for (std::size_t j = 0; j < scn.beta.size(); ++j) names.push_back("beta_" + std::to_string(j + 1));
    names.emplace_back("Var");
    std::vector<double> truth = scn.beta;
    truth.push_back(frailty_variance_standardized(scn.frailty));

    for (std::size_t s = 0; s < specs.size(); ++s) {
        for (std::size_t j = 0; j < names.size(); ++j) {
            StudyRow row{scn.name, specs[s].lambda, specs[s].k, names[j], truth[j]};
            double sum = 0.0;
            double sq = 0.0;
            for (const auto& est : out.estimates[s]) {
                if (est.empty()) continue;
                ++row.n_ok;
                sum += est[j];
                sq += (est[j] - truth[j]) * (est[j] - truth[j]);
            }
            row.n_fail = n_replicas - row.n_ok;
            if (row.n_ok > 0) {
                row.mean = sum / row.n_ok;
                row.rmse = std::sqrt(sq / row.n_ok);
            } else {
                row.mean = row.rmse = std::nan("");
            }
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

}  // namespace gigfrail
