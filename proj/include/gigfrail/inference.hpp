#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gigfrail/dataset.hpp"
#include "gigfrail/distributions.hpp"
#include "gigfrail/em.hpp"

namespace gigfrail {

/// Direct maximum likelihood for the Weibull-baseline GIG frailty model over
/// (beta, log sigma, log gamma, log alpha); lambda is taken from cfg.
FitResult fit_parametric_weibull(const Dataset& data, const EmConfig& cfg);

/// fit_em or fit_parametric_weibull according to cfg.baseline.
FitResult fit_model(const Dataset& data, const EmConfig& cfg);

/// Flattened natural-scale estimates: beta_1..p, baseline parameters
/// (eta_1..eta_{k+1} or sigma, gamma), alpha and the standardized frailty
/// variance, in that order.
std::vector<double> parameter_vector(const FitResult& fit);
std::vector<std::string> parameter_names(const FitResult& fit, const Dataset& data);

struct BootstrapReplicate {
    std::vector<double> estimates;
    double loglik = 0.0;
    bool converged = false;
    std::string message;
};

struct BootstrapResult {
    std::vector<BootstrapReplicate> replicates;
    std::vector<double> standard_errors;
    int n_resamples = 0;
    int n_excluded = 0;
    std::uint64_t seed = 0;
    /// True when fewer than two replicates were usable (SEs are then zero).
    bool degenerate = false;
};

/// Cluster bootstrap: resample m clusters with replacement B times, refit
/// with the cut points of the full-data fit held fixed, and report the
/// empirical standard deviation of each parameter over converged refits.
/// Replicate b draws from a generator seeded with (seed, b).
BootstrapResult bootstrap_se(const Dataset& data, const EmConfig& cfg, int n_resamples, std::uint64_t seed,
                             unsigned threads = 0);

struct ProfilePoint {
    double lambda = 0.0;
    double loglik = 0.0;
    ModelParams params;
    bool converged = false;
};

struct ProfileResult {
    std::vector<ProfilePoint> points;
    /// (lambda, reason) for grid points whose fit failed outright.
    std::vector<std::pair<double, std::string>> failures;

    /// Index into points of the largest log-likelihood.
    std::size_t argmax() const;
};

ProfileResult profile_lambda(const Dataset& data, const std::vector<double>& grid, const EmConfig& cfg,
                             unsigned threads = 0);

/// lo, lo + step, ..., hi (inclusive, count fixed by rounding).
std::vector<double> make_grid(double lo, double hi, double step);

struct AicRow {
    int k = 0;
    double aic = 0.0;
    double loglik = 0.0;
    int n_params = 0;
    bool ok = false;
    std::string message;
};

struct CutSelection {
    int k = 0;
    FitResult fit;
    std::vector<AicRow> table;
};

/// AIC = 2 (p + (k + 1) + 1) - 2 loglik over the candidate cut counts.
CutSelection select_cuts_aic(const Dataset& data, double lambda, const std::vector<int>& k_range,
                             const EmConfig& cfg, unsigned threads = 0);

/// First and second derivatives of J(u) = log L(-u) for the GIG frailty,
/// evaluated through the Bessel family {lambda, lambda+1, lambda+2}.
struct JDerivatives {
    double first = 0.0;
    double second = 0.0;
};

JDerivatives rfv_j_derivatives(const FrailtyLaw& law, double u);

/// Relative frailty variance RFV(s) = J''(-s/mu) / J'(-s/mu)^2.
double rfv(const FrailtyLaw& law, double s);

/// alpha such that RFV(0) = target for GIG(1/alpha, 1/alpha, lambda).
double rfv_alpha_for_target(double lambda, double target);

struct KmPoint {
    double time = 0.0;
    double survival = 1.0;
};

/// Product-limit estimate; the first point is (0, 1) and the remaining
/// points are the distinct event times with the survival just after them.
std::vector<KmPoint> kaplan_meier(const std::vector<double>& times, const std::vector<int>& events);

}  // namespace gigfrail
