#pragma once

#include <span>
#include <vector>

#include "gigfrail/baseline.hpp"
#include "gigfrail/dataset.hpp"
#include "gigfrail/distributions.hpp"

namespace gigfrail {

/// theta = (beta, baseline, alpha) with the GIG index lambda held fixed.
struct ModelParams {
    std::vector<double> beta;
    Baseline baseline;
    double alpha = 1.0;
    double lambda = 0.0;

    FrailtyLaw frailty() const { return FrailtyLaw::gig(alpha, lambda); }
};

double linear_predictor(std::span<const double> beta, std::span<const double> x);

/// Per-cluster sufficient quantities at given parameters.
struct ClusterRisk {
    double cum_hazard_sum = 0.0;  ///< sum_j H0(t_ij) exp(x_ij' beta)
    double log_hazard_sum = 0.0;  ///< sum_j delta_ij [log h0(t_ij) + x_ij' beta]
    int events = 0;
};

ClusterRisk cluster_risk(const ModelParams& params, const Cluster& cluster);

/// ln S(t) for a subject with covariates at zero (beta is ignored).
double marginal_log_survival(const ModelParams& params, double t);

/// ln f(t) for a subject with covariates at zero (beta is ignored).
double marginal_log_density(const ModelParams& params, double t);

/// ln S(t_1, ..., t_n) for the members of `cluster` evaluated at `eval_times`.
double cluster_log_survival(const ModelParams& params, const Cluster& cluster,
                            std::span<const double> eval_times);

/// Log-likelihood contribution of one cluster (frailty integrated out):
///   sum delta (log h0 + x'beta) - (lambda + d) log alpha
///     + log Psi_{lambda+d}(alpha^-1 [alpha^-1 + 2 s]) - log K_lambda(1/alpha),
/// with d the event count and s the cluster's cumulative risk.
double cluster_log_likelihood(const ModelParams& params, const Cluster& cluster);

/// Sum of cluster contributions, in cluster order. May return a non-finite
/// value when the parameters are numerically out of range; callers decide
/// how to report it.
double observed_log_likelihood(const ModelParams& params, const Dataset& data);

}  // namespace gigfrail
