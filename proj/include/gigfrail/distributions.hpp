#pragma once

#include <random>
#include <string>
#include <string_view>

namespace gigfrail {

using Rng = std::mt19937_64;

/// GIG(a, b, lambda) with density
///   g(x) = (a/b)^(lambda/2) / (2 K_lambda(sqrt(ab))) x^(lambda-1) exp{-(a x + b/x)/2}.
struct GigParams {
    double a = 1.0;
    double b = 1.0;
    double lambda = 0.0;

    /// Throws std::invalid_argument unless a > 0, b > 0 and lambda finite.
    void validate() const;
};

enum class FrailtyKind { Gig, Gamma, GeneralizedExponential, LogNormal };

std::string_view to_string(FrailtyKind kind);
FrailtyKind parse_frailty_kind(std::string_view name);

/// A frailty law indexed by a single dispersion parameter alpha.
///
/// - Gig:                    GIG(1/alpha, 1/alpha, lambda)
/// - Gamma:                  shape 1/alpha, scale alpha (mean 1, variance alpha)
/// - GeneralizedExponential: F(z) = (1 - e^{-z})^alpha
/// - LogNormal:              log Z ~ N(0, alpha)
struct FrailtyLaw {
    FrailtyKind kind = FrailtyKind::Gig;
    double alpha = 1.0;
    double lambda = 0.0;

    static FrailtyLaw gig(double alpha, double lambda) { return {FrailtyKind::Gig, alpha, lambda}; }
    static FrailtyLaw gamma(double alpha) { return {FrailtyKind::Gamma, alpha, 0.0}; }
    static FrailtyLaw generalized_exponential(double alpha) {
        return {FrailtyKind::GeneralizedExponential, alpha, 0.0};
    }
    static FrailtyLaw log_normal(double alpha) { return {FrailtyKind::LogNormal, alpha, 0.0}; }

    void validate() const;
    /// GIG parameters of a Gig law; throws for other kinds.
    GigParams gig_params() const;
};

double gig_log_density(const GigParams& p, double x);

/// ln E[exp(-t X)], defined for t > -a/2.
double gig_log_laplace(const GigParams& p, double t);

/// ln E[X^k] for any real k.
double gig_log_moment(const GigParams& p, double k);
double gig_moment(const GigParams& p, double k);

/// Var(Z) / E(Z)^2, the scale-free frailty variance.
double frailty_variance_standardized(const FrailtyLaw& law);

/// Exact draw from GIG(a, b, lambda) (Devroye's rejection method on the
/// log scale, valid for every parameter triple).
double sample_gig(const GigParams& p, Rng& rng);

double sample_frailty(const FrailtyLaw& law, Rng& rng);

/// Law of Z given a cluster with total cumulative risk `cum_hazard_sum`
/// (sum of H0(t) exp(x'beta)) and `event_count` events.
GigParams posterior_frailty(const FrailtyLaw& prior, double cum_hazard_sum, int event_count);

}  // namespace gigfrail
