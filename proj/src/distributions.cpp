#include "gigfrail/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "gigfrail/special.hpp"

namespace gigfrail {

void GigParams::validate() const {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(lambda)) {
        throw std::invalid_argument("GIG parameters require a > 0, b > 0 and finite lambda");
    }
}

std::string_view to_string(FrailtyKind kind) {
    switch (kind) {
        case FrailtyKind::Gig: return "gig";
        case FrailtyKind::Gamma: return "gamma";
        case FrailtyKind::GeneralizedExponential: return "ge";
        case FrailtyKind::LogNormal: return "lognormal";
    }
    return "unknown";
}

FrailtyKind parse_frailty_kind(std::string_view name) {
    if (name == "gig") return FrailtyKind::Gig;
    if (name == "gamma") return FrailtyKind::Gamma;
    if (name == "ge") return FrailtyKind::GeneralizedExponential;
    if (name == "lognormal") return FrailtyKind::LogNormal;
    throw std::invalid_argument("unknown frailty law '" + std::string(name) + "'");
}

void FrailtyLaw::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("frailty law requires alpha > 0");
    }
    if (kind == FrailtyKind::Gig && !std::isfinite(lambda)) {
        throw std::invalid_argument("GIG frailty requires a finite lambda");
    }
}

GigParams FrailtyLaw::gig_params() const {
    if (kind != FrailtyKind::Gig) {
        throw std::invalid_argument("gig_params: frailty law is not GIG");
    }
    validate();
    return {1.0 / alpha, 1.0 / alpha, lambda};
}

double gig_log_density(const GigParams& p, double x) {
    p.validate();
    if (!(x > 0.0)) {
        throw std::domain_error("gig_log_density: x must be positive");
    }
    const double omega = std::sqrt(p.a * p.b);
    return 0.5 * p.lambda * std::log(p.a / p.b) - std::numbers::ln2 - log_bessel_k(p.lambda, omega) +
           (p.lambda - 1.0) * std::log(x) - 0.5 * (p.a * x + p.b / x);
}

double gig_log_laplace(const GigParams& p, double t) {
    p.validate();
    const double shifted = p.a + 2.0 * t;
    if (!(shifted > 0.0)) {
        throw std::domain_error("gig_log_laplace: requires t > -a/2");
    }
    if (t == 0.0) {
        return 0.0;
    }
    return log_bessel_k(p.lambda, std::sqrt(shifted * p.b)) - log_bessel_k(p.lambda, std::sqrt(p.a * p.b)) +
           0.5 * p.lambda * std::log(p.a / shifted);
}

double gig_log_moment(const GigParams& p, double k) {
    p.validate();
    if (k == 0.0) {
        return 0.0;
    }
    const double omega = std::sqrt(p.a * p.b);
    return log_bessel_k(p.lambda + k, omega) - log_bessel_k(p.lambda, omega) + 0.5 * k * std::log(p.b / p.a);
}

double gig_moment(const GigParams& p, double k) { return std::exp(gig_log_moment(p, k)); }

double frailty_variance_standardized(const FrailtyLaw& law) {
    law.validate();
    switch (law.kind) {
        case FrailtyKind::Gig: {
            // E(Z^2)/E(Z)^2 - 1 with both moments taken from the same Bessel family.
            const GigParams p = law.gig_params();
            return std::expm1(gig_log_moment(p, 2.0) - 2.0 * gig_log_moment(p, 1.0));
        }
        case FrailtyKind::Gamma:
            return law.alpha;
        case FrailtyKind::GeneralizedExponential: {
            using boost::math::digamma;
            using boost::math::trigamma;
            const double mean = digamma(law.alpha + 1.0) - digamma(1.0);
            const double var = trigamma(1.0) - trigamma(law.alpha + 1.0);
            return var / (mean * mean);
        }
        case FrailtyKind::LogNormal:
            return std::expm1(law.alpha);
    }
    throw std::logic_error("frailty_variance_standardized: unhandled law");
}

namespace {

// Uniform on the open interval (0, 1).
double uniform_open(Rng& rng) {
    double u = 0.0;
    while (u == 0.0) {
        u = std::generate_canonical<double, 53>(rng);
    }
    return u;
}

// Draws Y with density proportional to y^(p-1) exp{-omega (y + 1/y) / 2},
// p >= 0, following Devroye (2014): X = log(Y / m) has the log-concave
// density exp(psi(x)) and is sampled from a three-piece hull.
double sample_gig_symmetric(double p, double omega, Rng& rng) {
    const double alpha = std::sqrt(omega * omega + p * p) - p;
    auto psi = [&](double x) { return -alpha * (std::cosh(x) - 1.0) - p * (std::expm1(x) - x); };
    auto dpsi = [&](double x) { return -alpha * std::sinh(x) - p * std::expm1(x); };

    double t = 1.0;
    if (const double v = -psi(1.0); v > 2.0) {
        t = std::sqrt(2.0 / (alpha + p));
    } else if (v < 0.5) {
        t = std::log(4.0 / (alpha + 2.0 * p));
    }
    double s = 1.0;
    if (const double v = -psi(-1.0); v > 2.0) {
        s = std::sqrt(4.0 / (alpha * std::cosh(1.0) + p));
    } else if (v < 0.5) {
        const double inv_a = 1.0 / alpha;
        s = std::log1p(inv_a + std::sqrt(inv_a * inv_a + 2.0 * inv_a));
        if (p > 0.0) s = std::min(s, 1.0 / p);
    }

    const double eta = -psi(t);
    const double zeta = -dpsi(t);
    const double theta = -psi(-s);
    const double xi = dpsi(-s);
    const double left_scale = 1.0 / xi;
    const double right_scale = 1.0 / zeta;
    const double right = t - right_scale * eta;
    const double left = s - left_scale * theta;
    const double mid = right + left;
    const double total = left_scale + mid + right_scale;

    double x = 0.0;
    for (;;) {
        const double u = std::generate_canonical<double, 53>(rng);
        const double v = uniform_open(rng);
        const double w = std::generate_canonical<double, 53>(rng);
        double hull = 1.0;
        if (u < mid / total) {
            x = -left + mid * v;
        } else if (u < (mid + right_scale) / total) {
            x = right - right_scale * std::log(v);
            hull = std::exp(-eta - zeta * (x - t));
        } else {
            x = -left + left_scale * std::log(v);
            hull = std::exp(-theta + xi * (x + s));
        }
        if (w * hull <= std::exp(psi(x))) {
            break;
        }
    }
    const double ratio = p / omega;
    return (ratio + std::sqrt(1.0 + ratio * ratio)) * std::exp(x);
}

}  // namespace

double sample_gig(const GigParams& p, Rng& rng) {
    p.validate();
    const double omega = std::sqrt(p.a * p.b);
    const double scale = std::sqrt(p.b / p.a);
    const double y = sample_gig_symmetric(std::abs(p.lambda), omega, rng);
    return p.lambda >= 0.0 ? scale * y : scale / y;
}

double sample_frailty(const FrailtyLaw& law, Rng& rng) {
    law.validate();
    switch (law.kind) {
        case FrailtyKind::Gig:
            return sample_gig(law.gig_params(), rng);
        case FrailtyKind::Gamma: {
            std::gamma_distribution<double> dist(1.0 / law.alpha, law.alpha);
            return dist(rng);
        }
        case FrailtyKind::GeneralizedExponential: {
            // inverse of F(z) = (1 - e^{-z})^alpha
            const double u = uniform_open(rng);
            return -std::log1p(-std::pow(u, 1.0 / law.alpha));
        }
        case FrailtyKind::LogNormal: {
            std::lognormal_distribution<double> dist(0.0, std::sqrt(law.alpha));
            return dist(rng);
        }
    }
    throw std::logic_error("sample_frailty: unhandled law");
}

GigParams posterior_frailty(const FrailtyLaw& prior, double cum_hazard_sum, int event_count) {
    const GigParams base = prior.gig_params();
    if (!(cum_hazard_sum >= 0.0) || event_count < 0) {
        throw std::invalid_argument("posterior_frailty: requires non-negative risk and event count");
    }
    return {base.a + 2.0 * cum_hazard_sum, base.b, base.lambda + event_count};
}

}  // namespace gigfrail
