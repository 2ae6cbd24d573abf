#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gigfrail/distributions.hpp"

using namespace gigfrail;
using boost::math::quadrature::exp_sinh;
using boost::math::quadrature::gauss_kronrod;

namespace {

const std::vector<GigParams> kParams = {
    {1.0, 1.0, 0.0},  {2.0, 2.0, -0.5}, {0.5, 0.5, 0.5}, {4.0, 0.25, 1.0},
    {0.3, 3.0, -2.3}, {10.0, 10.0, 3.7}, {1.0, 1e-2, 0.2}, {50.0, 50.0, -0.5},
};

double integrate_positive(const std::function<double(double)>& f) {
    exp_sinh<double> integrator;
    return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

// exp(log g(x) + extra), zero outside (0, inf)
double weighted(const GigParams& p, double x, double extra) {
    if (!(x > 0.0) || !std::isfinite(x)) return 0.0;
    const double v = gig_log_density(p, x) + extra;
    return std::isnan(v) ? 0.0 : std::exp(v);
}

double density(const GigParams& p, double x) { return weighted(p, x, 0.0); }

}  // namespace

TEST_CASE("GIG density integrates to one") {
    for (const auto& p : kParams) {
        CAPTURE(p.lambda);
        CHECK(integrate_positive([&](double x) { return density(p, x); }) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("GIG moments agree with quadrature") {
    for (const auto& p : kParams) {
        for (double k : {1.0, -1.0, 2.0, 0.5, -2.5}) {
            const double q = integrate_positive([&](double x) { return weighted(p, x, k * std::log(x)); });
            CAPTURE(p.lambda);
            CAPTURE(k);
            CHECK(gig_moment(p, k) == doctest::Approx(q).epsilon(1e-8));
        }
        CHECK(gig_log_moment(p, 0.0) == 0.0);
    }
}

TEST_CASE("GIG Laplace transform agrees with quadrature") {
    for (const auto& p : kParams) {
        for (double frac : {-0.45, -0.1, 0.3, 2.0, 40.0}) {
            const double t = frac * p.a;
            const double q = integrate_positive([&](double x) { return weighted(p, x, -t * x); });
            CAPTURE(p.lambda);
            CAPTURE(t);
            CHECK(gig_log_laplace(p, t) == doctest::Approx(std::log(q)).epsilon(1e-8).scale(1.0));
        }
        CHECK(gig_log_laplace(p, 0.0) == 0.0);
        CHECK_THROWS_AS(gig_log_laplace(p, -p.a / 2.0), std::domain_error);
    }
}

TEST_CASE("inverse Gaussian special case") {
    for (double alpha : {0.1, 0.7, 1.0, 5.0}) {
        const FrailtyLaw ig = FrailtyLaw::gig(alpha, -0.5);
        const GigParams p = ig.gig_params();
        CHECK(p.a == doctest::Approx(1.0 / alpha));
        CHECK(p.b == doctest::Approx(1.0 / alpha));
        CHECK(gig_moment(p, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(frailty_variance_standardized(ig) == doctest::Approx(alpha).epsilon(1e-12));
        for (double t : {0.01, 1.0, 30.0}) {
            const double closed = (1.0 - std::sqrt(1.0 + 2.0 * alpha * t)) / alpha;
            CHECK(gig_log_laplace(p, t) == doctest::Approx(closed).epsilon(1e-12));
        }
    }
}

TEST_CASE("standardized variance of the other frailty laws") {
    CHECK(frailty_variance_standardized(FrailtyLaw::gamma(0.8)) == 0.8);
    CHECK(frailty_variance_standardized(FrailtyLaw::log_normal(0.5)) == doctest::Approx(std::expm1(0.5)));
    for (double alpha : {0.5, 1.0, 3.0}) {
        // GE density alpha (1 - e^-z)^(alpha-1) e^-z
        const auto f = [&](double z) { return alpha * std::pow(-std::expm1(-z), alpha - 1.0) * std::exp(-z); };
        const double m1 = integrate_positive([&](double z) { return z * f(z); });
        const double m2 = integrate_positive([&](double z) { return z * z * f(z); });
        CHECK(frailty_variance_standardized(FrailtyLaw::generalized_exponential(alpha)) ==
              doctest::Approx((m2 - m1 * m1) / (m1 * m1)).epsilon(1e-8));
    }
    // GIG: from quadrature moments
    for (const auto& p : kParams) {
        if (p.a != p.b) continue;
        const FrailtyLaw law = FrailtyLaw::gig(1.0 / p.a, p.lambda);
        const double m1 = integrate_positive([&](double x) { return weighted(p, x, std::log(x)); });
        const double m2 = integrate_positive([&](double x) { return weighted(p, x, 2.0 * std::log(x)); });
        CHECK(frailty_variance_standardized(law) == doctest::Approx(m2 / (m1 * m1) - 1.0).epsilon(1e-8));
    }
}

TEST_CASE("GIG sampler passes a Kolmogorov-Smirnov test on 1e6 draws") {
    const std::vector<GigParams> cases = {
        {1.0, 1.0, -0.5}, {2.0, 2.0, 0.5}, {0.2, 5.0, 0.0}, {3.0, 0.1, 2.5}, {1e-3, 1e-3, -1.2}, {400.0, 400.0, 1.0},
    };
    const std::size_t n = 1'000'000;
    for (std::size_t c = 0; c < cases.size(); ++c) {
        const GigParams& p = cases[c];
        Rng rng(1000 + c);
        std::vector<double> draws(n);
        for (auto& d : draws) d = sample_gig(p, rng);
        std::sort(draws.begin(), draws.end());
        CHECK(draws.front() > 0.0);

        // exact CDF at 4000 empirical quantiles by piecewise Gauss-Kronrod
        double cdf = gauss_kronrod<double, 61>::integrate([&](double x) { return density(p, x); }, 0.0,
                                                          draws[n / 8000], 8, 1e-11);
        double d_stat = 0.0;
        std::size_t prev = n / 8000;
        for (std::size_t q = 1; q <= 4000; ++q) {
            const std::size_t idx = std::min(n - 1, n / 8000 + (q - 1) * (n / 4000));
            if (idx != prev) {
                cdf += gauss_kronrod<double, 61>::integrate([&](double x) { return density(p, x); }, draws[prev],
                                                            draws[idx], 3, 1e-11);
                prev = idx;
            }
            const double lo = static_cast<double>(idx) / n;
            const double hi = static_cast<double>(idx + 1) / n;
            d_stat = std::max({d_stat, std::abs(cdf - lo), std::abs(cdf - hi)});
        }
        CAPTURE(c);
        CHECK(d_stat < 1.628 / std::sqrt(static_cast<double>(n)));  // 1% level
    }
}

TEST_CASE("frailty samplers have the right first two moments") {
    const int n = 400'000;
    const std::vector<FrailtyLaw> laws = {FrailtyLaw::gamma(1.0), FrailtyLaw::gamma(0.3),
                                          FrailtyLaw::generalized_exponential(2.0), FrailtyLaw::log_normal(0.5),
                                          FrailtyLaw::gig(1.0, 0.5), FrailtyLaw::gig(1.0, 1.0)};
    Rng rng(99);
    for (const auto& law : laws) {
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double z = sample_frailty(law, rng);
            s1 += z;
            s2 += z * z;
        }
        const double mean = s1 / n;
        const double rel_var = (s2 / n - mean * mean) / (mean * mean);
        CAPTURE(to_string(law.kind));
        CHECK(rel_var == doctest::Approx(frailty_variance_standardized(law)).epsilon(0.05));
        if (law.kind == FrailtyKind::GeneralizedExponential) {
            CHECK(mean == doctest::Approx(boost::math::digamma(3.0) - boost::math::digamma(1.0)).epsilon(0.01));
        } else if (law.kind != FrailtyKind::Gig) {
            const double expected = law.kind == FrailtyKind::LogNormal ? std::exp(law.alpha / 2.0) : 1.0;
            CHECK(mean == doctest::Approx(expected).epsilon(0.01));
        }
    }
}

TEST_CASE("sampling is reproducible from a seed") {
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(sample_gig({0.4, 2.0, -1.3}, a) == sample_gig({0.4, 2.0, -1.3}, b));
}

TEST_CASE("posterior frailty law is prior times the cluster likelihood kernel") {
    const FrailtyLaw prior = FrailtyLaw::gig(1.5, -0.3);
    const double s = 0.8;
    const int d = 3;
    const GigParams post = posterior_frailty(prior, s, d);
    CHECK(post.a == doctest::Approx(1.0 / 1.5 + 2.0 * s));
    CHECK(post.b == doctest::Approx(1.0 / 1.5));
    CHECK(post.lambda == doctest::Approx(-0.3 + d));
    const GigParams pp = prior.gig_params();
    const auto kernel = [&](double z) { return weighted(pp, z, d * std::log(z) - s * z); };
    const double norm = integrate_positive(kernel);
    for (double z : {0.1, 0.9, 2.5, 6.0}) {
        CHECK(density(post, z) == doctest::Approx(kernel(z) / norm).epsilon(1e-9));
    }
    CHECK_THROWS_AS(posterior_frailty(prior, -1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(posterior_frailty(prior, 1.0, -1), std::invalid_argument);
    CHECK_THROWS(posterior_frailty(FrailtyLaw::gamma(1.0), 1.0, 1));
}

TEST_CASE("parameter validation and names") {
    CHECK_THROWS_AS(GigParams({0.0, 1.0, 0.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(GigParams({1.0, -1.0, 0.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(gig_log_density({1.0, 1.0, 0.0}, 0.0), std::domain_error);
    CHECK_THROWS(FrailtyLaw::gamma(0.0).validate());
    CHECK_THROWS(FrailtyLaw::gig(1.0, std::nan("")).validate());
    for (auto k : {FrailtyKind::Gig, FrailtyKind::Gamma, FrailtyKind::GeneralizedExponential, FrailtyKind::LogNormal}) {
        CHECK(parse_frailty_kind(to_string(k)) == k);
    }
    CHECK_THROWS_AS(parse_frailty_kind("weibull"), std::invalid_argument);
}

TEST_CASE("closed-form spot values") {
    // K_{1/2}(1) = sqrt(pi/2) e^-1
    const double k_half = std::sqrt(M_PI / 2.0) * std::exp(-1.0);
    CHECK(gig_log_density({1.0, 1.0, 0.5}, 1.0) ==
          doctest::Approx(std::log(std::exp(-1.0) / (2.0 * k_half))).epsilon(1e-14));
    CHECK(gig_log_laplace({1.0, 1.0, -0.5}, 0.5) == doctest::Approx(1.0 - std::sqrt(2.0)).epsilon(1e-14));
    const GigParams ig{1.0, 1.0, -0.5};
    CHECK(gig_moment(ig, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gig_moment(ig, 2.0) - 1.0 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(gig_moment(ig, 0.0) == 1.0);
    CHECK(frailty_variance_standardized(FrailtyLaw::gig(1.0, -0.5)) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(frailty_variance_standardized(FrailtyLaw::log_normal(1.0)) == doctest::Approx(1.718281828).epsilon(1e-9));
    CHECK(frailty_variance_standardized(FrailtyLaw::gamma(1.0)) == 1.0);
    CHECK(frailty_variance_standardized(FrailtyLaw::generalized_exponential(1.0)) == doctest::Approx(1.0));
}

TEST_CASE("index reflection: g_{-lambda}(x) = g_lambda(1/x) / x^2 when a = b") {
    for (double lambda : {0.3, 1.0, 2.7}) {
        for (double x : {0.2, 1.0, 3.5}) {
            const GigParams pos{1.7, 1.7, lambda};
            const GigParams neg{1.7, 1.7, -lambda};
            CHECK(gig_log_density(neg, x) ==
                  doctest::Approx(gig_log_density(pos, 1.0 / x) - 2.0 * std::log(x)).epsilon(1e-13).scale(1.0));
        }
    }
}

TEST_CASE("Laplace transform, moments and Jensen are mutually consistent") {
    for (const auto& p : kParams) {
        const double h = 1e-5 * p.a;
        const double slope = -(gig_log_laplace(p, h) - gig_log_laplace(p, -h)) / (2.0 * h);
        CHECK(slope == doctest::Approx(gig_moment(p, 1.0)).epsilon(1e-6));
        CHECK(gig_moment(p, 1.0) * gig_moment(p, -1.0) >= 1.0);
    }
    for (double alpha : {0.3, 2.0}) {
        const GigParams p = FrailtyLaw::gig(alpha, -0.5).gig_params();
        for (double t = -p.a / 2.0 + 1e-6; t <= 10.0; t += 0.37) {
            const double closed = (1.0 - std::sqrt(1.0 + 2.0 * alpha * t)) / alpha;
            CHECK(gig_log_laplace(p, t) == doctest::Approx(closed).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("posterior examples") {
    const GigParams prior = posterior_frailty(FrailtyLaw::gig(1.0, 0.0), 0.0, 0);
    CHECK(prior.a == 1.0);
    CHECK(prior.b == 1.0);
    CHECK(prior.lambda == 0.0);
    const GigParams post = posterior_frailty(FrailtyLaw::gig(0.5, 0.5), 1.25, 2);
    CHECK(post.a == doctest::Approx(4.5));
    CHECK(post.b == doctest::Approx(2.0));
    CHECK(post.lambda == doctest::Approx(2.5));
}

TEST_CASE("one million draws reproduce the reference moments") {
    Rng rng(2024);
    const int n = 1'000'000;
    for (const FrailtyLaw& law : {FrailtyLaw::gig(1.0, -0.5), FrailtyLaw::log_normal(1.0)}) {
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double z = sample_frailty(law, rng);
            s1 += z;
            s2 += z * z;
        }
        const double mean = s1 / n;
        const double var = s2 / n - mean * mean;
        if (law.kind == FrailtyKind::Gig) {
            CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
            CHECK(var == doctest::Approx(1.0).epsilon(0.05));
        } else {
            CHECK(var / (mean * mean) == doctest::Approx(1.718).epsilon(0.05));
        }
    }
}
