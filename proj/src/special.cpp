#include "gigfrail/special.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gigfrail {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxTerms = 100000;

// Taylor coefficients of 1/Gamma(z) about z = 0; entry k multiplies z^(k+1).
constexpr std::array<double, 28> kRecipGamma = {
    1.0,
    0.57721566490153286,
    -0.65587807152025388,
    -0.042002635034095236,
    0.16653861138229149,
    -0.042197734555544337,
    -0.0096219715278769736,
    0.0072189432466630995,
    -0.0011651675918590651,
    -0.00021524167411495097,
    0.00012805028238811619,
    -2.0134854780788239e-5,
    -1.2504934821426707e-6,
    1.1330272319816959e-6,
    -2.0563384169776071e-7,
    6.1160951044814158e-9,
    5.0020076444692229e-9,
    -1.1812745704870201e-9,
    1.0434267116911005e-10,
    7.7822634399050713e-12,
    -3.6968056186422057e-12,
    5.100370287454476e-13,
    -2.0583260535665068e-14,
    -5.348122539423018e-15,
    1.2267786282382608e-15,
    -1.1812593016974588e-16,
    1.1866922547516003e-18,
    1.4123806553180318e-18,
};

// Temme's auxiliary functions for |mu| <= 1/2:
//   g1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu),
//   g2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2.
// 1/Gamma(1+z) = sum_k kRecipGamma[k] z^k, so g1 collects the odd powers and
// g2 the even ones; neither suffers cancellation as mu -> 0.
struct TemmeGammas {
    double g1;
    double g2;
};

TemmeGammas temme_gammas(double mu) {
    const double mu2 = mu * mu;
    double g1 = 0.0;
    double g2 = 0.0;
    for (int k = static_cast<int>(kRecipGamma.size()) - 1; k >= 0; --k) {
        if (k % 2 == 1) {
            g1 = g1 * mu2 + kRecipGamma[k];
        } else {
            g2 = g2 * mu2 + kRecipGamma[k];
        }
    }
    return {-g1, g2};
}

// log(e^x K_mu(x)) and the ratio K_{mu+1}(x)/K_mu(x) for |mu| <= 1/2.
struct SeedPair {
    double log_k;
    double ratio;
};

// Temme's series, x < 2.
SeedPair seed_series(double mu, double x) {
    const double half_x = 0.5 * x;
    const double log_half_x = -std::log(half_x);
    const double e = mu * log_half_x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    const auto [g1, g2] = temme_gammas(mu);
    const double recip_gamma_plus = g2 - mu * g1;   // 1/Gamma(1+mu)
    const double recip_gamma_minus = g2 + mu * g1;  // 1/Gamma(1-mu)

    double f = fact * (g1 * std::cosh(e) + g2 * fact2 * log_half_x);
    const double ee = std::exp(e);
    double p = 0.5 * ee / recip_gamma_plus;
    double q = 0.5 / (ee * recip_gamma_minus);
    double c = 1.0;
    const double quarter_x2 = half_x * half_x;
    double sum = f;
    double sum1 = p;
    for (int i = 1; i <= kMaxTerms; ++i) {
        const double di = i;
        f = (di * f + p + q) / (di * di - mu * mu);
        c *= quarter_x2 / di;
        p /= (di - mu);
        q /= (di + mu);
        const double del = c * f;
        sum += del;
        sum1 += c * (p - di * f);
        if (std::abs(del) < std::abs(sum) * kEps) {
            return {std::log(sum) + x, sum1 / (half_x * sum)};
        }
    }
    throw std::runtime_error("log_bessel_k: series did not converge");
}

// Steed's continued fraction for the scaled function, x >= 2.
SeedPair seed_continued_fraction(double mu, double x) {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu * mu;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= kMaxTerms; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < kEps) {
            h *= a1;
            const double log_scaled = 0.5 * std::log(std::numbers::pi / (2.0 * x)) - std::log(s);
            return {log_scaled, (mu + x + 0.5 - h) / x};
        }
    }
    throw std::runtime_error("log_bessel_k: continued fraction did not converge");
}

}  // namespace

double log_bessel_k_scaled(double nu, double x) {
    if (!std::isfinite(nu) || !std::isfinite(x)) {
        throw std::domain_error("log_bessel_k: non-finite argument");
    }
    if (x <= 0.0) {
        throw std::domain_error("log_bessel_k: x must be positive, got " + std::to_string(x));
    }
    const double order = std::abs(nu);
    const int steps = static_cast<int>(std::floor(order + 0.5));
    const double mu = order - steps;

    const SeedPair seed = x < 2.0 ? seed_series(mu, x) : seed_continued_fraction(mu, x);

    // Upward recurrence on ratios r_j = K_{mu+j+1}/K_{mu+j}:
    //   r_j = 2 (mu + j) / x + 1 / r_{j-1}.
    double log_k = seed.log_k;
    double ratio = seed.ratio;
    for (int j = 1; j <= steps; ++j) {
        log_k += std::log(ratio);
        ratio = 2.0 * (mu + j) / x + 1.0 / ratio;
    }
    return log_k;
}

double log_bessel_k(double nu, double x) { return log_bessel_k_scaled(nu, x) - x; }

double bessel_k(double nu, double x) { return std::exp(log_bessel_k(nu, x)); }

double log_psi(double lambda, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::domain_error("log_psi: x must be positive and finite");
    }
    return log_bessel_k(lambda, std::sqrt(x)) - 0.5 * lambda * std::log(x);
}

double SignedLog::value() const { return sign * std::exp(log_abs); }

SignedLog log_psi_derivative(double phi, int k, double x) {
    if (k < 0) {
        throw std::domain_error("log_psi_derivative: k must be non-negative");
    }
    return {k % 2 == 0 ? 1 : -1, -k * std::numbers::ln2 + log_psi(phi + k, x)};
}

}  // namespace gigfrail
