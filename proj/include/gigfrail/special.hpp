#pragma once

namespace gigfrail {

/// Natural log of the modified Bessel function of the third kind K_nu(x).
///
/// Valid for any finite real order and x > 0. The value is assembled from
/// log-ratios so it neither overflows for small x / large |nu| nor underflows
/// for large x. Throws std::domain_error for x <= 0 or non-finite input.
double log_bessel_k(double nu, double x);

/// ln(e^x K_nu(x)); the exponential factor is never formed, so differences
/// of these at large, nearby arguments keep full precision.
double log_bessel_k_scaled(double nu, double x);

/// Linear-scale K_nu(x); exp(log_bessel_k). Intended for tests and small
/// arguments only.
double bessel_k(double nu, double x);

/// ln Psi_lambda(x), where Psi_lambda(x) = K_lambda(sqrt(x)) / x^(lambda/2).
double log_psi(double lambda, double x);

/// A real number stored as sign and log-magnitude.
struct SignedLog {
    int sign = 1;
    double log_abs = 0.0;

    double value() const;
};

/// k-th derivative of Psi_phi at x:
///   d^k/dx^k Psi_phi(x) = (-1/2)^k Psi_{phi+k}(x).
SignedLog log_psi_derivative(double phi, int k, double x);

}  // namespace gigfrail
