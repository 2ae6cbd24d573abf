#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gigfrail/baseline.hpp"
#include "gigfrail/dataset.hpp"
#include "gigfrail/likelihood.hpp"
#include "gigfrail/optimize.hpp"

namespace gigfrail {

enum class BaselineKind { PiecewiseExponential, Weibull };

std::string_view to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(std::string_view name);

struct EmConfig {
    double tol = 1e-6;  ///< on the max-abs change of (beta, log eta, log alpha)
    int max_iter = 500;
    int k_cuts = 10;
    CutMethod cut_method = CutMethod::FailureQuantiles;
    OptimizerKind optimizer = OptimizerKind::QuasiNewtonNumericGrad;
    double lambda = 0.0;
    /// Use these cut points instead of deriving them from the data.
    std::optional<std::vector<double>> cuts;
    /// Which model fit_model() estimates.
    BaselineKind baseline = BaselineKind::PiecewiseExponential;
    /// SQUAREM extrapolation between EM steps (monotone: an extrapolated
    /// point is kept only if it does not lower the likelihood).
    bool accelerate = true;

    void validate() const;
};

struct FitResult {
    ModelParams params;
    double loglik = 0.0;
    std::vector<double> loglik_trace;
    int n_iter = 0;
    bool converged = false;
    double standardized_frailty_variance = 0.0;
    /// E(Z_i | data) at the final estimates, in the input cluster order.
    std::vector<double> posterior_frailty_means;
    std::string message;
};

/// Posterior moments omega_i = E(Z_i | data), kappa_i = E(1/Z_i | data).
struct EStep {
    std::vector<double> omega;
    std::vector<double> kappa;
};

EStep e_step(const ModelParams& params, const Dataset& data);

/// Expected complete-data log-likelihood, (beta, baseline) part, with Z_i
/// replaced by omega_i. Piecewise-exponential baseline only.
double q1(std::span<const double> beta, const PeBaseline& baseline, const Dataset& data,
          std::span<const double> omega);

/// Expected complete-data log-likelihood, alpha part:
///   -m log K_lambda(1/alpha) - (1/(2 alpha)) sum (omega_i + kappa_i).
double q2(double alpha, std::span<const double> omega, std::span<const double> kappa, double lambda);

/// Fast repeated evaluation of q1 for fixed data and cut points; the
/// parameter vector is (beta, log eta).
class Q1Evaluator {
public:
    Q1Evaluator(const Dataset& data, std::vector<double> cuts);

    double operator()(std::span<const double> beta_log_rates, std::span<const double> omega) const;

    std::size_t n_beta() const { return p_; }
    std::size_t n_rates() const { return n_rates_; }
    const std::vector<double>& cuts() const { return cuts_; }

private:
    std::vector<double> cuts_;
    std::size_t p_ = 0;
    std::size_t n_rates_ = 0;
    std::size_t n_ = 0;
    std::vector<std::size_t> cluster_;
    std::vector<int> status_;
    std::vector<std::size_t> interval_;
    std::vector<double> x_;         // n x p
    std::vector<double> exposure_;  // n x n_rates
};

struct MStepResult {
    ModelParams params;
    OptimResult q1_fit;
    OptimResult q2_fit;
};

MStepResult m_step(const Dataset& data, const EStep& moments, const ModelParams& current, const EmConfig& cfg);

/// Starting values: beta from the no-frailty piecewise-exponential PH fit,
/// alpha = 1, and interval rates (#failures in interval) / (sum of those
/// failure times), falling back to the global sum(delta)/sum(t) for intervals
/// without failures.
ModelParams initial_params(const Dataset& data, const EmConfig& cfg);

/// Interval rates used for the EM start; exposed for tests.
std::vector<double> initial_rates(const Dataset& data, const std::vector<double>& cuts);

FitResult fit_em(const Dataset& data, const EmConfig& cfg);

/// EM started from `start` (which must carry a piecewise-exponential baseline).
FitResult fit_em(const Dataset& data, const EmConfig& cfg, const ModelParams& start);

/// (beta, log eta, log alpha) for a piecewise-exponential model.
std::vector<double> pack_transformed(const ModelParams& params);
/// Inverse of pack_transformed; cuts and lambda are taken from `like`.
ModelParams unpack_transformed(std::span<const double> theta, const ModelParams& like);

}  // namespace gigfrail
