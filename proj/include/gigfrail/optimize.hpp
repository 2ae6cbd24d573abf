#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gigfrail {

enum class OptimizerKind { QuasiNewtonNumericGrad, SimplexSearch };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

struct OptimOptions {
    OptimizerKind kind = OptimizerKind::QuasiNewtonNumericGrad;
    int max_iter = 1000;
    /// Quasi-Newton stops when ||grad|| < grad_tol * (1 + |f|).
    double grad_tol = 1e-10;
    /// Simplex stops when its characteristic size drops below this.
    double simplex_tol = 1e-10;
    double initial_step = 0.1;
};

struct OptimResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

using Objective = std::function<double(std::span<const double>)>;

/// Maximizes `f` from `x0`. Non-finite objective values (or exceptions thrown
/// by `f`) are treated as -infinity so line searches back away from them.
/// The returned point is never worse than `x0`.
OptimResult maximize(const Objective& f, std::vector<double> x0, const OptimOptions& options = {});

/// Central-difference gradient with step 1e-6 * (1 + |x_i|).
void numeric_gradient(const Objective& f, std::span<const double> x, std::span<double> grad);

}  // namespace gigfrail
