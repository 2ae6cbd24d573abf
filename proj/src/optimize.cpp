#include "gigfrail/optimize.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

namespace gigfrail {

std::string_view to_string(OptimizerKind kind) {
    return kind == OptimizerKind::QuasiNewtonNumericGrad ? "bfgs" : "simplex";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
    if (name == "bfgs") return OptimizerKind::QuasiNewtonNumericGrad;
    if (name == "simplex") return OptimizerKind::SimplexSearch;
    throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

namespace {

// GSL minimizes; this is what it sees in place of a non-finite -f.
constexpr double kPenalty = 1e300;

struct GslVectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using GslVector = std::unique_ptr<gsl_vector, GslVectorDeleter>;

GslVector to_gsl(std::span<const double> x) {
    GslVector v(gsl_vector_alloc(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) gsl_vector_set(v.get(), i, x[i]);
    return v;
}

std::span<const double> view(const gsl_vector* v) { return {v->data, v->size}; }

double safe_eval(const Objective& f, std::span<const double> x) {
    double value = 0.0;
    try {
        value = f(x);
    } catch (const std::exception&) {
        return -std::numeric_limits<double>::infinity();
    }
    return std::isfinite(value) ? value : -std::numeric_limits<double>::infinity();
}

struct Context {
    const Objective* objective;
    std::vector<double> scratch;
};

double neg_f(const gsl_vector* x, void* params) {
    auto* ctx = static_cast<Context*>(params);
    const double v = safe_eval(*ctx->objective, view(x));
    return std::isfinite(v) ? -v : kPenalty;
}

void neg_df(const gsl_vector* x, void* params, gsl_vector* g) {
    auto* ctx = static_cast<Context*>(params);
    ctx->scratch.resize(x->size);
    numeric_gradient(*ctx->objective, view(x), ctx->scratch);
    for (std::size_t i = 0; i < x->size; ++i) {
        const double gi = ctx->scratch[i];
        gsl_vector_set(g, i, std::isfinite(gi) ? -gi : 0.0);
    }
}

void neg_fdf(const gsl_vector* x, void* params, double* f, gsl_vector* g) {
    *f = neg_f(x, params);
    neg_df(x, params, g);
}

OptimResult run_quasi_newton(const Objective& f, std::span<const double> x0, const OptimOptions& opt) {
    const std::size_t n = x0.size();
    Context ctx{&f, {}};
    gsl_multimin_function_fdf fn{&neg_f, &neg_df, &neg_fdf, n, &ctx};
    std::unique_ptr<gsl_multimin_fdfminimizer, decltype(&gsl_multimin_fdfminimizer_free)> solver(
        gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n),
        &gsl_multimin_fdfminimizer_free);
    GslVector start = to_gsl(x0);
    gsl_multimin_fdfminimizer_set(solver.get(), &fn, start.get(), opt.initial_step, 0.1);

    OptimResult result;
    int status = GSL_CONTINUE;
    int iter = 0;
    while (iter < opt.max_iter) {
        ++iter;
        status = gsl_multimin_fdfminimizer_iterate(solver.get());
        if (status != GSL_SUCCESS) break;
        const double scale = 1.0 + std::abs(solver->f);
        status = gsl_multimin_test_gradient(solver->gradient, opt.grad_tol * scale);
        if (status == GSL_SUCCESS) break;
    }
    const double gnorm = gsl_blas_dnrm2(solver->gradient);
    result.x.assign(solver->x->data, solver->x->data + n);
    result.value = -solver->f;
    result.iterations = iter;
    // A stalled line search close to a stationary point counts as converged.
    result.converged =
        status == GSL_SUCCESS || (status == GSL_ENOPROG && gnorm < 1e-5 * (1.0 + std::abs(solver->f)));
    result.message = status == GSL_SUCCESS ? "converged" : gsl_strerror(status);
    return result;
}

OptimResult run_simplex(const Objective& f, std::span<const double> x0, const OptimOptions& opt) {
    const std::size_t n = x0.size();
    Context ctx{&f, {}};
    gsl_multimin_function fn{&neg_f, n, &ctx};
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> solver(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), &gsl_multimin_fminimizer_free);
    GslVector start = to_gsl(x0);
    GslVector steps(gsl_vector_alloc(n));
    gsl_vector_set_all(steps.get(), opt.initial_step);
    gsl_multimin_fminimizer_set(solver.get(), &fn, start.get(), steps.get());

    OptimResult result;
    int status = GSL_CONTINUE;
    int iter = 0;
    while (iter < opt.max_iter) {
        ++iter;
        status = gsl_multimin_fminimizer_iterate(solver.get());
        if (status != GSL_SUCCESS) break;
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver.get()), opt.simplex_tol);
        if (status == GSL_SUCCESS) break;
    }
    result.x.assign(solver->x->data, solver->x->data + n);
    result.value = -solver->fval;
    result.iterations = iter;
    result.converged = status == GSL_SUCCESS;
    result.message = status == GSL_SUCCESS ? "converged" : gsl_strerror(status);
    return result;
}

}  // namespace

void numeric_gradient(const Objective& f, std::span<const double> x, std::span<double> grad) {
    std::vector<double> probe(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = 1e-6 * (1.0 + std::abs(x[i]));
        probe[i] = x[i] + h;
        const double up = safe_eval(f, probe);
        probe[i] = x[i] - h;
        const double down = safe_eval(f, probe);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
}

OptimResult maximize(const Objective& f, std::vector<double> x0, const OptimOptions& options) {
    // Errors are reported through status codes instead of aborting.
    static const bool handler_off = (gsl_set_error_handler_off(), true);
    (void)handler_off;
    const double start_value = safe_eval(f, x0);
    OptimResult result;
    if (x0.empty()) {
        result.x = x0;
        result.value = start_value;
        result.converged = true;
        result.message = "empty parameter vector";
    } else if (options.kind == OptimizerKind::QuasiNewtonNumericGrad) {
        result = run_quasi_newton(f, x0, options);
    } else {
        result = run_simplex(f, x0, options);
    }

    // GSL reports its own iterate; re-evaluate so the value is exactly f(x).
    result.value = safe_eval(f, result.x);
    if (!(result.value >= start_value)) {
        result.x = std::move(x0);
        result.value = start_value;
    }
    return result;
}

}  // namespace gigfrail
