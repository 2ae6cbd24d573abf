#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gigfrail/baseline.hpp"
#include "gigfrail/dataset.hpp"
#include "gigfrail/distributions.hpp"
#include "gigfrail/em.hpp"

namespace gigfrail {

enum class CovariateKind { Bernoulli, Uniform };

/// Bernoulli uses `param` as the success probability; Uniform draws from
/// (-param, param).
struct CovariateSpec {
    CovariateKind kind = CovariateKind::Bernoulli;
    double param = 0.5;
};

struct Scenario {
    std::string name = "scenario";
    FrailtyLaw frailty = FrailtyLaw::gamma(1.0);
    int m = 200;
    int cluster_size = 2;
    WeibullBaseline event{0.25, 2.0};
    WeibullBaseline censor{0.05, 2.0};
    std::vector<double> beta{1.5, -1.0};
    std::vector<CovariateSpec> covariates{{CovariateKind::Bernoulli, 0.5}, {CovariateKind::Uniform, 1.0}};
    std::uint64_t seed = 1;

    void validate() const;
};

/// One clustered sample. Cluster ids are zero-padded indices.
Dataset generate(const Scenario& scn, Rng& rng);

double censoring_fraction(const Dataset& data);

struct FitSpec {
    double lambda = 0.0;
    int k = 10;
};

struct StudyRow {
    std::string scenario;
    double lambda = 0.0;
    int k = 0;
    std::string param;
    double truth = 0.0;
    double mean = 0.0;
    double rmse = 0.0;
    int n_ok = 0;
    int n_fail = 0;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    /// estimates[spec][replica] = (beta..., Var); empty when that fit failed.
    std::vector<std::vector<std::vector<double>>> estimates;
    std::vector<double> censoring;  ///< per replica
};

/// Monte Carlo study: each replica draws one dataset from a generator seeded
/// with (scn.seed, replica) and fits every spec to it. Non-converged fits are
/// excluded from mean and RMSE and counted in n_fail.
StudyResult run_study(const Scenario& scn, const std::vector<FitSpec>& specs, int n_replicas,
                      const EmConfig& cfg, unsigned threads = 0);

}  // namespace gigfrail
