#pragma once

#include <string>
#include <vector>

namespace gigfrail {

/// One subject: observed time, event indicator and covariate row.
struct Record {
    double time = 0.0;
    int status = 0;
    std::vector<double> x;
};

struct Cluster {
    std::string id;
    std::vector<Record> records;

    int events() const;
};

/// Clustered right-censored survival data.
///
/// Invariants (checked on construction): at least one cluster, every cluster
/// non-empty, times positive and finite, status in {0, 1}, a common covariate
/// dimension, and at least one event overall.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<Cluster> clusters, std::vector<std::string> covariate_names = {});

    const std::vector<Cluster>& clusters() const { return clusters_; }
    const std::vector<std::string>& covariate_names() const { return covariate_names_; }
    std::size_t n_clusters() const { return clusters_.size(); }
    std::size_t n_subjects() const;
    std::size_t n_covariates() const { return n_covariates_; }
    int n_events() const;

    std::vector<double> all_times() const;
    std::vector<int> all_status() const;

    /// Same data with clusters in the given order.
    Dataset reordered(const std::vector<std::size_t>& order) const;

    friend bool operator==(const Dataset& lhs, const Dataset& rhs);

private:
    std::vector<Cluster> clusters_;
    std::vector<std::string> covariate_names_;
    std::size_t n_covariates_ = 0;
};

bool operator==(const Record& lhs, const Record& rhs);
bool operator==(const Cluster& lhs, const Cluster& rhs);

}  // namespace gigfrail
