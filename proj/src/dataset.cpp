#include "gigfrail/dataset.hpp"

#include <cmath>
#include <stdexcept>

namespace gigfrail {

int Cluster::events() const {
    int d = 0;
    for (const auto& r : records) d += r.status;
    return d;
}

Dataset::Dataset(std::vector<Cluster> clusters, std::vector<std::string> covariate_names)
    : clusters_(std::move(clusters)), covariate_names_(std::move(covariate_names)) {
    if (clusters_.empty()) {
        throw std::invalid_argument("dataset has no clusters");
    }
    n_covariates_ = clusters_.front().records.empty() ? 0 : clusters_.front().records.front().x.size();
    int events = 0;
    for (const auto& c : clusters_) {
        if (c.records.empty()) {
            throw std::invalid_argument("cluster '" + c.id + "' is empty");
        }
        for (const auto& r : c.records) {
            if (!(r.time > 0.0) || !std::isfinite(r.time)) {
                throw std::invalid_argument("cluster '" + c.id + "': times must be positive and finite");
            }
            if (r.status != 0 && r.status != 1) {
                throw std::invalid_argument("cluster '" + c.id + "': status must be 0 or 1");
            }
            if (r.x.size() != n_covariates_) {
                throw std::invalid_argument("cluster '" + c.id + "': inconsistent covariate dimension");
            }
            for (double v : r.x) {
                if (!std::isfinite(v)) {
                    throw std::invalid_argument("cluster '" + c.id + "': non-finite covariate");
                }
            }
            events += r.status;
        }
    }
    if (events == 0) {
        throw std::invalid_argument("dataset contains no events");
    }
    if (covariate_names_.empty()) {
        for (std::size_t j = 0; j < n_covariates_; ++j) covariate_names_.push_back("x" + std::to_string(j + 1));
    } else if (covariate_names_.size() != n_covariates_) {
        throw std::invalid_argument("covariate names do not match the covariate dimension");
    }
}

std::size_t Dataset::n_subjects() const {
    std::size_t n = 0;
    for (const auto& c : clusters_) n += c.records.size();
    return n;
}

int Dataset::n_events() const {
    int d = 0;
    for (const auto& c : clusters_) d += c.events();
    return d;
}

std::vector<double> Dataset::all_times() const {
    std::vector<double> out;
    out.reserve(n_subjects());
    for (const auto& c : clusters_)
        for (const auto& r : c.records) out.push_back(r.time);
    return out;
}

std::vector<int> Dataset::all_status() const {
    std::vector<int> out;
    out.reserve(n_subjects());
    for (const auto& c : clusters_)
        for (const auto& r : c.records) out.push_back(r.status);
    return out;
}

Dataset Dataset::reordered(const std::vector<std::size_t>& order) const {
    std::vector<Cluster> out;
    out.reserve(order.size());
    for (std::size_t i : order) out.push_back(clusters_.at(i));
    return Dataset(std::move(out), covariate_names_);
}

bool operator==(const Record& lhs, const Record& rhs) {
    return lhs.time == rhs.time && lhs.status == rhs.status && lhs.x == rhs.x;
}

bool operator==(const Cluster& lhs, const Cluster& rhs) {
    return lhs.id == rhs.id && lhs.records == rhs.records;
}

bool operator==(const Dataset& lhs, const Dataset& rhs) {
    return lhs.clusters_ == rhs.clusters_ && lhs.covariate_names_ == rhs.covariate_names_;
}

}  // namespace gigfrail
