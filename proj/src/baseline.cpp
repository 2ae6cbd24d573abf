#include "gigfrail/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gigfrail {

PeBaseline::PeBaseline(std::vector<double> cuts, std::vector<double> rates)
    : cuts_(std::move(cuts)), rates_(std::move(rates)) {
    if (rates_.size() != cuts_.size() + 1) {
        throw std::invalid_argument("PeBaseline: need exactly one more rate than cut points");
    }
    for (std::size_t i = 0; i < cuts_.size(); ++i) {
        if (!(cuts_[i] > 0.0) || (i > 0 && !(cuts_[i] > cuts_[i - 1]))) {
            throw std::invalid_argument("PeBaseline: cut points must be positive and strictly increasing");
        }
    }
    for (double r : rates_) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw std::invalid_argument("PeBaseline: rates must be positive and finite");
        }
    }
}

PeBaseline PeBaseline::from_log_rates(std::vector<double> cuts, std::span<const double> log_rates) {
    std::vector<double> rates(log_rates.size());
    std::transform(log_rates.begin(), log_rates.end(), rates.begin(), [](double v) { return std::exp(v); });
    return PeBaseline(std::move(cuts), std::move(rates));
}

std::size_t PeBaseline::interval_of(double t) const {
    // number of cuts <= t
    return static_cast<std::size_t>(std::upper_bound(cuts_.begin(), cuts_.end(), t) - cuts_.begin());
}

double PeBaseline::hazard(double t) const {
    if (!(t > 0.0)) {
        throw std::domain_error("pe hazard: t must be positive");
    }
    return rates_[interval_of(t)];
}

void PeBaseline::exposure(double t, std::span<double> out) const {
    for (std::size_t l = 0; l < rates_.size(); ++l) {
        const double lo = l == 0 ? 0.0 : cuts_[l - 1];
        const double hi = l < cuts_.size() ? std::min(t, cuts_[l]) : t;
        out[l] = std::max(0.0, hi - lo);
    }
}

double PeBaseline::cum_hazard(double t) const {
    if (!(t > 0.0)) {
        throw std::domain_error("pe cumulative hazard: t must be positive");
    }
    double total = 0.0;
    double start = 0.0;
    for (std::size_t l = 0; l < rates_.size(); ++l) {
        const double end = l < cuts_.size() ? std::min(t, cuts_[l]) : t;
        if (end <= start) break;
        total += rates_[l] * (end - start);
        start = end;
    }
    return total;
}

void WeibullBaseline::validate() const {
    if (!(sigma > 0.0) || !(gamma > 0.0) || !std::isfinite(sigma) || !std::isfinite(gamma)) {
        throw std::invalid_argument("Weibull baseline requires sigma > 0 and gamma > 0");
    }
}

double WeibullBaseline::hazard(double t) const {
    if (!(t > 0.0)) {
        throw std::domain_error("weibull hazard: t must be positive");
    }
    return sigma * gamma * std::pow(t, gamma - 1.0);
}

double WeibullBaseline::cum_hazard(double t) const {
    if (!(t > 0.0)) {
        throw std::domain_error("weibull cumulative hazard: t must be positive");
    }
    return sigma * std::pow(t, gamma);
}

double hazard(const Baseline& b, double t) {
    return std::visit([t](const auto& base) { return base.hazard(t); }, b);
}

double cum_hazard(const Baseline& b, double t) {
    return std::visit([t](const auto& base) { return base.cum_hazard(t); }, b);
}

std::string_view to_string(CutMethod method) {
    return method == CutMethod::FailureQuantiles ? "quantile" : "even";
}

CutMethod parse_cut_method(std::string_view name) {
    if (name == "quantile") return CutMethod::FailureQuantiles;
    if (name == "even") return CutMethod::EvenTime;
    throw std::invalid_argument("unknown cut method '" + std::string(name) + "'");
}

std::vector<double> make_cuts(std::span<const double> times, std::span<const int> events, int k,
                              CutMethod method) {
    if (times.size() != events.size()) {
        throw std::invalid_argument("make_cuts: times and events differ in length");
    }
    if (k < 0) {
        throw std::invalid_argument("make_cuts: k must be non-negative");
    }
    if (k == 0) {
        return {};
    }
    if (times.empty()) {
        throw std::invalid_argument("make_cuts: no observations");
    }

    std::vector<double> cuts(static_cast<std::size_t>(k));
    if (method == CutMethod::EvenTime) {
        const double tmax = *std::max_element(times.begin(), times.end());
        for (int l = 1; l <= k; ++l) {
            cuts[l - 1] = tmax * l / (k + 1);
        }
        return cuts;
    }

    std::vector<double> failures;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (events[i] != 0) failures.push_back(times[i]);
    }
    std::sort(failures.begin(), failures.end());
    failures.erase(std::unique(failures.begin(), failures.end()), failures.end());
    if (failures.size() < static_cast<std::size_t>(k) + 2) {
        throw std::invalid_argument("make_cuts: " + std::to_string(failures.size()) +
                                    " distinct failure times are too few for " + std::to_string(k) +
                                    " quantile cuts (need k + 2)");
    }
    const double n1 = static_cast<double>(failures.size() - 1);
    for (int l = 1; l <= k; ++l) {
        const double h = n1 * l / (k + 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const double frac = h - static_cast<double>(lo);
        cuts[l - 1] = frac == 0.0 ? failures[lo] : failures[lo] + frac * (failures[lo + 1] - failures[lo]);
    }
    return cuts;
}

}  // namespace gigfrail
