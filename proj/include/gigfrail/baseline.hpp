#pragma once

#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace gigfrail {

/// Piecewise-constant baseline hazard.
///
/// With interior cuts c_1 < ... < c_k the hazard equals rates[l] on
/// [c_l, c_{l+1}) (c_0 = 0, c_{k+1} = infinity). Intervals are closed on the
/// left and open on the right.
class PeBaseline {
public:
    PeBaseline() : rates_{1.0} {}
    PeBaseline(std::vector<double> cuts, std::vector<double> rates);

    static PeBaseline from_log_rates(std::vector<double> cuts, std::span<const double> log_rates);

    const std::vector<double>& cuts() const { return cuts_; }
    const std::vector<double>& rates() const { return rates_; }
    std::size_t n_intervals() const { return rates_.size(); }

    /// Index l of the interval containing t.
    std::size_t interval_of(double t) const;

    double hazard(double t) const;
    double cum_hazard(double t) const;

    /// Time spent in each interval by a subject observed on (0, t]; the
    /// cumulative hazard is the dot product of this with the rates.
    void exposure(double t, std::span<double> out) const;

private:
    std::vector<double> cuts_;
    std::vector<double> rates_;
};

/// h0(t) = sigma * gamma * t^(gamma-1), H0(t) = sigma * t^gamma.
struct WeibullBaseline {
    double sigma = 1.0;
    double gamma = 1.0;

    void validate() const;
    double hazard(double t) const;
    double cum_hazard(double t) const;
};

using Baseline = std::variant<PeBaseline, WeibullBaseline>;

double hazard(const Baseline& b, double t);
double cum_hazard(const Baseline& b, double t);

enum class CutMethod { FailureQuantiles, EvenTime };

std::string_view to_string(CutMethod method);
CutMethod parse_cut_method(std::string_view name);

/// Interior cut points for a piecewise-constant baseline.
///
/// FailureQuantiles: type-7 (linear interpolation) quantiles at l/(k+1),
/// l = 1..k, of the distinct failure times. Requires at least k + 2 distinct
/// failure times, which guarantees every interval holds a failure.
/// EvenTime: max(times) * l/(k+1).
std::vector<double> make_cuts(std::span<const double> times, std::span<const int> events, int k,
                              CutMethod method);

}  // namespace gigfrail
