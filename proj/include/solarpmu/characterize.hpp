#ifndef SOLARPMU_CHARACTERIZE_HPP
#define SOLARPMU_CHARACTERIZE_HPP

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "solarpmu/detect.hpp"
#include "solarpmu/ingest.hpp"
#include "solarpmu/locate.hpp"

namespace solarpmu {

struct EventFeatures {
    std::string event_id;
    Timestamp onset = 0;
    OriginLabel origin;
    double production_pct = 0.0;  ///< from the pre-event steady window
    double pre_angle = 0.0;       ///< circular mean of theta_V - theta_I before the event, degrees
    double d_angle = 0.0;         ///< post minus pre, wrapped, degrees
    double d_pf = 0.0;            ///< cos(pre_angle + d_angle) - cos(pre_angle)
    double real_z = 0.0;
};

/// Throws ContractError when the event has no steady windows.
EventFeatures extract_features(const EventWindow& event, const DifferentialPhasor& dp, const OriginLabel& origin,
                               double rated_power, std::string event_id = {},
                               double phase_factor = kDefaultPhaseFactor);

/// Circular mean of theta_V - theta_I over a window, degrees.
double mean_angle_difference(std::span<const PhasorSample> window);

enum class CurveModel {
    PowerLawWithOffset,  ///< y = a x^b + c
    PowerLaw,            ///< y = d x^e
};

std::string to_string(CurveModel model);

struct CurveFitResult {
    CurveModel model = CurveModel::PowerLaw;
    std::vector<double> params;  ///< (a, b, c) or (d, e)
    double rmse = 0.0;
    std::size_t n_points = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> rmse_history;  ///< rmse after each accepted step, starting with the initial guess

    double evaluate(double x) const;
};

/// Non-convergence; `last` carries the final iterate.
class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, CurveFitResult last) : std::runtime_error(what), last(std::move(last)) {}
    CurveFitResult last;
};

struct FitOptions {
    int max_iter = 500;
    double tol = 1e-12;                 ///< relative parameter step that counts as converged
    std::vector<double> init;           ///< empty: exponent -1, offset min(y), scale from the smallest-x point
};

using Point = std::pair<double, double>;

/// Initial guess used when FitOptions::init is empty.
std::vector<double> default_initial_guess(std::span<const Point> points, bool with_offset);

/**
 * @brief Levenberg-Marquardt fit of a power law (optionally with offset).
 *
 * Damped Gauss-Newton with the analytic Jacobian and Marquardt diagonal
 * scaling. Throws DomainError for x <= 0, ContractError for too few points and
 * FitError when `max_iter` is reached.
 */
CurveFitResult fit_power_law(std::span<const Point> points, bool with_offset, const FitOptions& options = {});

struct HistogramBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
};

struct ProductionHistogram {
    bool empty = true;  ///< no events survived the filter
    std::vector<HistogramBin> bins;
    std::size_t total = 0;
    double threshold_pct = 30.0;
    double fraction_at_or_below = 0.0;
};

ProductionHistogram production_histogram(std::span<const EventFeatures> features, double bin_width_pct,
                                         std::optional<Origin> origin_filter, double threshold_pct = 30.0);

enum class PfChange { Transient, Steady };
std::string to_string(PfChange change);

struct FeederResponse {
    double delta_v_mag = 0.0;
    double delta_i_mag = 0.0;
    int dv_direction = 0;  ///< -1, 0, +1
    int di_direction = 0;
    double pf_pre = 0.0;
    double pf_peak_deviation = 0.0;
    double pf_late_deviation = 0.0;
    PfChange pf_change = PfChange::Transient;
};

struct GridResponseReport {
    Timestamp onset = 0;
    FeederResponse solar;
    FeederResponse auxiliary;
    bool opposite_current = false;
};

struct ResponseSettings {
    double pre_window_s = 0.5;
    double steady_after_s = 2.0;  ///< PF deviation still present this long after onset counts as steady
    double late_window_s = 0.5;
    double pf_floor = 1e-4;
    double significance = 5.0;  ///< standard errors needed to call a change
};

/// Compares how the solar and auxiliary feeders respond to one event.
GridResponseReport grid_response_report(const EventWindow& event, std::span<const AlignedPair> pairs,
                                        double nominal_rate = kDefaultReportingRate,
                                        const ResponseSettings& settings = {});

}  // namespace solarpmu

#endif  // SOLARPMU_CHARACTERIZE_HPP
