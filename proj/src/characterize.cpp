#include "solarpmu/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "solarpmu/errors.hpp"

namespace solarpmu {

namespace {

double rad(double deg) { return deg * std::numbers::pi / 180.0; }

double sse_of(std::span<const Point> points, const std::vector<double>& p, bool with_offset) {
    double sse = 0.0;
    for (const auto& [x, y] : points) {
        const double f = p[0] * std::pow(x, p[1]) + (with_offset ? p[2] : 0.0);
        sse += (y - f) * (y - f);
    }
    return sse;
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
    std::size_t n = 0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    m.n = v.size();
    if (v.empty()) return m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    for (double x : v) m.variance += (x - m.mean) * (x - m.mean);
    m.variance /= static_cast<double>(v.size());
    return m;
}

}  // namespace

double mean_angle_difference(std::span<const PhasorSample> window) {
    if (window.empty()) {
        throw ContractError("angle mean of an empty window");
    }
    double c = 0.0;
    double s = 0.0;
    for (const auto& sample : window) {
        const double a = rad(phase_angle_difference(sample));
        c += std::cos(a);
        s += std::sin(a);
    }
    return wrap_degrees(std::atan2(s, c) * 180.0 / std::numbers::pi);
}

EventFeatures extract_features(const EventWindow& event, const DifferentialPhasor& dp, const OriginLabel& origin,
                               double rated_power, std::string event_id, double phase_factor) {
    if (!event.has_steady_state()) {
        throw ContractError("cannot extract features without steady windows");
    }
    EventFeatures f;
    f.event_id = std::move(event_id);
    f.onset = event.start;
    f.origin = origin;
    f.real_z = dp.z.re();
    double production = 0.0;
    for (const auto& s : event.pre_window) production += production_level(s, rated_power, phase_factor);
    f.production_pct = production / static_cast<double>(event.pre_window.size());
    f.pre_angle = mean_angle_difference(event.pre_window);
    f.d_angle = wrap_degrees(mean_angle_difference(event.post_window) - f.pre_angle);
    f.d_pf = std::cos(rad(f.pre_angle + f.d_angle)) - std::cos(rad(f.pre_angle));
    return f;
}

std::string to_string(CurveModel model) {
    return model == CurveModel::PowerLawWithOffset ? "PowerLawWithOffset" : "PowerLaw";
}

double CurveFitResult::evaluate(double x) const {
    const double base = params.at(0) * std::pow(x, params.at(1));
    return model == CurveModel::PowerLawWithOffset ? base + params.at(2) : base;
}

std::vector<double> default_initial_guess(std::span<const Point> points, bool with_offset) {
    if (points.empty()) {
        throw ContractError("no points to initialise from");
    }
    const auto first = *std::min_element(points.begin(), points.end(),
                                         [](const Point& l, const Point& r) { return l.first < r.first; });
    const double b = -1.0;
    if (!with_offset) {
        return {first.second / std::pow(first.first, b), b};
    }
    double c = std::numeric_limits<double>::infinity();
    for (const auto& pt : points) c = std::min(c, pt.second);
    return {(first.second - c) / std::pow(first.first, b), b, c};
}

CurveFitResult fit_power_law(std::span<const Point> points, bool with_offset, const FitOptions& options) {
    const std::size_t m = with_offset ? 3 : 2;
    if (points.size() < m + 1) {
        throw ContractError("power-law fit needs at least " + std::to_string(m + 1) + " points");
    }
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
            throw DomainError("power-law fit needs finite points with x > 0");
        }
    }
    std::vector<double> p = options.init.empty() ? default_initial_guess(points, with_offset) : options.init;
    if (p.size() != m) {
        throw ContractError("initial guess has the wrong number of parameters");
    }

    CurveFitResult result;
    result.model = with_offset ? CurveModel::PowerLawWithOffset : CurveModel::PowerLaw;
    result.n_points = points.size();
    const double n = static_cast<double>(points.size());

    double sse = sse_of(points, p, with_offset);
    result.rmse_history.push_back(std::sqrt(sse / n));
    double lambda = 1e-3;

    auto finish = [&](bool converged) {
        result.params = p;
        result.rmse = std::sqrt(sse / n);
        result.converged = converged;
        return result;
    };

    for (int iter = 0; iter < options.max_iter; ++iter) {
        result.iterations = iter + 1;
        if (sse == 0.0) {
            return finish(true);
        }
        Eigen::MatrixXd jac(points.size(), m);
        Eigen::VectorXd r(points.size());
        for (std::size_t k = 0; k < points.size(); ++k) {
            const auto [x, y] = points[k];
            const double xb = std::pow(x, p[1]);
            jac(k, 0) = xb;
            jac(k, 1) = p[0] * xb * std::log(x);
            if (with_offset) jac(k, 2) = 1.0;
            r(k) = y - (p[0] * xb + (with_offset ? p[2] : 0.0));
        }
        const Eigen::MatrixXd a = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        const double diag_floor = 1e-12 * std::max(a.diagonal().maxCoeff(), 1e-300);

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = a;
            for (std::size_t d = 0; d < m; ++d) {
                damped(d, d) += lambda * std::max(a(d, d), diag_floor);
            }
            const Eigen::VectorXd delta = damped.ldlt().solve(g);
            std::vector<double> step(delta.data(), delta.data() + delta.size());
            std::vector<double> trial = p;
            bool finite = true;
            for (std::size_t d = 0; d < m; ++d) {
                trial[d] += step[d];
                finite = finite && std::isfinite(trial[d]);
            }
            const bool negligible = finite && norm(step) <= options.tol * (norm(p) + options.tol);
            const double trial_sse = finite ? sse_of(points, trial, with_offset)
                                            : std::numeric_limits<double>::infinity();
            if (std::isfinite(trial_sse) && trial_sse < sse) {
                p = trial;
                sse = trial_sse;
                lambda = std::max(lambda / 10.0, 1e-15);
                result.rmse_history.push_back(std::sqrt(sse / n));
                accepted = true;
                if (negligible) {
                    return finish(true);
                }
            } else if (negligible || lambda > 1e16) {
                // No descent left at this resolution: p is a stationary point.
                return finish(true);
            } else {
                lambda *= 10.0;
            }
        }
    }
    finish(false);
    throw FitError("power-law fit did not converge in " + std::to_string(options.max_iter) + " iterations",
                   result);
}

ProductionHistogram production_histogram(std::span<const EventFeatures> features, double bin_width_pct,
                                         std::optional<Origin> origin_filter, double threshold_pct) {
    if (!(bin_width_pct > 0.0)) {
        throw ConfigError("histogram bin width must be positive");
    }
    ProductionHistogram h;
    h.threshold_pct = threshold_pct;
    std::vector<double> selected;
    for (const auto& f : features) {
        if (!origin_filter || f.origin.origin == *origin_filter) {
            selected.push_back(f.production_pct);
        }
    }
    if (selected.empty()) {
        return h;
    }
    h.empty = false;
    h.total = selected.size();
    const double top = std::max(100.0, *std::max_element(selected.begin(), selected.end()));
    const auto nbins = static_cast<std::size_t>(std::max(1.0, std::ceil(top / bin_width_pct)));
    for (std::size_t b = 0; b < nbins; ++b) {
        h.bins.push_back({b * bin_width_pct, (b + 1) * bin_width_pct, 0});
    }
    std::size_t below = 0;
    for (double x : selected) {
        auto b = static_cast<std::size_t>(std::floor(x / bin_width_pct));
        h.bins[std::min(b, nbins - 1)].count++;
        if (x <= threshold_pct) ++below;
    }
    h.fraction_at_or_below = static_cast<double>(below) / static_cast<double>(h.total);
    return h;
}

std::string to_string(PfChange change) { return change == PfChange::Steady ? "Steady" : "Transient"; }

GridResponseReport grid_response_report(const EventWindow& event, std::span<const AlignedPair> pairs,
                                        double nominal_rate, const ResponseSettings& settings) {
    const auto us = [](double s) { return static_cast<Timestamp>(std::llround(s * 1e6)); };
    const Timestamp onset = event.start;
    const Timestamp pre_lo = onset - us(settings.pre_window_s);
    const Timestamp late_lo = onset + us(settings.steady_after_s);
    const Timestamp late_hi = late_lo + us(settings.late_window_s);
    const double min_frames = 0.8 * settings.pre_window_s * nominal_rate;
    const double min_late = 0.8 * settings.late_window_s * nominal_rate;

    auto respond = [&](const std::function<const PhasorSample&(const AlignedPair&)>& side) {
        std::vector<double> pre_v, pre_i, pre_pf, late_v, late_i, late_pf, span_pf;
        for (const auto& p : pairs) {
            const Timestamp t = p.solar.timestamp;
            const PhasorSample& s = side(p);
            if (t >= pre_lo && t < onset) {
                pre_v.push_back(s.v_mag);
                pre_i.push_back(s.i_mag);
                pre_pf.push_back(power_factor(s));
            } else if (t >= onset && t <= late_hi) {
                span_pf.push_back(power_factor(s));
                if (t >= late_lo) {
                    late_v.push_back(s.v_mag);
                    late_i.push_back(s.i_mag);
                    late_pf.push_back(power_factor(s));
                }
            }
        }
        if (static_cast<double>(pre_v.size()) < min_frames || static_cast<double>(late_v.size()) < min_late) {
            throw InsufficientDataError("aligned data does not cover the event response");
        }
        const auto direction = [&](const std::vector<double>& pre, const std::vector<double>& late, double& delta) {
            const auto mp = moments(pre);
            const auto ml = moments(late);
            delta = ml.mean - mp.mean;
            const double se = std::sqrt(mp.variance / mp.n + ml.variance / ml.n);
            const double scale = 1e-12 * (1.0 + std::abs(mp.mean));
            if (std::abs(delta) <= std::max(settings.significance * se, scale)) return 0;
            return delta > 0.0 ? 1 : -1;
        };
        FeederResponse r;
        r.dv_direction = direction(pre_v, late_v, r.delta_v_mag);
        r.di_direction = direction(pre_i, late_i, r.delta_i_mag);
        const auto pf_pre = moments(pre_pf);
        const auto pf_late = moments(late_pf);
        r.pf_pre = pf_pre.mean;
        r.pf_late_deviation = pf_late.mean - pf_pre.mean;
        for (double pf : span_pf) r.pf_peak_deviation = std::max(r.pf_peak_deviation, std::abs(pf - pf_pre.mean));
        const double se = std::sqrt(pf_pre.variance / pf_pre.n + pf_late.variance / pf_late.n);
        const bool persists = std::abs(r.pf_late_deviation) > std::max(settings.pf_floor, settings.significance * se);
        r.pf_change = persists ? PfChange::Steady : PfChange::Transient;
        return r;
    };

    GridResponseReport report;
    report.onset = onset;
    report.solar = respond([](const AlignedPair& p) -> const PhasorSample& { return p.solar; });
    report.auxiliary = respond([](const AlignedPair& p) -> const PhasorSample& { return p.auxiliary; });
    report.opposite_current = report.solar.di_direction * report.auxiliary.di_direction < 0;
    return report;
}

}  // namespace solarpmu
