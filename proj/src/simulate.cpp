#include "solarpmu/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "solarpmu/errors.hpp"

namespace solarpmu {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::complex<double> polar_deg(double mag, double deg) { return std::polar(mag, deg * kDeg); }

std::size_t first_index_at(const CleanTraces& traces, double t_s) {
    const auto it = std::lower_bound(traces.time_s.begin(), traces.time_s.end(), t_s);
    return static_cast<std::size_t>(std::distance(traces.time_s.begin(), it));
}

double clean_production(const CleanTraces& traces, const ScenarioConfig& config, std::size_t k) {
    const auto s = std::conj(traces.solar_i[k]) * traces.solar_v[k];
    return std::max(0.0, 100.0 * config.phase_factor * s.real() / config.rated_power);
}

/// Piecewise-linear interpolation through (time, value) knots.
double knot_value(const std::vector<std::pair<double, double>>& knots, double t) {
    if (t <= knots.front().first) return knots.front().second;
    for (std::size_t k = 1; k < knots.size(); ++k) {
        if (t <= knots[k].first) {
            const auto [t0, v0] = knots[k - 1];
            const auto [t1, v1] = knots[k];
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        }
    }
    return knots.back().second;
}

std::complex<double> aux_current(const AuxiliaryFeeder& aux, std::complex<double> v) {
    return polar_deg(aux.pv_current, std::arg(v) / kDeg + aux.pv_angle_deg) - v / aux.load_impedance;
}

}  // namespace

std::string to_string(EventKind kind) {
    return kind == EventKind::LocalStep ? "LocalStep" : "GridVoltageStep";
}

EventKind event_kind_from_string(const std::string& text) {
    if (text == "LocalStep") return EventKind::LocalStep;
    if (text == "GridVoltageStep") return EventKind::GridVoltageStep;
    throw ConfigError("unknown event kind '" + text + "'");
}

void ScenarioConfig::validate() const {
    const auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!positive(duration_s) || !positive(nominal_rate) || !positive(rated_power) || !positive(phase_factor) ||
        !positive(nominal_voltage) || !positive(auxiliary.nominal_voltage)) {
        throw ConfigError("duration, rate, rating, phase factor and voltages must be positive");
    }
    if (irradiance.empty()) {
        throw ConfigError("irradiance profile needs at least one point");
    }
    for (std::size_t k = 0; k < irradiance.size(); ++k) {
        if (irradiance[k].pct < 0.0 || (k > 0 && irradiance[k].t_s <= irradiance[k - 1].t_s)) {
            throw ConfigError("irradiance points must be non-negative with increasing times");
        }
    }
    for (const auto* n : {&noise, &aux_noise}) {
        if (n->v_mag < 0.0 || n->v_ang < 0.0 || n->i_mag < 0.0 || n->i_ang < 0.0) {
            throw ConfigError("noise levels must be non-negative");
        }
    }
    if (cloud_noise_pct < 0.0 || !positive(cloud_time_constant_s)) {
        throw ConfigError("cloud noise must be non-negative with a positive time constant");
    }
    if (auxiliary.load_impedance == std::complex<double>(0.0, 0.0)) {
        throw ConfigError("auxiliary load impedance must be non-zero");
    }
    for (const auto& e : events) {
        if (!(e.onset_s >= 0.0 && e.onset_s < duration_s)) {
            throw ConfigError("event " + e.id + " onset lies outside the scenario");
        }
        if (e.kind == EventKind::LocalStep) {
            if (!(e.transient_s > 0.0 && e.transient_s <= 1.0) || e.overshoot < 0.0 || e.magnitude < 0.0 ||
                e.hold_s < 0.0 || !positive(e.release_s)) {
                throw ConfigError("event " + e.id + ": local step needs magnitude >= 0 and a transient in (0, 1] s");
            }
            if (std::abs(source_impedance) * e.magnitude > 0.2 * nominal_voltage) {
                throw ConfigError("event " + e.id + ": voltage deviation exceeds 20 % of nominal");
            }
        } else {
            const auto& c = e.control;
            if (!positive(c.prompt_s) || !positive(c.mppt_s) || !positive(c.dip_s) || !positive(c.ramp_rate) ||
                c.prompt_amp < 0.0 || c.mppt_amp < 0.0 || c.dip_undershoot < 0.0) {
                throw ConfigError("event " + e.id + ": stage durations and ramp rate must be positive");
            }
            if (std::abs(e.magnitude) > 0.2 * nominal_voltage) {
                throw ConfigError("event " + e.id + ": voltage step exceeds 20 % of nominal");
            }
        }
    }
}

double irradiance_at(const std::vector<IrradiancePoint>& profile, double t_s) {
    if (t_s <= profile.front().t_s) return profile.front().pct;
    for (std::size_t k = 1; k < profile.size(); ++k) {
        if (t_s <= profile[k].t_s) {
            const auto& a = profile[k - 1];
            const auto& b = profile[k];
            const double u = (t_s - a.t_s) / (b.t_s - a.t_s);
            const double w = 0.5 - 0.5 * std::cos(std::numbers::pi * u);
            return a.pct + (b.pct - a.pct) * w;
        }
    }
    return profile.back().pct;
}

CleanTraces baseline_traces(const ScenarioConfig& config) {
    config.validate();
    CleanTraces traces;
    const auto n = static_cast<std::size_t>(std::floor(config.duration_s * config.nominal_rate)) + 1;
    std::mt19937_64 cloud_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double rho = std::exp(-1.0 / (config.nominal_rate * config.cloud_time_constant_s));
    double cloud = 0.0;

    const auto v_solar = polar_deg(config.nominal_voltage, config.voltage_angle_deg);
    const auto v_aux = polar_deg(config.auxiliary.nominal_voltage, config.voltage_angle_deg);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / config.nominal_rate;
        traces.time_s.push_back(t);
        traces.time_us.push_back(config.start_us + std::llround(static_cast<double>(k) * 1.0e6 / config.nominal_rate));
        if (config.cloud_noise_pct > 0.0) {
            cloud = rho * cloud + std::sqrt(1.0 - rho * rho) * config.cloud_noise_pct * normal(cloud_rng);
        }
        const double pct = std::max(0.0, irradiance_at(config.irradiance, t) + cloud);
        const double power = pct / 100.0 * config.rated_power;
        const double i_mag = power / (config.phase_factor * config.nominal_voltage * std::cos(config.pf_angle_deg * kDeg));
        traces.solar_v.push_back(v_solar);
        traces.solar_i.push_back(polar_deg(i_mag, config.voltage_angle_deg - config.pf_angle_deg));
        traces.aux_v.push_back(v_aux);
        traces.aux_i.push_back(aux_current(config.auxiliary, v_aux));
    }
    return traces;
}

TruthEvent inject_grid_event(CleanTraces& traces, const ScenarioConfig& config, const EventSpec& spec) {
    if (spec.kind != EventKind::GridVoltageStep) {
        throw ConfigError("inject_grid_event needs a GridVoltageStep");
    }
    const std::size_t k0 = first_index_at(traces, spec.onset_s);
    if (k0 == 0 || k0 >= traces.time_s.size()) {
        throw ConfigError("event " + spec.id + " onset must fall strictly inside the scenario");
    }
    const double v_before = std::abs(traces.solar_v[k0 - 1]);
    if (std::abs(spec.magnitude) > 0.2 * config.nominal_voltage) {
        throw ConfigError("event " + spec.id + ": voltage step exceeds 20 % of nominal");
    }
    const double factor = 1.0 + spec.magnitude / v_before;
    const int dir = spec.magnitude > 0.0 ? 1 : (spec.magnitude < 0.0 ? -1 : 0);

    TruthEvent truth;
    truth.id = spec.id;
    truth.kind = EventKind::GridVoltageStep;
    truth.label = Origin::GridInduced;
    truth.onset = traces.time_us[k0];
    truth.production_pct = clean_production(traces, config, k0 - 1);
    truth.step_direction = dir;

    const double i0 = std::abs(traces.solar_i[k0 - 1]);
    const double i1 = i0 / factor;
    const auto& c = spec.control;
    // Offsets from the post-step setpoint at the stage transitions.
    const double lev0 = i0 - i1;
    const double lev1 = lev0 - dir * c.prompt_amp;
    const double lev2 = lev1 + dir * c.mppt_amp;
    const double lev3 = std::min(lev2, 0.0) - c.dip_undershoot;
    const double t0 = traces.time_s[k0];
    const double t1 = t0 + c.prompt_s;
    const double t2 = t1 + c.mppt_s;
    const double t3 = t2 + c.dip_s;
    const double t4 = t3 + (0.0 - lev3) / c.ramp_rate;
    const std::vector<std::pair<double, double>> knots{{t0, lev0}, {t1, lev1}, {t2, lev2}, {t3, lev3}, {t4, 0.0}};
    const double angle_scale = c.prompt_amp > 0.0 ? c.transient_angle_deg / c.prompt_amp : 0.0;

    for (std::size_t k = k0; k < traces.time_s.size(); ++k) {
        traces.solar_v[k] *= factor;
        traces.aux_v[k] *= factor;
        traces.aux_i[k] = aux_current(config.auxiliary, traces.aux_v[k]);
        traces.solar_i[k] /= factor;
        const double t = traces.time_s[k];
        if (t < t4 && dir != 0) {
            const double offset = knot_value(knots, t);
            const double mag = std::max(0.0, std::abs(traces.solar_i[k]) + offset);
            const double ang = std::arg(traces.solar_i[k]) / kDeg + angle_scale * offset;
            traces.solar_i[k] = polar_deg(mag, ang);
        }
    }
    for (double tb : {t0, t1, t2, t3}) {
        const auto kb = std::min(first_index_at(traces, tb), traces.time_us.size() - 1);
        truth.stage_boundaries.push_back(traces.time_us[kb]);
    }
    truth.end = traces.time_us[std::min(first_index_at(traces, t4), traces.time_us.size() - 1)];
    return truth;
}

TruthEvent inject_local_event(CleanTraces& traces, const ScenarioConfig& config, const EventSpec& spec) {
    if (spec.kind != EventKind::LocalStep) {
        throw ConfigError("inject_local_event needs a LocalStep");
    }
    const std::size_t k0 = first_index_at(traces, spec.onset_s);
    if (k0 == 0 || k0 >= traces.time_s.size()) {
        throw ConfigError("event " + spec.id + " onset must fall strictly inside the scenario");
    }
    TruthEvent truth;
    truth.id = spec.id;
    truth.kind = EventKind::LocalStep;
    truth.label = Origin::LocallyInduced;
    truth.onset = traces.time_us[k0];
    truth.production_pct = clean_production(traces, config, k0 - 1);

    std::complex<double> zs = config.source_impedance;
    if (config.source_resistance_law) {
        const auto& law = *config.source_resistance_law;
        if (!(truth.production_pct > 0.0)) {
            throw ConfigError("event " + spec.id + ": resistance law needs positive production");
        }
        zs = {law.a * std::pow(truth.production_pct, law.b) + law.c, config.source_impedance.imag()};
    }
    if (std::abs(zs) * spec.magnitude * (1.0 + spec.overshoot) > 0.2 * config.nominal_voltage) {
        throw ConfigError("event " + spec.id + ": voltage deviation exceeds 20 % of nominal");
    }
    const auto delta_i = polar_deg(spec.magnitude, std::arg(traces.solar_i[k0 - 1]) / kDeg + spec.angle_deg);
    const double t0 = traces.time_s[k0];
    const double tail = std::exp(-5.0);
    const double release_start = t0 + spec.transient_s + spec.hold_s;
    for (std::size_t k = k0; k < traces.time_s.size(); ++k) {
        const double u = traces.time_s[k] - t0;
        double h = 1.0;
        if (u < spec.transient_s) {
            h += spec.overshoot * (std::exp(-5.0 * u / spec.transient_s) - tail) / (1.0 - tail);
        }
        if (spec.hold_s > 0.0 && traces.time_s[k] > release_start) {
            h *= std::max(0.0, 1.0 - (traces.time_s[k] - release_start) / spec.release_s);
        }
        traces.solar_i[k] += h * delta_i;
        traces.solar_v[k] += h * zs * delta_i;
    }
    truth.end = traces.time_us[std::min(first_index_at(traces, t0 + spec.transient_s), traces.time_us.size() - 1)];
    return truth;
}

LabeledStream render(const CleanTraces& traces, const ScenarioConfig& config, std::vector<TruthEvent> truth) {
    LabeledStream out;
    out.solar.feeder_id = "solar";
    out.solar.nominal_rate = config.nominal_rate;
    out.solar.rated_power = config.rated_power;
    out.auxiliary.feeder_id = "auxiliary";
    out.auxiliary.nominal_rate = config.nominal_rate;
    // The auxiliary feeder has no plant rating of its own; reuse the solar one for production scaling.
    out.auxiliary.rated_power = config.rated_power;

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto noisy = [&](std::complex<double> v, std::complex<double> i, const NoiseLevels& nl, Timestamp ts) {
        const double vm = std::max(0.0, std::abs(v) + nl.v_mag * normal(rng));
        const double va = std::arg(v) / kDeg + nl.v_ang * normal(rng);
        const double im = std::max(0.0, std::abs(i) + nl.i_mag * normal(rng));
        const double ia = std::arg(i) / kDeg + nl.i_ang * normal(rng);
        return PhasorSample(ts, vm, va, im, ia);
    };
    out.solar.samples.reserve(traces.time_us.size());
    out.auxiliary.samples.reserve(traces.time_us.size());
    for (std::size_t k = 0; k < traces.time_us.size(); ++k) {
        out.solar.samples.push_back(noisy(traces.solar_v[k], traces.solar_i[k], config.noise, traces.time_us[k]));
        out.auxiliary.samples.push_back(noisy(traces.aux_v[k], traces.aux_i[k], config.aux_noise, traces.time_us[k]));
    }
    out.truth = std::move(truth);
    return out;
}

LabeledStream simulate(const ScenarioConfig& config) {
    auto traces = baseline_traces(config);
    std::vector<EventSpec> ordered = config.events;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const EventSpec& a, const EventSpec& b) { return a.onset_s < b.onset_s; });
    std::vector<TruthEvent> truth;
    for (const auto& spec : ordered) {
        truth.push_back(spec.kind == EventKind::GridVoltageStep ? inject_grid_event(traces, config, spec)
                                                                 : inject_local_event(traces, config, spec));
        if (truth.size() > 1 && truth[truth.size() - 2].end >= truth.back().onset) {
            throw ConfigError("events " + truth[truth.size() - 2].id + " and " + truth.back().id + " overlap");
        }
    }
    return render(traces, config, std::move(truth));
}

ScenarioConfig production_split_scenario(std::uint64_t seed, int events, double low_fraction) {
    if (events <= 0 || low_fraction < 0.0 || low_fraction > 1.0) {
        throw ConfigError("production split needs a positive event count and a fraction in [0, 1]");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    const int n_low = static_cast<int>(std::lround(events * low_fraction));
    std::vector<double> levels;
    for (int k = 0; k < events; ++k) {
        levels.push_back(k < n_low ? uniform(5.0, 25.0) : uniform(40.0, 90.0));
    }
    std::shuffle(levels.begin(), levels.end(), rng);

    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.source_resistance_law = ResistanceLaw{};
    constexpr double kSpacing = 16.0;
    constexpr double kFirst = 10.0;
    cfg.irradiance.clear();
    cfg.irradiance.push_back({0.0, levels.front()});
    for (int k = 0; k < events; ++k) {
        const double onset = kFirst + kSpacing * k;
        cfg.irradiance.push_back({onset - 5.0, levels[static_cast<std::size_t>(k)]});
        cfg.irradiance.push_back({onset + 5.0, levels[static_cast<std::size_t>(k)]});
        EventSpec e;
        e.id = "L" + std::to_string(k);
        e.kind = EventKind::LocalStep;
        e.onset_s = onset;
        e.magnitude = uniform(1.0, 2.5);
        e.angle_deg = (unit(rng) < 0.5 ? -1.0 : 1.0) * uniform(70.0, 110.0);
        e.transient_s = uniform(0.2, 0.6);
        e.overshoot = uniform(0.2, 0.8);
        e.hold_s = 3.0;
        e.release_s = 4.0;
        cfg.events.push_back(e);
    }
    cfg.duration_s = kFirst + kSpacing * (events - 1) + 8.0;
    return cfg;
}

ScenarioConfig grid_step_scenario(int direction, std::uint64_t seed, double step_fraction) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.duration_s = 20.0;
    cfg.irradiance = {{0.0, 50.0}};
    EventSpec e;
    e.id = direction > 0 ? "grid-step-up" : "grid-step-down";
    e.kind = EventKind::GridVoltageStep;
    e.onset_s = 8.0;
    e.magnitude = (direction > 0 ? 1.0 : -1.0) * step_fraction * cfg.nominal_voltage;
    cfg.events.push_back(e);
    return cfg;
}

ScenarioConfig mixed_scenario(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.duration_s = 40.0;
    cfg.irradiance = {{0.0, uniform(15.0, 85.0)}};
    cfg.source_impedance = {uniform(2.0, 40.0), uniform(0.0, 10.0)};
    std::vector<EventKind> kinds{EventKind::LocalStep, EventKind::LocalStep, EventKind::GridVoltageStep,
                                 EventKind::GridVoltageStep};
    std::shuffle(kinds.begin(), kinds.end(), rng);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        EventSpec e;
        e.kind = kinds[k];
        e.onset_s = 6.0 + 8.0 * static_cast<double>(k);
        if (e.kind == EventKind::LocalStep) {
            e.id = "local-" + std::to_string(k);
            e.magnitude = uniform(0.8, 2.5);
            e.angle_deg = (unit(rng) < 0.5 ? -1.0 : 1.0) * uniform(60.0, 120.0);
            e.transient_s = uniform(0.2, 0.8);
            e.overshoot = uniform(0.0, 0.8);
        } else {
            e.id = "grid-" + std::to_string(k);
            e.magnitude = (unit(rng) < 0.5 ? -1.0 : 1.0) * uniform(0.005, 0.02) * cfg.nominal_voltage;
        }
        cfg.events.push_back(e);
    }
    return cfg;
}

}  // namespace solarpmu
