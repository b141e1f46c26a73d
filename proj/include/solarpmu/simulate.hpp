#ifndef SOLARPMU_SIMULATE_HPP
#define SOLARPMU_SIMULATE_HPP

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "solarpmu/locate.hpp"
#include "solarpmu/phasor.hpp"

namespace solarpmu {

enum class EventKind { LocalStep, GridVoltageStep };

std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& text);

/**
 * Timing of the staged current response to a grid voltage step. Stages run
 * fastest to slowest: current loop (prompt), MPPT/voltage loop (reversal),
 * then plant-level ramp limiting (dip and ramp). Amplitudes are amperes.
 */
struct StageControl {
    double prompt_amp = 3.0;
    double mppt_amp = 6.0;
    double dip_undershoot = 1.5;  ///< how far the dip ends below the final setpoint
    double prompt_s = 0.15;
    double mppt_s = 0.30;
    double dip_s = 0.20;
    double ramp_rate = 3.0;       ///< A/s
    double transient_angle_deg = 0.3;  ///< peak current-angle excursion during the transient
};

struct EventSpec {
    std::string id;
    EventKind kind = EventKind::LocalStep;
    double onset_s = 0.0;
    /// LocalStep: |delta I| in amperes. GridVoltageStep: signed delta |V| in volts.
    double magnitude = 0.0;
    /// LocalStep only: angle of delta I relative to the pre-event current phasor, degrees.
    double angle_deg = -90.0;
    double transient_s = 0.3;  ///< LocalStep: duration of the decaying overshoot (<= 1 s)
    double overshoot = 0.5;    ///< LocalStep: initial overshoot as a fraction of delta I
    double hold_s = 0.0;       ///< LocalStep: >0 releases the step linearly this long after the transient
    double release_s = 4.0;    ///< LocalStep: duration of that release
    StageControl control;      ///< GridVoltageStep only
};

struct IrradiancePoint {
    double t_s = 0.0;
    double pct = 0.0;
};

struct NoiseLevels {
    double v_mag = 0.5;   ///< volts
    double v_ang = 0.01;  ///< degrees
    double i_mag = 0.05;  ///< amperes
    double i_ang = 0.01;  ///< degrees
};

/// R = a x^b + c with x the production level in percent.
struct ResistanceLaw {
    double a = 850.0;
    double b = -1.0;
    double c = 50.0;
};

struct AuxiliaryFeeder {
    double nominal_voltage = 7200.0;
    std::complex<double> load_impedance{60.0, 25.0};  ///< constant-impedance load, ohms
    double pv_current = 40.0;                         ///< constant-current PV injection, amperes
    double pv_angle_deg = 0.0;                        ///< relative to the voltage angle
};

/// Every simulator default lives here; none of them is a measured field value.
struct ScenarioConfig {
    double duration_s = 60.0;
    std::uint64_t seed = 1;
    double nominal_rate = kDefaultReportingRate;
    Timestamp start_us = 0;

    double rated_power = kDefaultSolarRating;
    double phase_factor = kDefaultPhaseFactor;
    double nominal_voltage = 7200.0;   ///< single-phase-equivalent, volts
    double voltage_angle_deg = 0.0;
    double pf_angle_deg = 0.0;         ///< current lags voltage by this angle

    std::vector<IrradiancePoint> irradiance{{0.0, 50.0}};  ///< percent of rating, cosine-interpolated
    double cloud_noise_pct = 0.0;      ///< std of the low-pass cloud component
    double cloud_time_constant_s = 5.0;

    NoiseLevels noise;
    NoiseLevels aux_noise;
    std::complex<double> source_impedance{10.0, 2.0};
    std::optional<ResistanceLaw> source_resistance_law;  ///< replaces Re(source_impedance) when set
    AuxiliaryFeeder auxiliary;

    std::vector<EventSpec> events;

    /// Throws ConfigError for invalid values or overlapping events.
    void validate() const;
};

struct TruthEvent {
    std::string id;
    EventKind kind = EventKind::LocalStep;
    Origin label = Origin::Indeterminate;
    Timestamp onset = 0;
    Timestamp end = 0;
    double production_pct = 0.0;          ///< noise-free level just before onset
    std::vector<Timestamp> stage_boundaries;  ///< 4 interior transitions for grid events
    int step_direction = 0;
};

/// Noise-free complex phasors of both feeders before rendering.
struct CleanTraces {
    std::vector<Timestamp> time_us;
    std::vector<double> time_s;  ///< seconds since scenario start
    std::vector<std::complex<double>> solar_v;
    std::vector<std::complex<double>> solar_i;
    std::vector<std::complex<double>> aux_v;
    std::vector<std::complex<double>> aux_i;
};

struct LabeledStream {
    PhasorStream solar;
    PhasorStream auxiliary;
    std::vector<TruthEvent> truth;
};

/// Irradiance percentage (cosine interpolation, no cloud noise) at time t.
double irradiance_at(const std::vector<IrradiancePoint>& profile, double t_s);

/// Baseline traces: constant-power solar plant following the irradiance, auxiliary net load.
CleanTraces baseline_traces(const ScenarioConfig& config);

/**
 * Applies a voltage step to both feeders at onset and the staged current
 * response on the solar feeder. The auxiliary current follows its constant
 * impedance load.
 */
TruthEvent inject_grid_event(CleanTraces& traces, const ScenarioConfig& config, const EventSpec& spec);

/// Adds a persisting current step with a decaying overshoot on the solar feeder only.
TruthEvent inject_local_event(CleanTraces& traces, const ScenarioConfig& config, const EventSpec& spec);

/// Adds measurement noise and packs the traces into streams.
LabeledStream render(const CleanTraces& traces, const ScenarioConfig& config, std::vector<TruthEvent> truth);

/// baseline_traces + every injection in onset order + render. Deterministic in config.seed.
LabeledStream simulate(const ScenarioConfig& config);

/// Local events only, `low_fraction` of them at production <= 30 % (levels 5-25 % vs 40-90 %).
ScenarioConfig production_split_scenario(std::uint64_t seed, int events = 50, double low_fraction = 0.7);

/// One grid voltage step of `direction` (+1 up / -1 down) at 8 s, 50 % production, 20 s long.
ScenarioConfig grid_step_scenario(int direction, std::uint64_t seed = 1, double step_fraction = 0.01);

/// Two local and two grid events in random order at a random flat production level.
ScenarioConfig mixed_scenario(std::uint64_t seed);

}  // namespace solarpmu

#endif  // SOLARPMU_SIMULATE_HPP
