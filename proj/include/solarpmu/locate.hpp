#ifndef SOLARPMU_LOCATE_HPP
#define SOLARPMU_LOCATE_HPP

#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "solarpmu/detect.hpp"
#include "solarpmu/ingest.hpp"
#include "solarpmu/phasor.hpp"

namespace solarpmu {

/// Pre/post steady-state means and their differences for one event.
struct DifferentialPhasor {
    ComplexPhasor v_pre;
    ComplexPhasor v_post;
    ComplexPhasor i_pre;
    ComplexPhasor i_post;
    ComplexPhasor delta_v;
    ComplexPhasor delta_i;
    ComplexPhasor z;  ///< delta_v / delta_i, ohms
};

enum class Origin { LocallyInduced, GridInduced, Indeterminate };
enum class OriginMethod { Impedance, SignatureInspection, Both };

struct OriginLabel {
    Origin origin = Origin::Indeterminate;
    double real_z = 0.0;
    OriginMethod method = OriginMethod::Impedance;
    std::optional<bool> agreement;  ///< set only when method == Both
};

std::string to_string(Origin origin);
std::string to_string(OriginMethod method);
Origin origin_from_string(const std::string& text);

/// |delta I| below the current floor: the impedance is not defined.
class IndeterminateImpedanceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LocateSettings {
    double current_floor = 0.01;    ///< amperes
    double dead_band = 0.1;         ///< ohms
    double corr_threshold = 0.8;
    double noise_floor_mads = 3.0;  ///< auxiliary deviation must exceed this many robust sigmas
    int flank_frames = 30;          ///< frames added on both sides of the event interval
    double min_coverage = 0.8;      ///< fraction of expected frames that must be aligned
};

/// Complex means of V and I over the two windows and Z = dV / dI.
DifferentialPhasor differential_phasor(std::span<const PhasorSample> pre_window,
                                       std::span<const PhasorSample> post_window,
                                       double current_floor = 0.01);

/// Throws ContractError when the event carries no steady windows.
DifferentialPhasor differential_phasor(const EventWindow& event, double current_floor = 0.01);

/**
 * Real{Z} > dead_band: locally induced (the source is on the metered side).
 * Real{Z} < -dead_band: grid induced. Otherwise indeterminate.
 */
OriginLabel classify_origin(const DifferentialPhasor& dp, double dead_band = 0.1);
OriginLabel classify_real_z(double real_z, double dead_band = 0.1);

struct SignatureEvidence {
    double correlation = 0.0;      ///< zero-lag, mean-removed, over the flanked event interval
    double aux_deviation = 0.0;    ///< largest auxiliary |V| excursion from its pre-event median
    double aux_noise_floor = 0.0;
    bool match = false;
};

/**
 * Compares the event's |V| signature on the solar feeder (AlignedPair::solar)
 * with the auxiliary feeder. Throws InsufficientDataError when the aligned pairs
 * do not cover the flanked interval.
 */
SignatureEvidence inspect_signature(const EventWindow& event, std::span<const AlignedPair> pairs,
                                    double nominal_rate = kDefaultReportingRate,
                                    const LocateSettings& settings = {});

/// True when both feeders show a similar voltage signature (grid-induced evidence).
bool signature_match(const EventWindow& event, std::span<const AlignedPair> pairs,
                     double nominal_rate = kDefaultReportingRate, const LocateSettings& settings = {});

/// Impedance verdict decides the label; `agreement` records whether the signature concurs.
OriginLabel combine_verdicts(const OriginLabel& impedance, bool signature);

OriginLabel combined_origin(const EventWindow& event, const DifferentialPhasor& dp,
                            std::span<const AlignedPair> pairs, double nominal_rate = kDefaultReportingRate,
                            const LocateSettings& settings = {});

}  // namespace solarpmu

#endif  // SOLARPMU_LOCATE_HPP
