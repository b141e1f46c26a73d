#ifndef SOLARPMU_PHASOR_HPP
#define SOLARPMU_PHASOR_HPP

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace solarpmu {

/// Microseconds since the Unix epoch (UTC).
using Timestamp = std::int64_t;

inline constexpr double kDefaultReportingRate = 120.0;
inline constexpr double kDefaultSolarRating = 4.0e6;
/// Balanced three-phase plant measured through one single-phase-equivalent phasor pair.
inline constexpr double kDefaultPhaseFactor = 3.0;

/// Wraps an angle in degrees into (-180, 180]. Values already in range are returned unchanged.
double wrap_degrees(double deg);

/**
 * @brief Rectangular phasor (volts, amperes or ohms depending on context).
 *
 * Components are always finite; every operation that could produce NaN or
 * infinity throws DomainError instead.
 */
class ComplexPhasor {
public:
    constexpr ComplexPhasor() = default;
    ComplexPhasor(double re, double im);
    explicit ComplexPhasor(std::complex<double> value) : ComplexPhasor(value.real(), value.imag()) {}

    double re() const { return value_.real(); }
    double im() const { return value_.imag(); }
    std::complex<double> value() const { return value_; }

    double magnitude() const { return std::abs(value_); }
    /// Angle in degrees, in (-180, 180].
    double angle_deg() const;

    friend ComplexPhasor operator+(ComplexPhasor a, ComplexPhasor b) { return ComplexPhasor(a.value_ + b.value_); }
    friend ComplexPhasor operator-(ComplexPhasor a, ComplexPhasor b) { return ComplexPhasor(a.value_ - b.value_); }
    friend ComplexPhasor operator*(ComplexPhasor a, ComplexPhasor b) { return ComplexPhasor(a.value_ * b.value_); }
    friend ComplexPhasor operator*(double s, ComplexPhasor a) { return ComplexPhasor(s * a.value_); }
    /// Throws DomainError when the divisor is zero.
    friend ComplexPhasor operator/(ComplexPhasor a, ComplexPhasor b);
    friend bool operator==(ComplexPhasor a, ComplexPhasor b) = default;

private:
    std::complex<double> value_{0.0, 0.0};
};

/// Polar (magnitude, degrees) to rectangular.
ComplexPhasor to_complex(double mag, double ang_deg);

/**
 * @brief One timestamped voltage/current phasor pair from one feeder.
 *
 * Current is signed positive flowing from the feeder into the substation, so a
 * generating feeder sits near zero phase-angle difference and a net load near 180.
 */
struct PhasorSample {
    Timestamp timestamp = 0;
    double v_mag = 0.0;  ///< volts
    double v_ang = 0.0;  ///< degrees, (-180, 180]
    double i_mag = 0.0;  ///< amperes
    double i_ang = 0.0;  ///< degrees, (-180, 180]

    PhasorSample() = default;
    /// Normalizes both angles; throws DomainError for negative magnitudes or non-finite fields.
    PhasorSample(Timestamp ts, double vm, double va, double im, double ia);

    ComplexPhasor voltage() const { return to_complex(v_mag, v_ang); }
    ComplexPhasor current() const { return to_complex(i_mag, i_ang); }

    friend bool operator==(const PhasorSample&, const PhasorSample&) = default;
};

/// theta_V - theta_I wrapped into (-180, 180].
double phase_angle_difference(const PhasorSample& sample);

/// cos(theta_V - theta_I).
double power_factor(const PhasorSample& sample);

/// Real power as a percentage of the plant rating, clamped below at zero.
double production_level(const PhasorSample& sample, double rated_power,
                        double phase_factor = kDefaultPhaseFactor);

/// Ordered samples from one feeder.
struct PhasorStream {
    std::string feeder_id;
    double nominal_rate = kDefaultReportingRate;
    double rated_power = kDefaultSolarRating;
    std::vector<PhasorSample> samples;

    /// Nominal frame period in microseconds.
    double frame_period_us() const { return 1.0e6 / nominal_rate; }

    /// Checks rated_power > 0, nominal_rate > 0 and strictly increasing timestamps.
    void validate() const;
};

}  // namespace solarpmu

#endif  // SOLARPMU_PHASOR_HPP
