#include "solarpmu/phasor.hpp"

#include <cmath>
#include <numbers>

#include "solarpmu/errors.hpp"

namespace solarpmu {

namespace {

double deg_to_rad(double deg) { return deg * (std::numbers::pi / 180.0); }

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw DomainError(std::string("non-finite ") + what);
    }
}

}  // namespace

double wrap_degrees(double deg) {
    require_finite(deg, "angle");
    if (deg > -180.0 && deg <= 180.0) {
        return deg;
    }
    double r = std::fmod(deg, 360.0);
    if (r <= -180.0) {
        r += 360.0;
    } else if (r > 180.0) {
        r -= 360.0;
    }
    return r;
}

ComplexPhasor::ComplexPhasor(double re, double im) : value_(re, im) {
    require_finite(re, "real part");
    require_finite(im, "imaginary part");
}

double ComplexPhasor::angle_deg() const {
    return wrap_degrees(std::arg(value_) * (180.0 / std::numbers::pi));
}

ComplexPhasor operator/(ComplexPhasor a, ComplexPhasor b) {
    if (b.value_ == std::complex<double>(0.0, 0.0)) {
        throw DomainError("complex division by zero");
    }
    return ComplexPhasor(a.value_ / b.value_);
}

ComplexPhasor to_complex(double mag, double ang_deg) {
    require_finite(mag, "magnitude");
    require_finite(ang_deg, "angle");
    if (mag < 0.0) {
        throw DomainError("negative phasor magnitude");
    }
    const double theta = deg_to_rad(ang_deg);
    return {mag * std::cos(theta), mag * std::sin(theta)};
}

PhasorSample::PhasorSample(Timestamp ts, double vm, double va, double im, double ia)
    : timestamp(ts), v_mag(vm), v_ang(wrap_degrees(va)), i_mag(im), i_ang(wrap_degrees(ia)) {
    require_finite(vm, "voltage magnitude");
    require_finite(im, "current magnitude");
    if (vm < 0.0 || im < 0.0) {
        throw DomainError("negative phasor magnitude");
    }
}

double phase_angle_difference(const PhasorSample& sample) {
    return wrap_degrees(sample.v_ang - sample.i_ang);
}

double power_factor(const PhasorSample& sample) {
    return std::cos(deg_to_rad(phase_angle_difference(sample)));
}

double production_level(const PhasorSample& sample, double rated_power, double phase_factor) {
    if (!(rated_power > 0.0)) {
        throw DomainError("rated power must be positive");
    }
    const double p = sample.v_mag * sample.i_mag * power_factor(sample) * phase_factor;
    return std::max(0.0, 100.0 * p / rated_power);
}

void PhasorStream::validate() const {
    if (!(rated_power > 0.0) || !std::isfinite(rated_power)) {
        throw DomainError("stream " + feeder_id + ": rated power must be positive");
    }
    if (!(nominal_rate > 0.0) || !std::isfinite(nominal_rate)) {
        throw DomainError("stream " + feeder_id + ": nominal rate must be positive");
    }
    for (std::size_t k = 1; k < samples.size(); ++k) {
        if (samples[k].timestamp <= samples[k - 1].timestamp) {
            throw DomainError("stream " + feeder_id + ": timestamps must strictly increase");
        }
    }
}

}  // namespace solarpmu
