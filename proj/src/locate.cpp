#include "solarpmu/locate.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "solarpmu/errors.hpp"

namespace solarpmu {

namespace {

ComplexPhasor mean_voltage(std::span<const PhasorSample> window) {
    std::complex<double> sum{0.0, 0.0};
    for (const auto& s : window) sum += s.voltage().value();
    return ComplexPhasor(sum / static_cast<double>(window.size()));
}

ComplexPhasor mean_current(std::span<const PhasorSample> window) {
    std::complex<double> sum{0.0, 0.0};
    for (const auto& s : window) sum += s.current().value();
    return ComplexPhasor(sum / static_cast<double>(window.size()));
}

double median(std::vector<double> values) {
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    double m = *mid;
    if (values.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(values.begin(), mid));
    }
    return m;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::string to_string(Origin origin) {
    switch (origin) {
        case Origin::LocallyInduced: return "LocallyInduced";
        case Origin::GridInduced: return "GridInduced";
        case Origin::Indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

std::string to_string(OriginMethod method) {
    switch (method) {
        case OriginMethod::Impedance: return "Impedance";
        case OriginMethod::SignatureInspection: return "SignatureInspection";
        case OriginMethod::Both: return "Both";
    }
    return "Impedance";
}

Origin origin_from_string(const std::string& text) {
    if (text == "LocallyInduced") return Origin::LocallyInduced;
    if (text == "GridInduced") return Origin::GridInduced;
    if (text == "Indeterminate") return Origin::Indeterminate;
    throw FormatError("unknown origin label '" + text + "'");
}

DifferentialPhasor differential_phasor(std::span<const PhasorSample> pre_window,
                                       std::span<const PhasorSample> post_window, double current_floor) {
    if (pre_window.empty() || post_window.empty()) {
        throw ContractError("differential phasor needs non-empty pre and post windows");
    }
    DifferentialPhasor dp;
    dp.v_pre = mean_voltage(pre_window);
    dp.v_post = mean_voltage(post_window);
    dp.i_pre = mean_current(pre_window);
    dp.i_post = mean_current(post_window);
    dp.delta_v = dp.v_post - dp.v_pre;
    dp.delta_i = dp.i_post - dp.i_pre;
    if (!(dp.delta_i.magnitude() >= current_floor) || dp.delta_i.magnitude() == 0.0) {
        throw IndeterminateImpedanceError("|delta I| = " + std::to_string(dp.delta_i.magnitude()) +
                                          " A is below the current floor");
    }
    dp.z = dp.delta_v / dp.delta_i;
    return dp;
}

DifferentialPhasor differential_phasor(const EventWindow& event, double current_floor) {
    if (!event.has_steady_state()) {
        throw ContractError("event has no steady pre/post windows");
    }
    return differential_phasor(event.pre_window, event.post_window, current_floor);
}

OriginLabel classify_real_z(double real_z, double dead_band) {
    OriginLabel label;
    label.real_z = real_z;
    label.method = OriginMethod::Impedance;
    if (std::abs(real_z) <= dead_band) {
        label.origin = Origin::Indeterminate;
    } else {
        label.origin = real_z > 0.0 ? Origin::LocallyInduced : Origin::GridInduced;
    }
    return label;
}

OriginLabel classify_origin(const DifferentialPhasor& dp, double dead_band) {
    return classify_real_z(dp.z.re(), dead_band);
}

SignatureEvidence inspect_signature(const EventWindow& event, std::span<const AlignedPair> pairs,
                                    double nominal_rate, const LocateSettings& settings) {
    const double period = 1.0e6 / nominal_rate;
    const auto flank = static_cast<Timestamp>(std::llround(settings.flank_frames * period));
    const Timestamp lo = event.start - flank;
    const Timestamp hi = event.end + flank;

    const auto first = std::lower_bound(pairs.begin(), pairs.end(), lo,
                                        [](const AlignedPair& p, Timestamp t) { return p.solar.timestamp < t; });
    const auto last = std::upper_bound(pairs.begin(), pairs.end(), hi,
                                       [](Timestamp t, const AlignedPair& p) { return t < p.solar.timestamp; });
    const auto count = static_cast<double>(std::distance(first, last));
    const double expected = static_cast<double>(hi - lo) / period + 1.0;
    if (count < 3.0 || count < settings.min_coverage * expected || first->solar.timestamp > lo + period ||
        std::prev(last)->solar.timestamp < hi - period) {
        throw InsufficientDataError("aligned data does not cover the event interval");
    }

    std::vector<double> solar_v;
    std::vector<double> aux_v;
    std::vector<double> reference;
    for (auto it = first; it != last; ++it) {
        solar_v.push_back(it->solar.v_mag);
        aux_v.push_back(it->auxiliary.v_mag);
        if (it->solar.timestamp < event.start) {
            reference.push_back(it->auxiliary.v_mag);
        }
    }
    if (reference.size() < 3) {
        throw InsufficientDataError("no pre-event auxiliary reference");
    }

    SignatureEvidence ev;
    ev.correlation = pearson(solar_v, aux_v);
    const double ref_median = median(reference);
    std::vector<double> abs_dev;
    for (double v : reference) abs_dev.push_back(std::abs(v - ref_median));
    ev.aux_noise_floor = settings.noise_floor_mads * 1.4826 * median(abs_dev);
    for (auto it = first; it != last; ++it) {
        if (it->solar.timestamp >= event.start) {
            ev.aux_deviation = std::max(ev.aux_deviation, std::abs(it->auxiliary.v_mag - ref_median));
        }
    }
    ev.match = ev.correlation >= settings.corr_threshold && ev.aux_deviation > ev.aux_noise_floor;
    return ev;
}

bool signature_match(const EventWindow& event, std::span<const AlignedPair> pairs, double nominal_rate,
                     const LocateSettings& settings) {
    return inspect_signature(event, pairs, nominal_rate, settings).match;
}

OriginLabel combine_verdicts(const OriginLabel& impedance, bool signature) {
    OriginLabel label = impedance;
    label.method = OriginMethod::Both;
    switch (impedance.origin) {
        case Origin::GridInduced: label.agreement = signature; break;
        case Origin::LocallyInduced: label.agreement = !signature; break;
        case Origin::Indeterminate: label.agreement = false; break;
    }
    return label;
}

OriginLabel combined_origin(const EventWindow& event, const DifferentialPhasor& dp,
                            std::span<const AlignedPair> pairs, double nominal_rate,
                            const LocateSettings& settings) {
    const auto impedance = classify_origin(dp, settings.dead_band);
    return combine_verdicts(impedance, signature_match(event, pairs, nominal_rate, settings));
}

}  // namespace solarpmu
