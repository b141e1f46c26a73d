#include "solarpmu/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string_view>

#include "solarpmu/errors.hpp"

namespace solarpmu {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    return s;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
    field = trim(field);
    if (field.empty()) {
        return false;
    }
    if (field.front() == '+') {
        field.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc() && ptr == field.data() + field.size();
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return fields;
}

void write_double(std::ostream& out, double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                         std::chars_format::general, 17);
    out.write(buf.data(), ptr - buf.data());
}

}  // namespace

ParsedStream parse_stream(std::istream& source, const std::string& feeder_id, double rated_power,
                          double nominal_rate) {
    ParsedStream result;
    result.stream.feeder_id = feeder_id;
    result.stream.rated_power = rated_power;
    result.stream.nominal_rate = nominal_rate;

    std::string line;
    if (!std::getline(source, line)) {
        throw FormatError("empty stream file");
    }
    std::string_view header = trim(line);
    if (header.size() >= 3 && static_cast<unsigned char>(header[0]) == 0xEF) {
        header.remove_prefix(3);  // UTF-8 BOM
    }
    if (header != kStreamCsvHeader) {
        throw FormatError("unexpected CSV header '" + std::string(header) + "', expected '" +
                          kStreamCsvHeader + "'");
    }

    std::size_t line_no = 1;
    while (std::getline(source, line)) {
        ++line_no;
        const auto row = trim(line);
        if (row.empty()) {
            continue;
        }
        const auto fields = split_fields(row);
        if (fields.size() != 5) {
            result.dropped_rows.push_back({line_no, "expected 5 fields"});
            continue;
        }
        Timestamp ts = 0;
        std::array<double, 4> values{};
        bool ok = parse_number(fields[0], ts);
        for (std::size_t k = 0; ok && k < 4; ++k) {
            ok = parse_number(fields[k + 1], values[k]) && std::isfinite(values[k]);
        }
        if (!ok) {
            result.dropped_rows.push_back({line_no, "non-numeric field"});
            continue;
        }
        if (!result.stream.samples.empty() && ts <= result.stream.samples.back().timestamp) {
            result.dropped_rows.push_back({line_no, "non-monotone timestamp"});
            continue;
        }
        try {
            result.stream.samples.emplace_back(ts, values[0], values[1], values[2], values[3]);
        } catch (const DomainError& e) {
            result.dropped_rows.push_back({line_no, e.what()});
        }
    }
    result.gaps = find_gaps(result.stream.samples, nominal_rate);
    return result;
}

void serialize_stream(std::ostream& out, const PhasorStream& stream) {
    out << kStreamCsvHeader << '\n';
    for (const auto& s : stream.samples) {
        out << s.timestamp << ',';
        write_double(out, s.v_mag);
        out << ',';
        write_double(out, s.v_ang);
        out << ',';
        write_double(out, s.i_mag);
        out << ',';
        write_double(out, s.i_ang);
        out << '\n';
    }
}

GapReport find_gaps(std::span<const PhasorSample> samples, double nominal_rate) {
    GapReport report;
    const double period = 1.0e6 / nominal_rate;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        const auto dt = static_cast<double>(samples[k].timestamp - samples[k - 1].timestamp);
        if (dt > 1.5 * period) {
            const auto missing = static_cast<std::int64_t>(std::llround(dt / period)) - 1;
            report.gaps.push_back({samples[k - 1].timestamp, samples[k].timestamp, missing});
        }
    }
    return report;
}

std::vector<AlignedPair> align(const PhasorStream& a, const PhasorStream& b, std::int64_t tolerance_us) {
    struct Candidate {
        std::int64_t skew;
        std::int64_t sum;
        std::size_t ia;
        std::size_t ib;
    };
    std::vector<Candidate> candidates;
    const auto& sa = a.samples;
    const auto& sb = b.samples;
    std::size_t lo = 0;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const Timestamp t = sa[i].timestamp;
        while (lo < sb.size() && sb[lo].timestamp < t - tolerance_us) {
            ++lo;
        }
        for (std::size_t j = lo; j < sb.size() && sb[j].timestamp <= t + tolerance_us; ++j) {
            candidates.push_back({std::abs(t - sb[j].timestamp), t + sb[j].timestamp, i, j});
        }
    }
    // (skew, timestamp sum) is symmetric in the two streams, so align(a,b) and
    // align(b,a) accept the same timestamp pairs. Candidates still tied on both
    // keys are mirror images that never share a sample.
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
        if (x.skew != y.skew) return x.skew < y.skew;
        if (x.sum != y.sum) return x.sum < y.sum;
        if (x.ia != y.ia) return x.ia < y.ia;
        return x.ib < y.ib;
    });
    std::vector<char> used_a(sa.size(), 0);
    std::vector<char> used_b(sb.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> chosen;
    for (const auto& c : candidates) {
        if (used_a[c.ia] || used_b[c.ib]) {
            continue;
        }
        used_a[c.ia] = used_b[c.ib] = 1;
        chosen.emplace_back(c.ia, c.ib);
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<AlignedPair> pairs;
    pairs.reserve(chosen.size());
    for (const auto& [i, j] : chosen) {
        pairs.push_back({sa[i], sb[j], std::abs(sa[i].timestamp - sb[j].timestamp)});
    }
    return pairs;
}

}  // namespace solarpmu
