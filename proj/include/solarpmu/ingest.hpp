#ifndef SOLARPMU_INGEST_HPP
#define SOLARPMU_INGEST_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "solarpmu/phasor.hpp"

namespace solarpmu {

inline constexpr const char* kStreamCsvHeader = "timestamp_us,v_mag,v_ang,i_mag,i_ang";
/// Half of one 120 Hz frame.
inline constexpr std::int64_t kDefaultAlignmentToleranceUs = 4166;

struct Gap {
    Timestamp start = 0;  ///< last sample before the gap
    Timestamp end = 0;    ///< first sample after the gap
    std::int64_t missing = 0;

    friend bool operator==(const Gap&, const Gap&) = default;
};

struct GapReport {
    std::vector<Gap> gaps;
};

/// A dropped CSV row (1-based line number, header is line 1).
struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct ParsedStream {
    PhasorStream stream;
    GapReport gaps;
    std::vector<RowError> dropped_rows;
};

/**
 * @brief Parses a `timestamp_us,v_mag,v_ang,i_mag,i_ang` CSV.
 *
 * Malformed or non-monotone rows are dropped and reported; parsing continues.
 * A wrong header or an empty source throws FormatError. Gaps wider than 1.5
 * nominal frames are recorded.
 */
ParsedStream parse_stream(std::istream& source, const std::string& feeder_id,
                          double rated_power = kDefaultSolarRating,
                          double nominal_rate = kDefaultReportingRate);

/// Writes the CSV schema with 17 significant digits so parse(serialize(s)) is bit-exact.
void serialize_stream(std::ostream& out, const PhasorStream& stream);

/// Scans consecutive timestamps for holes wider than 1.5 frames.
GapReport find_gaps(std::span<const PhasorSample> samples, double nominal_rate);

struct AlignedPair {
    PhasorSample solar;
    PhasorSample auxiliary;
    std::int64_t skew = 0;  ///< |solar.timestamp - auxiliary.timestamp| in microseconds
};

/**
 * @brief Greedy nearest-timestamp matching of two synchronized streams.
 *
 * Candidate pairs within the tolerance are taken in order of increasing skew;
 * each sample is used at most once. The result is ordered by the first stream's
 * timestamps. Disjoint time ranges yield an empty result.
 */
std::vector<AlignedPair> align(const PhasorStream& a, const PhasorStream& b,
                               std::int64_t tolerance_us = kDefaultAlignmentToleranceUs);

}  // namespace solarpmu

#endif  // SOLARPMU_INGEST_HPP
