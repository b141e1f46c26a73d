#ifndef SOLARPMU_SERIALIZE_HPP
#define SOLARPMU_SERIALIZE_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "solarpmu/characterize.hpp"
#include "solarpmu/detect.hpp"
#include "solarpmu/dynamics.hpp"
#include "solarpmu/gan.hpp"
#include "solarpmu/simulate.hpp"

namespace solarpmu {

inline constexpr int kModelFormatVersion = 1;

/// Shapes, weights, normalization, config and training scores. Doubles round-trip exactly.
std::string model_to_json(const GanModel& model);
/// Throws FormatError on a wrong format tag, version or shape.
GanModel model_from_json(const std::string& text);

/// "<stream>@<start_us>"; stable across runs.
std::string event_id(const EventWindow& event);

/// One EventWindow per line. Steady windows are stored as timestamp ranges.
void write_events(std::ostream& out, std::span<const EventWindow> events);
/// Rebuilds the steady windows from `stream`; throws FormatError if a range is not in it.
std::vector<EventWindow> read_events(std::istream& in, const PhasorStream& stream);

/// {event_id, real_z, label, method, agreement} per line.
void write_origins(std::ostream& out, std::span<const EventFeatures> features);

std::string features_to_json(std::span<const EventFeatures> features);

struct StageRecord {
    std::string event_id;
    StageSegmentation segmentation;
};

/// {event_id, boundaries (us), labels, slopes, staged, ...} per line.
void write_stages(std::ostream& out, std::span<const StageRecord> records);

std::string truth_to_json(std::span<const TruthEvent> truth);
std::vector<TruthEvent> truth_from_json(const std::string& text);

}  // namespace solarpmu

#endif  // SOLARPMU_SERIALIZE_HPP
