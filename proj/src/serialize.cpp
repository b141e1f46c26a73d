#include "solarpmu/serialize.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "solarpmu/errors.hpp"

namespace solarpmu {

namespace {

using nlohmann::json;

constexpr const char* kModelFormat = "solarpmu-gan";

json mlp_json(const nn::Mlp& net) {
    const auto p = net.parameters();
    return {{"layers", net.layer_sizes()}, {"parameters", std::vector<double>(p.begin(), p.end())}};
}

nn::Mlp mlp_from(const json& j) {
    auto sizes = j.at("layers").get<std::vector<int>>();
    auto params = j.at("parameters").get<std::vector<double>>();
    if (sizes.size() < 2 || params.size() != nn::parameter_count(sizes)) {
        throw FormatError("network shape does not match its parameter count");
    }
    return nn::Mlp(std::move(sizes), std::move(params));
}

json range_json(const std::vector<PhasorSample>& window) {
    if (window.empty()) return nullptr;
    return json::array({window.front().timestamp, window.back().timestamp});
}

std::vector<PhasorSample> slice_range(const json& range, const PhasorStream& stream) {
    if (range.is_null()) return {};
    const auto first = range.at(0).get<Timestamp>();
    const auto last = range.at(1).get<Timestamp>();
    const auto& s = stream.samples;
    const auto by_time = [](const PhasorSample& p, Timestamp t) { return p.timestamp < t; };
    const auto lo = std::lower_bound(s.begin(), s.end(), first, by_time);
    const auto hi = std::lower_bound(s.begin(), s.end(), last, by_time);
    if (lo == s.end() || hi == s.end() || lo->timestamp != first || hi->timestamp != last) {
        throw FormatError("steady window range is not present in stream '" + stream.feeder_id + "'");
    }
    return {lo, hi + 1};
}

std::size_t index_of(const PhasorStream& stream, Timestamp t) {
    const auto& s = stream.samples;
    const auto it = std::lower_bound(s.begin(), s.end(), t,
                                     [](const PhasorSample& p, Timestamp v) { return p.timestamp < v; });
    if (it == s.end() || it->timestamp != t) {
        throw FormatError("event timestamp " + std::to_string(t) + " is not present in the stream");
    }
    return static_cast<std::size_t>(std::distance(s.begin(), it));
}

json stages_json(const StageSegmentation& seg) {
    json labels = nullptr;
    if (seg.labels) {
        labels = json::array();
        for (auto s : *seg.labels) labels.push_back(to_string(s));
    }
    return {{"boundaries_us", seg.boundaries},
            {"labels", labels},
            {"slopes", seg.slopes},
            {"staged", seg.staged},
            {"step_direction", seg.step_direction},
            {"sse_one", seg.sse_one},
            {"sse_two", seg.sse_two},
            {"sse_five", seg.sse_five}};
}

}  // namespace

std::string model_to_json(const GanModel& model) {
    const auto& c = model.config;
    const auto& n = model.normalization;
    const json root = {
        {"format", kModelFormat},
        {"version", kModelFormatVersion},
        {"noise_dim", model.noise_dim},
        {"generator", mlp_json(model.generator)},
        {"discriminator", mlp_json(model.discriminator)},
        {"normalization",
         {{"window_size", n.window_size}, {"channels", n.channels}, {"mean", n.mean}, {"stddev", n.stddev}}},
        {"config",
         {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"noise_dim", c.noise_dim},
          {"hidden_width", c.hidden_width},
          {"generator_loss", c.generator_loss == GeneratorLoss::Minimax ? "minimax" : "non_saturating"},
          {"reference_mix", c.reference_mix},
          {"reference_scale", c.reference_scale}}},
        {"training_log", model.training_log},
        {"training_scores", model.training_scores},
    };
    return root.dump() + "\n";
}

GanModel model_from_json(const std::string& text) {
    try {
        const json root = json::parse(text);
        if (root.at("format").get<std::string>() != kModelFormat) {
            throw FormatError("not a solarpmu model file");
        }
        if (root.at("version").get<int>() != kModelFormatVersion) {
            throw FormatError("unsupported model version " + root.at("version").dump());
        }
        GanModel m;
        m.noise_dim = root.at("noise_dim").get<int>();
        m.generator = mlp_from(root.at("generator"));
        m.discriminator = mlp_from(root.at("discriminator"));
        const auto& n = root.at("normalization");
        m.normalization.window_size = n.at("window_size").get<int>();
        m.normalization.channels = n.at("channels").get<int>();
        m.normalization.mean = n.at("mean").get<std::vector<double>>();
        m.normalization.stddev = n.at("stddev").get<std::vector<double>>();
        const auto& c = root.at("config");
        m.config.epochs = c.at("epochs").get<int>();
        m.config.learning_rate = c.at("learning_rate").get<double>();
        m.config.batch_size = c.at("batch_size").get<int>();
        m.config.seed = c.at("seed").get<std::uint64_t>();
        m.config.noise_dim = c.at("noise_dim").get<int>();
        m.config.hidden_width = c.at("hidden_width").get<int>();
        m.config.generator_loss = c.at("generator_loss").get<std::string>() == "minimax" ? GeneratorLoss::Minimax
                                                                                          : GeneratorLoss::NonSaturating;
        m.config.reference_mix = c.at("reference_mix").get<double>();
        m.config.reference_scale = c.at("reference_scale").get<double>();
        m.training_log = root.at("training_log").get<std::vector<double>>();
        m.training_scores = root.at("training_scores").get<std::vector<double>>();

        const auto width = m.normalization.width();
        if (static_cast<int>(m.normalization.mean.size()) != m.normalization.channels ||
            m.normalization.stddev.size() != m.normalization.mean.size() ||
            m.discriminator.input_size() != width || m.discriminator.output_size() != 1 ||
            m.generator.input_size() != m.noise_dim || m.generator.output_size() != width ||
            !std::is_sorted(m.training_scores.begin(), m.training_scores.end()) || m.training_scores.empty()) {
            throw FormatError("model shapes are inconsistent");
        }
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed model file: ") + e.what());
    }
}

std::string event_id(const EventWindow& event) { return event.stream_id + "@" + std::to_string(event.start); }

void write_events(std::ostream& out, std::span<const EventWindow> events) {
    for (const auto& e : events) {
        const json line = {{"event_id", event_id(e)},
                           {"stream", e.stream_id},
                           {"start_us", e.start},
                           {"end_us", e.end},
                           {"peak_score", e.peak_score},
                           {"pre_window", range_json(e.pre_window)},
                           {"post_window", range_json(e.post_window)},
                           {"steady", e.has_steady_state()}};
        out << line.dump() << '\n';
    }
}

std::vector<EventWindow> read_events(std::istream& in, const PhasorStream& stream) {
    std::vector<EventWindow> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            EventWindow e;
            e.stream_id = j.at("stream").get<std::string>();
            e.start = j.at("start_us").get<Timestamp>();
            e.end = j.at("end_us").get<Timestamp>();
            e.peak_score = j.at("peak_score").is_null() ? 0.0 : j.at("peak_score").get<double>();
            if (e.end < e.start) {
                throw FormatError("end_us precedes start_us");
            }
            e.start_index = index_of(stream, e.start);
            e.end_index = index_of(stream, e.end);
            e.pre_window = slice_range(j.at("pre_window"), stream);
            e.post_window = slice_range(j.at("post_window"), stream);
            events.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw FormatError("events line " + std::to_string(line_no) + ": " + ex.what());
        } catch (const FormatError& ex) {
            throw FormatError("events line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return events;
}

void write_origins(std::ostream& out, std::span<const EventFeatures> features) {
    for (const auto& f : features) {
        json agreement = nullptr;
        if (f.origin.agreement) agreement = *f.origin.agreement;
        const json line = {{"event_id", f.event_id},
                           {"real_z", f.origin.real_z},
                           {"label", to_string(f.origin.origin)},
                           {"method", to_string(f.origin.method)},
                           {"agreement", agreement}};
        out << line.dump() << '\n';
    }
}

std::string features_to_json(std::span<const EventFeatures> features) {
    json arr = json::array();
    for (const auto& f : features) {
        arr.push_back({{"event_id", f.event_id},
                       {"onset_us", f.onset},
                       {"origin", to_string(f.origin.origin)},
                       {"production_pct", f.production_pct},
                       {"pre_angle_deg", f.pre_angle},
                       {"d_angle_deg", f.d_angle},
                       {"d_pf", f.d_pf},
                       {"real_z", f.real_z}});
    }
    return arr.dump(2) + "\n";
}

void write_stages(std::ostream& out, std::span<const StageRecord> records) {
    for (const auto& r : records) {
        auto line = stages_json(r.segmentation);
        line["event_id"] = r.event_id;
        out << line.dump() << '\n';
    }
}

std::string truth_to_json(std::span<const TruthEvent> truth) {
    json arr = json::array();
    for (const auto& t : truth) {
        arr.push_back({{"id", t.id},
                       {"kind", to_string(t.kind)},
                       {"label", to_string(t.label)},
                       {"onset_us", t.onset},
                       {"end_us", t.end},
                       {"production_pct", t.production_pct},
                       {"stage_boundaries_us", t.stage_boundaries},
                       {"step_direction", t.step_direction}});
    }
    return json{{"events", arr}}.dump(2) + "\n";
}

std::vector<TruthEvent> truth_from_json(const std::string& text) {
    try {
        const json root = json::parse(text);
        std::vector<TruthEvent> out;
        for (const auto& j : root.at("events")) {
            TruthEvent t;
            t.id = j.at("id").get<std::string>();
            t.kind = event_kind_from_string(j.at("kind").get<std::string>());
            t.label = origin_from_string(j.at("label").get<std::string>());
            t.onset = j.at("onset_us").get<Timestamp>();
            t.end = j.at("end_us").get<Timestamp>();
            t.production_pct = j.at("production_pct").get<double>();
            t.stage_boundaries = j.at("stage_boundaries_us").get<std::vector<Timestamp>>();
            t.step_direction = j.at("step_direction").get<int>();
            out.push_back(std::move(t));
        }
        return out;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed truth file: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("malformed truth file: ") + e.what());
    }
}

}  // namespace solarpmu
