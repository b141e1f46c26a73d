#include "solarpmu/commands.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "solarpmu/config.hpp"
#include "solarpmu/errors.hpp"
#include "solarpmu/serialize.hpp"

namespace solarpmu::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Unreadable or inconsistent input; maps to kInputError.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError(std::string("cannot read ") + what + " '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
        throw IoError("SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    for (unsigned int k = 0; k < length; ++k) {
        hex += kHex[digest[k] >> 4];
        hex += kHex[digest[k] & 0xF];
    }
    return hex;
}

/// Shortest round-trip decimal form.
std::string fmt(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

class OutputDir {
public:
    explicit OutputDir(std::string dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_)) {
            throw IoError("cannot create output directory '" + dir_ + "'");
        }
    }

    void write(const std::string& name, const std::string& content) {
        const auto path = fs::path(dir_) / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out) {
            throw IoError("cannot write '" + path.string() + "'");
        }
        outputs_[name] = {sha256_hex(content), content.size()};
    }

    /// Lists every file written so far; the manifest itself is written last.
    void write_manifest(json manifest) {
        json files = json::array();
        for (const auto& [name, entry] : outputs_) {
            files.push_back({{"file", name}, {"sha256", entry.first}, {"bytes", entry.second}});
        }
        manifest["output_dir"] = dir_;
        manifest["outputs"] = files;
        write("manifest.json", manifest.dump(2) + "\n");
    }

private:
    std::string dir_;
    std::map<std::string, std::pair<std::string, std::size_t>> outputs_;
};

json module_versions() {
    return {{"phasor", "1"},   {"ingest", "1"},       {"detect", "1"},   {"locate", "1"},
            {"characterize", "1"}, {"dynamics", "1"}, {"simulate", "1"}, {"model_format", kModelFormatVersion}};
}

json base_manifest(const std::string& command, const std::vector<std::pair<std::string, std::string>>& inputs,
                   const std::string& config_text) {
    json in = json::array();
    for (const auto& [path, content] : inputs) {
        in.push_back({{"path", path}, {"sha256", sha256_hex(content)}});
    }
    return {{"command", command},
            {"tool_version", kToolVersion},
            {"modules", module_versions()},
            {"inputs", in},
            {"config_sha256", sha256_hex(config_text)}};
}

AnalysisConfig load_analysis(const std::string& path, std::string& raw) {
    if (path.empty()) {
        raw.clear();
        return AnalysisConfig{};
    }
    raw = read_file(path, "config");
    return parse_analysis_config(raw);
}

PhasorStream load_stream(const std::string& text, const std::string& path, const std::string& id,
                         const AnalysisConfig& cfg, std::ostream& log) {
    std::istringstream in(text);
    auto parsed = parse_stream(in, id, cfg.stream.rated_power, cfg.stream.nominal_rate);
    if (!parsed.dropped_rows.empty()) {
        const auto& first = parsed.dropped_rows.front();
        log << "warning: " << path << ": dropped " << parsed.dropped_rows.size() << " row(s); first at line "
            << first.line << " (" << first.message << ")\n";
    }
    if (!parsed.gaps.gaps.empty()) {
        std::int64_t missing = 0;
        for (const auto& g : parsed.gaps.gaps) missing += g.missing;
        log << "warning: " << path << ": " << parsed.gaps.gaps.size() << " gap(s), " << missing
            << " missing frame(s)\n";
    }
    if (parsed.stream.samples.size() < 2) {
        throw InputError("stream '" + path + "' holds fewer than two valid samples");
    }
    return std::move(parsed.stream);
}

template <typename Body>
int guarded(std::ostream& log, Body&& body) {
    try {
        body();
        return kSuccess;
    } catch (const IoError& e) {
        log << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kInputError;
    }
}

json fit_json(const CurveFitResult& fit) {
    return {{"model", to_string(fit.model)},
            {"params", fit.params},
            {"rmse", fit.rmse},
            {"n_points", fit.n_points},
            {"iterations", fit.iterations},
            {"converged", fit.converged}};
}

json try_fit(const std::vector<Point>& points, bool with_offset) {
    try {
        return fit_json(fit_power_law(points, with_offset));
    } catch (const FitError& e) {
        auto j = fit_json(e.last);
        j["error"] = e.what();
        return j;
    } catch (const std::exception& e) {
        return {{"skipped", e.what()}, {"n_points", points.size()}};
    }
}

json response_json(const FeederResponse& r) {
    return {{"delta_v_mag", r.delta_v_mag},
            {"delta_i_mag", r.delta_i_mag},
            {"dv_direction", r.dv_direction},
            {"di_direction", r.di_direction},
            {"pf_pre", r.pf_pre},
            {"pf_peak_deviation", r.pf_peak_deviation},
            {"pf_late_deviation", r.pf_late_deviation},
            {"pf_change", to_string(r.pf_change)}};
}

}  // namespace

int cmd_defaults(std::ostream& out) {
    out << dump_analysis_config(AnalysisConfig{});
    return kSuccess;
}

int cmd_simulate(const SimulateOptions& options, std::ostream& log) {
    return guarded(log, [&] {
        const auto text = read_file(options.config_path, "scenario config");
        auto scenario = parse_scenario_config(text);
        if (options.seed) scenario.seed = *options.seed;
        const auto labeled = simulate(scenario);

        OutputDir out(options.out_dir);
        std::ostringstream solar;
        serialize_stream(solar, labeled.solar);
        out.write("solar.csv", solar.str());
        std::ostringstream aux;
        serialize_stream(aux, labeled.auxiliary);
        out.write("aux.csv", aux.str());
        out.write("truth.json", truth_to_json(labeled.truth));

        auto manifest = base_manifest("simulate", {{options.config_path, text}}, dump_scenario_config(scenario));
        manifest["seed"] = scenario.seed;
        out.write_manifest(manifest);
        log << "simulated " << labeled.solar.samples.size() << " frames, " << labeled.truth.size() << " event(s)\n";
    });
}

int cmd_train(const TrainOptions& options, std::ostream& log) {
    return guarded(log, [&] {
        std::string raw;
        auto cfg = load_analysis(options.config_path, raw);
        if (options.seed) cfg.gan.seed = *options.seed;
        if (options.epochs) cfg.gan.epochs = *options.epochs;
        const auto text = read_file(options.stream_path, "stream");
        const auto stream = load_stream(text, options.stream_path, "solar", cfg, log);
        const auto model = train_detector(stream, cfg.detector, cfg.gan);

        OutputDir out(options.out_dir);
        out.write("model.json", model_to_json(model));
        auto manifest = base_manifest("train", {{options.stream_path, text}}, dump_analysis_config(cfg));
        manifest["seed"] = cfg.gan.seed;
        out.write_manifest(manifest);
        log << "trained on " << stream.samples.size() << " frames; final V(G,D) = "
            << (model.training_log.empty() ? 0.0 : model.training_log.back()) << '\n';
    });
}

int cmd_detect(const DetectOptions& options, std::ostream& log) {
    return guarded(log, [&] {
        std::string raw;
        auto cfg = load_analysis(options.config_path, raw);
        if (options.threshold_quantile) {
            if (!(*options.threshold_quantile > 0.0 && *options.threshold_quantile < 1.0)) {
                throw InputError("--threshold-quantile must lie in (0, 1)");
            }
            cfg.detector.threshold_quantile = *options.threshold_quantile;
        }
        if (options.min_separation_s) {
            if (!(*options.min_separation_s >= 0.0)) {
                throw InputError("--min-separation must be non-negative");
            }
            cfg.detector.min_separation_s = *options.min_separation_s;
        }
        if (!options.baseline && options.model_path.empty()) {
            throw InputError("detect needs --model or --baseline");
        }
        const auto text = read_file(options.stream_path, "stream");
        const auto stream = load_stream(text, options.stream_path, "solar", cfg, log);
        std::vector<std::pair<std::string, std::string>> inputs{{options.stream_path, text}};

        std::vector<EventWindow> events;
        if (options.baseline) {
            events = detect_events_baseline(stream, cfg.baseline.z_threshold, cfg.baseline.window, cfg.detector);
        } else {
            const auto model_text = read_file(options.model_path, "model");
            inputs.emplace_back(options.model_path, model_text);
            const auto model = model_from_json(model_text);
            if (static_cast<int>(stream.samples.size()) <= model.normalization.window_size) {
                log << "warning: stream is shorter than one detector window\n";
            } else {
                events = detect_events(stream, model, cfg.detector);
            }
        }
        OutputDir out(options.out_dir);
        std::ostringstream lines;
        write_events(lines, events);
        out.write("events.jsonl", lines.str());
        auto manifest = base_manifest("detect", inputs, dump_analysis_config(cfg));
        manifest["detector"] = options.baseline ? "baseline" : "gan";
        out.write_manifest(manifest);
        std::size_t steady = 0;
        for (const auto& e : events) steady += e.has_steady_state() ? 1 : 0;
        log << "detected " << events.size() << " event(s), " << steady << " with steady windows\n";
    });
}

int cmd_analyze(const AnalyzeOptions& options, std::ostream& log) {
    return guarded(log, [&] {
        std::string raw;
        const auto cfg = load_analysis(options.config_path, raw);
        const auto solar_text = read_file(options.solar_path, "solar stream");
        const auto solar = load_stream(solar_text, options.solar_path, "solar", cfg, log);
        std::vector<std::pair<std::string, std::string>> inputs{{options.solar_path, solar_text}};

        std::vector<AlignedPair> pairs;
        const bool have_aux = !options.aux_path.empty();
        if (have_aux) {
            const auto aux_text = read_file(options.aux_path, "auxiliary stream");
            inputs.emplace_back(options.aux_path, aux_text);
            const auto aux = load_stream(aux_text, options.aux_path, "auxiliary", cfg, log);
            pairs = align(solar, aux, cfg.stream.alignment_tolerance_us);
            if (pairs.empty()) {
                log << "warning: solar and auxiliary streams do not overlap; using impedance only\n";
            }
        }
        const auto events_text = read_file(options.events_path, "events");
        inputs.emplace_back(options.events_path, events_text);
        std::istringstream events_in(events_text);
        const auto events = read_events(events_in, solar);

        std::vector<std::string> warnings;
        const auto warn = [&](const std::string& id, const std::string& message) {
            warnings.push_back(id + ": " + message);
            log << "warning: " << id << ": " << message << '\n';
        };

        std::vector<EventFeatures> features;
        std::vector<StageRecord> stages;
        json responses = json::array();
        std::size_t checked = 0;
        std::size_t agreed = 0;
        for (const auto& event : events) {
            const auto id = event_id(event);
            if (!event.has_steady_state()) {
                warn(id, "no steady pre/post windows");
                continue;
            }
            DifferentialPhasor dp;
            try {
                dp = differential_phasor(event, cfg.locate.current_floor);
            } catch (const IndeterminateImpedanceError& e) {
                warn(id, e.what());
                continue;
            }
            auto label = classify_origin(dp, cfg.locate.dead_band);
            if (!pairs.empty()) {
                try {
                    label = combined_origin(event, dp, pairs, cfg.stream.nominal_rate, cfg.locate);
                    ++checked;
                    agreed += label.agreement.value_or(false) ? 1 : 0;
                } catch (const InsufficientDataError& e) {
                    warn(id, std::string("signature inspection skipped: ") + e.what());
                }
            }
            features.push_back(
                extract_features(event, dp, label, cfg.stream.rated_power, id, cfg.stream.phase_factor));

            if (label.origin != Origin::GridInduced) continue;
            if (!pairs.empty()) {
                try {
                    const auto r = grid_response_report(event, pairs, cfg.stream.nominal_rate, cfg.response);
                    responses.push_back({{"event_id", id},
                                         {"onset_us", r.onset},
                                         {"solar", response_json(r.solar)},
                                         {"auxiliary", response_json(r.auxiliary)},
                                         {"opposite_current", r.opposite_current}});
                } catch (const InsufficientDataError& e) {
                    warn(id, std::string("grid response skipped: ") + e.what());
                }
            }
            try {
                const auto trace = stage_trace(solar, event, cfg.trace.lead_s, cfg.trace.horizon_s);
                stages.push_back({id, segment_stages(event, trace, cfg.stages)});
            } catch (const SegmentationError& e) {
                warn(id, std::string("stage segmentation skipped: ") + e.what());
            }
        }
        if (!events.empty() && features.empty()) {
            throw InputError("no event could be analyzed");
        }

        // Envelopes over locally-induced events.
        std::vector<Point> z_points;
        std::vector<Point> angle_points;
        for (const auto& f : features) {
            if (f.origin.origin != Origin::LocallyInduced || !(f.production_pct > 0.0)) continue;
            z_points.emplace_back(f.production_pct, f.real_z);
            if (std::abs(f.d_angle) > 0.0) angle_points.emplace_back(f.production_pct, std::abs(f.d_angle));
        }
        json angle_fit = try_fit(angle_points, false);
        if (angle_fit.contains("params") && angle_fit.contains("converged")) {
            const double d = angle_fit["params"][0].get<double>();
            angle_fit["branches"] = {{"upper_d", d}, {"lower_d", -d}};
        }
        const json fits = {{"real_z_vs_production", try_fit(z_points, true)},
                           {"abs_d_angle_vs_production", angle_fit}};

        const auto hist = production_histogram(features, cfg.report.histogram_bin_pct, Origin::LocallyInduced,
                                               cfg.report.threshold_pct);
        json bins = json::array();
        std::ostringstream hist_csv;
        hist_csv << "lower_pct,upper_pct,count\n";
        for (const auto& b : hist.bins) {
            bins.push_back({{"lower_pct", b.lower}, {"upper_pct", b.upper}, {"count", b.count}});
            hist_csv << fmt(b.lower) << ',' << fmt(b.upper) << ',' << b.count << '\n';
        }
        std::ostringstream z_csv;
        std::ostringstream angle_csv;
        z_csv << "event_id,production_pct,real_z,label\n";
        angle_csv << "event_id,production_pct,d_angle_deg,abs_d_angle_deg,d_pf,label\n";
        std::map<std::string, std::size_t> counts{
            {"LocallyInduced", 0}, {"GridInduced", 0}, {"Indeterminate", 0}};
        for (const auto& f : features) {
            const auto label = to_string(f.origin.origin);
            ++counts[label];
            z_csv << f.event_id << ',' << fmt(f.production_pct) << ',' << fmt(f.real_z) << ',' << label << '\n';
            angle_csv << f.event_id << ',' << fmt(f.production_pct) << ',' << fmt(f.d_angle) << ','
                      << fmt(std::abs(f.d_angle)) << ',' << fmt(f.d_pf) << ',' << label << '\n';
        }
        std::size_t staged = 0;
        std::size_t labeled = 0;
        for (const auto& s : stages) {
            staged += s.segmentation.staged ? 1 : 0;
            labeled += s.segmentation.labels ? 1 : 0;
        }

        const json report = {
            {"events", events.size()},
            {"analyzed", features.size()},
            {"origin_counts", counts},
            {"method", have_aux && !pairs.empty() ? "Both" : "Impedance"},
            {"signature_checks", {{"checked", checked}, {"agreed", agreed}}},
            {"production_histogram",
             {{"origin", "LocallyInduced"},
              {"empty", hist.empty},
              {"bin_width_pct", cfg.report.histogram_bin_pct},
              {"total", hist.total},
              {"threshold_pct", hist.threshold_pct},
              {"fraction_at_or_below", hist.fraction_at_or_below},
              {"bins", bins}}},
            {"fits", fits},
            {"grid_responses", responses},
            {"stages", {{"segmented", stages.size()}, {"staged", staged}, {"labeled", labeled}}},
            {"warnings", warnings},
        };

        OutputDir out(options.out_dir);
        std::ostringstream origins;
        write_origins(origins, features);
        out.write("origins.jsonl", origins.str());
        out.write("features.json", features_to_json(features));
        out.write("fits.json", fits.dump(2) + "\n");
        std::ostringstream stage_lines;
        write_stages(stage_lines, stages);
        out.write("stages.jsonl", stage_lines.str());
        out.write("report.json", report.dump(2) + "\n");
        out.write("scatter_real_z.csv", z_csv.str());
        out.write("scatter_angle.csv", angle_csv.str());
        out.write("histogram.csv", hist_csv.str());
        out.write_manifest(base_manifest("analyze", inputs, dump_analysis_config(cfg)));
        log << "analyzed " << features.size() << " of " << events.size() << " event(s)\n";
    });
}

}  // namespace solarpmu::cli
