#include "solarpmu/config.hpp"

#include <set>

#include "json.hpp"
#include "solarpmu/errors.hpp"

namespace solarpmu {

namespace {

using nlohmann::json;

/// Reads typed fields out of one JSON object and rejects keys nobody asked for.
class Reader {
public:
    Reader(const json& object, std::string context) : object_(object), context_(std::move(context)) {
        if (!object_.is_object()) {
            throw ConfigError(context_ + " must be a JSON object");
        }
    }

    bool has(const char* key) const { return object_.contains(key); }

    void get(const char* key, double& field) {
        if (const auto* v = take(key)) {
            if (!v->is_number()) fail(key, "a number");
            field = v->get<double>();
        }
    }
    void get(const char* key, int& field) {
        if (const auto* v = take(key)) {
            if (!v->is_number_integer()) fail(key, "an integer");
            field = v->get<int>();
        }
    }
    void get(const char* key, std::int64_t& field) {
        if (const auto* v = take(key)) {
            if (!v->is_number_integer()) fail(key, "an integer");
            field = v->get<std::int64_t>();
        }
    }
    void get(const char* key, std::uint64_t& field) {
        if (const auto* v = take(key)) {
            if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
            field = v->get<std::uint64_t>();
        }
    }
    void get(const char* key, std::string& field) {
        if (const auto* v = take(key)) {
            if (!v->is_string()) fail(key, "a string");
            field = v->get<std::string>();
        }
    }
    void get(const char* key, std::complex<double>& field) {
        if (const auto* v = take(key)) {
            if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
                fail(key, "a [real, imag] pair");
            }
            field = {(*v)[0].get<double>(), (*v)[1].get<double>()};
        }
    }

    const json* take(const char* key) {
        const auto it = object_.find(key);
        if (it == object_.end()) return nullptr;
        seen_.insert(key);
        return &*it;
    }

    Reader child(const char* key) {
        static const json empty = json::object();
        const auto* v = take(key);
        return Reader(v ? *v : empty, context_ + "." + key);
    }

    void finish() const {
        for (const auto& [key, value] : object_.items()) {
            if (!seen_.count(key)) {
                throw ConfigError("unknown key '" + context_ + "." + key + "'");
            }
        }
    }

    [[noreturn]] void fail(const char* key, const char* what) const {
        throw ConfigError("'" + context_ + "." + key + "' must be " + what);
    }

    const std::string& context() const { return context_; }

private:
    const json& object_;
    std::string context_;
    std::set<std::string> seen_;
};

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

json complex_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

void read_noise(Reader r, NoiseLevels& n) {
    r.get("v_mag", n.v_mag);
    r.get("v_ang", n.v_ang);
    r.get("i_mag", n.i_mag);
    r.get("i_ang", n.i_ang);
    r.finish();
}

json noise_json(const NoiseLevels& n) {
    return {{"v_mag", n.v_mag}, {"v_ang", n.v_ang}, {"i_mag", n.i_mag}, {"i_ang", n.i_ang}};
}

EventSpec read_event(Reader r) {
    EventSpec e;
    r.get("id", e.id);
    std::string kind = to_string(e.kind);
    r.get("kind", kind);
    e.kind = event_kind_from_string(kind);
    r.get("onset_s", e.onset_s);
    r.get("magnitude", e.magnitude);
    r.get("angle_deg", e.angle_deg);
    r.get("transient_s", e.transient_s);
    r.get("overshoot", e.overshoot);
    r.get("hold_s", e.hold_s);
    r.get("release_s", e.release_s);
    if (r.has("control")) {
        auto c = r.child("control");
        auto& s = e.control;
        c.get("prompt_amp", s.prompt_amp);
        c.get("mppt_amp", s.mppt_amp);
        c.get("dip_undershoot", s.dip_undershoot);
        c.get("prompt_s", s.prompt_s);
        c.get("mppt_s", s.mppt_s);
        c.get("dip_s", s.dip_s);
        c.get("ramp_rate", s.ramp_rate);
        c.get("transient_angle_deg", s.transient_angle_deg);
        c.finish();
    }
    r.finish();
    if (e.id.empty()) {
        throw ConfigError(r.context() + ": every event needs an id");
    }
    return e;
}

json event_json(const EventSpec& e) {
    const auto& c = e.control;
    return {{"id", e.id},
            {"kind", to_string(e.kind)},
            {"onset_s", e.onset_s},
            {"magnitude", e.magnitude},
            {"angle_deg", e.angle_deg},
            {"transient_s", e.transient_s},
            {"overshoot", e.overshoot},
            {"hold_s", e.hold_s},
            {"release_s", e.release_s},
            {"control",
             {{"prompt_amp", c.prompt_amp},
              {"mppt_amp", c.mppt_amp},
              {"dip_undershoot", c.dip_undershoot},
              {"prompt_s", c.prompt_s},
              {"mppt_s", c.mppt_s},
              {"dip_s", c.dip_s},
              {"ramp_rate", c.ramp_rate},
              {"transient_angle_deg", c.transient_angle_deg}}}};
}

ScenarioConfig read_preset(Reader& r) {
    std::string preset;
    r.get("preset", preset);
    std::uint64_t seed = 1;
    r.get("seed", seed);
    ScenarioConfig cfg;
    if (preset == "production_split") {
        int events = 50;
        double low_fraction = 0.7;
        r.get("events", events);
        r.get("low_fraction", low_fraction);
        cfg = production_split_scenario(seed, events, low_fraction);
    } else if (preset == "grid_step") {
        int direction = 1;
        double step_fraction = 0.01;
        r.get("direction", direction);
        r.get("step_fraction", step_fraction);
        if (direction != 1 && direction != -1) {
            throw ConfigError("grid_step direction must be +1 or -1");
        }
        cfg = grid_step_scenario(direction, seed, step_fraction);
    } else if (preset == "mixed") {
        cfg = mixed_scenario(seed);
    } else {
        throw ConfigError("unknown scenario preset '" + preset + "'");
    }
    r.finish();
    return cfg;
}

}  // namespace

AnalysisConfig parse_analysis_config(const std::string& text) {
    const json root = parse_json(text);
    AnalysisConfig cfg;
    Reader r(root, "config");

    auto s = r.child("stream");
    s.get("nominal_rate", cfg.stream.nominal_rate);
    s.get("rated_power", cfg.stream.rated_power);
    s.get("phase_factor", cfg.stream.phase_factor);
    s.get("alignment_tolerance_us", cfg.stream.alignment_tolerance_us);
    s.finish();

    auto d = r.child("detector");
    d.get("window_size", cfg.detector.window_size);
    d.get("threshold_quantile", cfg.detector.threshold_quantile);
    d.get("min_separation_s", cfg.detector.min_separation_s);
    d.get("steady_len", cfg.detector.steady_len);
    d.get("steady_variance_factor", cfg.detector.steady_variance_factor);
    d.get("search_horizon_s", cfg.detector.search_horizon_s);
    d.get("corpus_stride", cfg.detector.corpus_stride);
    d.finish();

    auto b = r.child("baseline");
    b.get("z_threshold", cfg.baseline.z_threshold);
    b.get("window", cfg.baseline.window);
    b.finish();

    auto g = r.child("gan");
    g.get("epochs", cfg.gan.epochs);
    g.get("learning_rate", cfg.gan.learning_rate);
    g.get("batch_size", cfg.gan.batch_size);
    g.get("seed", cfg.gan.seed);
    g.get("noise_dim", cfg.gan.noise_dim);
    g.get("hidden_width", cfg.gan.hidden_width);
    std::string loss = cfg.gan.generator_loss == GeneratorLoss::Minimax ? "minimax" : "non_saturating";
    g.get("generator_loss", loss);
    if (loss == "minimax") {
        cfg.gan.generator_loss = GeneratorLoss::Minimax;
    } else if (loss == "non_saturating") {
        cfg.gan.generator_loss = GeneratorLoss::NonSaturating;
    } else {
        throw ConfigError("gan.generator_loss must be 'minimax' or 'non_saturating'");
    }
    g.get("reference_mix", cfg.gan.reference_mix);
    g.get("reference_scale", cfg.gan.reference_scale);
    g.finish();

    auto l = r.child("locate");
    l.get("current_floor", cfg.locate.current_floor);
    l.get("dead_band", cfg.locate.dead_band);
    l.get("corr_threshold", cfg.locate.corr_threshold);
    l.get("noise_floor_mads", cfg.locate.noise_floor_mads);
    l.get("flank_frames", cfg.locate.flank_frames);
    l.get("min_coverage", cfg.locate.min_coverage);
    l.finish();

    auto rs = r.child("response");
    rs.get("pre_window_s", cfg.response.pre_window_s);
    rs.get("steady_after_s", cfg.response.steady_after_s);
    rs.get("late_window_s", cfg.response.late_window_s);
    rs.get("pf_floor", cfg.response.pf_floor);
    rs.get("significance", cfg.response.significance);
    rs.finish();

    auto rp = r.child("report");
    rp.get("histogram_bin_pct", cfg.report.histogram_bin_pct);
    rp.get("threshold_pct", cfg.report.threshold_pct);
    rp.finish();

    auto st = r.child("stages");
    st.get("min_segment", cfg.stages.min_segment);
    st.get("min_improvement", cfg.stages.min_improvement);
    st.get("flat_tolerance", cfg.stages.flat_tolerance);
    st.finish();

    auto tr = r.child("trace");
    tr.get("lead_s", cfg.trace.lead_s);
    tr.get("horizon_s", cfg.trace.horizon_s);
    tr.finish();
    r.finish();

    if (!(cfg.stream.nominal_rate > 0.0) || !(cfg.stream.rated_power > 0.0) || !(cfg.stream.phase_factor > 0.0) ||
        cfg.stream.alignment_tolerance_us < 0) {
        throw ConfigError("stream rate, rating and phase factor must be positive");
    }
    if (!(cfg.detector.threshold_quantile > 0.0 && cfg.detector.threshold_quantile < 1.0)) {
        throw ConfigError("detector.threshold_quantile must lie in (0, 1)");
    }
    if (cfg.detector.window_size < 2 || cfg.detector.steady_len < 2 || cfg.detector.corpus_stride < 1 ||
        cfg.baseline.window < 3 || cfg.stages.min_segment < 2) {
        throw ConfigError("window lengths are too small");
    }
    if (!(cfg.report.histogram_bin_pct > 0.0) || !(cfg.trace.lead_s >= 0.0) || !(cfg.trace.horizon_s > 0.0)) {
        throw ConfigError("histogram bin width and trace horizon must be positive");
    }
    return cfg;
}

std::string dump_analysis_config(const AnalysisConfig& c) {
    const json root = {
        {"stream",
         {{"nominal_rate", c.stream.nominal_rate},
          {"rated_power", c.stream.rated_power},
          {"phase_factor", c.stream.phase_factor},
          {"alignment_tolerance_us", c.stream.alignment_tolerance_us}}},
        {"detector",
         {{"window_size", c.detector.window_size},
          {"threshold_quantile", c.detector.threshold_quantile},
          {"min_separation_s", c.detector.min_separation_s},
          {"steady_len", c.detector.steady_len},
          {"steady_variance_factor", c.detector.steady_variance_factor},
          {"search_horizon_s", c.detector.search_horizon_s},
          {"corpus_stride", c.detector.corpus_stride}}},
        {"baseline", {{"z_threshold", c.baseline.z_threshold}, {"window", c.baseline.window}}},
        {"gan",
         {{"epochs", c.gan.epochs},
          {"learning_rate", c.gan.learning_rate},
          {"batch_size", c.gan.batch_size},
          {"seed", c.gan.seed},
          {"noise_dim", c.gan.noise_dim},
          {"hidden_width", c.gan.hidden_width},
          {"generator_loss", c.gan.generator_loss == GeneratorLoss::Minimax ? "minimax" : "non_saturating"},
          {"reference_mix", c.gan.reference_mix},
          {"reference_scale", c.gan.reference_scale}}},
        {"locate",
         {{"current_floor", c.locate.current_floor},
          {"dead_band", c.locate.dead_band},
          {"corr_threshold", c.locate.corr_threshold},
          {"noise_floor_mads", c.locate.noise_floor_mads},
          {"flank_frames", c.locate.flank_frames},
          {"min_coverage", c.locate.min_coverage}}},
        {"response",
         {{"pre_window_s", c.response.pre_window_s},
          {"steady_after_s", c.response.steady_after_s},
          {"late_window_s", c.response.late_window_s},
          {"pf_floor", c.response.pf_floor},
          {"significance", c.response.significance}}},
        {"report", {{"histogram_bin_pct", c.report.histogram_bin_pct}, {"threshold_pct", c.report.threshold_pct}}},
        {"stages",
         {{"min_segment", c.stages.min_segment},
          {"min_improvement", c.stages.min_improvement},
          {"flat_tolerance", c.stages.flat_tolerance}}},
        {"trace", {{"lead_s", c.trace.lead_s}, {"horizon_s", c.trace.horizon_s}}},
    };
    return root.dump(2) + "\n";
}

ScenarioConfig parse_scenario_config(const std::string& text) {
    const json root = parse_json(text);
    Reader r(root, "scenario");
    if (r.has("preset")) {
        auto cfg = read_preset(r);
        cfg.validate();
        return cfg;
    }
    ScenarioConfig cfg;
    r.get("duration_s", cfg.duration_s);
    r.get("seed", cfg.seed);
    r.get("nominal_rate", cfg.nominal_rate);
    r.get("start_us", cfg.start_us);
    r.get("rated_power", cfg.rated_power);
    r.get("phase_factor", cfg.phase_factor);
    r.get("nominal_voltage", cfg.nominal_voltage);
    r.get("voltage_angle_deg", cfg.voltage_angle_deg);
    r.get("pf_angle_deg", cfg.pf_angle_deg);
    if (const auto* points = r.take("irradiance")) {
        if (!points->is_array()) r.fail("irradiance", "an array of [t_s, pct] pairs");
        cfg.irradiance.clear();
        for (const auto& p : *points) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
                r.fail("irradiance", "an array of [t_s, pct] pairs");
            }
            cfg.irradiance.push_back({p[0].get<double>(), p[1].get<double>()});
        }
    }
    r.get("cloud_noise_pct", cfg.cloud_noise_pct);
    r.get("cloud_time_constant_s", cfg.cloud_time_constant_s);
    if (r.has("noise")) read_noise(r.child("noise"), cfg.noise);
    if (r.has("aux_noise")) read_noise(r.child("aux_noise"), cfg.aux_noise);
    r.get("source_impedance", cfg.source_impedance);
    if (r.has("source_resistance_law")) {
        auto law_reader = r.child("source_resistance_law");
        ResistanceLaw law;
        law_reader.get("a", law.a);
        law_reader.get("b", law.b);
        law_reader.get("c", law.c);
        law_reader.finish();
        cfg.source_resistance_law = law;
    }
    if (r.has("auxiliary")) {
        auto a = r.child("auxiliary");
        a.get("nominal_voltage", cfg.auxiliary.nominal_voltage);
        a.get("load_impedance", cfg.auxiliary.load_impedance);
        a.get("pv_current", cfg.auxiliary.pv_current);
        a.get("pv_angle_deg", cfg.auxiliary.pv_angle_deg);
        a.finish();
    }
    if (const auto* events = r.take("events")) {
        if (!events->is_array()) r.fail("events", "an array");
        for (std::size_t k = 0; k < events->size(); ++k) {
            cfg.events.push_back(read_event(Reader((*events)[k], "scenario.events[" + std::to_string(k) + "]")));
        }
    }
    r.finish();
    cfg.validate();
    return cfg;
}

std::string dump_scenario_config(const ScenarioConfig& c) {
    json irradiance = json::array();
    for (const auto& p : c.irradiance) irradiance.push_back({p.t_s, p.pct});
    json events = json::array();
    for (const auto& e : c.events) events.push_back(event_json(e));
    json root = {{"duration_s", c.duration_s},
                 {"seed", c.seed},
                 {"nominal_rate", c.nominal_rate},
                 {"start_us", c.start_us},
                 {"rated_power", c.rated_power},
                 {"phase_factor", c.phase_factor},
                 {"nominal_voltage", c.nominal_voltage},
                 {"voltage_angle_deg", c.voltage_angle_deg},
                 {"pf_angle_deg", c.pf_angle_deg},
                 {"irradiance", irradiance},
                 {"cloud_noise_pct", c.cloud_noise_pct},
                 {"cloud_time_constant_s", c.cloud_time_constant_s},
                 {"noise", noise_json(c.noise)},
                 {"aux_noise", noise_json(c.aux_noise)},
                 {"source_impedance", complex_json(c.source_impedance)},
                 {"auxiliary",
                  {{"nominal_voltage", c.auxiliary.nominal_voltage},
                   {"load_impedance", complex_json(c.auxiliary.load_impedance)},
                   {"pv_current", c.auxiliary.pv_current},
                   {"pv_angle_deg", c.auxiliary.pv_angle_deg}}},
                 {"events", events}};
    if (c.source_resistance_law) {
        root["source_resistance_law"] = {
            {"a", c.source_resistance_law->a}, {"b", c.source_resistance_law->b}, {"c", c.source_resistance_law->c}};
    }
    return root.dump(2) + "\n";
}

}  // namespace solarpmu
