#include "logmosaic/report.hpp"

#include <fstream>

#include "logmosaic/error.hpp"

namespace logmosaic {

Json to_json(const AffineMotion& m) {
    return Json{{"ux", m.ux}, {"uy", m.uy}, {"u0", m.u0},
                {"vx", m.vx}, {"vy", m.vy}, {"v0", m.v0}};
}

AffineMotion affine_from_json(const Json& j) {
    AffineMotion m;
    m.ux = j.at("ux").get<double>();
    m.uy = j.at("uy").get<double>();
    m.u0 = j.at("u0").get<double>();
    m.vx = j.at("vx").get<double>();
    m.vy = j.at("vy").get<double>();
    m.v0 = j.at("v0").get<double>();
    return m;
}

Json to_json(const MatchRecord& r) {
    Json j;
    j["landmark"] = {r.landmark.x, r.landmark.y};
    j["u"] = r.u;
    j["v"] = r.v;
    j["score"] = r.score;
    j["residual"] = r.has_residual ? Json(r.residual) : Json(nullptr);
    j["searched"] = r.searched;
    j["stage1_pass"] = r.stage1_pass;
    j["stage2_pass"] = r.stage2_pass;
    j["probes"] = r.probes;
    j["shifts"] = r.shifts;
    return j;
}

Json to_json(const FrameReport& r) {
    Json j;
    j["frame"] = r.frame_index;
    j["status"] = to_string(r.status);
    j["init"] = {{"mode", to_string(r.init_mode)},
                 {"fallback", r.init_fallback},
                 {"iterations", r.init_iterations},
                 {"motion", to_json(r.init_motion)}};
    j["step_motion"] = to_json(r.step_motion);
    j["chained_motion"] = to_json(r.chained_motion);
    j["landmarks"] = r.landmarks;
    j["stage1_survivors"] = r.stage1_survivors;
    j["stage2_survivors"] = r.stage2_survivors;
    j["probes"] = r.probes;
    j["shifts"] = r.shifts;
    j["lsq_fits"] = r.lsq_fits;
    j["timings_ms"] = {{"init", r.init_ms},
                       {"search", r.search_ms},
                       {"fit", r.fit_ms},
                       {"warp", r.warp_ms},
                       {"total", r.total_ms}};
    if (!r.message.empty()) j["message"] = r.message;
    Json matches = Json::array();
    for (const MatchRecord& m : r.matches) matches.push_back(to_json(m));
    j["matches"] = std::move(matches);
    return j;
}

Json to_json(const RegistrationConfig& c) {
    Json j;
    j["landmark_count"] = c.landmark_count;
    j["min_correlation"] = c.min_correlation;
    j["min_acceptance_rate"] = c.min_acceptance_rate;
    j["max_residual"] = c.max_residual;
    j["init_mode"] = to_string(c.init_mode);
    j["template_half_extent"] = c.template_spec.half_extent;
    j["search"] = {{"w_init", c.search.w_init},
                   {"neighborhood", to_string(c.search.neighborhood)},
                   {"max_probes", c.search.max_probes}};
    j["layout"] = to_string(c.layout);
    j["seed"] = c.seed;
    j["kourogi"] = {{"gray_threshold", c.kourogi.gray_threshold},
                    {"max_iters", c.kourogi.max_iters},
                    {"min_delta", c.kourogi.min_delta},
                    {"model", c.kourogi.model == KourogiModel::translation_only
                                  ? "translation_only"
                                  : "full_affine"},
                    {"min_accept_fraction", c.kourogi.min_accept_fraction}};
    j["threads"] = c.threads;
    return j;
}

Json make_run_report(const RegistrationConfig& config, CompositePolicy policy,
                     const std::vector<FrameReport>& reports) {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["config"] = to_json(config);
    j["composite"] = to_string(policy);
    Json frames = Json::array();
    for (const FrameReport& r : reports) frames.push_back(to_json(r));
    j["frames"] = std::move(frames);
    return j;
}

Json make_truth_sidecar(const SynthSpec& spec, const std::vector<SynthFrame>& frames) {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["spec"] = {{"width", spec.width},
                 {"height", spec.height},
                 {"seed", spec.seed},
                 {"frame_count", spec.frame_count},
                 {"gain", spec.gain},
                 {"offset", spec.offset},
                 {"ramp_amplitude", spec.ramp_amplitude}};
    Json steps = Json::array();
    Json chained = Json::array();
    for (std::size_t k = 0; k < frames.size(); ++k) {
        if (k + 1 < frames.size()) steps.push_back(to_json(spec.step_motion));
        chained.push_back(to_json(frames[k].chained_truth));
    }
    j["steps"] = std::move(steps);
    j["chained"] = std::move(chained);
    return j;
}

TruthSidecar parse_truth_sidecar(const Json& j) {
    TruthSidecar t;
    for (const Json& s : j.at("steps")) t.steps.push_back(affine_from_json(s));
    for (const Json& c : j.at("chained")) t.chained.push_back(affine_from_json(c));
    return t;
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, path.string() + ": cannot open for writing");
    out << j.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::io_error, path.string() + ": write failed");
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, path.string() + ": cannot open");
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::io_error, path.string() + ": invalid JSON");
    return j;
}

const char* to_string(CompositePolicy policy) {
    switch (policy) {
        case CompositePolicy::last_wins: return "last_wins";
        case CompositePolicy::first_wins: return "first_wins";
        case CompositePolicy::mean: return "mean";
    }
    return "unknown";
}

const char* to_string(Neighborhood n) {
    switch (n) {
        case Neighborhood::cross5: return "cross5";
        case Neighborhood::square9: return "square9";
    }
    return "unknown";
}

const char* to_string(LandmarkLayout layout) {
    switch (layout) {
        case LandmarkLayout::grid: return "grid";
        case LandmarkLayout::grid_jittered: return "grid_jittered";
    }
    return "unknown";
}

}  // namespace logmosaic
