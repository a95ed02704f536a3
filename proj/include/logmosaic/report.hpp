#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "logmosaic/mosaic.hpp"
#include "logmosaic/registration.hpp"
#include "logmosaic/synth.hpp"

namespace logmosaic {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

Json to_json(const AffineMotion& motion);
AffineMotion affine_from_json(const Json& j);

Json to_json(const MatchRecord& record);
Json to_json(const FrameReport& report);
Json to_json(const RegistrationConfig& config);

// Full run report: schema version, a config echo sufficient to reproduce the
// run bit-identically, and one entry per frame. Stable key order.
Json make_run_report(const RegistrationConfig& config, CompositePolicy policy,
                     const std::vector<FrameReport>& reports);

// Ground-truth sidecar for generated sequences: the spec echo plus per-step
// and chained truth motions.
Json make_truth_sidecar(const SynthSpec& spec,
                        const std::vector<SynthFrame>& frames);

struct TruthSidecar {
    std::vector<AffineMotion> steps;    // steps[k]: frame k -> frame k+1
    std::vector<AffineMotion> chained;  // chained[k]: frame 0 -> frame k
};

TruthSidecar parse_truth_sidecar(const Json& j);

void write_json_file(const Json& j, const std::filesystem::path& path);
Json read_json_file(const std::filesystem::path& path);

const char* to_string(CompositePolicy policy);
const char* to_string(Neighborhood n);
const char* to_string(LandmarkLayout layout);

}  // namespace logmosaic
