#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "logmosaic/error.hpp"
#include "logmosaic/image_io.hpp"
#include "logmosaic/mosaic.hpp"
#include "logmosaic/report.hpp"
#include "logmosaic/synth.hpp"

namespace fs = std::filesystem;
using namespace logmosaic;

namespace {

const std::map<std::string, InitMode> kInitModes{
    {"zero", InitMode::zero}, {"previous", InitMode::previous}, {"kourogi", InitMode::kourogi}};
const std::map<std::string, CompositePolicy> kPolicies{{"last_wins", CompositePolicy::last_wins},
                                                       {"first_wins", CompositePolicy::first_wins},
                                                       {"mean", CompositePolicy::mean}};
const std::map<std::string, Neighborhood> kNeighborhoods{{"cross5", Neighborhood::cross5},
                                                         {"square9", Neighborhood::square9}};
const std::map<std::string, SynthTexture> kTextures{
    {"smoothed_noise", SynthTexture::smoothed_noise},
    {"checker_blurred", SynthTexture::checker_blurred},
    {"blob_field", SynthTexture::blob_field}};
const std::map<std::string, SynthMaskShape> kMaskShapes{{"full", SynthMaskShape::full},
                                                        {"circular", SynthMaskShape::circular}};
const std::map<std::string, RampAxis> kRampAxes{{"x", RampAxis::x}, {"y", RampAxis::y}};

void add_registration_flags(CLI::App* cmd, RegistrationConfig& config) {
    cmd->add_option("--landmarks", config.landmark_count, "Landmarks per frame pair")
        ->capture_default_str();
    cmd->add_option("--cmin", config.min_correlation, "Correlation floor for stage 1")
        ->capture_default_str();
    cmd->add_option("--amin", config.min_acceptance_rate,
                    "Fraction of landmarks each filter stage keeps at minimum")
        ->capture_default_str();
    cmd->add_option("--emax", config.max_residual, "Residual ceiling for stage 2 (px)")
        ->capture_default_str();
    cmd->add_option("--winit", config.search.w_init, "Initial search cross size (power of two)")
        ->capture_default_str();
    cmd->add_option("--template", config.template_spec.half_extent,
                    "Template half extent (side = 2h+1)")
        ->capture_default_str();
    cmd->add_option("--init", config.init_mode, "Motion initializer")
        ->transform(CLI::CheckedTransformer(kInitModes, CLI::ignore_case))
        ->default_str("kourogi");
    cmd->add_option("--neighborhood", config.search.neighborhood, "Search probe pattern")
        ->transform(CLI::CheckedTransformer(kNeighborhoods, CLI::ignore_case))
        ->default_str("cross5");
    cmd->add_option("--kourogi-iters", config.kourogi.max_iters,
                    "Initializer iteration cap")
        ->capture_default_str();
    cmd->add_option("--kourogi-T", config.kourogi.gray_threshold,
                    "Initializer gray-level acceptance threshold")
        ->capture_default_str();
    cmd->add_option("--seed", config.seed, "Landmark jitter seed")->capture_default_str();
    cmd->add_option("--threads", config.threads, "Search worker threads (0 = hardware)")
        ->capture_default_str();
}

void add_step_flags(CLI::App* cmd, AffineMotion& step) {
    cmd->add_option("--du", step.u0, "Step translation, x (px/frame)")->capture_default_str();
    cmd->add_option("--dv", step.v0, "Step translation, y (px/frame)")->capture_default_str();
    cmd->add_option("--ux", step.ux, "Step affine du/dx")->capture_default_str();
    cmd->add_option("--uy", step.uy, "Step affine du/dy")->capture_default_str();
    cmd->add_option("--vx", step.vx, "Step affine dv/dx")->capture_default_str();
    cmd->add_option("--vy", step.vy, "Step affine dv/dy")->capture_default_str();
}

std::vector<Frame> load_frames(const std::vector<std::string>& paths,
                               const std::string& mask_path) {
    if (paths.size() < 2) {
        throw Error(ErrorCode::bad_config, "need at least two frames");
    }
    std::optional<RegionMask> mask;
    if (!mask_path.empty()) mask = read_mask(mask_path);

    std::vector<Frame> frames;
    frames.reserve(paths.size());
    for (const std::string& p : paths) {
        Raster img = read_image(p);
        RegionMask m = mask ? *mask : RegionMask::full(img.width(), img.height());
        frames.push_back({std::move(img), std::move(m)});
    }
    return frames;
}

struct MosaicArgs {
    std::vector<std::string> frames;
    std::string manifest;
    std::string mask;
    std::string out = "mosaic.pgm";
    std::string report;
    CompositePolicy policy = CompositePolicy::last_wins;
    double min_ok_fraction = 1.0;
    RegistrationConfig config;
};

int run_mosaic(const MosaicArgs& args) {
    std::vector<std::string> paths = args.frames;
    std::string mask_path = args.mask;
    if (!args.manifest.empty()) {
        const Json manifest = read_json_file(args.manifest);
        const fs::path base = fs::path(args.manifest).parent_path();
        for (const Json& f : manifest.at("frames")) {
            paths.push_back((base / f.get<std::string>()).string());
        }
        if (manifest.contains("mask") && mask_path.empty()) {
            mask_path = (base / manifest.at("mask").get<std::string>()).string();
        }
    }

    const std::vector<Frame> frames = load_frames(paths, mask_path);
    const MosaicResult result = build_mosaic(frames, args.config, args.policy);

    write_image(result.canvas.to_raster(), args.out);
    if (!args.report.empty()) {
        write_json_file(make_run_report(args.config, args.policy, result.reports),
                        args.report);
    }

    int attempted = 0, ok = 0;
    for (const FrameReport& r : result.reports) {
        if (r.frame_index == 0) continue;
        ++attempted;
        if (r.status == FrameStatus::ok) {
            ++ok;
        } else {
            std::cerr << "frame " << r.frame_index << " " << to_string(r.status) << ": "
                      << r.message << "\n";
        }
    }
    std::cout << "mosaic " << result.canvas.width() << "x" << result.canvas.height()
              << " from " << frames.size() << " frames (" << ok << "/" << attempted
              << " registered) -> " << args.out << "\n";

    const double fraction = attempted == 0 ? 1.0 : double(ok) / attempted;
    if (fraction < args.min_ok_fraction) {
        std::cerr << "registered fraction " << fraction << " below required "
                  << args.min_ok_fraction << "\n";
        return 1;
    }
    return 0;
}

struct SynthArgs {
    std::string out_dir = "synth";
    SynthSpec spec;
};

int run_synth(const SynthArgs& args) {
    const std::vector<SynthFrame> frames = generate_sequence(args.spec);

    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    for (std::size_t k = 0; k < frames.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03zu.pgm", k);
        write_pgm(frames[k].image, dir / name);
    }
    write_mask(frames[0].mask, dir / "mask.pgm");
    write_json_file(make_truth_sidecar(args.spec, frames), dir / "truth.json");

    std::cout << "wrote " << frames.size() << " frames, mask.pgm and truth.json to "
              << args.out_dir << "\n";
    return 0;
}

struct BenchArgs {
    std::vector<std::string> frames;
    std::string mask;
    std::string truth;
    std::string csv;
    SynthSpec spec;
    RegistrationConfig config;
};

void csv_row(std::ostream& out, const char* method, std::size_t frame,
             std::optional<double> corner_err, double wall_ms, long long fits,
             int iterations, long long probes, long long shifts) {
    out << method << "," << frame << ",";
    if (corner_err) {
        if (std::isfinite(*corner_err)) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6g", *corner_err);
            out << buf;
        } else {
            out << "inf";
        }
    }
    char wall[32];
    std::snprintf(wall, sizeof(wall), "%.3f", wall_ms);
    out << "," << wall << "," << fits << "," << iterations << "," << probes << ","
        << shifts << "\n";
}

int run_bench(const BenchArgs& args) {
    std::vector<Frame> frames;
    std::vector<AffineMotion> step_truth;
    bool have_truth = false;

    if (args.frames.empty()) {
        std::vector<SynthFrame> synth = generate_sequence(args.spec);
        for (SynthFrame& f : synth) frames.push_back({std::move(f.image), std::move(f.mask)});
        step_truth.assign(frames.size() > 0 ? frames.size() - 1 : 0, args.spec.step_motion);
        have_truth = true;
    } else {
        frames = load_frames(args.frames, args.mask);
        if (!args.truth.empty()) {
            const TruthSidecar sidecar = parse_truth_sidecar(read_json_file(args.truth));
            if (sidecar.steps.size() + 1 != frames.size()) {
                throw Error(ErrorCode::bad_config,
                            "truth sidecar step count does not match the frame count");
            }
            step_truth = sidecar.steps;
            have_truth = true;
        }
    }

    std::ofstream csv_file;
    std::ostream* out = &std::cout;
    if (!args.csv.empty()) {
        csv_file.open(args.csv);
        if (!csv_file) throw Error(ErrorCode::io_error, args.csv + ": cannot open");
        out = &csv_file;
    }
    *out << "method,frame,corner_error_px,wall_ms,fits,iterations,probes,shifts\n";

    KourogiConfig kourogi_affine = args.config.kourogi;
    kourogi_affine.model = KourogiModel::full_affine;

    const int w = frames[0].image.width();
    const int h = frames[0].image.height();
    double landmark_ms = 0.0, kourogi_ms = 0.0;

    for (std::size_t k = 1; k < frames.size(); ++k) {
        const RegionMask pair_mask = frames[k - 1].mask.intersect(frames[k].mask);
        const std::optional<AffineMotion> truth =
            have_truth ? std::optional<AffineMotion>(step_truth[k - 1]) : std::nullopt;

        {
            std::optional<double> err;
            std::uint64_t fits0 = lsq_fit_invocations();
            const auto t0 = std::chrono::steady_clock::now();
            long long probes = 0, shifts = 0;
            int iters = 0;
            try {
                const RegistrationResult rr =
                    register_pair(frames[k - 1].image, frames[k].image, pair_mask, args.config);
                if (truth) err = corner_error(rr.motion, *truth, w, h);
                probes = rr.diagnostics.probes_total;
                shifts = rr.diagnostics.shifts_total;
                iters = rr.diagnostics.init_iterations;
            } catch (const Error&) {
                if (truth) err = std::numeric_limits<double>::infinity();
            }
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            landmark_ms += ms;
            csv_row(*out, "pmotion_log", k, err, ms,
                    (long long)(lsq_fit_invocations() - fits0), iters, probes, shifts);
        }
        {
            std::optional<double> err;
            std::uint64_t fits0 = lsq_fit_invocations();
            const auto t0 = std::chrono::steady_clock::now();
            int iters = 0;
            try {
                const KourogiResult kr = run_kourogi(frames[k - 1].image, frames[k].image,
                                                     pair_mask, kourogi_affine, {});
                if (truth) err = corner_error(kr.motion, *truth, w, h);
                iters = kr.iterations;
            } catch (const Error&) {
                if (truth) err = std::numeric_limits<double>::infinity();
            }
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            kourogi_ms += ms;
            csv_row(*out, "kourogi_affine", k, err, ms,
                    (long long)(lsq_fit_invocations() - fits0), iters, 0, 0);
        }
    }

    const double pairs = double(frames.size() - 1);
    if (pairs > 0) {
        std::fprintf(stderr, "pmotion_log: %.2f pairs/s\n", 1000.0 * pairs / landmark_ms);
        std::fprintf(stderr, "kourogi_affine: %.2f pairs/s\n", 1000.0 * pairs / kourogi_ms);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frame-to-frame registration and mosaicking"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "logmosaic 1.0.0");

    MosaicArgs mosaic_args;
    CLI::App* mosaic = app.add_subcommand("mosaic", "Register a sequence and composite it");
    mosaic->add_option("frames", mosaic_args.frames, "Frame images, in order")
        ->check(CLI::ExistingFile);
    mosaic->add_option("--manifest", mosaic_args.manifest,
                       "JSON manifest with a \"frames\" list (paths relative to it)")
        ->check(CLI::ExistingFile);
    mosaic->add_option("--mask", mosaic_args.mask, "Validity mask image (>0 = valid)")
        ->check(CLI::ExistingFile);
    mosaic->add_option("--out", mosaic_args.out, "Mosaic output image")
        ->capture_default_str();
    mosaic->add_option("--report", mosaic_args.report, "Per-frame JSON report path");
    mosaic->add_option("--composite", mosaic_args.policy, "Overlap policy")
        ->transform(CLI::CheckedTransformer(kPolicies, CLI::ignore_case))
        ->default_str("last_wins");
    mosaic->add_option("--min-ok-fraction", mosaic_args.min_ok_fraction,
                       "Registered fraction required for exit code 0")
        ->capture_default_str();
    add_registration_flags(mosaic, mosaic_args.config);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "Generate a ground-truth sequence");
    synth->add_option("--out-dir", synth_args.out_dir, "Output directory")
        ->capture_default_str();
    synth->add_option("--width", synth_args.spec.width)->capture_default_str();
    synth->add_option("--height", synth_args.spec.height)->capture_default_str();
    synth->add_option("--frames", synth_args.spec.frame_count, "Frame count")
        ->capture_default_str();
    synth->add_option("--texture", synth_args.spec.texture)
        ->transform(CLI::CheckedTransformer(kTextures, CLI::ignore_case))
        ->default_str("smoothed_noise");
    synth->add_option("--seed", synth_args.spec.seed)->capture_default_str();
    synth->add_option("--gain", synth_args.spec.gain, "Per-step gain")->capture_default_str();
    synth->add_option("--offset", synth_args.spec.offset, "Per-step offset")
        ->capture_default_str();
    synth->add_option("--ramp", synth_args.spec.ramp_amplitude,
                      "Per-step lighting ramp amplitude (fraction of the mean)")
        ->capture_default_str();
    synth->add_option("--ramp-axis", synth_args.spec.ramp_axis)
        ->transform(CLI::CheckedTransformer(kRampAxes, CLI::ignore_case))
        ->default_str("x");
    synth->add_option("--mask", synth_args.spec.mask_shape, "Mask shape")
        ->transform(CLI::CheckedTransformer(kMaskShapes, CLI::ignore_case))
        ->default_str("full");
    add_step_flags(synth, synth_args.spec.step_motion);

    BenchArgs bench_args;
    CLI::App* bench = app.add_subcommand(
        "bench", "Compare the landmark pipeline against the dense initializer");
    bench->add_option("frames", bench_args.frames,
                      "Frame images; omitted = benchmark on generated frames")
        ->check(CLI::ExistingFile);
    bench->add_option("--mask", bench_args.mask, "Validity mask image")
        ->check(CLI::ExistingFile);
    bench->add_option("--truth", bench_args.truth, "Truth sidecar JSON for given frames")
        ->check(CLI::ExistingFile);
    bench->add_option("--csv", bench_args.csv, "CSV output path (default stdout)");
    bench->add_option("--width", bench_args.spec.width)->capture_default_str();
    bench->add_option("--height", bench_args.spec.height)->capture_default_str();
    bench->add_option("--frames-count", bench_args.spec.frame_count,
                      "Generated frame count")
        ->capture_default_str();
    bench->add_option("--texture", bench_args.spec.texture)
        ->transform(CLI::CheckedTransformer(kTextures, CLI::ignore_case))
        ->default_str("smoothed_noise");
    bench->add_option("--gen-seed", bench_args.spec.seed, "Generator seed")
        ->capture_default_str();
    bench->add_option("--gain", bench_args.spec.gain)->capture_default_str();
    bench->add_option("--offset", bench_args.spec.offset)->capture_default_str();
    bench->add_option("--ramp", bench_args.spec.ramp_amplitude)->capture_default_str();
    add_step_flags(bench, bench_args.spec.step_motion);
    add_registration_flags(bench, bench_args.config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (mosaic->parsed()) return run_mosaic(mosaic_args);
        if (synth->parsed()) return run_synth(synth_args);
        if (bench->parsed()) return run_bench(bench_args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
