#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "logmosaic/error.hpp"
#include "logmosaic/mosaic.hpp"
#include "logmosaic/registration.hpp"
#include "logmosaic/synth.hpp"

namespace py = pybind11;
using namespace logmosaic;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Raster raster_from_array(const DoubleArray& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2D array (h, w)");
    const int h = int(arr.shape(0));
    const int w = int(arr.shape(1));
    std::vector<double> data(arr.data(), arr.data() + std::size_t(w) * h);
    return Raster(w, h, std::move(data));
}

py::array_t<double> array_from_raster(const Raster& img) {
    py::array_t<double> out({img.height(), img.width()});
    double* dst = out.mutable_data();
    for (int y = 0; y < img.height(); ++y) {
        const double* row = img.row(y);
        for (int x = 0; x < img.width(); ++x) dst[std::size_t(y) * img.width() + x] = row[x];
    }
    return out;
}

RegionMask mask_from_obj(const py::object& obj, int width, int height) {
    if (obj.is_none()) return RegionMask::full(width, height);
    const ByteArray arr = obj.cast<ByteArray>();
    if (arr.ndim() != 2 || int(arr.shape(0)) != height || int(arr.shape(1)) != width) {
        throw std::invalid_argument("mask shape must match the image");
    }
    std::vector<std::uint8_t> valid(arr.data(), arr.data() + std::size_t(width) * height);
    return RegionMask(width, height, std::move(valid));
}

py::array_t<std::uint8_t> array_from_mask(const RegionMask& mask) {
    py::array_t<std::uint8_t> out({mask.height(), mask.width()});
    std::uint8_t* dst = out.mutable_data();
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            dst[std::size_t(y) * mask.width() + x] = mask.valid(x, y) ? 1 : 0;
        }
    }
    return out;
}

py::dict motion_to_dict(const AffineMotion& m) {
    py::dict d;
    d["ux"] = m.ux;
    d["uy"] = m.uy;
    d["u0"] = m.u0;
    d["vx"] = m.vx;
    d["vy"] = m.vy;
    d["v0"] = m.v0;
    return d;
}

AffineMotion motion_from_obj(const py::object& obj) {
    if (obj.is_none()) return {};
    const py::dict d = obj.cast<py::dict>();
    AffineMotion m;
    if (d.contains("ux")) m.ux = d["ux"].cast<double>();
    if (d.contains("uy")) m.uy = d["uy"].cast<double>();
    if (d.contains("u0")) m.u0 = d["u0"].cast<double>();
    if (d.contains("vx")) m.vx = d["vx"].cast<double>();
    if (d.contains("vy")) m.vy = d["vy"].cast<double>();
    if (d.contains("v0")) m.v0 = d["v0"].cast<double>();
    return m;
}

Neighborhood neighborhood_from(const std::string& name) {
    if (name == "cross5") return Neighborhood::cross5;
    if (name == "square9") return Neighborhood::square9;
    throw std::invalid_argument("neighborhood must be 'cross5' or 'square9'");
}

InitMode init_from(const std::string& name) {
    if (name == "zero") return InitMode::zero;
    if (name == "previous") return InitMode::previous;
    if (name == "kourogi") return InitMode::kourogi;
    throw std::invalid_argument("init must be 'zero', 'previous' or 'kourogi'");
}

CompositePolicy policy_from(const std::string& name) {
    if (name == "last_wins") return CompositePolicy::last_wins;
    if (name == "first_wins") return CompositePolicy::first_wins;
    if (name == "mean") return CompositePolicy::mean;
    throw std::invalid_argument("policy must be 'last_wins', 'first_wins' or 'mean'");
}

SynthTexture texture_from(const std::string& name) {
    if (name == "smoothed_noise") return SynthTexture::smoothed_noise;
    if (name == "checker_blurred") return SynthTexture::checker_blurred;
    if (name == "blob_field") return SynthTexture::blob_field;
    throw std::invalid_argument("unknown texture");
}

RegistrationConfig config_from_kwargs(int landmarks, double cmin, double amin, double emax,
                                      const std::string& init, int half_extent, int w_init,
                                      const std::string& neighborhood, std::uint64_t seed,
                                      double kourogi_T, int kourogi_iters, int threads) {
    RegistrationConfig config;
    config.landmark_count = landmarks;
    config.min_correlation = cmin;
    config.min_acceptance_rate = amin;
    config.max_residual = emax;
    config.init_mode = init_from(init);
    config.template_spec.half_extent = half_extent;
    config.search.w_init = w_init;
    config.search.neighborhood = neighborhood_from(neighborhood);
    config.seed = seed;
    config.kourogi.gray_threshold = kourogi_T;
    config.kourogi.max_iters = kourogi_iters;
    config.threads = threads;
    return config;
}

py::dict match_to_dict(const MatchRecord& r) {
    py::dict d;
    d["landmark"] = py::make_tuple(r.landmark.x, r.landmark.y);
    d["u"] = r.u;
    d["v"] = r.v;
    d["score"] = r.score;
    d["residual"] = r.has_residual ? py::object(py::float_(r.residual)) : py::none();
    d["searched"] = r.searched;
    d["stage1_pass"] = r.stage1_pass;
    d["stage2_pass"] = r.stage2_pass;
    d["probes"] = r.probes;
    d["shifts"] = r.shifts;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Frame-to-frame registration and mosaicking core";
    m.attr("__version__") = "1.0.0";

    py::register_exception<Error>(m, "RegistrationError");

    m.def(
        "ncc",
        [](const DoubleArray& a, const DoubleArray& b) -> py::object {
            std::vector<double> va(a.data(), a.data() + a.size());
            std::vector<double> vb(b.data(), b.data() + b.size());
            const std::optional<double> r = ncc(va, vb);
            if (!r) return py::none();
            return py::float_(*r);
        },
        py::arg("a"), py::arg("b"),
        "Normalized cross-correlation of two flat patches; None when undefined.");

    m.def(
        "erode_mask",
        [](const ByteArray& mask, int half_extent) {
            const int h = int(mask.shape(0));
            const int w = int(mask.shape(1));
            std::vector<std::uint8_t> valid(mask.data(), mask.data() + std::size_t(w) * h);
            const ValidityMap eroded =
                erode_for_template(RegionMask(w, h, std::move(valid)), half_extent);
            py::array_t<std::uint8_t> out({h, w});
            std::uint8_t* dst = out.mutable_data();
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    dst[std::size_t(y) * w + x] = eroded.valid(x, y) ? 1 : 0;
                }
            }
            return out;
        },
        py::arg("mask"), py::arg("half_extent"),
        "Positions whose full template footprint is valid and in bounds.");

    m.def(
        "log_search",
        [](const DoubleArray& reference, const DoubleArray& object, std::pair<int, int> landmark,
           std::pair<double, double> start, int half_extent, int w_init,
           const std::string& neighborhood, int max_probes, const py::object& mask) {
            const Raster ref = raster_from_array(reference);
            const Raster obj = raster_from_array(object);
            const RegionMask m = mask_from_obj(mask, obj.width(), obj.height());
            TemplateSpec spec{half_extent};
            SearchConfig config;
            config.w_init = w_init;
            config.neighborhood = neighborhood_from(neighborhood);
            config.max_probes = max_probes;
            const ValidityMap valid = erode_for_template(m, half_extent);
            const MatchResult r =
                log_search(ref, obj, {landmark.first, landmark.second},
                           {start.first, start.second}, spec, config, valid);
            py::dict d;
            d["u"] = r.u;
            d["v"] = r.v;
            d["score"] = r.score;
            d["probes"] = r.probes;
            d["shifts"] = r.shifts;
            return d;
        },
        py::arg("reference"), py::arg("object"), py::arg("landmark"),
        py::arg("start") = std::pair<double, double>(0.0, 0.0), py::arg("half_extent") = 7,
        py::arg("w_init") = 16, py::arg("neighborhood") = "cross5",
        py::arg("max_probes") = 1024, py::arg("mask") = py::none(),
        "Logarithmic template search; returns the matched center position.");

    m.def(
        "exhaustive_match",
        [](const DoubleArray& reference, const DoubleArray& object, std::pair<int, int> landmark,
           std::pair<double, double> start, int half_extent, int window_radius,
           const py::object& mask) {
            const Raster ref = raster_from_array(reference);
            const Raster obj = raster_from_array(object);
            const RegionMask m = mask_from_obj(mask, obj.width(), obj.height());
            const ValidityMap valid = erode_for_template(m, half_extent);
            const MatchResult r =
                exhaustive_match(ref, obj, {landmark.first, landmark.second},
                                 {start.first, start.second}, TemplateSpec{half_extent},
                                 window_radius, valid);
            py::dict d;
            d["u"] = r.u;
            d["v"] = r.v;
            d["score"] = r.score;
            d["probes"] = r.probes;
            return d;
        },
        py::arg("reference"), py::arg("object"), py::arg("landmark"),
        py::arg("start") = std::pair<double, double>(0.0, 0.0), py::arg("half_extent") = 7,
        py::arg("window_radius") = 20, py::arg("mask") = py::none(),
        "Brute-force argmax over the search window (oracle for log_search).");

    m.def(
        "run_kourogi",
        [](const DoubleArray& prev, const DoubleArray& curr, const py::object& mask,
           double gray_threshold, int max_iters, double min_delta, const std::string& model,
           double min_accept_fraction, const py::object& initial) {
            const Raster a = raster_from_array(prev);
            const Raster b = raster_from_array(curr);
            const RegionMask m = mask_from_obj(mask, a.width(), a.height());
            KourogiConfig config;
            config.gray_threshold = gray_threshold;
            config.max_iters = max_iters;
            config.min_delta = min_delta;
            config.model = model == "full_affine" ? KourogiModel::full_affine
                                                  : KourogiModel::translation_only;
            config.min_accept_fraction = min_accept_fraction;
            const KourogiResult r = run_kourogi(a, b, m, config, motion_from_obj(initial));
            py::dict d;
            d["motion"] = motion_to_dict(r.motion);
            d["iterations"] = r.iterations;
            d["candidates"] = r.candidates;
            d["converged"] = r.converged;
            d["accepted_per_iter"] = r.accepted_per_iter;
            return d;
        },
        py::arg("prev"), py::arg("curr"), py::arg("mask") = py::none(),
        py::arg("gray_threshold") = 5.0, py::arg("max_iters") = 10,
        py::arg("min_delta") = 0.1, py::arg("model") = "translation_only",
        py::arg("min_accept_fraction") = 0.2, py::arg("initial") = py::none(),
        "Iterative pseudo-motion estimation over the masked frame pair.");

    m.def(
        "register_pair",
        [](const DoubleArray& reference, const DoubleArray& object, const py::object& mask,
           int landmarks, double cmin, double amin, double emax, const std::string& init,
           int half_extent, int w_init, const std::string& neighborhood, std::uint64_t seed,
           double kourogi_T, int kourogi_iters, int threads) {
            const Raster ref = raster_from_array(reference);
            const Raster obj = raster_from_array(object);
            const RegionMask m = mask_from_obj(mask, ref.width(), ref.height());
            const RegistrationConfig config =
                config_from_kwargs(landmarks, cmin, amin, emax, init, half_extent, w_init,
                                   neighborhood, seed, kourogi_T, kourogi_iters, threads);
            const RegistrationResult r = register_pair(ref, obj, m, config);
            py::dict d;
            d["motion"] = motion_to_dict(r.motion);
            d["init_motion"] = motion_to_dict(r.init_motion);
            py::list matches;
            for (const MatchRecord& rec : r.matches) matches.append(match_to_dict(rec));
            d["matches"] = matches;
            py::dict diag;
            diag["landmarks_placed"] = r.diagnostics.landmarks_placed;
            diag["landmarks_dropped"] = r.diagnostics.landmarks_dropped;
            diag["searches_failed"] = r.diagnostics.searches_failed;
            diag["stage1_survivors"] = r.diagnostics.stage1_survivors;
            diag["stage2_survivors"] = r.diagnostics.stage2_survivors;
            diag["probes_total"] = r.diagnostics.probes_total;
            diag["shifts_total"] = r.diagnostics.shifts_total;
            diag["lsq_fits"] = r.diagnostics.lsq_fits;
            diag["init_fallback"] = r.diagnostics.init_fallback;
            diag["init_iterations"] = r.diagnostics.init_iterations;
            d["diagnostics"] = diag;
            return d;
        },
        py::arg("reference"), py::arg("object"), py::arg("mask") = py::none(),
        py::arg("landmarks") = 16, py::arg("cmin") = 0.7, py::arg("amin") = 0.5,
        py::arg("emax") = 2.0, py::arg("init") = "kourogi", py::arg("half_extent") = 7,
        py::arg("w_init") = 16, py::arg("neighborhood") = "cross5", py::arg("seed") = 1,
        py::arg("kourogi_T") = 5.0, py::arg("kourogi_iters") = 10, py::arg("threads") = 1,
        "Landmark registration with the two-stage match filter.");

    m.def(
        "generate_sequence",
        [](int width, int height, const std::string& texture, std::uint64_t seed,
           const py::object& step, double gain, double offset, double ramp_amplitude,
           int frame_count, const std::string& mask_shape) {
            SynthSpec spec;
            spec.width = width;
            spec.height = height;
            spec.texture = texture_from(texture);
            spec.seed = seed;
            spec.step_motion = motion_from_obj(step);
            spec.gain = gain;
            spec.offset = offset;
            spec.ramp_amplitude = ramp_amplitude;
            spec.frame_count = frame_count;
            spec.mask_shape =
                mask_shape == "circular" ? SynthMaskShape::circular : SynthMaskShape::full;
            const std::vector<SynthFrame> frames = generate_sequence(spec);
            py::list out;
            for (const SynthFrame& f : frames) {
                py::dict d;
                d["image"] = array_from_raster(f.image);
                d["mask"] = array_from_mask(f.mask);
                d["chained_truth"] = motion_to_dict(f.chained_truth);
                out.append(d);
            }
            return out;
        },
        py::arg("width") = 192, py::arg("height") = 192,
        py::arg("texture") = "smoothed_noise", py::arg("seed") = 1,
        py::arg("step") = py::none(), py::arg("gain") = 1.0, py::arg("offset") = 0.0,
        py::arg("ramp_amplitude") = 0.0, py::arg("frame_count") = 2,
        py::arg("mask_shape") = "full",
        "Ground-truth synthetic sequence (resample + relight per step).");

    m.def(
        "build_mosaic",
        [](const py::list& images, const py::object& masks, int landmarks, double cmin,
           double amin, double emax, const std::string& init, int half_extent, int w_init,
           const std::string& neighborhood, std::uint64_t seed, double kourogi_T,
           int kourogi_iters, int threads, const std::string& policy) {
            std::vector<Frame> frames;
            py::list mask_list;
            const bool have_masks = !masks.is_none();
            if (have_masks) mask_list = masks.cast<py::list>();
            for (std::size_t i = 0; i < images.size(); ++i) {
                Raster img = raster_from_array(images[i].cast<DoubleArray>());
                RegionMask m = have_masks
                                   ? mask_from_obj(mask_list[i], img.width(), img.height())
                                   : RegionMask::full(img.width(), img.height());
                frames.push_back({std::move(img), std::move(m)});
            }
            const RegistrationConfig config =
                config_from_kwargs(landmarks, cmin, amin, emax, init, half_extent, w_init,
                                   neighborhood, seed, kourogi_T, kourogi_iters, threads);
            const MosaicResult r = build_mosaic(frames, config, policy_from(policy));
            py::dict d;
            d["mosaic"] = array_from_raster(r.canvas.to_raster());
            d["coverage"] = array_from_mask(r.canvas.coverage());
            d["origin"] = py::make_tuple(r.canvas.origin().x, r.canvas.origin().y);
            py::list reports;
            for (const FrameReport& fr : r.reports) {
                py::dict rep;
                rep["frame"] = fr.frame_index;
                rep["status"] = to_string(fr.status);
                rep["step_motion"] = motion_to_dict(fr.step_motion);
                rep["chained_motion"] = motion_to_dict(fr.chained_motion);
                rep["stage2_survivors"] = fr.stage2_survivors;
                reports.append(rep);
            }
            d["reports"] = reports;
            return d;
        },
        py::arg("images"), py::arg("masks") = py::none(), py::arg("landmarks") = 16,
        py::arg("cmin") = 0.7, py::arg("amin") = 0.5, py::arg("emax") = 2.0,
        py::arg("init") = "kourogi", py::arg("half_extent") = 7, py::arg("w_init") = 16,
        py::arg("neighborhood") = "cross5", py::arg("seed") = 1, py::arg("kourogi_T") = 5.0,
        py::arg("kourogi_iters") = 10, py::arg("threads") = 1,
        py::arg("policy") = "last_wins",
        "Register consecutive frames and composite them on a growing canvas.");

    m.def(
        "corner_error",
        [](const py::object& estimated, const py::object& truth, int width, int height) {
            return corner_error(motion_from_obj(estimated), motion_from_obj(truth), width,
                                height);
        },
        py::arg("estimated"), py::arg("truth"), py::arg("width"), py::arg("height"),
        "Max corner displacement difference between two motions (px).");

    m.def(
        "compose",
        [](const py::object& first, const py::object& second) {
            return motion_to_dict(compose(motion_from_obj(first), motion_from_obj(second)));
        },
        py::arg("first"), py::arg("second"), "Motion composition: second applied after first.");

    m.def(
        "invert",
        [](const py::object& motion) {
            return motion_to_dict(invert(motion_from_obj(motion)));
        },
        py::arg("motion"), "Inverse motion.");
}
