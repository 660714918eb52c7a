#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "efs/container_io.hpp"
#include "efs/generator.hpp"
#include "efs/lightfield.hpp"
#include "efs/metrics.hpp"
#include "efs/reconstruct.hpp"
#include "efs/sampling.hpp"

namespace efs {

// A complete, reproducible experiment: scene (or input path), downsampling,
// reconstruction configuration and backend. Identical specs yield
// byte-identical reports.
struct ExperimentSpec {
    // scene
    std::vector<double> layer_depths{8.0};
    std::vector<std::string> layer_masks;  // "full", "half:<edge>:<feather>", per layer
    double texture_cutoff = 0.25;
    double s_factor = 1.0;
    int n_views = 0;       // dense view count generated as ground truth
    int height = 64;
    int width = 256;
    double focal_length = 1.0;
    double baseline_step = 1.0;
    uint64_t seed = 1;
    std::string input_path;  // when set, load instead of generating

    int downsample = 1;

    // reconstruction
    double d_min = -1.0, d_max = 1.0;
    int n_f = 64;
    int u_ref = 0;            // source (post-downsample) index
    int n_target = 0;         // defaults to the dense count
    std::string backend = "oracle";
    std::vector<int> refs;    // multi-reference when >1 entries
    std::string external_dir;
    bool passthrough = false;
    bool include_invalid = false;
    bool dump_efs = false;

    std::string output_dir = "out";

    json to_json() const {
        json j;
        j["schema_version"] = 1;
        j["scene"] = {{"layer_depths", layer_depths}, {"layer_masks", layer_masks},
                      {"texture_cutoff", texture_cutoff}, {"s_factor", s_factor},
                      {"n_views", n_views},  {"height", height},
                      {"width", width},      {"focal_length", focal_length},
                      {"baseline_step", baseline_step}, {"seed", seed},
                      {"input_path", input_path}};
        j["downsample"] = downsample;
        j["recon"] = {{"d_min", d_min}, {"d_max", d_max}, {"n_f", n_f},     {"u_ref", u_ref},
                      {"n_target", n_target}, {"backend", backend}, {"refs", refs},
                      {"external_dir", external_dir}, {"passthrough", passthrough},
                      {"include_invalid", include_invalid}, {"dump_efs", dump_efs}};
        j["output_dir"] = output_dir;
        return j;
    }

    static ExperimentSpec from_json(const json& j) {
        ExperimentSpec s;
        if (j.value("schema_version", 1) != 1) throw std::runtime_error("ExperimentSpec: unsupported schema_version");
        const json& sc = j.at("scene");
        s.layer_depths = sc.value("layer_depths", s.layer_depths);
        s.layer_masks = sc.value("layer_masks", s.layer_masks);
        s.texture_cutoff = sc.value("texture_cutoff", s.texture_cutoff);
        s.s_factor = sc.value("s_factor", s.s_factor);
        s.n_views = sc.value("n_views", s.n_views);
        s.height = sc.value("height", s.height);
        s.width = sc.value("width", s.width);
        s.focal_length = sc.value("focal_length", s.focal_length);
        s.baseline_step = sc.value("baseline_step", s.baseline_step);
        s.seed = sc.value("seed", s.seed);
        s.input_path = sc.value("input_path", s.input_path);
        s.downsample = j.value("downsample", 1);
        const json& rc = j.at("recon");
        s.d_min = rc.value("d_min", s.d_min);
        s.d_max = rc.value("d_max", s.d_max);
        s.n_f = rc.value("n_f", s.n_f);
        s.u_ref = rc.value("u_ref", s.u_ref);
        s.n_target = rc.value("n_target", s.n_target);
        s.backend = rc.value("backend", s.backend);
        s.refs = rc.value("refs", s.refs);
        s.external_dir = rc.value("external_dir", s.external_dir);
        s.passthrough = rc.value("passthrough", s.passthrough);
        s.include_invalid = rc.value("include_invalid", s.include_invalid);
        s.dump_efs = rc.value("dump_efs", s.dump_efs);
        s.output_dir = j.value("output_dir", s.output_dir);
        return s;
    }
};

inline OpacityMask parse_mask_descriptor(const std::string& desc) {
    OpacityMask m;
    if (desc.empty() || desc == "full") return m;
    std::stringstream ss(desc);
    std::string kind;
    std::getline(ss, kind, ':');
    auto next_num = [&](double dflt) {
        std::string tok;
        if (!std::getline(ss, tok, ':') || tok.empty()) return dflt;
        return std::stod(tok);
    };
    if (kind == "half") {
        m.kind = OpacityMask::Kind::HalfPlane;
        m.edge = next_num(0.55);
        m.feather = next_num(0.0);
    } else if (kind == "stripes") {
        m.kind = OpacityMask::Kind::Stripes;
        m.period = next_num(32.0);
        m.duty = next_num(0.5);
        m.feather = next_num(0.0);
    } else if (kind == "disk") {
        m.kind = OpacityMask::Kind::Disk;
        m.cx = next_num(0.5);
        m.cy = next_num(0.5);
        m.radius = next_num(0.25);
        m.feather = next_num(0.0);
    } else {
        throw std::invalid_argument("unknown opacity mask descriptor: " + desc);
    }
    return m;
}

inline SceneGeometry scene_from_spec(const ExperimentSpec& spec) {
    SceneGeometry g = SceneGeometry::from_depths(spec.layer_depths, spec.seed);
    g.texture_cutoff = spec.texture_cutoff;
    g.s_factor = spec.s_factor;
    for (size_t i = 0; i < g.layers.size() && i < spec.layer_masks.size(); ++i)
        g.layers[i].opacity = parse_mask_descriptor(spec.layer_masks[i]);
    return g;
}

struct ExperimentReport {
    json metrics;
    LightField reconstructed;
    std::vector<Image> validity;
};

// Generate/load -> downsample -> reconstruct -> evaluate -> write reports.
inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
    fs::path out_dir(spec.output_dir);
    fs::create_directories(out_dir);

    // stage: source field (+ ground truth when generated)
    LightField dense;
    bool have_gt = false;
    std::string stage = "generate";
    try {
        if (!spec.input_path.empty()) {
            stage = "load";
            dense = load_lightfield(spec.input_path);
        } else {
            if (spec.n_views < 2) throw std::invalid_argument("spec.n_views must be >= 2");
            SceneGeometry geom = scene_from_spec(spec);
            dense = synth_lightfield(geom, spec.n_views, spec.height, spec.width, spec.seed, spec.focal_length,
                                     spec.baseline_step)
                        .field;
            have_gt = true;
        }
        stage = "downsample";
        LightField source = spec.downsample > 1 ? downsample_views(dense, spec.downsample) : dense;

        stage = "reconstruct";
        ReconstructionConfig cfg(spec.d_min, spec.d_max, spec.n_f, spec.u_ref,
                                 spec.n_target > 0 ? spec.n_target : dense.n_u);
        PipelineOptions opts;
        opts.passthrough_sources = spec.passthrough;
        std::shared_ptr<CompletionBackend> backend;
        if (spec.backend == "oracle") {
            if (!have_gt) throw std::invalid_argument("oracle backend needs a generated scene");
            if (dense.n_u != cfg.n_target) throw std::invalid_argument("oracle backend: n_target must equal n_views");
            backend = std::make_shared<OracleBackend>(dense);
        } else if (spec.backend == "classical") {
            backend = std::make_shared<ClassicalBackend>();
        } else if (spec.backend == "external") {
            backend = std::make_shared<ExternalBackend>(spec.external_dir);
        } else {
            throw std::invalid_argument("unknown backend: " + spec.backend);
        }

        ReconstructionResult rec;
        if (spec.refs.size() > 1)
            rec = multi_reference_reconstruct(source, cfg, spec.refs, *backend, opts);
        else
            rec = reconstruct_lightfield(source, cfg, *backend, opts);

        stage = "evaluate";
        json metrics;
        metrics["schema_version"] = 1;
        metrics["backend"] = spec.backend;
        metrics["n_source_views"] = source.n_u;
        metrics["n_target_views"] = cfg.n_target;
        metrics["efs_symmetry"] = rec.max_symmetry_ratio;
        metrics["imag_residue"] = rec.max_imag_residue;

        // wedge loss measured on the central ground-truth EPI when available
        if (have_gt && dense.n_u == cfg.n_target) {
            Epi gt_epi = extract_epi(dense, dense.height / 2, 0, 0);
            ComplexGrid gt_spec = fft2(gt_epi.data);
            WedgeMask wm(cfg, source.n_u, gt_epi.width());
            metrics["wedge_loss"] = wm.exterior_energy_fraction(gt_spec);
        }

        json per_view = json::array();
        double mean_psnr = 0, mean_ssim = 0;
        int counted = 0;
        std::ofstream csv(out_dir / "per_view.csv");
        csv << "view,psnr,ssim\n";
        if (have_gt && dense.n_u == cfg.n_target) {
            for (int i = 0; i < cfg.n_target; ++i) {
                const Image* mask = spec.include_invalid ? nullptr : &rec.validity[i];
                double p = psnr(rec.field.view(i), dense.view(i), mask);
                double s = ssim(rec.field.view(i), dense.view(i), mask);
                per_view.push_back({{"u", i}, {"psnr", p}, {"ssim", s}});
                csv << i << "," << p << "," << s << "\n";
                mean_psnr += p;
                mean_ssim += s;
                ++counted;
            }
            metrics["per_view"] = per_view;
            metrics["mean_psnr"] = mean_psnr / counted;
            metrics["mean_ssim"] = mean_ssim / counted;
        }

        stage = "write";
        save_lightfield(rec.field, out_dir / "reconstructed");
        fs::create_directories(out_dir / "validity");
        for (int i = 0; i < cfg.n_target; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "validity_%04d.f32", i);
            save_float_raster(rec.validity[i], out_dir / "validity" / buf);
        }
        {
            std::ofstream mj(out_dir / "metrics.json");
            mj << metrics.dump(2) << "\n";
            std::ofstream sj(out_dir / "spec.json");
            sj << spec.to_json().dump(2) << "\n";
        }
        png_io::write_gray((out_dir / "preview_center.png").string(), rec.field.view(cfg.n_target / 2), 8);

        ExperimentReport rep;
        rep.metrics = std::move(metrics);
        rep.reconstructed = std::move(rec.field);
        rep.validity = std::move(rec.validity);
        return rep;
    } catch (const std::exception& e) {
        throw std::runtime_error("experiment stage '" + stage + "' failed: " + e.what());
    }
}

// Minimal structural check used by the test suite and `run` subcommand.
inline void validate_metrics_schema(const json& m) {
    if (m.value("schema_version", 0) != 1) throw std::runtime_error("metrics: bad schema_version");
    for (const char* key : {"backend", "efs_symmetry", "imag_residue"})
        if (!m.contains(key)) throw std::runtime_error(std::string("metrics: missing key ") + key);
    if (m.contains("per_view")) {
        if (!m["per_view"].is_array()) throw std::runtime_error("metrics: per_view must be an array");
        for (const auto& e : m["per_view"])
            for (const char* key : {"u", "psnr", "ssim"})
                if (!e.contains(key)) throw std::runtime_error(std::string("metrics: per_view entry missing ") + key);
        for (const char* key : {"mean_psnr", "mean_ssim"})
            if (!m.contains(key)) throw std::runtime_error(std::string("metrics: missing key ") + key);
    }
}

}  // namespace efs
