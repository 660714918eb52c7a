// Command-line front end for the EFS light-field toolkit.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "efs/efs.hpp"

using namespace efs;
namespace fsys = std::filesystem;

namespace {

SceneGeometry geometry_from(const std::vector<double>& depths, const std::vector<std::string>& masks,
                            double cutoff, double s_factor, uint64_t seed) {
    SceneGeometry g = SceneGeometry::from_depths(depths, seed);
    g.texture_cutoff = cutoff;
    g.s_factor = s_factor;
    for (size_t i = 0; i < masks.size() && i < g.layers.size(); ++i) g.layers[i].opacity = parse_mask_descriptor(masks[i]);
    return g;
}

std::shared_ptr<CompletionBackend> make_backend(const std::string& name, const std::string& external_dir,
                                                const std::string& oracle_dir) {
    if (name == "classical") return std::make_shared<ClassicalBackend>();
    if (name == "external") {
        if (external_dir.empty()) throw CLI::ValidationError("--external-dir is required for the external backend");
        return std::make_shared<ExternalBackend>(external_dir);
    }
    if (name == "oracle") {
        if (oracle_dir.empty()) throw CLI::ValidationError("--oracle-field is required for the oracle backend");
        return std::make_shared<OracleBackend>(load_lightfield(oracle_dir));
    }
    throw CLI::ValidationError("unknown backend: " + name);
}

void write_json(const fsys::path& p, const json& j) {
    std::ofstream out(p);
    out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Epipolar focus spectrum toolkit"};
    app.require_subcommand(1);

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "Generate a synthetic layered light field");
    std::vector<double> g_depths{8.0};
    std::vector<std::string> g_masks;
    int g_views = 64, g_h = 64, g_w = 128;
    double g_k = 1.0, g_b = 1.0, g_cutoff = 0.25, g_sfactor = 1.0;
    uint64_t g_seed = 1;
    std::string g_out = "field";
    bool g_disparity = false;
    gen->add_option("--depths", g_depths, "layer depths, far to near order not required");
    gen->add_option("--masks", g_masks, "per-layer opacity: full|half:e:f|stripes:p:d:f|disk:x:y:r:f");
    gen->add_option("--views", g_views, "view count");
    gen->add_option("--height", g_h);
    gen->add_option("--width", g_w);
    gen->add_option("--focal", g_k, "focal length k");
    gen->add_option("--baseline", g_b, "baseline step B");
    gen->add_option("--cutoff", g_cutoff, "texture low-pass, fraction of Nyquist");
    gen->add_option("--s-factor", g_sfactor, "scene distribution factor");
    gen->add_option("--seed", g_seed);
    gen->add_option("-o,--out", g_out, "output container directory");
    gen->add_flag("--disparity-maps", g_disparity, "also write per-view float32 disparity maps");

    // ---- downsample ----
    auto* ds = app.add_subcommand("downsample", "Keep every k-th view of a container");
    std::string ds_in, ds_out = "sparse";
    int ds_factor = 10;
    bool ds_keep_last = false;
    ds->add_option("input", ds_in)->required();
    ds->add_option("-o,--out", ds_out);
    ds->add_option("--factor", ds_factor)->required();
    ds->add_flag("--force-keep-last", ds_keep_last);

    // ---- refocus ----
    auto* rf = app.add_subcommand("refocus", "Build a focal stack from one EPI row");
    std::string rf_in, rf_out = "stack";
    int rf_row = -1, rf_v = 0, rf_uref = -1, rf_nf = 64;
    double rf_dmin = -1, rf_dmax = 1;
    bool rf_previews = false;
    rf->add_option("input", rf_in)->required();
    rf->add_option("--row", rf_row, "EPI row (default: image center)");
    rf->add_option("--v", rf_v);
    rf->add_option("--u-ref", rf_uref, "reference view (default: center)");
    rf->add_option("--dmin", rf_dmin)->required();
    rf->add_option("--dmax", rf_dmax)->required();
    rf->add_option("--nf", rf_nf);
    rf->add_option("-o,--out", rf_out, "output prefix");
    rf->add_flag("--previews", rf_previews, "write one PNG per layer");

    // ---- efs ----
    auto* ef = app.add_subcommand("efs", "EFS construction and analysis");
    ef->require_subcommand(1);
    std::string efs_in, efs_out = "efs.cgrid", efs_route = "spatial";
    int efs_row = -1, efs_v = 0, efs_uref = -1, efs_nf = 64, efs_nu_hint = 0;
    double efs_dmin = -1, efs_dmax = 1;
    auto add_efs_common = [&](CLI::App* c) {
        c->add_option("input", efs_in)->required();
        c->add_option("--row", efs_row);
        c->add_option("--v", efs_v);
        c->add_option("--u-ref", efs_uref);
        c->add_option("--dmin", efs_dmin)->required();
        c->add_option("--dmax", efs_dmax)->required();
        c->add_option("--nf", efs_nf);
    };
    auto* efb = ef->add_subcommand("build", "Construct the EFS of one EPI");
    add_efs_common(efb);
    efb->add_option("--route", efs_route, "spatial|slice");
    efb->add_option("-o,--out", efs_out);
    auto* efl = ef->add_subcommand("lines", "Detect view lines in an EFS grid");
    std::string efl_grid;
    efl->add_option("grid", efl_grid)->required();
    efl->add_option("--n-u", efs_nu_hint, "expected view count")->required();
    double efl_da = 0.0;
    int efl_uref = 0;
    efl->add_option("--delta-alpha", efl_da)->required();
    efl->add_option("--u-ref", efl_uref)->required();
    auto* efsym = ef->add_subcommand("symmetry", "Conjugate-symmetry score of a grid");
    std::string efsym_grid;
    efsym->add_option("grid", efsym_grid)->required();

    // ---- analyze ----
    auto* an = app.add_subcommand("analyze", "Closed-form sampling analysis");
    double an_zmin = 2.0, an_zmax = 100.0, an_k = 3.0, an_b = 3.0, an_s = 1.0;
    int an_nu = 200, an_uref = -1;
    std::string an_out = "sampling";
    an->add_option("--zmin", an_zmin);
    an->add_option("--zmax", an_zmax);
    an->add_option("--focal", an_k);
    an->add_option("--baseline", an_b);
    an->add_option("--s-factor", an_s);
    an->add_option("--n-u", an_nu);
    an->add_option("--u-ref", an_uref);
    an->add_option("-o,--out", an_out, "output prefix (JSON + CSV sweep)");

    // ---- reconstruct ----
    auto* rc = app.add_subcommand("reconstruct", "Dense-view reconstruction of a container");
    std::string rc_in, rc_out = "recon", rc_backend = "classical", rc_external, rc_oracle, rc_gt;
    double rc_dmin = -1, rc_dmax = 1;
    int rc_nf = 64, rc_uref = -1, rc_targets = 0;
    std::vector<int> rc_refs;
    bool rc_passthrough = false, rc_dump = false;
    rc->add_option("input", rc_in)->required();
    rc->add_option("-o,--out", rc_out);
    rc->add_option("--backend", rc_backend, "oracle|classical|external");
    rc->add_option("--external-dir", rc_external);
    rc->add_option("--oracle-field", rc_oracle, "container with the ground-truth dense field");
    rc->add_option("--gt", rc_gt, "container used only for PSNR/SSIM evaluation");
    rc->add_option("--dmin", rc_dmin)->required();
    rc->add_option("--dmax", rc_dmax)->required();
    rc->add_option("--nf", rc_nf);
    rc->add_option("--u-ref", rc_uref, "reference source view (default: center)");
    rc->add_option("--target-views", rc_targets)->required();
    rc->add_option("--refs", rc_refs, "multiple reference views for blended reconstruction");
    rc->add_flag("--passthrough", rc_passthrough, "copy source views into aligned output slots");
    rc->add_flag("--dump-efs", rc_dump, "save each completed EFS grid");

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "PSNR/SSIM between two containers");
    std::string ev_a, ev_b, ev_mask, ev_out = "eval";
    bool ev_include_invalid = false;
    ev->add_option("test", ev_a)->required();
    ev->add_option("reference", ev_b)->required();
    ev->add_option("--mask-dir", ev_mask, "validity rasters from a reconstruction run");
    ev->add_flag("--include-invalid", ev_include_invalid);
    ev->add_option("-o,--out", ev_out, "output prefix");

    // ---- run ----
    auto* rn = app.add_subcommand("run", "Run a JSON experiment spec");
    std::string rn_spec;
    rn->add_option("spec", rn_spec)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            SceneGeometry geom = geometry_from(g_depths, g_masks, g_cutoff, g_sfactor, g_seed);
            SynthResult res = synth_lightfield(geom, g_views, g_h, g_w, g_seed, g_k, g_b);
            save_lightfield(res.field, g_out);
            if (g_disparity) {
                fsys::create_directories(fsys::path(g_out) / "disparity");
                for (int u = 0; u < res.field.n_u; ++u) {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "disp_%04d_%04d.f32", 0, u);
                    save_float_raster(res.disparity[u], fsys::path(g_out) / "disparity" / buf);
                }
            }
            std::cout << "wrote " << g_out << " (" << res.field.n_u << " views, " << g_h << "x" << g_w << ")\n";
        } else if (*ds) {
            LightField lf = load_lightfield(ds_in);
            LightField sparse = downsample_views(lf, ds_factor, ds_keep_last);
            save_lightfield(sparse, ds_out);
            std::cout << "wrote " << ds_out << " (" << sparse.n_u << " of " << lf.n_u << " views)\n";
        } else if (*rf) {
            LightField lf = load_lightfield(rf_in);
            if (rf_row < 0) rf_row = lf.height / 2;
            if (rf_uref < 0) rf_uref = lf.n_u / 2;
            Epi epi = extract_epi(lf, rf_row, rf_v, rf_uref);
            ReconstructionConfig cfg(rf_dmin, rf_dmax, rf_nf, rf_uref, lf.n_u);
            FocalStack fs = build_focal_stack(epi, cfg);
            save_focal_stack(fs, rf_out + ".f32");
            if (rf_previews) {
                for (int m = 0; m < fs.n_f(); ++m) {
                    Image layer(1, fs.width());
                    for (int x = 0; x < fs.width(); ++x) layer.at(0, x) = std::clamp(fs.data.at(m, x), 0.0, 1.0);
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "_layer_%04d.png", m);
                    png_io::write_gray(rf_out + buf, layer, 8);
                }
            }
            std::cout << "wrote " << rf_out << ".f32 (" << fs.n_f() << " layers)\n";
        } else if (*ef) {
            if (*efb) {
                LightField lf = load_lightfield(efs_in);
                if (efs_row < 0) efs_row = lf.height / 2;
                if (efs_uref < 0) efs_uref = lf.n_u / 2;
                Epi epi = extract_epi(lf, efs_row, efs_v, efs_uref);
                ReconstructionConfig cfg(efs_dmin, efs_dmax, efs_nf, efs_uref, lf.n_u);
                ComplexGrid out;
                if (efs_route == "spatial") {
                    out = efs_spatial_route(build_focal_stack(epi, cfg));
                } else if (efs_route == "slice") {
                    out = efs_slice_route(epi, cfg).efs;
                } else {
                    throw CLI::ValidationError("--route must be spatial or slice");
                }
                save_complex_grid(out, efs_out);
                std::cout << "wrote " << efs_out << " (" << out.rows << "x" << out.cols << ")\n";
            } else if (*efl) {
                ComplexGrid g = load_complex_grid(efl_grid);
                ReconstructionConfig cfg(-1.0, 1.0, g.rows, efl_uref, std::max(efs_nu_hint, 2));
                cfg.delta_alpha = efl_da;
                cfg.d_min = -efl_da * (g.rows - 1) / 2;
                cfg.d_max = efl_da * (g.rows - 1) / 2;
                LineDetection det = detect_view_lines(g, cfg, efs_nu_hint);
                json j;
                j["complete"] = det.complete;
                j["lines"] = json::array();
                for (const auto& l : det.lines)
                    j["lines"].push_back({{"angle_deg", l.angle * 180 / M_PI}, {"energy", l.energy},
                                          {"view", l.view_index}});
                std::cout << j.dump(2) << "\n";
            } else if (*efsym) {
                ComplexGrid g = load_complex_grid(efsym_grid);
                double score = conjugate_symmetry_deviation(g);
                json j{{"score", score}, {"max_abs", g.max_abs()}};
                std::cout << j.dump(2) << "\n";
            }
        } else if (*an) {
            SceneGeometry geom;
            geom.z_min = an_zmin;
            geom.z_max = an_zmax;
            geom.s_factor = an_s;
            geom.layers.push_back({0.5 * (an_zmin + an_zmax), 0, {}});
            if (an_uref < 0) an_uref = an_nu / 2;
            auto [dmin, dmax] = refocus_range_from_depth(geom, an_k, an_b);
            SamplingReport rep = sampling_report(geom, an_k, an_b, an_nu, dmin, dmax, max_delta_alpha(an_nu), an_uref);
            rep.validate();
            json j;
            j["schema_version"] = 1;
            j["n_u"] = rep.n_u;
            j["apex_angle_continuous"] = rep.apex_angle_continuous;
            j["apex_angle_discrete"] = rep.apex_angle_discrete;
            j["delta_alpha"] = rep.delta_alpha;
            j["delta_alpha_max"] = rep.delta_alpha_max;
            j["d_min"] = dmin;
            j["d_max"] = dmax;
            j["n_f_eq11"] = rep.n_f_eq11;
            j["n_f_min"] = rep.n_f_min;
            j["n_f_min_real"] = rep.n_f_min_real;
            j["line_slopes"] = rep.line_slopes;
            write_json(an_out + ".json", j);
            // sweep of the layer bound against the near-plane depth
            std::ofstream csv(an_out + "_nfmin_vs_zmin.csv");
            csv << "z_min,n_f_min\n";
            for (double z = 2.0; z <= 10.0 + 1e-9; z += 0.25) {
                SceneGeometry g2 = geom;
                g2.z_min = z;
                csv << z << "," << min_focal_layers(g2, an_k, an_b, an_nu) << "\n";
            }
            std::cout << "wrote " << an_out << ".json and " << an_out << "_nfmin_vs_zmin.csv\n";
        } else if (*rc) {
            LightField source = load_lightfield(rc_in);
            if (rc_uref < 0) rc_uref = source.n_u / 2;
            ReconstructionConfig cfg(rc_dmin, rc_dmax, rc_nf, rc_uref, rc_targets);
            PipelineOptions opts;
            opts.passthrough_sources = rc_passthrough;
            auto backend = make_backend(rc_backend, rc_external, rc_oracle);
            ReconstructionResult rec;
            if (rc_refs.size() > 1)
                rec = multi_reference_reconstruct(source, cfg, rc_refs, *backend, opts);
            else
                rec = reconstruct_lightfield(source, cfg, *backend, opts);
            fsys::path out(rc_out);
            save_lightfield(rec.field, out / "field");
            fsys::create_directories(out / "validity");
            for (int i = 0; i < cfg.n_target; ++i) {
                char buf[40];
                std::snprintf(buf, sizeof(buf), "validity_%04d.f32", i);
                save_float_raster(rec.validity[i], out / "validity" / buf);
            }
            if (rc_dump) {
                fsys::create_directories(out / "efs");
                for (int y = 0; y < source.height; ++y) {
                    Epi epi = extract_epi(source, y, 0, cfg.u_ref);
                    Epi padded = detail::pad_epi_clamp(epi, opts.pad(epi.width()));
                    ComplexGrid aliased = efs_spatial_route(build_focal_stack(padded, cfg));
                    EpiContext ctx{y, 0, 1, false};
                    save_complex_grid(complete_efs(aliased, cfg, *backend, opts, source.n_u, ctx),
                                      out / "efs" / ExternalBackend::filename(ctx));
                }
            }
            json metrics;
            metrics["schema_version"] = 1;
            metrics["backend"] = rc_backend;
            metrics["efs_symmetry"] = rec.max_symmetry_ratio;
            metrics["imag_residue"] = rec.max_imag_residue;
            if (!rc_gt.empty()) {
                LightField gt = load_lightfield(rc_gt);
                if (gt.n_u != cfg.n_target) throw std::runtime_error("--gt view count differs from --target-views");
                WedgeMask wm(cfg, source.n_u, source.width);
                metrics["wedge_loss"] = wm.exterior_energy_fraction(fft2(extract_epi(gt, gt.height / 2, 0, 0).data));
                json per = json::array();
                double mp = 0, ms = 0;
                for (int i = 0; i < cfg.n_target; ++i) {
                    double p = psnr(rec.field.view(i), gt.view(i), &rec.validity[i]);
                    double s = ssim(rec.field.view(i), gt.view(i), &rec.validity[i]);
                    per.push_back({{"u", i}, {"psnr", p}, {"ssim", s}});
                    mp += p;
                    ms += s;
                }
                metrics["per_view"] = per;
                metrics["mean_psnr"] = mp / cfg.n_target;
                metrics["mean_ssim"] = ms / cfg.n_target;
            }
            write_json(out / "metrics.json", metrics);
            std::cout << "wrote " << rc_out << " (" << cfg.n_target << " views)\n";
        } else if (*ev) {
            LightField test = load_lightfield(ev_a);
            LightField ref = load_lightfield(ev_b);
            if (test.n_u != ref.n_u || test.n_v != ref.n_v) throw std::runtime_error("eval: view counts differ");
            json per = json::array();
            double mp = 0, ms = 0;
            std::ofstream csv(ev_out + "_per_view.csv");
            csv << "view,psnr,ssim\n";
            for (int i = 0; i < test.n_u; ++i) {
                Image mask;
                const Image* mp_ptr = nullptr;
                if (!ev_mask.empty() && !ev_include_invalid) {
                    char buf[40];
                    std::snprintf(buf, sizeof(buf), "validity_%04d.f32", i);
                    mask = load_float_raster(fsys::path(ev_mask) / buf);
                    mp_ptr = &mask;
                }
                double p = psnr(test.view(i), ref.view(i), mp_ptr);
                double s = ssim(test.view(i), ref.view(i), mp_ptr);
                per.push_back({{"u", i}, {"psnr", p}, {"ssim", s}});
                csv << i << "," << p << "," << s << "\n";
                mp += p;
                ms += s;
            }
            json j;
            j["schema_version"] = 1;
            j["per_view"] = per;
            j["mean_psnr"] = mp / test.n_u;
            j["mean_ssim"] = ms / test.n_u;
            write_json(ev_out + ".json", j);
            std::cout << j["mean_psnr"] << " dB mean, " << j["mean_ssim"] << " mean SSIM\n";
        } else if (*rn) {
            std::ifstream in(rn_spec);
            if (!in) throw std::runtime_error("cannot open spec " + rn_spec);
            json j;
            in >> j;
            ExperimentReport rep = run_experiment(ExperimentSpec::from_json(j));
            validate_metrics_schema(rep.metrics);
            std::cout << rep.metrics.dump(2) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
