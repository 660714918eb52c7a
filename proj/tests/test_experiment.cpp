#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "efs/experiment.hpp"

using namespace efs;
namespace fsys = std::filesystem;

namespace {
ExperimentSpec smoke_spec(const fsys::path& out) {
    ExperimentSpec s;
    s.layer_depths = {8.0};
    s.n_views = 25;
    s.height = 64;
    s.width = 64;
    s.baseline_step = 1.6;  // d = 0.2 per dense step
    s.seed = 77;
    s.downsample = 5;
    s.d_min = -1.2;
    s.d_max = 1.6;
    s.n_f = 32;
    s.u_ref = 2;
    s.n_target = 25;
    s.backend = "oracle";
    s.output_dir = out.string();
    return s;
}

std::string slurp(const fsys::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
}  // namespace

TEST_CASE("smoke experiment completes quickly and produces a valid report") {
    fsys::path out = fsys::temp_directory_path() / "efs_exp_smoke";
    fsys::remove_all(out);
    setenv("EFSLAB_THREADS", "1", 1);
    auto t0 = std::chrono::steady_clock::now();
    ExperimentReport rep = run_experiment(smoke_spec(out));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    unsetenv("EFSLAB_THREADS");
    CHECK(secs < 10.0);  // single-threaded CI budget
    validate_metrics_schema(rep.metrics);
    CHECK(rep.metrics["mean_psnr"].get<double>() > 20.0);
    CHECK(fsys::exists(out / "metrics.json"));
    CHECK(fsys::exists(out / "per_view.csv"));
    CHECK(fsys::exists(out / "preview_center.png"));
    CHECK(fsys::exists(out / "reconstructed" / "meta.json"));
    // csv has a header and one row per view
    std::string csv = slurp(out / "per_view.csv");
    CHECK(csv.rfind("view,psnr,ssim", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 26);
    fsys::remove_all(out);
}

TEST_CASE("identical specs produce byte-identical reports") {
    fsys::path a = fsys::temp_directory_path() / "efs_exp_a";
    fsys::path b = fsys::temp_directory_path() / "efs_exp_b";
    fsys::remove_all(a);
    fsys::remove_all(b);
    run_experiment(smoke_spec(a));
    run_experiment(smoke_spec(b));
    CHECK(slurp(a / "metrics.json") == slurp(b / "metrics.json"));
    CHECK(slurp(a / "per_view.csv") == slurp(b / "per_view.csv"));
    CHECK(slurp(a / "reconstructed" / "view_0000_0012.png") == slurp(b / "reconstructed" / "view_0000_0012.png"));
    fsys::remove_all(a);
    fsys::remove_all(b);
}

TEST_CASE("spec serialization round trips") {
    ExperimentSpec s = smoke_spec("x");
    s.refs = {1, 2, 3};
    s.layer_masks = {"half:0.5:2"};
    ExperimentSpec back = ExperimentSpec::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());
    json bad = s.to_json();
    bad["schema_version"] = 2;
    CHECK_THROWS_AS(ExperimentSpec::from_json(bad), std::runtime_error);
}

TEST_CASE("stage-tagged failure") {
    fsys::path out = fsys::temp_directory_path() / "efs_exp_fail";
    ExperimentSpec s = smoke_spec(out);
    s.backend = "nonsense";
    CHECK_THROWS_WITH(run_experiment(s), Catch::Matchers::ContainsSubstring("reconstruct"));
    fsys::remove_all(out);
}

TEST_CASE("metrics schema validation rejects broken reports") {
    json ok = {{"schema_version", 1}, {"backend", "oracle"}, {"efs_symmetry", 0.0}, {"imag_residue", 0.0}};
    CHECK_NOTHROW(validate_metrics_schema(ok));
    json bad = ok;
    bad.erase("efs_symmetry");
    CHECK_THROWS_AS(validate_metrics_schema(bad), std::runtime_error);
    json bad2 = ok;
    bad2["per_view"] = json::array({{{"u", 0}, {"psnr", 1.0}}});
    CHECK_THROWS_AS(validate_metrics_schema(bad2), std::runtime_error);
}

TEST_CASE("opacity mask descriptors parse") {
    OpacityMask m = parse_mask_descriptor("half:0.6:3");
    CHECK(m.kind == OpacityMask::Kind::HalfPlane);
    CHECK(m.edge == Catch::Approx(0.6));
    CHECK(m.feather == Catch::Approx(3.0));
    CHECK(parse_mask_descriptor("full").kind == OpacityMask::Kind::Full);
    CHECK(parse_mask_descriptor("stripes:16:0.4").period == Catch::Approx(16.0));
    CHECK_THROWS_AS(parse_mask_descriptor("blob:1"), std::invalid_argument);
}
