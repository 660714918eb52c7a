#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "efs/fft.hpp"
#include "efs/grid.hpp"
#include "efs/lightfield.hpp"
#include "efs/png_codec.hpp"
#include "efs/refocus.hpp"

namespace efs {

namespace fs = std::filesystem;
using nlohmann::json;

inline std::string view_filename(int v, int u) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%04d_%04d.png", v, u);
    return buf;
}

// Directory layout: meta.json + one grayscale PNG per view (v,u order).
inline void save_lightfield(const LightField& lf, const fs::path& dir, int bit_depth = 16) {
    lf.validate();
    fs::create_directories(dir);
    json meta;
    meta["schema_version"] = 1;
    meta["n_u"] = lf.n_u;
    meta["n_v"] = lf.n_v;
    meta["height"] = lf.height;
    meta["width"] = lf.width;
    meta["baseline_step"] = lf.baseline_step;
    meta["focal_length"] = lf.focal_length;
    meta["bit_depth"] = bit_depth;
    if (!lf.meta.empty()) meta["tags"] = lf.meta;
    std::ofstream out(dir / "meta.json");
    out << meta.dump(2) << "\n";
    for (int v = 0; v < lf.n_v; ++v)
        for (int u = 0; u < lf.n_u; ++u) png_io::write_gray((dir / view_filename(v, u)).string(), lf.view(u, v), bit_depth);
}

inline LightField load_lightfield(const fs::path& dir) {
    fs::path meta_path = dir / "meta.json";
    std::ifstream in(meta_path);
    if (!in) throw std::runtime_error("load_lightfield: missing " + meta_path.string());
    json meta;
    try {
        in >> meta;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_lightfield: malformed " + meta_path.string() + ": " + e.what());
    }
    for (const char* key : {"n_u", "n_v", "height", "width", "baseline_step", "focal_length"})
        if (!meta.contains(key)) throw std::runtime_error("load_lightfield: " + meta_path.string() + " lacks " + key);

    LightField lf;
    lf.n_u = meta["n_u"].get<int>();
    lf.n_v = meta["n_v"].get<int>();
    lf.height = meta["height"].get<int>();
    lf.width = meta["width"].get<int>();
    lf.baseline_step = meta["baseline_step"].get<double>();
    lf.focal_length = meta["focal_length"].get<double>();
    if (meta.contains("tags"))
        for (auto& [k, v] : meta["tags"].items()) lf.meta[k] = v.get<std::string>();
    lf.views.reserve(static_cast<size_t>(lf.n_u) * lf.n_v);
    for (int v = 0; v < lf.n_v; ++v)
        for (int u = 0; u < lf.n_u; ++u) {
            fs::path p = dir / view_filename(v, u);
            if (!fs::exists(p)) throw std::runtime_error("load_lightfield: missing view file " + p.string());
            Image img = png_io::read_gray(p.string());
            if (img.rows != lf.height || img.cols != lf.width)
                throw std::runtime_error("load_lightfield: dimension mismatch in " + p.string());
            lf.views.push_back(std::move(img));
        }
    lf.validate();
    return lf;
}

// 32-bit float little-endian raster with a JSON sidecar, used for disparity
// maps and validity masks.
inline void save_float_raster(const Image& img, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_float_raster: cannot open " + path.string());
    std::vector<float> buf(img.data.size());
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(img.data[i]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    json side;
    side["height"] = img.rows;
    side["width"] = img.cols;
    std::ofstream sj(path.string() + ".json");
    sj << side.dump(2) << "\n";
}

inline Image load_float_raster(const fs::path& path) {
    std::ifstream sj(path.string() + ".json");
    if (!sj) throw std::runtime_error("load_float_raster: missing sidecar for " + path.string());
    json side;
    sj >> side;
    int rows = side["height"].get<int>(), cols = side["width"].get<int>();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_float_raster: cannot open " + path.string());
    std::vector<float> buf(static_cast<size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw std::runtime_error("load_float_raster: truncated " + path.string());
    Image img(rows, cols);
    for (size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i];
    return img;
}

// Focal stack: raw float32 LE payload with a JSON header.
inline void save_focal_stack(const FocalStack& fs_data, const fs::path& path) {
    json hdr;
    hdr["n_f"] = fs_data.n_f();
    hdr["width"] = fs_data.width();
    hdr["d_min"] = fs_data.f_values.front();
    hdr["d_max"] = fs_data.f_values.back();
    hdr["u_ref"] = fs_data.u_ref;
    std::ofstream hj(path.string() + ".json");
    hj << hdr.dump(2) << "\n";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_focal_stack: cannot open " + path.string());
    std::vector<float> buf;
    buf.reserve(fs_data.data.data.size() * 2);
    for (double v : fs_data.data.data) buf.push_back(static_cast<float>(v));
    for (double v : fs_data.validity.data) buf.push_back(static_cast<float>(v));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

// ComplexGrid: JSON header + interleaved real/imag float64 little-endian.
inline void save_complex_grid(const ComplexGrid& g, const fs::path& path) {
    json hdr;
    hdr["rows"] = g.rows;
    hdr["cols"] = g.cols;
    hdr["axis0"] = g.axis0;
    hdr["axis1"] = g.axis1;
    hdr["dc_centered"] = true;
    std::ofstream hj(path.string() + ".json");
    hj << hdr.dump(2) << "\n";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_complex_grid: cannot open " + path.string());
    std::vector<double> buf;
    buf.reserve(g.data.size() * 2);
    for (const auto& v : g.data) {
        buf.push_back(v.real());
        buf.push_back(v.imag());
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
}

inline ComplexGrid load_complex_grid(const fs::path& path) {
    std::ifstream hj(path.string() + ".json");
    if (!hj) throw std::runtime_error("load_complex_grid: missing header for " + path.string());
    json hdr;
    try {
        hj >> hdr;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_complex_grid: malformed header " + path.string() + ".json: " + e.what());
    }
    ComplexGrid g(hdr["rows"].get<int>(), hdr["cols"].get<int>());
    if (hdr.contains("axis0")) g.axis0 = hdr["axis0"].get<std::string>();
    if (hdr.contains("axis1")) g.axis1 = hdr["axis1"].get<std::string>();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_complex_grid: cannot open " + path.string());
    std::vector<double> buf(g.data.size() * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_complex_grid: truncated " + path.string());
    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] = {buf[2 * i], buf[2 * i + 1]};
    return g;
}

}  // namespace efs
