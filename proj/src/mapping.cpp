#include "tac3d/mapping.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace tac3d::mapping {

void SensorPose::validate() const {
    const Mat3& r = transform.rotation;
    if ((r * r.transpose() - Mat3::Identity()).norm() > 1e-9 ||
        std::abs(r.determinant() - 1.0) > 1e-9)
        throw Error("sensor pose rotation is not a proper orthonormal matrix");
}

std::vector<Vec3> to_global(const std::vector<Vec3>& local_points, const SensorPose& pose) {
    pose.validate();
    std::vector<Vec3> out;
    out.reserve(local_points.size());
    for (const Vec3& p : local_points) out.push_back(pose.transform.apply(p));
    return out;
}

void accumulate(GlobalCloud& cloud, const std::vector<Vec3>& frame_points, long frame_index) {
    // replacement semantics per frame index
    std::size_t w = 0;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        if (cloud.source_frame[i] == frame_index) continue;
        if (w != i) {
            cloud.points[w] = cloud.points[i];
            cloud.source_frame[w] = cloud.source_frame[i];
            cloud.mu[w] = cloud.mu[i];
        }
        ++w;
    }
    cloud.points.resize(w);
    cloud.source_frame.resize(w);
    cloud.mu.resize(w);

    for (const Vec3& p : frame_points) {
        cloud.points.push_back(p);
        cloud.source_frame.push_back(frame_index);
        cloud.mu.push_back(std::numeric_limits<double>::quiet_NaN());
    }
}

GlobalCloud voxel_resample(const GlobalCloud& cloud, double voxel_edge_mm) {
    if (!(voxel_edge_mm > 0.0)) throw Error("voxel edge must be positive");

    struct Cell {
        Vec3 sum = Vec3::Zero();
        double mu_sum = 0.0;
        int mu_count = 0;
        int count = 0;
        long frame = 0;
    };
    const auto key = [&](const Vec3& p) {
        const auto q = [&](double v) {
            return static_cast<std::int64_t>(std::floor(v / voxel_edge_mm));
        };
        std::uint64_t h = 1469598103934665603ull;
        for (std::int64_t v : {q(p.x()), q(p.y()), q(p.z())}) {
            for (int b = 0; b < 8; ++b) {
                h ^= static_cast<unsigned char>(v >> (8 * b));
                h *= 1099511628211ull;
            }
        }
        return h;
    };

    // std::map keyed by quantized coords would also work; keep insertion
    // order stable for determinism by remembering first-seen order
    std::unordered_map<std::uint64_t, int> index;
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const std::uint64_t k = key(cloud.points[i]);
        auto [it, inserted] = index.try_emplace(k, static_cast<int>(cells.size()));
        if (inserted) cells.emplace_back();
        Cell& c = cells[it->second];
        c.sum += cloud.points[i];
        if (c.count == 0) c.frame = cloud.source_frame[i];
        if (std::isfinite(cloud.mu[i])) {
            c.mu_sum += cloud.mu[i];
            ++c.mu_count;
        }
        ++c.count;
    }

    GlobalCloud out;
    out.points.reserve(cells.size());
    for (const Cell& c : cells) {
        out.points.push_back(c.sum / c.count);
        out.source_frame.push_back(c.frame);
        out.mu.push_back(c.mu_count > 0 ? c.mu_sum / c.mu_count
                                        : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

BandColor band_color(double mu_or_nan) {
    if (!std::isfinite(mu_or_nan)) return {128, 128, 128};
    switch (friction::classify_band(mu_or_nan)) {
        case friction::Band::high: return {220, 40, 40};
        case friction::Band::medium: return {40, 200, 40};
        case friction::Band::low: return {40, 80, 220};
    }
    return {128, 128, 128};
}

void export_ply(const GlobalCloud& cloud, const std::string& path) {
    if (cloud.points.empty()) throw Error("refusing to export an empty cloud");
    std::ofstream os(path);
    if (!os) throw IoFailure("cannot open for writing: " + path);
    os << "ply\nformat ascii 1.0\n";
    os << "element vertex " << cloud.points.size() << "\n";
    os << "property float x\nproperty float y\nproperty float z\n";
    os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    os << "end_header\n";
    char buf[160];
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const BandColor c = band_color(cloud.mu[i]);
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %u %u %u\n",
                      static_cast<float>(cloud.points[i].x()),
                      static_cast<float>(cloud.points[i].y()),
                      static_cast<float>(cloud.points[i].z()), c.r, c.g, c.b);
        os << buf;
    }
    if (!os) throw IoFailure("write failed: " + path);
}

PlyCloud import_ply(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoFailure("cannot open: " + path);
    std::string line;
    long lineno = 0;
    std::size_t vertex_count = 0;
    bool in_header = true;
    if (!std::getline(is, line) || line != "ply") throw ParseError("not a PLY file", 1);
    ++lineno;
    while (in_header && std::getline(is, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "element") {
            std::string what;
            ss >> what >> vertex_count;
            if (what != "vertex") throw ParseError("unsupported PLY element: " + what, lineno);
        } else if (tok == "end_header") {
            in_header = false;
        } else if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt != "ascii") throw ParseError("only ascii PLY is supported", lineno);
        }
    }
    if (in_header) throw ParseError("PLY header not terminated", lineno);

    PlyCloud cloud;
    for (std::size_t i = 0; i < vertex_count; ++i) {
        if (!std::getline(is, line))
            throw ParseError("PLY truncated at vertex " + std::to_string(i), lineno);
        ++lineno;
        std::istringstream ss(line);
        double x, y, z;
        int r, g, b;
        if (!(ss >> x >> y >> z >> r >> g >> b))
            throw ParseError("malformed PLY vertex", lineno);
        cloud.points.emplace_back(x, y, z);
        cloud.colors.push_back({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                static_cast<std::uint8_t>(b)});
    }
    return cloud;
}

}  // namespace tac3d::mapping
