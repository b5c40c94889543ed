#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tac3d/common.hpp"
#include "tac3d/errors.hpp"
#include "tac3d/friction.hpp"

namespace tac3d::mapping {

/// Sensor-to-global rigid transform for one frame.
struct SensorPose {
    RigidTransform transform;
    double timestamp_s = 0.0;
    long frame_index = 0;

    void validate() const;
};

/// Accumulated object-surface points in the global frame. Re-adding a frame
/// index replaces that frame's points.
struct GlobalCloud {
    std::vector<Vec3> points;
    std::vector<long> source_frame;
    std::vector<double> mu;  // NaN where unknown

    std::size_t size() const { return points.size(); }
};

std::vector<Vec3> to_global(const std::vector<Vec3>& local_points, const SensorPose& pose);

void accumulate(GlobalCloud& cloud, const std::vector<Vec3>& frame_points, long frame_index);

GlobalCloud voxel_resample(const GlobalCloud& cloud, double voxel_edge_mm);

struct BandColor {
    std::uint8_t r, g, b;
};
BandColor band_color(double mu_or_nan);

/// ASCII PLY with per-vertex color from the friction band: high red,
/// medium green, low blue, undefined gray.
void export_ply(const GlobalCloud& cloud, const std::string& path);

struct PlyCloud {
    std::vector<Vec3> points;
    std::vector<BandColor> colors;
};
PlyCloud import_ply(const std::string& path);

}  // namespace tac3d::mapping
