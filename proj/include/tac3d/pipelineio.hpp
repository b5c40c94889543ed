#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tac3d/common.hpp"
#include "tac3d/elasticity.hpp"
#include "tac3d/errors.hpp"
#include "tac3d/mapping.hpp"

namespace tac3d::pipelineio {

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

/// Binary container for the conversion matrix H and the solve kernel K.
/// Layout: magic "TAC3DH1\0", little-endian u32 fields (version, kind,
/// marker count, rows, cols, dtype=1 for f64), f64 regularizer weight,
/// row-major f64 payload, trailing CRC32 over all preceding bytes.
struct MatrixFile {
    enum class Kind : std::uint32_t { conversion = 0, kernel = 1 };
    Kind kind = Kind::conversion;
    int marker_count = 0;
    double weight = 0.0;
    MatX matrix;
};

void write_matrix(const MatrixFile& mf, const std::string& path);
MatrixFile read_matrix(const std::string& path);

/// One frame of per-marker records. Optional blocks are empty when the
/// recording's column schema does not carry them.
struct FrameRecord {
    long frame_index = 0;
    double timestamp_s = 0.0;
    std::vector<Vec3> positions;      // sensor frame, mm
    std::vector<Vec3> displacements;  // mm
    std::vector<Vec3> forces;         // N
    std::vector<bool> contact;
    std::vector<bool> slip;
    std::vector<double> mu;
    std::vector<std::vector<double>> extras;  // unknown trailing columns, per marker
};

struct Recording {
    elasticity::FingertipGeometry geometry;
    std::string geometry_hash;  // validated against geometry on read
    std::string h_file;         // reference, may be empty
    std::string pose_file;      // reference, may be empty
    double displacement_noise_mm = 0.0;
    double contact_threshold_hint = 0.0;  // per-marker force threshold, N
    bool has_forces = false;
    bool has_flags = false;
    bool has_mu = false;
    std::vector<std::string> extra_columns;       // unknown column names, preserved
    std::vector<std::string> unknown_header_lines;  // preserved verbatim
    std::vector<FrameRecord> frames;

    int marker_count() const { return geometry.marker_count(); }
};

void write_recording(const Recording& rec, const std::string& path);
Recording read_recording(const std::string& path);

/// Pose trajectory text file: one line per frame with frame index,
/// timestamp (s), translation (mm) and unit quaternion w x y z.
void write_pose_trajectory(const std::vector<mapping::SensorPose>& poses,
                           const std::string& path);
std::vector<mapping::SensorPose> read_pose_trajectory(const std::string& path);

/// Key-value sidecar describing the fingertip geometry and material a matrix
/// file was built from.
void write_geometry_file(const elasticity::FingertipGeometry& geom,
                         const elasticity::Material& mat, const std::string& path);
void read_geometry_file(const std::string& path, elasticity::FingertipGeometry& geom,
                        elasticity::Material& mat);

}  // namespace tac3d::pipelineio
