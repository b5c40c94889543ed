#pragma once

#include <string>
#include <vector>

#include "tac3d/common.hpp"
#include "tac3d/elasticity.hpp"
#include "tac3d/errors.hpp"
#include "tac3d/geometry.hpp"
#include "tac3d/mapping.hpp"

namespace tac3d::simharness {

enum class ShapeKind { plane, sphere, box, capsule };

/// One signed-distance primitive. Negative distance is inside the object.
struct Shape {
    ShapeKind kind = ShapeKind::plane;
    Vec3 a = Vec3::Zero();      // plane point / sphere center / box center / capsule end A
    Vec3 b = Vec3::UnitZ();     // plane outward normal / capsule end B
    Vec3 half = Vec3::Ones();   // box half extents
    double radius = 1.0;        // sphere / capsule

    double sdf(const Vec3& p) const;
};

struct MuRegion {
    enum class Kind { halfspace, sector } kind = Kind::halfspace;
    Vec3 normal = Vec3::UnitX();  // halfspace: mu applies where normal . p >= offset
    double offset = 0.0;
    Vec3 center = Vec3::Zero();   // sector about an axis, angles from ref direction
    Vec3 axis = Vec3::UnitZ();
    Vec3 ref = Vec3::UnitX();
    double angle_lo_deg = 0.0;
    double angle_hi_deg = 0.0;
    double mu = 0.5;

    bool contains(const Vec3& p) const;
};

/// Union of signed-distance shapes with a piecewise-constant friction field
/// over its surface. First matching region wins, else mu_default.
struct SyntheticObject {
    std::vector<Shape> shapes;
    double mu_default = 0.6;
    std::vector<MuRegion> regions;

    double sdf(const Vec3& p) const;
    Vec3 outward_normal(const Vec3& p) const;
    double mu_at(const Vec3& p) const;
};

struct Scenario {
    SyntheticObject object;
    std::vector<mapping::SensorPose> poses;  // sensor -> global, one per frame
    std::vector<double> depths;              // indentation along sensor +z, mm
    double frame_rate_hz = 24.0;
    double pixel_noise = 0.0;
    double displacement_noise_mm = 0.0;
    double slip_threshold_mm = 0.1;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Everything the simulator knows to be true for one frame. Forces and
/// displacements are in the sensor frame with the axis-blocked layout.
struct GroundTruthFrame {
    long frame_index = 0;
    double timestamp_s = 0.0;
    std::vector<Vec3> marker_positions;  // sensor frame, rest + displacement
    VecX displacements;                  // 3N
    VecX forces;                         // 3N, exerted by the object on the fingertip
    std::vector<bool> contact;
    std::vector<bool> slip;
    std::vector<double> mu;              // object mu at the contact point, 0 if free
};

struct ContactSolveOptions {
    double tolerance_mm = 1e-8;
    int max_iterations = 100;
};

GroundTruthFrame simulate_press(const elasticity::FingertipGeometry& geom,
                                const elasticity::ConversionMatrix& h,
                                const SyntheticObject& object, const mapping::SensorPose& pose,
                                double depth_mm, const ContactSolveOptions& opts = {});

/// Rigid pin array pressed onto the fingertip: pins on a regular grid in the
/// apex plane, tips pointing at the sensor.
GroundTruthFrame simulate_pin_array(const elasticity::FingertipGeometry& geom,
                                    const elasticity::ConversionMatrix& h, double pin_spacing_mm,
                                    int pin_rows, int pin_cols, double depth_mm,
                                    double pin_radius_mm = 0.5,
                                    const ContactSolveOptions& opts = {});

std::vector<GroundTruthFrame> simulate_slide(const elasticity::FingertipGeometry& geom,
                                             const elasticity::ConversionMatrix& h,
                                             const Scenario& scenario,
                                             const ContactSolveOptions& opts = {});

/// Gaussian perturbation of the displacement vector, deterministic per seed.
VecX add_noise(const VecX& displacements, double sigma_mm, std::uint64_t seed);

struct RefractionConfig {
    bool enabled = false;
    double silicone_thickness_mm = 8.0;  // marker plane to glass, along -z
    double glass_thickness_mm = 2.0;
    double n_glass = 1.5;
    double n_silicone = 1.41;
};

struct RenderResult {
    std::vector<Vec2> camera1_px;
    std::vector<Vec2> camera2_px;
    std::vector<bool> visible;  // false where the marker left either frustum
};

RenderResult render_markers(const geometry::LightPathSolution& solution,
                            const std::vector<Vec3>& marker_positions, double pixel_sigma,
                            std::uint64_t seed, const RefractionConfig& refraction = {});

/// Renders a grid of known points with refraction on and triangulates them
/// back, producing (observed, true) pairs for the compensation fit.
std::vector<std::pair<Vec3, Vec3>> compensation_samples(
    const geometry::LightPathSolution& solution, const RefractionConfig& refraction,
    const Vec3& volume_lo, const Vec3& volume_hi, int nx, int ny, int nz);

Scenario load_scenario(const std::string& path);

}  // namespace tac3d::simharness
