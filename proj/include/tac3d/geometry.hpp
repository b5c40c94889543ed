#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tac3d/common.hpp"
#include "tac3d/errors.hpp"

namespace tac3d::geometry {

/// Plane in point-normal form: normal · p = offset. Normal is unit length,
/// offset in mm.
struct Plane {
    Vec3 normal = Vec3::UnitZ();
    double offset = 0.0;

    static Plane through(const Vec3& point, const Vec3& n);
    bool valid(double tol = 1e-12) const { return std::abs(normal.norm() - 1.0) <= tol; }
};

/// Pinhole camera with up to two radial distortion coefficients.
/// pose maps sensor-frame points into the camera frame: p_cam = R p + t.
/// The rotation may be improper (det -1) for a camera seen through an odd
/// number of mirrors; projection math is unaffected.
struct CameraModel {
    RigidTransform pose;
    double focal_px = 1000.0;
    Vec2 principal = {640.0, 480.0};
    double fov_deg = 60.0;
    std::array<double, 2> distortion = {0.0, 0.0};

    Vec3 center() const { return -(pose.rotation.transpose() * pose.translation); }
};

struct LightPathSpec {
    double camera_distance_mm = 40.0;  // h, camera to elastic body inner face
    double fov_deg = 48.0;             // phi
    double fingertip_length_mm = 40.0; // l
    double fingertip_thickness_mm = 8.0; // d
    double parallax_deg = 90.0;        // theta, target angle at the central marker

    void validate() const;
};

/// Mirror layout and derived virtual cameras for one symmetric two-bounce
/// light path. All coordinates are in the sensor frame: marker plane at
/// z = 0, camera below at z = -(h + d), symmetry axis = z axis.
struct LightPathSolution {
    LightPathSpec spec;
    std::array<Plane, 4> mirrors;  // 1,2 left pair; 4,3 the mirrored right pair
    // fold points of the two bounding rays of the left half view; a0 and b0
    // are the fingertip endpoints on the inner face, z = -d
    Vec3 a0, a1, a2;
    Vec3 b0, b1, b2;
    Vec3 camera_center;            // O
    Vec3 central_marker;           // M
    CameraModel real_camera;
    CameraModel virtual_camera_1;  // seen through mirrors 1 and 2 (left)
    CameraModel virtual_camera_2;  // seen through mirrors 4 and 3 (right)
    double achieved_parallax_deg = 0.0;
    Eigen::Vector4d residual = Eigen::Vector4d::Zero();  // normalized solver residuals
};

struct SolveOptions {
    int max_iterations = 120;
    double tolerance = 1e-10;   // normalized residual norm target
    int image_width_px = 3280;  // used to derive focal length from fov
    int image_height_px = 2464;
};

Vec3 reflect_point(const Plane& plane, const Vec3& p);
Vec3 reflect_direction(const Plane& plane, const Vec3& d);
CameraModel reflect_camera(const Plane& plane, const CameraModel& cam);

LightPathSolution solve_light_path(const LightPathSpec& spec, const SolveOptions& opts = {});

/// Re-derives every §-style constraint residual of a solution by direct ray
/// tracing (reflection-law angles, endpoint hits, collinearity, parallax).
/// Independent of the solver's own residual route.
std::vector<double> verify_light_path(const LightPathSolution& sol);

Vec2 project(const CameraModel& cam, const Vec3& p);
/// Back-projects a pixel to a unit ray (origin, direction) in the sensor frame.
void pixel_ray(const CameraModel& cam, const Vec2& px, Vec3& origin, Vec3& dir);

struct TriangulationResult {
    Vec3 point;
    double residual_mm;  // gap between the two back-projected rays
};
TriangulationResult triangulate(const CameraModel& cam1, const CameraModel& cam2,
                                const Vec2& px1, const Vec2& px2);

/// Per-axis polynomial in the observed coordinates that predicts the
/// refraction deviation (observed minus true). Inputs are affinely
/// normalized into [-1,1]^3 before the monomials are evaluated.
struct CompensationPoly {
    int degree = 3;
    Vec3 box_lo = Vec3::Zero();
    Vec3 box_hi = Vec3::Zero();
    MatX coeffs;       // (#monomials) x 3, one column per output axis
    double fit_rmse = 0.0;

    bool inside_fitted_box(const Vec3& observed) const;
};

CompensationPoly fit_refraction_compensation(
    const std::vector<std::pair<Vec3, Vec3>>& observed_true_pairs, int degree = 3);

struct CompensatedPoint {
    Vec3 position;
    bool extrapolated = false;
};
CompensatedPoint apply_compensation(const CompensationPoly& poly, const Vec3& observed);

// light-path file schema (key-value text)
void save_light_path(const LightPathSolution& sol, const std::string& path);
LightPathSolution load_light_path(const std::string& path);

}  // namespace tac3d::geometry
