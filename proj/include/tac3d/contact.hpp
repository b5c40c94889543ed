#pragma once

#include <vector>

#include "tac3d/common.hpp"
#include "tac3d/errors.hpp"
#include "tac3d/forcesolve.hpp"

namespace tac3d::contact {

/// Outward-oriented unit surface normals, one per marker.
struct SurfaceNormals {
    std::vector<Vec3> normals;
};

struct ContactMask {
    std::vector<bool> mask;
    double threshold_newton = 0.0;

    int count() const {
        int c = 0;
        for (bool b : mask) c += b;
        return c;
    }
};

/// Plane-fit normals from the k nearest neighbors of each marker. Each
/// normal is flipped to agree with the matching outward reference direction
/// (rest-shape radial direction, or +z when omitted).
SurfaceNormals estimate_normals(const std::vector<Vec3>& markers, int k,
                                const std::vector<Vec3>& outward_reference = {});

struct ForceDecomposition {
    double normal_newton = 0.0;  // signed along the outward normal
    Vec3 tangential = Vec3::Zero();
};

ForceDecomposition decompose_force(const Vec3& force, const Vec3& unit_normal);

/// Compression felt by the fingertip: forces are exerted by the object on
/// the fingertip, so contact pushes against the outward normal.
inline double compression(const Vec3& force, const Vec3& outward_normal) {
    return -force.dot(outward_normal);
}

ContactMask detect_contact(const forcesolve::ForceField& forces, const SurfaceNormals& normals,
                           double threshold_newton);

}  // namespace tac3d::contact
