#pragma once

#include <vector>

#include "tac3d/common.hpp"
#include "tac3d/elasticity.hpp"
#include "tac3d/errors.hpp"

namespace tac3d::forcesolve {

struct Regularizer {
    double weight = 0.0;  // scales the identity against H^T H

    void validate() const {
        if (!(weight >= 0.0)) throw Error("regularizer weight must be >= 0");
    }
};

/// Precomputed regularized pseudo-inverse K = (H^T H + w I)^-1 H^T mapping
/// displacements (mm) to forces (N). Immutable once built.
struct SolveKernel {
    MatX k;
    int marker_count = 0;
    double weight = 0.0;
    std::string source_hash;  // geometry hash of the H it was built from, if known
};

struct AxisCalibration {
    Vec3 scale = Vec3::Ones();  // C_x, C_y, C_z
};

/// Per-marker 3-vector forces in the axis-blocked layout (x block, y block,
/// z block), newtons.
struct ForceField {
    VecX f;
    int marker_count = 0;
    long frame_index = 0;

    Vec3 at(int marker) const {
        return {f[marker], f[marker_count + marker], f[2 * marker_count + marker]};
    }
};

/// Condition estimate for a square positive definite matrix (power iteration
/// for the largest eigenvalue, inverse iteration for the smallest).
double condition_estimate(const MatX& m);

SolveKernel build_kernel(const elasticity::ConversionMatrix& h, const Regularizer& reg);

ForceField solve_forces(const SolveKernel& kernel, const VecX& displacements,
                        long frame_index = 0);

struct SweepResult {
    double best_weight = 0.0;
    std::vector<std::pair<double, double>> curve;  // (w, mean resultant error)
};

/// Evaluates resultant-force recovery error over a log grid of regularizer
/// weights against synthetic noisy displacements D = H F + noise.
SweepResult sweep_regularizer(const elasticity::ConversionMatrix& h, double noise_sigma_mm,
                              const std::vector<VecX>& trial_forces, std::uint64_t seed = 1,
                              int grid_points = 25, double w_min = 1e-10, double w_max = 1e2);

AxisCalibration calibrate_axes(const std::vector<Vec3>& measured,
                               const std::vector<Vec3>& truth);

ForceField apply_calibration(const ForceField& field, const AxisCalibration& cal);

Vec3 resultant(const ForceField& field);

}  // namespace tac3d::forcesolve
