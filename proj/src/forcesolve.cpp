#include "tac3d/forcesolve.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace tac3d::forcesolve {

double condition_estimate(const MatX& h) {
    const int n = static_cast<int>(h.rows());
    VecX v = VecX::Ones(n).normalized();
    double lam_max = 0.0;
    for (int i = 0; i < 50; ++i) {
        v = (h * v).eval();
        lam_max = v.norm();
        if (lam_max == 0.0) return std::numeric_limits<double>::infinity();
        v /= lam_max;
    }
    Eigen::PartialPivLU<MatX> lu(h);
    VecX w = VecX::Ones(n).normalized();
    double inv_norm = 0.0;
    for (int i = 0; i < 50; ++i) {
        w = lu.solve(w).eval();
        inv_norm = w.norm();
        if (!std::isfinite(inv_norm) || inv_norm == 0.0)
            return std::numeric_limits<double>::infinity();
        w /= inv_norm;
    }
    return lam_max * inv_norm;
}

SolveKernel build_kernel(const elasticity::ConversionMatrix& h, const Regularizer& reg) {
    reg.validate();
    SolveKernel kernel;
    kernel.marker_count = h.marker_count;
    kernel.weight = reg.weight;
    if (reg.weight == 0.0) {
        // degenerate to the plain inverse; solving H directly avoids squaring
        // the condition number through the normal equations
        if (condition_estimate(h.h) > 1e12)
            throw IllConditioned(
                "conversion matrix condition estimate exceeds 1e12; use a positive weight");
        kernel.k = Eigen::PartialPivLU<MatX>(h.h).inverse();
    } else {
        const MatX normal = h.h.transpose() * h.h +
                            reg.weight * MatX::Identity(h.h.rows(), h.h.cols());
        kernel.k = Eigen::LDLT<MatX>(normal).solve(h.h.transpose());
    }
    if (!kernel.k.allFinite()) throw SingularSystem("kernel computation produced non-finite values");
    return kernel;
}

ForceField solve_forces(const SolveKernel& kernel, const VecX& displacements, long frame_index) {
    if (displacements.size() != kernel.k.cols())
        throw DimensionMismatch("solve_forces: expected displacement length " +
                                std::to_string(kernel.k.cols()));
    ForceField out;
    out.marker_count = kernel.marker_count;
    out.frame_index = frame_index;
    out.f = kernel.k * displacements;
    return out;
}

SweepResult sweep_regularizer(const elasticity::ConversionMatrix& h, double noise_sigma_mm,
                              const std::vector<VecX>& trial_forces, std::uint64_t seed,
                              int grid_points, double w_min, double w_max) {
    if (noise_sigma_mm < 0.0) throw Error("sweep: noise sigma must be >= 0");
    if (trial_forces.empty()) throw Error("sweep: need at least one trial force");
    if (grid_points < 2) throw Error("sweep: need at least two grid points");

    // pre-generate noisy displacement frames once so every w sees identical data
    Rng rng(seed);
    std::vector<VecX> displacements;
    displacements.reserve(trial_forces.size());
    for (const VecX& f : trial_forces) {
        if (f.size() != h.h.cols()) throw DimensionMismatch("sweep: trial force length mismatch");
        VecX d = h.h * f;
        for (Eigen::Index i = 0; i < d.size(); ++i) d[i] += rng.normal(noise_sigma_mm);
        displacements.push_back(std::move(d));
    }

    SweepResult result;
    double best_err = std::numeric_limits<double>::infinity();
    for (int gi = 0; gi < grid_points; ++gi) {
        const double w = w_min * std::pow(w_max / w_min, static_cast<double>(gi) / (grid_points - 1));
        const SolveKernel kernel = build_kernel(h, Regularizer{w});
        double err_sum = 0.0;
        for (std::size_t t = 0; t < trial_forces.size(); ++t) {
            const ForceField sol = solve_forces(kernel, displacements[t]);
            ForceField truth;
            truth.f = trial_forces[t];
            truth.marker_count = h.marker_count;
            const Vec3 r_true = resultant(truth);
            const Vec3 r_sol = resultant(sol);
            const double denom = std::max(r_true.norm(), 1e-12);
            err_sum += (r_sol - r_true).cwiseAbs().maxCoeff() / denom;
        }
        const double err = err_sum / trial_forces.size();
        result.curve.emplace_back(w, err);
        if (err < best_err) {
            best_err = err;
            result.best_weight = w;
        }
    }
    return result;
}

AxisCalibration calibrate_axes(const std::vector<Vec3>& measured,
                               const std::vector<Vec3>& truth) {
    if (measured.size() != truth.size())
        throw DimensionMismatch("calibration: sample count mismatch");
    if (measured.size() < 2) throw Error("calibration: need at least two samples");
    AxisCalibration cal;
    for (int a = 0; a < 3; ++a) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < measured.size(); ++i) {
            num += measured[i][a] * truth[i][a];
            den += measured[i][a] * measured[i][a];
        }
        if (den == 0.0)
            throw DegenerateAxis("calibration: all measured components are zero on axis " +
                                 std::to_string(a));
        cal.scale[a] = num / den;
    }
    return cal;
}

ForceField apply_calibration(const ForceField& field, const AxisCalibration& cal) {
    ForceField out = field;
    const int n = field.marker_count;
    for (int a = 0; a < 3; ++a) out.f.segment(a * n, n) *= cal.scale[a];
    return out;
}

Vec3 resultant(const ForceField& field) {
    const int n = field.marker_count;
    if (field.f.size() != 3 * n) throw DimensionMismatch("resultant: malformed force field");
    return {field.f.segment(0, n).sum(), field.f.segment(n, n).sum(),
            field.f.segment(2 * n, n).sum()};
}

}  // namespace tac3d::forcesolve
