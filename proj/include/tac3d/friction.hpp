#pragma once

#include <vector>

#include "tac3d/common.hpp"
#include "tac3d/errors.hpp"

namespace tac3d::friction {

struct SlipSample {
    Vec3 position = Vec3::Zero();  // global frame, mm
    double mu = 0.0;               // preliminary tangential/normal ratio
    long frame_index = 0;
    double normal_newton = 0.0;
};

struct FrictionParams {
    double radius_mm = 3.0;
    double alpha = 2.0;  // distance exponent
    double beta = 4.0;   // value exponent, damps misjudged low samples
    double slip_threshold_mm = 0.1;

    void validate() const {
        if (!(radius_mm > 0.0)) throw Error("friction: radius must be positive");
        if (alpha < 0.0 || beta < 0.0) throw Error("friction: exponents must not be negative");
        if (!(slip_threshold_mm > 0.0)) throw Error("friction: slip threshold must be positive");
    }
};

enum class Band { high, medium, low };

/// Surface points with the smoothed friction coefficient. Points with no
/// slip sample in range keep sample_count 0 and an undefined mu.
struct FrictionCloud {
    std::vector<Vec3> points;
    std::vector<double> mu;         // meaningful only where sample_count > 0
    std::vector<int> sample_count;  // contributing slip samples per point

    bool defined(std::size_t i) const { return sample_count[i] > 0; }
};

/// Markers that stayed in contact across both frames and moved at least
/// threshold in the global frame (the object is fixed, so stick means no
/// global motion).
std::vector<bool> detect_slip(const std::vector<Vec3>& global_prev,
                              const std::vector<Vec3>& global_next,
                              const std::vector<bool>& contact_prev,
                              const std::vector<bool>& contact_next, double threshold_mm);

double preliminary_mu(const Vec3& force, const Vec3& outward_normal);

FrictionCloud smooth_mu(const std::vector<Vec3>& surface_points,
                        const std::vector<SlipSample>& samples, const FrictionParams& params);

Band classify_band(double mu);

}  // namespace tac3d::friction
