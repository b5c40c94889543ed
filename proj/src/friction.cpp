#include "tac3d/friction.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

#include "tac3d/contact.hpp"

namespace tac3d::friction {

namespace {

// uniform grid over the slip samples with cell edge = search radius, so a
// query only visits the 27 surrounding cells
struct SampleGrid {
    double cell;
    std::unordered_map<std::uint64_t, std::vector<int>> cells;

    static std::uint64_t key(int ix, int iy, int iz) {
        const auto u = [](int v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1FFFFF; };
        return (u(ix) << 42) | (u(iy) << 21) | u(iz);
    }

    SampleGrid(const std::vector<SlipSample>& samples, double radius) : cell(radius) {
        for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
            const Vec3& p = samples[i].position;
            cells[key(static_cast<int>(std::floor(p.x() / cell)),
                      static_cast<int>(std::floor(p.y() / cell)),
                      static_cast<int>(std::floor(p.z() / cell)))]
                .push_back(i);
        }
    }

    template <typename Fn>
    void visit_near(const Vec3& p, Fn&& fn) const {
        const int ix = static_cast<int>(std::floor(p.x() / cell));
        const int iy = static_cast<int>(std::floor(p.y() / cell));
        const int iz = static_cast<int>(std::floor(p.z() / cell));
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    const auto it = cells.find(key(ix + dx, iy + dy, iz + dz));
                    if (it == cells.end()) continue;
                    for (int i : it->second) fn(i);
                }
    }
};

}  // namespace

std::vector<bool> detect_slip(const std::vector<Vec3>& global_prev,
                              const std::vector<Vec3>& global_next,
                              const std::vector<bool>& contact_prev,
                              const std::vector<bool>& contact_next, double threshold_mm) {
    const std::size_t n = global_prev.size();
    if (global_next.size() != n || contact_prev.size() != n || contact_next.size() != n)
        throw FrameMismatch("slip detection: marker counts differ between frames");
    if (!(threshold_mm > 0.0)) throw Error("slip detection: threshold must be positive");

    std::vector<bool> slip(n, false);
    for (std::size_t i = 0; i < n; ++i)
        slip[i] = contact_prev[i] && contact_next[i] &&
                  (global_next[i] - global_prev[i]).norm() >= threshold_mm;
    return slip;
}

double preliminary_mu(const Vec3& force, const Vec3& outward_normal) {
    const auto dec = contact::decompose_force(force, outward_normal);
    const double compression = -dec.normal_newton;
    if (compression <= 0.0)
        throw ZeroNormalForce("preliminary mu: no compressive normal force");
    return dec.tangential.norm() / compression;
}

FrictionCloud smooth_mu(const std::vector<Vec3>& surface_points,
                        const std::vector<SlipSample>& samples, const FrictionParams& params) {
    params.validate();
    FrictionCloud cloud;
    cloud.points = surface_points;
    cloud.mu.assign(surface_points.size(), std::numeric_limits<double>::quiet_NaN());
    cloud.sample_count.assign(surface_points.size(), 0);
    if (samples.empty()) return cloud;

    const SampleGrid grid(samples, params.radius_mm);
    const double r = params.radius_mm;
    for (std::size_t pi = 0; pi < surface_points.size(); ++pi) {
        double wsum = 0.0, wmu = 0.0;
        int count = 0;
        grid.visit_near(surface_points[pi], [&](int si) {
            const SlipSample& s = samples[si];
            const double ri = (s.position - surface_points[pi]).norm();
            if (ri >= r) return;
            const double w = std::pow(r - ri, params.alpha) * std::pow(s.mu, params.beta);
            wsum += w;
            wmu += w * s.mu;
            ++count;
        });
        cloud.sample_count[pi] = count;
        if (count > 0 && wsum > 0.0) cloud.mu[pi] = wmu / wsum;
        else if (count > 0) cloud.mu[pi] = 0.0;  // all in-range samples have mu = 0
    }
    return cloud;
}

Band classify_band(double mu) {
    if (!(mu >= 0.0)) throw Error("classify_band: mu must be >= 0");
    if (mu > 0.8) return Band::high;
    if (mu > 0.5) return Band::medium;
    return Band::low;
}

}  // namespace tac3d::friction
