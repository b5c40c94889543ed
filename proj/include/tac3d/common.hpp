#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace tac3d {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Rigid transform, p_out = R * p_in + t. Units: mm.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    RigidTransform inverse() const {
        return {rotation.transpose(), -(rotation.transpose() * translation)};
    }
    RigidTransform compose(const RigidTransform& inner) const {
        // (*this) ∘ inner
        return {rotation * inner.rotation, rotation * inner.translation + translation};
    }
};

/// Deterministic RNG. Gaussian draws use an explicit Box-Muller so streams
/// are reproducible independent of the standard library's distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return mag * std::cos(2.0 * kPi * u2);
    }
    double normal(double sigma) { return sigma * normal(); }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Runs fn(i) for i in [0, n) over a small thread pool. Falls back to the
/// calling thread for short ranges.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         std::size_t min_grain = 16) {
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (hw == 1 || n < 2 * min_grain) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t n_threads = std::min(hw, (n + min_grain - 1) / min_grain);
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace tac3d
