#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "tac3d/contact.hpp"

using namespace tac3d;
using namespace tac3d::contact;

namespace {

std::vector<Vec3> grid_on_sphere(int side, double spacing, double radius) {
    std::vector<Vec3> pts;
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) {
            const double x = (i - (side - 1) / 2.0) * spacing;
            const double y = (j - (side - 1) / 2.0) * spacing;
            pts.emplace_back(x, y, std::sqrt(radius * radius - x * x - y * y) - radius);
        }
    return pts;
}

}  // namespace

TEST_CASE("planar markers get consistent unit z normals") {
    std::vector<Vec3> pts;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) pts.emplace_back(i * 1.0, j * 1.0, 0.0);
    const auto normals = estimate_normals(pts, 9);
    for (const auto& n : normals.normals) {
        CHECK(std::abs(n.norm() - 1.0) < 1e-9);
        CHECK((n - Vec3::UnitZ()).norm() < 1e-9);
    }
}

TEST_CASE("spherical markers match the radial direction within a degree") {
    const double radius = 45.0;
    const auto pts = grid_on_sphere(12, 1.27, radius);
    std::vector<Vec3> outward;
    for (const auto& p : pts) outward.push_back((p - Vec3(0, 0, -radius)).normalized());
    const auto normals = estimate_normals(pts, 9, outward);
    // interior markers only; the plane fit is biased at the border
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) {
            if (i == 0 || j == 0 || i == 11 || j == 11) continue;
            const int k = i * 12 + j;
            const double cosang = normals.normals[k].dot(outward[k]);
            CHECK(std::acos(std::clamp(cosang, -1.0, 1.0)) < deg2rad(1.0));
        }
}

TEST_CASE("collinear neighborhoods are rejected") {
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i) pts.emplace_back(i * 1.0, 0.0, 0.0);
    CHECK_THROWS_AS(estimate_normals(pts, 3), DegenerateNeighborhood);
}

TEST_CASE("normal estimation is rotation equivariant") {
    const auto pts = grid_on_sphere(8, 1.27, 45.0);
    std::vector<Vec3> outward;
    for (const auto& p : pts) outward.push_back((p - Vec3(0, 0, -45.0)).normalized());
    const auto base = estimate_normals(pts, 9, outward);

    const Eigen::AngleAxisd rot(0.7, Vec3(1, 2, 0.5).normalized());
    std::vector<Vec3> rotated, outward_rot;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        rotated.push_back(rot * pts[i]);
        outward_rot.push_back(rot * outward[i]);
    }
    const auto after = estimate_normals(rotated, 9, outward_rot);
    for (std::size_t i = 0; i < pts.size(); ++i)
        CHECK((after.normals[i] - rot * base.normals[i]).norm() < 1e-9);
}

TEST_CASE("force decomposition is exact and orthogonal") {
    SUBCASE("parallel force has no tangential part") {
        const auto d = decompose_force({0, 0, -2.5}, Vec3::UnitZ());
        CHECK(d.normal_newton == doctest::Approx(-2.5));
        CHECK(d.tangential.norm() < 1e-15);
    }
    SUBCASE("perpendicular force has no normal part") {
        const auto d = decompose_force({1, 1, 0}, Vec3::UnitZ());
        CHECK(d.normal_newton == doctest::Approx(0.0));
        CHECK((d.tangential - Vec3(1, 1, 0)).norm() < 1e-15);
    }
    SUBCASE("reconstruction is exact for random inputs") {
        Rng rng(17);
        for (int i = 0; i < 200; ++i) {
            const Vec3 f(rng.normal(), rng.normal(), rng.normal());
            Vec3 n(rng.normal(), rng.normal(), rng.normal());
            while (n.norm() < 1e-6) n = Vec3(rng.normal(), rng.normal(), rng.normal());
            n.normalize();
            const auto d = decompose_force(f, n);
            CHECK(std::abs(d.tangential.dot(n)) < 1e-14);
            CHECK((d.normal_newton * n + d.tangential - f).norm() < 1e-14);
        }
    }
    SUBCASE("non-unit normals are rejected") {
        CHECK_THROWS(decompose_force({1, 0, 0}, {0, 0, 2}));
    }
}

TEST_CASE("contact detection") {
    const int n = 9;
    SurfaceNormals normals;
    normals.normals.assign(n, Vec3::UnitZ());
    forcesolve::ForceField f;
    f.marker_count = n;
    f.f = VecX::Zero(3 * n);

    SUBCASE("zero force field gives an empty mask") {
        const auto mask = detect_contact(f, normals, 0.01);
        CHECK(mask.count() == 0);
    }
    SUBCASE("a single pressed marker is a singleton mask") {
        f.f[2 * n + 4] = -0.5;  // compression along -z at marker 4
        const auto mask = detect_contact(f, normals, 0.01);
        CHECK(mask.count() == 1);
        CHECK(mask.mask[4]);
        CHECK(mask.threshold_newton == 0.01);
    }
    SUBCASE("tension does not count as contact") {
        f.f[2 * n + 4] = +0.5;
        CHECK(detect_contact(f, normals, 0.01).count() == 0);
    }
    SUBCASE("raising the threshold never adds markers") {
        Rng rng(23);
        for (int i = 0; i < n; ++i) f.f[2 * n + i] = rng.normal(0.1);
        int prev = n + 1;
        for (double thr : {0.001, 0.01, 0.05, 0.1, 0.3}) {
            const int count = detect_contact(f, normals, thr).count();
            CHECK(count <= prev);
            prev = count;
        }
    }
}
