#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "tac3d/mapping.hpp"

using namespace tac3d;
using namespace tac3d::mapping;

namespace {

SensorPose pose_from(const Vec3& t, const Mat3& r = Mat3::Identity()) {
    SensorPose p;
    p.transform.rotation = r;
    p.transform.translation = t;
    return p;
}

}  // namespace

TEST_CASE("rigid transform to the global frame") {
    const std::vector<Vec3> pts = {{1, 0, 0}, {0, 2, 0}, {0, 0, 3}};

    SUBCASE("identity leaves points unchanged") {
        const auto out = to_global(pts, pose_from(Vec3::Zero()));
        for (std::size_t i = 0; i < pts.size(); ++i) CHECK((out[i] - pts[i]).norm() == 0.0);
    }
    SUBCASE("pure translation shifts points") {
        const auto out = to_global(pts, pose_from({1, 2, 3}));
        for (std::size_t i = 0; i < pts.size(); ++i)
            CHECK((out[i] - (pts[i] + Vec3(1, 2, 3))).norm() == 0.0);
    }
    SUBCASE("quarter turn about z") {
        const Mat3 r = Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ()).toRotationMatrix();
        const auto out = to_global({{1, 0, 0}}, pose_from(Vec3::Zero(), r));
        CHECK((out[0] - Vec3(0, 1, 0)).norm() < 1e-12);
    }
    SUBCASE("pairwise distances are preserved") {
        Rng rng(3);
        const Mat3 r =
            Eigen::AngleAxisd(1.234, Vec3(1, 2, 3).normalized()).toRotationMatrix();
        std::vector<Vec3> cloud;
        for (int i = 0; i < 50; ++i)
            cloud.emplace_back(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
        const auto out = to_global(cloud, pose_from({4, 5, 6}, r));
        for (std::size_t i = 1; i < cloud.size(); ++i)
            CHECK(std::abs((out[i] - out[0]).norm() - (cloud[i] - cloud[0]).norm()) < 1e-12);
    }
    SUBCASE("improper rotations are rejected") {
        Mat3 r = Mat3::Identity();
        r(2, 2) = -1.0;
        CHECK_THROWS(to_global(pts, pose_from(Vec3::Zero(), r)));
    }
}

TEST_CASE("accumulation replaces frames idempotently") {
    GlobalCloud cloud;
    std::vector<Vec3> frame0;
    for (int i = 0; i < 12; ++i) frame0.emplace_back(i * 1.0, 0.0, 0.0);
    accumulate(cloud, frame0, 0);
    CHECK(cloud.size() == 12);

    std::vector<Vec3> frame1 = {{0, 1, 0}, {1, 1, 0}};
    accumulate(cloud, frame1, 1);
    CHECK(cloud.size() == 14);

    // re-adding frame 0 replaces its points rather than appending
    accumulate(cloud, frame0, 0);
    CHECK(cloud.size() == 14);

    std::vector<Vec3> smaller = {{5, 5, 5}};
    accumulate(cloud, smaller, 1);
    CHECK(cloud.size() == 13);
}

TEST_CASE("voxel resampling") {
    SUBCASE("all points in one voxel collapse to the centroid") {
        GlobalCloud cloud;
        accumulate(cloud, {{0.1, 0.1, 0.1}, {0.3, 0.1, 0.1}, {0.2, 0.3, 0.2}}, 0);
        const auto out = voxel_resample(cloud, 1.0);
        REQUIRE(out.size() == 1);
        CHECK((out.points[0] - Vec3(0.2, 1.0 / 6.0, 2.0 / 15.0)).norm() < 1e-12);
    }
    SUBCASE("points already one per voxel are unchanged in count") {
        GlobalCloud cloud;
        accumulate(cloud, {{0.5, 0.5, 0.5}, {1.5, 0.5, 0.5}, {2.5, 0.5, 0.5}}, 0);
        CHECK(voxel_resample(cloud, 1.0).size() == 3);
    }
    SUBCASE("resampled sphere points stay within half a voxel of the sphere") {
        Rng rng(5);
        GlobalCloud cloud;
        std::vector<Vec3> pts;
        const double radius = 45.0;
        for (int i = 0; i < 10000; ++i) {
            Vec3 d(rng.normal(), rng.normal(), rng.normal());
            while (d.norm() < 1e-6) d = Vec3(rng.normal(), rng.normal(), rng.normal());
            pts.push_back(radius * d.normalized());
        }
        accumulate(cloud, pts, 0);
        const auto out = voxel_resample(cloud, 0.5);
        CHECK(out.size() <= cloud.size());
        for (const auto& p : out.points) CHECK(std::abs(p.norm() - radius) < 0.25);
    }
    SUBCASE("resampling its own output is a no-op") {
        Rng rng(6);
        GlobalCloud cloud;
        std::vector<Vec3> pts;
        for (int i = 0; i < 500; ++i)
            pts.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
        accumulate(cloud, pts, 0);
        const auto once = voxel_resample(cloud, 0.7);
        const auto twice = voxel_resample(once, 0.7);
        REQUIRE(once.size() == twice.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < once.size(); ++i)
            worst = std::max(worst, (once.points[i] - twice.points[i]).norm());
        CHECK(worst == 0.0);
    }
}

TEST_CASE("band colors") {
    CHECK(band_color(0.9).r == 220);
    CHECK(band_color(0.65).g == 200);
    CHECK(band_color(0.3).b == 220);
    const auto gray = band_color(std::numeric_limits<double>::quiet_NaN());
    CHECK(gray.r == 128);
    CHECK(gray.g == 128);
    CHECK(gray.b == 128);
}

TEST_CASE("PLY export and import round trip") {
    GlobalCloud cloud;
    accumulate(cloud, {{0.5, -1.25, 3.0}, {10.125, 0.0, -2.5}, {1, 2, 3}}, 0);
    cloud.mu[0] = 0.9;   // high -> red
    cloud.mu[1] = 0.65;  // medium -> green
    // cloud.mu[2] stays undefined -> gray

    const std::string path = "mapping_roundtrip_test.ply";
    export_ply(cloud, path);
    const auto back = import_ply(path);
    REQUIRE(back.points.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK((back.points[i] - cloud.points[i]).norm() < 1e-6);  // float precision
    }
    CHECK(back.colors[0].r == 220);
    CHECK(back.colors[1].g == 200);
    CHECK(back.colors[2].r == 128);

    // re-exporting the parsed cloud reproduces the same bytes
    GlobalCloud again;
    accumulate(again, back.points, 0);
    again.mu[0] = 0.9;
    again.mu[1] = 0.65;
    const std::string path2 = "mapping_roundtrip_test2.ply";
    export_ply(again, path2);
    std::ifstream a(path), b(path2);
    const std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("empty cloud export is refused") {
    GlobalCloud cloud;
    CHECK_THROWS(export_ply(cloud, "should_not_exist.ply"));
}

TEST_CASE("truncated PLY reports the offending vertex") {
    const std::string path = "mapping_truncated_test.ply";
    {
        std::ofstream os(path);
        os << "ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\nproperty float y\n"
              "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
              "end_header\n0 0 0 1 2 3\n";
    }
    CHECK_THROWS_AS(import_ply(path), ParseError);
    std::remove(path.c_str());
}
