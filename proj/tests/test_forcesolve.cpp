#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "tac3d/elasticity.hpp"
#include "tac3d/forcesolve.hpp"

using namespace tac3d;
using namespace tac3d::forcesolve;

namespace {

elasticity::ConversionMatrix small_h(int rows = 4, int cols = 4) {
    elasticity::FingertipGeometry g;
    g.rows = rows;
    g.cols = cols;
    g.spacing_mm = 1.27;
    g.side_mm = 16.0;
    g.thickness_mm = 4.0;
    g.radius_mm = 45.0;
    g.subdivisions = 2;
    elasticity::Material m;
    const auto mesh = elasticity::build_mesh(g);
    return elasticity::condense_conversion_matrix(elasticity::assemble_stiffness(mesh, m), mesh);
}

elasticity::ConversionMatrix random_spd(int n, std::uint64_t seed) {
    Rng rng(seed);
    MatX a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    elasticity::ConversionMatrix h;
    h.h = a * a.transpose() + 0.5 * MatX::Identity(n, n);
    h.marker_count = n / 3;
    return h;
}

}  // namespace

TEST_CASE("zero-weight kernel is the plain inverse") {
    const auto h = small_h();
    const auto kernel = build_kernel(h, Regularizer{0.0});
    const MatX eye = kernel.k * h.h;
    CHECK((eye - MatX::Identity(eye.rows(), eye.cols())).norm() < 1e-8);
}

TEST_CASE("large weight shrinks solved forces toward zero") {
    const auto h = small_h();
    const int n3 = static_cast<int>(h.h.rows());
    VecX f0 = VecX::Zero(n3);
    f0[n3 - 1] = 1.0;
    const VecX d = h.h * f0;

    const double big = 1e8;
    const auto kernel = build_kernel(h, Regularizer{big});
    // K -> H^T / w in the large-weight limit
    CHECK((kernel.k - h.h.transpose() / big).norm() / (h.h.norm() / big) < 1e-3);
    const auto sol = solve_forces(kernel, d);
    CHECK(sol.f.norm() < 1e-3 * f0.norm());
}

TEST_CASE("kernel matches the dense normal-equations formula") {
    const auto h = random_spd(12, 99);
    const double w = 0.1;
    const auto kernel = build_kernel(h, Regularizer{w});
    // direct route written independently of the production factorization
    const MatX direct =
        (h.h.transpose() * h.h + w * MatX::Identity(12, 12)).inverse() * h.h.transpose();
    CHECK((kernel.k - direct).norm() / direct.norm() < 1e-10);
}

TEST_CASE("ill-conditioned matrix without regularization is rejected") {
    elasticity::ConversionMatrix h;
    h.h = MatX::Identity(6, 6);
    h.h(5, 5) = 1e-14;
    h.marker_count = 2;
    CHECK_THROWS_AS(build_kernel(h, Regularizer{0.0}), IllConditioned);
    CHECK_NOTHROW(build_kernel(h, Regularizer{1e-3}));
}

TEST_CASE("noise-free round trip recovers forces to 1e-8") {
    const auto h = small_h(8, 8);
    const auto kernel = build_kernel(h, Regularizer{0.0});
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        VecX f0(h.h.cols());
        for (Eigen::Index i = 0; i < f0.size(); ++i) f0[i] = rng.normal(0.1);
        const auto sol = solve_forces(kernel, h.h * f0);
        CHECK((sol.f - f0).norm() / f0.norm() <= 1e-8);
    }
}

TEST_CASE("solving is linear and checks dimensions") {
    const auto h = small_h();
    const auto kernel = build_kernel(h, Regularizer{1e-4});
    Rng rng(5);
    VecX d1(h.h.rows()), d2(h.h.rows());
    for (Eigen::Index i = 0; i < d1.size(); ++i) {
        d1[i] = rng.normal();
        d2[i] = rng.normal();
    }
    const VecX combined = solve_forces(kernel, 2.0 * d1 - 3.0 * d2).f;
    const VecX separate = 2.0 * solve_forces(kernel, d1).f - 3.0 * solve_forces(kernel, d2).f;
    CHECK((combined - separate).norm() < 1e-12 * separate.norm() + 1e-15);

    CHECK((solve_forces(kernel, VecX::Zero(h.h.rows())).f).norm() == 0.0);
    CHECK_THROWS_AS(solve_forces(kernel, VecX::Zero(7)), DimensionMismatch);
}

TEST_CASE("solved force norm decreases monotonically with the weight") {
    const auto h = small_h();
    Rng rng(6);
    VecX d(h.h.rows());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = rng.normal(0.01);
    double prev = std::numeric_limits<double>::infinity();
    for (double w : {1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2}) {
        const double norm = solve_forces(build_kernel(h, Regularizer{w}), d).f.norm();
        CHECK(norm <= prev * (1.0 + 1e-12));
        prev = norm;
    }
}

TEST_CASE("weight sweep behaves at the noise extremes") {
    const auto h = small_h();
    Rng rng(7);
    std::vector<VecX> trials;
    for (int t = 0; t < 3; ++t) {
        VecX f = VecX::Zero(h.h.cols());
        for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = rng.normal(0.05);
        trials.push_back(f);
    }

    SUBCASE("no noise selects the smallest grid weight") {
        const auto res = sweep_regularizer(h, 0.0, trials, 1, 15, 1e-9, 1e1);
        CHECK(res.best_weight == doctest::Approx(1e-9));
    }
    SUBCASE("strong noise selects a strictly positive weight") {
        const auto res = sweep_regularizer(h, 0.05, trials, 1, 15, 1e-9, 1e1);
        CHECK(res.best_weight > 1e-9 * 1.5);
    }
    SUBCASE("the curve is reproducible under a fixed seed") {
        const auto a = sweep_regularizer(h, 0.01, trials, 42, 10, 1e-8, 1e0);
        const auto b = sweep_regularizer(h, 0.01, trials, 42, 10, 1e-8, 1e0);
        REQUIRE(a.curve.size() == b.curve.size());
        for (std::size_t i = 0; i < a.curve.size(); ++i) {
            CHECK(a.curve[i].first == b.curve[i].first);
            CHECK(a.curve[i].second == b.curve[i].second);
        }
        CHECK(a.best_weight == b.best_weight);
    }
}

TEST_CASE("axis calibration") {
    SUBCASE("identity for already calibrated data") {
        std::vector<Vec3> meas = {{1, 2, 3}, {-2, 1, 0.5}, {0.3, -1, 2}};
        const auto cal = calibrate_axes(meas, meas);
        CHECK((cal.scale - Vec3::Ones()).norm() < 1e-12);
    }
    SUBCASE("exact scale recovery") {
        std::vector<Vec3> truth = {{1, 2, 3}, {-2, 1, 0.5}, {0.3, -1, 2}};
        std::vector<Vec3> meas;
        for (const auto& t : truth) meas.push_back(t / 2.0);
        const auto cal = calibrate_axes(meas, truth);
        CHECK((cal.scale - Vec3(2, 2, 2)).norm() < 1e-12);
    }
    SUBCASE("noisy underestimated axis") {
        Rng rng(8);
        std::vector<Vec3> truth, meas;
        for (int i = 0; i < 200; ++i) {
            const Vec3 t(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.5, 4));
            truth.push_back(t);
            meas.emplace_back(t.x() * (1 + rng.normal(0.01)), t.y() * (1 + rng.normal(0.01)),
                              0.8 * t.z() * (1 + rng.normal(0.01)));
        }
        const auto cal = calibrate_axes(meas, truth);
        CHECK(cal.scale.z() == doctest::Approx(1.25).epsilon(0.02));
        // calibrating the calibrated set returns unity
        std::vector<Vec3> calibrated;
        for (const auto& m : meas) calibrated.push_back(m.cwiseProduct(cal.scale));
        const auto again = calibrate_axes(calibrated, truth);
        CHECK((again.scale - Vec3::Ones()).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("an all-zero measured axis is degenerate") {
        std::vector<Vec3> meas = {{1, 0, 3}, {2, 0, 1}};
        std::vector<Vec3> truth = {{1, 1, 3}, {2, 1, 1}};
        CHECK_THROWS_AS(calibrate_axes(meas, truth), DegenerateAxis);
    }
}

TEST_CASE("resultant sums per-axis components") {
    ForceField f;
    f.marker_count = 3;
    f.f = VecX::Zero(9);
    CHECK(resultant(f).norm() == 0.0);

    f.f[2 * 3 + 0] = 1.0;  // z of marker 0
    CHECK((resultant(f) - Vec3(0, 0, 1)).norm() == 0.0);

    // opposite tangential forces cancel
    f.f.setZero();
    f.f[0] = 0.7;   // x of marker 0
    f.f[1] = -0.7;  // x of marker 1
    f.f[3 + 0] = -0.2;
    f.f[3 + 1] = 0.2;
    CHECK(resultant(f).norm() < 1e-15);
}

TEST_CASE("calibration applies per marker component-wise") {
    ForceField f;
    f.marker_count = 2;
    f.f = VecX::Zero(6);
    f.f << 1, 2, 3, 4, 5, 6;
    AxisCalibration cal;
    cal.scale = Vec3(2, 0.5, 1);
    const auto g = apply_calibration(f, cal);
    CHECK(g.f[0] == 2.0);
    CHECK(g.f[1] == 4.0);
    CHECK(g.f[2] == 1.5);
    CHECK(g.f[3] == 2.0);
    CHECK(g.f[4] == 5.0);
    CHECK(g.f[5] == 6.0);
    CHECK((resultant(g) - resultant(f).cwiseProduct(cal.scale)).norm() < 1e-15);
}
