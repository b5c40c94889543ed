#include <doctest.h>

#include <Eigen/Geometry>
#include <cstdio>
#include <fstream>
#include <limits>

#include "tac3d/pipelineio.hpp"

using namespace tac3d;
using namespace tac3d::pipelineio;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

Recording sample_recording(int frames, bool with_forces) {
    Recording rec;
    rec.geometry.rows = 2;
    rec.geometry.cols = 3;
    rec.geometry.spacing_mm = 1.27;
    rec.geometry.side_mm = 4.0;
    rec.geometry.thickness_mm = 3.0;
    rec.geometry.radius_mm = 45.0;
    rec.geometry.subdivisions = 1;
    rec.geometry_hash = rec.geometry.hash();
    rec.has_forces = with_forces;
    rec.has_flags = with_forces;
    rec.has_mu = with_forces;
    Rng rng(101);
    for (int f = 0; f < frames; ++f) {
        FrameRecord fr;
        fr.frame_index = f * 2;  // strictly increasing, not dense
        fr.timestamp_s = f / 24.0;
        for (int m = 0; m < 6; ++m) {
            fr.positions.emplace_back(rng.normal(), rng.normal(), rng.normal());
            fr.displacements.emplace_back(rng.normal(0.01), rng.normal(0.01), rng.normal(0.01));
            if (with_forces) {
                fr.forces.emplace_back(rng.normal(0.1), rng.normal(0.1), rng.normal(0.1));
                fr.contact.push_back(m % 2 == 0);
                fr.slip.push_back(m % 3 == 0);
                fr.mu.push_back(m == 0 ? std::numeric_limits<double>::quiet_NaN()
                                       : rng.uniform(0, 1));
            }
        }
        rec.frames.push_back(fr);
    }
    return rec;
}

}  // namespace

TEST_CASE("matrix container round trips bit exactly") {
    Rng rng(55);
    MatrixFile mf;
    mf.kind = MatrixFile::Kind::kernel;
    mf.marker_count = 4;
    mf.weight = 1.25e-3;
    mf.matrix.resize(12, 12);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) mf.matrix(i, j) = rng.normal();

    const std::string path = "matrix_roundtrip_test.bin";
    write_matrix(mf, path);
    const auto back = read_matrix(path);
    CHECK(back.kind == mf.kind);
    CHECK(back.marker_count == mf.marker_count);
    CHECK(back.weight == mf.weight);
    REQUIRE(back.matrix.rows() == 12);
    CHECK((back.matrix - mf.matrix).cwiseAbs().maxCoeff() == 0.0);

    // writing again produces identical bytes
    const std::string path2 = "matrix_roundtrip_test2.bin";
    write_matrix(back, path2);
    CHECK(slurp(path) == slurp(path2));
    std::remove(path2.c_str());

    SUBCASE("corruption is caught by the checksum") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(60);
        char byte = 0x5a;
        f.write(&byte, 1);
        f.close();
        CHECK_THROWS_AS(read_matrix(path), ParseError);
    }
    SUBCASE("bad magic is rejected") {
        std::ofstream f(path, std::ios::binary);
        f << "NOTMAGIC and then some bytes to pass the size check padding padding";
        f.close();
        CHECK_THROWS_AS(read_matrix(path), ParseError);
    }
    std::remove(path.c_str());
}

TEST_CASE("recording round trips") {
    SUBCASE("header-only recording") {
        const Recording rec = sample_recording(0, false);
        const std::string path = "recording_empty_test.txt";
        write_recording(rec, path);
        const auto back = read_recording(path);
        CHECK(back.frames.empty());
        CHECK(back.geometry.hash() == rec.geometry.hash());
        CHECK(back.marker_count() == 6);
        std::remove(path.c_str());
    }
    SUBCASE("100 frames round trip bitwise") {
        const Recording rec = sample_recording(100, true);
        const std::string path = "recording_roundtrip_test.txt";
        write_recording(rec, path);
        const auto back = read_recording(path);
        REQUIRE(back.frames.size() == 100);
        CHECK(back.has_forces);
        CHECK(back.has_flags);
        CHECK(back.has_mu);
        for (std::size_t f = 0; f < 100; ++f) {
            const auto& a = rec.frames[f];
            const auto& b = back.frames[f];
            CHECK(a.frame_index == b.frame_index);
            CHECK(a.timestamp_s == b.timestamp_s);
            for (int m = 0; m < 6; ++m) {
                CHECK((a.positions[m] - b.positions[m]).norm() == 0.0);
                CHECK((a.displacements[m] - b.displacements[m]).norm() == 0.0);
                CHECK((a.forces[m] - b.forces[m]).norm() == 0.0);
                CHECK(a.contact[m] == b.contact[m]);
                CHECK(a.slip[m] == b.slip[m]);
                if (std::isnan(a.mu[m])) CHECK(std::isnan(b.mu[m]));
                else CHECK(a.mu[m] == b.mu[m]);
            }
        }
        // second write is byte-identical
        const std::string path2 = "recording_roundtrip_test2.txt";
        write_recording(back, path2);
        CHECK(slurp(path) == slurp(path2));
        std::remove(path.c_str());
        std::remove(path2.c_str());
    }
    SUBCASE("flat geometry with infinite radius survives the trip") {
        Recording rec = sample_recording(1, false);
        rec.geometry.radius_mm = std::numeric_limits<double>::infinity();
        rec.geometry_hash = rec.geometry.hash();
        const std::string path = "recording_flat_test.txt";
        write_recording(rec, path);
        const auto back = read_recording(path);
        CHECK(std::isinf(back.geometry.radius_mm));
        std::remove(path.c_str());
    }
    SUBCASE("unknown header lines and extra columns are preserved") {
        Recording rec = sample_recording(2, false);
        rec.unknown_header_lines.push_back("future_key some value 42");
        rec.extra_columns.push_back("confidence");
        for (auto& fr : rec.frames) {
            fr.extras.resize(6);
            for (int m = 0; m < 6; ++m) fr.extras[m] = {0.5 + m};
        }
        const std::string path = "recording_extra_test.txt";
        write_recording(rec, path);
        const auto back = read_recording(path);
        REQUIRE(back.unknown_header_lines.size() == 1);
        CHECK(back.unknown_header_lines[0] == "future_key some value 42");
        REQUIRE(back.extra_columns.size() == 1);
        CHECK(back.extra_columns[0] == "confidence");
        CHECK(back.frames[1].extras[3][0] == 3.5);
        // and the re-write is identical
        const std::string path2 = "recording_extra_test2.txt";
        write_recording(back, path2);
        CHECK(slurp(path) == slurp(path2));
        std::remove(path.c_str());
        std::remove(path2.c_str());
    }
}

TEST_CASE("recording parse failures carry locations") {
    const Recording rec = sample_recording(3, false);
    const std::string path = "recording_parse_test.txt";
    write_recording(rec, path);

    SUBCASE("truncated frame names the offender") {
        std::string body = slurp(path);
        body.resize(body.size() - 40);  // cut into the last frame
        std::ofstream(path) << body;
        try {
            read_recording(path);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("frame 4") != std::string::npos);
            CHECK(e.line > 0);
        }
    }
    SUBCASE("version mismatch is its own error") {
        std::string body = slurp(path);
        body.replace(body.find("tac3d_recording 1"), 17, "tac3d_recording 9");
        std::ofstream(path) << body;
        CHECK_THROWS_AS(read_recording(path), VersionMismatch);
    }
    SUBCASE("non-increasing frame indices are rejected") {
        std::string body = slurp(path);
        const auto pos = body.find("frame 4");
        body.replace(pos, 7, "frame 0");
        std::ofstream(path) << body;
        CHECK_THROWS_AS(read_recording(path), ParseError);
    }
    SUBCASE("hash mismatch against edited geometry is rejected") {
        std::string body = slurp(path);
        body.replace(body.find("thickness 3"), 11, "thickness 4");
        std::ofstream(path) << body;
        CHECK_THROWS_AS(read_recording(path), ParseError);
    }
    std::remove(path.c_str());
}

TEST_CASE("pose trajectory round trips") {
    std::vector<mapping::SensorPose> poses;
    Rng rng(77);
    for (int f = 0; f < 20; ++f) {
        mapping::SensorPose p;
        p.frame_index = f;
        p.timestamp_s = f / 24.0;
        p.transform.translation = Vec3(rng.normal(10), rng.normal(10), rng.normal(10));
        p.transform.rotation =
            Eigen::Quaterniond(Eigen::AngleAxisd(rng.uniform(0, 3),
                                                 Vec3(rng.normal(), rng.normal(), rng.normal())
                                                     .normalized()))
                .toRotationMatrix();
        poses.push_back(p);
    }
    const std::string path = "poses_roundtrip_test.txt";
    write_pose_trajectory(poses, path);
    const auto back = read_pose_trajectory(path);
    REQUIRE(back.size() == poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        CHECK(back[i].frame_index == poses[i].frame_index);
        CHECK(back[i].timestamp_s == poses[i].timestamp_s);
        CHECK((back[i].transform.translation - poses[i].transform.translation).norm() == 0.0);
        CHECK((back[i].transform.rotation - poses[i].transform.rotation).norm() < 1e-14);
    }
    std::remove(path.c_str());

    SUBCASE("non-unit quaternions are rejected") {
        const std::string bad = "poses_bad_test.txt";
        std::ofstream(bad) << "0 0.0 1 2 3 2 0 0 0\n";
        CHECK_THROWS_AS(read_pose_trajectory(bad), ParseError);
        std::remove(bad.c_str());
    }
}

TEST_CASE("geometry sidecar round trips") {
    elasticity::FingertipGeometry geom;
    geom.rows = 12;
    geom.cols = 10;
    geom.spacing_mm = 1.5;
    geom.side_mm = 30.0;
    geom.thickness_mm = 6.0;
    geom.radius_mm = 50.0;
    geom.subdivisions = 2;
    elasticity::Material mat;
    mat.young_kpa = 123.0;
    mat.poisson = 0.41;

    const std::string path = "geometry_sidecar_test.txt";
    write_geometry_file(geom, mat, path);
    elasticity::FingertipGeometry g2;
    elasticity::Material m2;
    read_geometry_file(path, g2, m2);
    CHECK(g2.hash() == geom.hash());
    CHECK(m2.young_kpa == mat.young_kpa);
    CHECK(m2.poisson == mat.poisson);
    std::remove(path.c_str());
}

TEST_CASE("crc32 matches the standard test vector") {
    const char* data = "123456789";
    CHECK(crc32(data, 9) == 0xCBF43926u);
}
