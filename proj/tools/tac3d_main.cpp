// Batch driver for the tactile pipeline: light-path design, conversion
// matrix construction, synthetic scenarios, force solving, friction
// reconstruction and throughput measurement. Diagnostics go to stderr,
// data to the requested output files.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "tac3d/contact.hpp"
#include "tac3d/elasticity.hpp"
#include "tac3d/forcesolve.hpp"
#include "tac3d/friction.hpp"
#include "tac3d/geometry.hpp"
#include "tac3d/mapping.hpp"
#include "tac3d/pipelineio.hpp"
#include "tac3d/simharness.hpp"

namespace {

using namespace tac3d;

struct Report {
    std::vector<std::pair<std::string, std::string>> entries;

    void add(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
    void add(const std::string& key, double value) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        entries.emplace_back(key, buf);
    }
    void write(const std::string& path) const {
        if (path.empty()) return;
        std::ofstream os(path);
        if (!os) throw IoFailure("cannot open report file: " + path);
        for (const auto& [k, v] : entries) os << k << ' ' << v << '\n';
    }
};

std::vector<Vec3> rest_markers(const elasticity::FingertipGeometry& geom) {
    std::vector<Vec3> rest(geom.marker_count());
    for (int r = 0; r < geom.rows; ++r)
        for (int c = 0; c < geom.cols; ++c) rest[r * geom.cols + c] = geom.marker_rest(r, c);
    return rest;
}

std::vector<Vec3> outward_reference(const elasticity::FingertipGeometry& geom) {
    std::vector<Vec3> out(geom.marker_count());
    const Vec3 center = geom.sphere_center();
    const auto rest = rest_markers(geom);
    for (int i = 0; i < geom.marker_count(); ++i)
        out[i] = std::isfinite(geom.radius_mm) ? (rest[i] - center).normalized() : Vec3::UnitZ();
    return out;
}

// per-marker compression noise floor from no-contact noisy frames
double noise_floor(const forcesolve::SolveKernel& kernel,
                   const contact::SurfaceNormals& normals, double sigma_mm, int frames,
                   std::uint64_t seed) {
    if (sigma_mm <= 0.0) return 0.0;
    const int n = kernel.marker_count;
    Rng rng(seed);
    double sq_sum = 0.0;
    long count = 0;
    for (int f = 0; f < frames; ++f) {
        VecX d(3 * n);
        for (int i = 0; i < 3 * n; ++i) d[i] = rng.normal(sigma_mm);
        const auto forces = forcesolve::solve_forces(kernel, d);
        for (int m = 0; m < n; ++m) {
            const double c = contact::compression(forces.at(m), normals.normals[m]);
            sq_sum += c * c;
            ++count;
        }
    }
    return std::sqrt(sq_sum / count);
}

VecX framed_displacements(const pipelineio::FrameRecord& fr) {
    const int n = static_cast<int>(fr.displacements.size());
    VecX d(3 * n);
    for (int m = 0; m < n; ++m)
        for (int a = 0; a < 3; ++a) d[elasticity::block_index(m, a, n)] = fr.displacements[m][a];
    return d;
}

int cmd_lightpath(const geometry::LightPathSpec& spec, const std::string& out,
                  const std::string& report_path) {
    const auto sol = geometry::solve_light_path(spec);
    if (!out.empty()) geometry::save_light_path(sol, out);
    std::fprintf(stderr, "achieved parallax %.6f deg, residual norm %.3e\n",
                 sol.achieved_parallax_deg, sol.residual.norm());
    Report rep;
    rep.add("achieved_parallax_deg", sol.achieved_parallax_deg);
    rep.add("residual_norm", sol.residual.norm());
    double worst = 0.0;
    for (double r : geometry::verify_light_path(sol)) worst = std::max(worst, std::abs(r));
    rep.add("verify_max_residual", worst);
    rep.write(report_path);
    return 0;
}

int cmd_build_h(const elasticity::FingertipGeometry& geom, const elasticity::Material& mat,
                const std::string& out, const std::string& report_path) {
    const auto mesh = elasticity::build_mesh(geom);
    std::fprintf(stderr, "mesh: %zu nodes, %zu elements\n", mesh.nodes.size(),
                 mesh.elements.size());
    const auto stiffness = elasticity::assemble_stiffness(mesh, mat);
    const auto h = elasticity::condense_conversion_matrix(stiffness, mesh);

    const double sym = (h.h - h.h.transpose()).norm() / h.h.norm();
    const double cond = forcesolve::condition_estimate(h.h);
    std::fprintf(stderr, "N=%d  symmetry residual %.3e  condition estimate %.3e\n",
                 h.marker_count, sym, cond);

    pipelineio::MatrixFile mf;
    mf.kind = pipelineio::MatrixFile::Kind::conversion;
    mf.marker_count = h.marker_count;
    mf.matrix = h.h;
    pipelineio::write_matrix(mf, out);
    pipelineio::write_geometry_file(geom, mat, out + ".geom");

    Report rep;
    rep.add("marker_count", static_cast<double>(h.marker_count));
    rep.add("symmetry_residual", sym);
    rep.add("condition_estimate", cond);
    rep.add("nodes", static_cast<double>(mesh.nodes.size()));
    rep.add("elements", static_cast<double>(mesh.elements.size()));
    rep.write(report_path);
    return 0;
}

elasticity::ConversionMatrix load_h(const std::string& h_path,
                                    elasticity::FingertipGeometry& geom,
                                    elasticity::Material& mat) {
    const auto mf = pipelineio::read_matrix(h_path);
    if (mf.kind != pipelineio::MatrixFile::Kind::conversion)
        throw Error("expected a conversion matrix file: " + h_path);
    pipelineio::read_geometry_file(h_path + ".geom", geom, mat);
    if (geom.marker_count() != mf.marker_count)
        throw DimensionMismatch("geometry sidecar disagrees with the matrix marker count");
    elasticity::ConversionMatrix h;
    h.h = mf.matrix;
    h.marker_count = mf.marker_count;
    return h;
}

int cmd_simulate(const std::string& scenario_path, const std::string& h_path,
                 const std::string& out_recording, const std::string& out_truth,
                 const std::string& out_poses, const std::string& report_path) {
    elasticity::FingertipGeometry geom;
    elasticity::Material mat;
    const auto h = load_h(h_path, geom, mat);
    const auto scenario = simharness::load_scenario(scenario_path);
    const auto frames = simulate_slide(geom, h, scenario);

    if (!out_poses.empty()) pipelineio::write_pose_trajectory(scenario.poses, out_poses);

    const int n = geom.marker_count();
    const auto rest = rest_markers(geom);
    pipelineio::Recording measured, truth;
    measured.geometry = truth.geometry = geom;
    measured.h_file = truth.h_file = h_path;
    measured.pose_file = truth.pose_file = out_poses;
    measured.displacement_noise_mm = scenario.displacement_noise_mm;
    truth.has_forces = true;
    truth.has_flags = true;
    truth.has_mu = true;

    long contact_total = 0, slip_total = 0;
    for (const auto& fr : frames) {
        pipelineio::FrameRecord tr;
        tr.frame_index = fr.frame_index;
        tr.timestamp_s = fr.timestamp_s;
        tr.positions = fr.marker_positions;
        tr.displacements.resize(n);
        tr.forces.resize(n);
        tr.contact = fr.contact;
        tr.slip = fr.slip;
        tr.mu = fr.mu;
        for (int m = 0; m < n; ++m) {
            for (int a = 0; a < 3; ++a) {
                tr.displacements[m][a] = fr.displacements[elasticity::block_index(m, a, n)];
                tr.forces[m][a] = fr.forces[elasticity::block_index(m, a, n)];
            }
            contact_total += fr.contact[m];
            slip_total += fr.slip[m];
        }
        truth.frames.push_back(tr);

        pipelineio::FrameRecord mr;
        mr.frame_index = fr.frame_index;
        mr.timestamp_s = fr.timestamp_s;
        const VecX noisy = simharness::add_noise(
            fr.displacements, scenario.displacement_noise_mm,
            scenario.seed + static_cast<std::uint64_t>(fr.frame_index));
        mr.positions.resize(n);
        mr.displacements.resize(n);
        for (int m = 0; m < n; ++m) {
            for (int a = 0; a < 3; ++a)
                mr.displacements[m][a] = noisy[elasticity::block_index(m, a, n)];
            mr.positions[m] = rest[m] + mr.displacements[m];
        }
        measured.frames.push_back(mr);
    }
    if (!out_recording.empty()) pipelineio::write_recording(measured, out_recording);
    if (!out_truth.empty()) pipelineio::write_recording(truth, out_truth);
    std::fprintf(stderr, "simulated %zu frames, %ld contact markers, %ld slip markers\n",
                 frames.size(), contact_total, slip_total);

    Report rep;
    rep.add("frames", static_cast<double>(frames.size()));
    rep.add("contact_marker_total", static_cast<double>(contact_total));
    rep.add("slip_marker_total", static_cast<double>(slip_total));
    rep.write(report_path);
    return 0;
}

int cmd_solve(const std::string& recording_path, const std::string& k_path,
              const std::string& h_path, double weight, bool sweep,
              const std::string& truth_path, const std::string& out,
              const std::string& report_path, std::uint64_t seed) {
    auto rec = pipelineio::read_recording(recording_path);
    const int n = rec.marker_count();

    forcesolve::SolveKernel kernel;
    Report rep;
    if (!k_path.empty()) {
        const auto mf = pipelineio::read_matrix(k_path);
        if (mf.kind != pipelineio::MatrixFile::Kind::kernel)
            throw Error("expected a kernel file: " + k_path);
        kernel.k = mf.matrix;
        kernel.marker_count = mf.marker_count;
        kernel.weight = mf.weight;
    } else {
        elasticity::FingertipGeometry geom;
        elasticity::Material mat;
        const auto h = load_h(h_path, geom, mat);
        if (sweep) {
            // synthetic localized presses exercise the same noise level as
            // the recording
            Rng rng(seed);
            std::vector<VecX> trials;
            const auto rest = rest_markers(geom);
            for (int t = 0; t < 5; ++t) {
                VecX f = VecX::Zero(3 * n);
                const int center = static_cast<int>(rng.uniform(0, n));
                for (int m = 0; m < n; ++m) {
                    const double d2 = (rest[m] - rest[center]).squaredNorm();
                    const double amp = 0.05 * std::exp(-d2 / (2.0 * 4.0));
                    f[elasticity::block_index(m, 2, n)] -= amp;
                    f[elasticity::block_index(m, 0, n)] += 0.3 * amp;
                }
                trials.push_back(f);
            }
            const auto swept = forcesolve::sweep_regularizer(
                h, rec.displacement_noise_mm, trials, seed);
            weight = swept.best_weight;
            std::fprintf(stderr, "sweep selected w = %.3e\n", weight);
            rep.add("swept_weight", weight);
        }
        kernel = forcesolve::build_kernel(h, forcesolve::Regularizer{weight});
    }
    if (kernel.k.cols() != 3 * n)
        throw DimensionMismatch("kernel dimension does not match the recording marker count");

    pipelineio::Recording truth;
    const bool have_truth = !truth_path.empty();
    if (have_truth) truth = pipelineio::read_recording(truth_path);

    const auto outward = outward_reference(rec.geometry);
    rec.has_forces = true;
    double err_rel_sum = 0.0;
    Vec3 resultant_err_max = Vec3::Zero();
    for (std::size_t t = 0; t < rec.frames.size(); ++t) {
        auto& fr = rec.frames[t];
        const auto forces = forcesolve::solve_forces(kernel, framed_displacements(fr),
                                                     fr.frame_index);
        fr.forces.resize(n);
        for (int m = 0; m < n; ++m) fr.forces[m] = forces.at(m);
        if (have_truth && t < truth.frames.size()) {
            VecX ft(3 * n);
            for (int m = 0; m < n; ++m)
                for (int a = 0; a < 3; ++a)
                    ft[elasticity::block_index(m, a, n)] = truth.frames[t].forces[m][a];
            const double denom = std::max(ft.norm(), 1e-12);
            err_rel_sum += (forces.f - ft).norm() / denom;
            forcesolve::ForceField tf;
            tf.f = ft;
            tf.marker_count = n;
            const Vec3 dr = (forcesolve::resultant(forces) - forcesolve::resultant(tf)).cwiseAbs();
            resultant_err_max = resultant_err_max.cwiseMax(dr);
        }
    }

    // contact threshold hint for downstream reconstruction
    contact::SurfaceNormals normals;
    normals.normals = outward;
    const double floor =
        noise_floor(kernel, normals, rec.displacement_noise_mm, 100, seed + 17);
    rec.contact_threshold_hint = std::max(5.0 * floor, 1e-4);

    if (!out.empty()) pipelineio::write_recording(rec, out);
    std::fprintf(stderr, "solved %zu frames (w=%.3e), contact threshold hint %.3e N\n",
                 rec.frames.size(), kernel.weight, rec.contact_threshold_hint);

    rep.add("frames", static_cast<double>(rec.frames.size()));
    rep.add("weight", kernel.weight);
    rep.add("contact_threshold_hint", rec.contact_threshold_hint);
    if (have_truth) {
        rep.add("mean_relative_force_error", err_rel_sum / std::max<std::size_t>(1, rec.frames.size()));
        rep.add("resultant_error_x", resultant_err_max.x());
        rep.add("resultant_error_y", resultant_err_max.y());
        rep.add("resultant_error_z", resultant_err_max.z());
    }
    rep.write(report_path);
    return 0;
}

void write_empty_ply(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoFailure("cannot open for writing: " + path);
    os << "ply\nformat ascii 1.0\nelement vertex 0\n"
          "property float x\nproperty float y\nproperty float z\n"
          "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
}

int cmd_reconstruct(const std::string& recording_path, const std::string& poses_path,
                    double contact_threshold, const friction::FrictionParams& params,
                    double voxel_edge, const std::string& out_ply,
                    const std::string& report_path) {
    const auto rec = pipelineio::read_recording(recording_path);
    if (!rec.has_forces)
        throw Error("reconstruction needs a recording with solved forces");
    const auto poses = pipelineio::read_pose_trajectory(
        poses_path.empty() ? rec.pose_file : poses_path);
    std::map<long, const mapping::SensorPose*> pose_of;
    for (const auto& p : poses) pose_of[p.frame_index] = &p;

    if (contact_threshold <= 0.0) contact_threshold = rec.contact_threshold_hint;
    if (contact_threshold <= 0.0) contact_threshold = 1e-4;

    const int n = rec.marker_count();
    const auto outward = outward_reference(rec.geometry);

    struct FrameState {
        std::vector<Vec3> global;
        std::vector<bool> contact;
        contact::SurfaceNormals normals;
        forcesolve::ForceField forces;
    };

    mapping::GlobalCloud cloud;
    std::vector<friction::SlipSample> samples;
    FrameState prev;
    bool have_prev = false;
    for (const auto& fr : rec.frames) {
        const auto it = pose_of.find(fr.frame_index);
        if (it == pose_of.end())
            throw Error("no pose for frame " + std::to_string(fr.frame_index));
        FrameState cur;
        cur.normals = contact::estimate_normals(fr.positions, 9, outward);
        cur.forces.marker_count = n;
        cur.forces.frame_index = fr.frame_index;
        cur.forces.f.resize(3 * n);
        for (int m = 0; m < n; ++m)
            for (int a = 0; a < 3; ++a)
                cur.forces.f[elasticity::block_index(m, a, n)] = fr.forces[m][a];
        const auto mask = contact::detect_contact(cur.forces, cur.normals, contact_threshold);
        cur.contact = mask.mask;
        cur.global = mapping::to_global(fr.positions, *it->second);

        std::vector<Vec3> contact_points;
        for (int m = 0; m < n; ++m)
            if (cur.contact[m]) contact_points.push_back(cur.global[m]);
        mapping::accumulate(cloud, contact_points, fr.frame_index);

        if (have_prev) {
            const auto slip = friction::detect_slip(prev.global, cur.global, prev.contact,
                                                    cur.contact, params.slip_threshold_mm);
            for (int m = 0; m < n; ++m) {
                if (!slip[m]) continue;
                const Vec3 f = cur.forces.at(m);
                const double compression = contact::compression(f, cur.normals.normals[m]);
                if (compression <= 0.0) continue;  // dropped, not clamped
                friction::SlipSample s;
                s.position = cur.global[m];
                s.mu = friction::preliminary_mu(f, cur.normals.normals[m]);
                s.frame_index = fr.frame_index;
                s.normal_newton = compression;
                samples.push_back(s);
            }
        }
        prev = std::move(cur);
        have_prev = true;
    }

    if (cloud.points.empty()) {
        std::fprintf(stderr, "warning: no contact markers found; writing an empty cloud\n");
        if (!out_ply.empty()) write_empty_ply(out_ply);
        Report rep;
        rep.add("surface_points", 0.0);
        rep.add("slip_samples", 0.0);
        rep.write(report_path);
        return 0;
    }

    mapping::GlobalCloud resampled = mapping::voxel_resample(cloud, voxel_edge);
    const auto fc = friction::smooth_mu(resampled.points, samples, params);
    long defined = 0, high = 0, medium = 0, low = 0;
    for (std::size_t i = 0; i < fc.points.size(); ++i) {
        resampled.mu[i] = fc.mu[i];
        if (!fc.defined(i)) continue;
        ++defined;
        switch (friction::classify_band(fc.mu[i])) {
            case friction::Band::high: ++high; break;
            case friction::Band::medium: ++medium; break;
            case friction::Band::low: ++low; break;
        }
    }
    if (!out_ply.empty()) mapping::export_ply(resampled, out_ply);
    std::fprintf(stderr,
                 "cloud: %zu raw, %zu resampled, %zu slip samples; bands h/m/l = %ld/%ld/%ld, "
                 "undefined %ld\n",
                 cloud.points.size(), resampled.points.size(), samples.size(), high, medium, low,
                 static_cast<long>(fc.points.size()) - defined);

    Report rep;
    rep.add("surface_points", static_cast<double>(resampled.points.size()));
    rep.add("slip_samples", static_cast<double>(samples.size()));
    rep.add("defined_points", static_cast<double>(defined));
    rep.add("band_high", static_cast<double>(high));
    rep.add("band_medium", static_cast<double>(medium));
    rep.add("band_low", static_cast<double>(low));
    rep.write(report_path);
    return 0;
}

int cmd_bench(const std::string& k_path, int frames, int warmup, const std::string& report_path,
              std::uint64_t seed) {
    const auto mf = pipelineio::read_matrix(k_path);
    if (mf.kind != pipelineio::MatrixFile::Kind::kernel &&
        mf.kind != pipelineio::MatrixFile::Kind::conversion)
        throw Error("bench: unrecognized matrix kind");
    forcesolve::SolveKernel kernel;
    if (mf.kind == pipelineio::MatrixFile::Kind::conversion) {
        elasticity::ConversionMatrix h;
        h.h = mf.matrix;
        h.marker_count = mf.marker_count;
        kernel = forcesolve::build_kernel(h, forcesolve::Regularizer{1e-6});
    } else {
        kernel.k = mf.matrix;
        kernel.marker_count = mf.marker_count;
        kernel.weight = mf.weight;
    }
    const int n = kernel.marker_count;

    contact::SurfaceNormals normals;
    elasticity::FingertipGeometry geom;
    elasticity::Material mat;
    try {
        pipelineio::read_geometry_file(k_path + ".geom", geom, mat);
        normals.normals = outward_reference(geom);
    } catch (const IoFailure&) {
        normals.normals.assign(n, Vec3::UnitZ());
    }

    Rng rng(seed);
    std::vector<VecX> inputs(static_cast<std::size_t>(frames + warmup));
    for (auto& d : inputs) {
        d.resize(3 * n);
        for (int i = 0; i < 3 * n; ++i) d[i] = rng.normal(0.01);
    }

    double sink = 0.0;
    std::chrono::steady_clock::time_point t0;
    for (int f = 0; f < frames + warmup; ++f) {
        if (f == warmup) t0 = std::chrono::steady_clock::now();
        const auto forces = forcesolve::solve_forces(kernel, inputs[f]);
        const auto mask = contact::detect_contact(forces, normals, 1e-3);
        for (int m = 0; m < n; ++m) {
            const auto dec = contact::decompose_force(forces.at(m), normals.normals[m]);
            sink += dec.normal_newton + mask.mask[m];
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double hz = frames / secs;
    std::fprintf(stderr, "bench: N=%d, %d frames in %.3f s -> %.1f Hz (checksum %.3g)\n", n,
                 frames, secs, hz, sink);

    Report rep;
    rep.add("marker_count", static_cast<double>(n));
    rep.add("frames", static_cast<double>(frames));
    rep.add("warmup_excluded", static_cast<double>(warmup));
    rep.add("throughput_hz", hz);
    rep.write(report_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"virtual-binocular tactile sensing pipeline"};
    app.require_subcommand(1);
    app.set_config("--config");

    // lightpath
    auto* lp = app.add_subcommand("lightpath", "solve the mirror layout and virtual cameras");
    geometry::LightPathSpec spec;
    std::string lp_out, lp_report;
    lp->add_option("--camera-distance", spec.camera_distance_mm, "camera to elastic body, mm");
    lp->add_option("--fov", spec.fov_deg, "camera field of view, degrees");
    lp->add_option("--length", spec.fingertip_length_mm, "fingertip length, mm");
    lp->add_option("--thickness", spec.fingertip_thickness_mm, "fingertip thickness, mm");
    lp->add_option("--parallax", spec.parallax_deg, "target parallax angle, degrees");
    lp->add_option("--out", lp_out, "light path output file");
    lp->add_option("--report", lp_report, "machine readable summary");

    // build-h
    auto* bh = app.add_subcommand("build-h", "build the force-to-displacement matrix");
    elasticity::FingertipGeometry geom;
    elasticity::Material mat;
    std::string bh_out = "H.bin", bh_report;
    bh->add_option("--rows", geom.rows, "marker rows");
    bh->add_option("--cols", geom.cols, "marker cols");
    bh->add_option("--spacing", geom.spacing_mm, "marker spacing, mm");
    bh->add_option("--side", geom.side_mm, "sensing side length, mm");
    bh->add_option("--thickness", geom.thickness_mm, "fingertip thickness, mm");
    bh->add_option("--radius", geom.radius_mm, "outer surface radius, mm (inf = flat)");
    bh->add_option("--subdivisions", geom.subdivisions, "elements per marker spacing");
    bh->add_option("--young", mat.young_kpa, "Young's modulus, kPa");
    bh->add_option("--poisson", mat.poisson, "Poisson ratio");
    bh->add_option("--out", bh_out, "output matrix file");
    bh->add_option("--report", bh_report, "machine readable summary");

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a synthetic scenario against ground truth");
    std::string sim_scenario, sim_h = "H.bin", sim_rec = "recording.txt",
                sim_truth = "truth.txt", sim_poses = "poses.txt", sim_report;
    sim->add_option("--scenario", sim_scenario, "scenario description file")->required();
    sim->add_option("--h", sim_h, "conversion matrix file");
    sim->add_option("--out-recording", sim_rec, "measured (noisy) recording");
    sim->add_option("--out-truth", sim_truth, "ground truth recording");
    sim->add_option("--out-poses", sim_poses, "pose trajectory output");
    sim->add_option("--report", sim_report, "machine readable summary");

    // solve
    auto* sv = app.add_subcommand("solve", "recover forces from a recording");
    std::string sv_rec, sv_k, sv_h = "H.bin", sv_truth, sv_out = "solved.txt", sv_report;
    double sv_w = 0.0;
    bool sv_sweep = false;
    std::uint64_t sv_seed = 1;
    sv->add_option("--recording", sv_rec, "input recording")->required();
    sv->add_option("--k", sv_k, "precomputed kernel file");
    sv->add_option("--h", sv_h, "conversion matrix file (used when no kernel given)");
    sv->add_option("--w", sv_w, "regularizer weight");
    sv->add_flag("--sweep", sv_sweep, "select w by sweeping against synthetic noise");
    sv->add_option("--truth", sv_truth, "ground truth recording for error reporting");
    sv->add_option("--out", sv_out, "output recording with forces");
    sv->add_option("--seed", sv_seed, "seed for sweep and threshold estimation");
    sv->add_option("--report", sv_report, "machine readable summary");

    // reconstruct
    auto* rc = app.add_subcommand("reconstruct", "build the friction-colored surface cloud");
    std::string rc_rec, rc_poses, rc_ply = "surface.ply", rc_report;
    friction::FrictionParams params;
    double rc_threshold = 0.0, rc_voxel = 0.5;
    rc->add_option("--recording", rc_rec, "recording with solved forces")->required();
    rc->add_option("--poses", rc_poses, "pose trajectory (default: recording reference)");
    rc->add_option("--contact-threshold", rc_threshold,
                   "normal force threshold, N (default: recording hint)");
    rc->add_option("--slip-threshold", params.slip_threshold_mm, "slip distance per frame, mm");
    rc->add_option("--r", params.radius_mm, "smoothing neighborhood radius, mm");
    rc->add_option("--alpha", params.alpha, "distance exponent");
    rc->add_option("--beta", params.beta, "value exponent");
    rc->add_option("--voxel", rc_voxel, "resampling voxel edge, mm");
    rc->add_option("--out-ply", rc_ply, "colored point cloud output");
    rc->add_option("--report", rc_report, "machine readable summary");

    // bench
    auto* bn = app.add_subcommand("bench", "per-frame solve throughput");
    std::string bn_k, bn_report;
    int bn_frames = 500, bn_warmup = 10;
    std::uint64_t bn_seed = 1;
    bn->add_option("--k", bn_k, "kernel (or conversion) matrix file")->required();
    bn->add_option("--frames", bn_frames, "timed frames");
    bn->add_option("--warmup", bn_warmup, "untimed warm-up frames");
    bn->add_option("--seed", bn_seed, "input generation seed");
    bn->add_option("--report", bn_report, "machine readable summary");

    // build-k: persist a kernel for bench/solve
    auto* bk = app.add_subcommand("build-k", "precompute and store the solve kernel");
    std::string bk_h = "H.bin", bk_out = "K.bin", bk_report;
    double bk_w = 0.0;
    bk->add_option("--h", bk_h, "conversion matrix file");
    bk->add_option("--w", bk_w, "regularizer weight");
    bk->add_option("--out", bk_out, "output kernel file");
    bk->add_option("--report", bk_report, "machine readable summary");

    CLI11_PARSE(app, argc, argv);

    try {
        if (lp->parsed()) return cmd_lightpath(spec, lp_out, lp_report);
        if (bh->parsed()) return cmd_build_h(geom, mat, bh_out, bh_report);
        if (sim->parsed())
            return cmd_simulate(sim_scenario, sim_h, sim_rec, sim_truth, sim_poses, sim_report);
        if (sv->parsed())
            return cmd_solve(sv_rec, sv_k, sv_h, sv_w, sv_sweep, sv_truth, sv_out, sv_report,
                             sv_seed);
        if (rc->parsed())
            return cmd_reconstruct(rc_rec, rc_poses, rc_threshold, params, rc_voxel, rc_ply,
                                   rc_report);
        if (bn->parsed()) return cmd_bench(bn_k, bn_frames, bn_warmup, bn_report, bn_seed);
        if (bk->parsed()) {
            elasticity::FingertipGeometry g;
            elasticity::Material m;
            const auto h = load_h(bk_h, g, m);
            const auto kernel = forcesolve::build_kernel(h, forcesolve::Regularizer{bk_w});
            pipelineio::MatrixFile mf;
            mf.kind = pipelineio::MatrixFile::Kind::kernel;
            mf.marker_count = kernel.marker_count;
            mf.weight = kernel.weight;
            mf.matrix = kernel.k;
            pipelineio::write_matrix(mf, bk_out);
            pipelineio::write_geometry_file(g, m, bk_out + ".geom");
            std::fprintf(stderr, "kernel written: N=%d, w=%.3e\n", kernel.marker_count,
                         kernel.weight);
            Report rep;
            rep.add("marker_count", static_cast<double>(kernel.marker_count));
            rep.add("weight", kernel.weight);
            rep.write(bk_report);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
