#include "tac3d/simharness.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace tac3d::simharness {

namespace {

double capsule_sdf(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
    const Vec3 ab = b - a;
    const double t = std::clamp(ab.dot(p - a) / ab.squaredNorm(), 0.0, 1.0);
    return (p - (a + t * ab)).norm() - r;
}

double box_sdf(const Vec3& p, const Vec3& c, const Vec3& half) {
    const Vec3 q = (p - c).cwiseAbs() - half;
    const Vec3 qpos = q.cwiseMax(0.0);
    return qpos.norm() + std::min(q.maxCoeff(), 0.0);
}

}  // namespace

double Shape::sdf(const Vec3& p) const {
    switch (kind) {
        case ShapeKind::plane: return b.dot(p - a);
        case ShapeKind::sphere: return (p - a).norm() - radius;
        case ShapeKind::box: return box_sdf(p, a, half);
        case ShapeKind::capsule: return capsule_sdf(p, a, b, radius);
    }
    return 0.0;
}

bool MuRegion::contains(const Vec3& p) const {
    if (kind == Kind::halfspace) return normal.dot(p) >= offset;
    const Vec3 rel = p - center;
    const Vec3 in_plane = rel - axis.normalized() * rel.dot(axis.normalized());
    if (in_plane.norm() < 1e-12) return false;
    const Vec3 u = ref.normalized();
    const Vec3 v = axis.normalized().cross(u);
    double ang = rad2deg(std::atan2(in_plane.dot(v), in_plane.dot(u)));
    if (ang < 0) ang += 360.0;
    return ang >= angle_lo_deg && ang <= angle_hi_deg;
}

double SyntheticObject::sdf(const Vec3& p) const {
    double d = std::numeric_limits<double>::infinity();
    for (const Shape& s : shapes) d = std::min(d, s.sdf(p));
    return d;
}

Vec3 SyntheticObject::outward_normal(const Vec3& p) const {
    const double h = 1e-5;
    Vec3 g;
    for (int a = 0; a < 3; ++a) {
        Vec3 hi = p, lo = p;
        hi[a] += h;
        lo[a] -= h;
        g[a] = sdf(hi) - sdf(lo);
    }
    const double n = g.norm();
    if (n < 1e-14) return Vec3::UnitZ();
    return g / n;
}

double SyntheticObject::mu_at(const Vec3& p) const {
    for (const MuRegion& r : regions)
        if (r.contains(p)) return r.mu;
    return mu_default;
}

void Scenario::validate() const {
    if (!(frame_rate_hz > 0.0)) throw Error("scenario: frame rate must be positive");
    if (poses.empty()) throw Error("scenario: needs at least one frame pose");
    if (poses.size() != depths.size())
        throw Error("scenario: pose and depth counts differ");
    for (double d : depths)
        if (d < 0.0) throw Error("scenario: indentation depth must be >= 0");
    if (object.shapes.empty()) throw Error("scenario: object has no shapes");
}

namespace {

struct ContactState {
    VecX forces;  // 3N sensor frame, axis-blocked
    std::vector<double> phi;
    std::vector<bool> contact;
    std::vector<double> mu;
};

// Quasi-static penalty contact consistent with the compliance H. Per outer
// pass the normal magnitudes are solved from the linearized displacement
// response (penalty stiffness = inverse of the per-marker normal compliance),
// then geometry, normals and tangential forces are refreshed.
ContactState solve_contact(const elasticity::FingertipGeometry& geom,
                           const elasticity::ConversionMatrix& h, const SyntheticObject& object,
                           const RigidTransform& pose,
                           const std::vector<Vec3>& slip_dir_sensor,  // unit or zero
                           const std::vector<double>& tangential_motion_mm,
                           double slip_threshold_mm, const ContactSolveOptions& opts,
                           std::vector<bool>* slip_out) {
    const int n = h.marker_count;
    std::vector<Vec3> rest(n);
    for (int r = 0; r < geom.rows; ++r)
        for (int c = 0; c < geom.cols; ++c) rest[r * geom.cols + c] = geom.marker_rest(r, c);

    ContactState st;
    st.forces = VecX::Zero(3 * n);
    st.phi.assign(n, 0.0);
    st.contact.assign(n, false);
    st.mu.assign(n, 0.0);
    if (slip_out) slip_out->assign(n, false);

    const auto block = [&](int m, int a) { return elasticity::block_index(m, a, n); };
    // 3x3 compliance block between two markers; the axis-blocked layout
    // strides rows by n, so this gathers explicitly
    const auto h_block = [&](int mi, int mj) {
        Mat3 out;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) out(a, b) = h.h(block(mi, a), block(mj, b));
        return out;
    };
    VecX d_prev = VecX::Zero(3 * n);

    for (int outer = 0; outer < opts.max_iterations; ++outer) {
        const VecX d = h.h * st.forces;
        std::vector<Vec3> pos_sensor(n), pos_global(n);
        for (int m = 0; m < n; ++m) {
            pos_sensor[m] =
                rest[m] + Vec3(d[block(m, 0)], d[block(m, 1)], d[block(m, 2)]);
            pos_global[m] = pose.apply(pos_sensor[m]);
        }

        // tangential-only displacement sets the reference penetration for the
        // linear normal solve
        VecX f_tan = VecX::Zero(3 * n);
        std::vector<Vec3> n_sensor(n, Vec3::UnitZ());
        std::vector<int> active;
        std::vector<double> pen_ref;
        {
            // evaluate candidate set and normals at current positions
            for (int m = 0; m < n; ++m) {
                const double s = object.sdf(pos_global[m]);
                const Vec3 ng = object.outward_normal(pos_global[m]);
                n_sensor[m] = pose.rotation.transpose() * ng;
                // candidate if currently penetrating or currently loaded
                if (s < 0.0 || st.phi[m] > 0.0) {
                    // penetration the marker would see with its normal load removed:
                    // take the geometric penetration at displaced-without-normal-load.
                    active.push_back(m);
                }
            }
        }

        // tangential forces from the previous normal magnitudes; the friction
        // field is looked up at the commanded marker position so a sharp
        // material boundary cannot oscillate with the elastic shift
        std::vector<double> mu_here(n, 0.0);
        for (int m = 0; m < n; ++m) {
            if (st.phi[m] <= 0.0) continue;
            mu_here[m] = object.mu_at(pose.apply(rest[m]));
            const Vec3& dir = slip_dir_sensor[m];
            if (dir.squaredNorm() < 1e-20) continue;
            const double cap = mu_here[m] * st.phi[m];
            double mag;
            if (tangential_motion_mm[m] >= slip_threshold_mm) {
                mag = cap;  // kinetic friction, exactly at the Coulomb cone
            } else {
                const double c_n =
                    std::max(1e-12, n_sensor[m].dot(h_block(m, m) * n_sensor[m]));
                // reuse the normal penalty stiffness as the tangential one
                mag = std::min(tangential_motion_mm[m] / c_n, cap);
            }
            const Vec3 ft = -mag * dir;
            for (int a = 0; a < 3; ++a) f_tan[block(m, a)] = ft[a];
        }

        // reference penetration with only tangential forces applied
        const VecX d_tan = h.h * f_tan;
        pen_ref.resize(active.size());
        for (std::size_t i = 0; i < active.size(); ++i) {
            const int m = active[i];
            const Vec3 p = rest[m] + Vec3(d_tan[block(m, 0)], d_tan[block(m, 1)],
                                          d_tan[block(m, 2)]);
            pen_ref[i] = -object.sdf(pose.apply(p));
        }

        // solve the coupled penalty system on the active set, dropping
        // separated markers until all magnitudes are non-negative
        std::vector<double> phi_new(n, 0.0);
        std::vector<int> set;
        for (std::size_t i = 0; i < active.size(); ++i)
            if (pen_ref[i] > 0.0) set.push_back(static_cast<int>(i));
        while (!set.empty()) {
            const int m_sz = static_cast<int>(set.size());
            MatX g(m_sz, m_sz);
            VecX rhs(m_sz);
            for (int i = 0; i < m_sz; ++i) {
                const int mi = active[set[i]];
                rhs[i] = pen_ref[set[i]];
                for (int j = 0; j < m_sz; ++j) {
                    const int mj = active[set[j]];
                    g(i, j) = n_sensor[mi].dot(h_block(mi, mj) * n_sensor[mj]);
                }
                // add diag(1/k): the penalty stiffness is the inverse of the
                // per-marker normal compliance, so 1/k_i equals the diagonal
                // coupling term just computed
                g(i, i) += g(i, i);
            }
            const VecX phi = g.ldlt().solve(rhs);
            int worst = -1;
            double worst_val = 0.0;
            for (int i = 0; i < m_sz; ++i)
                if (phi[i] < worst_val) {
                    worst_val = phi[i];
                    worst = i;
                }
            if (worst < 0) {
                for (int i = 0; i < m_sz; ++i) phi_new[active[set[i]]] = phi[i];
                break;
            }
            set.erase(set.begin() + worst);
        }

        // assemble the new force vector
        VecX f_new = f_tan;
        for (int m = 0; m < n; ++m) {
            if (phi_new[m] <= 0.0) continue;
            const Vec3 fn = phi_new[m] * n_sensor[m];
            for (int a = 0; a < 3; ++a) f_new[block(m, a)] += fn[a];
        }

        const VecX d_new = h.h * f_new;
        const double change = (d_new - d_prev).cwiseAbs().maxCoeff();
        st.forces = f_new;
        for (int m = 0; m < n; ++m) st.phi[m] = phi_new[m];
        d_prev = d_new;
        if (change <= opts.tolerance_mm) {
            for (int m = 0; m < n; ++m) {
                st.contact[m] = st.phi[m] > 0.0;
                st.mu[m] = st.contact[m] ? object.mu_at(pose.apply(rest[m])) : 0.0;
                if (slip_out)
                    (*slip_out)[m] =
                        st.contact[m] && tangential_motion_mm[m] >= slip_threshold_mm;
            }
            return st;
        }
    }
    throw NoConvergence("contact solve did not reach the displacement tolerance");
}

GroundTruthFrame make_frame(const elasticity::FingertipGeometry& geom,
                            const elasticity::ConversionMatrix& h, const ContactState& st,
                            const std::vector<bool>& slip, long index, double timestamp) {
    const int n = h.marker_count;
    GroundTruthFrame fr;
    fr.frame_index = index;
    fr.timestamp_s = timestamp;
    fr.forces = st.forces;
    fr.displacements = h.h * st.forces;
    fr.contact = st.contact;
    fr.slip = slip;
    fr.mu = st.mu;
    fr.marker_positions.resize(n);
    for (int r = 0; r < geom.rows; ++r)
        for (int c = 0; c < geom.cols; ++c) {
            const int m = r * geom.cols + c;
            fr.marker_positions[m] =
                geom.marker_rest(r, c) +
                Vec3(fr.displacements[elasticity::block_index(m, 0, n)],
                     fr.displacements[elasticity::block_index(m, 1, n)],
                     fr.displacements[elasticity::block_index(m, 2, n)]);
        }
    return fr;
}

RigidTransform advance_by_depth(const mapping::SensorPose& pose, double depth) {
    RigidTransform t = pose.transform;
    t.translation += t.rotation * Vec3(0, 0, depth);
    return t;
}

}  // namespace

GroundTruthFrame simulate_press(const elasticity::FingertipGeometry& geom,
                                const elasticity::ConversionMatrix& h,
                                const SyntheticObject& object, const mapping::SensorPose& pose,
                                double depth_mm, const ContactSolveOptions& opts) {
    if (depth_mm < 0.0) throw Error("press: depth must be >= 0");
    if (geom.marker_count() != h.marker_count)
        throw DimensionMismatch("press: geometry and conversion matrix disagree on N");
    const int n = h.marker_count;
    const std::vector<Vec3> zero_dirs(n, Vec3::Zero());
    const std::vector<double> zero_motion(n, 0.0);
    std::vector<bool> slip;
    const ContactState st =
        solve_contact(geom, h, object, advance_by_depth(pose, depth_mm), zero_dirs, zero_motion,
                      0.1, opts, &slip);
    return make_frame(geom, h, st, slip, pose.frame_index, pose.timestamp_s);
}

GroundTruthFrame simulate_pin_array(const elasticity::FingertipGeometry& geom,
                                    const elasticity::ConversionMatrix& h, double pin_spacing_mm,
                                    int pin_rows, int pin_cols, double depth_mm,
                                    double pin_radius_mm, const ContactSolveOptions& opts) {
    if (!(pin_spacing_mm > 0.0)) throw Error("pin array: spacing must be positive");
    if (pin_rows < 1 || pin_cols < 1) throw Error("pin array: need at least one pin");
    // anchor the array on the marker nearest the apex so pins land on the
    // sampled grid rather than straddling it
    const Vec3 anchor = geom.marker_rest(geom.rows / 2, geom.cols / 2);
    SyntheticObject object;
    for (int r = 0; r < pin_rows; ++r)
        for (int c = 0; c < pin_cols; ++c) {
            const double x = anchor.x() + (c - (pin_cols - 1) / 2.0) * pin_spacing_mm;
            const double y = anchor.y() + (r - (pin_rows - 1) / 2.0) * pin_spacing_mm;
            Shape pin;
            pin.kind = ShapeKind::capsule;
            pin.a = Vec3(x, y, pin_radius_mm);   // tip sphere center; tip touches z = 0
            pin.b = Vec3(x, y, 20.0);
            pin.radius = pin_radius_mm;
            object.shapes.push_back(pin);
        }
    mapping::SensorPose pose;  // identity: pins above the apex
    return simulate_press(geom, h, object, pose, depth_mm, opts);
}

std::vector<GroundTruthFrame> simulate_slide(const elasticity::FingertipGeometry& geom,
                                             const elasticity::ConversionMatrix& h,
                                             const Scenario& scenario,
                                             const ContactSolveOptions& opts) {
    scenario.validate();
    if (geom.marker_count() != h.marker_count)
        throw DimensionMismatch("slide: geometry and conversion matrix disagree on N");
    const int n = h.marker_count;
    std::vector<Vec3> rest(n);
    for (int r = 0; r < geom.rows; ++r)
        for (int c = 0; c < geom.cols; ++c) rest[r * geom.cols + c] = geom.marker_rest(r, c);

    std::vector<GroundTruthFrame> frames;
    frames.reserve(scenario.poses.size());
    bool had_contact = false;
    for (std::size_t t = 0; t < scenario.poses.size(); ++t) {
        const RigidTransform eff = advance_by_depth(scenario.poses[t], scenario.depths[t]);

        // commanded per-marker motion relative to the fixed object, from the
        // previous frame's effective pose
        std::vector<Vec3> slip_dir(n, Vec3::Zero());
        std::vector<double> tan_motion(n, 0.0);
        if (t > 0) {
            const RigidTransform prev = advance_by_depth(scenario.poses[t - 1], scenario.depths[t - 1]);
            for (int m = 0; m < n; ++m) {
                const Vec3 g_now = eff.apply(rest[m]);
                const Vec3 motion = g_now - prev.apply(rest[m]);
                const Vec3 n_obj = scenario.object.outward_normal(g_now);
                const Vec3 tangential = motion - motion.dot(n_obj) * n_obj;
                tan_motion[m] = tangential.norm();
                if (tan_motion[m] > 1e-12)
                    slip_dir[m] = eff.rotation.transpose() * (tangential / tan_motion[m]);
            }
        }

        std::vector<bool> slip;
        const ContactState st = solve_contact(geom, h, scenario.object, eff, slip_dir, tan_motion,
                                              scenario.slip_threshold_mm, opts, &slip);
        bool any_contact = false;
        for (bool b : st.contact) any_contact |= b;
        if (!any_contact && had_contact)
            throw ContactLost("slide: contact lost at frame " + std::to_string(t),
                              static_cast<long>(t));
        had_contact |= any_contact;
        GroundTruthFrame fr = make_frame(geom, h, st, slip, static_cast<long>(t),
                                         scenario.poses[t].timestamp_s);
        frames.push_back(std::move(fr));
    }
    return frames;
}

VecX add_noise(const VecX& displacements, double sigma_mm, std::uint64_t seed) {
    if (sigma_mm < 0.0) throw Error("noise sigma must be >= 0");
    VecX out = displacements;
    if (sigma_mm == 0.0) return out;
    Rng rng(seed);
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += rng.normal(sigma_mm);
    return out;
}

namespace {

// Launch direction from a camera center below the optical stack to a marker
// inside the silicone, bending at the glass/air and silicone/glass planes.
// The path stays in the vertical plane through both points; the launch angle
// from vertical is found by bisection on the horizontal reach.
Vec3 refracted_direction(const Vec3& cam, const Vec3& marker, const RefractionConfig& cfg) {
    const double z_sil = -cfg.silicone_thickness_mm;          // silicone/glass interface
    const double z_air = z_sil - cfg.glass_thickness_mm;      // glass/air interface
    if (cam.z() >= z_air || marker.z() <= z_sil)
        return (marker - cam).normalized();  // not a through-stack path

    Vec3 horiz = marker - cam;
    horiz.z() = 0.0;
    const double rho_target = horiz.norm();
    if (rho_target < 1e-12) return Vec3::UnitZ();
    const Vec3 e = horiz / rho_target;

    const double air_rise = z_air - cam.z();
    const double sil_rise = marker.z() - z_sil;
    const auto reach = [&](double theta) {
        const double s = std::sin(theta);
        const double sg = s / cfg.n_glass;
        const double ss = s / cfg.n_silicone;
        return air_rise * std::tan(theta) + cfg.glass_thickness_mm * sg / std::sqrt(1 - sg * sg) +
               sil_rise * ss / std::sqrt(1 - ss * ss);
    };
    double lo = 0.0, hi = kPi / 2 - 1e-6;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (reach(mid) < rho_target ? lo : hi) = mid;
    }
    const double theta = 0.5 * (lo + hi);
    return (std::sin(theta) * e + std::cos(theta) * Vec3::UnitZ()).normalized();
}

Vec2 render_one(const geometry::CameraModel& cam, const Vec3& marker,
                const RefractionConfig& cfg) {
    if (!cfg.enabled) return geometry::project(cam, marker);
    const Vec3 c = cam.center();
    const Vec3 dir = refracted_direction(c, marker, cfg);
    // project any point along the apparent straight ray
    return geometry::project(cam, c + (marker - c).norm() * dir);
}

}  // namespace

RenderResult render_markers(const geometry::LightPathSolution& solution,
                            const std::vector<Vec3>& marker_positions, double pixel_sigma,
                            std::uint64_t seed, const RefractionConfig& refraction) {
    if (pixel_sigma < 0.0) throw Error("render: pixel sigma must be >= 0");
    RenderResult out;
    const std::size_t n = marker_positions.size();
    out.camera1_px.resize(n, Vec2::Zero());
    out.camera2_px.resize(n, Vec2::Zero());
    out.visible.assign(n, true);
    Rng rng(seed);

    const double w = 2.0 * solution.real_camera.principal.x();
    const double hgt = 2.0 * solution.real_camera.principal.y();
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 p1, p2;
        try {
            p1 = render_one(solution.virtual_camera_1, marker_positions[i], refraction);
            p2 = render_one(solution.virtual_camera_2, marker_positions[i], refraction);
        } catch (const BehindCamera&) {
            out.visible[i] = false;
            continue;
        }
        if (p1.x() < 0 || p1.x() > w || p1.y() < 0 || p1.y() > hgt || p2.x() < 0 ||
            p2.x() > w || p2.y() < 0 || p2.y() > hgt) {
            out.visible[i] = false;
            continue;
        }
        out.camera1_px[i] = p1 + Vec2(rng.normal(pixel_sigma), rng.normal(pixel_sigma));
        out.camera2_px[i] = p2 + Vec2(rng.normal(pixel_sigma), rng.normal(pixel_sigma));
    }
    return out;
}

std::vector<std::pair<Vec3, Vec3>> compensation_samples(
    const geometry::LightPathSolution& solution, const RefractionConfig& refraction,
    const Vec3& volume_lo, const Vec3& volume_hi, int nx, int ny, int nz) {
    if (nx < 2 || ny < 2 || nz < 2) throw Error("compensation sampling needs >= 2 per axis");
    std::vector<std::pair<Vec3, Vec3>> samples;
    samples.reserve(static_cast<std::size_t>(nx) * ny * nz);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            for (int k = 0; k < nz; ++k) {
                Vec3 p;
                p.x() = volume_lo.x() + (volume_hi.x() - volume_lo.x()) * i / (nx - 1);
                p.y() = volume_lo.y() + (volume_hi.y() - volume_lo.y()) * j / (ny - 1);
                p.z() = volume_lo.z() + (volume_hi.z() - volume_lo.z()) * k / (nz - 1);
                const RenderResult r = render_markers(solution, {p}, 0.0, 1, refraction);
                if (!r.visible[0]) continue;
                const auto tri = geometry::triangulate(solution.virtual_camera_1,
                                                       solution.virtual_camera_2,
                                                       r.camera1_px[0], r.camera2_px[0]);
                samples.emplace_back(tri.point, p);
            }
    return samples;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoFailure("cannot open scenario: " + path);

    struct Waypoint {
        double t;
        Vec3 pos;
        Eigen::Quaterniond q;
        double depth;
    };
    std::vector<Waypoint> waypoints;
    Scenario sc;
    std::string line;
    long lineno = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key)) continue;
        if (!header_seen) {
            if (key != "tac3d_scenario") throw ParseError("scenario: bad magic", lineno);
            int version = 0;
            ss >> version;
            if (version != 1)
                throw VersionMismatch("scenario: unsupported version " + std::to_string(version));
            header_seen = true;
            continue;
        }
        const auto need = [&](auto&... vals) {
            if (!((ss >> vals) && ...))
                throw ParseError("scenario: malformed '" + key + "' line", lineno);
        };
        if (key == "shape") {
            std::string kind;
            need(kind);
            Shape s;
            if (kind == "plane") {
                s.kind = ShapeKind::plane;
                need(s.a.x(), s.a.y(), s.a.z(), s.b.x(), s.b.y(), s.b.z());
                s.b.normalize();
            } else if (kind == "sphere") {
                s.kind = ShapeKind::sphere;
                need(s.a.x(), s.a.y(), s.a.z(), s.radius);
            } else if (kind == "box") {
                s.kind = ShapeKind::box;
                need(s.a.x(), s.a.y(), s.a.z(), s.half.x(), s.half.y(), s.half.z());
            } else if (kind == "capsule") {
                s.kind = ShapeKind::capsule;
                need(s.a.x(), s.a.y(), s.a.z(), s.b.x(), s.b.y(), s.b.z(), s.radius);
            } else {
                throw ParseError("scenario: unknown shape kind '" + kind + "'", lineno);
            }
            sc.object.shapes.push_back(s);
        } else if (key == "mu_default") {
            need(sc.object.mu_default);
        } else if (key == "mu_halfspace") {
            MuRegion r;
            r.kind = MuRegion::Kind::halfspace;
            need(r.normal.x(), r.normal.y(), r.normal.z(), r.offset, r.mu);
            sc.object.regions.push_back(r);
        } else if (key == "mu_sector") {
            MuRegion r;
            r.kind = MuRegion::Kind::sector;
            need(r.center.x(), r.center.y(), r.center.z(), r.axis.x(), r.axis.y(), r.axis.z(),
                 r.ref.x(), r.ref.y(), r.ref.z(), r.angle_lo_deg, r.angle_hi_deg, r.mu);
            sc.object.regions.push_back(r);
        } else if (key == "frame_rate") {
            need(sc.frame_rate_hz);
        } else if (key == "pixel_noise") {
            need(sc.pixel_noise);
        } else if (key == "displacement_noise") {
            need(sc.displacement_noise_mm);
        } else if (key == "slip_threshold") {
            need(sc.slip_threshold_mm);
        } else if (key == "seed") {
            need(sc.seed);
        } else if (key == "waypoint") {
            Waypoint w;
            need(w.t, w.pos.x(), w.pos.y(), w.pos.z(), w.q.w(), w.q.x(), w.q.y(), w.q.z());
            if (!(ss >> w.depth)) w.depth = 0.0;
            if (std::abs(w.q.norm() - 1.0) > 1e-6)
                throw ParseError("scenario: waypoint quaternion is not unit", lineno);
            w.q.normalize();
            waypoints.push_back(w);
        } else {
            throw ParseError("scenario: unknown key '" + key + "'", lineno);
        }
    }
    if (!header_seen) throw ParseError("scenario: missing header", lineno);
    if (waypoints.empty()) throw ParseError("scenario: no waypoints", lineno);

    // sample the waypoint path at the frame rate
    const double t0 = waypoints.front().t;
    const double t1 = waypoints.back().t;
    const double dt = 1.0 / sc.frame_rate_hz;
    const long frame_count = std::max<long>(1, static_cast<long>(std::floor((t1 - t0) / dt)) + 1);
    for (long f = 0; f < frame_count; ++f) {
        const double t = t0 + f * dt;
        std::size_t seg = 0;
        while (seg + 2 < waypoints.size() && waypoints[seg + 1].t <= t) ++seg;
        const Waypoint& wa = waypoints[seg];
        const Waypoint& wb = waypoints[std::min(seg + 1, waypoints.size() - 1)];
        const double span = wb.t - wa.t;
        const double u = span > 1e-12 ? std::clamp((t - wa.t) / span, 0.0, 1.0) : 0.0;
        mapping::SensorPose pose;
        pose.frame_index = f;
        pose.timestamp_s = t;
        pose.transform.translation = (1.0 - u) * wa.pos + u * wb.pos;
        pose.transform.rotation = wa.q.slerp(u, wb.q).toRotationMatrix();
        sc.poses.push_back(pose);
        sc.depths.push_back((1.0 - u) * wa.depth + u * wb.depth);
    }
    return sc;
}

}  // namespace tac3d::simharness
