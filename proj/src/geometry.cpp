#include "tac3d/geometry.hpp"

#include <Eigen/Dense>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace tac3d::geometry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- 2D cross-section machinery (x, z plane; y = 0) ----------------------

struct Line2 {
    Vec2 normal;    // unit
    double offset;  // normal . p = offset
};

Line2 line_from_params(double psi, double c) { return {{std::cos(psi), std::sin(psi)}, c}; }

Vec2 reflect2(const Line2& ln, const Vec2& p) {
    return p - 2.0 * (ln.normal.dot(p) - ln.offset) * ln.normal;
}

Vec2 reflect_dir2(const Line2& ln, const Vec2& d) {
    return d - 2.0 * ln.normal.dot(d) * ln.normal;
}

bool intersect_ray_line(const Vec2& origin, const Vec2& dir, const Line2& ln, Vec2& hit,
                        double& t) {
    const double denom = ln.normal.dot(dir);
    if (std::abs(denom) < 1e-14) return false;
    t = (ln.offset - ln.normal.dot(origin)) / denom;
    if (t <= 1e-9) return false;
    hit = origin + t * dir;
    return true;
}

struct Trace {
    Vec2 a0, a1, a2;  // edge ray fold points (hit order from the camera: a2, a1, a0)
    Vec2 b0, b1, b2;  // center ray fold points
    bool ok = false;
};

// Traces the two bounding rays of the left half field of view from the
// camera through mirror 2 then mirror 1 onto the marker plane z = 0.
Trace trace_left_path(const LightPathSpec& spec, const Line2& m1, const Line2& m2) {
    Trace tr;
    const double total = spec.camera_distance_mm + spec.fingertip_thickness_mm;
    const Vec2 cam(0.0, -total);
    const double half_fov = deg2rad(spec.fov_deg) / 2.0;

    const Vec2 dir_center(0.0, 1.0);
    const Vec2 dir_edge(-std::sin(half_fov), std::cos(half_fov));
    double t;

    // fingertip endpoints live on the inner face of the elastic body,
    // one thickness below the marker plane
    const double face_y = -spec.fingertip_thickness_mm;

    // center ray: O -> B2 (mirror 2) -> B1 (mirror 1) -> B0 (inner face)
    if (!intersect_ray_line(cam, dir_center, m2, tr.b2, t)) return tr;
    Vec2 d = reflect_dir2(m2, dir_center);
    if (!intersect_ray_line(tr.b2, d, m1, tr.b1, t)) return tr;
    d = reflect_dir2(m1, d);
    if (std::abs(d.y()) < 1e-14) return tr;
    t = (face_y - tr.b1.y()) / d.y();
    if (t <= 1e-9) return tr;
    tr.b0 = tr.b1 + t * d;

    // edge ray: O -> A2 -> A1 -> A0
    if (!intersect_ray_line(cam, dir_edge, m2, tr.a2, t)) return tr;
    d = reflect_dir2(m2, dir_edge);
    if (!intersect_ray_line(tr.a2, d, m1, tr.a1, t)) return tr;
    d = reflect_dir2(m1, d);
    if (std::abs(d.y()) < 1e-14) return tr;
    t = (face_y - tr.a1.y()) / d.y();
    if (t <= 1e-9) return tr;
    tr.a0 = tr.a1 + t * d;

    tr.ok = true;
    return tr;
}

// Residuals, normalized: lengths by l, angles in radians.
Eigen::Vector4d residuals(const LightPathSpec& spec, const Eigen::Vector4d& u, Trace* out = nullptr) {
    const Line2 m1 = line_from_params(u[0], u[1]);
    const Line2 m2 = line_from_params(u[2], u[3]);
    const double l = spec.fingertip_length_mm;
    const Trace tr = trace_left_path(spec, m1, m2);
    if (out) *out = tr;
    if (!tr.ok) return Eigen::Vector4d::Constant(kInf);

    Eigen::Vector4d r;
    const Vec2 b0_target(l / 2.0, -spec.fingertip_thickness_mm);
    r[0] = (tr.b0.x() - b0_target.x()) / l;
    r[1] = (tr.a0.x() + l / 2.0) / l;

    // A2 on the line through B0 and B1
    const Vec2 seg = tr.b1 - b0_target;
    const double seg_norm = seg.norm();
    if (seg_norm < 1e-12) return Eigen::Vector4d::Constant(kInf);
    const Vec2 n_perp(-seg.y() / seg_norm, seg.x() / seg_norm);
    r[2] = n_perp.dot(tr.a2 - b0_target) / l;

    // parallax at the central marker between the two virtual camera centers
    const double total = spec.camera_distance_mm + spec.fingertip_thickness_mm;
    const Vec2 cam(0.0, -total);
    const Vec2 vc1 = reflect2(m1, reflect2(m2, cam));
    if (vc1.y() >= -1e-9) return Eigen::Vector4d::Constant(kInf);
    const Vec2 vc2(-vc1.x(), vc1.y());
    const double cosang = vc1.normalized().dot(vc2.normalized());
    r[3] = std::acos(std::clamp(cosang, -1.0, 1.0)) - deg2rad(spec.parallax_deg);
    return r;
}

bool segment_intersects_box(const Vec2& p0, const Vec2& p1, const Vec2& lo, const Vec2& hi) {
    // slab test
    const Vec2 d = p1 - p0;
    double tmin = 0.0, tmax = 1.0;
    for (int a = 0; a < 2; ++a) {
        if (std::abs(d[a]) < 1e-15) {
            if (p0[a] < lo[a] || p0[a] > hi[a]) return false;
        } else {
            double t1 = (lo[a] - p0[a]) / d[a];
            double t2 = (hi[a] - p0[a]) / d[a];
            if (t1 > t2) std::swap(t1, t2);
            tmin = std::max(tmin, t1);
            tmax = std::min(tmax, t2);
            if (tmin > tmax) return false;
        }
    }
    return true;
}

bool physically_valid(const LightPathSpec& spec, const Trace& tr) {
    const double total = spec.camera_distance_mm + spec.fingertip_thickness_mm;
    const double l = spec.fingertip_length_mm;
    const double d = spec.fingertip_thickness_mm;
    // fold points strictly between the camera plane and the marker plane
    for (const Vec2* p : {&tr.a1, &tr.a2, &tr.b1, &tr.b2}) {
        if (p->y() <= -total + 1e-6 || p->y() >= -1e-6) return false;
    }
    // mirror segments must stay clear of the fingertip volume
    const Vec2 lo(-l / 2.0, -d), hi(l / 2.0, 0.0);
    if (segment_intersects_box(tr.a1, tr.b1, lo, hi)) return false;
    if (segment_intersects_box(tr.a2, tr.b2, lo, hi)) return false;
    return true;
}

// Initial mirror lines from a construction that satisfies the center-ray
// endpoint condition exactly: pick B2 on the axis and a tentative B1, then
// choose mirror normals bisecting the required ray turns.
Eigen::Vector4d initial_guess(const LightPathSpec& spec, double b2_frac, double b1x_frac,
                              double b1z_frac) {
    const double total = spec.camera_distance_mm + spec.fingertip_thickness_mm;
    const Vec2 b2(0.0, -total * b2_frac);
    const Vec2 b1(total * b1x_frac, -total * b1z_frac);
    const Vec2 b0(spec.fingertip_length_mm / 2.0, -spec.fingertip_thickness_mm);

    const Vec2 u(0.0, 1.0);                       // camera -> B2
    const Vec2 v = (b1 - b2).normalized();        // B2 -> B1
    const Vec2 w = (b0 - b1).normalized();        // B1 -> B0
    Vec2 n2 = (u - v).normalized();
    Vec2 n1 = (v - w).normalized();
    return {std::atan2(n1.y(), n1.x()), n1.dot(b1), std::atan2(n2.y(), n2.x()), n2.dot(b2)};
}

// Damped Newton with a Levenberg-Marquardt style fallback: the pure step is
// tried first, and the normal equations are re-damped whenever the residual
// refuses to decrease.
bool newton_solve(const LightPathSpec& spec, Eigen::Vector4d& u, int max_iter, double tol) {
    Eigen::Vector4d r = residuals(spec, u);
    if (!r.allFinite()) return false;
    double rn = r.norm();
    double damping = 1e-12;
    for (int it = 0; it < max_iter; ++it) {
        if (rn <= tol) return true;
        Eigen::Matrix4d J;
        for (int k = 0; k < 4; ++k) {
            const double h = 1e-7 * std::max(1.0, std::abs(u[k]));
            Eigen::Vector4d up = u;
            up[k] += h;
            const Eigen::Vector4d rp = residuals(spec, up);
            if (!rp.allFinite()) return false;
            J.col(k) = (rp - r) / h;
        }
        const Eigen::Matrix4d jtj = J.transpose() * J;
        const Eigen::Vector4d jtr = J.transpose() * r;
        const double scale = std::max(jtj.trace() / 4.0, 1e-300);

        bool accepted = false;
        for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
            const Eigen::Matrix4d m = jtj + damping * scale * Eigen::Matrix4d::Identity();
            const Eigen::Vector4d step = m.ldlt().solve(-jtr);
            if (step.allFinite()) {
                double ls = 1.0;
                for (int cut = 0; cut < 8 && !accepted; ++cut) {
                    const Eigen::Vector4d u_try = u + ls * step;
                    const Eigen::Vector4d r_try = residuals(spec, u_try);
                    if (r_try.allFinite() && r_try.norm() < rn) {
                        u = u_try;
                        r = r_try;
                        rn = r_try.norm();
                        accepted = true;
                        damping = std::max(damping * 0.25, 1e-14);
                    }
                    ls *= 0.5;
                }
            }
            if (!accepted) damping = std::min(damping * 8.0, 1e8);
        }
        if (!accepted) return rn <= tol;
    }
    return rn <= tol;
}

Plane plane3_from_line(const Line2& ln) {
    Plane p;
    p.normal = Vec3(ln.normal.x(), 0.0, ln.normal.y());
    p.offset = ln.offset;
    return p;
}

Vec3 lift(const Vec2& p) { return {p.x(), 0.0, p.y()}; }

void write_kv(std::ostream& os, const char* key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << key << ' ' << buf << '\n';
}

void write_vec(std::ostream& os, const char* key, const Vec3& v) {
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", v.x(), v.y(), v.z());
    os << key << ' ' << buf << '\n';
}

}  // namespace

Plane Plane::through(const Vec3& point, const Vec3& n) {
    const double len = n.norm();
    if (len < 1e-300) throw Error("plane normal has zero length");
    Plane p;
    p.normal = n / len;
    p.offset = p.normal.dot(point);
    return p;
}

void LightPathSpec::validate() const {
    if (!(camera_distance_mm > 0.0) || !(fingertip_length_mm > 0.0) ||
        !(fingertip_thickness_mm > 0.0))
        throw Error("light path spec: h, l, d must be positive");
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw Error("light path spec: fov out of (0,180)");
    if (!(parallax_deg > 0.0 && parallax_deg < 180.0))
        throw Error("light path spec: parallax out of (0,180)");
}

Vec3 reflect_point(const Plane& plane, const Vec3& p) {
    return p - 2.0 * (plane.normal.dot(p) - plane.offset) * plane.normal;
}

Vec3 reflect_direction(const Plane& plane, const Vec3& d) {
    return d - 2.0 * plane.normal.dot(d) * plane.normal;
}

CameraModel reflect_camera(const Plane& plane, const CameraModel& cam) {
    // new pose = old pose composed with the reflection: p_cam = R (S p) + t
    // where S p = (I - 2nn^T) p + 2 c n.
    CameraModel out = cam;
    const Mat3 refl = Mat3::Identity() - 2.0 * plane.normal * plane.normal.transpose();
    out.pose.rotation = cam.pose.rotation * refl;
    out.pose.translation =
        cam.pose.rotation * (2.0 * plane.offset * plane.normal) + cam.pose.translation;
    return out;
}

LightPathSolution solve_light_path(const LightPathSpec& spec, const SolveOptions& opts) {
    spec.validate();

    // construction-based starts first, then seeded jitter around them
    std::vector<std::array<double, 3>> starts;
    for (double f2 : {0.80, 0.72, 0.86, 0.66, 0.92, 0.60})
        for (double fx : {-0.45, -0.35, -0.55, -0.25, -0.65})
            for (double fz : {0.62, 0.50, 0.74, 0.38, 0.86}) starts.push_back({f2, fx, fz});
    {
        Rng jitter(20240117);
        for (int i = 0; i < 200; ++i)
            starts.push_back({jitter.uniform(0.45, 0.95), jitter.uniform(-0.75, -0.15),
                              jitter.uniform(0.25, 0.95)});
    }

    bool any_converged = false;
    for (const auto& [f2, fx, fz] : starts) {
        {
            {
                Eigen::Vector4d u = initial_guess(spec, f2, fx, fz);
                if (!newton_solve(spec, u, opts.max_iterations, opts.tolerance)) continue;
                any_converged = true;
                Trace tr;
                const Eigen::Vector4d r = residuals(spec, u, &tr);
                if (!physically_valid(spec, tr)) continue;

                LightPathSolution sol;
                sol.spec = spec;
                const Line2 m1 = line_from_params(u[0], u[1]);
                const Line2 m2 = line_from_params(u[2], u[3]);
                sol.mirrors[0] = plane3_from_line(m1);
                sol.mirrors[1] = plane3_from_line(m2);
                // right side by symmetry about the axis x = 0: mirror 4 pairs
                // with 1, mirror 3 with 2
                sol.mirrors[3] = sol.mirrors[0];
                sol.mirrors[3].normal.x() = -sol.mirrors[3].normal.x();
                sol.mirrors[2] = sol.mirrors[1];
                sol.mirrors[2].normal.x() = -sol.mirrors[2].normal.x();

                sol.a0 = lift(tr.a0);
                sol.a1 = lift(tr.a1);
                sol.a2 = lift(tr.a2);
                sol.b0 = lift(tr.b0);
                sol.b1 = lift(tr.b1);
                sol.b2 = lift(tr.b2);
                const double total = spec.camera_distance_mm + spec.fingertip_thickness_mm;
                sol.camera_center = {0.0, 0.0, -total};
                sol.central_marker = Vec3::Zero();

                CameraModel real;
                real.pose.rotation = Mat3::Identity();
                real.pose.translation = -sol.camera_center;
                real.fov_deg = spec.fov_deg;
                real.focal_px = (opts.image_width_px / 2.0) / std::tan(deg2rad(spec.fov_deg) / 2.0);
                real.principal = {opts.image_width_px / 2.0, opts.image_height_px / 2.0};
                sol.real_camera = real;
                sol.virtual_camera_1 = reflect_camera(sol.mirrors[0], reflect_camera(sol.mirrors[1], real));
                sol.virtual_camera_2 = reflect_camera(sol.mirrors[3], reflect_camera(sol.mirrors[2], real));

                const Vec3 v1 = sol.virtual_camera_1.center() - sol.central_marker;
                const Vec3 v2 = sol.virtual_camera_2.center() - sol.central_marker;
                sol.achieved_parallax_deg =
                    rad2deg(std::acos(std::clamp(v1.normalized().dot(v2.normalized()), -1.0, 1.0)));
                sol.residual = r;
                return sol;
            }
        }
    }
    if (any_converged)
        throw Infeasible("light path: no root within physical bounds (mirrors intersect the fingertip or fold points out of range)");
    throw NoConvergence("light path: Newton iterations failed to converge from all starts");
}

std::vector<double> verify_light_path(const LightPathSolution& sol) {
    std::vector<double> res;
    const double l = sol.spec.fingertip_length_mm;
    const Vec3 O = sol.camera_center;

    // beam opening angle at the camera equals half the field of view
    const Vec3 beam_a = (O - sol.a2).normalized();
    const Vec3 beam_b = (O - sol.b2).normalized();
    const double open = std::acos(std::clamp(beam_a.dot(beam_b), -1.0, 1.0));
    res.push_back(open - deg2rad(sol.spec.fov_deg) / 2.0);

    // specular reflection at each fold point
    const auto refl_residual = [](const Plane& pl, const Vec3& from, const Vec3& at, const Vec3& to) {
        const Vec3 din = (at - from).normalized();
        const Vec3 dout = (to - at).normalized();
        return (reflect_direction(pl, din) - dout).norm();
    };
    res.push_back(refl_residual(sol.mirrors[0], sol.a0, sol.a1, sol.a2));
    res.push_back(refl_residual(sol.mirrors[1], sol.a1, sol.a2, O));
    res.push_back(refl_residual(sol.mirrors[0], sol.b0, sol.b1, sol.b2));
    res.push_back(refl_residual(sol.mirrors[1], sol.b1, sol.b2, O));

    // fold points actually on their mirror planes
    res.push_back((sol.mirrors[0].normal.dot(sol.a1) - sol.mirrors[0].offset) / l);
    res.push_back((sol.mirrors[0].normal.dot(sol.b1) - sol.mirrors[0].offset) / l);
    res.push_back((sol.mirrors[1].normal.dot(sol.a2) - sol.mirrors[1].offset) / l);
    res.push_back((sol.mirrors[1].normal.dot(sol.b2) - sol.mirrors[1].offset) / l);

    // endpoint hits on the inner face of the fingertip
    const double face_z = -sol.spec.fingertip_thickness_mm;
    res.push_back((sol.a0 - Vec3(-l / 2.0, 0, face_z)).norm() / l);
    res.push_back((sol.b0 - Vec3(l / 2.0, 0, face_z)).norm() / l);

    // mirror 2 endpoint conditions
    const Vec3 seg = (sol.b1 - sol.b0).normalized();
    const Vec3 to_a2 = sol.a2 - sol.b0;
    res.push_back((to_a2 - seg.dot(to_a2) * seg).norm() / l);  // A2 on line B0-B1
    res.push_back(std::abs(sol.b2.x()) / l);                   // B2 on the axis

    // parallax at the central marker
    const Vec3 v1 = sol.virtual_camera_1.center() - sol.central_marker;
    const Vec3 v2 = sol.virtual_camera_2.center() - sol.central_marker;
    const double par = std::acos(std::clamp(v1.normalized().dot(v2.normalized()), -1.0, 1.0));
    res.push_back(par - deg2rad(sol.spec.parallax_deg));
    return res;
}

Vec2 project(const CameraModel& cam, const Vec3& p) {
    const Vec3 pc = cam.pose.apply(p);
    if (pc.z() <= 1e-12) throw BehindCamera("projection: point has non-positive depth");
    double xn = pc.x() / pc.z();
    double yn = pc.y() / pc.z();
    const double r2 = xn * xn + yn * yn;
    const double s = 1.0 + cam.distortion[0] * r2 + cam.distortion[1] * r2 * r2;
    xn *= s;
    yn *= s;
    return {cam.focal_px * xn + cam.principal.x(), cam.focal_px * yn + cam.principal.y()};
}

void pixel_ray(const CameraModel& cam, const Vec2& px, Vec3& origin, Vec3& dir) {
    double xn = (px.x() - cam.principal.x()) / cam.focal_px;
    double yn = (px.y() - cam.principal.y()) / cam.focal_px;
    if (cam.distortion[0] != 0.0 || cam.distortion[1] != 0.0) {
        // invert the radial model by fixed-point iteration
        double xu = xn, yu = yn;
        for (int i = 0; i < 20; ++i) {
            const double r2 = xu * xu + yu * yu;
            const double s = 1.0 + cam.distortion[0] * r2 + cam.distortion[1] * r2 * r2;
            xu = xn / s;
            yu = yn / s;
        }
        xn = xu;
        yn = yu;
    }
    origin = cam.center();
    dir = (cam.pose.rotation.transpose() * Vec3(xn, yn, 1.0)).normalized();
}

TriangulationResult triangulate(const CameraModel& cam1, const CameraModel& cam2,
                                const Vec2& px1, const Vec2& px2) {
    Vec3 o1, d1, o2, d2;
    pixel_ray(cam1, px1, o1, d1);
    pixel_ray(cam2, px2, o2, d2);

    const Vec3 cr = d1.cross(d2);
    const double cr2 = cr.squaredNorm();
    if (cr.norm() < 1e-10) throw ParallelRays("triangulation: rays are parallel");

    const Vec3 w = o2 - o1;
    const double t1 = w.cross(d2).dot(cr) / cr2;
    const double t2 = w.cross(d1).dot(cr) / cr2;
    const Vec3 p1 = o1 + t1 * d1;
    const Vec3 p2 = o2 + t2 * d2;
    return {(p1 + p2) / 2.0, (p1 - p2).norm()};
}

namespace {

int monomial_count(int degree) {
    int m = 0;
    for (int i = 0; i <= degree; ++i)
        for (int j = 0; j + i <= degree; ++j)
            for (int k = 0; k + j + i <= degree; ++k) ++m;
    return m;
}

void eval_monomials(int degree, const Vec3& u, VecX& row) {
    int idx = 0;
    for (int i = 0; i <= degree; ++i)
        for (int j = 0; j + i <= degree; ++j)
            for (int k = 0; k + j + i <= degree; ++k)
                row[idx++] = std::pow(u.x(), i) * std::pow(u.y(), j) * std::pow(u.z(), k);
}

Vec3 normalize_into_box(const CompensationPoly& poly, const Vec3& p) {
    Vec3 u;
    for (int a = 0; a < 3; ++a) {
        const double span = poly.box_hi[a] - poly.box_lo[a];
        u[a] = span > 1e-12 ? 2.0 * (p[a] - poly.box_lo[a]) / span - 1.0 : 0.0;
    }
    return u;
}

}  // namespace

bool CompensationPoly::inside_fitted_box(const Vec3& observed) const {
    for (int a = 0; a < 3; ++a)
        if (observed[a] < box_lo[a] || observed[a] > box_hi[a]) return false;
    return true;
}

CompensationPoly fit_refraction_compensation(
    const std::vector<std::pair<Vec3, Vec3>>& observed_true_pairs, int degree) {
    if (degree < 0) throw Error("compensation: degree must be non-negative");
    const int m = monomial_count(degree);
    const int n = static_cast<int>(observed_true_pairs.size());
    if (n < m) throw RankDeficient("compensation: fewer samples than coefficients");

    CompensationPoly poly;
    poly.degree = degree;
    poly.box_lo = Vec3::Constant(kInf);
    poly.box_hi = Vec3::Constant(-kInf);
    for (const auto& [obs, tru] : observed_true_pairs) {
        poly.box_lo = poly.box_lo.cwiseMin(obs);
        poly.box_hi = poly.box_hi.cwiseMax(obs);
    }

    MatX A(n, m);
    MatX b(n, 3);
    VecX row(m);
    for (int s = 0; s < n; ++s) {
        eval_monomials(degree, normalize_into_box(poly, observed_true_pairs[s].first), row);
        A.row(s) = row.transpose();
        b.row(s) = (observed_true_pairs[s].first - observed_true_pairs[s].second).transpose();
    }

    Eigen::ColPivHouseholderQR<MatX> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < m)
        throw RankDeficient("compensation: sample positions do not span the basis");
    poly.coeffs = qr.solve(b);

    const MatX resid = A * poly.coeffs - b;
    poly.fit_rmse = std::sqrt(resid.rowwise().squaredNorm().mean());
    return poly;
}

CompensatedPoint apply_compensation(const CompensationPoly& poly, const Vec3& observed) {
    VecX row(poly.coeffs.rows());
    eval_monomials(poly.degree, normalize_into_box(poly, observed), row);
    const Vec3 deviation = (row.transpose() * poly.coeffs).transpose();
    return {observed - deviation, !poly.inside_fitted_box(observed)};
}

namespace {

void write_camera(std::ostream& os, const std::string& prefix, const CameraModel& c) {
    char buf[512];
    const Mat3& R = c.pose.rotation;
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g",
                  R(0, 0), R(0, 1), R(0, 2), R(1, 0), R(1, 1), R(1, 2), R(2, 0), R(2, 1), R(2, 2));
    os << prefix << "_rotation " << buf << '\n';
    write_vec(os, (prefix + "_translation").c_str(), c.pose.translation);
    write_kv(os, (prefix + "_focal").c_str(), c.focal_px);
    std::snprintf(buf, sizeof(buf), "%.17g %.17g", c.principal.x(), c.principal.y());
    os << prefix << "_principal " << buf << '\n';
    write_kv(os, (prefix + "_fov").c_str(), c.fov_deg);
    std::snprintf(buf, sizeof(buf), "%.17g %.17g", c.distortion[0], c.distortion[1]);
    os << prefix << "_distortion " << buf << '\n';
}

struct KvFile {
    std::vector<std::pair<std::string, std::vector<double>>> entries;

    const std::vector<double>& get(const std::string& key, std::size_t count) const {
        for (const auto& [k, v] : entries) {
            if (k == key) {
                if (v.size() != count)
                    throw ParseError("light path file: key '" + key + "' has wrong arity");
                return v;
            }
        }
        throw ParseError("light path file: missing key '" + key + "'");
    }
};

CameraModel read_camera(const KvFile& kv, const std::string& prefix) {
    CameraModel c;
    const auto& R = kv.get(prefix + "_rotation", 9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) c.pose.rotation(i, j) = R[i * 3 + j];
    const auto& t = kv.get(prefix + "_translation", 3);
    c.pose.translation = Vec3(t[0], t[1], t[2]);
    c.focal_px = kv.get(prefix + "_focal", 1)[0];
    const auto& pp = kv.get(prefix + "_principal", 2);
    c.principal = Vec2(pp[0], pp[1]);
    c.fov_deg = kv.get(prefix + "_fov", 1)[0];
    const auto& dist = kv.get(prefix + "_distortion", 2);
    c.distortion = {dist[0], dist[1]};
    return c;
}

}  // namespace

void save_light_path(const LightPathSolution& sol, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoFailure("cannot open for writing: " + path);
    os << "tac3d_lightpath 1\n";
    write_kv(os, "spec_camera_distance", sol.spec.camera_distance_mm);
    write_kv(os, "spec_fov", sol.spec.fov_deg);
    write_kv(os, "spec_length", sol.spec.fingertip_length_mm);
    write_kv(os, "spec_thickness", sol.spec.fingertip_thickness_mm);
    write_kv(os, "spec_parallax", sol.spec.parallax_deg);
    for (int i = 0; i < 4; ++i) {
        const std::string key = "mirror" + std::to_string(i + 1);
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g", sol.mirrors[i].normal.x(),
                      sol.mirrors[i].normal.y(), sol.mirrors[i].normal.z(), sol.mirrors[i].offset);
        os << key << ' ' << buf << '\n';
    }
    write_vec(os, "point_a0", sol.a0);
    write_vec(os, "point_a1", sol.a1);
    write_vec(os, "point_a2", sol.a2);
    write_vec(os, "point_b0", sol.b0);
    write_vec(os, "point_b1", sol.b1);
    write_vec(os, "point_b2", sol.b2);
    write_vec(os, "camera_center", sol.camera_center);
    write_vec(os, "central_marker", sol.central_marker);
    write_kv(os, "achieved_parallax", sol.achieved_parallax_deg);
    {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g", sol.residual[0],
                      sol.residual[1], sol.residual[2], sol.residual[3]);
        os << "residual " << buf << '\n';
    }
    write_camera(os, "real_camera", sol.real_camera);
    write_camera(os, "virtual_camera_1", sol.virtual_camera_1);
    write_camera(os, "virtual_camera_2", sol.virtual_camera_2);
    if (!os) throw IoFailure("write failed: " + path);
}

LightPathSolution load_light_path(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoFailure("cannot open: " + path);
    std::string line;
    long lineno = 0;
    KvFile kv;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (!header_seen) {
            if (key != "tac3d_lightpath")
                throw ParseError("light path file: bad magic on line 1", lineno);
            int version = 0;
            ss >> version;
            if (version != 1)
                throw VersionMismatch("light path file: unsupported version " +
                                      std::to_string(version));
            header_seen = true;
            continue;
        }
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        kv.entries.emplace_back(key, std::move(vals));
    }
    if (!header_seen) throw ParseError("light path file: empty or missing header", lineno);

    LightPathSolution sol;
    sol.spec.camera_distance_mm = kv.get("spec_camera_distance", 1)[0];
    sol.spec.fov_deg = kv.get("spec_fov", 1)[0];
    sol.spec.fingertip_length_mm = kv.get("spec_length", 1)[0];
    sol.spec.fingertip_thickness_mm = kv.get("spec_thickness", 1)[0];
    sol.spec.parallax_deg = kv.get("spec_parallax", 1)[0];
    for (int i = 0; i < 4; ++i) {
        const auto& m = kv.get("mirror" + std::to_string(i + 1), 4);
        sol.mirrors[i].normal = Vec3(m[0], m[1], m[2]);
        sol.mirrors[i].offset = m[3];
    }
    const auto getv = [&](const char* key) {
        const auto& v = kv.get(key, 3);
        return Vec3(v[0], v[1], v[2]);
    };
    sol.a0 = getv("point_a0");
    sol.a1 = getv("point_a1");
    sol.a2 = getv("point_a2");
    sol.b0 = getv("point_b0");
    sol.b1 = getv("point_b1");
    sol.b2 = getv("point_b2");
    sol.camera_center = getv("camera_center");
    sol.central_marker = getv("central_marker");
    sol.achieved_parallax_deg = kv.get("achieved_parallax", 1)[0];
    const auto& r = kv.get("residual", 4);
    sol.residual = Eigen::Vector4d(r[0], r[1], r[2], r[3]);
    sol.real_camera = read_camera(kv, "real_camera");
    sol.virtual_camera_1 = read_camera(kv, "virtual_camera_1");
    sol.virtual_camera_2 = read_camera(kv, "virtual_camera_2");
    return sol;
}

}  // namespace tac3d::geometry
