#include "tac3d/contact.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>

namespace tac3d::contact {

SurfaceNormals estimate_normals(const std::vector<Vec3>& markers, int k,
                                const std::vector<Vec3>& outward_reference) {
    const int n = static_cast<int>(markers.size());
    if (k < 3) throw Error("normal estimation needs k >= 3");
    if (n < k) throw Error("normal estimation needs at least k markers");
    if (!outward_reference.empty() && static_cast<int>(outward_reference.size()) != n)
        throw DimensionMismatch("outward reference size must match marker count");

    SurfaceNormals out;
    out.normals.resize(n);
    std::vector<int> idx(n);
    std::vector<double> d2(n);
    for (int i = 0; i < n; ++i) {
        std::iota(idx.begin(), idx.end(), 0);
        for (int j = 0; j < n; ++j) d2[j] = (markers[j] - markers[i]).squaredNorm();
        std::nth_element(idx.begin(), idx.begin() + k - 1, idx.end(),
                         [&](int a, int b) { return d2[a] < d2[b]; });

        Vec3 mean = Vec3::Zero();
        for (int j = 0; j < k; ++j) mean += markers[idx[j]];
        mean /= k;
        Mat3 cov = Mat3::Zero();
        for (int j = 0; j < k; ++j) {
            const Vec3 q = markers[idx[j]] - mean;
            cov += q * q.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        // plane fit needs two dominant directions
        if (eig.eigenvalues()[1] <= 1e-12 * std::max(eig.eigenvalues()[2], 1e-300))
            throw DegenerateNeighborhood("marker " + std::to_string(i) +
                                         ": neighborhood is collinear");
        Vec3 normal = eig.eigenvectors().col(0);
        const Vec3 ref = outward_reference.empty() ? Vec3::UnitZ() : outward_reference[i];
        if (normal.dot(ref) < 0.0) normal = -normal;
        out.normals[i] = normal;
    }
    return out;
}

ForceDecomposition decompose_force(const Vec3& force, const Vec3& unit_normal) {
    if (std::abs(unit_normal.norm() - 1.0) > 1e-9)
        throw Error("decompose_force: normal must be unit length");
    ForceDecomposition d;
    d.normal_newton = force.dot(unit_normal);
    d.tangential = force - d.normal_newton * unit_normal;
    return d;
}

ContactMask detect_contact(const forcesolve::ForceField& forces, const SurfaceNormals& normals,
                           double threshold_newton) {
    if (!(threshold_newton > 0.0)) throw Error("contact threshold must be positive");
    const int n = forces.marker_count;
    if (static_cast<int>(normals.normals.size()) != n)
        throw DimensionMismatch("detect_contact: normals size mismatch");
    ContactMask out;
    out.threshold_newton = threshold_newton;
    out.mask.resize(n);
    for (int i = 0; i < n; ++i)
        out.mask[i] = compression(forces.at(i), normals.normals[i]) >= threshold_newton;
    return out;
}

}  // namespace tac3d::contact
