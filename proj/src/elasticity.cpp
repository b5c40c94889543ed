#include "tac3d/elasticity.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>

namespace tac3d::elasticity {

namespace {

constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)

// natural corner coordinates, standard trilinear ordering
constexpr double kXi[8] = {-1, 1, 1, -1, -1, 1, 1, -1};
constexpr double kEta[8] = {-1, -1, 1, 1, -1, -1, 1, 1};
constexpr double kZeta[8] = {-1, -1, -1, -1, 1, 1, 1, 1};

void shape_gradients(double xi, double eta, double zeta, Eigen::Matrix<double, 3, 8>& dn) {
    for (int a = 0; a < 8; ++a) {
        dn(0, a) = 0.125 * kXi[a] * (1 + kEta[a] * eta) * (1 + kZeta[a] * zeta);
        dn(1, a) = 0.125 * kEta[a] * (1 + kXi[a] * xi) * (1 + kZeta[a] * zeta);
        dn(2, a) = 0.125 * kZeta[a] * (1 + kXi[a] * xi) * (1 + kEta[a] * eta);
    }
}

Eigen::Matrix<double, 6, 6> elastic_moduli(const Material& mat) {
    const double e = mat.young_kpa * 1e-3;  // kPa -> N/mm^2
    const double nu = mat.poisson;
    const double lam = e * nu / ((1 + nu) * (1 - 2 * nu));
    const double mu = e / (2 * (1 + nu));
    Eigen::Matrix<double, 6, 6> c = Eigen::Matrix<double, 6, 6>::Zero();
    c(0, 0) = c(1, 1) = c(2, 2) = lam + 2 * mu;
    c(0, 1) = c(0, 2) = c(1, 0) = c(1, 2) = c(2, 0) = c(2, 1) = lam;
    c(3, 3) = c(4, 4) = c(5, 5) = mu;  // engineering shear xy, yz, zx
    return c;
}

Eigen::Matrix<double, 24, 24> element_stiffness(const HexMesh& mesh, int elem,
                                                const Eigen::Matrix<double, 6, 6>& c) {
    Eigen::Matrix<double, 3, 8> coords;
    for (int a = 0; a < 8; ++a) coords.col(a) = mesh.nodes[mesh.elements[elem][a]];

    Eigen::Matrix<double, 24, 24> ke = Eigen::Matrix<double, 24, 24>::Zero();
    Eigen::Matrix<double, 3, 8> dn, dndx;
    Eigen::Matrix<double, 6, 24> b;
    for (int gx = 0; gx < 2; ++gx)
        for (int gy = 0; gy < 2; ++gy)
            for (int gz = 0; gz < 2; ++gz) {
                shape_gradients((gx ? kGauss : -kGauss), (gy ? kGauss : -kGauss),
                                (gz ? kGauss : -kGauss), dn);
                const Mat3 jac = dn * coords.transpose();
                const double det = jac.determinant();
                if (det <= 0.0)
                    throw DegenerateElement("element " + std::to_string(elem) +
                                            " has non-positive Jacobian");
                dndx = jac.inverse() * dn;
                b.setZero();
                for (int a = 0; a < 8; ++a) {
                    b(0, 3 * a + 0) = dndx(0, a);
                    b(1, 3 * a + 1) = dndx(1, a);
                    b(2, 3 * a + 2) = dndx(2, a);
                    b(3, 3 * a + 0) = dndx(1, a);
                    b(3, 3 * a + 1) = dndx(0, a);
                    b(4, 3 * a + 1) = dndx(2, a);
                    b(4, 3 * a + 2) = dndx(1, a);
                    b(5, 3 * a + 0) = dndx(2, a);
                    b(5, 3 * a + 2) = dndx(0, a);
                }
                ke.noalias() += b.transpose() * c * b * det;
            }
    return ke;
}

struct FixedSystem {
    std::vector<int> free_of_dof;  // -1 for fixed
    std::vector<int> dof_of_free;
    SparseMat k_ff;
};

FixedSystem fix_base(const SparseMat& k, const HexMesh& mesh) {
    if (mesh.base_nodes.empty())
        throw SingularSystem("condensation requires a nonempty base node set");
    const int ndof = static_cast<int>(k.rows());
    FixedSystem sys;
    sys.free_of_dof.assign(ndof, 0);
    for (int n : mesh.base_nodes)
        for (int a = 0; a < 3; ++a) sys.free_of_dof[3 * n + a] = -1;
    for (int i = 0; i < ndof; ++i) {
        if (sys.free_of_dof[i] == 0) {
            sys.free_of_dof[i] = static_cast<int>(sys.dof_of_free.size());
            sys.dof_of_free.push_back(i);
        }
    }
    const int nfree = static_cast<int>(sys.dof_of_free.size());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(k.nonZeros());
    for (int col = 0; col < k.outerSize(); ++col) {
        const int fc = sys.free_of_dof[col];
        if (fc < 0) continue;
        for (SparseMat::InnerIterator it(k, col); it; ++it) {
            const int fr = sys.free_of_dof[it.row()];
            if (fr >= 0) trips.emplace_back(fr, fc, it.value());
        }
    }
    sys.k_ff.resize(nfree, nfree);
    sys.k_ff.setFromTriplets(trips.begin(), trips.end());
    return sys;
}

std::once_flag g_locking_warned;

}  // namespace

void FingertipGeometry::validate() const {
    if (rows < 2 || cols < 2) throw Error("fingertip: marker grid must be at least 2x2");
    if (!(spacing_mm > 0.0)) throw Error("fingertip: spacing must be positive");
    if (!(thickness_mm > 0.0)) throw Error("fingertip: thickness must be positive");
    if (subdivisions < 1) throw Error("fingertip: subdivisions must be >= 1");
    if (!(side_mm > 0.0)) throw Error("fingertip: side length must be positive");
    if (side_mm + 1e-9 < std::max(span_x(), span_y()))
        throw Error("fingertip: marker span exceeds the sensing side length");
    if (!(radius_mm >= side_mm / std::sqrt(2.0)))
        throw Error("fingertip: radius must be at least side/sqrt(2)");
}

Vec3 FingertipGeometry::marker_rest(int row, int col) const {
    const double x = (col - (cols - 1) / 2.0) * spacing_mm;
    const double y = (row - (rows - 1) / 2.0) * spacing_mm;
    double z = 0.0;
    if (std::isfinite(radius_mm)) {
        const double r2 = x * x + y * y;
        z = std::sqrt(radius_mm * radius_mm - r2) - radius_mm;
    }
    return {x, y, z};
}

std::string FingertipGeometry::hash() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g %.17g %.17g %d", rows, cols, spacing_mm,
                  side_mm, thickness_mm, radius_mm, subdivisions);
    std::uint64_t h = 1469598103934665603ull;
    for (const char* p = buf; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 1099511628211ull;
    }
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void Material::validate() const {
    if (!(young_kpa > 0.0)) throw Error("material: Young's modulus must be positive");
    if (!(poisson > -1.0 && poisson < 0.5)) throw Error("material: Poisson ratio out of (-1, 0.5)");
}

HexMesh build_mesh(const FingertipGeometry& geom) {
    geom.validate();
    const int sub = geom.subdivisions;
    HexMesh mesh;
    mesh.nx = (geom.cols - 1) * sub + 1;
    mesh.ny = (geom.rows - 1) * sub + 1;
    const double edge = geom.spacing_mm / sub;
    mesh.nz = std::max(1, static_cast<int>(std::lround(geom.thickness_mm / edge)));

    const double x0 = -geom.span_x() / 2.0;
    const double y0 = -geom.span_y() / 2.0;
    const auto outer_z = [&](double x, double y) {
        if (!std::isfinite(geom.radius_mm)) return 0.0;
        const double r2 = x * x + y * y;
        const double s = geom.radius_mm * geom.radius_mm - r2;
        if (s <= 0.0)
            throw DegenerateElement("cap radius too small for the marker span");
        return std::sqrt(s) - geom.radius_mm;
    };

    mesh.nodes.resize(static_cast<std::size_t>(mesh.nx) * mesh.ny * (mesh.nz + 1));
    const auto node_id = [&](int i, int j, int k) {
        return (k * mesh.ny + j) * mesh.nx + i;
    };
    for (int j = 0; j < mesh.ny; ++j) {
        for (int i = 0; i < mesh.nx; ++i) {
            const double x = x0 + i * edge;
            const double y = y0 + j * edge;
            const double zt = outer_z(x, y);
            const double column = zt + geom.thickness_mm;  // base at -thickness
            if (column <= 0.0)
                throw DegenerateElement("outer surface dips below the base plane");
            for (int k = 0; k <= mesh.nz; ++k) {
                const double z = -geom.thickness_mm + column * (static_cast<double>(k) / mesh.nz);
                mesh.nodes[node_id(i, j, k)] = Vec3(x, y, z);
            }
        }
    }

    mesh.elements.reserve(static_cast<std::size_t>(mesh.nx - 1) * (mesh.ny - 1) * mesh.nz);
    for (int k = 0; k < mesh.nz; ++k)
        for (int j = 0; j < mesh.ny - 1; ++j)
            for (int i = 0; i < mesh.nx - 1; ++i)
                mesh.elements.push_back({node_id(i, j, k), node_id(i + 1, j, k),
                                         node_id(i + 1, j + 1, k), node_id(i, j + 1, k),
                                         node_id(i, j, k + 1), node_id(i + 1, j, k + 1),
                                         node_id(i + 1, j + 1, k + 1), node_id(i, j + 1, k + 1)});

    mesh.marker_nodes.resize(geom.marker_count());
    for (int r = 0; r < geom.rows; ++r)
        for (int c = 0; c < geom.cols; ++c)
            mesh.marker_nodes[r * geom.cols + c] = node_id(c * sub, r * sub, mesh.nz);

    mesh.base_nodes.reserve(static_cast<std::size_t>(mesh.nx) * mesh.ny);
    for (int j = 0; j < mesh.ny; ++j)
        for (int i = 0; i < mesh.nx; ++i) mesh.base_nodes.push_back(node_id(i, j, 0));

    // validate Jacobians up front so bad geometry fails in build_mesh
    Eigen::Matrix<double, 3, 8> dn;
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        Eigen::Matrix<double, 3, 8> coords;
        for (int a = 0; a < 8; ++a) coords.col(a) = mesh.nodes[mesh.elements[e][a]];
        for (int g = 0; g < 8; ++g) {
            shape_gradients(kXi[g] * kGauss, kEta[g] * kGauss, kZeta[g] * kGauss, dn);
            if ((dn * coords.transpose()).determinant() <= 0.0)
                throw DegenerateElement("element " + std::to_string(e) +
                                        " has non-positive Jacobian");
        }
    }
    return mesh;
}

SparseMat assemble_stiffness(const HexMesh& mesh, const Material& mat) {
    mat.validate();
    if (mat.poisson >= 0.49) {
        std::call_once(g_locking_warned, [] {
            std::fprintf(stderr,
                         "warning: Poisson ratio >= 0.49 causes volumetric locking with "
                         "trilinear hexahedra; prefer <= 0.48\n");
        });
    }
    const auto c = elastic_moduli(mat);
    const int ndof = mesh.dof_count();

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.elements.size() * 300);
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        const auto ke = element_stiffness(mesh, static_cast<int>(e), c);
        for (int a = 0; a < 8; ++a)
            for (int ca = 0; ca < 3; ++ca) {
                const int gr = 3 * mesh.elements[e][a] + ca;
                for (int b = 0; b < 8; ++b)
                    for (int cb = 0; cb < 3; ++cb) {
                        const int gc = 3 * mesh.elements[e][b] + cb;
                        if (gr <= gc) trips.emplace_back(gr, gc, ke(3 * a + ca, 3 * b + cb));
                    }
            }
    }
    SparseMat upper(ndof, ndof);
    upper.setFromTriplets(trips.begin(), trips.end());
    SparseMat full = upper.selfadjointView<Eigen::Upper>();
    return full;
}

VecX solve_fixed(const SparseMat& stiffness, const HexMesh& mesh, const VecX& nodal_forces) {
    if (nodal_forces.size() != stiffness.rows())
        throw DimensionMismatch("solve_fixed: force vector size mismatch");
    const FixedSystem sys = fix_base(stiffness, mesh);
    Eigen::SimplicialLDLT<SparseMat> ldlt(sys.k_ff);
    if (ldlt.info() != Eigen::Success)
        throw SingularSystem("stiffness factorization failed after base fixing");
    VecX f_free(sys.dof_of_free.size());
    for (std::size_t i = 0; i < sys.dof_of_free.size(); ++i)
        f_free[i] = nodal_forces[sys.dof_of_free[i]];
    const VecX u_free = ldlt.solve(f_free);
    VecX u = VecX::Zero(stiffness.rows());
    for (std::size_t i = 0; i < sys.dof_of_free.size(); ++i) u[sys.dof_of_free[i]] = u_free[i];
    return u;
}

ConversionMatrix condense_conversion_matrix(const SparseMat& stiffness, const HexMesh& mesh) {
    const FixedSystem sys = fix_base(stiffness, mesh);
    Eigen::SimplicialLDLT<SparseMat> ldlt(sys.k_ff);
    if (ldlt.info() != Eigen::Success)
        throw SingularSystem("stiffness factorization failed after base fixing");

    const int n = static_cast<int>(mesh.marker_nodes.size());
    ConversionMatrix out;
    out.marker_count = n;
    out.h.resize(3 * n, 3 * n);

    // marker dof must be free; a marker on the base would be nonsense
    for (int m = 0; m < n; ++m)
        if (sys.free_of_dof[3 * mesh.marker_nodes[m]] < 0)
            throw SingularSystem("marker node lies on the fixed base");

    parallel_for(static_cast<std::size_t>(3 * n), [&](std::size_t col) {
        const int marker = static_cast<int>(col) % n;
        const int axis = static_cast<int>(col) / n;
        VecX rhs = VecX::Zero(sys.dof_of_free.size());
        rhs[sys.free_of_dof[3 * mesh.marker_nodes[marker] + axis]] = 1.0;
        const VecX u = ldlt.solve(rhs);
        for (int m = 0; m < n; ++m)
            for (int a = 0; a < 3; ++a)
                out.h(block_index(m, a, n), col) =
                    u[sys.free_of_dof[3 * mesh.marker_nodes[m] + a]];
    }, 4);
    return out;
}

VecX forward_displacements(const ConversionMatrix& h, const VecX& forces) {
    if (forces.size() != h.h.cols())
        throw DimensionMismatch("forward_displacements: expected length " +
                                std::to_string(h.h.cols()));
    return h.h * forces;
}

}  // namespace tac3d::elasticity
