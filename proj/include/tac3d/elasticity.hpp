#pragma once

#include <Eigen/SparseCore>
#include <array>
#include <string>
#include <vector>

#include "tac3d/common.hpp"
#include "tac3d/errors.hpp"

namespace tac3d::elasticity {

/// Spherical-cap fingertip. The sensor frame places the cap apex at the
/// origin: outer (marker) surface z = sqrt(R^2 - x^2 - y^2) - R <= 0, flat
/// base at z = -thickness. radius = +inf selects the flat-slab limit.
struct FingertipGeometry {
    double side_mm = 40.0;       // sensing side length l
    double thickness_mm = 8.0;   // d
    double radius_mm = 45.0;     // R, spherical outer surface
    int rows = 20;
    int cols = 20;
    double spacing_mm = 1.27;
    int subdivisions = 3;        // elements per marker spacing (3 = paper density)

    int marker_count() const { return rows * cols; }
    double span_x() const { return (cols - 1) * spacing_mm; }
    double span_y() const { return (rows - 1) * spacing_mm; }
    void validate() const;
    /// Rest position of marker (row, col), marker index = row * cols + col.
    Vec3 marker_rest(int row, int col) const;
    Vec3 sphere_center() const { return {0.0, 0.0, -radius_mm}; }
    /// FNV-1a hash over the canonical parameter string.
    std::string hash() const;
};

struct HexMesh {
    std::vector<Vec3> nodes;                    // mm
    std::vector<std::array<int, 8>> elements;   // trilinear hexahedra
    std::vector<int> marker_nodes;              // marker i -> surface node
    std::vector<int> base_nodes;                // fixed boundary (flat inner face)
    int nx = 0, ny = 0, nz = 0;                 // node grid dimensions

    int dof_count() const { return 3 * static_cast<int>(nodes.size()); }
};

struct Material {
    double young_kpa = 250.0;
    double poisson = 0.48;

    void validate() const;
};

/// 3N x 3N compliance mapping marker forces (N) to marker displacements (mm).
/// Vector layout is axis-blocked: all x components, then y, then z.
struct ConversionMatrix {
    MatX h;
    int marker_count = 0;
    static constexpr const char* block_order = "x-block,y-block,z-block";
};

using SparseMat = Eigen::SparseMatrix<double>;

HexMesh build_mesh(const FingertipGeometry& geom);

/// Full (unconstrained) linear-elasticity stiffness, N/mm, 2x2x2 Gauss.
SparseMat assemble_stiffness(const HexMesh& mesh, const Material& mat);

/// Solves K u = f with base nodes fixed to zero. f and the returned u are
/// full nodal vectors (3 * node count, node-interleaved x,y,z).
VecX solve_fixed(const SparseMat& stiffness, const HexMesh& mesh, const VecX& nodal_forces);

ConversionMatrix condense_conversion_matrix(const SparseMat& stiffness, const HexMesh& mesh);

VecX forward_displacements(const ConversionMatrix& h, const VecX& forces);

/// axis-blocked index of (marker, axis) in the D/F vector layout
inline int block_index(int marker, int axis, int marker_count) {
    return axis * marker_count + marker;
}

}  // namespace tac3d::elasticity
