#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sllg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Simplicial mesh of a 2D or 3D domain. Vertices are always stored as
/// 3-vectors; in 2D the third coordinate is zero. A cell lists `dim + 1`
/// vertex indices, the remaining slots hold -1.
struct Mesh {
    int dim = 2;
    std::vector<Vec3> vertices;
    std::vector<std::array<std::int32_t, 4>> cells;

    [[nodiscard]] std::size_t num_vertices() const noexcept { return vertices.size(); }
    [[nodiscard]] std::size_t num_cells() const noexcept { return cells.size(); }
    [[nodiscard]] int vertices_per_cell() const noexcept { return dim + 1; }

    /// Signed measure of a cell (area in 2D, volume in 3D).
    [[nodiscard]] double signed_measure(std::size_t cell) const;
    /// Largest edge length over all cells.
    [[nodiscard]] double max_edge_length() const;
    /// Sum of absolute cell measures.
    [[nodiscard]] double domain_measure() const;

    /// Facets lying on exactly one cell, as sorted vertex tuples (unused slot -1).
    [[nodiscard]] std::vector<std::array<std::int32_t, 3>> boundary_facets() const;

    /// Throws InvalidArgument on out-of-range indices, degenerate cells or
    /// non-conforming facets (a facet shared by more than two cells).
    void validate() const;
};

/// Unit square (dim 2) or unit cube (dim 3) split into `divisions` per axis.
/// 2D: every square is cut along its main diagonal into two right isoceles
/// triangles. 3D: Kuhn split of each cube into six tetrahedra sharing the
/// main diagonal.
Mesh build_structured_mesh(int dim, int divisions);

/// Plain-text mesh format:
///   dim N_vertices N_cells
///   x y [z]          (one vertex per line, dim coordinates)
///   i0 i1 i2 [i3]    (one cell per line, 0-based)
/// Coordinates are written with 17 significant digits so that a round trip
/// is bit-exact.
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);
void write_mesh_file(const std::string& path, const Mesh& mesh);
Mesh read_mesh_file(const std::string& path);

}  // namespace sllg
