#include "sllg/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "sllg/errors.hpp"

namespace sllg {

namespace {

std::array<std::int32_t, 3> sorted_facet(const std::array<std::int32_t, 4>& cell, int dim, int skip) {
    std::array<std::int32_t, 3> f{-1, -1, -1};
    int k = 0;
    for (int a = 0; a <= dim; ++a) {
        if (a != skip) f[k++] = cell[a];
    }
    std::sort(f.begin(), f.begin() + dim);
    return f;
}

}  // namespace

double Mesh::signed_measure(std::size_t c) const {
    const auto& cell = cells.at(c);
    const Vec3& p0 = vertices[cell[0]];
    if (dim == 2) {
        const Vec3 e1 = vertices[cell[1]] - p0;
        const Vec3 e2 = vertices[cell[2]] - p0;
        return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
    }
    const Vec3 e1 = vertices[cell[1]] - p0;
    const Vec3 e2 = vertices[cell[2]] - p0;
    const Vec3 e3 = vertices[cell[3]] - p0;
    return e1.dot(e2.cross(e3)) / 6.0;
}

double Mesh::max_edge_length() const {
    double h = 0.0;
    for (const auto& cell : cells) {
        for (int a = 0; a <= dim; ++a) {
            for (int b = a + 1; b <= dim; ++b) {
                h = std::max(h, (vertices[cell[a]] - vertices[cell[b]]).norm());
            }
        }
    }
    return h;
}

double Mesh::domain_measure() const {
    double total = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) total += std::abs(signed_measure(c));
    return total;
}

std::vector<std::array<std::int32_t, 3>> Mesh::boundary_facets() const {
    std::map<std::array<std::int32_t, 3>, int> count;
    for (const auto& cell : cells) {
        for (int skip = 0; skip <= dim; ++skip) ++count[sorted_facet(cell, dim, skip)];
    }
    std::vector<std::array<std::int32_t, 3>> out;
    for (const auto& [facet, n] : count) {
        if (n == 1) out.push_back(facet);
    }
    return out;
}

void Mesh::validate() const {
    if (dim != 2 && dim != 3) throw InvalidArgument("mesh dimension must be 2 or 3");
    const auto nv = static_cast<std::int32_t>(vertices.size());
    std::map<std::array<std::int32_t, 3>, int> count;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (int a = 0; a <= dim; ++a) {
            if (cells[c][a] < 0 || cells[c][a] >= nv) {
                throw InvalidArgument("cell " + std::to_string(c) + " has vertex index out of range");
            }
        }
        if (!(std::abs(signed_measure(c)) > 0.0)) {
            throw InvalidArgument("cell " + std::to_string(c) + " is degenerate");
        }
        for (int skip = 0; skip <= dim; ++skip) {
            if (++count[sorted_facet(cells[c], dim, skip)] > 2) {
                throw InvalidArgument("facet of cell " + std::to_string(c) + " is shared by more than two cells");
            }
        }
    }
}

Mesh build_structured_mesh(int dim, int divisions) {
    if (dim != 2 && dim != 3) throw InvalidArgument("structured mesh dimension must be 2 or 3");
    if (divisions < 1) throw InvalidArgument("divisions must be >= 1");
    const int n = divisions;
    const double h = 1.0 / n;
    Mesh mesh;
    mesh.dim = dim;

    if (dim == 2) {
        auto id = [n](int i, int j) { return static_cast<std::int32_t>(j * (n + 1) + i); };
        for (int j = 0; j <= n; ++j) {
            for (int i = 0; i <= n; ++i) mesh.vertices.emplace_back(i * h, j * h, 0.0);
        }
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const auto a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
                mesh.cells.push_back({a, b, c, -1});
                mesh.cells.push_back({a, c, d, -1});
            }
        }
        return mesh;
    }

    auto id = [n](int i, int j, int k) {
        return static_cast<std::int32_t>((k * (n + 1) + j) * (n + 1) + i);
    };
    for (int k = 0; k <= n; ++k) {
        for (int j = 0; j <= n; ++j) {
            for (int i = 0; i <= n; ++i) mesh.vertices.emplace_back(i * h, j * h, k * h);
        }
    }
    // Kuhn split: one tetrahedron per permutation of the axes, walking from
    // the cube's origin corner to the opposite corner.
    const std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                for (const auto& p : perms) {
                    std::array<int, 3> off{0, 0, 0};
                    std::array<std::int32_t, 4> cell{};
                    cell[0] = id(i, j, k);
                    for (int s = 0; s < 3; ++s) {
                        off[p[s]] = 1;
                        cell[s + 1] = id(i + off[0], j + off[1], k + off[2]);
                    }
                    mesh.cells.push_back(cell);
                    if (mesh.signed_measure(mesh.cells.size() - 1) < 0.0) {
                        std::swap(mesh.cells.back()[2], mesh.cells.back()[3]);
                    }
                }
            }
        }
    }
    return mesh;
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
    os << mesh.dim << ' ' << mesh.vertices.size() << ' ' << mesh.cells.size() << '\n';
    os << std::setprecision(17);
    for (const auto& v : mesh.vertices) {
        for (int d = 0; d < mesh.dim; ++d) os << (d ? " " : "") << v[d];
        os << '\n';
    }
    for (const auto& c : mesh.cells) {
        for (int a = 0; a <= mesh.dim; ++a) os << (a ? " " : "") << c[a];
        os << '\n';
    }
}

Mesh read_mesh(std::istream& is) {
    Mesh mesh;
    std::size_t nv = 0, nc = 0;
    if (!(is >> mesh.dim >> nv >> nc)) throw InvalidArgument("mesh header must be 'dim N_vertices N_cells'");
    if (mesh.dim != 2 && mesh.dim != 3) throw InvalidArgument("mesh dimension must be 2 or 3");
    mesh.vertices.assign(nv, Vec3::Zero());
    for (std::size_t v = 0; v < nv; ++v) {
        for (int d = 0; d < mesh.dim; ++d) {
            if (!(is >> mesh.vertices[v][d])) throw InvalidArgument("truncated vertex block at vertex " + std::to_string(v));
        }
    }
    mesh.cells.assign(nc, {-1, -1, -1, -1});
    for (std::size_t c = 0; c < nc; ++c) {
        for (int a = 0; a <= mesh.dim; ++a) {
            if (!(is >> mesh.cells[c][a])) throw InvalidArgument("truncated cell block at cell " + std::to_string(c));
        }
    }
    mesh.validate();
    return mesh;
}

void write_mesh_file(const std::string& path, const Mesh& mesh) {
    std::ofstream os(path);
    if (!os) throw InvalidArgument("cannot open mesh file for writing: " + path);
    write_mesh(os, mesh);
}

Mesh read_mesh_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidArgument("cannot open mesh file: " + path);
    return read_mesh(is);
}

}  // namespace sllg
