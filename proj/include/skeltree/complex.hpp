#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "skeltree/volume.hpp"

namespace skeltree {

/// 2-skeleton simplicial complex: vertices with embedded positions and a
/// per-vertex density, edges as index pairs (smaller first), triangles as
/// ascending index triples. Closed under faces.
struct Complex2 {
    struct Vertex {
        std::array<double, 3> pos{0, 0, 0};
        double density = 0.0;
    };

    std::vector<Vertex> vertices;
    std::vector<std::array<int, 2>> edges;
    std::vector<std::array<int, 3>> triangles;

    // adjacency, filled by finalize()
    std::vector<std::vector<int>> vertex_edges;    // vertex -> incident edge ids
    std::vector<std::vector<int>> edge_triangles;  // edge -> incident triangle ids

    int edge_id(int a, int b) const;  // -1 if absent
    int other_endpoint(int edge, int v) const {
        return edges[edge][0] == v ? edges[edge][1] : edges[edge][0];
    }
    int euler_characteristic() const {
        return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) +
               static_cast<int>(triangles.size());
    }
    std::size_t simplex_count() const {
        return vertices.size() + edges.size() + triangles.size();
    }

    /// Sorts simplices canonically, builds adjacency, and checks the
    /// invariants: no duplicates, indices in range and ascending within a
    /// simplex, and closure (every triangle edge present). Throws
    /// std::runtime_error on violation.
    void finalize();

private:
    std::unordered_map<std::uint64_t, int> edge_lookup_;
};

/// Thresholded grid complex over a volume: vertices are the grid points with
/// density strictly above threshold; edges and triangles come from a fixed
/// Freudenthal-style 6-simplex split of each unit cube along the
/// (0,0,0)->(1,1,1) diagonal, kept when every corner survives. Adjacent
/// cubes induce the same triangulation on shared faces. Positions are
/// scaled by spacing.
Complex2 build_grid_complex(const DensityVolume& volume, double threshold);

/// Text complex format, one simplex per line:
///   v x y z density
///   e i j
///   t i j k
/// 0-based indices referring to earlier `v` lines; `#` starts a comment.
Complex2 load_complex(std::istream& in, const char* stream_name = "<stream>");
Complex2 load_complex(const std::string& path);
void save_complex(const Complex2& complex, std::ostream& out);
void save_complex(const Complex2& complex, const std::string& path);

/// Number of connected components (union-find over edges).
int connected_components(const Complex2& complex);

}  // namespace skeltree
