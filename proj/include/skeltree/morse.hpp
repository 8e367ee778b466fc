#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skeltree/complex.hpp"
#include "skeltree/persistence.hpp"

namespace skeltree {

/// Discrete gradient vector field: an acyclic partial matching of vertices
/// with incident edges and edges with incident triangles. Unmatched
/// simplices are critical.
struct GradientField {
    std::vector<int> vertex_pair;      // vertex -> paired edge, -1 if critical
    std::vector<int> edge_from_vertex; // edge -> vertex paired into it, -1
    std::vector<int> edge_pair;        // edge -> paired triangle, -1
    std::vector<int> tri_from_edge;    // triangle -> edge paired into it, -1

    bool vertex_critical(int v) const { return vertex_pair[v] < 0; }
    bool edge_critical(int e) const { return edge_from_vertex[e] < 0 && edge_pair[e] < 0; }
    bool triangle_critical(int t) const { return tri_from_edge[t] < 0; }

    /// (#critical vertices, #critical edges, #critical triangles)
    std::array<int, 3> critical_counts() const;
};

/// Lower-star construction: each vertex's lower star is matched by homotopy
/// expansion, so the critical simplices are exactly the cells left unpaired
/// within their own lower star.
GradientField init_field(const Complex2& complex, const FiltrationOrder& order);

/// Descending V-path from one endpoint of an edge: vertices[0] is the
/// endpoint, vertices.back() is a critical vertex, edges[i] connects
/// vertices[i] to vertices[i+1].
struct VPath {
    std::vector<int> vertices;
    std::vector<int> edges;
};

/// Reverses the unique V-path from critical edge e to critical vertex v,
/// making both non-critical. Returns false (field untouched) when no path or
/// two distinct paths reach v, in which case the cancellation is undefined
/// and a warning is logged.
bool cancel(GradientField& field, const Complex2& complex, int v, int e);

/// The two descending V-paths from the endpoints of a critical edge.
std::array<VPath, 2> extract_unstable_1manifold(const GradientField& field,
                                                const Complex2& complex, int e);

/// Geometric graph of polygonal arcs embedded in the complex.
struct SkeletonGraph {
    struct Node {
        int vertex;  // source complex vertex id
        std::array<double, 3> pos;
        double density;
    };
    struct Arc {
        std::vector<int> nodes;  // node indices; simple path, closed if loop
    };
    std::vector<Node> nodes;                // ascending by source vertex id
    std::vector<std::array<int, 2>> links;  // unit edges as node-index pairs
    std::vector<Arc> arcs;

    bool empty() const { return nodes.empty(); }
};

struct SkeletonStats {
    std::array<int, 3> initial_critical{0, 0, 0};
    std::array<int, 3> final_critical{0, 0, 0};
    int cancelled = 0;
    int skipped_noncritical = 0;  // pairs resolved inside one lower star
    int skipped_nonunique = 0;    // V-path not unique, cancellation undefined
    int surviving_saddles = 0;
};

/// Skeletonize a density field over a complex: negate f, pair by persistence,
/// build the gradient field, cancel vertex-edge pairs with persistence <= tau
/// in increasing order, and union the 1-unstable manifolds of the surviving
/// critical edges with persistence > tau. Returns an empty graph when no
/// critical edge survives.
SkeletonGraph extract_skeleton(const Complex2& complex, std::span<const double> f, double tau,
                               SkeletonStats* stats = nullptr);

/// Same, using the complex's own vertex densities as f.
SkeletonGraph extract_skeleton(const Complex2& complex, double tau,
                               SkeletonStats* stats = nullptr);

/// Edge-list serialisation: `n idx x y z density` then `a n1 n2` lines.
void save_skeleton(const SkeletonGraph& graph, std::ostream& out);
void save_skeleton(const SkeletonGraph& graph, const std::string& path);
SkeletonGraph load_skeleton(std::istream& in, const char* stream_name = "<stream>");
SkeletonGraph load_skeleton(const std::string& path);

}  // namespace skeltree
