#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "skeltree/morse.hpp"

namespace skeltree {

/// Skeleton graph flattened to unit edges: every polyline vertex of every
/// arc becomes a node, merged by source complex vertex index.
struct AugmentedGraph {
    struct Node {
        int vertex;
        std::array<double, 3> pos;
        double density;
    };
    std::vector<Node> nodes;
    std::vector<std::array<int, 2>> edges;  // node-index pairs, [0] < [1]
    std::vector<double> edge_length;        // Euclidean
    std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, edge id), sorted
    std::vector<int> component;
    int component_count = 0;

    bool empty() const { return nodes.empty(); }
};

AugmentedGraph augment(const SkeletonGraph& graph);

/// Nearest node to the hint (ties: lowest index), or the maximum-density
/// node when no hint is given.
int select_root(const AugmentedGraph& graph, std::optional<std::array<double, 3>> hint);

enum class WeightMode { Uniform, Intensity };
enum class TreeStrategy { ShortestPath, MaximumSpanning };

struct Branch {
    std::vector<int> nodes;  // local tree indices, junction-or-root first, leaf last
    int leaf = -1;
    int junction = -1;  // or the root
    double persistence = 0.0;
};

/// Rooted spanning tree of one connected component, with the root-distance
/// function g and its branch decomposition.
struct SummaryTree {
    struct Node {
        int graph_node;  // index into the source AugmentedGraph
        int vertex;      // source complex vertex id
        std::array<double, 3> pos;
        double density;
    };
    std::vector<Node> nodes;       // ascending by graph_node
    int root = -1;                 // local index
    std::vector<int> parent;       // -1 at root
    std::vector<double> edge_len;  // Euclidean length of the parent edge
    std::vector<double> g;
    WeightMode weight_mode = WeightMode::Uniform;
    std::vector<Branch> branches;  // decreasing persistence, peel order on ties

    std::size_t size() const { return nodes.size(); }
    std::vector<int> leaves() const;  // degree-1 non-root nodes
};

/// Breadth-first spanning tree of the root's component over unit edge
/// weights; parent ties break to the lowest parent node index. With
/// inverse_density set, edges weigh 1/mean density and Dijkstra applies.
SummaryTree shortest_path_tree(const AugmentedGraph& graph, int root,
                               bool inverse_density = false);

/// Maximum-weight spanning tree of the component containing `root_hint_node`
/// (edge weight = mean endpoint density, ties by lower edge index), rooted
/// at that node.
SummaryTree maximum_spanning_tree(const AugmentedGraph& graph, int root_node);

/// g(root) = 0, g(child) = g(parent) + length * weight of the parent edge.
void compute_g(SummaryTree& tree, WeightMode mode);

/// Recursive peeling: the max-g leaf's root path first, then each hanging
/// subtree. per(branch) = g(leaf) - g(junction). Branches are renumbered by
/// decreasing persistence. Requires compute_g.
void branch_decompose(SummaryTree& tree);

/// Subtree of branches with persistence > tau. Root-only (with a warning)
/// when tau kills every branch.
SummaryTree simplify_tree(const SummaryTree& tree, double tau);

/// Keep the k highest-persistence branches.
SummaryTree simplify_keep_n(const SummaryTree& tree, int k);

/// One tree per connected component, ordered by component id, each rooted by
/// select_root restricted to the component. Strategy default: shortest-path
/// when a hint exists, maximum spanning otherwise.
std::vector<SummaryTree> build_trees(const AugmentedGraph& graph,
                                     std::optional<TreeStrategy> strategy,
                                     std::optional<std::array<double, 3>> root_hint,
                                     WeightMode mode, bool inverse_density = false);

/// Standard 7-column SWC, ids contiguous from 1 in DFS order, root parent -1.
void write_swc(const SummaryTree& tree, std::ostream& out, bool density_radius = false);
void write_swc(const SummaryTree& tree, const std::string& path, bool density_radius = false);

}  // namespace skeltree
