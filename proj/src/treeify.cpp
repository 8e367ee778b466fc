#include "skeltree/treeify.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

#include "skeltree/log.hpp"

namespace skeltree {

namespace {

double dist3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

AugmentedGraph augment(const SkeletonGraph& graph) {
    // collect arc polyline nodes and unit edges, merging duplicates by
    // source vertex index
    std::set<int> used;  // skeleton node indices
    std::set<std::array<int, 2>> unit_edges;
    auto add_edge = [&](int a, int b) {
        if (a > b) std::swap(a, b);
        unit_edges.insert({a, b});
    };
    if (!graph.arcs.empty()) {
        for (const auto& arc : graph.arcs) {
            for (int n : arc.nodes) used.insert(n);
            for (std::size_t i = 0; i + 1 < arc.nodes.size(); ++i)
                add_edge(arc.nodes[i], arc.nodes[i + 1]);
        }
    } else {
        for (const auto& l : graph.links) {
            used.insert(l[0]);
            used.insert(l[1]);
            add_edge(l[0], l[1]);
        }
    }

    AugmentedGraph g;
    std::vector<int> local(graph.nodes.size(), -1);
    std::vector<int> order(used.begin(), used.end());
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return graph.nodes[a].vertex < graph.nodes[b].vertex; });
    for (int n : order) {
        local[n] = static_cast<int>(g.nodes.size());
        g.nodes.push_back({graph.nodes[n].vertex, graph.nodes[n].pos, graph.nodes[n].density});
    }
    for (const auto& e : unit_edges) {
        std::array<int, 2> le{local[e[0]], local[e[1]]};
        if (le[0] > le[1]) std::swap(le[0], le[1]);
        g.edges.push_back(le);
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());

    g.edge_length.resize(g.edges.size());
    g.adj.assign(g.nodes.size(), {});
    for (int i = 0; i < static_cast<int>(g.edges.size()); ++i) {
        const auto& e = g.edges[i];
        g.edge_length[i] = dist3(g.nodes[e[0]].pos, g.nodes[e[1]].pos);
        g.adj[e[0]].push_back({e[1], i});
        g.adj[e[1]].push_back({e[0], i});
    }
    for (auto& a : g.adj) std::sort(a.begin(), a.end());

    // component labels in first-seen order
    g.component.assign(g.nodes.size(), -1);
    for (int n = 0; n < static_cast<int>(g.nodes.size()); ++n) {
        if (g.component[n] >= 0) continue;
        int id = g.component_count++;
        std::deque<int> q{n};
        g.component[n] = id;
        while (!q.empty()) {
            int u = q.front();
            q.pop_front();
            for (const auto& [v, e] : g.adj[u])
                if (g.component[v] < 0) {
                    g.component[v] = id;
                    q.push_back(v);
                }
        }
    }
    return g;
}

namespace {

int select_root_in(const AugmentedGraph& graph, std::optional<std::array<double, 3>> hint,
                   int comp) {
    int best = -1;
    double best_key = 0.0;
    for (int n = 0; n < static_cast<int>(graph.nodes.size()); ++n) {
        if (comp >= 0 && graph.component[n] != comp) continue;
        double key = hint ? dist3(graph.nodes[n].pos, *hint) : -graph.nodes[n].density;
        if (best < 0 || key < best_key) {
            best = n;
            best_key = key;
        }
    }
    return best;  // ties resolve to the lowest index by scan order
}

struct ParentTree {
    std::vector<int> parent;  // over graph node ids, -2 = not in component
};

SummaryTree from_parents(const AugmentedGraph& graph, int root, const std::vector<int>& parent) {
    SummaryTree t;
    std::vector<int> members;
    for (int n = 0; n < static_cast<int>(graph.nodes.size()); ++n)
        if (parent[n] != -2) members.push_back(n);
    // members are already ascending by node id; node ids ascend by vertex id
    std::vector<int> local(graph.nodes.size(), -1);
    for (int m : members) {
        local[m] = static_cast<int>(t.nodes.size());
        t.nodes.push_back({m, graph.nodes[m].vertex, graph.nodes[m].pos, graph.nodes[m].density});
    }
    t.root = local[root];
    t.parent.assign(members.size(), -1);
    t.edge_len.assign(members.size(), 0.0);
    for (int m : members) {
        if (parent[m] < 0) continue;
        t.parent[local[m]] = local[parent[m]];
        t.edge_len[local[m]] = dist3(graph.nodes[m].pos, graph.nodes[parent[m]].pos);
    }
    return t;
}

}  // namespace

int select_root(const AugmentedGraph& graph, std::optional<std::array<double, 3>> hint) {
    if (graph.empty()) throw std::invalid_argument("select_root: empty graph");
    return select_root_in(graph, hint, -1);
}

SummaryTree shortest_path_tree(const AugmentedGraph& graph, int root, bool inverse_density) {
    if (root < 0 || root >= static_cast<int>(graph.nodes.size()))
        throw std::invalid_argument("shortest_path_tree: root out of range");
    const int comp = graph.component[root];
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(graph.nodes.size(), kInf);
    std::vector<int> parent(graph.nodes.size(), -2);

    auto edge_weight = [&](int e) {
        if (!inverse_density) return 1.0;
        double mean =
            (graph.nodes[graph.edges[e][0]].density + graph.nodes[graph.edges[e][1]].density) / 2;
        return 1.0 / std::max(mean, 1e-300);
    };

    // Dijkstra covers the BFS case (all weights 1); parent ties break to the
    // lowest parent node index
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
    dist[root] = 0.0;
    parent[root] = -1;
    q.push({0.0, root});
    while (!q.empty()) {
        auto [d, u] = q.top();
        q.pop();
        if (d > dist[u]) continue;
        for (const auto& [v, e] : graph.adj[u]) {
            if (graph.component[v] != comp) continue;
            double nd = d + edge_weight(e);
            if (nd < dist[v] || (nd == dist[v] && parent[v] >= 0 && u < parent[v])) {
                dist[v] = nd;
                parent[v] = u;
                q.push({nd, v});
            }
        }
    }
    return from_parents(graph, root, parent);
}

SummaryTree maximum_spanning_tree(const AugmentedGraph& graph, int root_node) {
    if (root_node < 0 || root_node >= static_cast<int>(graph.nodes.size()))
        throw std::invalid_argument("maximum_spanning_tree: root out of range");
    const int comp = graph.component[root_node];

    std::vector<int> eids;
    for (int e = 0; e < static_cast<int>(graph.edges.size()); ++e)
        if (graph.component[graph.edges[e][0]] == comp) eids.push_back(e);
    auto weight = [&](int e) {
        return (graph.nodes[graph.edges[e][0]].density + graph.nodes[graph.edges[e][1]].density) /
               2;
    };
    std::stable_sort(eids.begin(), eids.end(),
                     [&](int a, int b) { return weight(a) > weight(b); });

    std::vector<int> uf(graph.nodes.size());
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](int x) {
        while (uf[x] != x) {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        return x;
    };
    std::vector<std::vector<int>> tree_adj(graph.nodes.size());
    for (int e : eids) {
        int a = find(graph.edges[e][0]), b = find(graph.edges[e][1]);
        if (a == b) continue;
        uf[a] = b;
        tree_adj[graph.edges[e][0]].push_back(graph.edges[e][1]);
        tree_adj[graph.edges[e][1]].push_back(graph.edges[e][0]);
    }
    for (auto& a : tree_adj) std::sort(a.begin(), a.end());

    std::vector<int> parent(graph.nodes.size(), -2);
    parent[root_node] = -1;
    std::deque<int> q{root_node};
    while (!q.empty()) {
        int u = q.front();
        q.pop_front();
        for (int v : tree_adj[u])
            if (parent[v] == -2) {
                parent[v] = u;
                q.push_back(v);
            }
    }
    return from_parents(graph, root_node, parent);
}

std::vector<int> SummaryTree::leaves() const {
    std::vector<int> child_count(nodes.size(), 0);
    for (std::size_t n = 0; n < nodes.size(); ++n)
        if (parent[n] >= 0) ++child_count[parent[n]];
    std::vector<int> out;
    for (std::size_t n = 0; n < nodes.size(); ++n)
        if (child_count[n] == 0 && static_cast<int>(n) != root) out.push_back(static_cast<int>(n));
    return out;
}

void compute_g(SummaryTree& tree, WeightMode mode) {
    tree.weight_mode = mode;
    tree.g.assign(tree.nodes.size(), 0.0);
    // children in ascending order, then top-down
    std::vector<std::vector<int>> children(tree.nodes.size());
    for (std::size_t n = 0; n < tree.nodes.size(); ++n)
        if (tree.parent[n] >= 0) children[tree.parent[n]].push_back(static_cast<int>(n));
    std::deque<int> q{tree.root};
    while (!q.empty()) {
        int u = q.front();
        q.pop_front();
        for (int v : children[u]) {
            double w = mode == WeightMode::Uniform
                           ? 1.0
                           : (tree.nodes[u].density + tree.nodes[v].density) / 2;
            tree.g[v] = tree.g[u] + tree.edge_len[v] * w;
            q.push_back(v);
        }
    }
}

void branch_decompose(SummaryTree& tree) {
    if (tree.g.size() != tree.nodes.size())
        throw std::logic_error("branch_decompose: compute_g first");
    tree.branches.clear();
    if (tree.nodes.empty()) return;

    // peel leaves in decreasing (g, -index): each climbs to the first node
    // already claimed by an earlier branch (its junction) or to the root
    std::vector<int> ls = tree.leaves();
    std::sort(ls.begin(), ls.end(), [&](int a, int b) {
        if (tree.g[a] != tree.g[b]) return tree.g[a] > tree.g[b];
        return a < b;
    });
    std::vector<char> claimed(tree.nodes.size(), 0);
    claimed[tree.root] = 1;
    for (int leaf : ls) {
        Branch br;
        int u = leaf;
        std::vector<int> path{u};
        while (!claimed[u]) {
            claimed[u] = 1;
            u = tree.parent[u];
            path.push_back(u);
        }
        std::reverse(path.begin(), path.end());
        br.nodes = std::move(path);
        br.leaf = leaf;
        br.junction = br.nodes.front();
        br.persistence = tree.g[leaf] - tree.g[br.junction];
        tree.branches.push_back(std::move(br));
    }
    // number by decreasing persistence; stable keeps peel order on ties, so a
    // branch never precedes the branch it hangs from
    std::stable_sort(tree.branches.begin(), tree.branches.end(),
                     [](const Branch& a, const Branch& b) { return a.persistence > b.persistence; });
}

namespace {

SummaryTree subtree_of(const SummaryTree& tree, const std::vector<const Branch*>& kept) {
    std::set<int> keep{tree.root};
    for (const Branch* b : kept) keep.insert(b->nodes.begin(), b->nodes.end());

    SummaryTree out;
    out.weight_mode = tree.weight_mode;
    std::vector<int> local(tree.nodes.size(), -1);
    for (int n : keep) {
        local[n] = static_cast<int>(out.nodes.size());
        out.nodes.push_back(tree.nodes[n]);
    }
    out.root = local[tree.root];
    out.parent.assign(out.nodes.size(), -1);
    out.edge_len.assign(out.nodes.size(), 0.0);
    for (int n : keep) {
        int p = tree.parent[n];
        if (p < 0) continue;
        if (local[p] < 0)
            throw std::logic_error("simplify_tree: kept branch set is not connected");
        out.parent[local[n]] = local[p];
        out.edge_len[local[n]] = tree.edge_len[n];
    }
    compute_g(out, tree.weight_mode);
    branch_decompose(out);
    return out;
}

}  // namespace

SummaryTree simplify_tree(const SummaryTree& tree, double tau) {
    std::vector<const Branch*> kept;
    for (const auto& b : tree.branches)
        if (b.persistence > tau) kept.push_back(&b);
    if (kept.empty() && !tree.branches.empty())
        log_warn("simplify_tree: tau removes every branch, returning root-only tree");
    return subtree_of(tree, kept);
}

SummaryTree simplify_keep_n(const SummaryTree& tree, int k) {
    if (k < 0) throw std::invalid_argument("simplify_keep_n: k must be >= 0");
    std::vector<const Branch*> kept;
    for (const auto& b : tree.branches) {
        if (static_cast<int>(kept.size()) >= k) break;
        kept.push_back(&b);
    }
    return subtree_of(tree, kept);
}

std::vector<SummaryTree> build_trees(const AugmentedGraph& graph,
                                     std::optional<TreeStrategy> strategy,
                                     std::optional<std::array<double, 3>> root_hint,
                                     WeightMode mode, bool inverse_density) {
    std::vector<SummaryTree> out;
    if (graph.empty()) return out;
    TreeStrategy strat = strategy.value_or(root_hint ? TreeStrategy::ShortestPath
                                                     : TreeStrategy::MaximumSpanning);
    for (int comp = 0; comp < graph.component_count; ++comp) {
        int root = select_root_in(graph, root_hint, comp);
        SummaryTree t = strat == TreeStrategy::ShortestPath
                            ? shortest_path_tree(graph, root, inverse_density)
                            : maximum_spanning_tree(graph, root);
        compute_g(t, mode);
        branch_decompose(t);
        out.push_back(std::move(t));
    }
    return out;
}

void write_swc(const SummaryTree& tree, std::ostream& out, bool density_radius) {
    out.precision(17);
    std::vector<std::vector<int>> children(tree.nodes.size());
    for (std::size_t n = 0; n < tree.nodes.size(); ++n)
        if (tree.parent[n] >= 0) children[tree.parent[n]].push_back(static_cast<int>(n));

    std::vector<int> swc_id(tree.nodes.size(), 0);
    std::vector<int> stack{tree.root};
    int next_id = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        swc_id[u] = next_id++;
        double radius = density_radius ? std::sqrt(std::max(tree.nodes[u].density, 0.0)) : 1.0;
        int parent_id = tree.parent[u] < 0 ? -1 : swc_id[tree.parent[u]];
        out << swc_id[u] << " 0 " << tree.nodes[u].pos[0] << ' ' << tree.nodes[u].pos[1] << ' '
            << tree.nodes[u].pos[2] << ' ' << radius << ' ' << parent_id << '\n';
        for (auto it = children[u].rbegin(); it != children[u].rend(); ++it) stack.push_back(*it);
    }
}

void write_swc(const SummaryTree& tree, const std::string& path, bool density_radius) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write SWC file " + path);
    write_swc(tree, out, density_radius);
}

}  // namespace skeltree
