#include "skeltree/morse.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "skeltree/log.hpp"

namespace skeltree {

std::array<int, 3> GradientField::critical_counts() const {
    std::array<int, 3> n{0, 0, 0};
    for (std::size_t v = 0; v < vertex_pair.size(); ++v)
        if (vertex_pair[v] < 0) ++n[0];
    for (std::size_t e = 0; e < edge_pair.size(); ++e)
        if (edge_from_vertex[e] < 0 && edge_pair[e] < 0) ++n[1];
    for (std::size_t t = 0; t < tri_from_edge.size(); ++t)
        if (tri_from_edge[t] < 0) ++n[2];
    return n;
}

GradientField init_field(const Complex2& complex, const FiltrationOrder& order) {
    const int nv = static_cast<int>(complex.vertices.size());
    const int ne = static_cast<int>(complex.edges.size());
    const int nt = static_cast<int>(complex.triangles.size());

    GradientField field;
    field.vertex_pair.assign(nv, -1);
    field.edge_from_vertex.assign(ne, -1);
    field.edge_pair.assign(ne, -1);
    field.tri_from_edge.assign(nt, -1);

    // bucket simplices into the lower star of their max-rank vertex
    auto max_rank_vertex = [&](std::span<const int> verts) {
        int best = verts[0];
        for (int v : verts)
            if (order.vertex_rank[v] > order.vertex_rank[best]) best = v;
        return best;
    };
    std::vector<std::vector<int>> star_edges(nv), star_tris(nv);
    for (int e = 0; e < ne; ++e)
        star_edges[max_rank_vertex(complex.edges[e])].push_back(e);
    for (int t = 0; t < nt; ++t)
        star_tris[max_rank_vertex(complex.triangles[t])].push_back(t);

    std::vector<int> star_edges_of_tri;  // scratch
    for (int v = 0; v < nv; ++v) {
        auto& E = star_edges[v];
        auto& T = star_tris[v];
        if (E.empty()) continue;  // v is a local minimum: critical
        auto by_pos = [&](int dim) {
            return [&, dim](int a, int b) {
                return order.position({dim, a}) < order.position({dim, b});
            };
        };
        std::sort(E.begin(), E.end(), by_pos(1));
        std::sort(T.begin(), T.end(), by_pos(2));

        std::set<int> critical_here;  // positions in the filtration order
        auto edge_available = [&](int e) {
            return field.edge_from_vertex[e] < 0 && field.edge_pair[e] < 0 &&
                   !critical_here.count(order.position({1, e}));
        };
        // faces of a triangle lying in this lower star (the two edges whose
        // max vertex is v)
        auto star_faces = [&](int t) {
            star_edges_of_tri.clear();
            const auto& tri = complex.triangles[t];
            const std::array<std::array<int, 2>, 3> sides = {
                {{tri[0], tri[1]}, {tri[0], tri[2]}, {tri[1], tri[2]}}};
            for (const auto& s : sides) {
                int e = complex.edge_id(s[0], s[1]);
                if (max_rank_vertex(complex.edges[e]) == v) star_edges_of_tri.push_back(e);
            }
        };
        auto unpaired_faces = [&](int t) {
            star_faces(t);
            std::pair<int, int> r{0, -1};  // count, an available face
            for (int e : star_edges_of_tri)
                if (edge_available(e)) {
                    ++r.first;
                    r.second = e;
                }
            return r;
        };

        // homotopy expansion: pair v with the steepest edge, then grow
        int delta = E.front();
        field.vertex_pair[v] = delta;
        field.edge_from_vertex[delta] = v;

        std::set<int> pq_zero, pq_one;  // candidate positions, min-first
        for (std::size_t i = 1; i < E.size(); ++i) pq_zero.insert(order.position({1, E[i]}));
        auto rescan_triangles = [&]() {
            for (int t : T) {
                if (field.tri_from_edge[t] >= 0 || critical_here.count(order.position({2, t})))
                    continue;
                if (unpaired_faces(t).first == 1) pq_one.insert(order.position({2, t}));
            }
        };
        rescan_triangles();

        while (!pq_one.empty() || !pq_zero.empty()) {
            while (!pq_one.empty()) {
                int p = *pq_one.begin();
                pq_one.erase(pq_one.begin());
                int t = order.cells[p].idx;
                if (field.tri_from_edge[t] >= 0) continue;  // stale
                auto [count, face] = unpaired_faces(t);
                if (count == 0) {
                    pq_zero.insert(p);
                    continue;
                }
                field.edge_pair[face] = t;
                field.tri_from_edge[t] = face;
                pq_zero.erase(order.position({1, face}));
                rescan_triangles();
            }
            if (pq_zero.empty()) break;
            int p = *pq_zero.begin();
            pq_zero.erase(pq_zero.begin());
            Cell g = order.cells[p];
            bool paired = g.dim == 1 ? (field.edge_from_vertex[g.idx] >= 0 ||
                                        field.edge_pair[g.idx] >= 0)
                                     : field.tri_from_edge[g.idx] >= 0;
            if (paired) continue;
            critical_here.insert(p);
            rescan_triangles();
        }
    }
    return field;
}

namespace {

VPath descend(const GradientField& field, const Complex2& complex, int start_vertex) {
    VPath path;
    path.vertices.push_back(start_vertex);
    int u = start_vertex;
    while (!field.vertex_critical(u)) {
        int e = field.vertex_pair[u];
        u = complex.other_endpoint(e, u);
        path.edges.push_back(e);
        path.vertices.push_back(u);
    }
    return path;
}

}  // namespace

std::array<VPath, 2> extract_unstable_1manifold(const GradientField& field,
                                                const Complex2& complex, int e) {
    return {descend(field, complex, complex.edges[e][0]),
            descend(field, complex, complex.edges[e][1])};
}

bool cancel(GradientField& field, const Complex2& complex, int v, int e) {
    if (!field.vertex_critical(v) || !field.edge_critical(e)) {
        log_debug("cancel: pair is not critical, skipping");
        return false;
    }
    auto paths = extract_unstable_1manifold(field, complex, e);
    const VPath* hit = nullptr;
    int hits = 0;
    for (const auto& p : paths)
        if (p.vertices.back() == v) {
            hit = &p;
            ++hits;
        }
    if (hits != 1) {
        log_warn("cancel: " + std::to_string(hits) + " V-paths from edge " + std::to_string(e) +
                 " to vertex " + std::to_string(v) + ", cancellation undefined; skipping");
        return false;
    }
    // reverse the path: the saddle-side endpoint now points into e, and each
    // subsequent vertex into the edge it previously arrived through
    const auto& vs = hit->vertices;
    const auto& es = hit->edges;
    field.vertex_pair[vs[0]] = e;
    field.edge_from_vertex[e] = vs[0];
    for (std::size_t i = 0; i < es.size(); ++i) {
        field.edge_from_vertex[es[i]] = vs[i + 1];
        field.vertex_pair[vs[i + 1]] = es[i];
    }
    return true;
}

namespace {

// maximal degree-2 chain decomposition of the used subgraph
std::vector<SkeletonGraph::Arc> decompose_arcs(const std::vector<SkeletonGraph::Node>& nodes,
                                               const std::vector<std::array<int, 2>>& links) {
    std::vector<std::vector<std::pair<int, int>>> adj(nodes.size());  // (neighbor, link id)
    for (int l = 0; l < static_cast<int>(links.size()); ++l) {
        adj[links[l][0]].push_back({links[l][1], l});
        adj[links[l][1]].push_back({links[l][0], l});
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());

    std::vector<SkeletonGraph::Arc> arcs;
    std::vector<char> used(links.size(), 0);
    auto walk = [&](int start, int first_link) {
        SkeletonGraph::Arc arc;
        arc.nodes.push_back(start);
        int prev = start;
        int link = first_link;
        used[link] = 1;
        int cur = links[link][0] == prev ? links[link][1] : links[link][0];
        arc.nodes.push_back(cur);
        while (adj[cur].size() == 2 && cur != start) {
            int next_link = adj[cur][0].second == link ? adj[cur][1].second : adj[cur][0].second;
            link = next_link;
            used[link] = 1;
            prev = cur;
            cur = links[link][0] == prev ? links[link][1] : links[link][0];
            arc.nodes.push_back(cur);
        }
        return arc;
    };

    for (int n = 0; n < static_cast<int>(nodes.size()); ++n) {
        if (adj[n].size() == 2) continue;  // interior of a chain
        for (const auto& [nb, l] : adj[n])
            if (!used[l]) arcs.push_back(walk(n, l));
    }
    // leftover pure cycles (every node degree 2)
    for (int l = 0; l < static_cast<int>(links.size()); ++l)
        if (!used[l]) arcs.push_back(walk(links[l][0], l));
    return arcs;
}

}  // namespace

SkeletonGraph extract_skeleton(const Complex2& complex, std::span<const double> f, double tau,
                               SkeletonStats* stats) {
    if (tau < 0) throw std::invalid_argument("extract_skeleton: tau must be >= 0");

    std::vector<double> neg(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) neg[i] = -f[i];

    FiltrationOrder order = lower_star_order(complex, neg);
    PersistencePairing pairing = compute_pairing(complex, order);
    GradientField field = init_field(complex, order);

    SkeletonStats local;
    SkeletonStats& st = stats ? *stats : local;
    st.initial_critical = field.critical_counts();

    // cancel low-persistence vertex-edge pairs, least persistent first;
    // pair order within equal persistence follows creation (filtration) order
    std::vector<int> cancel_order;
    for (int i = 0; i < static_cast<int>(pairing.vertex_edge.size()); ++i)
        if (pairing.vertex_edge[i].persistence <= tau) cancel_order.push_back(i);
    std::stable_sort(cancel_order.begin(), cancel_order.end(), [&](int a, int b) {
        return pairing.vertex_edge[a].persistence < pairing.vertex_edge[b].persistence;
    });
    for (int i : cancel_order) {
        const auto& p = pairing.vertex_edge[i];
        if (!field.vertex_critical(p.birth.idx) || !field.edge_critical(p.death.idx)) {
            ++st.skipped_noncritical;
            continue;
        }
        if (cancel(field, complex, p.birth.idx, p.death.idx))
            ++st.cancelled;
        else
            ++st.skipped_nonunique;
    }
    st.final_critical = field.critical_counts();

    // persistence of each edge in the pairing; unpaired edges are essential
    std::vector<double> edge_per(complex.edges.size(), kInfinitePersistence);
    for (const auto& p : pairing.vertex_edge) edge_per[p.death.idx] = p.persistence;
    for (const auto& p : pairing.edge_triangle) edge_per[p.birth.idx] = p.persistence;

    std::set<int> used_vertices;
    std::set<std::array<int, 2>> used_edges;
    for (Cell c : order.cells) {
        if (c.dim != 1) continue;
        int e = c.idx;
        if (!field.edge_critical(e) || !(edge_per[e] > tau)) continue;
        ++st.surviving_saddles;
        used_edges.insert(complex.edges[e]);
        auto paths = extract_unstable_1manifold(field, complex, e);
        for (const auto& p : paths) {
            for (int v : p.vertices) used_vertices.insert(v);
            for (int pe : p.edges) used_edges.insert(complex.edges[pe]);
        }
    }

    SkeletonGraph g;
    std::vector<int> node_of(complex.vertices.size(), -1);
    for (int v : used_vertices) {
        node_of[v] = static_cast<int>(g.nodes.size());
        g.nodes.push_back({v, complex.vertices[v].pos, complex.vertices[v].density});
    }
    for (const auto& e : used_edges) g.links.push_back({node_of[e[0]], node_of[e[1]]});
    g.arcs = decompose_arcs(g.nodes, g.links);
    return g;
}

SkeletonGraph extract_skeleton(const Complex2& complex, double tau, SkeletonStats* stats) {
    std::vector<double> f(complex.vertices.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = complex.vertices[i].density;
    return extract_skeleton(complex, f, tau, stats);
}

void save_skeleton(const SkeletonGraph& graph, std::ostream& out) {
    out.precision(17);
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const auto& n = graph.nodes[i];
        out << "n " << n.vertex << ' ' << n.pos[0] << ' ' << n.pos[1] << ' ' << n.pos[2] << ' '
            << n.density << '\n';
    }
    for (const auto& l : graph.links) out << "a " << l[0] << ' ' << l[1] << '\n';
}

void save_skeleton(const SkeletonGraph& graph, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write skeleton file " + path);
    save_skeleton(graph, out);
}

SkeletonGraph load_skeleton(std::istream& in, const char* stream_name) {
    SkeletonGraph g;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto pos = line.find('#');
        if (pos != std::string::npos) line.resize(pos);
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        auto fail = [&](const std::string& what) {
            throw std::runtime_error(std::string(stream_name) + ":" + std::to_string(lineno) +
                                     ": " + what);
        };
        if (tag == "n") {
            SkeletonGraph::Node n{};
            if (!(ls >> n.vertex >> n.pos[0] >> n.pos[1] >> n.pos[2] >> n.density))
                fail("malformed node line");
            g.nodes.push_back(n);
        } else if (tag == "a") {
            std::array<int, 2> l{};
            if (!(ls >> l[0] >> l[1])) fail("malformed arc line");
            if (l[0] < 0 || l[1] < 0 || l[0] >= static_cast<int>(g.nodes.size()) ||
                l[1] >= static_cast<int>(g.nodes.size()))
                fail("arc references missing node");
            g.links.push_back(l);
        } else {
            fail("unknown record '" + tag + "'");
        }
    }
    g.arcs = decompose_arcs(g.nodes, g.links);
    return g;
}

SkeletonGraph load_skeleton(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open skeleton file " + path);
    return load_skeleton(in, path.c_str());
}

}  // namespace skeltree
