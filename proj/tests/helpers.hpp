#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "skeltree/complex.hpp"
#include "skeltree/persistence.hpp"

namespace testutil {

using skeltree::Cell;
using skeltree::Complex2;
using skeltree::FiltrationOrder;
using skeltree::PersistencePairing;

/// Random abstract 2-complex, closed under faces, with <= ~200 simplices.
inline Complex2 random_complex(std::mt19937& rng, int max_vertices = 12) {
    std::uniform_int_distribution<int> nv_dist(1, max_vertices);
    std::uniform_real_distribution<double> coord(0.0, 10.0);
    std::bernoulli_distribution edge_keep(0.4), tri_keep(0.5);
    Complex2 c;
    int nv = nv_dist(rng);
    for (int i = 0; i < nv; ++i)
        c.vertices.push_back({{coord(rng), coord(rng), coord(rng)}, coord(rng)});
    std::set<std::pair<int, int>> edges;
    for (int i = 0; i < nv; ++i)
        for (int j = i + 1; j < nv; ++j)
            if (edge_keep(rng)) edges.insert({i, j});
    for (int i = 0; i < nv; ++i)
        for (int j = i + 1; j < nv; ++j)
            for (int k = j + 1; k < nv; ++k)
                if (edges.count({i, j}) && edges.count({i, k}) && edges.count({j, k}) &&
                    tri_keep(rng))
                    c.triangles.push_back({i, j, k});
    for (auto [a, b] : edges) c.edges.push_back({a, b});
    c.finalize();
    return c;
}

/// Vertex values; adversarial mode draws from a tiny value set to force ties.
inline std::vector<double> random_values(std::mt19937& rng, std::size_t n, bool adversarial) {
    std::vector<double> f(n);
    if (adversarial) {
        std::uniform_int_distribution<int> d(0, 2);
        for (auto& v : f) v = d(rng);
    } else {
        std::uniform_real_distribution<double> d(0.0, 1.0);
        for (auto& v : f) v = d(rng);
    }
    return f;
}

/// Naive left-to-right boundary-matrix reduction over filtration positions.
/// Returns (birth position, death position) pairs, sorted.
inline std::vector<std::pair<int, int>> naive_reduction(const Complex2& c,
                                                        const FiltrationOrder& order) {
    int n = static_cast<int>(order.cells.size());
    std::vector<std::vector<int>> col(n);  // ascending row positions
    for (int j = 0; j < n; ++j) {
        Cell cell = order.cells[j];
        if (cell.dim == 1) {
            col[j] = {order.vertex_pos[c.edges[cell.idx][0]],
                      order.vertex_pos[c.edges[cell.idx][1]]};
        } else if (cell.dim == 2) {
            auto t = c.triangles[cell.idx];
            col[j] = {order.edge_pos[c.edge_id(t[0], t[1])],
                      order.edge_pos[c.edge_id(t[0], t[2])],
                      order.edge_pos[c.edge_id(t[1], t[2])]};
        }
        std::sort(col[j].begin(), col[j].end());
    }
    std::vector<int> pivot_owner(n, -1);
    std::vector<std::pair<int, int>> pairs;
    for (int j = 0; j < n; ++j) {
        while (!col[j].empty()) {
            int low = col[j].back();
            int owner = pivot_owner[low];
            if (owner < 0) {
                pivot_owner[low] = j;
                pairs.emplace_back(low, j);
                break;
            }
            std::vector<int> merged;
            std::set_symmetric_difference(col[j].begin(), col[j].end(), col[owner].begin(),
                                          col[owner].end(), std::back_inserter(merged));
            col[j] = std::move(merged);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

/// compute_pairing output flattened to (birth position, death position).
inline std::vector<std::pair<int, int>> pairing_positions(const PersistencePairing& p,
                                                          const FiltrationOrder& order) {
    std::vector<std::pair<int, int>> out;
    for (const auto& pr : p.vertex_edge)
        out.emplace_back(order.position(pr.birth), order.position(pr.death));
    for (const auto& pr : p.edge_triangle)
        out.emplace_back(order.position(pr.birth), order.position(pr.death));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace testutil
