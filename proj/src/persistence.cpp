#include "skeltree/persistence.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace skeltree {

FiltrationOrder lower_star_order(const Complex2& complex, std::span<const double> f) {
    const int nv = static_cast<int>(complex.vertices.size());
    const int ne = static_cast<int>(complex.edges.size());
    const int nt = static_cast<int>(complex.triangles.size());
    if (static_cast<int>(f.size()) != nv)
        throw std::invalid_argument("lower_star_order: f must have one value per vertex");

    FiltrationOrder order;
    // genericity: vertices totally ordered by (f, index)
    std::vector<int> by_value(nv);
    std::iota(by_value.begin(), by_value.end(), 0);
    std::sort(by_value.begin(), by_value.end(), [&](int a, int b) {
        if (f[a] != f[b]) return f[a] < f[b];
        return a < b;
    });
    order.vertex_rank.assign(nv, 0);
    for (int r = 0; r < nv; ++r) order.vertex_rank[by_value[r]] = r;

    struct Key {
        std::array<int, 3> ranks{-1, -1, -1};  // descending, padded with -1
        int dim;
        Cell cell;
    };
    std::vector<Key> keys;
    keys.reserve(complex.simplex_count());
    auto push = [&](Cell c, std::initializer_list<int> verts) {
        Key k;
        k.dim = c.dim;
        k.cell = c;
        int i = 0;
        for (int v : verts) k.ranks[i++] = order.vertex_rank[v];
        std::sort(k.ranks.begin(), k.ranks.begin() + i, std::greater<>());
        keys.push_back(k);
    };
    for (int v = 0; v < nv; ++v) push({0, v}, {v});
    for (int e = 0; e < ne; ++e) push({1, e}, {complex.edges[e][0], complex.edges[e][1]});
    for (int t = 0; t < nt; ++t)
        push({2, t}, {complex.triangles[t][0], complex.triangles[t][1], complex.triangles[t][2]});

    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.ranks[0] != b.ranks[0]) return a.ranks[0] < b.ranks[0];
        if (a.dim != b.dim) return a.dim < b.dim;
        return a.ranks < b.ranks;
    });

    order.cells.reserve(keys.size());
    order.value.reserve(keys.size());
    order.vertex_pos.assign(nv, -1);
    order.edge_pos.assign(ne, -1);
    order.tri_pos.assign(nt, -1);
    for (std::size_t p = 0; p < keys.size(); ++p) {
        const Key& k = keys[p];
        order.cells.push_back(k.cell);
        order.value.push_back(f[by_value[k.ranks[0]]]);
        switch (k.cell.dim) {
            case 0: order.vertex_pos[k.cell.idx] = static_cast<int>(p); break;
            case 1: order.edge_pos[k.cell.idx] = static_cast<int>(p); break;
            default: order.tri_pos[k.cell.idx] = static_cast<int>(p); break;
        }
    }
    return order;
}

PersistencePairing compute_pairing(const Complex2& complex, const FiltrationOrder& order) {
    const int nv = static_cast<int>(complex.vertices.size());
    const int ne = static_cast<int>(complex.edges.size());

    PersistencePairing out;

    // --- dimension 0: union-find with the elder rule ------------------------
    // parent over vertices; each root remembers the oldest (lowest-rank)
    // vertex of its component, which is the component's birth simplex.
    std::vector<int> parent(nv), elder(nv);
    std::iota(parent.begin(), parent.end(), 0);
    std::iota(elder.begin(), elder.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };

    std::vector<char> edge_negative(ne, 0);  // killed a component
    std::vector<char> edge_paired(ne, 0);    // paired with a triangle
    for (Cell c : order.cells) {
        if (c.dim != 1) continue;
        int e = c.idx;
        int ra = find(complex.edges[e][0]);
        int rb = find(complex.edges[e][1]);
        if (ra == rb) continue;  // positive edge, births a 1-cycle
        int ea = elder[ra], eb = elder[rb];
        // the younger component (higher-rank elder vertex) dies here
        int dying = order.vertex_rank[ea] > order.vertex_rank[eb] ? ea : eb;
        int surviving = dying == ea ? eb : ea;
        parent[ra] = rb;
        elder[rb] = surviving;
        edge_negative[e] = 1;
        double per = order.value[order.edge_pos[e]] - order.value[order.vertex_pos[dying]];
        out.vertex_edge.push_back({{0, dying}, {1, e}, per});
    }

    // --- dimension 1: reduce the triangle block ------------------------------
    // Columns indexed by edge filtration position; the vertex-edge block never
    // needs reducing since its pivots are determined above (clearing).
    std::vector<int> pivot_owner(order.cells.size(), -1);  // edge pos -> triangle idx
    std::vector<std::vector<int>> reduced;                 // per triangle, sorted edge positions
    std::vector<int> tri_column_of(complex.triangles.size(), -1);

    std::vector<int> scratch;
    for (Cell c : order.cells) {
        if (c.dim != 2) continue;
        const auto& t = complex.triangles[c.idx];
        std::vector<int> col = {
            order.edge_pos[complex.edge_id(t[0], t[1])],
            order.edge_pos[complex.edge_id(t[0], t[2])],
            order.edge_pos[complex.edge_id(t[1], t[2])],
        };
        std::sort(col.begin(), col.end());
        while (!col.empty()) {
            int low = col.back();
            int owner = pivot_owner[low];
            if (owner < 0) break;
            // symmetric difference with the owning column
            const auto& other = reduced[tri_column_of[owner]];
            scratch.clear();
            std::set_symmetric_difference(col.begin(), col.end(), other.begin(), other.end(),
                                          std::back_inserter(scratch));
            col.swap(scratch);
        }
        if (col.empty()) {
            out.essential.push_back(c);  // positive triangle, unpaired in a 2-skeleton
            continue;
        }
        int low = col.back();
        pivot_owner[low] = c.idx;
        tri_column_of[c.idx] = static_cast<int>(reduced.size());
        int e = order.cells[low].idx;
        edge_paired[e] = 1;
        double per = order.value[order.tri_pos[c.idx]] - order.value[low];
        out.edge_triangle.push_back({{1, e}, {2, c.idx}, per});
        reduced.push_back(std::move(col));
    }

    // --- essentials, listed in filtration order ------------------------------
    for (Cell c : order.cells) {
        if (c.dim == 0) {
            if (elder[find(c.idx)] == c.idx) out.essential.push_back(c);
        } else if (c.dim == 1) {
            if (!edge_negative[c.idx] && !edge_paired[c.idx]) out.essential.push_back(c);
        }
    }
    // essential triangles were appended during reduction; restore global order
    std::sort(out.essential.begin(), out.essential.end(), [&](Cell a, Cell b) {
        return order.position(a) < order.position(b);
    });
    return out;
}

namespace {
void print_cell(std::ostream& out, const Complex2& c, Cell cell) {
    switch (cell.dim) {
        case 0: out << 'v' << cell.idx; break;
        case 1: out << 'e' << c.edges[cell.idx][0] << '-' << c.edges[cell.idx][1]; break;
        default:
            out << 't' << c.triangles[cell.idx][0] << '-' << c.triangles[cell.idx][1] << '-'
                << c.triangles[cell.idx][2];
    }
}
}  // namespace

void write_pairing(const PersistencePairing& pairing, const Complex2& complex, std::ostream& out) {
    out.precision(17);
    for (const auto& p : pairing.vertex_edge) {
        out << p.birth.dim << ' ';
        print_cell(out, complex, p.birth);
        out << ' ';
        print_cell(out, complex, p.death);
        out << ' ' << p.persistence << '\n';
    }
    for (const auto& p : pairing.edge_triangle) {
        out << p.birth.dim << ' ';
        print_cell(out, complex, p.birth);
        out << ' ';
        print_cell(out, complex, p.death);
        out << ' ' << p.persistence << '\n';
    }
    for (const auto& c : pairing.essential) {
        out << c.dim << ' ';
        print_cell(out, complex, c);
        out << " - inf\n";
    }
}

}  // namespace skeltree
