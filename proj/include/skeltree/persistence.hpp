#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "skeltree/complex.hpp"

namespace skeltree {

/// A simplex reference: dimension (0..2) plus index into the owning list.
struct Cell {
    int dim = 0;
    int idx = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Total order of all simplices refining the lower-star filtration.
/// The sort key is (max-vertex rank, dimension, descending vertex ranks),
/// where vertex rank orders vertices by (f value, index); equal function
/// values are thereby disambiguated as if perturbed infinitesimally.
/// Faces always precede cofaces.
struct FiltrationOrder {
    std::vector<Cell> cells;    // simplices in filtration order
    std::vector<double> value;  // filtration value per position (max vertex f)
    std::vector<int> vertex_rank;  // genericity order of vertices
    std::vector<int> vertex_pos, edge_pos, tri_pos;  // cell -> position

    int position(Cell c) const {
        return c.dim == 0 ? vertex_pos[c.idx] : (c.dim == 1 ? edge_pos[c.idx] : tri_pos[c.idx]);
    }
};

FiltrationOrder lower_star_order(const Complex2& complex, std::span<const double> f);

constexpr double kInfinitePersistence = std::numeric_limits<double>::infinity();

struct PersistencePair {
    Cell birth, death;
    double persistence = 0.0;  // value(death) - value(birth), >= 0
};

/// Pairing of the lower-star filtration: vertex-edge pairs (dim 0),
/// edge-triangle pairs (dim 1), and unpaired (essential) simplices.
/// Identical to the output of naive left-to-right boundary-matrix reduction.
struct PersistencePairing {
    std::vector<PersistencePair> vertex_edge;
    std::vector<PersistencePair> edge_triangle;
    std::vector<Cell> essential;

    std::size_t pair_count() const { return vertex_edge.size() + edge_triangle.size(); }
};

/// Dimension-0 pairs come from union-find with the elder rule; dimension-1
/// pairs from column reduction of the triangle block (the vertex-edge block
/// need not be reduced once the triangle block has claimed its pivots, which
/// is the clearing optimisation on a 2-skeleton).
PersistencePairing compute_pairing(const Complex2& complex, const FiltrationOrder& order);

/// `dim birth death persistence` per pair, essential simplices with `inf`.
void write_pairing(const PersistencePairing& pairing, const Complex2& complex, std::ostream& out);

}  // namespace skeltree
