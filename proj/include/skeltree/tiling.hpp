#pragma once

#include <array>
#include <string>
#include <vector>

#include "skeltree/complex.hpp"
#include "skeltree/morse.hpp"
#include "skeltree/volume.hpp"

namespace skeltree {

/// Overlapping xy tiling; z is never partitioned.
struct TileLayout {
    int tile_x = 512;
    int tile_y = 512;
    int overlap = 5;
};

struct Tile {
    int index = 0;
    std::array<int, 3> offset{0, 0, 0};
    DensityVolume volume;
};

/// Deterministic cover of the volume. Adjacent tiles share exactly
/// `overlap` voxel columns; a final partial tile may be narrower than
/// tile_size but always wider than the overlap.
std::vector<Tile> partition(const DensityVolume& volume, const TileLayout& layout);

/// A per-tile skeleton lifted to global voxel coordinates.
struct GlobalSkeleton {
    struct Node {
        std::array<int, 3> voxel;
        double density;
    };
    std::vector<Node> nodes;
    std::vector<std::array<int, 2>> links;  // node-index pairs
    int tile = -1;
};

/// Threshold + skeletonize each tile independently, translating node
/// positions by the tile offset. When tile_dir is set, per-tile results are
/// persisted there as edge-list files and reused on rerun.
std::vector<GlobalSkeleton> skeletonize_tiles(const std::vector<Tile>& tiles, double threshold,
                                              double tau, int workers = 1,
                                              const std::string& tile_dir = "");

/// K_merge: the union of all per-tile skeleton simplices plus the grid
/// 2-skeleton of a cubic neighbourhood around every skeleton vertex that
/// falls inside an overlap band. Every simplex snaps to the global grid.
struct MergeComplex {
    Complex2 complex;                       // vertex densities are the originals
    std::vector<std::array<int, 3>> voxel;  // per complex vertex
    std::vector<char> on_skeleton;          // per complex vertex
    std::vector<GlobalSkeleton::Node> boundary_sources;  // V_b with densities

    std::size_t skeleton_simplices = 0;      // |union of S_i|
    std::size_t neighborhood_simplices = 0;  // sum of |C_i| before dedup
};

MergeComplex build_merge_complex(const std::vector<GlobalSkeleton>& skeletons,
                                 const DensityVolume& volume, const TileLayout& layout,
                                 int neighborhood_radius = 2);

/// Unnormalised Gaussian diffusion of the boundary-source densities onto
/// every K_merge vertex (cutoff at 3 sigma). Skeleton vertices keep
/// max(original, diffused) so interior arcs are not washed out.
std::vector<double> diffuse_density(const MergeComplex& merge, double sigma);

/// Re-skeletonize K_merge under the diffused density.
SkeletonGraph merge_skeletons(const MergeComplex& merge, const std::vector<double>& density,
                              double tau);

struct TilingStats {
    int tiles = 0;
    int boundary_sources = 0;
    std::size_t merge_simplices = 0;
    std::size_t simplex_bound = 0;  // |union S_i| + sum |C_i|
    bool merge_pass = false;        // false when no seam work was needed
};

/// Full divide-and-conquer pipeline: partition, per-tile skeletonization,
/// merge-complex construction, density diffusion, and the merge-phase
/// skeletonization. With no skeleton vertex in any overlap band the per-tile
/// skeletons are already globally consistent and are returned as-is.
SkeletonGraph skeletonize_tiled(const DensityVolume& volume, const TileLayout& layout,
                                double threshold, double tau, double merge_tau,
                                double diffuse_sigma = 5.0, int neighborhood_radius = 2,
                                int workers = 1, const std::string& tile_dir = "",
                                TilingStats* stats = nullptr);

}  // namespace skeltree
