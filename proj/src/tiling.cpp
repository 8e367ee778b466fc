#include "skeltree/tiling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include "skeltree/log.hpp"

namespace skeltree {

namespace {

// start/width pairs along one axis
std::vector<std::array<int, 2>> axis_tiles(int dim, int tile, int overlap) {
    std::vector<std::array<int, 2>> out;
    out.push_back({0, std::min(tile, dim)});
    while (out.back()[0] + out.back()[1] < dim) {
        int s = out.back()[0] + out.back()[1] - overlap;
        out.push_back({s, std::min(tile, dim - s)});
    }
    return out;
}

std::uint64_t voxel_key(const std::array<int, 3>& v, const std::array<int, 3>& dims) {
    return static_cast<std::uint64_t>(v[0]) +
           static_cast<std::uint64_t>(dims[0]) *
               (static_cast<std::uint64_t>(v[1]) +
                static_cast<std::uint64_t>(dims[1]) * static_cast<std::uint64_t>(v[2]));
}

constexpr std::array<std::array<int, 3>, 7> kEdgeDirs = {{
    {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1},
}};

}  // namespace

std::vector<Tile> partition(const DensityVolume& volume, const TileLayout& layout) {
    volume.validate();
    if (layout.overlap <= 0) throw std::invalid_argument("tile overlap must be positive");
    if (layout.tile_x <= layout.overlap || layout.tile_y <= layout.overlap)
        throw std::invalid_argument("tile size must exceed overlap");

    auto xs = axis_tiles(volume.dims[0], layout.tile_x, layout.overlap);
    auto ys = axis_tiles(volume.dims[1], layout.tile_y, layout.overlap);

    std::vector<Tile> tiles;
    tiles.reserve(xs.size() * ys.size());
    for (const auto& ty : ys)
        for (const auto& tx : xs) {
            Tile t;
            t.index = static_cast<int>(tiles.size());
            t.offset = {tx[0], ty[0], 0};
            t.volume = make_volume({tx[1], ty[1], volume.dims[2]}, 0.0, volume.spacing);
            for (int z = 0; z < volume.dims[2]; ++z)
                for (int y = 0; y < ty[1]; ++y)
                    for (int x = 0; x < tx[1]; ++x)
                        t.volume.at(x, y, z) = volume.at(tx[0] + x, ty[0] + y, z);
            tiles.push_back(std::move(t));
        }
    return tiles;
}

namespace {

GlobalSkeleton to_global(const SkeletonGraph& graph, const Tile& tile) {
    GlobalSkeleton out;
    out.tile = tile.index;
    const auto& sp = tile.volume.spacing;
    for (const auto& n : graph.nodes) {
        std::array<int, 3> voxel{
            static_cast<int>(std::llround(n.pos[0] / sp[0])) + tile.offset[0],
            static_cast<int>(std::llround(n.pos[1] / sp[1])) + tile.offset[1],
            static_cast<int>(std::llround(n.pos[2] / sp[2])) + tile.offset[2],
        };
        out.nodes.push_back({voxel, n.density});
    }
    out.links = graph.links;
    return out;
}

std::string tile_file(const std::string& dir, int index) {
    return dir + "/tile_" + std::to_string(index) + ".skel";
}

GlobalSkeleton load_tile_skeleton(const std::string& path, int index) {
    SkeletonGraph g = load_skeleton(path);
    GlobalSkeleton out;
    out.tile = index;
    for (const auto& n : g.nodes) {
        // persisted positions are global voxel coordinates
        out.nodes.push_back({{static_cast<int>(std::llround(n.pos[0])),
                              static_cast<int>(std::llround(n.pos[1])),
                              static_cast<int>(std::llround(n.pos[2]))},
                             n.density});
    }
    out.links = g.links;
    return out;
}

void save_tile_skeleton(const GlobalSkeleton& skel, const std::string& path) {
    SkeletonGraph g;
    for (std::size_t i = 0; i < skel.nodes.size(); ++i) {
        const auto& n = skel.nodes[i];
        g.nodes.push_back({static_cast<int>(i),
                           {static_cast<double>(n.voxel[0]), static_cast<double>(n.voxel[1]),
                            static_cast<double>(n.voxel[2])},
                           n.density});
    }
    g.links = skel.links;
    save_skeleton(g, path);
}

}  // namespace

std::vector<GlobalSkeleton> skeletonize_tiles(const std::vector<Tile>& tiles, double threshold,
                                              double tau, int workers,
                                              const std::string& tile_dir) {
    if (!tile_dir.empty()) std::filesystem::create_directories(tile_dir);

    std::vector<GlobalSkeleton> out(tiles.size());
    std::vector<std::string> errors(tiles.size());
    auto run_tile = [&](std::size_t i) {
        try {
            if (!tile_dir.empty()) {
                std::string path = tile_file(tile_dir, tiles[i].index);
                if (std::filesystem::exists(path)) {
                    out[i] = load_tile_skeleton(path, tiles[i].index);
                    return;
                }
            }
            Complex2 c = build_grid_complex(tiles[i].volume, threshold);
            SkeletonGraph g = c.vertices.empty() ? SkeletonGraph{} : extract_skeleton(c, tau);
            out[i] = to_global(g, tiles[i]);
            if (!tile_dir.empty()) save_tile_skeleton(out[i], tile_file(tile_dir, tiles[i].index));
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };

    if (workers <= 1 || tiles.size() < 2) {
        for (std::size_t i = 0; i < tiles.size(); ++i) run_tile(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (std::size_t i = next.fetch_add(1); i < tiles.size(); i = next.fetch_add(1))
                run_tile(i);
        };
        std::vector<std::thread> pool;
        std::size_t n = std::min<std::size_t>(workers, tiles.size());
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < tiles.size(); ++i)
        if (!errors[i].empty())
            throw std::runtime_error("tile " + std::to_string(tiles[i].index) + ": " + errors[i]);
    return out;
}

namespace {

// per-axis tile cover count, for identifying overlap bands
std::vector<int> axis_cover(int dim, int tile, int overlap) {
    std::vector<int> cover(dim, 0);
    for (const auto& t : axis_tiles(dim, tile, overlap))
        for (int i = t[0]; i < t[0] + t[1]; ++i) ++cover[i];
    return cover;
}

}  // namespace

MergeComplex build_merge_complex(const std::vector<GlobalSkeleton>& skeletons,
                                 const DensityVolume& volume, const TileLayout& layout,
                                 int neighborhood_radius) {
    volume.validate();
    if (neighborhood_radius < 1)
        throw std::invalid_argument("neighborhood radius must be >= 1");

    auto cx = axis_cover(volume.dims[0], layout.tile_x, layout.overlap);
    auto cy = axis_cover(volume.dims[1], layout.tile_y, layout.overlap);
    auto in_band = [&](const std::array<int, 3>& v) { return cx[v[0]] * cy[v[1]] >= 2; };

    MergeComplex mc;

    // union of skeleton vertices/edges, keyed by global voxel
    std::map<std::uint64_t, std::array<int, 3>> verts;
    std::set<std::array<std::uint64_t, 2>> edges;
    std::set<std::array<std::uint64_t, 3>> tris;
    std::map<std::uint64_t, double> boundary;  // V_b

    for (const auto& s : skeletons) {
        for (const auto& n : s.nodes) {
            std::uint64_t k = voxel_key(n.voxel, volume.dims);
            verts.emplace(k, n.voxel);
            if (in_band(n.voxel)) boundary.emplace(k, n.density);
        }
        for (const auto& l : s.links) {
            std::uint64_t a = voxel_key(s.nodes[l[0]].voxel, volume.dims);
            std::uint64_t b = voxel_key(s.nodes[l[1]].voxel, volume.dims);
            if (a > b) std::swap(a, b);
            edges.insert({a, b});
        }
    }
    mc.skeleton_simplices = verts.size() + edges.size();
    std::set<std::uint64_t> skeleton_keys;
    for (const auto& [k, v] : verts) skeleton_keys.insert(k);

    // triangulated cubic neighbourhoods around every boundary vertex
    const int r = neighborhood_radius;
    for (const auto& [bk, bd] : boundary) {
        const auto& center = verts.at(bk);
        std::size_t before = verts.size() + edges.size() + tris.size();
        auto in_box = [&](int x, int y, int z) {
            return volume.in_bounds(x, y, z) && std::abs(x - center[0]) <= r &&
                   std::abs(y - center[1]) <= r && std::abs(z - center[2]) <= r;
        };
        for (int z = center[2] - r; z <= center[2] + r; ++z)
            for (int y = center[1] - r; y <= center[1] + r; ++y)
                for (int x = center[0] - r; x <= center[0] + r; ++x) {
                    if (!in_box(x, y, z)) continue;
                    std::array<int, 3> p{x, y, z};
                    std::uint64_t pk = voxel_key(p, volume.dims);
                    verts.emplace(pk, p);
                    for (const auto& d : kEdgeDirs) {
                        if (!in_box(x + d[0], y + d[1], z + d[2])) continue;
                        std::uint64_t qk =
                            voxel_key({x + d[0], y + d[1], z + d[2]}, volume.dims);
                        edges.insert({pk, qk});
                    }
                    for (const auto& d1 : kEdgeDirs)
                        for (const auto& d2 : kEdgeDirs) {
                            bool disjoint = true;
                            for (int c = 0; c < 3; ++c)
                                if (d1[c] && d2[c]) disjoint = false;
                            if (!disjoint) continue;
                            int bx = x + d1[0], by = y + d1[1], bz = z + d1[2];
                            int cx2 = bx + d2[0], cy2 = by + d2[1], cz2 = bz + d2[2];
                            if (!in_box(cx2, cy2, cz2)) continue;
                            tris.insert({pk, voxel_key({bx, by, bz}, volume.dims),
                                         voxel_key({cx2, cy2, cz2}, volume.dims)});
                        }
                }
        mc.neighborhood_simplices += (verts.size() + edges.size() + tris.size()) - before;
    }

    // assemble as a Complex2; vertex order follows the global voxel key
    std::map<std::uint64_t, int> vid;
    for (const auto& [k, v] : verts) {
        int id = static_cast<int>(mc.complex.vertices.size());
        vid[k] = id;
        mc.complex.vertices.push_back(
            {{v[0] * volume.spacing[0], v[1] * volume.spacing[1], v[2] * volume.spacing[2]},
             volume.at(v[0], v[1], v[2])});
        mc.voxel.push_back(v);
        mc.on_skeleton.push_back(skeleton_keys.count(k) ? 1 : 0);
    }
    for (const auto& e : edges) mc.complex.edges.push_back({vid[e[0]], vid[e[1]]});
    for (const auto& t : tris)
        mc.complex.triangles.push_back({vid[t[0]], vid[t[1]], vid[t[2]]});
    mc.complex.finalize();

    for (const auto& [k, d] : boundary) mc.boundary_sources.push_back({verts.at(k), d});
    return mc;
}

std::vector<double> diffuse_density(const MergeComplex& merge, double sigma) {
    if (sigma <= 0) throw std::invalid_argument("diffuse_density: sigma must be > 0");
    const double cutoff2 = 9.0 * sigma * sigma;  // 3 sigma
    std::vector<double> out(merge.complex.vertices.size(), 0.0);
    for (std::size_t u = 0; u < out.size(); ++u) {
        const auto& uv = merge.voxel[u];
        double sum = 0.0;
        for (const auto& src : merge.boundary_sources) {
            double dx = uv[0] - src.voxel[0];
            double dy = uv[1] - src.voxel[1];
            double dz = uv[2] - src.voxel[2];
            double d2 = dx * dx + dy * dy + dz * dz;
            if (d2 > cutoff2) continue;
            sum += std::exp(-d2 / (2.0 * sigma * sigma)) * src.density;
        }
        out[u] = merge.on_skeleton[u] ? std::max(sum, merge.complex.vertices[u].density) : sum;
    }
    return out;
}

SkeletonGraph merge_skeletons(const MergeComplex& merge, const std::vector<double>& density,
                              double tau) {
    return extract_skeleton(merge.complex, density, tau);
}

namespace {

// lift the union of per-tile skeletons directly to a SkeletonGraph
SkeletonGraph union_graph(const std::vector<GlobalSkeleton>& skeletons,
                          const DensityVolume& volume) {
    std::map<std::uint64_t, GlobalSkeleton::Node> verts;
    std::set<std::array<std::uint64_t, 2>> edges;
    for (const auto& s : skeletons) {
        for (const auto& n : s.nodes) verts.emplace(voxel_key(n.voxel, volume.dims), n);
        for (const auto& l : s.links) {
            std::uint64_t a = voxel_key(s.nodes[l[0]].voxel, volume.dims);
            std::uint64_t b = voxel_key(s.nodes[l[1]].voxel, volume.dims);
            if (a > b) std::swap(a, b);
            edges.insert({a, b});
        }
    }
    SkeletonGraph g;
    std::map<std::uint64_t, int> node_of;
    for (const auto& [k, n] : verts) {
        node_of[k] = static_cast<int>(g.nodes.size());
        g.nodes.push_back({static_cast<int>(k),
                           {n.voxel[0] * volume.spacing[0], n.voxel[1] * volume.spacing[1],
                            n.voxel[2] * volume.spacing[2]},
                           n.density});
    }
    for (const auto& e : edges) g.links.push_back({node_of[e[0]], node_of[e[1]]});
    return g;
}

}  // namespace

SkeletonGraph skeletonize_tiled(const DensityVolume& volume, const TileLayout& layout,
                                double threshold, double tau, double merge_tau,
                                double diffuse_sigma, int neighborhood_radius, int workers,
                                const std::string& tile_dir, TilingStats* stats) {
    auto tiles = partition(volume, layout);
    auto skeletons = skeletonize_tiles(tiles, threshold, tau, workers, tile_dir);

    TilingStats local;
    TilingStats& st = stats ? *stats : local;
    st.tiles = static_cast<int>(tiles.size());

    bool any_boundary = false;
    {
        auto cx = axis_cover(volume.dims[0], layout.tile_x, layout.overlap);
        auto cy = axis_cover(volume.dims[1], layout.tile_y, layout.overlap);
        for (const auto& s : skeletons)
            for (const auto& n : s.nodes)
                if (cx[n.voxel[0]] * cy[n.voxel[1]] >= 2) any_boundary = true;
    }
    if (!any_boundary) {
        // nothing crosses a seam; the per-tile skeletons are already global
        st.merge_pass = false;
        return union_graph(skeletons, volume);
    }

    MergeComplex mc = build_merge_complex(skeletons, volume, layout, neighborhood_radius);
    st.merge_pass = true;
    st.boundary_sources = static_cast<int>(mc.boundary_sources.size());
    st.merge_simplices = mc.complex.simplex_count();
    st.simplex_bound = mc.skeleton_simplices + mc.neighborhood_simplices;
    log_info("merge complex: " + std::to_string(st.merge_simplices) + " simplices from " +
             std::to_string(st.boundary_sources) + " boundary sources");

    auto rho = diffuse_density(mc, diffuse_sigma);
    return merge_skeletons(mc, rho, merge_tau);
}

}  // namespace skeltree
