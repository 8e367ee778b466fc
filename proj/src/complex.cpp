#include "skeltree/complex.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace skeltree {

namespace {

std::uint64_t edge_key(int a, int b) {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Unit-cube 2-skeleton templates for the Freudenthal split along the main
// diagonal. Edges go from a lattice point p to p+d; triangles are
// {p, p+d1, p+d1+d2} for nonzero d1, d2 with disjoint support, which keeps the
// induced triangulation identical on faces shared by neighbouring cubes.
constexpr std::array<std::array<int, 3>, 7> kEdgeDirs = {{
    {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1},
}};

struct TriTemplate {
    std::array<int, 3> d1;
    std::array<int, 3> dsum;
};

std::vector<TriTemplate> tri_templates() {
    std::vector<TriTemplate> out;
    for (const auto& d1 : kEdgeDirs)
        for (const auto& d2 : kEdgeDirs) {
            bool disjoint = true;
            for (int c = 0; c < 3; ++c)
                if (d1[c] && d2[c]) disjoint = false;
            if (!disjoint) continue;
            out.push_back({d1, {d1[0] + d2[0], d1[1] + d2[1], d1[2] + d2[2]}});
        }
    return out;
}

}  // namespace

int Complex2::edge_id(int a, int b) const {
    if (a > b) std::swap(a, b);
    auto it = edge_lookup_.find(edge_key(a, b));
    return it == edge_lookup_.end() ? -1 : it->second;
}

void Complex2::finalize() {
    const int nv = static_cast<int>(vertices.size());

    for (auto& e : edges) {
        if (e[0] > e[1]) std::swap(e[0], e[1]);
        if (e[0] < 0 || e[1] >= nv) throw std::runtime_error("edge references missing vertex");
        if (e[0] == e[1]) throw std::runtime_error("degenerate edge");
    }
    for (auto& t : triangles) {
        std::sort(t.begin(), t.end());
        if (t[0] < 0 || t[2] >= nv) throw std::runtime_error("triangle references missing vertex");
        if (t[0] == t[1] || t[1] == t[2]) throw std::runtime_error("degenerate triangle");
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
        throw std::runtime_error("duplicate edge");
    std::sort(triangles.begin(), triangles.end());
    if (std::adjacent_find(triangles.begin(), triangles.end()) != triangles.end())
        throw std::runtime_error("duplicate triangle");

    edge_lookup_.clear();
    edge_lookup_.reserve(edges.size() * 2);
    for (int i = 0; i < static_cast<int>(edges.size()); ++i)
        edge_lookup_.emplace(edge_key(edges[i][0], edges[i][1]), i);

    vertex_edges.assign(vertices.size(), {});
    for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
        vertex_edges[edges[i][0]].push_back(i);
        vertex_edges[edges[i][1]].push_back(i);
    }

    edge_triangles.assign(edges.size(), {});
    for (int i = 0; i < static_cast<int>(triangles.size()); ++i) {
        const auto& t = triangles[i];
        const std::array<std::array<int, 2>, 3> sides = {{{t[0], t[1]}, {t[0], t[2]}, {t[1], t[2]}}};
        for (const auto& s : sides) {
            int e = edge_id(s[0], s[1]);
            if (e < 0)
                throw std::runtime_error("closure violation: triangle (" + std::to_string(t[0]) +
                                         "," + std::to_string(t[1]) + "," + std::to_string(t[2]) +
                                         ") missing boundary edge (" + std::to_string(s[0]) + "," +
                                         std::to_string(s[1]) + ")");
            edge_triangles[e].push_back(i);
        }
    }
}

Complex2 build_grid_complex(const DensityVolume& volume, double threshold) {
    volume.validate();
    const auto& dims = volume.dims;

    Complex2 c;
    // voxel -> vertex id, scan order x-fastest so ids increase along every
    // positive template offset
    std::vector<int> vid(volume.voxel_count(), -1);
    for (int z = 0; z < dims[2]; ++z)
        for (int y = 0; y < dims[1]; ++y)
            for (int x = 0; x < dims[0]; ++x) {
                std::size_t idx = volume.index(x, y, z);
                double d = volume.values[idx];
                if (!(d > threshold)) continue;
                vid[idx] = static_cast<int>(c.vertices.size());
                c.vertices.push_back({{x * volume.spacing[0], y * volume.spacing[1],
                                       z * volume.spacing[2]},
                                      d});
            }

    static const auto tris = tri_templates();
    for (int z = 0; z < dims[2]; ++z)
        for (int y = 0; y < dims[1]; ++y)
            for (int x = 0; x < dims[0]; ++x) {
                int a = vid[volume.index(x, y, z)];
                if (a < 0) continue;
                for (const auto& d : kEdgeDirs) {
                    int bx = x + d[0], by = y + d[1], bz = z + d[2];
                    if (!volume.in_bounds(bx, by, bz)) continue;
                    int b = vid[volume.index(bx, by, bz)];
                    if (b >= 0) c.edges.push_back({a, b});
                }
                for (const auto& t : tris) {
                    int bx = x + t.d1[0], by = y + t.d1[1], bz = z + t.d1[2];
                    int cx = x + t.dsum[0], cy = y + t.dsum[1], cz = z + t.dsum[2];
                    if (!volume.in_bounds(cx, cy, cz)) continue;
                    int b = vid[volume.index(bx, by, bz)];
                    int cc = vid[volume.index(cx, cy, cz)];
                    if (b >= 0 && cc >= 0) c.triangles.push_back({a, b, cc});
                }
            }

    c.finalize();
    return c;
}

Complex2 load_complex(std::istream& in, const char* stream_name) {
    Complex2 c;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error(std::string(stream_name) + ":" + std::to_string(lineno) + ": " +
                                 what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto pos = line.find('#');
        if (pos != std::string::npos) line.resize(pos);
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Complex2::Vertex v;
            if (!(ls >> v.pos[0] >> v.pos[1] >> v.pos[2] >> v.density))
                fail("malformed vertex line");
            c.vertices.push_back(v);
        } else if (tag == "e") {
            int i, j;
            if (!(ls >> i >> j)) fail("malformed edge line");
            if (i < 0 || j < 0 || i >= static_cast<int>(c.vertices.size()) ||
                j >= static_cast<int>(c.vertices.size()))
                fail("edge references vertex not yet defined");
            c.edges.push_back({i, j});
        } else if (tag == "t") {
            int i, j, k;
            if (!(ls >> i >> j >> k)) fail("malformed triangle line");
            if (i < 0 || j < 0 || k < 0 || i >= static_cast<int>(c.vertices.size()) ||
                j >= static_cast<int>(c.vertices.size()) ||
                k >= static_cast<int>(c.vertices.size()))
                fail("triangle references vertex not yet defined");
            c.triangles.push_back({i, j, k});
        } else {
            fail("unknown record '" + tag + "'");
        }
    }
    try {
        c.finalize();
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(stream_name) + ": " + e.what());
    }
    return c;
}

Complex2 load_complex(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open complex file " + path);
    return load_complex(in, path.c_str());
}

void save_complex(const Complex2& complex, std::ostream& out) {
    out.precision(17);
    for (const auto& v : complex.vertices)
        out << "v " << v.pos[0] << ' ' << v.pos[1] << ' ' << v.pos[2] << ' ' << v.density << '\n';
    for (const auto& e : complex.edges) out << "e " << e[0] << ' ' << e[1] << '\n';
    for (const auto& t : complex.triangles)
        out << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void save_complex(const Complex2& complex, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write complex file " + path);
    save_complex(complex, out);
}

int connected_components(const Complex2& complex) {
    std::vector<int> parent(complex.vertices.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    int n = static_cast<int>(complex.vertices.size());
    for (const auto& e : complex.edges) {
        int a = find(e[0]), b = find(e[1]);
        if (a != b) {
            parent[a] = b;
            --n;
        }
    }
    return n;
}

}  // namespace skeltree
