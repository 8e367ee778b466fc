#include "skeltree/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace skeltree {

namespace {

double seg_dist2(const std::array<double, 3>& p, const std::array<double, 3>& a,
                 const std::array<double, 3>& b) {
    std::array<double, 3> ab{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    std::array<double, 3> ap{p[0] - a[0], p[1] - a[1], p[2] - a[2]};
    double len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    double t = len2 > 0 ? (ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double dx = ap[0] - t * ab[0], dy = ap[1] - t * ab[1], dz = ap[2] - t * ab[2];
    return dx * dx + dy * dy + dz * dz;
}

}  // namespace

int PhantomSpec::leaf_count() const {
    std::vector<int> degree(nodes.size(), 0);
    for (const auto& s : segments) {
        ++degree[s.a];
        ++degree[s.b];
    }
    int n = 0;
    for (int d : degree)
        if (d == 1) ++n;
    return n;
}

void PhantomSpec::validate() const {
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
        throw std::invalid_argument("phantom dims must be positive");
    if (tube_sigma <= 0) throw std::invalid_argument("phantom tube sigma must be > 0");
    if (noise < 0) throw std::invalid_argument("phantom noise must be >= 0");
    if (nodes.empty() || segments.empty())
        throw std::invalid_argument("phantom needs at least one segment");
    for (const auto& n : nodes)
        if (n[0] < 0 || n[1] < 0 || n[2] < 0 || n[0] > dims[0] - 1 || n[1] > dims[1] - 1 ||
            n[2] > dims[2] - 1)
            throw std::invalid_argument("phantom node outside volume bounds");
    for (const auto& s : segments)
        if (s.a < 0 || s.b < 0 || s.a >= static_cast<int>(nodes.size()) ||
            s.b >= static_cast<int>(nodes.size()))
            throw std::invalid_argument("phantom segment references missing node");
}

PhantomSpec load_phantom_spec(std::istream& in, const char* stream_name) {
    PhantomSpec spec;
    spec.nodes.clear();
    spec.segments.clear();
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
        if (tag == "dims") {
            if (!(ls >> spec.dims[0] >> spec.dims[1] >> spec.dims[2])) fail("malformed dims");
        } else if (tag == "amplitude") {
            if (!(ls >> spec.amplitude)) fail("malformed amplitude");
        } else if (tag == "sigma") {
            if (!(ls >> spec.tube_sigma)) fail("malformed sigma");
        } else if (tag == "noise") {
            if (!(ls >> spec.noise)) fail("malformed noise");
        } else if (tag == "node") {
            std::array<double, 3> n{};
            if (!(ls >> n[0] >> n[1] >> n[2])) fail("malformed node");
            spec.nodes.push_back(n);
        } else if (tag == "seg") {
            PhantomSpec::Segment s;
            if (!(ls >> s.a >> s.b)) fail("malformed segment");
            std::string flag;
            if (ls >> flag) {
                if (flag == "gap") s.gap = true;
                else fail("unknown segment flag '" + flag + "'");
            }
            spec.segments.push_back(s);
        } else {
            fail("unknown record '" + tag + "'");
        }
    }
    spec.validate();
    return spec;
}

PhantomSpec load_phantom_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open phantom spec " + path);
    return load_phantom_spec(in, path.c_str());
}

void save_phantom_spec(const PhantomSpec& spec, std::ostream& out) {
    out.precision(17);
    out << "dims " << spec.dims[0] << ' ' << spec.dims[1] << ' ' << spec.dims[2] << '\n';
    out << "amplitude " << spec.amplitude << '\n';
    out << "sigma " << spec.tube_sigma << '\n';
    out << "noise " << spec.noise << '\n';
    for (const auto& n : spec.nodes) out << "node " << n[0] << ' ' << n[1] << ' ' << n[2] << '\n';
    for (const auto& s : spec.segments) {
        out << "seg " << s.a << ' ' << s.b;
        if (s.gap) out << " gap";
        out << '\n';
    }
}

Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
    spec.validate();
    Phantom ph;
    ph.spec = spec;
    ph.volume = make_volume(spec.dims, 0.0);

    const double margin = 4.0 * spec.tube_sigma;
    for (const auto& s : spec.segments) {
        if (s.gap) continue;
        const auto& a = spec.nodes[s.a];
        const auto& b = spec.nodes[s.b];
        int x0 = std::max(0, static_cast<int>(std::floor(std::min(a[0], b[0]) - margin)));
        int y0 = std::max(0, static_cast<int>(std::floor(std::min(a[1], b[1]) - margin)));
        int z0 = std::max(0, static_cast<int>(std::floor(std::min(a[2], b[2]) - margin)));
        int x1 = std::min(spec.dims[0] - 1,
                          static_cast<int>(std::ceil(std::max(a[0], b[0]) + margin)));
        int y1 = std::min(spec.dims[1] - 1,
                          static_cast<int>(std::ceil(std::max(a[1], b[1]) + margin)));
        int z1 = std::min(spec.dims[2] - 1,
                          static_cast<int>(std::ceil(std::max(a[2], b[2]) + margin)));
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    double d2 = seg_dist2({double(x), double(y), double(z)}, a, b);
                    double v = spec.amplitude *
                               std::exp(-d2 / (2.0 * spec.tube_sigma * spec.tube_sigma));
                    double& cell = ph.volume.at(x, y, z);
                    cell = std::max(cell, v);
                }
    }

    if (spec.noise > 0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(0.0, spec.noise * spec.amplitude);
        for (auto& v : ph.volume.values) v += dist(rng);
    }
    return ph;
}

ReconGeometry recon_from_trees(const std::vector<SummaryTree>& trees) {
    ReconGeometry g;
    for (const auto& t : trees) {
        int base = static_cast<int>(g.points.size());
        for (const auto& n : t.nodes) g.points.push_back(n.pos);
        for (std::size_t n = 0; n < t.nodes.size(); ++n)
            if (t.parent[n] >= 0) g.segments.push_back({base + t.parent[n], base + int(n)});
        g.leaf_count += static_cast<int>(t.leaves().size());
        ++g.component_count;
    }
    return g;
}

ReconGeometry load_swc(std::istream& in, const char* stream_name) {
    ReconGeometry g;
    std::vector<int> degree;
    std::string line;
    int lineno = 0;
    std::vector<int> id_map;  // SWC id -> point index
    std::vector<std::array<int, 2>> pending;
    while (std::getline(in, line)) {
        ++lineno;
        auto pos = line.find('#');
        if (pos != std::string::npos) line.resize(pos);
        std::istringstream ls(line);
        long long id, type, parent;
        double x, y, z, r;
        if (!(ls >> id)) continue;
        if (!(ls >> type >> x >> y >> z >> r >> parent))
            throw std::runtime_error(std::string(stream_name) + ":" + std::to_string(lineno) +
                                     ": malformed SWC line");
        if (id < 1)
            throw std::runtime_error(std::string(stream_name) + ":" + std::to_string(lineno) +
                                     ": SWC ids must be >= 1");
        if (static_cast<std::size_t>(id) >= id_map.size()) id_map.resize(id + 1, -1);
        id_map[id] = static_cast<int>(g.points.size());
        g.points.push_back({x, y, z});
        if (parent >= 1) pending.push_back({static_cast<int>(id), static_cast<int>(parent)});
        else ++g.component_count;
    }
    degree.assign(g.points.size(), 0);
    std::vector<char> is_root(g.points.size(), 0);
    for (std::size_t i = 0; i < g.points.size(); ++i) is_root[i] = 1;
    for (const auto& [id, parent] : pending) {
        if (parent >= static_cast<int>(id_map.size()) || id_map[parent] < 0)
            throw std::runtime_error(std::string(stream_name) + ": SWC parent id " +
                                     std::to_string(parent) + " not defined");
        int a = id_map[id], b = id_map[parent];
        g.segments.push_back({b, a});
        ++degree[a];
        ++degree[b];
        is_root[a] = 0;
    }
    for (std::size_t i = 0; i < g.points.size(); ++i)
        if (degree[i] == 1 && !is_root[i]) ++g.leaf_count;
    return g;
}

ReconGeometry load_swc(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open SWC file " + path);
    return load_swc(in, path.c_str());
}

ScoreResult score(const ReconGeometry& recon, const PhantomSpec& truth, double epsilon) {
    if (epsilon <= 0) throw std::invalid_argument("score: epsilon must be > 0");
    ScoreResult r;
    r.leaf_delta = recon.leaf_count - truth.leaf_count();
    r.connected = recon.component_count == 1;
    if (recon.points.empty()) {
        r.empty_reconstruction = true;
        return r;
    }

    const double eps2 = epsilon * epsilon;
    auto truth_dist2 = [&](const std::array<double, 3>& p) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : truth.segments)
            best = std::min(best, seg_dist2(p, truth.nodes[s.a], truth.nodes[s.b]));
        return best;
    };
    std::size_t hit = 0;
    for (const auto& p : recon.points)
        if (truth_dist2(p) <= eps2) ++hit;
    r.precision = static_cast<double>(hit) / recon.points.size();

    auto recon_dist2 = [&](const std::array<double, 3>& p) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : recon.segments)
            best = std::min(best, seg_dist2(p, recon.points[s[0]], recon.points[s[1]]));
        for (const auto& q : recon.points) {  // covers segment-free reconstructions
            double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
            best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        return best;
    };
    std::size_t samples = 0, covered = 0;
    const double step = epsilon / 2.0;
    for (const auto& s : truth.segments) {
        const auto& a = truth.nodes[s.a];
        const auto& b = truth.nodes[s.b];
        double dx = b[0] - a[0], dy = b[1] - a[1], dz = b[2] - a[2];
        double seg_len = std::sqrt(dx * dx + dy * dy + dz * dz);
        int n = std::max(1, static_cast<int>(std::ceil(seg_len / step)));
        for (int i = 0; i <= n; ++i) {
            double t = static_cast<double>(i) / n;
            std::array<double, 3> p{a[0] + t * dx, a[1] + t * dy, a[2] + t * dz};
            ++samples;
            if (recon_dist2(p) <= eps2) ++covered;
        }
    }
    r.recall = samples ? static_cast<double>(covered) / samples : 0.0;
    return r;
}

}  // namespace skeltree
