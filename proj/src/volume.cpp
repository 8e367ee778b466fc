#include "skeltree/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace skeltree {

void DensityVolume::validate() const {
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
        throw std::invalid_argument("volume dims must be positive");
    if (spacing[0] <= 0 || spacing[1] <= 0 || spacing[2] <= 0)
        throw std::invalid_argument("volume spacing must be positive");
    if (values.size() != voxel_count())
        throw std::invalid_argument("volume values size does not match dims");
}

DensityVolume make_volume(std::array<int, 3> dims, double fill, std::array<double, 3> spacing) {
    DensityVolume v;
    v.dims = dims;
    v.spacing = spacing;
    v.values.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], fill);
    v.validate();
    return v;
}

namespace {

// One-axis kernel table; the 3D kernel is the outer product, and in-bounds
// renormalisation factorises per axis because the clipped neighbourhood is a box.
std::vector<double> axis_kernel(double sigma, int radius, double step) {
    std::vector<double> k(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i) {
        double d = i * step;
        k[i + radius] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    }
    return k;
}

void smooth_axis(const std::vector<double>& in, std::vector<double>& out,
                 const std::array<int, 3>& dims, int axis,
                 const std::vector<double>& kernel, int radius, int workers) {
    const std::size_t nx = dims[0], ny = dims[1], nz = dims[2];
    const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? nx : nx * ny);
    const int extent = dims[axis];

    auto run = [&](std::size_t z0, std::size_t z1) {
        for (std::size_t z = z0; z < z1; ++z) {
            for (std::size_t y = 0; y < ny; ++y) {
                for (std::size_t x = 0; x < nx; ++x) {
                    std::size_t idx = x + nx * (y + ny * z);
                    int c = axis == 0 ? static_cast<int>(x)
                                      : (axis == 1 ? static_cast<int>(y) : static_cast<int>(z));
                    int lo = std::max(0, c - radius);
                    int hi = std::min(extent - 1, c + radius);
                    double sum = 0.0, wsum = 0.0;
                    for (int i = lo; i <= hi; ++i) {
                        double w = kernel[i - c + radius];
                        sum += w * in[idx + (i - c) * static_cast<std::ptrdiff_t>(stride)];
                        wsum += w;
                    }
                    out[idx] = sum / wsum;
                }
            }
        }
    };

    if (workers <= 1 || nz < 4) {
        run(0, nz);
        return;
    }
    std::size_t n = std::min<std::size_t>(workers, nz);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) {
        std::size_t z0 = nz * t / n, z1 = nz * (t + 1) / n;
        pool.emplace_back(run, z0, z1);
    }
    for (auto& th : pool) th.join();
}

}  // namespace

DensityVolume gaussian_smooth(const DensityVolume& volume, double sigma, int radius,
                              bool physical_distance, int workers) {
    volume.validate();
    if (sigma <= 0) throw std::invalid_argument("gaussian_smooth: sigma must be > 0");
    if (radius < 1) throw std::invalid_argument("gaussian_smooth: radius must be >= 1");

    DensityVolume out = volume;
    std::vector<double> a = volume.values;
    std::vector<double> b(volume.values.size());
    for (int axis = 0; axis < 3; ++axis) {
        double step = physical_distance ? volume.spacing[axis] : 1.0;
        auto kernel = axis_kernel(sigma, radius, step);
        smooth_axis(a, b, volume.dims, axis, kernel, radius, workers);
        std::swap(a, b);
    }
    out.values = std::move(a);
    return out;
}

DensityVolume read_volume(const std::string& raw_path) {
    std::ifstream hdr(raw_path + ".hdr");
    if (!hdr) throw std::runtime_error("cannot open volume header " + raw_path + ".hdr");
    DensityVolume v;
    std::string key;
    bool have_dims = false;
    while (hdr >> key) {
        if (key == "dims") {
            if (!(hdr >> v.dims[0] >> v.dims[1] >> v.dims[2]))
                throw std::runtime_error("bad dims line in " + raw_path + ".hdr");
            have_dims = true;
        } else if (key == "spacing") {
            if (!(hdr >> v.spacing[0] >> v.spacing[1] >> v.spacing[2]))
                throw std::runtime_error("bad spacing line in " + raw_path + ".hdr");
        } else {
            throw std::runtime_error("unknown header key '" + key + "' in " + raw_path + ".hdr");
        }
    }
    if (!have_dims) throw std::runtime_error("missing dims in " + raw_path + ".hdr");

    std::ifstream raw(raw_path, std::ios::binary);
    if (!raw) throw std::runtime_error("cannot open volume data " + raw_path);
    std::vector<float> buf(static_cast<std::size_t>(v.dims[0]) * v.dims[1] * v.dims[2]);
    raw.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (raw.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
        throw std::runtime_error("volume data " + raw_path + " shorter than header dims");
    v.values.assign(buf.begin(), buf.end());
    v.validate();
    return v;
}

void write_volume(const DensityVolume& volume, const std::string& raw_path) {
    volume.validate();
    std::ofstream hdr(raw_path + ".hdr");
    if (!hdr) throw std::runtime_error("cannot write volume header " + raw_path + ".hdr");
    hdr << "dims " << volume.dims[0] << ' ' << volume.dims[1] << ' ' << volume.dims[2] << '\n';
    hdr << "spacing " << volume.spacing[0] << ' ' << volume.spacing[1] << ' '
        << volume.spacing[2] << '\n';
    std::ofstream raw(raw_path, std::ios::binary);
    if (!raw) throw std::runtime_error("cannot write volume data " + raw_path);
    std::vector<float> buf(volume.values.begin(), volume.values.end());
    raw.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

DensityVolume rasterize_points_text(std::istream& in, const char* stream_name) {
    struct Point {
        double x, y, z, d;
    };
    std::vector<Point> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto pos = line.find('#');
        if (pos != std::string::npos) line.resize(pos);
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag != "p")
            throw std::runtime_error(std::string(stream_name) + ":" + std::to_string(lineno) +
                                     ": expected 'p x y z density' line");
        Point p{};
        if (!(ls >> p.x >> p.y >> p.z >> p.d))
            throw std::runtime_error(std::string(stream_name) + ":" + std::to_string(lineno) +
                                     ": malformed point line");
        pts.push_back(p);
    }
    if (pts.empty()) throw std::runtime_error(std::string(stream_name) + ": no points");

    std::array<int, 3> dims{1, 1, 1};
    for (const auto& p : pts) {
        if (p.x < 0 || p.y < 0 || p.z < 0)
            throw std::runtime_error(std::string(stream_name) + ": negative point coordinate");
        dims[0] = std::max(dims[0], static_cast<int>(std::llround(p.x)) + 1);
        dims[1] = std::max(dims[1], static_cast<int>(std::llround(p.y)) + 1);
        dims[2] = std::max(dims[2], static_cast<int>(std::llround(p.z)) + 1);
    }
    DensityVolume v = make_volume(dims, 0.0);
    for (const auto& p : pts) {
        int x = static_cast<int>(std::llround(p.x));
        int y = static_cast<int>(std::llround(p.y));
        int z = static_cast<int>(std::llround(p.z));
        double& cell = v.at(x, y, z);
        cell = std::max(cell, p.d);
    }
    return v;
}

DensityVolume rasterize_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open point file " + path);
    return rasterize_points_text(in, path.c_str());
}

}  // namespace skeltree
