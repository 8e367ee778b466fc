#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace skeltree {

/// A 3D scalar field sampled on a regular grid. Values are stored
/// x-fastest; spacing converts voxel indices to physical coordinates.
struct DensityVolume {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::vector<double> values;

    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(y) +
               static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
    }
    double at(int x, int y, int z) const { return values[index(x, y, z)]; }
    double& at(int x, int y, int z) { return values[index(x, y, z)]; }
    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    bool in_bounds(int x, int y, int z) const {
        return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
    }

    /// Throws std::invalid_argument on zero dims, non-positive spacing,
    /// or a values array of the wrong size.
    void validate() const;
};

DensityVolume make_volume(std::array<int, 3> dims, double fill = 0.0,
                          std::array<double, 3> spacing = {1.0, 1.0, 1.0});

/// Gaussian smoothing over the (2*radius+1)^3 neighbourhood. Kernel weights
/// exp(-d^2 / 2 sigma^2) are renormalised over the in-bounds samples, so a
/// constant field is a fixed point. Distances are measured in voxel index
/// units unless physical_distance is set, in which case spacing applies.
DensityVolume gaussian_smooth(const DensityVolume& volume, double sigma, int radius,
                              bool physical_distance = false, int workers = 0);

/// Raw volume I/O: 32-bit little-endian floats, x-fastest, with a text
/// sidecar header at <path>.hdr holding `dims x y z` and `spacing sx sy sz`.
DensityVolume read_volume(const std::string& raw_path);
void write_volume(const DensityVolume& volume, const std::string& raw_path);

/// Point-cloud ingestion: lines `p x y z density` (# comments allowed),
/// rasterised onto the bounding grid with max-combine per voxel.
DensityVolume rasterize_points(const std::string& path);
DensityVolume rasterize_points_text(std::istream& in, const char* stream_name = "<stream>");

}  // namespace skeltree
