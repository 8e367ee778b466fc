#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "skeltree/treeify.hpp"
#include "skeltree/volume.hpp"

namespace skeltree {

/// Ground-truth geometric tree plus rendering parameters for a synthetic
/// tube phantom. Gap segments are part of the truth but contribute no
/// density (they model signal dropouts).
struct PhantomSpec {
    std::array<int, 3> dims{64, 64, 64};
    double amplitude = 10.0;
    double tube_sigma = 1.5;
    double noise = 0.0;  // uniform additive noise amplitude, fraction of amplitude
    std::vector<std::array<double, 3>> nodes;
    struct Segment {
        int a = 0, b = 0;
        bool gap = false;
    };
    std::vector<Segment> segments;

    int leaf_count() const;
    void validate() const;
};

/// Text format: `dims nx ny nz`, `amplitude A`, `sigma s`, `noise f`,
/// `node x y z` (indexed in file order), `seg a b [gap]`; `#` comments.
PhantomSpec load_phantom_spec(std::istream& in, const char* stream_name = "<stream>");
PhantomSpec load_phantom_spec(const std::string& path);
void save_phantom_spec(const PhantomSpec& spec, std::ostream& out);

struct Phantom {
    PhantomSpec spec;
    DensityVolume volume;
};

/// Deterministic for a fixed seed: density = max over non-gap segments of
/// amplitude * exp(-d^2 / 2 sigma_t^2) plus uniform noise in
/// [0, noise * amplitude).
Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

/// Reconstruction geometry reduced to points and segments for scoring.
struct ReconGeometry {
    std::vector<std::array<double, 3>> points;
    std::vector<std::array<int, 2>> segments;
    int leaf_count = 0;
    int component_count = 0;
};

ReconGeometry recon_from_trees(const std::vector<SummaryTree>& trees);
ReconGeometry load_swc(std::istream& in, const char* stream_name = "<stream>");
ReconGeometry load_swc(const std::string& path);

struct ScoreResult {
    double precision = 0.0;  // fraction of reconstruction points within eps of truth
    double recall = 0.0;     // fraction of truth samples (step eps/2) within eps of recon
    int leaf_delta = 0;      // reconstruction leaves minus truth leaves
    bool connected = false;  // reconstruction is a single component
    bool empty_reconstruction = false;
};

ScoreResult score(const ReconGeometry& recon, const PhantomSpec& truth, double epsilon);

}  // namespace skeltree
