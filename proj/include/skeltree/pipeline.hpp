#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "skeltree/tiling.hpp"
#include "skeltree/treeify.hpp"

namespace skeltree {

/// End-to-end run parameters: smooth -> complex -> skeletonize -> treeify ->
/// simplify -> SWC. Exactly one of tree_tau / keep_n may be set.
struct PipelineConfig {
    std::string input;                 // raw volume (.raw + .hdr) or point list
    std::string input_format = "auto"; // "raw" | "points" | "auto" by extension

    double smooth_sigma = 0.0;  // 0 disables smoothing
    int smooth_radius = 0;      // 0 -> ceil(3 * sigma)

    double threshold = 0.0;     // complex inclusion: density strictly above
    double skeleton_tau = 0.0;  // persistence simplification threshold

    std::optional<TreeStrategy> strategy;  // default: spt iff root hint given
    std::optional<std::array<double, 3>> root_hint;
    std::optional<double> tree_tau;
    std::optional<int> keep_n;
    WeightMode weight = WeightMode::Uniform;

    bool tiled = false;
    TileLayout layout;
    double merge_tau = -1.0;  // < 0 -> skeleton_tau
    double diffuse_sigma = 5.0;
    int workers = 1;
    std::string tile_dir;  // optional per-tile checkpoint directory

    std::string output_dir = ".";
    std::string output_prefix = "tree";
    std::string report_path;  // empty -> <output_dir>/<prefix>_report.json
    bool density_radius = false;

    void validate() const;  // throws std::invalid_argument
};

/// key=value text file mirroring the CLI flag names (e.g. `tau=0.5`,
/// `root=12,40,3`); `#` comments and blank lines allowed.
PipelineConfig load_pipeline_config(std::istream& in, const char* stream_name = "<stream>");
PipelineConfig load_pipeline_config(const std::string& path);

/// Applies one key=value entry; shared by the file loader and flag overrides.
void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value, const std::string& where);

struct PipelineResult {
    std::vector<SummaryTree> trees;
    std::vector<std::string> swc_paths;  // one per connected component
    bool empty = false;                  // skeleton had no nodes (exit 2)
    nlohmann::json report;
};

PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace skeltree
