#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skeltree/complex.hpp"
#include "skeltree/log.hpp"
#include "skeltree/morse.hpp"
#include "skeltree/persistence.hpp"
#include "skeltree/phantom.hpp"
#include "skeltree/pipeline.hpp"
#include "skeltree/tiling.hpp"
#include "skeltree/treeify.hpp"
#include "skeltree/volume.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitEmpty = 2;

int env_workers() {
    if (const char* v = std::getenv("SKELTREE_WORKERS")) {
        int n = std::atoi(v);
        if (n >= 1) return n;
        skeltree::log_warn("ignoring invalid SKELTREE_WORKERS value");
    }
    return 1;
}

skeltree::DensityVolume load_input_volume(const std::string& path) {
    auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".raw" || ext == ".vol" || ext == ".bin") return skeltree::read_volume(path);
    return skeltree::rasterize_points(path);
}

skeltree::Complex2 load_input_complex(const std::string& path, double threshold) {
    auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".raw" || ext == ".vol" || ext == ".bin" || ext == ".txt" || ext == ".pts") {
        auto volume = load_input_volume(path);
        return skeltree::build_grid_complex(volume, threshold);
    }
    return skeltree::load_complex(path);
}

std::array<double, 3> parse_triple(const std::string& v, const char* what) {
    std::array<double, 3> p{};
    std::string s = v;
    for (auto& c : s)
        if (c == ',') c = ' ';
    std::istringstream in(s);
    if (!(in >> p[0] >> p[1] >> p[2]))
        throw CLI::ValidationError(std::string(what) + " expects x,y,z");
    return p;
}

struct TreeFlags {
    std::string strategy;
    std::string root;
    double tree_tau = -1.0;
    int keep_n = 0;
    std::string weight = "uniform";
    std::string output_dir = ".";
    std::string prefix = "tree";
    bool density_radius = false;
};

void add_tree_flags(CLI::App* cmd, TreeFlags& f) {
    cmd->add_option("--strategy", f.strategy, "Tree strategy: spt or mst")
        ->check(CLI::IsMember({"spt", "mst"}));
    cmd->add_option("--root", f.root, "Root hint as x,y,z");
    auto* tt = cmd->add_option("--tau", f.tree_tau, "Prune branches with persistence <= tau");
    auto* kn = cmd->add_option("--keep-n", f.keep_n, "Keep the n most persistent branches");
    tt->excludes(kn);
    cmd->add_option("--weight", f.weight, "Edge weight mode")
        ->check(CLI::IsMember({"uniform", "intensity"}));
    cmd->add_option("--output-dir", f.output_dir, "Directory for SWC output");
    cmd->add_option("--prefix", f.prefix, "SWC file name prefix");
    cmd->add_flag("--density-radius", f.density_radius, "Encode density as SWC radius");
}

int emit_trees(const skeltree::SkeletonGraph& skeleton, const TreeFlags& f) {
    if (skeleton.empty()) {
        skeltree::log_warn("empty skeleton, no trees written");
        return kExitEmpty;
    }
    auto graph = skeltree::augment(skeleton);
    std::optional<skeltree::TreeStrategy> strategy;
    if (f.strategy == "spt") strategy = skeltree::TreeStrategy::ShortestPath;
    else if (f.strategy == "mst") strategy = skeltree::TreeStrategy::MaximumSpanning;
    std::optional<std::array<double, 3>> hint;
    if (!f.root.empty()) hint = parse_triple(f.root, "--root");
    auto mode = f.weight == "intensity" ? skeltree::WeightMode::Intensity
                                        : skeltree::WeightMode::Uniform;
    auto trees = skeltree::build_trees(graph, strategy, hint, mode);
    for (auto& tree : trees) {
        if (f.tree_tau >= 0) tree = skeltree::simplify_tree(tree, f.tree_tau);
        else if (f.keep_n > 0) tree = skeltree::simplify_keep_n(tree, f.keep_n);
    }
    std::filesystem::create_directories(f.output_dir);
    for (std::size_t i = 0; i < trees.size(); ++i) {
        char suffix[16];
        std::snprintf(suffix, sizeof(suffix), "_%03zu.swc", i);
        auto path = (std::filesystem::path(f.output_dir) / (f.prefix + suffix)).string();
        skeltree::write_swc(trees[i], path, f.density_radius);
        std::cout << path << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Density-field skeletonization and tree summarization"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "error, warn, info, or debug")
        ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

    // --- smooth ---
    auto* c_smooth = app.add_subcommand("smooth", "Gaussian-smooth a density volume");
    std::string sm_in, sm_out;
    double sm_sigma = 1.0;
    int sm_radius = 0, sm_workers = 0;
    c_smooth->add_option("--input", sm_in, "Input volume (.raw) or point list")->required();
    c_smooth->add_option("--output", sm_out, "Output volume (.raw)")->required();
    c_smooth->add_option("--sigma", sm_sigma, "Gaussian sigma in voxels")->required();
    c_smooth->add_option("--radius", sm_radius, "Kernel radius (default ceil(3 sigma))");
    c_smooth->add_option("--workers", sm_workers, "Worker threads");

    // --- persistence ---
    auto* c_pers = app.add_subcommand("persistence", "Persistence pairing of a complex");
    std::string pe_in, pe_out;
    double pe_threshold = 0.0;
    c_pers->add_option("--input", pe_in, "Complex file, or volume with --threshold")->required();
    c_pers->add_option("--threshold", pe_threshold, "Density cutoff for volume input");
    c_pers->add_option("--output", pe_out, "Pairing output (default stdout)");

    // --- skeletonize ---
    auto* c_skel = app.add_subcommand("skeletonize", "Extract a persistence-guided skeleton");
    std::string sk_in, sk_out;
    double sk_threshold = 0.0, sk_tau = 0.0;
    c_skel->add_option("--input", sk_in, "Complex file, or volume with --threshold")->required();
    c_skel->add_option("--threshold", sk_threshold, "Density cutoff for volume input");
    c_skel->add_option("--tau", sk_tau, "Persistence simplification threshold")->required();
    c_skel->add_option("--output", sk_out, "Skeleton edge-list output")->required();

    // --- skeletonize-tiled ---
    auto* c_tile = app.add_subcommand("skeletonize-tiled", "Tiled skeletonization with merging");
    std::string ti_in, ti_out, ti_tile = "512,512", ti_dir;
    double ti_threshold = 0.0, ti_tau = 0.0, ti_merge_tau = -1.0, ti_sigma = 5.0;
    int ti_overlap = 5, ti_workers = 0;
    c_tile->add_option("--input", ti_in, "Input volume")->required();
    c_tile->add_option("--threshold", ti_threshold, "Density cutoff");
    c_tile->add_option("--tau", ti_tau, "Per-tile persistence threshold")->required();
    c_tile->add_option("--merge-tau", ti_merge_tau, "Merge-phase threshold (default: tau)");
    c_tile->add_option("--tile", ti_tile, "Tile size as X,Y");
    c_tile->add_option("--overlap", ti_overlap, "Tile overlap in voxels");
    c_tile->add_option("--diffuse-sigma", ti_sigma, "Merge density diffusion sigma");
    c_tile->add_option("--workers", ti_workers, "Worker threads");
    c_tile->add_option("--tile-dir", ti_dir, "Checkpoint directory for per-tile skeletons");
    c_tile->add_option("--output", ti_out, "Skeleton edge-list output")->required();

    // --- treeify ---
    auto* c_tree = app.add_subcommand("treeify", "Summarize a skeleton as SWC trees");
    std::string tr_in;
    TreeFlags tr_flags;
    c_tree->add_option("--input", tr_in, "Skeleton edge-list file")->required();
    add_tree_flags(c_tree, tr_flags);

    // --- phantom ---
    auto* c_phantom = app.add_subcommand("phantom", "Render a synthetic tube phantom");
    std::string ph_spec, ph_out;
    std::uint64_t ph_seed = 0;
    c_phantom->add_option("--spec", ph_spec, "Phantom spec file")->required();
    c_phantom->add_option("--seed", ph_seed, "Noise seed");
    c_phantom->add_option("--output", ph_out, "Output volume (.raw)")->required();

    // --- score ---
    auto* c_score = app.add_subcommand("score", "Score a reconstruction against a phantom spec");
    std::string sc_truth, sc_recon;
    double sc_eps = 2.0;
    c_score->add_option("--truth", sc_truth, "Phantom spec file")->required();
    c_score->add_option("--recon", sc_recon, "Reconstructed SWC file")->required();
    c_score->add_option("--epsilon", sc_eps, "Match tolerance in voxels");

    // --- pipeline ---
    auto* c_pipe = app.add_subcommand("pipeline", "Full smooth/skeletonize/treeify pipeline");
    std::string pi_config;
    c_pipe->add_option("--config", pi_config, "key=value config file");
    std::vector<std::pair<std::string, std::string>> pi_overrides;
    auto value_override = [&](const std::string& key, const std::string& desc) {
        c_pipe->add_option(
            "--" + key,
            [&pi_overrides, key](const CLI::results_t& r) {
                pi_overrides.emplace_back(key, r.at(0));
                return true;
            },
            desc);
    };
    auto flag_override = [&](const std::string& key, const std::string& desc) {
        c_pipe->add_flag(
            "--" + key,
            [&pi_overrides, key](std::int64_t) { pi_overrides.emplace_back(key, "true"); },
            desc);
    };
    value_override("input", "Input volume or point list");
    value_override("format", "Input format: auto, raw, or points");
    value_override("sigma", "Smoothing sigma (0 disables)");
    value_override("radius", "Smoothing kernel radius");
    value_override("threshold", "Complex density cutoff");
    value_override("tau", "Skeleton persistence threshold");
    value_override("strategy", "Tree strategy: spt or mst");
    value_override("root", "Root hint as x,y,z");
    value_override("tree-tau", "Branch persistence cutoff");
    value_override("keep-n", "Keep the n most persistent branches");
    value_override("weight", "Edge weight mode: uniform or intensity");
    flag_override("tiled", "Enable tiled processing");
    value_override("tile-x", "Tile width");
    value_override("tile-y", "Tile height");
    value_override("overlap", "Tile overlap");
    value_override("merge-tau", "Merge-phase persistence threshold");
    value_override("diffuse-sigma", "Merge density diffusion sigma");
    value_override("workers", "Worker threads");
    value_override("tile-dir", "Per-tile checkpoint directory");
    value_override("output-dir", "SWC output directory");
    value_override("prefix", "Output file prefix");
    value_override("report", "Run report path");
    flag_override("density-radius", "Encode density as SWC radius");

    for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();
    CLI11_PARSE(app, argc, argv);
    skeltree::set_log_level(log_level == "error"  ? skeltree::LogLevel::Error
                            : log_level == "info" ? skeltree::LogLevel::Info
                            : log_level == "debug"
                                ? skeltree::LogLevel::Debug
                                : skeltree::LogLevel::Warn);

    try {
        if (*c_smooth) {
            auto volume = load_input_volume(sm_in);
            int radius = sm_radius > 0 ? sm_radius
                                       : static_cast<int>(std::ceil(3.0 * sm_sigma));
            int workers = sm_workers > 0 ? sm_workers : env_workers();
            skeltree::write_volume(skeltree::gaussian_smooth(volume, sm_sigma, radius, false,
                                                             workers),
                                   sm_out);
            return kExitOk;
        }
        if (*c_pers) {
            auto complex = load_input_complex(pe_in, pe_threshold);
            std::vector<double> f(complex.vertices.size());
            for (std::size_t i = 0; i < f.size(); ++i) f[i] = complex.vertices[i].density;
            auto order = skeltree::lower_star_order(complex, f);
            auto pairing = skeltree::compute_pairing(complex, order);
            if (pe_out.empty()) {
                skeltree::write_pairing(pairing, complex, std::cout);
            } else {
                std::ofstream out(pe_out);
                if (!out) throw std::runtime_error("cannot write " + pe_out);
                skeltree::write_pairing(pairing, complex, out);
            }
            return pairing.pair_count() + pairing.essential.size() ? kExitOk : kExitEmpty;
        }
        if (*c_skel) {
            auto complex = load_input_complex(sk_in, sk_threshold);
            auto skeleton = skeltree::extract_skeleton(complex, sk_tau);
            skeltree::save_skeleton(skeleton, sk_out);
            return skeleton.empty() ? kExitEmpty : kExitOk;
        }
        if (*c_tile) {
            auto volume = load_input_volume(ti_in);
            auto t = parse_triple(ti_tile + ",0", "--tile");
            skeltree::TileLayout layout{static_cast<int>(t[0]), static_cast<int>(t[1]),
                                        ti_overlap};
            int workers = ti_workers > 0 ? ti_workers : env_workers();
            double merge_tau = ti_merge_tau < 0 ? ti_tau : ti_merge_tau;
            auto skeleton = skeltree::skeletonize_tiled(volume, layout, ti_threshold, ti_tau,
                                                        merge_tau, ti_sigma, 2, workers, ti_dir);
            skeltree::save_skeleton(skeleton, ti_out);
            return skeleton.empty() ? kExitEmpty : kExitOk;
        }
        if (*c_tree) {
            return emit_trees(skeltree::load_skeleton(tr_in), tr_flags);
        }
        if (*c_phantom) {
            auto spec = skeltree::load_phantom_spec(ph_spec);
            auto phantom = skeltree::generate_phantom(spec, ph_seed);
            skeltree::write_volume(phantom.volume, ph_out);
            return kExitOk;
        }
        if (*c_score) {
            auto truth = skeltree::load_phantom_spec(sc_truth);
            auto recon = skeltree::load_swc(sc_recon);
            auto r = skeltree::score(recon, truth, sc_eps);
            std::cout << "precision\trecall\tleaf_delta\tconnected\tempty\n"
                      << r.precision << '\t' << r.recall << '\t' << r.leaf_delta << '\t'
                      << (r.connected ? 1 : 0) << '\t' << (r.empty_reconstruction ? 1 : 0)
                      << '\n';
            return kExitOk;
        }
        if (*c_pipe) {
            skeltree::PipelineConfig config;
            if (!pi_config.empty()) config = skeltree::load_pipeline_config(pi_config);
            for (const auto& [key, value] : pi_overrides)
                skeltree::apply_config_entry(config, key, value, "flag");
            if (c_pipe->count("--workers") == 0 && config.workers == 1)
                config.workers = env_workers();
            auto result = skeltree::run_pipeline(config);
            for (const auto& p : result.swc_paths) std::cout << p << '\n';
            return result.empty ? kExitEmpty : kExitOk;
        }
    } catch (const std::exception& e) {
        skeltree::log_error(e.what());
        return kExitError;
    }
    return kExitError;
}
