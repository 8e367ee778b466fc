#include "skeltree/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "skeltree/complex.hpp"
#include "skeltree/log.hpp"
#include "skeltree/morse.hpp"
#include "skeltree/volume.hpp"

namespace skeltree {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw std::invalid_argument("not a boolean: '" + v + "'");
}

std::array<double, 3> parse_point(const std::string& v) {
    std::array<double, 3> p{};
    std::string s = v;
    for (auto& c : s)
        if (c == ',') c = ' ';
    std::istringstream in(s);
    if (!(in >> p[0] >> p[1] >> p[2])) throw std::invalid_argument("not a point: '" + v + "'");
    return p;
}

}  // namespace

void PipelineConfig::validate() const {
    if (input.empty()) throw std::invalid_argument("pipeline: input path is required");
    if (input_format != "auto" && input_format != "raw" && input_format != "points")
        throw std::invalid_argument("pipeline: unknown input format '" + input_format + "'");
    if (smooth_sigma < 0) throw std::invalid_argument("pipeline: sigma must be >= 0");
    if (smooth_radius < 0) throw std::invalid_argument("pipeline: radius must be >= 0");
    if (skeleton_tau < 0) throw std::invalid_argument("pipeline: tau must be >= 0");
    if (tree_tau && keep_n)
        throw std::invalid_argument("pipeline: tree-tau and keep-n are mutually exclusive");
    if (tree_tau && *tree_tau < 0) throw std::invalid_argument("pipeline: tree-tau must be >= 0");
    if (keep_n && *keep_n < 1) throw std::invalid_argument("pipeline: keep-n must be >= 1");
    if (tiled) {
        if (layout.tile_x <= layout.overlap || layout.tile_y <= layout.overlap)
            throw std::invalid_argument("pipeline: tile size must exceed overlap");
        if (layout.overlap < 1) throw std::invalid_argument("pipeline: overlap must be >= 1");
        if (diffuse_sigma <= 0)
            throw std::invalid_argument("pipeline: diffuse-sigma must be > 0");
    }
    if (workers < 1) throw std::invalid_argument("pipeline: workers must be >= 1");
}

void apply_config_entry(PipelineConfig& c, const std::string& key, const std::string& value,
                        const std::string& where) {
    try {
        if (key == "input") c.input = value;
        else if (key == "format") c.input_format = value;
        else if (key == "sigma") c.smooth_sigma = std::stod(value);
        else if (key == "radius") c.smooth_radius = std::stoi(value);
        else if (key == "threshold") c.threshold = std::stod(value);
        else if (key == "tau") c.skeleton_tau = std::stod(value);
        else if (key == "strategy") {
            if (value == "spt") c.strategy = TreeStrategy::ShortestPath;
            else if (value == "mst") c.strategy = TreeStrategy::MaximumSpanning;
            else throw std::invalid_argument("strategy must be spt or mst");
        } else if (key == "root") c.root_hint = parse_point(value);
        else if (key == "tree-tau") c.tree_tau = std::stod(value);
        else if (key == "keep-n") c.keep_n = std::stoi(value);
        else if (key == "weight") {
            if (value == "uniform") c.weight = WeightMode::Uniform;
            else if (value == "intensity") c.weight = WeightMode::Intensity;
            else throw std::invalid_argument("weight must be uniform or intensity");
        } else if (key == "tiled") c.tiled = parse_bool(value);
        else if (key == "tile-x") c.layout.tile_x = std::stoi(value);
        else if (key == "tile-y") c.layout.tile_y = std::stoi(value);
        else if (key == "overlap") c.layout.overlap = std::stoi(value);
        else if (key == "merge-tau") c.merge_tau = std::stod(value);
        else if (key == "diffuse-sigma") c.diffuse_sigma = std::stod(value);
        else if (key == "workers") c.workers = std::stoi(value);
        else if (key == "tile-dir") c.tile_dir = value;
        else if (key == "output-dir") c.output_dir = value;
        else if (key == "prefix") c.output_prefix = value;
        else if (key == "report") c.report_path = value;
        else if (key == "density-radius") c.density_radius = parse_bool(value);
        else throw std::invalid_argument("unknown key");
    } catch (const std::exception& e) {
        throw std::invalid_argument(where + ": bad entry '" + key + "=" + value +
                                    "': " + e.what());
    }
}

PipelineConfig load_pipeline_config(std::istream& in, const char* stream_name) {
    PipelineConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(std::string(stream_name) + ":" + std::to_string(lineno) +
                                        ": expected key=value");
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t");
            auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        apply_config_entry(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)),
                           std::string(stream_name) + ":" + std::to_string(lineno));
    }
    return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    return load_pipeline_config(in, path.c_str());
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    config.validate();
    PipelineResult result;
    nlohmann::json& report = result.report;
    nlohmann::json timings = nlohmann::json::object();
    const auto wall0 = Clock::now();

    // --- load ---
    auto t0 = Clock::now();
    std::string fmt = config.input_format;
    if (fmt == "auto") {
        auto ext = std::filesystem::path(config.input).extension().string();
        fmt = (ext == ".raw" || ext == ".vol" || ext == ".bin") ? "raw" : "points";
    }
    DensityVolume volume;
    try {
        volume = fmt == "raw" ? read_volume(config.input) : rasterize_points(config.input);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("pipeline step load: ") + e.what());
    }
    timings["load"] = seconds_since(t0);
    report["input"] = config.input;
    report["dims"] = volume.dims;

    // --- smooth ---
    t0 = Clock::now();
    if (config.smooth_sigma > 0) {
        int radius = config.smooth_radius > 0
                         ? config.smooth_radius
                         : static_cast<int>(std::ceil(3.0 * config.smooth_sigma));
        volume = gaussian_smooth(volume, config.smooth_sigma, radius, false, config.workers);
        report["smooth"] = {{"sigma", config.smooth_sigma}, {"radius", radius}};
    }
    timings["smooth"] = seconds_since(t0);

    // --- skeletonize ---
    t0 = Clock::now();
    SkeletonGraph skeleton;
    SkeletonStats sstats;
    TilingStats tstats;
    try {
        if (config.tiled) {
            double merge_tau = config.merge_tau < 0 ? config.skeleton_tau : config.merge_tau;
            skeleton = skeletonize_tiled(volume, config.layout, config.threshold,
                                         config.skeleton_tau, merge_tau, config.diffuse_sigma, 2,
                                         config.workers, config.tile_dir, &tstats);
            report["tiling"] = {{"tiles", tstats.tiles},
                                {"boundary_sources", tstats.boundary_sources},
                                {"merge_simplices", tstats.merge_simplices},
                                {"merge_pass", tstats.merge_pass}};
        } else {
            Complex2 complex = build_grid_complex(volume, config.threshold);
            timings["complex"] = seconds_since(t0);
            report["complex"] = {{"vertices", complex.vertices.size()},
                                 {"edges", complex.edges.size()},
                                 {"triangles", complex.triangles.size()},
                                 {"components", connected_components(complex)}};
            t0 = Clock::now();
            skeleton = extract_skeleton(complex, config.skeleton_tau, &sstats);
            report["critical_cells"] = {{"initial", sstats.initial_critical},
                                        {"final", sstats.final_critical},
                                        {"cancelled", sstats.cancelled},
                                        {"surviving_saddles", sstats.surviving_saddles}};
        }
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("pipeline step skeletonize: ") + e.what());
    }
    timings["skeletonize"] = seconds_since(t0);
    report["skeleton"] = {{"nodes", skeleton.nodes.size()},
                          {"links", skeleton.links.size()},
                          {"arcs", skeleton.arcs.size()}};

    if (skeleton.empty()) {
        result.empty = true;
        timings["treeify"] = 0.0;
        timings["write"] = 0.0;
        report["timings"] = timings;
        report["wall_seconds"] = seconds_since(wall0);
        report["components"] = 0;
        report["swc_files"] = nlohmann::json::array();
        log_warn("pipeline: empty skeleton, no output written");
        return result;
    }

    // --- treeify + simplify ---
    t0 = Clock::now();
    std::vector<SummaryTree> trees;
    try {
        AugmentedGraph graph = augment(skeleton);
        trees = build_trees(graph, config.strategy, config.root_hint, config.weight);
        for (auto& tree : trees) {
            if (config.tree_tau) tree = simplify_tree(tree, *config.tree_tau);
            else if (config.keep_n) tree = simplify_keep_n(tree, *config.keep_n);
        }
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("pipeline step treeify: ") + e.what());
    }
    timings["treeify"] = seconds_since(t0);
    report["components"] = trees.size();

    // --- write ---
    t0 = Clock::now();
    std::filesystem::create_directories(config.output_dir);
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t i = 0; i < trees.size(); ++i) {
        char suffix[16];
        std::snprintf(suffix, sizeof(suffix), "_%03zu.swc", i);
        auto path = (std::filesystem::path(config.output_dir) /
                     (config.output_prefix + suffix))
                        .string();
        write_swc(trees[i], path, config.density_radius);
        result.swc_paths.push_back(path);
        files.push_back({{"path", path},
                         {"nodes", trees[i].nodes.size()},
                         {"leaves", trees[i].leaves().size()},
                         {"branches", trees[i].branches.size()}});
    }
    timings["write"] = seconds_since(t0);
    report["swc_files"] = files;
    report["timings"] = timings;
    report["wall_seconds"] = seconds_since(wall0);

    std::string report_path = config.report_path;
    if (report_path.empty())
        report_path = (std::filesystem::path(config.output_dir) /
                       (config.output_prefix + "_report.json"))
                          .string();
    std::ofstream rep(report_path);
    if (!rep) throw std::runtime_error("cannot write report " + report_path);
    rep << report.dump(2) << '\n';
    result.trees = std::move(trees);
    return result;
}

}  // namespace skeltree
