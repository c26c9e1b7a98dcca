// seamweld command line: merge partition files, generate synthetic scenes,
// and validate merged output against ground truth.
//
// Exit codes: 0 success, 1 I/O or configuration failure, 2 disconnected
// partition graph, 3 solver non-convergence, 4 validation thresholds
// exceeded.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seamweld/cascade.hpp"
#include "seamweld/io.hpp"
#include "seamweld/synth.hpp"

namespace fs = std::filesystem;
using namespace seamweld;

namespace {

struct EventPrinter {
    bool quiet = false;
    std::string last_stage = "startup";

    void operator()(const MergeEvent& e) {
        last_stage = stage_name(e.stage);
        if (quiet) return;
        std::string line = "[seamweld] " + last_stage;
        if (e.round > 0) line += " degree=" + std::to_string(e.round);
        if (e.partition >= 0) line += " partition=" + std::to_string(e.partition);
        if (e.stage == MergeStage::dirichlet_solved) {
            line += " iterations=" + std::to_string(e.iterations);
            char buf[40];
            std::snprintf(buf, sizeof buf, " residual=%.3g", e.residual);
            line += buf;
        }
        if (e.stage == MergeStage::offsets_solved) {
            char buf[40];
            std::snprintf(buf, sizeof buf, " residual_norm=%.3g", e.residual);
            line += buf;
        }
        if (e.millis > 0.0) {
            char buf[32];
            std::snprintf(buf, sizeof buf, " ms=%.1f", e.millis);
            line += buf;
        }
        std::cerr << line << "\n";
    }
};

bool parse_pair(const std::string& text, char sep, long& a, long& b) {
    const auto at = text.find(sep);
    if (at == std::string::npos) return false;
    try {
        a = std::stol(text.substr(0, at));
        b = std::stol(text.substr(at + 1));
    } catch (...) {
        return false;
    }
    return a > 0 && b > 0;
}

void write_output(const fs::path& path, const MergedDataset& merged) {
    const auto ext = path.extension();
    if (ext == ".swld" || ext == ".bin")
        write_merged_binary(path, merged);
    else
        write_merged_csv(path, merged);
}

int run_merge(const std::vector<std::string>& inputs, const std::string& output,
              const std::string& report_path, const std::string& grid_out,
              const std::string& grid_size, const std::string& mode_name, double tol,
              std::size_t max_iter, bool weight_pairs, double max_edge_length,
              double quantum, const std::string& cache_dir, bool quiet) {
    MergeConfig config;
    config.tolerance = tol;
    config.max_iterations = max_iter;
    config.weight_pairs_by_count = weight_pairs;
    config.max_edge_length = max_edge_length;
    config.id_quantum = quantum;
    if (mode_name == "seq")
        config.mode = ExecutionMode::sequential;
    else if (mode_name == "barrier")
        config.mode = ExecutionMode::parallel_barrier;
    else if (mode_name == "relaxed")
        config.mode = ExecutionMode::parallel_relaxed;
    else {
        std::cerr << "seamweld: unknown mode '" << mode_name << "'\n";
        return 1;
    }

    std::unique_ptr<LaplacianCache> cache;
    if (!cache_dir.empty()) {
        cache = std::make_unique<LaplacianCache>(cache_dir);
        config.graph_provider = [&cache](const PointCloudPartition& part, double mel) {
            return cache->load_or_build(part, mel);
        };
    }

    EventPrinter printer;
    printer.quiet = quiet;

    try {
        std::vector<PointCloudPartition> partitions;
        partitions.reserve(inputs.size());
        for (std::size_t k = 0; k < inputs.size(); ++k)
            partitions.push_back(read_partition(inputs[k], k));

        auto result = merge(std::move(partitions),
                            config, [&printer](const MergeEvent& e) { printer(e); });

        write_output(output, result.merged);
        if (!report_path.empty()) write_seam_report(report_path, result.report);
        if (!grid_out.empty()) {
            long gw = 256, gh = 256;
            if (!grid_size.empty() && !parse_pair(grid_size, 'x', gw, gh)) {
                std::cerr << "seamweld: bad --grid-size '" << grid_size << "'\n";
                return 1;
            }
            write_grid(grid_out, result.merged, static_cast<std::size_t>(gw),
                       static_cast<std::size_t>(gh));
        }
        if (!quiet)
            std::cerr << "[seamweld] wrote " << result.merged.size() << " points to "
                      << output << "\n";
        return 0;
    } catch (const DisconnectedPartitionGraph& e) {
        std::cerr << "seamweld: merge failed at stage '" << printer.last_stage
                  << "': " << e.what() << "\n";
        return 2;
    } catch (const ConvergenceFailure& e) {
        std::cerr << "seamweld: merge failed at stage '" << printer.last_stage
                  << "': " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "seamweld: merge failed at stage '" << printer.last_stage
                  << "': " << e.what() << "\n";
        return 1;
    }
}

int run_synth(const std::string& out_dir, const std::string& prefix,
              const std::string& format, const std::string& tiles,
              std::size_t points, std::uint64_t seed, double overlap,
              const std::string& truth_model, const std::string& artifact_model,
              double scale, double truth_scale, const std::string& layout) {
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.point_count = points;
    cfg.overlap_fraction = overlap;
    cfg.artifact_scale = scale;
    cfg.truth_scale = truth_scale;

    long tx = 0, ty = 0;
    if (!parse_pair(tiles, 'x', tx, ty)) {
        std::cerr << "seamweld: bad --tiles '" << tiles << "' (expected like 3x2)\n";
        return 1;
    }
    cfg.tiles_x = static_cast<int>(tx);
    cfg.tiles_y = static_cast<int>(ty);

    if (truth_model == "gaussian-bumps")
        cfg.truth_model = TruthModel::gaussian_bumps;
    else if (truth_model == "polynomial")
        cfg.truth_model = TruthModel::polynomial;
    else if (truth_model == "plane")
        cfg.truth_model = TruthModel::plane;
    else {
        std::cerr << "seamweld: unknown truth model '" << truth_model << "'\n";
        return 1;
    }

    if (artifact_model == "constant")
        cfg.artifact_model = ArtifactModel::constant;
    else if (artifact_model == "constant-plus-smooth")
        cfg.artifact_model = ArtifactModel::constant_plus_smooth;
    else {
        std::cerr << "seamweld: unknown artifact model '" << artifact_model << "'\n";
        return 1;
    }

    if (layout == "grid")
        cfg.layout = TileLayout::grid;
    else if (layout == "staggered")
        cfg.layout = TileLayout::staggered;
    else {
        std::cerr << "seamweld: unknown layout '" << layout << "'\n";
        return 1;
    }

    if (format != "csv" && format != "bin") {
        std::cerr << "seamweld: unknown format '" << format << "'\n";
        return 1;
    }

    try {
        auto [partitions, truth] = generate_scene(cfg);
        fs::create_directories(out_dir);
        for (const auto& part : partitions) {
            char name[64];
            std::snprintf(name, sizeof name, "%s_%02zu.%s", prefix.c_str(), part.index,
                          format == "bin" ? "swld" : "csv");
            const fs::path path = fs::path(out_dir) / name;
            if (format == "bin")
                write_partition_binary(path, part);
            else
                write_partition_csv(path, part);
        }
        write_truth_csv(fs::path(out_dir) / (prefix + "_truth.csv"), truth);
        std::cerr << "[seamweld] wrote " << partitions.size() << " partitions + truth to "
                  << out_dir << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "seamweld: synth failed: " << e.what() << "\n";
        return 1;
    }
}

int run_validate(const std::string& merged_path, const std::string& truth_path,
                 double rmse_max, double max_error_max, double seam_factor) {
    try {
        const PointCloudPartition merged_part = read_partition(merged_path);
        const SceneTruth truth = read_truth_csv(truth_path);

        // Single sorted dataset for scoring.
        std::vector<PointCloudPartition> as_list{merged_part};
        as_list[0].index = 0;
        assign_global_ids(as_list);
        MergedDataset merged;
        std::vector<std::size_t> by_id(as_list[0].size());
        for (std::size_t k = 0; k < by_id.size(); ++k) by_id[k] = k;
        std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) {
            return as_list[0].global_ids[a] < as_list[0].global_ids[b];
        });
        for (std::size_t k : by_id) {
            merged.global_ids.push_back(as_list[0].global_ids[k]);
            merged.points.push_back(as_list[0].points[k]);
            merged.values.push_back(as_list[0].values[k]);
            merged.provenance.push_back(1);
        }

        const ScoreRecord rec = score(merged, truth);
        std::printf("gauge=%.17g\n", rec.gauge);
        std::printf("rmse=%.17g\n", rec.rmse);
        std::printf("max_error=%.17g\n", rec.max_error);
        std::printf("seam_max_merged=%.17g\n", rec.seam_max_merged);
        std::printf("seam_max_truth=%.17g\n", rec.seam_max_truth);
        std::printf("crossing_edges=%zu\n", rec.crossing_edges);

        bool ok = true;
        if (rec.rmse > rmse_max) ok = false;
        if (rec.max_error > max_error_max) ok = false;
        if (seam_factor < std::numeric_limits<double>::infinity() &&
            rec.seam_max_merged > seam_factor * rec.seam_max_truth)
            ok = false;
        std::printf("result=%s\n", ok ? "pass" : "fail");
        return ok ? 0 : 4;
    } catch (const IdMismatch& e) {
        std::cerr << "seamweld: validate failed: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "seamweld: validate failed: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seamweld: merge scalar datasets on overlapping 2-D point clouds"};
    app.require_subcommand(1);

    // merge
    auto* cmd_merge = app.add_subcommand("merge", "merge partition files");
    std::vector<std::string> inputs;
    std::string output = "merged.csv";
    std::string report_path, grid_out, grid_size;
    std::string mode_name = "seq";
    std::string cache_dir;
    double tol = 1e-8;
    std::size_t max_iter = 0;
    bool weight_pairs = false;
    bool quiet = false;
    double max_edge_length = 0.0;
    double quantum = 0.0;
    cmd_merge->add_option("inputs", inputs, "partition files (csv or swld)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_merge->add_option("-o,--output", output, "merged output file (csv, or .swld binary)");
    cmd_merge->add_option("--report", report_path, "seam report output (key=value text)");
    cmd_merge->add_option("--grid-out", grid_out, "rasterized grid output (.pgm or ASCII)");
    cmd_merge->add_option("--grid-size", grid_size, "raster size, e.g. 256x256");
    cmd_merge->add_option("--tol", tol, "Dirichlet solver relative tolerance");
    cmd_merge->add_option("--max-iter", max_iter, "solver iteration cap (0 = auto)");
    cmd_merge->add_option("--mode", mode_name, "execution mode: seq, barrier, relaxed");
    cmd_merge->add_flag("--weight-pairs", weight_pairs,
                        "weight offset equations by overlap size");
    cmd_merge->add_option("--max-edge-length", max_edge_length,
                          "drop Delaunay edges longer than this (0 keeps all)");
    cmd_merge->add_option("--quantum", quantum,
                          "snap coordinates to this grid before identity hashing");
    cmd_merge->add_option("--cache-dir", cache_dir, "on-disk Laplacian cache directory");
    cmd_merge->add_flag("-q,--quiet", quiet, "suppress progress events");

    // synth
    auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic scene");
    std::string out_dir = ".";
    std::string prefix = "part";
    std::string format = "csv";
    std::string tiles = "2x2";
    std::size_t points = 10000;
    std::uint64_t seed = 1;
    double overlap = 0.25;
    std::string truth_model = "gaussian-bumps";
    std::string artifact_model = "constant";
    double scale = 5.0;
    double truth_scale = 100.0;
    std::string layout = "grid";
    cmd_synth->add_option("--out-dir", out_dir, "output directory");
    cmd_synth->add_option("--prefix", prefix, "output file prefix");
    cmd_synth->add_option("--format", format, "partition format: csv or bin");
    cmd_synth->add_option("--tiles", tiles, "tile grid, e.g. 3x2");
    cmd_synth->add_option("--points", points, "total point count");
    cmd_synth->add_option("--seed", seed, "PRNG seed");
    cmd_synth->add_option("--overlap", overlap, "tile overlap fraction (0, 0.5]");
    cmd_synth->add_option("--truth", truth_model,
                          "truth model: gaussian-bumps, polynomial, plane");
    cmd_synth->add_option("--artifact", artifact_model,
                          "artifact model: constant, constant-plus-smooth");
    cmd_synth->add_option("--scale", scale, "artifact amplitude");
    cmd_synth->add_option("--truth-scale", truth_scale, "truth field amplitude");
    cmd_synth->add_option("--layout", layout, "tile layout: grid or staggered");

    // validate
    auto* cmd_validate = app.add_subcommand("validate", "score merged output against truth");
    std::string merged_path, truth_path;
    double rmse_max = std::numeric_limits<double>::infinity();
    double max_error_max = std::numeric_limits<double>::infinity();
    double seam_factor = std::numeric_limits<double>::infinity();
    cmd_validate->add_option("merged", merged_path, "merged dataset file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_validate->add_option("truth", truth_path, "truth file from synth")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_validate->add_option("--rmse-max", rmse_max, "fail if gauge-fixed RMSE exceeds this");
    cmd_validate->add_option("--max-error", max_error_max,
                             "fail if gauge-fixed max error exceeds this");
    cmd_validate->add_option("--seam-factor", seam_factor,
                             "fail if merged seam jump exceeds factor * truth jump");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // normalize parse failures to exit 1
    }

    if (cmd_merge->parsed())
        return run_merge(inputs, output, report_path, grid_out, grid_size, mode_name, tol,
                         max_iter, weight_pairs, max_edge_length, quantum, cache_dir, quiet);
    if (cmd_synth->parsed())
        return run_synth(out_dir, prefix, format, tiles, points, seed, overlap, truth_model,
                         artifact_model, scale, truth_scale, layout);
    if (cmd_validate->parsed())
        return run_validate(merged_path, truth_path, rmse_max, max_error_max, seam_factor);
    return 1;
}
