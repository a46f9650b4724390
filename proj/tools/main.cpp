#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>

#include "gridnorm/commands.hpp"
#include "png_writer.hpp"

int main(int argc, char** argv) {
    CLI::App app{
        "gridnorm: marginal-variance normalization for lattice basis-function "
        "spatial models"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string method_name;
    bool png = false;
    bool deterministic = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON run configuration")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir,
                        "output directory (default: config 'output')");
        cmd->add_flag("--png", png, "emit PNG heatmaps next to the CSV outputs");
        cmd->add_flag("--deterministic", deterministic,
                      "single-threaded, bit-reproducible execution");
        cmd->add_option("--normalize-method", method_name,
                        "override the configured normalization method "
                        "(none, exact, exactKronecker, fft, both)");
    };

    CLI::App* normalize = app.add_subcommand(
        "normalize", "compute per-level variance fields and write them as CSV");
    CLI::App* bench = app.add_subcommand(
        "bench", "time basis construction + normalization over a config grid");
    CLI::App* error_cmd = app.add_subcommand(
        "error", "compare an approximate variance method against a reference");
    CLI::App* pipeline = app.add_subcommand(
        "pipeline", "simulate, sample, fit, predict, and score");
    for (CLI::App* cmd : {normalize, bench, error_cmd, pipeline}) {
        add_common(cmd);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        gridnorm::RunConfig config = gridnorm::load_run_config(config_path);
        gridnorm::CommandOptions options;
        options.out_dir = out_dir;
        options.deterministic = deterministic;
        if (!method_name.empty()) {
            options.method_override =
                gridnorm::normalize_method_from_string(method_name);
        }
        if (png) {
            options.image_writer = [](const Eigen::ArrayXXd& values,
                                      const std::filesystem::path& path) {
                gridnorm_cli::write_heatmap_png(values, path);
            };
        }

        if (normalize->parsed()) return gridnorm::cmd_normalize(config, options);
        if (bench->parsed()) return gridnorm::cmd_bench(config, options);
        if (error_cmd->parsed()) return gridnorm::cmd_error(config, options);
        if (pipeline->parsed()) return gridnorm::cmd_pipeline(config, options);
    } catch (const std::exception& e) {
        std::cerr << "gridnorm: " << e.what() << std::endl;
        return 2;
    }
    return 0;
}
