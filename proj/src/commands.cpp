#include "gridnorm/commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <vector>

#include <fmt/core.h>

#include "gridnorm/csv.hpp"
#include "gridnorm/fftnorm.hpp"
#include "gridnorm/kron.hpp"
#include "gridnorm/parallel.hpp"
#include "gridnorm/sar.hpp"

namespace gridnorm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::filesystem::path prepare_out_dir(const RunConfig& config,
                                      const CommandOptions& options) {
    std::filesystem::path dir =
        options.out_dir.empty() ? std::filesystem::path(config.output)
                                : options.out_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

void apply_run_mode(const CommandOptions& options) {
    set_serial_execution(options.deterministic);
}

/// Variance field for one level by one concrete method (not none/both).
VarianceField level_variance(NormalizeMethod method, const LevelGeometry& geom,
                             const FineGrid& fine, double kappa2,
                             const SamplingRule& rule, bool dump_stages,
                             FftStages* stages, int level) {
    SarSystem sys(geom.r_total(), kappa2);
    switch (method) {
        case NormalizeMethod::exact: {
            SparseBasisMatrix phi = regression_matrix(fine, geom);
            return variance_exact(phi, sys, fine.nx(), fine.ny(), level);
        }
        case NormalizeMethod::exactKronecker: {
            SparseBasisMatrix phi = regression_matrix(fine, geom);
            KroneckerEig eig =
                eigendecompose(build_tridiagonal(geom.r_total(), kappa2));
            return variance_kronecker(phi, eig, fine.nx(), fine.ny(), level);
        }
        case NormalizeMethod::fft: {
            CoarseGrid coarse = make_coarse_grid(fine, geom, rule);
            return variance_fft_with_stages(geom, fine, coarse, sys,
                                            CoarseMethod::kronecker,
                                            dump_stages ? stages : nullptr, level);
        }
        default:
            throw std::invalid_argument(fmt::format(
                "variance computation needs a concrete method, got '{}'",
                to_string(method)));
    }
}

NormalizeMethod effective_method(const RunConfig& config,
                                 const CommandOptions& options) {
    return options.method_override.value_or(config.normalize_method);
}

void require_levels(const RunConfig& config) {
    if (config.levels.empty()) {
        throw std::invalid_argument("config: this command needs a 'levels' list");
    }
}

} // namespace

int cmd_normalize(const RunConfig& config, const CommandOptions& options) {
    apply_run_mode(options);
    require_levels(config);
    const auto out_dir = prepare_out_dir(config, options);
    const NormalizeMethod method = effective_method(config, options);
    if (method == NormalizeMethod::none) {
        throw std::invalid_argument(
            "cmd_normalize: method 'none' computes no variance field");
    }

    const FineGrid fine = config.make_grid();
    const ModelSpec spec = config.make_model_spec(method);
    std::vector<NormalizeMethod> methods(spec.levels.size(), method);
    if (method == NormalizeMethod::both) {
        methods = select_methods(spec, fine);
    }

    std::ofstream summary(out_dir / "normalize_summary.csv");
    summary << "level,method,n,r,seconds\n";
    for (std::size_t l = 0; l < spec.levels.size(); ++l) {
        const LevelGeometry& geom = spec.levels[l];
        FftStages stages;
        const auto start = Clock::now();
        VarianceField field = level_variance(
            methods[l], geom, fine, spec.kappa2[l],
            config.make_sampling_rule(geom.r_total()), config.dump_stages,
            &stages, static_cast<int>(l));
        const double elapsed = seconds_since(start);

        const auto field_path =
            out_dir / fmt::format("variance_{}_level{}.csv",
                                  to_string(field.method), l);
        write_matrix_csv(field.values, field_path);
        if (options.image_writer) {
            options.image_writer(field.values,
                                 out_dir / fmt::format("variance_{}_level{}.png",
                                                       to_string(field.method), l));
        }
        if (config.dump_stages && methods[l] == NormalizeMethod::fft) {
            write_matrix_csv(stages.coarse_field,
                             out_dir / fmt::format("fft_coarse_level{}.csv", l));
            write_matrix_csv(
                stages.padded_log_magnitude,
                out_dir / fmt::format("fft_spectrum_log10_level{}.csv", l));
            write_matrix_csv(stages.fine_field,
                             out_dir / fmt::format("fft_fine_level{}.csv", l));
            if (options.image_writer) {
                options.image_writer(
                    stages.coarse_field,
                    out_dir / fmt::format("fft_coarse_level{}.png", l));
                options.image_writer(
                    stages.padded_log_magnitude,
                    out_dir / fmt::format("fft_spectrum_log10_level{}.png", l));
            }
        }

        const std::string line =
            fmt::format("{},{},{},{},{:.6f}", l, to_string(field.method),
                        fine.nx(), geom.r_total(), elapsed);
        summary << line << '\n';
        summary.flush();
        std::cout << fmt::format(
                         "normalize level {}: method={} n={} r={} seconds={:.3f}",
                         l, to_string(field.method), fine.nx(), geom.r_total(),
                         elapsed)
                  << std::endl;
    }
    return 0;
}

int cmd_bench(const RunConfig& config, const CommandOptions& options) {
    apply_run_mode(options);
    if (!config.bench) {
        throw std::invalid_argument("config: 'bench' section is required");
    }
    const BenchConfig& bench = *config.bench;
    const auto out_dir = prepare_out_dir(config, options);

    std::ofstream raw(out_dir / "bench_times.csv");
    raw << "method,r,n,rep,seconds\n";
    std::ofstream summary(out_dir / "bench_summary.csv");
    summary << "method,r,n,median,min,max\n";
    std::ofstream errors;

    bool all_ok = true;
    for (NormalizeMethod method : bench.methods) {
        for (int r : bench.r_values) {
            for (int n : bench.n_values) {
                std::vector<double> times;
                try {
                    const LevelGeometry geom = make_level_geometry(
                        config.domain, r, config.n_buffer, config.overlap);
                    const FineGrid fine(config.domain, n);
                    const SamplingRule rule =
                        config.make_sampling_rule(geom.r_total());
                    for (int rep = 0; rep < bench.repetitions; ++rep) {
                        const auto start = Clock::now();
                        SparseBasisMatrix phi = regression_matrix(fine, geom);
                        if (method != NormalizeMethod::none) {
                            VarianceField field = [&] {
                                SarSystem sys(geom.r_total(), config.kappa2);
                                switch (method) {
                                    case NormalizeMethod::exact:
                                        return variance_exact(phi, sys, n, n);
                                    case NormalizeMethod::exactKronecker:
                                        return variance_kronecker(
                                            phi,
                                            eigendecompose(build_tridiagonal(
                                                geom.r_total(), config.kappa2)),
                                            n, n);
                                    case NormalizeMethod::fft:
                                        return variance_fft(
                                            geom, fine,
                                            make_coarse_grid(fine, geom, rule),
                                            sys);
                                    default:
                                        throw std::logic_error("bench method");
                                }
                            }();
                            phi = apply_normalization(phi, field);
                        }
                        const double elapsed = seconds_since(start);
                        times.push_back(elapsed);
                        raw << fmt::format("{},{},{},{},{:.6f}\n",
                                           to_string(method), r, n, rep, elapsed);
                        raw.flush();
                    }
                } catch (const std::exception& e) {
                    all_ok = false;
                    if (!errors.is_open()) {
                        errors.open(out_dir / "bench_errors.csv");
                        errors << "method,r,n,message\n";
                    }
                    std::string msg = e.what();
                    std::replace(msg.begin(), msg.end(), ',', ';');
                    std::replace(msg.begin(), msg.end(), '\n', ' ');
                    errors << fmt::format("{},{},{},{}\n", to_string(method), r,
                                          n, msg);
                    errors.flush();
                    std::cerr << fmt::format("bench cell (method={}, r={}, n={}) "
                                             "failed: {}",
                                             to_string(method), r, n, e.what())
                              << std::endl;
                    continue;
                }
                std::vector<double> sorted = times;
                std::sort(sorted.begin(), sorted.end());
                const double median = sorted[sorted.size() / 2];
                summary << fmt::format("{},{},{},{:.6f},{:.6f},{:.6f}\n",
                                       to_string(method), r, n, median,
                                       sorted.front(), sorted.back());
                summary.flush();
                std::cout << fmt::format(
                                 "bench method={} r={} n={}: median={:.3f}s "
                                 "min={:.3f}s max={:.3f}s",
                                 to_string(method), r, n, median, sorted.front(),
                                 sorted.back())
                          << std::endl;
            }
        }
    }
    return all_ok ? 0 : 1;
}

int cmd_error(const RunConfig& config, const CommandOptions& options) {
    apply_run_mode(options);
    require_levels(config);
    if (!config.error) {
        throw std::invalid_argument("config: 'error' section is required");
    }
    const ErrorConfig& err = *config.error;
    const auto out_dir = prepare_out_dir(config, options);

    const FineGrid fine = config.make_grid();
    const ModelSpec spec = config.make_model_spec(config.normalize_method);

    std::ofstream summary(out_dir / "error_summary.csv");
    summary << "level,method,reference,r,n,mean_pct,max_pct\n";
    for (std::size_t l = 0; l < spec.levels.size(); ++l) {
        const LevelGeometry& geom = spec.levels[l];
        const SamplingRule rule = config.make_sampling_rule(geom.r_total());
        VarianceField approx = level_variance(err.method, geom, fine,
                                              spec.kappa2[l], rule, false,
                                              nullptr, static_cast<int>(l));
        VarianceField reference = level_variance(err.reference, geom, fine,
                                                 spec.kappa2[l], rule, false,
                                                 nullptr, static_cast<int>(l));
        Eigen::ArrayXXd rel =
            (approx.values - reference.values).abs() / reference.values.abs();
        const double mean_pct = rel.mean() * 100.0;
        const double max_pct = rel.maxCoeff() * 100.0;
        summary << fmt::format("{},{},{},{},{},{:.8g},{:.8g}\n", l,
                               to_string(err.method), to_string(err.reference),
                               geom.r_total(), fine.nx(), mean_pct, max_pct);
        summary.flush();
        if (err.dump_field) {
            write_matrix_csv(rel, out_dir / fmt::format("error_field_level{}.csv",
                                                        l));
            if (options.image_writer) {
                options.image_writer(
                    rel, out_dir / fmt::format("error_field_level{}.png", l));
            }
        }
        std::cout << fmt::format(
                         "error level {}: {} vs {} mean={:.6g}% max={:.6g}%", l,
                         to_string(err.method), to_string(err.reference),
                         mean_pct, max_pct)
                  << std::endl;
    }
    return 0;
}

int cmd_pipeline(const RunConfig& config, const CommandOptions& options) {
    apply_run_mode(options);
    require_levels(config);
    if (!config.sim) {
        throw std::invalid_argument("config: 'sim' section is required");
    }
    if (!config.sampling) {
        throw std::invalid_argument("config: 'sampling' section is required");
    }
    std::vector<NormalizeMethod> methods;
    if (config.pipeline) {
        methods = config.pipeline->methods;
    } else {
        methods = {NormalizeMethod::none, NormalizeMethod::both,
                   NormalizeMethod::exactKronecker, NormalizeMethod::exact};
    }
    const auto out_dir = prepare_out_dir(config, options);

    const FineGrid fine = config.make_grid();
    SimulationResult sim = simulate_matern(fine, *config.sim, config.seed);
    // Sampling uses its own stream so method lists do not shift the draw.
    Dataset data = [&] {
        const SamplingConfig& s = *config.sampling;
        if (s.kind == SamplingConfig::Kind::mar) {
            return sample_mar(sim.observed, s.fraction, config.seed + 1);
        }
        return sample_blocks(sim.observed, s.blocks);
    }();

    write_matrix_csv(sim.truth, out_dir / "truth.csv");
    write_dataset_csv(sim.observed, data.observed, out_dir / "dataset.csv");
    if (options.image_writer) {
        options.image_writer(sim.truth, out_dir / "truth.png");
    }

    std::ofstream report(out_dir / "pipeline_report.csv");
    report << "method,mae,rmspe,seconds\n";
    std::cout << "method,mae,rmspe,seconds" << std::endl;

    std::map<NormalizeMethod, Eigen::ArrayXXd> surfaces;
    for (NormalizeMethod method : methods) {
        const auto start = Clock::now();
        ModelSpec spec = config.make_model_spec(method);
        FitOptions fit_options;
        fit_options.coarse_rule = SamplingRule{config.coarse_mode, 0};
        FittedModel model = fit(data, spec, fine, fit_options);
        Eigen::ArrayXXd pred = predict(model, fine);
        const double elapsed = seconds_since(start);
        const Metrics m = metrics(pred, sim.observed, data.held_out);
        report << fmt::format("{},{:.6f},{:.6f},{:.3f}\n", to_string(method),
                              m.mae, m.rmspe, elapsed);
        report.flush();
        std::cout << fmt::format("{},{:.6f},{:.6f},{:.3f}", to_string(method),
                                 m.mae, m.rmspe, elapsed)
                  << std::endl;
        write_matrix_csv(pred,
                         out_dir / fmt::format("prediction_{}.csv",
                                               to_string(method)));
        if (options.image_writer) {
            options.image_writer(pred, out_dir / fmt::format("prediction_{}.png",
                                                             to_string(method)));
        }
        surfaces.emplace(method, std::move(pred));
    }

    // Artifact maps relative to the exact surface.
    if (surfaces.count(NormalizeMethod::exact) > 0) {
        const Eigen::ArrayXXd& exact = surfaces.at(NormalizeMethod::exact);
        for (NormalizeMethod m :
             {NormalizeMethod::none, NormalizeMethod::both}) {
            if (surfaces.count(m) == 0) continue;
            Eigen::ArrayXXd diff = surfaces.at(m) - exact;
            const auto name = fmt::format("diff_{}_exact", to_string(m));
            write_matrix_csv(diff, out_dir / (name + ".csv"));
            if (options.image_writer) {
                options.image_writer(diff, out_dir / (name + ".png"));
            }
            std::cout << fmt::format("{}: mean|diff|={:.6g} max|diff|={:.6g}",
                                     name, diff.abs().mean(),
                                     diff.abs().maxCoeff())
                      << std::endl;
        }
    }
    return 0;
}

} // namespace gridnorm
