#pragma once

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "goalcomp/pipeline.hpp"

namespace goalcomp {

namespace cli_detail {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed_raw;
    std::string out_dir;
    bool dry_run = false;
};

inline void add_common_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON run-config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", args.overrides,
                    "dotted-path override KEY=VALUE, e.g. epochs.joint=200 (repeatable)");
    cmd->add_option("--seed", args.seed_raw, "seed override");
    cmd->add_option("--out", args.out_dir, "output directory override");
    cmd->add_flag("--dry-run", args.dry_run,
                  "validate the config and print the resolved plan without writing anything");
}

inline RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg = load_config(args.config_path, args.overrides);
    if (!args.seed_raw.empty()) {
        try {
            std::size_t used = 0;
            cfg.seed = std::stoull(args.seed_raw, &used);
            require(used == args.seed_raw.size(), "trailing characters");
        } catch (const std::exception&) {
            throw std::invalid_argument("seed: '" + args.seed_raw +
                                        "' is not an unsigned integer");
        }
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    validate_config(cfg);
    return cfg;
}

inline bool print_dry_run(const CommonArgs& args, const RunConfig& cfg,
                          const std::string& plan) {
    if (!args.dry_run) return false;
    std::cout << "dry run: config is valid\n"
              << "plan: " << plan << "\n"
              << config_to_json(cfg).dump(2) << "\n";
    return true;
}

inline std::string bits_string(const LatentCode& code) {
    std::string s;
    s.reserve(code.bits.size());
    for (std::uint8_t b : code.bits) s += b ? '1' : '0';
    return s;
}

inline void print_metrics_line(const char* name, const Metrics& m) {
    std::cout << name << " accuracy " << fmt_double(m.accuracy) << " on " << m.samples
              << " samples\n";
}

inline void cmd_train(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    if (print_dry_run(args, cfg,
                      "train all three phases, then evaluate and write artifacts to " +
                          cfg.out_dir))
        return;
    const PipelineResult result = run_pipeline(cfg);
    print_metrics_line("fused", result.fused);
    print_metrics_line("baseline", result.baseline);
    std::cout << "ratio " << fmt_double(result.row.ratio) << ", deployed flops "
              << result.row.flops << "\nartifacts in " << cfg.out_dir << "\n";
}

inline void cmd_sweep(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    if (args.dry_run) {
        std::string crs;
        for (double cr : cfg.cr_list) crs += (crs.empty() ? "" : ",") + fmt_double(cr);
        print_dry_run(args, cfg,
                      "run one pipeline per cr in {" + crs + "} plus a shared baseline; "
                      "write sweep artifacts to " + cfg.out_dir);
        return;
    }
    const std::vector<SweepRow> rows = cr_sweep(cfg, cfg.cr_list);
    for (const SweepRow& row : rows) {
        if (row.failed) {
            std::cout << "cr " << fmt_double(row.cr) << ": FAILED (" << row.error << ")\n";
        } else {
            std::cout << "cr " << fmt_double(row.cr) << ": n=" << row.n << " fused "
                      << fmt_double(row.fused_acc) << " baseline "
                      << fmt_double(row.baseline_acc) << " ratio " << fmt_double(row.ratio)
                      << " flops " << row.flops << "\n";
        }
    }
    std::cout << "artifacts in " << cfg.out_dir << "\n";
}

inline void cmd_evaluate(const CommonArgs& args, const std::string& bundle_path) {
    const RunConfig cfg = resolve_config(args);
    if (print_dry_run(args, cfg,
                      "load " + bundle_path + ", evaluate on the test split, write " +
                          cfg.out_dir + "/eval-metrics.csv"))
        return;
    const SensorBundle bundle = load_bundle(bundle_path);
    const auto [train, test] = load_and_split(cfg);
    (void)train;
    const std::size_t threads = env_threads();
    const Metrics fused = evaluate(bundle, test, threads);
    const Metrics baseline = evaluate_baseline(bundle, test, threads);
    SweepRow row;
    row.cr = compression_ratio(bundle.d, bundle.n);
    row.n = bundle.n;
    row.fused_acc = fused.accuracy;
    row.baseline_acc = baseline.accuracy;
    row.ratio = baseline.accuracy > 0.0 ? fused.accuracy / baseline.accuracy : 0.0;
    row.flops = inference_flops(bundle);
    std::filesystem::create_directories(cfg.out_dir);
    write_text_file(cfg.out_dir + "/eval-metrics.csv", metrics_csv({row}));
    write_text_file(cfg.out_dir + "/confusion.csv", confusion_csv(fused));
    print_metrics_line("fused", fused);
    print_metrics_line("baseline", baseline);
    std::cout << "artifacts in " << cfg.out_dir << "\n";
}

inline void cmd_interpolate(const CommonArgs& args, const std::string& bundle_path,
                            std::size_t sensor) {
    const RunConfig cfg = resolve_config(args);
    if (print_dry_run(args, cfg,
                      "decode a bit-flip walk between two encoded test samples from " +
                          bundle_path))
        return;
    const SensorBundle bundle = load_bundle(bundle_path);
    require(sensor < bundle.S, "sensor: index out of range");
    const auto [train, test] = load_and_split(cfg);
    (void)train;
    require(test.size() >= 2, "interpolate: need at least two test samples");
    require(test.dim == bundle.d, "interpolate: dataset dim does not match bundle");

    Rng rng(derive_seed(cfg.seed, "interpolate"));
    const std::size_t a = rng.below(test.size());
    std::size_t b = rng.below(test.size());
    while (b == a) b = rng.below(test.size());

    const auto sample_column = [&](std::size_t j) {
        Tensor col(test.dim, 1);
        for (std::size_t k = 0; k < test.dim; ++k)
            col(k, 0) = test.observations[sensor](j, k);
        return col;
    };
    const LatentCode z_start =
        encode(bundle.encoders[sensor], sample_column(a), bundle.R, sensor);
    const LatentCode z_end =
        encode(bundle.encoders[sensor], sample_column(b), bundle.R, sensor);
    const auto steps = interpolate_latent(bundle.decoders[sensor], z_start, z_end, rng);

    std::size_t img_rows = test.image_rows, img_cols = test.image_cols;
    if (img_rows == 0) {
        const auto side =
            static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(test.dim))));
        require(side * side == test.dim, "interpolate: dataset is not image-shaped");
        img_rows = img_cols = side;
    }
    std::filesystem::create_directories(cfg.out_dir);
    std::string csv = "step,code\n";
    char name[64];
    for (std::size_t s = 0; s < steps.size(); ++s) {
        std::snprintf(name, sizeof name, "frame_%03zu.pgm", s);
        write_pgm(cfg.out_dir + "/" + name, as_image(steps[s].frame, img_rows, img_cols));
        csv += std::to_string(s) + "," + bits_string(steps[s].code) + "\n";
    }
    write_text_file(cfg.out_dir + "/interpolation.csv", csv);
    std::cout << "wrote " << steps.size() << " frames (samples " << a << " -> " << b
              << ", sensor " << sensor << ") to " << cfg.out_dir << "\n";
}

inline void cmd_reconstruct(const CommonArgs& args, const std::string& bundle_path,
                            std::size_t sensor, std::size_t count) {
    const RunConfig cfg = resolve_config(args);
    if (print_dry_run(args, cfg,
                      "reconstruct " + std::to_string(count) + " test samples through " +
                          bundle_path))
        return;
    const SensorBundle bundle = load_bundle(bundle_path);
    require(sensor < bundle.S, "sensor: index out of range");
    const auto [train, test] = load_and_split(cfg);
    (void)train;
    require(count >= 1, "count: must be at least 1");
    std::vector<std::size_t> rows(std::min(count, test.size()));
    std::iota(rows.begin(), rows.end(), 0);
    const SampleSet subset = detail::take_rows(test, rows, test.provenance + "/head");
    const ReconstructionReport report =
        reconstruction_report(bundle, subset, cfg.out_dir, sensor);
    double mean = 0.0;
    for (double v : report.mse) mean += v;
    mean /= static_cast<double>(report.mse.size());
    std::cout << "wrote " << report.image_files.size() << " images, mean mse "
              << fmt_double(mean) << ", in " << cfg.out_dir << "\n";
}

inline void cmd_synth_data(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    if (print_dry_run(args, cfg,
                      "generate the synthetic correlated set and cache it under " +
                          cfg.out_dir))
        return;
    Rng rng(derive_seed(cfg.seed, "data"));
    const SampleSet set = synth_correlated(cfg.sensors, cfg.input_dim, cfg.classes,
                                           cfg.dataset.samples, cfg.dataset.noise, rng);
    std::filesystem::create_directories(cfg.out_dir);
    const std::string path = cfg.out_dir + "/dataset.dset";
    save_sampleset(set, path);
    std::cout << "wrote " << set.size() << " samples (" << set.provenance << ") to " << path
              << "\n";
}

inline void cmd_inspect_bundle(const std::string& bundle_path) {
    const SensorBundle bundle = load_bundle(bundle_path);
    std::cout << "S=" << bundle.S << " d=" << bundle.d << " n=" << bundle.n
              << " C=" << bundle.C << " R=" << bundle.R << "\n";
    for (std::size_t i = 0; i < bundle.encoders.size(); ++i)
        std::cout << "encoder[" << i << "]: layers=" << bundle.encoders[i].layers.size()
                  << " flops=" << flops_estimate(bundle.encoders[i]) << "\n";
    for (std::size_t i = 0; i < bundle.decoders.size(); ++i)
        std::cout << "decoder[" << i << "]: layers=" << bundle.decoders[i].layers.size()
                  << " flops=" << flops_estimate(bundle.decoders[i]) << "\n";
    std::cout << "baseline: layers=" << bundle.baseline.layers.size()
              << " flops=" << flops_estimate(bundle.baseline) << "\n";
    std::cout << "fusion: layers=" << bundle.fusion.layers.size()
              << " flops=" << flops_estimate(bundle.fusion) << "\n";
    std::cout << "total flops=" << flops_estimate(bundle)
              << " deployed flops=" << inference_flops(bundle) << "\n";
}

}  // namespace cli_detail

// Parses argv and dispatches. Exit codes: 0 success, 1 validation/usage
// error, 2 runtime or training error.
inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"goal-oriented compression workbench: distributed encoders, a fusion "
                 "classifier, and a distillation training pipeline"};
    app.require_subcommand(1);

    cli_detail::CommonArgs train_args, sweep_args, eval_args, interp_args, recon_args,
        synth_args;
    std::string eval_bundle, interp_bundle, recon_bundle, inspect_bundle_path;
    std::size_t interp_sensor = 0, recon_sensor = 0, recon_count = 8;

    CLI::App* train = app.add_subcommand("train", "run the three-phase pipeline");
    cli_detail::add_common_options(train, train_args);
    train->callback([&] { cli_detail::cmd_train(train_args); });

    CLI::App* sweep = app.add_subcommand("sweep", "train once per compression ratio");
    cli_detail::add_common_options(sweep, sweep_args);
    sweep->callback([&] { cli_detail::cmd_sweep(sweep_args); });

    CLI::App* evaluate = app.add_subcommand("evaluate", "score a saved bundle on the test split");
    cli_detail::add_common_options(evaluate, eval_args);
    evaluate->add_option("--bundle", eval_bundle, "bundle file")->required();
    evaluate->callback([&] { cli_detail::cmd_evaluate(eval_args, eval_bundle); });

    CLI::App* interpolate =
        app.add_subcommand("interpolate", "decode a bit-flip walk between two codes");
    cli_detail::add_common_options(interpolate, interp_args);
    interpolate->add_option("--bundle", interp_bundle, "bundle file")->required();
    interpolate->add_option("--sensor", interp_sensor, "sensor index (default 0)");
    interpolate->callback(
        [&] { cli_detail::cmd_interpolate(interp_args, interp_bundle, interp_sensor); });

    CLI::App* reconstruct =
        app.add_subcommand("reconstruct", "dump original/reconstruction image pairs");
    cli_detail::add_common_options(reconstruct, recon_args);
    reconstruct->add_option("--bundle", recon_bundle, "bundle file")->required();
    reconstruct->add_option("--sensor", recon_sensor, "sensor index (default 0)");
    reconstruct->add_option("--count", recon_count, "samples to reconstruct (default 8)");
    reconstruct->callback([&] {
        cli_detail::cmd_reconstruct(recon_args, recon_bundle, recon_sensor, recon_count);
    });

    CLI::App* synth = app.add_subcommand("synth-data", "generate and cache the synthetic set");
    cli_detail::add_common_options(synth, synth_args);
    synth->callback([&] { cli_detail::cmd_synth_data(synth_args); });

    CLI::App* inspect = app.add_subcommand("inspect-bundle", "print a bundle's shape and cost");
    inspect->add_option("bundle", inspect_bundle_path, "bundle file")->required();
    inspect->callback([&] { cli_detail::cmd_inspect_bundle(inspect_bundle_path); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const TrainingDivergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace goalcomp
