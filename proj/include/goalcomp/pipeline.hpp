#pragma once

#include <algorithm>
#include <exception>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "goalcomp/evaluation.hpp"
#include "goalcomp/serialize.hpp"
#include "goalcomp/training.hpp"

namespace goalcomp {

// Materializes the configured dataset. Derived sets draw their randomness
// from seed-derived streams, so a (config, seed) pair pins the exact bytes.
inline SampleSet load_dataset(const RunConfig& cfg) {
    const DatasetSpec& ds = cfg.dataset;
    SampleSet set;
    if (ds.kind == "synthetic") {
        Rng rng(derive_seed(cfg.seed, "data"));
        set = synth_correlated(cfg.sensors, cfg.input_dim, cfg.classes, ds.samples, ds.noise,
                               rng);
    } else if (ds.kind == "idx") {
        set = load_idx(ds.images, ds.labels);
    } else if (ds.kind == "dset") {
        set = load_sampleset(ds.path);
    } else {
        throw std::invalid_argument("dataset.kind: unknown kind '" + ds.kind + "'");
    }
    if (ds.downsample > 1) set = downsample_images(set, ds.downsample);
    if (ds.pairwise) {
        require(set.sensors == 1, "dataset.pairwise: base set must be single-sensor");
        Rng rng(derive_seed(cfg.seed, "pairwise"));
        set = make_pairwise(set, rng, ds.balance);
    }
    require(set.sensors == cfg.sensors,
            "sensors: config says " + std::to_string(cfg.sensors) + " but dataset has " +
                std::to_string(set.sensors));
    require(set.dim == cfg.input_dim,
            "input_dim: config says " + std::to_string(cfg.input_dim) + " but dataset has " +
                std::to_string(set.dim));
    require(set.classes == cfg.classes,
            "classes: config says " + std::to_string(cfg.classes) + " but dataset has " +
                std::to_string(set.classes));
    return set;
}

inline std::pair<SampleSet, SampleSet> load_and_split(const RunConfig& cfg) {
    const SampleSet full = load_dataset(cfg);
    SplitSpec spec;
    spec.train_fraction = cfg.dataset.train_fraction;
    spec.test_fraction = cfg.dataset.test_fraction;
    spec.seed = derive_seed(cfg.seed, "split");
    return split(full, spec);
}

struct PipelineResult {
    SensorBundle bundle;
    TrainLog log;
    Metrics fused;
    Metrics baseline;
    SweepRow row;  // single-CR summary, as written to metrics.csv
};

namespace detail {

inline void write_failure_marker(const std::string& out_dir, const std::string& error,
                                 const TrainLog& partial_log) {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/FAILED", error + "\n");
    write_text_file(out_dir + "/trainlog.csv", partial_log.to_csv());
}

inline SweepRow summarize(const RunConfig& cfg, const SensorBundle& bundle,
                          const Metrics& fused, const Metrics& baseline) {
    SweepRow row;
    row.cr = cfg.cr > 0.0 ? cfg.cr : compression_ratio(cfg.input_dim, cfg.code_bits);
    row.n = cfg.code_bits;
    row.fused_acc = fused.accuracy;
    row.baseline_acc = baseline.accuracy;
    row.ratio = baseline.accuracy > 0.0 ? fused.accuracy / baseline.accuracy : 0.0;
    row.flops = inference_flops(bundle);
    return row;
}

}  // namespace detail

// Full three-phase run on the configured dataset. With `persist` set the
// output directory receives resolved-config.json, bundle.gcmp, trainlog.csv,
// metrics.csv, and confusion.csv; a failed phase flushes the partial log
// next to a FAILED marker holding the error text, then rethrows.
inline PipelineResult run_pipeline(const RunConfig& cfg, bool persist = true) {
    validate_config(cfg);
    const auto [train, test] = load_and_split(cfg);

    PipelineResult result;
    try {
        Rng rng1(derive_seed(cfg.seed, "phase1"));
        Phase1Result p1 = phase1_autoencoders(cfg, train, rng1);
        result.log.extend(p1.log);

        Rng rng2(derive_seed(cfg.seed, "phase2"));
        Phase2Result p2 = phase2_baseline(cfg, train, rng2);
        result.log.extend(p2.log);

        Rng rng3(derive_seed(cfg.seed, "phase3"));
        Phase3Result p3 = phase3_joint(cfg, train, std::move(p1.encoders),
                                       std::move(p1.decoders), p2.baseline, rng3);
        result.log.extend(p3.log);
        result.bundle = std::move(p3.bundle);
    } catch (const std::exception& e) {
        if (persist) detail::write_failure_marker(cfg.out_dir, e.what(), result.log);
        throw;
    }

    const std::size_t threads = env_threads();
    result.fused = evaluate(result.bundle, test, threads);
    result.baseline = evaluate_baseline(result.bundle, test, threads);
    result.row = detail::summarize(cfg, result.bundle, result.fused, result.baseline);

    if (persist) {
        std::filesystem::create_directories(cfg.out_dir);
        write_text_file(cfg.out_dir + "/resolved-config.json",
                        config_to_json(cfg).dump(2) + "\n");
        save_bundle(result.bundle, cfg.out_dir + "/bundle.gcmp");
        write_text_file(cfg.out_dir + "/trainlog.csv", result.log.to_csv());
        write_text_file(cfg.out_dir + "/metrics.csv", metrics_csv({result.row}));
        write_text_file(cfg.out_dir + "/confusion.csv", confusion_csv(result.fused));
    }
    return result;
}

// Trains one shared baseline, then one encoder/fusion pipeline per
// compression ratio on the same split, in ascending CR order. Per-row
// failures mark the row (and its subdirectory) and the sweep continues.
// Artifacts: sweep.csv, tradeoff.csv, per-row bundle and confusion matrix.
// Training logs time wall-clock seconds, so sweeps do not persist them;
// every sweep artifact is a pure function of (config bytes, dataset bytes).
inline std::vector<SweepRow> cr_sweep(const RunConfig& cfg, std::vector<double> cr_list,
                                      bool persist = true) {
    validate_config(cfg);
    if (cr_list.empty()) cr_list = cfg.cr_list;
    for (double cr : cr_list)
        require(code_bits_for_cr(cfg.input_dim, cr) <= cfg.bit_budget,
                "cr_list: cr=" + fmt_double(cr) + " exceeds the bit budget");
    std::sort(cr_list.begin(), cr_list.end());
    const auto [train, test] = load_and_split(cfg);
    const std::size_t threads = env_threads();

    if (persist) {
        std::filesystem::create_directories(cfg.out_dir);
        write_text_file(cfg.out_dir + "/resolved-config.json",
                        config_to_json(cfg).dump(2) + "\n");
    }

    Rng baseline_rng(derive_seed(cfg.seed, "baseline"));
    Phase2Result p2 = phase2_baseline(cfg, train, baseline_rng);
    const Metrics baseline_metrics = detail::tally_predictions(
        test, cfg.classes,
        [&](const std::vector<std::size_t>& rows) {
            return model_forward(p2.baseline, detail::sensor_batch_columns(test, rows));
        },
        threads);

    std::vector<SweepRow> rows;
    for (double cr : cr_list) {
        RunConfig row_cfg = cfg;
        row_cfg.cr = cr;
        row_cfg.code_bits = code_bits_for_cr(cfg.input_dim, cr);
        const std::string row_dir = cfg.out_dir + "/cr" + fmt_double(cr);
        SweepRow row;
        row.cr = cr;
        row.n = row_cfg.code_bits;
        try {
            const std::string tag = "cr=" + fmt_double(cr);
            Rng rng1(derive_seed(cfg.seed, tag + "/phase1"));
            Phase1Result p1 = phase1_autoencoders(row_cfg, train, rng1);
            Rng rng3(derive_seed(cfg.seed, tag + "/phase3"));
            Phase3Result p3 = phase3_joint(row_cfg, train, std::move(p1.encoders),
                                           std::move(p1.decoders), p2.baseline, rng3);
            const Metrics fused = evaluate(p3.bundle, test, threads);
            row = detail::summarize(row_cfg, p3.bundle, fused, baseline_metrics);
            if (persist) {
                std::filesystem::create_directories(row_dir);
                save_bundle(p3.bundle, row_dir + "/bundle.gcmp");
                write_text_file(row_dir + "/confusion.csv", confusion_csv(fused));
            }
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
            if (persist) {
                std::filesystem::create_directories(row_dir);
                write_text_file(row_dir + "/FAILED", row.error + "\n");
            }
        }
        rows.push_back(std::move(row));
    }

    if (persist) {
        write_text_file(cfg.out_dir + "/sweep.csv", metrics_csv(rows));
        if (rows.size() >= 2)
            write_text_file(cfg.out_dir + "/tradeoff.csv", tradeoff_report(rows));
    }
    return rows;
}

}  // namespace goalcomp
