#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "support/oracles.hpp"

using namespace goalcomp;

namespace {

SensorBundle trained_toy_bundle(const SampleSet& train, RunConfig cfg, std::uint64_t seed) {
    Rng rng1(derive_seed(seed, "p1"));
    Phase1Result p1 = phase1_autoencoders(cfg, train, rng1);
    Rng rng2(derive_seed(seed, "p2"));
    Phase2Result p2 = phase2_baseline(cfg, train, rng2);
    Rng rng3(derive_seed(seed, "p3"));
    return phase3_joint(cfg, train, std::move(p1.encoders), std::move(p1.decoders),
                        p2.baseline, rng3)
        .bundle;
}

SampleSet labeled_set(std::size_t N, std::size_t C, std::size_t sensors, std::size_t d) {
    SampleSet set;
    set.sensors = sensors;
    set.dim = d;
    set.classes = C;
    set.provenance = "labeled";
    set.labels.resize(N);
    for (std::size_t j = 0; j < N; ++j)
        set.labels[j] = static_cast<std::uint32_t>((j * 7 + 3) % C);
    for (std::size_t i = 0; i < sensors; ++i) {
        Tensor obs(N, d);
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t k = 0; k < d; ++k)
                obs(j, k) = 0.5 + 0.001 * static_cast<double>((j + k + i) % 7);
        set.observations.push_back(std::move(obs));
    }
    return set;
}

std::string fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir.string();
}

}  // namespace

TEST(Tally, PerfectPredictorScoresOne) {
    const SampleSet set = labeled_set(600, 4, 1, 3);
    const Metrics m = detail::tally_predictions(
        set, 4,
        [&](const std::vector<std::size_t>& rows) {
            Tensor probs(4, rows.size());
            for (std::size_t b = 0; b < rows.size(); ++b)
                probs(set.labels[rows[b]], b) = 1.0;
            return probs;
        },
        0);
    EXPECT_EQ(m.accuracy, 1.0);
    EXPECT_EQ(m.samples, 600u);
    for (std::size_t t = 0; t < 4; ++t) {
        EXPECT_EQ(m.per_class_recall[t], 1.0);
        for (std::size_t p = 0; p < 4; ++p)
            if (t != p) EXPECT_EQ(m.at(t, p), 0u);
    }
}

TEST(Tally, ConstantPredictorScoresClassPrior) {
    const SampleSet set = labeled_set(600, 4, 1, 3);
    std::size_t class2 = 0;
    for (std::uint32_t label : set.labels) class2 += label == 2 ? 1 : 0;

    const Metrics m = detail::tally_predictions(
        set, 4,
        [&](const std::vector<std::size_t>& rows) {
            Tensor probs(4, rows.size());
            for (std::size_t b = 0; b < rows.size(); ++b) probs(2, b) = 1.0;
            return probs;
        },
        0);
    EXPECT_EQ(m.accuracy, static_cast<double>(class2) / 600.0);
    for (std::size_t t = 0; t < 4; ++t) {
        std::uint64_t row_sum = 0;
        for (std::size_t p = 0; p < 4; ++p) row_sum += m.at(t, p);
        EXPECT_EQ(m.at(t, 2), row_sum);  // every prediction lands in column 2
    }
}

TEST(Tally, ConfusionRowSumsMatchClassCounts) {
    const SampleSet set = labeled_set(500, 5, 1, 3);
    Rng rng(811);
    const Metrics m = detail::tally_predictions(
        set, 5,
        [&](const std::vector<std::size_t>& rows) {
            return oracle::random_prob_rows(rows.size(), 5, rng).transposed();
        },
        0);
    std::vector<std::uint64_t> counts(5, 0);
    for (std::uint32_t label : set.labels) counts[label] += 1;
    std::uint64_t diag = 0;
    for (std::size_t t = 0; t < 5; ++t) {
        std::uint64_t row_sum = 0;
        for (std::size_t p = 0; p < 5; ++p) row_sum += m.at(t, p);
        EXPECT_EQ(row_sum, counts[t]) << "class " << t;
        diag += m.at(t, t);
    }
    EXPECT_EQ(m.accuracy, static_cast<double>(diag) / 500.0);
}

TEST(Tally, ThreadCountNeverChangesTheResult) {
    const SampleSet set = labeled_set(1500, 4, 1, 3);  // several 256-sample chunks
    Rng seed_rng(813);
    const MlpModel probe = oracle::make_mlp({3, 6, 4}, Activation::Softmax, seed_rng);
    const auto predict = [&](const std::vector<std::size_t>& rows) {
        return model_forward(probe, batch_columns(set, 0, rows));
    };
    const Metrics sequential = detail::tally_predictions(set, 4, predict, 0);
    const Metrics one = detail::tally_predictions(set, 4, predict, 1);
    const Metrics four = detail::tally_predictions(set, 4, predict, 4);
    EXPECT_EQ(sequential.confusion, one.confusion);
    EXPECT_EQ(sequential.confusion, four.confusion);
    EXPECT_EQ(sequential.accuracy, four.accuracy);
}

TEST(EnvThreads, ParsesAndValidates) {
    unsetenv("GOALCOMP_THREADS");
    EXPECT_EQ(env_threads(), 0u);
    setenv("GOALCOMP_THREADS", "4", 1);
    EXPECT_EQ(env_threads(), 4u);
    setenv("GOALCOMP_THREADS", "", 1);
    EXPECT_EQ(env_threads(), 0u);
    setenv("GOALCOMP_THREADS", "lots", 1);
    EXPECT_THROW(env_threads(), std::invalid_argument);
    setenv("GOALCOMP_THREADS", "4x", 1);
    EXPECT_THROW(env_threads(), std::invalid_argument);
    unsetenv("GOALCOMP_THREADS");
}

TEST(Evaluate, FusedAndBaselinePathsOnATrainedBundle) {
    Rng data_rng(821);
    const SampleSet full = synth_correlated(2, 6, 3, 200, 0.1, data_rng);
    SplitSpec spec;
    spec.seed = 823;
    const auto [train, test] = split(full, spec);

    RunConfig cfg;
    cfg.sensors = 2;
    cfg.input_dim = 6;
    cfg.code_bits = 3;
    cfg.classes = 3;
    cfg.epochs = {5, 10, 10};
    const SensorBundle bundle = trained_toy_bundle(train, cfg, 827);

    const Metrics fused = evaluate(bundle, test);
    const Metrics baseline = evaluate_baseline(bundle, test, 2);
    EXPECT_EQ(fused.samples, test.size());
    EXPECT_EQ(baseline.samples, test.size());
    EXPECT_GE(fused.accuracy, 0.0);
    EXPECT_LE(fused.accuracy, 1.0);
    std::uint64_t total = 0;
    for (std::uint64_t v : fused.confusion) total += v;
    EXPECT_EQ(total, test.size());

    SampleSet wrong = test;
    wrong.classes = 4;
    for (auto& label : wrong.labels) label = label % 4;
    EXPECT_THROW(evaluate(bundle, wrong), std::invalid_argument);
}

TEST(Reports, MetricsCsvRendersRowsAndFailures) {
    SweepRow good;
    good.cr = 2.0;
    good.n = 8;
    good.fused_acc = 0.9375;
    good.baseline_acc = 1.0;
    good.ratio = 0.9375;
    good.flops = 1234;
    SweepRow bad;
    bad.cr = 8.0;
    bad.n = 2;
    bad.failed = true;
    bad.error = "training diverged in phase 3, epoch 2: loss inf";

    const std::string csv = metrics_csv({good, bad});
    EXPECT_EQ(csv.find("cr,n,fused_acc,baseline_acc,ratio,flops\n"), 0u);
    EXPECT_NE(csv.find("2,8,0.9375,1,0.9375,1234\n"), std::string::npos);
    EXPECT_NE(csv.find("8,2,,,,\n"), std::string::npos);  // failed row keeps blanks
}

TEST(Reports, ConfusionCsvUsesClassLabels) {
    Metrics m;
    m.classes = 11;
    m.samples = 3;
    m.confusion.assign(121, 0);
    m.confusion[0 * 11 + 0] = 2;
    m.confusion[10 * 11 + 3] = 1;
    const std::string csv = confusion_csv(m);
    EXPECT_EQ(csv.find("0,1,2,3,4,5,6,7,8,9,F\n"), 0u);  // mismatch class prints as F
    EXPECT_EQ(class_label(10), "F");
    EXPECT_EQ(class_label(7), "7");

    // Second line is the first confusion row.
    const std::size_t line2 = csv.find('\n') + 1;
    EXPECT_EQ(csv.substr(line2, 4), "2,0,");
}

TEST(Reports, TradeoffNeedsAtLeastTwoRows) {
    SweepRow only;
    only.cr = 2.0;
    EXPECT_THROW(tradeoff_report({only}), std::invalid_argument);

    SweepRow second;
    second.cr = 4.0;
    second.flops = 99;
    second.fused_acc = 0.75;
    const std::string csv = tradeoff_report({only, second});
    EXPECT_EQ(csv.find("cr,flops,fused_acc\n"), 0u);
    EXPECT_NE(csv.find("4,99,0.75\n"), std::string::npos);
}

TEST(Interpolate, WalksOneBitAtATimeToTheTarget) {
    Rng rng(829);
    const MlpModel decoder = build_decoder(4, 9, rng);
    LatentCode start, end;
    start.bits = {0, 0, 0, 0};
    end.bits = {1, 1, 1, 1};

    Rng walk(831);
    const auto steps = interpolate_latent(decoder, start, end, walk);
    ASSERT_EQ(steps.size(), 5u);  // Hamming distance 4 plus the origin
    EXPECT_EQ(steps.front().code.bits, start.bits);
    EXPECT_EQ(steps.back().code.bits, end.bits);
    for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
        EXPECT_EQ(oracle::hamming(steps[k].code, steps[k + 1].code), 1u);
        EXPECT_EQ(oracle::hamming(steps[k].code, end), 4 - k);
    }
    for (const auto& step : steps) {
        EXPECT_EQ(step.frame.rows(), 1u);
        EXPECT_EQ(step.frame.cols(), 9u);
        const Tensor direct =
            model_forward(decoder, code_column(step.code)).transposed();
        EXPECT_EQ(step.frame, direct);
    }

    Rng walk2(831);
    const auto replay = interpolate_latent(decoder, start, end, walk2);
    for (std::size_t k = 0; k < steps.size(); ++k)
        EXPECT_EQ(replay[k].code.bits, steps[k].code.bits);
}

TEST(Interpolate, IdenticalEndpointsYieldOneFrame) {
    Rng rng(839);
    const MlpModel decoder = build_decoder(3, 6, rng);
    LatentCode z;
    z.bits = {1, 0, 1};
    Rng walk(841);
    const auto steps = interpolate_latent(decoder, z, z, walk);
    ASSERT_EQ(steps.size(), 1u);
    EXPECT_EQ(steps.front().code.bits, z.bits);
}

TEST(Interpolate, ValidatesModelAndLengths) {
    Rng rng(853);
    const MlpModel decoder = build_decoder(3, 6, rng);
    const MlpModel encoder = build_encoder(6, 3, rng);
    LatentCode a, b, longer;
    a.bits = {0, 1, 0};
    b.bits = {1, 1, 0};
    longer.bits = {1, 1, 0, 0};
    Rng walk(857);
    EXPECT_THROW(interpolate_latent(encoder, a, b, walk), std::invalid_argument);
    EXPECT_THROW(interpolate_latent(decoder, a, longer, walk), std::invalid_argument);
    EXPECT_THROW(interpolate_latent(decoder, longer, longer, walk),
                 std::invalid_argument);  // decoder expects 3-bit codes
}

TEST(Reconstruction, WritesPairedImagesAndExactErrors) {
    Rng data_rng(859);
    const SampleSet full = synth_correlated(2, 9, 3, 120, 0.1, data_rng);
    SplitSpec spec;
    spec.seed = 863;
    const auto [train, test_all] = split(full, spec);

    RunConfig cfg;
    cfg.sensors = 2;
    cfg.input_dim = 9;
    cfg.code_bits = 3;
    cfg.classes = 3;
    cfg.epochs = {4, 4, 4};
    const SensorBundle bundle = trained_toy_bundle(train, cfg, 867);

    // Ten samples, dim 9: no image shape recorded, so the square raster 3x3
    // is inferred.
    std::vector<std::size_t> keep(10);
    std::iota(keep.begin(), keep.end(), 0);
    SampleSet few;
    few.sensors = test_all.sensors;
    few.dim = test_all.dim;
    few.classes = test_all.classes;
    few.provenance = "few";
    few.labels.assign(test_all.labels.begin(), test_all.labels.begin() + 10);
    for (std::size_t i = 0; i < test_all.sensors; ++i) {
        Tensor obs(10, 9);
        for (std::size_t j = 0; j < 10; ++j)
            for (std::size_t k = 0; k < 9; ++k) obs(j, k) = test_all.observations[i](j, k);
        few.observations.push_back(std::move(obs));
    }

    const std::string dir = fresh_dir("goalcomp_recon");
    const ReconstructionReport report = reconstruction_report(bundle, few, dir, 1);
    ASSERT_EQ(report.mse.size(), 10u);
    ASSERT_EQ(report.image_files.size(), 20u);  // an original and a recon per sample
    for (const std::string& file : report.image_files) {
        EXPECT_TRUE(std::filesystem::exists(file)) << file;
        const std::string bytes = oracle::read_file(file);
        EXPECT_EQ(bytes.substr(0, 3), "P5\n");
        EXPECT_NE(bytes.find("3 3\n255\n"), std::string::npos);
    }
    EXPECT_TRUE(std::filesystem::exists(dir + "/reconstruction-mse.csv"));

    // The logged error must equal decode(encode(x)) recomputed bit for bit.
    for (std::size_t j = 0; j < 10; ++j) {
        Tensor original(9, 1);
        for (std::size_t k = 0; k < 9; ++k) original(k, 0) = few.observations[1](j, k);
        const LatentCode code = encode(bundle.encoders[1], original, bundle.R, 1);
        const Tensor recon = model_forward(bundle.decoders[1], code_column(code));
        EXPECT_EQ(report.mse[j], mse_loss(original.transposed(), recon.transposed()));
    }
    std::filesystem::remove_all(dir);
}

TEST(Reconstruction, RejectsNonSquareDimWithoutImageShape) {
    Rng data_rng(877);
    const SampleSet set = synth_correlated(2, 7, 3, 40, 0.1, data_rng);  // 7 not square

    RunConfig cfg;
    cfg.sensors = 2;
    cfg.input_dim = 7;
    cfg.code_bits = 3;
    cfg.classes = 3;
    cfg.epochs = {2, 2, 2};
    const SensorBundle bundle = trained_toy_bundle(set, cfg, 881);
    const std::string dir = fresh_dir("goalcomp_recon_bad");
    EXPECT_THROW(reconstruction_report(bundle, set, dir), std::invalid_argument);
    EXPECT_THROW(reconstruction_report(bundle, set, dir, 5), std::invalid_argument);
    std::filesystem::remove_all(dir);
}

TEST(Pgm, HeaderAndPixelBytes) {
    const std::string path =
        (std::filesystem::temp_directory_path() / "goalcomp_probe.pgm").string();
    Tensor img(2, 3);
    img(0, 0) = 0.0;
    img(0, 1) = 0.5;
    img(0, 2) = 1.0;
    img(1, 0) = 2.0;   // clamps to 255
    img(1, 1) = -1.0;  // clamps to 0
    img(1, 2) = 1.0 / 255.0;
    write_pgm(path, img);
    const std::string bytes = oracle::read_file(path);
    EXPECT_EQ(bytes.substr(0, 11), "P5\n3 2\n255\n");
    ASSERT_EQ(bytes.size(), 11u + 6u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[11]), 0u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 128u);  // lround(127.5)
    EXPECT_EQ(static_cast<unsigned char>(bytes[13]), 255u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[14]), 255u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[15]), 0u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 1u);

    EXPECT_EQ(as_image(Tensor::row({1, 2, 3, 4, 5, 6}), 2, 3)(1, 2), 6.0);
    EXPECT_THROW(as_image(Tensor::row({1, 2, 3}), 2, 2), std::invalid_argument);
    std::remove(path.c_str());
}
