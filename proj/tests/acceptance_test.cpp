// Acceptance gate. Each test exercises one release criterion end to end and
// prints exactly one "[PASS]/[FAIL] criterion N: ..." line so the suite's
// stdout doubles as the release checklist. Thresholds are pinned here, not
// in a config, so a green run certifies the same claims everywhere.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "goalcomp/goalcomp.hpp"

#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace goalcomp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

void report(int id, const Outcome& outcome) {
    std::printf("[%s] criterion %d: %s\n", outcome.pass ? "PASS" : "FAIL", id,
                outcome.detail.c_str());
    std::fflush(stdout);
    EXPECT_TRUE(outcome.pass) << "criterion " << id << ": " << outcome.detail;
}

template <typename Fn>
Outcome guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        return {false, std::string("unexpected exception: ") + e.what()};
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) { return fmt_double(v); }

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Small correlated-sensor pipeline shared by the code-budget, interpolation,
// and freeze-contract criteria. Trained once; failures surface in each
// dependent criterion's line.
struct ToyRun {
    RunConfig cfg;
    SampleSet train{};
    SampleSet test{};
    SensorBundle bundle;
    std::vector<double> teacher_before;
    std::vector<double> teacher_after;
    std::string error;
};

const ToyRun& toy_run() {
    static const ToyRun run = [] {
        ToyRun t;
        try {
            t.cfg.seed = 7;
            t.cfg.sensors = 2;
            t.cfg.input_dim = 12;
            t.cfg.code_bits = 4;
            t.cfg.classes = 3;
            t.cfg.bit_budget = 16;
            t.cfg.epochs = {3, 5, 5};
            t.cfg.batch_size = 32;
            t.cfg.learning_rate = 0.01;
            t.cfg.dataset.samples = 240;
            t.cfg.dataset.noise = 0.08;

            Rng data_rng(derive_seed(t.cfg.seed, "data"));
            const SampleSet full =
                synth_correlated(t.cfg.sensors, t.cfg.input_dim, t.cfg.classes,
                                 t.cfg.dataset.samples, t.cfg.dataset.noise, data_rng);
            SplitSpec spec;
            spec.seed = derive_seed(t.cfg.seed, "split");
            std::tie(t.train, t.test) = split(full, spec);

            Rng rng1(derive_seed(t.cfg.seed, "phase1"));
            Phase1Result p1 = phase1_autoencoders(t.cfg, t.train, rng1);
            Rng rng2(derive_seed(t.cfg.seed, "phase2"));
            Phase2Result p2 = phase2_baseline(t.cfg, t.train, rng2);
            t.teacher_before = oracle::flat_params(p2.baseline);
            Rng rng3(derive_seed(t.cfg.seed, "phase3"));
            Phase3Result p3 = phase3_joint(t.cfg, t.train, std::move(p1.encoders),
                                           std::move(p1.decoders), p2.baseline, rng3);
            t.teacher_after = oracle::flat_params(p3.bundle.baseline);
            t.bundle = std::move(p3.bundle);
        } catch (const std::exception& e) {
            t.error = e.what();
        }
        return t;
    }();
    return run;
}

// Deterministic three-ratio sweep pair shared by the determinism and FLOP
// criteria.
struct SweepPair {
    std::vector<SweepRow> rows_a;
    std::vector<SweepRow> rows_b;
    fs::path dir_a;
    fs::path dir_b;
    std::string error;
};

const SweepPair& sweep_pair() {
    static const SweepPair pair = [] {
        SweepPair p;
        try {
            RunConfig cfg;
            cfg.seed = 13;
            cfg.sensors = 2;
            cfg.input_dim = 12;
            cfg.code_bits = 4;
            cfg.classes = 3;
            cfg.bit_budget = 16;
            cfg.cr_list = {2.0, 3.0, 6.0};
            cfg.epochs = {2, 3, 3};
            cfg.batch_size = 32;
            cfg.learning_rate = 0.01;
            cfg.dataset.samples = 240;
            cfg.dataset.noise = 0.08;

            p.dir_a = fresh_dir("goalcomp-acceptance-sweep-a");
            p.dir_b = fresh_dir("goalcomp-acceptance-sweep-b");
            cfg.out_dir = p.dir_a.string();
            p.rows_a = cr_sweep(cfg, cfg.cr_list);
            cfg.out_dir = p.dir_b.string();
            p.rows_b = cr_sweep(cfg, cfg.cr_list);
        } catch (const std::exception& e) {
            p.error = e.what();
        }
        return p;
    }();
    return pair;
}

}  // namespace

// Criterion 1 — analytic gradients match central finite differences on
// random architectures for every loss head, including the quantized
// bottleneck ridden in its soft surrogate mode.
TEST(Acceptance, C1GradientCorrectness) {
    report(1, guarded([]() -> Outcome {
               const auto start = std::chrono::steady_clock::now();
               Rng rng(20260815);
               // Central differences are only meaningful inside a smooth
               // region, so models get two nudges: random biases (with the
               // zero default, a fully dead input column pins every
               // downstream pre-activation to exactly 0, where a subgradient
               // convention cannot match a two-sided difference), and
               // resampled inputs until no rectifier pre-activation sits
               // within 1e-3 of its corner.
               const auto randomize_biases = [&rng](MlpModel& model) {
                   for (DenseLayer& layer : model.layers)
                       for (double& b : layer.bias.values()) b = rng.uniform(-0.3, 0.3);
               };
               const auto sample_kink_free = [&rng](const MlpModel& model, Tensor& x) {
                   for (int attempt = 0; attempt < 1000; ++attempt) {
                       for (double& v : x.values()) v = rng.uniform01() * 2.0 - 1.0;
                       const ModelTrace trace = forward_trace(model, x, QuantMode::Soft);
                       bool clean = true;
                       for (std::size_t l = 0; clean && l < model.layers.size(); ++l) {
                           if (model.layers[l].activation != Activation::ReLU) continue;
                           for (double v : trace.pre[l].values())
                               if (std::abs(v) < 1e-3) {
                                   clean = false;
                                   break;
                               }
                       }
                       if (clean) return;
                   }
                   throw std::runtime_error("could not sample a kink-free input batch");
               };
               double worst = 0.0;
               std::size_t checked = 0;
               for (int k = 0; k < 20; ++k) {
                   const std::size_t depth = 2 + rng.below(3);  // layer count 2..4
                   const std::size_t in = 2 + rng.below(12);
                   const std::size_t batch = 2 + rng.below(3);
                   std::vector<std::size_t> dims{in};
                   for (std::size_t l = 0; l + 1 < depth; ++l)
                       dims.push_back(2 + rng.below(15));  // hidden widths 2..16
                   Tensor x(in, batch);

                   oracle::FdReport fd;
                   switch (k % 4) {
                       case 0: {  // cross-entropy head
                           const std::size_t classes = 2 + rng.below(6);
                           dims.push_back(classes);
                           MlpModel model =
                               oracle::make_mlp(dims, Activation::Softmax, rng);
                           randomize_biases(model);
                           sample_kink_free(model, x);
                           const Tensor targets =
                               oracle::random_onehot_rows(batch, classes, rng).transposed();
                           fd = oracle::finite_difference_check(model, x, targets,
                                                                LossKind::CrossEntropy);
                           break;
                       }
                       case 1: {  // reconstruction head
                           const std::size_t out = 2 + rng.below(12);
                           dims.push_back(out);
                           MlpModel model = oracle::make_mlp(dims, Activation::Sigmoid, rng,
                                                             Role::Decoder);
                           randomize_biases(model);
                           sample_kink_free(model, x);
                           Tensor targets(out, batch);
                           for (double& v : targets.values()) v = rng.uniform01();
                           fd = oracle::finite_difference_check(model, x, targets,
                                                                LossKind::MSE);
                           break;
                       }
                       case 2: {  // distillation head
                           const std::size_t classes = 2 + rng.below(6);
                           dims.push_back(classes);
                           MlpModel model =
                               oracle::make_mlp(dims, Activation::Softmax, rng);
                           randomize_biases(model);
                           sample_kink_free(model, x);
                           const Tensor targets =
                               oracle::random_onehot_rows(batch, classes, rng).transposed();
                           const Tensor teacher =
                               oracle::random_prob_rows(batch, classes, rng).transposed();
                           fd = oracle::finite_difference_check(model, x, targets,
                                                                LossKind::Distill, &teacher);
                           break;
                       }
                       default: {  // quantized bottleneck, surrogate path
                           const std::size_t bits = 1 + rng.below(8);
                           dims.push_back(bits);
                           MlpModel model = oracle::make_mlp(dims, Activation::QSigmoid, rng,
                                                             Role::Encoder);
                           randomize_biases(model);
                           sample_kink_free(model, x);
                           Tensor targets(bits, batch);
                           for (double& v : targets.values()) v = rng.uniform01();
                           fd = oracle::finite_difference_check(model, x, targets,
                                                                LossKind::MSE);
                           break;
                       }
                   }
                   worst = std::max(worst, fd.max_rel_error);
                   checked += fd.checked;
               }
               const double elapsed = seconds_since(start);
               const bool pass = worst < 1e-4 && checked > 0 && elapsed < 60.0;
               return {pass, "gradients vs finite differences on 20 random models: max rel "
                             "err " + fmt(worst) + " over " + std::to_string(checked) +
                             " parameters in " + fmt(elapsed) + " s (need < 1e-4, < 60 s)"};
           }));
}

// Criterion 2 — the distillation objective is exactly cross-entropy plus the
// divergence term, the divergence is never negative, and it vanishes on
// identical distributions.
TEST(Acceptance, C2LossIdentities) {
    report(2, guarded([]() -> Outcome {
               Rng rng(99);
               std::size_t sum_mismatches = 0;
               std::size_t negative_kl = 0;
               double worst_self = 0.0;
               for (int trial = 0; trial < 1000; ++trial) {
                   const std::size_t batch = 1 + rng.below(6);
                   const std::size_t classes = 2 + rng.below(8);
                   const Tensor y = oracle::random_onehot_rows(batch, classes, rng);
                   const Tensor y_hat = oracle::random_prob_rows(batch, classes, rng);
                   const Tensor teacher = oracle::random_prob_rows(batch, classes, rng);
                   const double ce = cross_entropy(y, y_hat);
                   const double kl = kl_divergence(teacher, y_hat);
                   const double dl = distill_loss(y, y_hat, teacher);
                   if (dl != ce + kl) ++sum_mismatches;
                   if (kl < 0.0) ++negative_kl;
                   worst_self = std::max(worst_self, kl_divergence(y_hat, y_hat));
               }
               const bool pass =
                   sum_mismatches == 0 && negative_kl == 0 && worst_self < 1e-12;
               return {pass, "1000 random batches: distill == ce + kl bitwise (" +
                             std::to_string(sum_mismatches) + " mismatches), kl >= 0 (" +
                             std::to_string(negative_kl) + " violations), max kl(p,p) = " +
                             fmt(worst_self) + " (need < 1e-12)"};
           }));
}

// Criterion 3 — every code the encoders emit stays inside the bit budget and
// is strictly binary, fuzzed across trained and freshly initialized encoders.
TEST(Acceptance, C3CodeBudgetInvariant) {
    report(3, guarded([]() -> Outcome {
               const ToyRun& toy = toy_run();
               if (!toy.error.empty()) return {false, "toy pipeline failed: " + toy.error};

               Rng rng(424242);
               std::size_t encodes = 0, violations = 0;
               const auto fuzz_one = [&](const MlpModel& encoder, std::uint64_t budget,
                                         std::size_t sensor) {
                   Tensor x(encoder.input_dim(), 1);
                   const double scale =
                       encodes % 3 == 0 ? 1.0 : (encodes % 3 == 1 ? 8.0 : 1000.0);
                   for (double& v : x.values()) v = (rng.uniform01() * 2.0 - 1.0) * scale;
                   const LatentCode code = encode(encoder, x, budget, sensor);
                   ++encodes;
                   if (code.bits.size() != encoder.output_dim()) ++violations;
                   if (code.bits.size() > budget) ++violations;
                   for (std::uint8_t b : code.bits)
                       if (b != 0 && b != 1) ++violations;
               };

               for (std::size_t j = 0; j < 2500; ++j)
                   for (std::size_t s = 0; s < toy.bundle.S; ++s)
                       fuzz_one(toy.bundle.encoders[s], toy.bundle.R, s);
               for (int m = 0; m < 10; ++m) {
                   const std::size_t n = 1 + rng.below(8);
                   const std::size_t d = n + rng.below(20) + 1;
                   const MlpModel encoder = build_encoder(d, n, rng);
                   for (int j = 0; j < 500; ++j) fuzz_one(encoder, 64, 0);
               }
               const bool pass = violations == 0 && encodes == 10000;
               return {pass, std::to_string(encodes) + " fuzzed encodes: " +
                             std::to_string(violations) +
                             " violations of length == n, n <= budget, bits in {0,1}"};
           }));
}

// Criterion 4 — scaled-down accuracy trend on the synthetic correlated set:
// light compression keeps nearly all of the baseline accuracy, heavy
// compression degrades gracefully, and more bits never hurt on average.
TEST(Acceptance, C4ToyPipelineTrend) {
    report(4, guarded([]() -> Outcome {
               const auto start = std::chrono::steady_clock::now();
               RunConfig cfg;
               cfg.sensors = 2;
               cfg.input_dim = 16;
               cfg.code_bits = 8;
               cfg.classes = 4;
               cfg.bit_budget = 64;
               cfg.epochs = {15, 50, 100};
               cfg.batch_size = 64;
               cfg.learning_rate = 0.002;
               cfg.encoder_widths = {16, 12, 8};
               cfg.fusion_widths = {16, 12, 8, 8, 8};
               cfg.dataset.samples = 4000;
               cfg.dataset.noise = 0.1;

               double fused2 = 0.0, fused8 = 0.0, base2 = 0.0, base8 = 0.0;
               for (std::uint64_t seed = 1; seed <= 5; ++seed) {
                   cfg.seed = seed;
                   const std::vector<SweepRow> rows = cr_sweep(cfg, {2.0, 8.0}, false);
                   if (rows.size() != 2 || rows[0].failed || rows[1].failed)
                       return {false, "sweep failed at seed " + std::to_string(seed)};
                   fused2 += rows[0].fused_acc;
                   base2 += rows[0].baseline_acc;
                   fused8 += rows[1].fused_acc;
                   base8 += rows[1].baseline_acc;
               }
               fused2 /= 5.0;
               fused8 /= 5.0;
               base2 /= 5.0;
               base8 /= 5.0;
               const double ratio2 = fused2 / base2;
               const double ratio8 = fused8 / base8;
               const double elapsed = seconds_since(start);
               const bool pass = ratio2 >= 0.92 && ratio8 >= 0.80 && fused2 >= fused8 &&
                                 elapsed < 600.0;
               return {pass, "5-seed trend: cr=2 keeps " + fmt(ratio2) +
                             " of baseline (need >= 0.92), cr=8 keeps " + fmt(ratio8) +
                             " (need >= 0.80), mean fused cr=2 " + fmt(fused2) +
                             " >= cr=8 " + fmt(fused8) + ", in " + fmt(elapsed) +
                             " s (need < 600 s)"};
           }));
}

// Criterion 5 — optional external-dataset check: the two-digit matching
// problem built from idx files, trained at cr=8, plus the closed-form
// mismatch-mass prediction. Skips (as a pass) when the files are absent.
TEST(Acceptance, C5PairedDigitsOptional) {
    report(5, guarded([]() -> Outcome {
               const auto start = std::chrono::steady_clock::now();
               const char* env_dir = std::getenv("GOALCOMP_MNIST_DIR");
               std::vector<fs::path> candidates;
               if (env_dir != nullptr && *env_dir != '\0') candidates.push_back(env_dir);
               candidates.push_back("data/mnist");
               candidates.push_back("data");
               fs::path dir;
               for (const fs::path& c : candidates)
                   if (fs::exists(c / "train-images-idx3-ubyte") &&
                       fs::exists(c / "train-labels-idx1-ubyte")) {
                       dir = c;
                       break;
                   }
               if (dir.empty())
                   return {true, "skipped: no train-images-idx3-ubyte / "
                                 "train-labels-idx1-ubyte under $GOALCOMP_MNIST_DIR, "
                                 "data/mnist, or data"};

               const SampleSet raw = load_idx((dir / "train-images-idx3-ubyte").string(),
                                              (dir / "train-labels-idx1-ubyte").string());
               const SampleSet small = downsample_images(raw, 2);
               Rng pair_rng(derive_seed(1, "pairwise"));
               const SampleSet paired = make_pairwise(small, pair_rng, false);
               require(paired.size() >= 12000, "paired set too small");

               std::vector<std::size_t> head(12000);
               std::iota(head.begin(), head.end(), 0);
               const SampleSet subset =
                   detail::take_rows(paired, head, paired.provenance + "/head");

               // Mismatch-mass prediction: two independent draws agree with
               // probability sum p_c^2, so the mismatch class carries
               // 1 - sum p_c^2 of the pairs.
               std::vector<double> p(small.classes, 0.0);
               for (std::uint32_t label : small.labels) p[label] += 1.0;
               for (double& v : p) v /= static_cast<double>(small.size());
               double agree = 0.0;
               for (double v : p) agree += v * v;
               const double predicted = 1.0 - agree;
               std::size_t mismatches = 0;
               for (std::uint32_t label : subset.labels)
                   if (label == small.classes) ++mismatches;
               const double observed =
                   static_cast<double>(mismatches) / static_cast<double>(subset.size());
               const double sigma = std::sqrt(predicted * (1.0 - predicted) /
                                              static_cast<double>(subset.size()));
               const bool mass_ok = std::abs(observed - predicted) <= 3.0 * sigma;

               std::vector<std::size_t> train_rows(10000), test_rows(2000);
               std::iota(train_rows.begin(), train_rows.end(), 0);
               std::iota(test_rows.begin(), test_rows.end(), 10000);
               const SampleSet train =
                   detail::take_rows(subset, train_rows, subset.provenance + "/train");
               const SampleSet test =
                   detail::take_rows(subset, test_rows, subset.provenance + "/test");

               RunConfig cfg;
               cfg.seed = 1;
               cfg.sensors = 2;
               cfg.input_dim = small.dim;
               cfg.classes = small.classes + 1;
               cfg.code_bits = code_bits_for_cr(small.dim, 8.0);
               cfg.bit_budget = 64;
               cfg.epochs = {10, 20, 30};
               cfg.batch_size = 64;
               cfg.learning_rate = 0.002;

               Rng rng1(derive_seed(cfg.seed, "phase1"));
               Phase1Result p1 = phase1_autoencoders(cfg, train, rng1);
               Rng rng2(derive_seed(cfg.seed, "phase2"));
               Phase2Result p2 = phase2_baseline(cfg, train, rng2);
               Rng rng3(derive_seed(cfg.seed, "phase3"));
               Phase3Result p3 = phase3_joint(cfg, train, std::move(p1.encoders),
                                              std::move(p1.decoders), p2.baseline, rng3);
               const Metrics fused = evaluate(p3.bundle, test, env_threads());
               const Metrics baseline = evaluate_baseline(p3.bundle, test, env_threads());
               const double ratio = fused.accuracy / baseline.accuracy;
               const double elapsed = seconds_since(start);
               const bool pass =
                   mass_ok && ratio >= 0.80 && ratio <= 1.0 && elapsed < 1800.0;
               return {pass, "paired digits at cr=8: fused/baseline = " + fmt(ratio) +
                             " (need 0.80..1.0), mismatch mass " + fmt(observed) +
                             " vs predicted " + fmt(predicted) + " (3 sigma = " +
                             fmt(3.0 * sigma) + "), in " + fmt(elapsed) + " s"};
           }));
}

// Criterion 6 — the bit-flip interpolation walk: length is Hamming distance
// plus one, each step fixes exactly one disagreeing bit, and the walk lands
// on the decoded end code.
TEST(Acceptance, C6InterpolationContract) {
    report(6, guarded([]() -> Outcome {
               const ToyRun& toy = toy_run();
               if (!toy.error.empty()) return {false, "toy pipeline failed: " + toy.error};

               Rng rng(31337);
               const auto random_code = [&](std::size_t n) {
                   LatentCode code;
                   code.bits.resize(n);
                   for (std::uint8_t& b : code.bits)
                       b = static_cast<std::uint8_t>(rng.below(2));
                   return code;
               };

               std::vector<MlpModel> decoders;
               decoders.push_back(toy.bundle.decoders[0]);
               decoders.push_back(toy.bundle.decoders[1]);
               decoders.push_back(build_decoder(8, 20, rng));
               decoders.push_back(build_decoder(12, 30, rng));

               std::size_t pairs = 0, violations = 0;
               for (int trial = 0; trial < 100; ++trial) {
                   const MlpModel& decoder = decoders[trial % decoders.size()];
                   const std::size_t n = decoder.input_dim();
                   const LatentCode a = random_code(n);
                   const LatentCode b = random_code(n);
                   const std::size_t dist = oracle::hamming(a, b);
                   const auto steps = interpolate_latent(decoder, a, b, rng);
                   ++pairs;
                   if (steps.size() != dist + 1) ++violations;
                   for (std::size_t k = 0; k < steps.size(); ++k)
                       if (oracle::hamming(steps[k].code, b) != dist - k) ++violations;
                   if (steps.front().code.bits != a.bits) ++violations;
                   if (steps.back().code.bits != b.bits) ++violations;

                   Tensor col(n, 1);
                   for (std::size_t i = 0; i < n; ++i)
                       col(i, 0) = static_cast<double>(b.bits[i]);
                   const Tensor expect = model_forward(decoder, col);
                   const Tensor& frame = steps.back().frame;
                   if (frame.size() != expect.size()) {
                       ++violations;
                   } else {
                       for (std::size_t i = 0; i < expect.rows(); ++i)
                           if (frame(0, i) != expect(i, 0)) ++violations;
                   }
               }
               const bool pass = violations == 0 && pairs == 100;
               return {pass, std::to_string(pairs) + " random code pairs: " +
                             std::to_string(violations) +
                             " violations of length == hamming + 1, per-step decrement 1, "
                             "final frame == decode(end)"};
           }));
}

// Criterion 7 — a sweep is a pure function of its config: two identical runs
// leave byte-identical artifact trees.
TEST(Acceptance, C7Determinism) {
    report(7, guarded([]() -> Outcome {
               const SweepPair& pair = sweep_pair();
               if (!pair.error.empty()) return {false, "sweep failed: " + pair.error};

               const auto relative_files = [](const fs::path& root) {
                   std::vector<std::string> files;
                   for (const auto& entry : fs::recursive_directory_iterator(root))
                       if (entry.is_regular_file())
                           files.push_back(fs::relative(entry.path(), root).string());
                   std::sort(files.begin(), files.end());
                   return files;
               };
               const std::vector<std::string> files_a = relative_files(pair.dir_a);
               const std::vector<std::string> files_b = relative_files(pair.dir_b);
               if (files_a != files_b)
                   return {false, "artifact trees differ in file lists"};
               if (files_a.empty()) return {false, "no artifacts written"};

               std::size_t mismatched = 0, compared = 0;
               std::string first_diff;
               for (const std::string& rel : files_a) {
                   // The config echo embeds the two distinct output paths by
                   // construction; every model and measurement artifact must
                   // match byte for byte.
                   if (rel == "resolved-config.json") continue;
                   ++compared;
                   const std::string bytes_a = oracle::read_file((pair.dir_a / rel).string());
                   const std::string bytes_b = oracle::read_file((pair.dir_b / rel).string());
                   if (bytes_a != bytes_b) {
                       ++mismatched;
                       if (first_diff.empty()) first_diff = rel;
                   }
               }
               const bool pass = mismatched == 0 && compared >= 8;
               return {pass, "two identical sweeps: " + std::to_string(compared) +
                             " csv/bundle artifacts compared, " + std::to_string(mismatched) +
                             " byte mismatches" +
                             (first_diff.empty() ? "" : " (first: " + first_diff + ")")};
           }));
}

// Criterion 8 — the FLOP estimator matches hand counts on fixed layers and
// decreases strictly as the compression ratio rises across a sweep.
TEST(Acceptance, C8FlopEstimator) {
    report(8, guarded([]() -> Outcome {
               Rng rng(5);
               // One dense layer in->out costs 2*in*out MACs + out bias adds
               // + out activations.
               const MlpModel wide = oracle::make_mlp({196, 98}, Activation::Sigmoid, rng);
               const std::uint64_t wide_flops = flops_estimate(wide);  // 2*196*98 + 98 + 98
               const MlpModel tiny = oracle::make_mlp({4, 3, 2}, Activation::Softmax, rng);
               const std::uint64_t tiny_flops = flops_estimate(tiny);  // 30 + 16
               const MlpModel encoder = build_encoder(16, 8, rng);     // 16->13->11->10->8
               const std::uint64_t encoder_flops = flops_estimate(encoder);

               const SweepPair& pair = sweep_pair();
               if (!pair.error.empty()) return {false, "sweep failed: " + pair.error};
               bool decreasing = pair.rows_a.size() >= 2;
               for (std::size_t i = 0; i + 1 < pair.rows_a.size(); ++i) {
                   if (pair.rows_a[i].failed || pair.rows_a[i + 1].failed ||
                       pair.rows_a[i].flops <= pair.rows_a[i + 1].flops)
                       decreasing = false;
               }

               const bool pass = wide_flops == 38612 && tiny_flops == 46 &&
                                 encoder_flops == 1166 && decreasing;
               return {pass, "hand counts: 196->98 layer = " + std::to_string(wide_flops) +
                             " (want 38612), 4->3->2 = " + std::to_string(tiny_flops) +
                             " (want 46), encoder 16->8 = " + std::to_string(encoder_flops) +
                             " (want 1166); sweep flops strictly decrease with cr: " +
                             (decreasing ? "yes" : "no")};
           }));
}

// Criterion 9 — the teacher is untouchable: baseline parameters are
// bit-identical before and after joint training.
TEST(Acceptance, C9FreezeContract) {
    report(9, guarded([]() -> Outcome {
               const ToyRun& toy = toy_run();
               if (!toy.error.empty()) return {false, "toy pipeline failed: " + toy.error};
               const bool same_shape =
                   !toy.teacher_before.empty() &&
                   toy.teacher_before.size() == toy.teacher_after.size();
               std::size_t changed = 0;
               if (same_shape) {
                   for (std::size_t i = 0; i < toy.teacher_before.size(); ++i)
                       if (std::memcmp(&toy.teacher_before[i], &toy.teacher_after[i],
                                       sizeof(double)) != 0)
                           ++changed;
               }
               const bool pass = same_shape && changed == 0 && toy.bundle.baseline.frozen;
               return {pass, "baseline teacher across joint training: " +
                             std::to_string(toy.teacher_before.size()) + " parameters, " +
                             std::to_string(changed) +
                             " bytes changed, frozen flag " +
                             (toy.bundle.baseline.frozen ? "set" : "missing")};
           }));
}
