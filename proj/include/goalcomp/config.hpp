#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "goalcomp/errors.hpp"

namespace goalcomp {

struct EpochSchedule {
    std::size_t autoencoder = 50;
    std::size_t baseline = 50;
    std::size_t joint = 100;
};

// Where the samples come from. `kind` selects the branch:
//   synthetic — generated correlated multi-sensor set (samples, noise)
//   idx       — IDX image/label pair (images, labels), optionally paired
//               into the two-sensor matching problem
//   dset      — a previously cached dataset container (path)
struct DatasetSpec {
    std::string kind = "synthetic";
    std::string images;
    std::string labels;
    std::string path;
    bool pairwise = false;
    bool balance = false;
    std::size_t downsample = 1;
    std::size_t samples = 4000;
    double noise = 0.1;
    double train_fraction = 0.8;
    double test_fraction = 0.2;
};

// One run's full recipe. code_bits is the per-sensor code length n; if a
// positive `cr` is given it wins and code_bits is derived as ceil(d/cr).
struct RunConfig {
    std::uint64_t seed = 1;
    std::size_t sensors = 2;
    std::size_t input_dim = 16;
    std::size_t code_bits = 8;
    std::size_t classes = 4;
    std::size_t bit_budget = 64;
    double cr = 0.0;
    EpochSchedule epochs;
    std::size_t batch_size = 64;
    double learning_rate = 0.01;
    std::vector<double> cr_list{2.0, 4.0, 8.0};
    std::vector<std::size_t> encoder_widths;
    std::vector<std::size_t> fusion_widths;
    std::vector<std::size_t> baseline_widths;
    DatasetSpec dataset;
    std::string out_dir = "runs/out";
};

inline std::size_t code_bits_for_cr(std::size_t d, double cr) {
    require(cr >= 1.0, "cr must be at least 1");
    const auto n = static_cast<std::size_t>(
        std::ceil(static_cast<double>(d) / cr - 1e-9));
    return n == 0 ? 1 : n;
}

namespace detail {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config key '") + key + "': " + e.what());
    }
}

// A misspelled key should fail loudly rather than silently fall back to the
// default it was meant to replace.
inline void reject_unknown(const nlohmann::json& j, const char* scope,
                           std::initializer_list<const char*> known) {
    require(j.is_object(), std::string("config section '") + scope + "' must be an object");
    for (const auto& item : j.items()) {
        bool found = false;
        for (const char* key : known)
            if (item.key() == key) {
                found = true;
                break;
            }
        require(found, std::string("unknown config key '") + scope + item.key() + "'");
    }
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    detail::reject_unknown(j, "",
                           {"seed", "sensors", "input_dim", "code_bits", "classes",
                            "bit_budget", "cr", "epochs", "batch_size", "learning_rate",
                            "cr_list", "widths", "dataset", "out_dir"});
    detail::read_field(j, "seed", cfg.seed);
    detail::read_field(j, "sensors", cfg.sensors);
    detail::read_field(j, "input_dim", cfg.input_dim);
    detail::read_field(j, "code_bits", cfg.code_bits);
    detail::read_field(j, "classes", cfg.classes);
    detail::read_field(j, "bit_budget", cfg.bit_budget);
    detail::read_field(j, "cr", cfg.cr);
    if (j.contains("epochs")) {
        const auto& e = j.at("epochs");
        detail::reject_unknown(e, "epochs.", {"autoencoder", "baseline", "joint"});
        detail::read_field(e, "autoencoder", cfg.epochs.autoencoder);
        detail::read_field(e, "baseline", cfg.epochs.baseline);
        detail::read_field(e, "joint", cfg.epochs.joint);
    }
    detail::read_field(j, "batch_size", cfg.batch_size);
    detail::read_field(j, "learning_rate", cfg.learning_rate);
    detail::read_field(j, "cr_list", cfg.cr_list);
    if (j.contains("widths")) {
        const auto& w = j.at("widths");
        detail::reject_unknown(w, "widths.", {"encoder", "fusion", "baseline"});
        detail::read_field(w, "encoder", cfg.encoder_widths);
        detail::read_field(w, "fusion", cfg.fusion_widths);
        detail::read_field(w, "baseline", cfg.baseline_widths);
    }
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        detail::reject_unknown(d, "dataset.",
                               {"kind", "images", "labels", "path", "pairwise", "balance",
                                "downsample", "samples", "noise", "train_fraction",
                                "test_fraction"});
        detail::read_field(d, "kind", cfg.dataset.kind);
        detail::read_field(d, "images", cfg.dataset.images);
        detail::read_field(d, "labels", cfg.dataset.labels);
        detail::read_field(d, "path", cfg.dataset.path);
        detail::read_field(d, "pairwise", cfg.dataset.pairwise);
        detail::read_field(d, "balance", cfg.dataset.balance);
        detail::read_field(d, "downsample", cfg.dataset.downsample);
        detail::read_field(d, "samples", cfg.dataset.samples);
        detail::read_field(d, "noise", cfg.dataset.noise);
        detail::read_field(d, "train_fraction", cfg.dataset.train_fraction);
        detail::read_field(d, "test_fraction", cfg.dataset.test_fraction);
    }
    detail::read_field(j, "out_dir", cfg.out_dir);
    if (cfg.cr > 0.0) cfg.code_bits = code_bits_for_cr(cfg.input_dim, cfg.cr);
    return cfg;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["sensors"] = cfg.sensors;
    j["input_dim"] = cfg.input_dim;
    j["code_bits"] = cfg.code_bits;
    j["classes"] = cfg.classes;
    j["bit_budget"] = cfg.bit_budget;
    if (cfg.cr > 0.0) j["cr"] = cfg.cr;
    j["epochs"] = {{"autoencoder", cfg.epochs.autoencoder},
                   {"baseline", cfg.epochs.baseline},
                   {"joint", cfg.epochs.joint}};
    j["batch_size"] = cfg.batch_size;
    j["learning_rate"] = cfg.learning_rate;
    j["cr_list"] = cfg.cr_list;
    j["widths"] = {{"encoder", cfg.encoder_widths},
                   {"fusion", cfg.fusion_widths},
                   {"baseline", cfg.baseline_widths}};
    j["dataset"] = {{"kind", cfg.dataset.kind},
                    {"images", cfg.dataset.images},
                    {"labels", cfg.dataset.labels},
                    {"path", cfg.dataset.path},
                    {"pairwise", cfg.dataset.pairwise},
                    {"balance", cfg.dataset.balance},
                    {"downsample", cfg.dataset.downsample},
                    {"samples", cfg.dataset.samples},
                    {"noise", cfg.dataset.noise},
                    {"train_fraction", cfg.dataset.train_fraction},
                    {"test_fraction", cfg.dataset.test_fraction}};
    j["out_dir"] = cfg.out_dir;
    return j;
}

// Applies a dotted-path override such as "epochs.joint=200" or
// "cr_list=[2,4,8]". The value is parsed as JSON when it scans, else kept
// as a string.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    require(eq != std::string::npos && eq > 0,
            "override '" + assignment + "' is not KEY=VALUE");
    const std::string dotted = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    nlohmann::json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot - start);
        require(!key.empty(), "override '" + assignment + "' has an empty path segment");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

// Parses the config file (empty path = all defaults), applies overrides in
// order, then materializes the RunConfig.
inline RunConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
    nlohmann::json j = nlohmann::json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument(path + ": cannot open config");
        try {
            // Comment-tolerant so configs can be annotated in place.
            j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/true,
                                      /*ignore_comments=*/true);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(path + ": " + e.what());
        }
        require(j.is_object(), path + ": config root must be a JSON object");
    }
    for (const std::string& assignment : overrides) apply_override(j, assignment);
    return config_from_json(j);
}

// Structural validation shared by every subcommand; throws invalid-argument
// naming the offending key.
inline void validate_config(const RunConfig& cfg) {
    require(cfg.sensors >= 1, "sensors: must be at least 1");
    require(cfg.input_dim >= 1, "input_dim: must be at least 1");
    require(cfg.classes >= 2, "classes: must be at least 2");
    require(cfg.code_bits >= 1, "code_bits: must be at least 1");
    require(cfg.code_bits <= cfg.input_dim,
            "code_bits: code length " + std::to_string(cfg.code_bits) +
                " exceeds input_dim " + std::to_string(cfg.input_dim));
    require(cfg.code_bits <= cfg.bit_budget,
            "code_bits: code length " + std::to_string(cfg.code_bits) +
                " exceeds the bit budget R=" + std::to_string(cfg.bit_budget) +
                " (need code_bits <= bit_budget)");
    require(cfg.batch_size >= 1, "batch_size: must be at least 1");
    require(cfg.epochs.autoencoder >= 1 && cfg.epochs.baseline >= 1 && cfg.epochs.joint >= 1,
            "epochs: every phase needs at least 1 epoch");
    require(cfg.learning_rate > 0.0, "learning_rate: must be positive");
    require(!cfg.cr_list.empty(), "cr_list: must not be empty");
    for (double cr : cfg.cr_list) {
        require(cr >= 1.0, "cr_list: compression ratios must be at least 1");
        const std::size_t n = code_bits_for_cr(cfg.input_dim, cr);
        require(n <= cfg.bit_budget,
                "cr_list: cr=" + std::to_string(cr) + " needs " + std::to_string(n) +
                    " bits, exceeding the bit budget R=" + std::to_string(cfg.bit_budget));
    }
    const DatasetSpec& ds = cfg.dataset;
    require(ds.kind == "synthetic" || ds.kind == "idx" || ds.kind == "dset",
            "dataset.kind: must be one of synthetic|idx|dset");
    if (ds.kind == "idx")
        require(!ds.images.empty() && !ds.labels.empty(),
                "dataset.images/labels: required for kind=idx");
    if (ds.kind == "dset")
        require(!ds.path.empty(), "dataset.path: required for kind=dset");
    require(ds.downsample >= 1, "dataset.downsample: must be at least 1");
    require(ds.samples >= 1, "dataset.samples: must be at least 1");
    require(ds.noise >= 0.0, "dataset.noise: must be non-negative");
    require(ds.train_fraction > 0.0 && ds.test_fraction > 0.0,
            "dataset.train_fraction/test_fraction: must be positive");
    require(ds.train_fraction + ds.test_fraction <= 1.0 + 1e-12,
            "dataset fractions: train_fraction + test_fraction exceeds 1");
    require(!cfg.out_dir.empty(), "out_dir: must not be empty");
}

}  // namespace goalcomp
