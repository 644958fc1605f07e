#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "goalcomp/bundle.hpp"
#include "goalcomp/data.hpp"

namespace goalcomp {

inline constexpr std::uint16_t kBundleFormatVersion = 1;
inline constexpr std::uint16_t kDatasetFormatVersion = 1;

namespace detail {

struct ByteWriter {
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void magic(const char (&tag)[5]) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(tag[i]));
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
};

struct ByteReader {
    const std::vector<std::uint8_t>& bytes;
    std::string path;
    std::size_t cursor = 0;

    void need(std::size_t count, const char* what) {
        if (cursor + count > bytes.size())
            throw ParseError(path + ": truncated at byte offset " + std::to_string(cursor) +
                             " (need " + std::to_string(count) + " bytes for " + what + ")");
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes[cursor++];
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(bytes[cursor++]) << (8 * i);
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[cursor++]) << (8 * i);
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[cursor++]) << (8 * i);
        return v;
    }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
    void expect_magic(const char (&tag)[5]) {
        need(4, "magic");
        for (int i = 0; i < 4; ++i) {
            if (bytes[cursor + i] != static_cast<std::uint8_t>(tag[i]))
                throw ParseError(path + ": bad magic at byte offset 0 (want \"" +
                                 std::string(tag) + "\")");
        }
        cursor += 4;
    }
    std::string str(const char* what) {
        const std::uint32_t len = u32(what);
        need(len, what);
        std::string s(bytes.begin() + static_cast<std::ptrdiff_t>(cursor),
                      bytes.begin() + static_cast<std::ptrdiff_t>(cursor + len));
        cursor += len;
        return s;
    }
};

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw std::runtime_error(path + ": write failed");
}

inline void write_model(ByteWriter& w, const MlpModel& model) {
    w.u8(static_cast<std::uint8_t>(model.role));
    w.u32(static_cast<std::uint32_t>(model.layers.size()));
    for (const DenseLayer& layer : model.layers) {
        w.u32(static_cast<std::uint32_t>(layer.fan_in()));
        w.u32(static_cast<std::uint32_t>(layer.fan_out()));
        w.u8(static_cast<std::uint8_t>(layer.activation));
        for (double v : layer.weights.values()) w.f64(v);
        for (double v : layer.bias.values()) w.f64(v);
    }
}

inline MlpModel read_model(ByteReader& r, Role expected_role) {
    MlpModel model;
    const std::uint8_t role = r.u8("model role");
    if (role > static_cast<std::uint8_t>(Role::Fusion))
        throw ParseError(r.path + ": unknown model role " + std::to_string(int(role)) +
                         " at byte offset " + std::to_string(r.cursor - 1));
    model.role = static_cast<Role>(role);
    if (model.role != expected_role)
        throw ParseError(r.path + ": expected " + role_name(expected_role) + " model, found " +
                         role_name(model.role) + " at byte offset " +
                         std::to_string(r.cursor - 1));
    const std::uint32_t layer_count = r.u32("layer count");
    model.layers.reserve(layer_count);
    for (std::uint32_t k = 0; k < layer_count; ++k) {
        const std::uint32_t in = r.u32("layer fan-in");
        const std::uint32_t out = r.u32("layer fan-out");
        const std::uint8_t act = r.u8("layer activation");
        if (act > static_cast<std::uint8_t>(Activation::Softmax))
            throw ParseError(r.path + ": unknown activation " + std::to_string(int(act)) +
                             " at byte offset " + std::to_string(r.cursor - 1));
        if (in == 0 || out == 0)
            throw ParseError(r.path + ": zero layer dimension at byte offset " +
                             std::to_string(r.cursor - 9));
        DenseLayer layer;
        layer.activation = static_cast<Activation>(act);
        layer.weights = Tensor(out, in);
        for (double& v : layer.weights.values()) v = r.f64("weights");
        layer.bias = Tensor(out, 1);
        for (double& v : layer.bias.values()) v = r.f64("bias");
        model.layers.push_back(std::move(layer));
    }
    return model;
}

}  // namespace detail

// Serializes a bundle to the versioned little-endian container: "GCMP",
// format version, dims header (S, d, n, C, R), then the member models in
// encoder/decoder/baseline/fusion order.
inline void save_bundle(const SensorBundle& bundle, const std::string& path) {
    validate_bundle(bundle);
    detail::ByteWriter w;
    w.magic("GCMP");
    w.u16(kBundleFormatVersion);
    w.u32(bundle.S);
    w.u32(bundle.d);
    w.u32(bundle.n);
    w.u32(bundle.C);
    w.u32(bundle.R);
    for (const MlpModel& m : bundle.encoders) detail::write_model(w, m);
    for (const MlpModel& m : bundle.decoders) detail::write_model(w, m);
    detail::write_model(w, bundle.baseline);
    detail::write_model(w, bundle.fusion);
    detail::write_file_bytes(path, w.bytes);
}

// Loads a bundle saved by save_bundle. Persisted bundles are post-training
// artifacts, so the baseline teacher and the decoders come back frozen.
inline SensorBundle load_bundle(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    detail::ByteReader r{bytes, path};
    r.expect_magic("GCMP");
    const std::uint16_t version = r.u16("format version");
    if (version != kBundleFormatVersion)
        throw UnsupportedVersionError(path + ": bundle format version " +
                                      std::to_string(version) + " not supported (have " +
                                      std::to_string(kBundleFormatVersion) + ")");
    SensorBundle bundle;
    bundle.S = r.u32("S");
    bundle.d = r.u32("d");
    bundle.n = r.u32("n");
    bundle.C = r.u32("C");
    bundle.R = r.u32("R");
    for (std::uint32_t i = 0; i < bundle.S; ++i)
        bundle.encoders.push_back(detail::read_model(r, Role::Encoder));
    for (std::uint32_t i = 0; i < bundle.S; ++i) {
        bundle.decoders.push_back(detail::read_model(r, Role::Decoder));
        bundle.decoders.back().frozen = true;
    }
    bundle.baseline = detail::read_model(r, Role::Baseline);
    bundle.baseline.frozen = true;
    bundle.fusion = detail::read_model(r, Role::Fusion);
    if (r.cursor != bytes.size())
        throw ParseError(path + ": trailing bytes at offset " + std::to_string(r.cursor));
    validate_bundle(bundle);
    return bundle;
}

// Dataset cache sharing the bundle container conventions under a "DSET"
// magic: dims header, image shape, provenance, per-sensor row-major
// observations, then labels.
inline void save_sampleset(const SampleSet& set, const std::string& path) {
    validate_sampleset(set);
    detail::ByteWriter w;
    w.magic("DSET");
    w.u16(kDatasetFormatVersion);
    w.u32(static_cast<std::uint32_t>(set.sensors));
    w.u32(static_cast<std::uint32_t>(set.dim));
    w.u32(static_cast<std::uint32_t>(set.classes));
    w.u32(static_cast<std::uint32_t>(set.size()));
    w.u32(static_cast<std::uint32_t>(set.image_rows));
    w.u32(static_cast<std::uint32_t>(set.image_cols));
    w.str(set.provenance);
    for (const Tensor& obs : set.observations)
        for (double v : obs.values()) w.f64(v);
    for (std::uint32_t label : set.labels) w.u32(label);
    detail::write_file_bytes(path, w.bytes);
}

inline SampleSet load_sampleset(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    detail::ByteReader r{bytes, path};
    r.expect_magic("DSET");
    const std::uint16_t version = r.u16("format version");
    if (version != kDatasetFormatVersion)
        throw UnsupportedVersionError(path + ": dataset format version " +
                                      std::to_string(version) + " not supported");
    SampleSet set;
    set.sensors = r.u32("S");
    set.dim = r.u32("d");
    set.classes = r.u32("C");
    const std::uint32_t N = r.u32("N");
    set.image_rows = r.u32("image rows");
    set.image_cols = r.u32("image cols");
    set.provenance = r.str("provenance");
    for (std::size_t i = 0; i < set.sensors; ++i) {
        Tensor obs(N, set.dim);
        for (double& v : obs.values()) v = r.f64("observations");
        set.observations.push_back(std::move(obs));
    }
    set.labels.resize(N);
    for (std::uint32_t& label : set.labels) label = r.u32("labels");
    if (r.cursor != bytes.size())
        throw ParseError(path + ": trailing bytes at offset " + std::to_string(r.cursor));
    validate_sampleset(set);
    return set;
}

}  // namespace goalcomp
