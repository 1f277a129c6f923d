#include "smartcrop/weights_io.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace smartcrop {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'W', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_i32(std::ostream& os, std::int32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void read_bytes(std::istream& is, void* dst, std::size_t n, const char* what) {
    is.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (is.gcount() != static_cast<std::streamsize>(n)) {
        throw std::runtime_error(std::string("load_weights: truncated file while reading ") + what);
    }
}

std::uint32_t read_u32(std::istream& is, const char* what) {
    std::uint32_t v = 0;
    read_bytes(is, &v, sizeof(v), what);
    return v;
}

std::uint64_t read_u64(std::istream& is, const char* what) {
    std::uint64_t v = 0;
    read_bytes(is, &v, sizeof(v), what);
    return v;
}

double read_f64(std::istream& is, const char* what) {
    double v = 0.0;
    read_bytes(is, &v, sizeof(v), what);
    return v;
}

std::int32_t read_i32(std::istream& is, const char* what) {
    std::int32_t v = 0;
    read_bytes(is, &v, sizeof(v), what);
    return v;
}

}  // namespace

void save_weights(const DiffusionModel& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_weights: cannot open " + path);

    os.write(kMagic, sizeof(kMagic));
    write_u32(os, kVersion);
    const ModelConfig& cfg = model.config();
    write_i32(os, cfg.n_layers);
    write_i32(os, cfg.n_heads);
    write_i32(os, cfg.d_model);
    write_i32(os, cfg.d_ff);
    write_i32(os, cfg.vocab_size);
    write_i32(os, cfg.max_positions);
    write_f64(os, cfg.init_std);
    write_f64(os, cfg.layernorm_eps);

    const ParamStore& store = model.params();
    write_u64(os, store.count());
    for (const ParamStore::Entry& entry : store.entries()) {
        write_u32(os, static_cast<std::uint32_t>(entry.name.size()));
        os.write(entry.name.data(), static_cast<std::streamsize>(entry.name.size()));
        write_u64(os, entry.value.rows);
        write_u64(os, entry.value.cols);
        os.write(reinterpret_cast<const char*>(entry.value.data.data()),
                 static_cast<std::streamsize>(entry.value.data.size() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("save_weights: write failed for " + path);
}

DiffusionModel load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_weights: cannot open " + path);

    char magic[4] = {};
    read_bytes(is, magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("load_weights: bad magic in " + path);
    }
    const std::uint32_t version = read_u32(is, "version");
    if (version != kVersion) {
        throw std::runtime_error("load_weights: unsupported format version " +
                                 std::to_string(version));
    }

    ModelConfig cfg;
    cfg.n_layers = read_i32(is, "n_layers");
    cfg.n_heads = read_i32(is, "n_heads");
    cfg.d_model = read_i32(is, "d_model");
    cfg.d_ff = read_i32(is, "d_ff");
    cfg.vocab_size = read_i32(is, "vocab_size");
    cfg.max_positions = read_i32(is, "max_positions");
    cfg.init_std = read_f64(is, "init_std");
    cfg.layernorm_eps = read_f64(is, "layernorm_eps");

    DiffusionModel model(cfg, 0);
    ParamStore& store = model.params();
    const std::uint64_t n_entries = read_u64(is, "entry count");
    if (n_entries != store.count()) {
        throw std::runtime_error("load_weights: parameter count does not match config");
    }
    for (std::size_t idx = 0; idx < store.count(); ++idx) {
        const std::uint32_t name_len = read_u32(is, "name length");
        std::string name(name_len, '\0');
        read_bytes(is, name.data(), name_len, "name");
        ParamStore::Entry& entry = store.entry(idx);
        if (name != entry.name) {
            throw std::runtime_error("load_weights: unexpected tensor " + name + ", wanted " +
                                     entry.name);
        }
        const std::uint64_t rows = read_u64(is, "rows");
        const std::uint64_t cols = read_u64(is, "cols");
        if (rows != entry.value.rows || cols != entry.value.cols) {
            throw std::runtime_error("load_weights: shape mismatch for " + name);
        }
        read_bytes(is, entry.value.data.data(), entry.value.data.size() * sizeof(double),
                   name.c_str());
    }
    is.peek();
    if (!is.eof()) throw std::runtime_error("load_weights: trailing bytes in " + path);
    return model;
}

}  // namespace smartcrop
