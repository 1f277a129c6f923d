#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "smartcrop/model.h"
#include "smartcrop/weights_io.h"

using namespace smartcrop;

namespace {

ModelConfig micro_config() {
    ModelConfig cfg;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_model = 8;
    cfg.d_ff = 16;
    cfg.vocab_size = 12;
    cfg.max_positions = 16;
    return cfg;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<char> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

void write_all(const std::string& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("save and load round-trip reproduces logits bit for bit") {
    const std::string path = temp_path("smartcrop_roundtrip.bin");
    DiffusionModel model(micro_config(), 314);
    save_weights(model, path);
    DiffusionModel loaded = load_weights(path);

    CHECK(loaded.config().n_layers == 1);
    CHECK(loaded.config().vocab_size == 12);
    CHECK(loaded.params().scalar_count() == model.params().scalar_count());

    const std::vector<int> tokens = {0, 5, 11, 3, 3};
    Matrix a = model.forward(tokens);
    Matrix b = loaded.forward(tokens);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data[i] == b.data[i]);
    std::remove(path.c_str());
}

TEST_CASE("saving twice produces identical bytes") {
    const std::string p1 = temp_path("smartcrop_bytes1.bin");
    const std::string p2 = temp_path("smartcrop_bytes2.bin");
    DiffusionModel model(micro_config(), 11);
    save_weights(model, p1);
    save_weights(model, p2);
    CHECK(read_all(p1) == read_all(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("bad magic is rejected") {
    const std::string path = temp_path("smartcrop_badmagic.bin");
    DiffusionModel model(micro_config(), 1);
    save_weights(model, path);
    auto bytes = read_all(path);
    bytes[0] = 'X';
    write_all(path, bytes);
    CHECK_THROWS_AS(load_weights(path), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("unknown format version is rejected") {
    const std::string path = temp_path("smartcrop_badver.bin");
    DiffusionModel model(micro_config(), 1);
    save_weights(model, path);
    auto bytes = read_all(path);
    bytes[4] = 99;  // version field follows the 4-byte magic
    write_all(path, bytes);
    CHECK_THROWS_AS(load_weights(path), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("truncated files are rejected") {
    const std::string path = temp_path("smartcrop_trunc.bin");
    DiffusionModel model(micro_config(), 1);
    save_weights(model, path);
    auto bytes = read_all(path);
    bytes.resize(bytes.size() / 2);
    write_all(path, bytes);
    CHECK_THROWS_AS(load_weights(path), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("trailing garbage is rejected") {
    const std::string path = temp_path("smartcrop_trail.bin");
    DiffusionModel model(micro_config(), 1);
    save_weights(model, path);
    auto bytes = read_all(path);
    bytes.push_back('z');
    write_all(path, bytes);
    CHECK_THROWS_AS(load_weights(path), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("missing file is rejected") {
    CHECK_THROWS_AS(load_weights(temp_path("smartcrop_nonexistent.bin")), std::runtime_error);
}
