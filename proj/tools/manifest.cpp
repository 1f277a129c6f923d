#include "manifest.h"

#include <ctime>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "smartcrop/version.h"

namespace smartcrop::cli {

namespace {

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string manifest_json(const RunManifest& manifest) {
    nlohmann::json j;
    j["tool"] = "smartcrop";
    j["version"] = SMARTCROP_VERSION;
    j["command"] = manifest.command;
    j["created_utc"] = utc_now();
    j["config"] = manifest.config;
    j["seeds"] = manifest.seeds;
    j["artifacts"] = manifest.artifacts;
    return j.dump(2) + "\n";
}

void write_manifest(const std::string& out_dir, const RunManifest& manifest) {
    const std::string path = out_dir + "/manifest.json";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << manifest_json(manifest);
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open manifest: " + path);
    nlohmann::json j;
    in >> j;
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    for (const auto& [key, value] : j.at("config").items()) {
        m.config[key] = value.get<std::string>();
    }
    if (j.contains("seeds")) {
        for (const auto& [key, value] : j.at("seeds").items()) {
            m.seeds[key] = value.get<std::uint64_t>();
        }
    }
    if (j.contains("artifacts")) {
        for (const auto& a : j.at("artifacts")) m.artifacts.push_back(a.get<std::string>());
    }
    return m;
}

}  // namespace smartcrop::cli
