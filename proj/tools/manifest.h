#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace smartcrop::cli {

// Every output directory gets a manifest.json describing exactly how
// its artifacts were produced: the resolved configuration (defaults
// included), the named seeds, the artifact list, and the tool version.
// Apart from the creation timestamp, reruns write identical bytes.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::map<std::string, std::uint64_t> seeds;
    std::vector<std::string> artifacts;
};

std::string manifest_json(const RunManifest& manifest);
void write_manifest(const std::string& out_dir, const RunManifest& manifest);

// Reads back the resolved config of a previous run (used by `report`
// to recover the task and instance seeds of an eval directory).
RunManifest read_manifest(const std::string& path);

}  // namespace smartcrop::cli
