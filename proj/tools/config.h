#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace smartcrop::cli {

// Flat declarative run configuration: one `key = value` per line, `#`
// starts a comment, blank lines ignored. Keys a subcommand does not
// document are rejected so typos fail loudly instead of silently
// falling back to defaults. Environment variables override nothing.
class Config {
public:
    static Config parse(std::istream& is);
    static Config load_file(const std::string& path);  // throws with path on failure

    void restrict_keys(const std::set<std::string>& known) const;

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    double get_double(const std::string& key, double fallback);
    bool get_bool(const std::string& key, bool fallback);
    std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback);
    std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                            std::vector<std::uint64_t> fallback);

    // Every key consumed so far with its resolved value, including
    // defaults that were filled in. This is what the manifest snapshots.
    const std::map<std::string, std::string>& resolved() const { return resolved_; }

private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, std::string> resolved_;
};

}  // namespace smartcrop::cli
