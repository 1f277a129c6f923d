#include "config.h"

#include <fstream>

namespace smartcrop::cli {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

Config Config::parse(std::istream& is) {
    Config cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value, got '" + stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        }
        if (!cfg.values_.emplace(key, value).second) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": duplicate key '" + key + "'");
        }
    }
    return cfg;
}

Config Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    return parse(in);
}

void Config::restrict_keys(const std::set<std::string>& known) const {
    for (const auto& [key, value] : values_) {
        if (known.count(key) == 0) {
            std::string msg = "unknown config key '" + key + "'; known keys:";
            for (const auto& k : known) msg += " " + k;
            throw std::invalid_argument(msg);
        }
    }
}

std::string Config::get_string(const std::string& key, const std::string& fallback) {
    const auto it = values_.find(key);
    const std::string value = it == values_.end() ? fallback : it->second;
    resolved_[key] = value;
    return value;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        resolved_[key] = std::to_string(fallback);
        return fallback;
    }
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing characters");
        resolved_[key] = it->second;
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected unsigned integer, got '" +
                                    it->second + "'");
    }
}

double Config::get_double(const std::string& key, double fallback) {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        std::ostringstream os;
        os << fallback;
        resolved_[key] = os.str();
        return fallback;
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing characters");
        resolved_[key] = it->second;
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected number, got '" +
                                    it->second + "'");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        resolved_[key] = fallback ? "true" : "false";
        return fallback;
    }
    if (it->second == "true" || it->second == "1") {
        resolved_[key] = "true";
        return true;
    }
    if (it->second == "false" || it->second == "0") {
        resolved_[key] = "false";
        return false;
    }
    throw std::invalid_argument("config key '" + key + "': expected true/false, got '" +
                                it->second + "'");
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            std::vector<double> fallback) {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        std::ostringstream os;
        for (std::size_t i = 0; i < fallback.size(); ++i) os << (i ? "," : "") << fallback[i];
        resolved_[key] = os.str();
        return fallback;
    }
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const std::string t = item;
            out.push_back(std::stod(t, &used));
            if (t.find_first_not_of(" \t", used) != std::string::npos) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "': bad list element '" + item +
                                        "'");
        }
    }
    if (out.empty()) {
        throw std::invalid_argument("config key '" + key + "': empty list");
    }
    resolved_[key] = it->second;
    return out;
}

std::vector<std::uint64_t> Config::get_u64_list(const std::string& key,
                                                std::vector<std::uint64_t> fallback) {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        std::ostringstream os;
        for (std::size_t i = 0; i < fallback.size(); ++i) os << (i ? "," : "") << fallback[i];
        resolved_[key] = os.str();
        return fallback;
    }
    std::vector<std::uint64_t> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoull(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "': bad list element '" + item +
                                        "'");
        }
    }
    if (out.empty()) {
        throw std::invalid_argument("config key '" + key + "': empty list");
    }
    resolved_[key] = it->second;
    return out;
}

}  // namespace smartcrop::cli
