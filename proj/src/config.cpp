#include "mlmc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mlmc {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    return std::all_of(key.begin(), key.end(), [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '.'; });
}

double parse_real(const std::string& text, const std::string& where) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(where + ": expected a number, got '" + text + "'");
    return v;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(number);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!valid_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
        if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
        if (cfg.values_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        cfg.values_[key] = value;
        cfg.lines_[key] = number;
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

bool ConfigFile::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& ConfigFile::raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(origin_ + ": missing key '" + key + "'");
    used_.insert(key);
    return it->second;
}

std::string ConfigFile::get_string(const std::string& key) const { return raw(key); }

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
}

double ConfigFile::get_double(const std::string& key) const { return parse_real(raw(key), origin_ + ": " + key); }

double ConfigFile::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long long ConfigFile::get_int(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const std::string& text = raw(key);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError(origin_ + ": " + key + ": expected an integer, got '" + text + "'");
    }
    return v;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& text = raw(key);
    if (text == "true" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "no" || text == "0") return false;
    throw ConfigError(origin_ + ": " + key + ": expected true or false, got '" + text + "'");
}

std::vector<double> ConfigFile::get_double_list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(raw(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(trim(item), origin_ + ": " + key));
    if (out.empty()) throw ConfigError(origin_ + ": " + key + ": empty list");
    return out;
}

std::map<std::string, double> ConfigFile::numeric_section(const std::string& prefix) const {
    std::map<std::string, double> out;
    const std::string head = prefix + ".";
    for (const auto& [key, value] : values_) {
        if (key.rfind(head, 0) == 0) out[key.substr(head.size())] = get_double(key);
    }
    return out;
}

void ConfigFile::reject_unused() const {
    for (const auto& [key, value] : values_) {
        (void)value;
        if (!used_.count(key)) {
            throw ConfigError(origin_ + ":" + std::to_string(lines_.at(key)) + ": unknown key '" + key + "'");
        }
    }
}

void ConfigFile::set(const std::string& key, const std::string& value) {
    values_[key] = value;
    if (!lines_.count(key)) lines_[key] = 0;
}

}  // namespace mlmc
