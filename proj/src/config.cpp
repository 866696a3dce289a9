#include <charconv>
#include <fstream>

#include "tmsensor/sensor.hpp"

namespace tmsensor {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw Error(Errc::ConfigInvalid, key + ": expected a non-negative integer, got '" + value + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw Error(Errc::ConfigInvalid, key + ": expected true or false, got '" + value + "'");
}

}  // namespace

SensorConfig parse_config(std::istream& in) {
    SensorConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::ConfigInvalid, "line " + std::to_string(lineno) + ": missing '='");
        }
        const std::string key = trim(std::string_view(stripped).substr(0, eq));
        const std::string value = trim(std::string_view(stripped).substr(eq + 1));

        if (key == "key_path") {
            c.key_path = value;
        } else if (key == "window_size") {
            const auto w = parse_count(key, value);
            if (!is_configurable_window(w)) {
                throw Error(Errc::ConfigInvalid, "window_size must be a power of two in [1024, 16777216]");
            }
            c.window_size = static_cast<std::uint32_t>(w);
        } else if (key == "input_dir") {
            c.input_dir = value;
        } else if (key == "output_dir") {
            c.output_dir = value;
        } else if (key == "quiescence_secs") {
            c.quiescence_secs = parse_count(key, value);
        } else if (key == "poll_interval_secs") {
            c.poll_interval_secs = parse_count(key, value);
        } else if (key == "delete_after_convert") {
            c.delete_after_convert = parse_bool(key, value);
        } else if (key == "max_concurrent_conversions") {
            c.max_concurrent_conversions = static_cast<unsigned>(parse_count(key, value));
        } else if (key == "prefix") {
            c.prefix = value;
        } else {
            throw Error(Errc::ConfigInvalid, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    validate(c);
    return c;
}

SensorConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ConfigInvalid, "cannot open config " + path.string());
    return parse_config(in);
}

void validate(const SensorConfig& c) {
    if (c.key_path.empty()) throw Error(Errc::ConfigInvalid, "key_path is required");
    if (c.input_dir.empty()) throw Error(Errc::ConfigInvalid, "input_dir is required");
    if (c.output_dir.empty()) throw Error(Errc::ConfigInvalid, "output_dir is required");
    if (!is_configurable_window(c.window_size)) {
        throw Error(Errc::ConfigInvalid, "window_size must be a power of two in [1024, 16777216]");
    }
    if (c.quiescence_secs < 1 || c.poll_interval_secs < 1) {
        throw Error(Errc::ConfigInvalid, "intervals must be at least 1 second");
    }
    if (c.max_concurrent_conversions < 1 || c.max_concurrent_conversions > 4) {
        throw Error(Errc::ConfigInvalid, "max_concurrent_conversions must be in [1, 4]");
    }
    if (c.prefix.empty() || c.prefix.find('/') != std::string::npos) {
        throw Error(Errc::ConfigInvalid, "prefix must be a plain file name component");
    }
}

}  // namespace tmsensor
