#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <stop_token>
#include <string>
#include <tuple>

#include "tmsensor/anonymizer.hpp"
#include "tmsensor/pcap.hpp"
#include "tmsensor/tmf.hpp"
#include "tmsensor/traffic_matrix.hpp"

namespace tmsensor {

struct SensorConfig {
    std::filesystem::path key_path;
    std::uint32_t window_size = default_window_size;
    std::filesystem::path input_dir;
    std::filesystem::path output_dir;
    std::uint64_t quiescence_secs = 120;
    std::uint64_t poll_interval_secs = 60;
    bool delete_after_convert = false;
    unsigned max_concurrent_conversions = 2;
    std::string prefix = "tm";
};

/// Parses the flat `key = value` config format. Blank lines and lines
/// starting with '#' are ignored. Throws Errc::ConfigInvalid.
SensorConfig parse_config(std::istream& in);
SensorConfig load_config(const std::filesystem::path& path);
void validate(const SensorConfig& config);

struct ConversionResult {
    CaptureStats stats;
    std::uint64_t pcap_bytes = 0;
    std::uint64_t tmf_bytes = 0;
    std::uint64_t windows = 0;
    std::optional<std::filesystem::path> tmf_path;  // unset when no packets were found

    std::optional<CompressionReport> compression() const {
        if (tmf_bytes == 0) return std::nullopt;
        return compression_report(pcap_bytes, tmf_bytes);
    }
};

/// Streams one capture through the anonymizer and window builder into a
/// single TMF file in `out_dir`, named from the hour of the first packet.
/// The file appears atomically; nothing is written for a capture without IP
/// packets. A truncated capture converts normally with stats.truncated_tail set.
ConversionResult convert_capture(const AnonKey& key, std::uint32_t window_size,
                                 const std::filesystem::path& pcap_path,
                                 const std::filesystem::path& out_dir,
                                 const std::string& prefix = "tm");

std::string sha256_file_hex(const std::filesystem::path& path);

/// Append-only record of processed captures, one `<digest> <filename>` line
/// per capture.
class Journal {
public:
    static constexpr const char* file_name = "tmsensor.journal";

    /// Loads an existing journal or starts an empty one. Throws
    /// Errc::JournalCorrupt on a malformed line.
    explicit Journal(std::filesystem::path path);

    bool contains_digest(const std::string& digest) const;
    void append(const std::string& digest, const std::string& name);
    std::size_t size() const;
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::multimap<std::string, std::string> entries_;  // digest -> name
};

/// Polls an input directory and converts each quiescent capture once.
class Watcher {
public:
    Watcher(SensorConfig config, AnonKey key, std::ostream& log);

    /// One scan of the input directory. Returns the number of captures
    /// converted (including ones that held no packets).
    std::size_t poll_once();

    /// poll_once every poll interval until stop is requested. Conversions in
    /// flight complete before returning.
    void run(std::stop_token stop);

    const Journal& journal() const noexcept { return journal_; }

private:
    struct Seen {
        std::uintmax_t size;
        std::filesystem::file_time_type mtime;
        friend auto operator<=>(const Seen&, const Seen&) = default;
    };
    struct Candidate {
        std::filesystem::path path;
        std::string digest;
    };

    static std::optional<Seen> stat_file(const std::filesystem::path& path);
    bool convert_one(const Candidate& c);
    void log_line(const std::string& line);

    SensorConfig config_;
    AnonKey key_;
    std::ostream& log_;
    std::mutex log_mutex_;
    Journal journal_;
    std::map<std::string, std::pair<Seen, std::string>> digests_;
    std::mutex failed_mutex_;
    std::set<std::pair<std::string, Seen>> failed_;
};

}  // namespace tmsensor
