#pragma once

// Test-only builders and oracles. Nothing here calls into the code paths it
// is used to check, except anonymize_ip, which has its own cross-checks.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tmsensor/analytics.hpp"
#include "tmsensor/anonymizer.hpp"
#include "tmsensor/pcap.hpp"
#include "tmsensor/traffic_matrix.hpp"

namespace tmtest {

std::vector<std::uint8_t> from_hex(std::string_view hex);
std::string to_hex(const std::vector<std::uint8_t>& bytes);

/// The hand-assembled three-packet Ethernet/IPv4 capture:
/// 10.0.0.1 -> 10.0.0.2 twice, then 10.0.0.3 -> 10.0.0.1.
std::vector<std::uint8_t> crafted_capture();

/// Writes classic pcap files with explicit control over byte order, timestamp
/// resolution and link type.
class PcapBuilder {
public:
    explicit PcapBuilder(std::uint32_t link_type = 1, bool big_endian = false, bool nanos = false);

    void record(std::uint32_t sec, std::uint32_t frac, const std::vector<std::uint8_t>& frame,
                std::uint32_t orig_len = 0);
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    /// Offsets where each record header starts.
    const std::vector<std::size_t>& record_offsets() const { return offsets_; }

private:
    void put32(std::uint32_t v);
    void put16(std::uint16_t v);
    bool big_;
    std::vector<std::uint8_t> bytes_;
    std::vector<std::size_t> offsets_;
};

std::vector<std::uint8_t> ipv4_packet(std::array<std::uint8_t, 4> src, std::array<std::uint8_t, 4> dst,
                                      std::size_t payload = 8);
std::vector<std::uint8_t> ipv6_packet(const std::array<std::uint8_t, 16>& src,
                                      const std::array<std::uint8_t, 16>& dst, std::size_t payload = 8);
std::vector<std::uint8_t> ethernet(std::uint16_t ethertype, const std::vector<std::uint8_t>& body,
                                   std::vector<std::uint16_t> vlan_tags = {});

struct BruteCounts {
    std::uint64_t records = 0;
    std::uint64_t valid = 0;
    std::uint64_t non_ip = 0;
    std::uint64_t malformed = 0;
    bool truncated = false;
    std::vector<std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>> pairs;
};

/// Whole-buffer Ethernet-only pcap decoder used as an oracle.
BruteCounts brute_force_decode(const std::vector<std::uint8_t>& file);

/// Random capture mixing IPv4, IPv6, VLAN-tagged, ARP and malformed frames.
std::vector<std::uint8_t> random_capture(std::mt19937_64& rng, std::size_t records);

/// Packets between `hosts` random IPv4 addresses with random timestamps.
std::vector<tmsensor::PacketRecord> random_packets(std::mt19937_64& rng, std::size_t count,
                                                   std::size_t hosts);

/// A random valid matrix for codec and merge properties.
tmsensor::TrafficMatrix random_matrix(std::mt19937_64& rng, const tmsensor::KeyId& key_id,
                                      std::uint32_t window_size, std::size_t max_entries,
                                      std::size_t id_pool);

/// AnalysisReport computed by hash-map counting directly over the packet
/// list, without building a matrix.
tmsensor::AnalysisReport oracle_report(const std::vector<tmsensor::PacketRecord>& packets,
                                       const tmsensor::AnonKey& key);

/// Same, starting from already-anonymized (src, dst) pairs.
tmsensor::AnalysisReport oracle_report(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& pairs);

/// Minimal unsigned LEB128 decoder, written independently of the codec.
std::vector<std::uint64_t> leb128_decode_all(const std::vector<std::uint8_t>& bytes);

tmsensor::AnonKey test_key(std::uint8_t fill = 0);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace tmtest
