#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tmsensor/traffic_matrix.hpp"

namespace tmsensor {

// Traffic matrix file (TMF): a concatenation of blocks, one per matrix.
// Each block is a 64-byte little-endian header followed by payload_len bytes
// of payload. The payload lists entries in (row, col) order as LEB128
// triples (row delta from the previous row, absolute col, count), optionally
// raw-deflate compressed.
//
//   off  size  field
//     0     4  magic "GTM1"
//     4     2  format_version (1)
//     6     2  flags (bit 0: payload deflated)
//     8     4  window_size
//    12     8  packet_count
//    20     8  start_time_us
//    28     8  end_time_us
//    36     8  key_id
//    44     1  anon_scheme (1: truncated HMAC-SHA-256)
//    45     3  reserved, zero
//    48     8  entry_count
//    56     8  payload_len

inline constexpr std::size_t tmf_header_size = 64;
inline constexpr std::uint16_t tmf_format_version = 1;
inline constexpr std::uint16_t tmf_flag_deflate = 0x0001;
inline constexpr std::uint8_t anon_scheme_hmac_sha256 = 1;

struct TmfHeader {
    std::uint16_t format_version = tmf_format_version;
    std::uint16_t flags = tmf_flag_deflate;
    std::uint32_t window_size = 0;
    std::uint64_t packet_count = 0;
    std::uint64_t start_time_us = 0;
    std::uint64_t end_time_us = 0;
    KeyId key_id{};
    std::uint8_t anon_scheme = anon_scheme_hmac_sha256;
    std::uint64_t entry_count = 0;
    std::uint64_t payload_len = 0;

    friend bool operator==(const TmfHeader&, const TmfHeader&) = default;
};

std::array<std::uint8_t, tmf_header_size> encode_header(const TmfHeader& h);

/// Parses and validates magic, version, scheme, flags and reserved bytes.
TmfHeader decode_header(std::span<const std::uint8_t, tmf_header_size> bytes);

struct TmfOptions {
    bool deflate = true;
};

// LEB128 helpers shared by the codec.
void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v);
/// Decodes one varint at `pos`, advancing it. Returns nullopt on truncation
/// or a value wider than 64 bits.
std::optional<std::uint64_t> get_varint(std::span<const std::uint8_t> in, std::size_t& pos);

/// Uncompressed payload bytes for one matrix.
std::vector<std::uint8_t> encode_entries(std::span<const MatrixEntry> entries);

/// Inverse of encode_entries; throws Errc::CorruptPayload.
std::vector<MatrixEntry> decode_entries(std::span<const std::uint8_t> payload,
                                        std::uint64_t entry_count);

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> in);
std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> in, std::size_t max_out);

/// Appends matrices to a sink one block at a time. Every block must share the
/// key id (Errc::MixedKeys) and window size (Errc::MixedWindowSizes) of the
/// first one written.
class TmfWriter {
public:
    explicit TmfWriter(std::ostream& sink, TmfOptions options = {});

    void write(const TrafficMatrix& m);
    std::uint64_t bytes_written() const noexcept { return bytes_; }
    std::uint64_t blocks_written() const noexcept { return blocks_; }

private:
    std::ostream& sink_;
    TmfOptions options_;
    std::optional<KeyId> key_id_;
    std::uint32_t window_size_ = 0;
    std::uint64_t bytes_ = 0;
    std::uint64_t blocks_ = 0;
};

std::uint64_t write_tmf(std::span<const TrafficMatrix> matrices, std::ostream& sink,
                        TmfOptions options = {});
std::vector<std::uint8_t> encode_tmf(std::span<const TrafficMatrix> matrices,
                                     TmfOptions options = {});

std::vector<TrafficMatrix> read_tmf(std::istream& source);
std::vector<TrafficMatrix> decode_tmf(std::span<const std::uint8_t> bytes);
std::vector<TrafficMatrix> read_tmf_file(const std::filesystem::path& path);

/// Lists block headers by skipping over payloads without decoding them.
std::vector<TmfHeader> scan_tmf(std::istream& source);

struct CompressionReport {
    std::uint64_t pcap_bytes = 0;
    std::uint64_t tmf_bytes = 0;
    double ratio() const noexcept {
        return static_cast<double>(pcap_bytes) / static_cast<double>(tmf_bytes);
    }
};

CompressionReport compression_report(std::uint64_t pcap_bytes, std::uint64_t tmf_bytes);

/// `<prefix>-<unix_epoch_hour>-<seq>.tmf`
std::string tmf_file_name(const std::string& prefix, std::uint64_t epoch_hour, std::uint32_t seq);

}  // namespace tmsensor
