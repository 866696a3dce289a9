#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <vector>

#include "tmsensor/error.hpp"

namespace tmsensor {

enum class IpVersion : std::uint8_t { v4 = 4, v6 = 6 };

/// Address bytes for either family. Only the first `size()` bytes are
/// meaningful; the rest stay zero so that comparisons are well defined.
class IpAddress {
public:
    IpAddress() = default;
    IpAddress(IpVersion version, std::span<const std::uint8_t> bytes);

    static IpAddress v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
        const std::array<std::uint8_t, 4> raw{a, b, c, d};
        return IpAddress(IpVersion::v4, raw);
    }

    IpVersion version() const noexcept { return version_; }
    std::size_t size() const noexcept { return version_ == IpVersion::v4 ? 4 : 16; }
    std::span<const std::uint8_t> bytes() const noexcept { return {bytes_.data(), size()}; }

    friend bool operator==(const IpAddress&, const IpAddress&) = default;
    friend auto operator<=>(const IpAddress&, const IpAddress&) = default;

private:
    IpVersion version_ = IpVersion::v4;
    std::array<std::uint8_t, 16> bytes_{};
};

struct PacketRecord {
    std::uint64_t timestamp_us = 0;
    IpAddress src;
    IpAddress dst;
    std::uint32_t wire_len = 0;
    std::uint32_t cap_len = 0;

    IpVersion ip_version() const noexcept { return src.version(); }
    friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

struct CaptureStats {
    std::uint64_t total_records = 0;
    std::uint64_t valid_ip_packets = 0;
    std::uint64_t skipped_non_ip = 0;
    std::uint64_t skipped_malformed = 0;
    bool truncated_tail = false;
    std::uint64_t bytes_read = 0;

    friend bool operator==(const CaptureStats&, const CaptureStats&) = default;
};

/// Thrown for fatal capture problems. Carries the statistics gathered before
/// the failure was detected.
class CaptureError : public Error {
public:
    CaptureError(Errc code, const std::string& detail, CaptureStats stats)
        : Error(code, detail), stats_(stats) {}
    const CaptureStats& stats() const noexcept { return stats_; }

private:
    CaptureStats stats_;
};

namespace linktype {
inline constexpr std::uint32_t ethernet = 1;
inline constexpr std::uint32_t raw_ip = 101;
inline constexpr std::uint32_t linux_sll = 113;
}  // namespace linktype

namespace pcap_magic {
inline constexpr std::uint32_t micro = 0xA1B2C3D4;
inline constexpr std::uint32_t nano = 0xA1B23C4D;
inline constexpr std::uint32_t pcapng = 0x0A0D0D0A;
}  // namespace pcap_magic

/// Largest number of bytes of any record held in memory at once. Bytes past
/// this point are skipped on the stream, never buffered.
inline constexpr std::size_t max_record_buffer = 64 * 1024;

/// Streaming reader for classic libpcap files.
///
/// The global header is validated on construction. Each call to next()
/// consumes records until one yields an IPv4/IPv6 packet, updating stats()
/// for every record seen. A record cut short by end of file sets
/// `truncated_tail` and ends the stream without throwing.
class PcapReader {
public:
    explicit PcapReader(std::istream& in);

    std::optional<PacketRecord> next();

    const CaptureStats& stats() const noexcept { return stats_; }
    std::uint32_t link_type() const noexcept { return link_type_; }
    bool nanosecond_timestamps() const noexcept { return nanos_; }
    bool swapped() const noexcept { return swapped_; }

private:
    std::size_t read_some(std::uint8_t* dst, std::size_t n);
    std::size_t skip(std::uint64_t n);
    std::optional<PacketRecord> decode(std::span<const std::uint8_t> frame, std::uint64_t ts_us,
                                       std::uint32_t incl_len, std::uint32_t orig_len);

    std::istream& in_;
    CaptureStats stats_;
    std::uint32_t link_type_ = 0;
    bool swapped_ = false;
    bool nanos_ = false;
    bool done_ = false;
    std::vector<std::uint8_t> buffer_;
};

struct ParsedCapture {
    std::vector<PacketRecord> packets;
    CaptureStats stats;
};

/// Reads a whole capture into memory. Prefer PcapReader for large files.
ParsedCapture parse_pcap(std::istream& in);
ParsedCapture parse_pcap(std::span<const std::uint8_t> bytes);

}  // namespace tmsensor
