#include "tmsensor/pcap.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <string>

namespace tmsensor {

namespace {

constexpr std::size_t global_header_len = 24;
constexpr std::size_t record_header_len = 16;

constexpr std::uint16_t ethertype_ipv4 = 0x0800;
constexpr std::uint16_t ethertype_ipv6 = 0x86DD;
constexpr std::uint16_t ethertype_vlan = 0x8100;
constexpr std::uint16_t ethertype_qinq = 0x88A8;

constexpr std::uint32_t bswap32(std::uint32_t v) {
    return v >> 24 | (v >> 8 & 0xFF00) | (v << 8 & 0xFF0000) | v << 24;
}

std::uint32_t load_u32(const std::uint8_t* p, bool swapped) {
    std::uint32_t v = static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
                      static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
    return swapped ? bswap32(v) : v;
}

std::uint16_t load_be16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] << 8 | p[1]);
}

std::string hex32(std::uint32_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

}  // namespace

IpAddress::IpAddress(IpVersion version, std::span<const std::uint8_t> bytes) : version_(version) {
    if (bytes.size() != size()) {
        throw Error(Errc::LengthMismatch, "address of " + std::to_string(bytes.size()) +
                                              " bytes for IPv" +
                                              std::to_string(static_cast<int>(version)));
    }
    std::copy(bytes.begin(), bytes.end(), bytes_.begin());
}

PcapReader::PcapReader(std::istream& in) : in_(in) {
    std::array<std::uint8_t, global_header_len> hdr{};
    const std::size_t got = read_some(hdr.data(), hdr.size());
    if (got < 4) {
        throw CaptureError(Errc::BadMagic, "input too short for a capture header", stats_);
    }
    const std::uint32_t magic = load_u32(hdr.data(), false);
    if (magic == pcap_magic::pcapng) {
        throw CaptureError(Errc::PcapngUnsupported,
                           "pcapng capture detected; convert to classic pcap first", stats_);
    }
    if (magic == pcap_magic::micro || magic == pcap_magic::nano) {
        swapped_ = false;
    } else if (magic == bswap32(pcap_magic::micro) || magic == bswap32(pcap_magic::nano)) {
        swapped_ = true;
    } else {
        throw CaptureError(Errc::BadMagic, "unrecognized capture magic " + hex32(magic), stats_);
    }
    nanos_ = (swapped_ ? bswap32(magic) : magic) == pcap_magic::nano;
    if (got < global_header_len) {
        throw CaptureError(Errc::TruncatedHeader, "capture header cut short", stats_);
    }
    link_type_ = load_u32(hdr.data() + 20, swapped_) & 0x0FFFFFFF;
    if (link_type_ != linktype::ethernet && link_type_ != linktype::raw_ip &&
        link_type_ != linktype::linux_sll) {
        throw CaptureError(Errc::UnsupportedLinkType,
                           "link type " + std::to_string(link_type_) + " is not supported", stats_);
    }
    buffer_.reserve(max_record_buffer);
}

std::size_t PcapReader::read_some(std::uint8_t* dst, std::size_t n) {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    stats_.bytes_read += got;
    return got;
}

std::size_t PcapReader::skip(std::uint64_t n) {
    std::uint64_t skipped = 0;
    while (skipped < n && in_) {
        const auto chunk = static_cast<std::streamsize>(
            std::min<std::uint64_t>(n - skipped, std::numeric_limits<std::int32_t>::max()));
        in_.ignore(chunk);
        const auto got = static_cast<std::uint64_t>(in_.gcount());
        skipped += got;
        if (got < static_cast<std::uint64_t>(chunk)) break;
    }
    stats_.bytes_read += skipped;
    return static_cast<std::size_t>(skipped);
}

std::optional<PacketRecord> PcapReader::next() {
    while (!done_) {
        std::array<std::uint8_t, record_header_len> rh{};
        const std::size_t got = read_some(rh.data(), rh.size());
        if (got == 0) {
            done_ = true;
            break;
        }
        if (got < rh.size()) {
            stats_.truncated_tail = true;
            done_ = true;
            break;
        }
        const std::uint32_t ts_sec = load_u32(rh.data(), swapped_);
        const std::uint32_t ts_frac = load_u32(rh.data() + 4, swapped_);
        const std::uint32_t incl_len = load_u32(rh.data() + 8, swapped_);
        const std::uint32_t orig_len = load_u32(rh.data() + 12, swapped_);

        const std::size_t keep = std::min<std::size_t>(incl_len, max_record_buffer);
        buffer_.resize(keep);
        if (read_some(buffer_.data(), keep) < keep || skip(incl_len - keep) < incl_len - keep) {
            stats_.truncated_tail = true;
            done_ = true;
            break;
        }

        ++stats_.total_records;
        const std::uint64_t ts_us = static_cast<std::uint64_t>(ts_sec) * 1'000'000u +
                                    (nanos_ ? ts_frac / 1000u : ts_frac);
        if (incl_len > orig_len) {
            ++stats_.skipped_malformed;
            continue;
        }
        if (auto rec = decode(buffer_, ts_us, incl_len, orig_len)) {
            ++stats_.valid_ip_packets;
            return rec;
        }
    }
    return std::nullopt;
}

std::optional<PacketRecord> PcapReader::decode(std::span<const std::uint8_t> frame,
                                               std::uint64_t ts_us, std::uint32_t incl_len,
                                               std::uint32_t orig_len) {
    std::size_t offset = 0;
    std::uint16_t ethertype = 0;

    switch (link_type_) {
        case linktype::ethernet:
            if (frame.size() < 14) {
                ++stats_.skipped_malformed;
                return std::nullopt;
            }
            ethertype = load_be16(frame.data() + 12);
            offset = 14;
            while (ethertype == ethertype_vlan || ethertype == ethertype_qinq) {
                if (frame.size() < offset + 4) {
                    ++stats_.skipped_malformed;
                    return std::nullopt;
                }
                ethertype = load_be16(frame.data() + offset + 2);
                offset += 4;
            }
            break;
        case linktype::linux_sll:
            if (frame.size() < 16) {
                ++stats_.skipped_malformed;
                return std::nullopt;
            }
            ethertype = load_be16(frame.data() + 14);
            offset = 16;
            break;
        case linktype::raw_ip:
            if (frame.empty()) {
                ++stats_.skipped_malformed;
                return std::nullopt;
            }
            switch (frame[0] >> 4) {
                case 4: ethertype = ethertype_ipv4; break;
                case 6: ethertype = ethertype_ipv6; break;
                default: ++stats_.skipped_malformed; return std::nullopt;
            }
            break;
    }

    const auto ip = frame.subspan(offset);
    PacketRecord rec;
    rec.timestamp_us = ts_us;
    rec.cap_len = incl_len;
    rec.wire_len = orig_len;

    if (ethertype == ethertype_ipv4) {
        if (ip.size() < 20 || (ip[0] >> 4) != 4) {
            ++stats_.skipped_malformed;
            return std::nullopt;
        }
        rec.src = IpAddress(IpVersion::v4, ip.subspan(12, 4));
        rec.dst = IpAddress(IpVersion::v4, ip.subspan(16, 4));
        return rec;
    }
    if (ethertype == ethertype_ipv6) {
        if (ip.size() < 40 || (ip[0] >> 4) != 6) {
            ++stats_.skipped_malformed;
            return std::nullopt;
        }
        rec.src = IpAddress(IpVersion::v6, ip.subspan(8, 16));
        rec.dst = IpAddress(IpVersion::v6, ip.subspan(24, 16));
        return rec;
    }
    ++stats_.skipped_non_ip;
    return std::nullopt;
}

ParsedCapture parse_pcap(std::istream& in) {
    PcapReader reader(in);
    ParsedCapture out;
    while (auto rec = reader.next()) out.packets.push_back(*rec);
    out.stats = reader.stats();
    return out;
}

ParsedCapture parse_pcap(std::span<const std::uint8_t> bytes) {
    std::istringstream in(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    return parse_pcap(in);
}

}  // namespace tmsensor
