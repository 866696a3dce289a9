#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace tmtest {

using namespace tmsensor;

std::vector<std::uint8_t> from_hex(std::string_view hex) {
    auto nibble = [](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
        throw std::invalid_argument("bad hex digit");
    };
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
        out.push_back(static_cast<std::uint8_t>(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
    }
    return out;
}

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static constexpr char d[] = "0123456789abcdef";
    std::string s;
    for (auto b : bytes) {
        s.push_back(d[b >> 4]);
        s.push_back(d[b & 15]);
    }
    return s;
}

std::vector<std::uint8_t> crafted_capture() {
    // Global header (LE, usec, snaplen 65535, Ethernet) then three 58-byte
    // records. Each frame: Ethernet II / IPv4 (20 bytes) / UDP 5000 -> 53.
    // Decoded by an independent packet library as
    //   1700000000.000100 10.0.0.1 -> 10.0.0.2
    //   1700000000.000250 10.0.0.1 -> 10.0.0.2
    //   1700000001.000005 10.0.0.3 -> 10.0.0.1
    return from_hex(
        "d4c3b2a1020004000000000000000000ffff00000100000000f1536564000000"
        "2a0000002a00000002000000000202000000000108004500001c000000004011"
        "00000a0000010a000002138800350008000000f15365fa0000002a0000002a00"
        "000002000000000202000000000108004500001c00000000401100000a000001"
        "0a000002138800350008000001f15365050000002a0000002a00000002000000"
        "000202000000000108004500001c00000000401100000a0000030a0000011388"
        "003500080000");
}

PcapBuilder::PcapBuilder(std::uint32_t link_type, bool big_endian, bool nanos) : big_(big_endian) {
    put32(nanos ? 0xA1B23C4D : 0xA1B2C3D4);
    put16(2);
    put16(4);
    put32(0);
    put32(0);
    put32(262144);
    put32(link_type);
}

void PcapBuilder::put32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        const int shift = big_ ? 8 * (3 - i) : 8 * i;
        bytes_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

void PcapBuilder::put16(std::uint16_t v) {
    if (big_) {
        bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
        bytes_.push_back(static_cast<std::uint8_t>(v));
    } else {
        bytes_.push_back(static_cast<std::uint8_t>(v));
        bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
    }
}

void PcapBuilder::record(std::uint32_t sec, std::uint32_t frac, const std::vector<std::uint8_t>& frame,
                         std::uint32_t orig_len) {
    offsets_.push_back(bytes_.size());
    put32(sec);
    put32(frac);
    put32(static_cast<std::uint32_t>(frame.size()));
    put32(orig_len ? orig_len : static_cast<std::uint32_t>(frame.size()));
    bytes_.insert(bytes_.end(), frame.begin(), frame.end());
}

std::vector<std::uint8_t> ipv4_packet(std::array<std::uint8_t, 4> src, std::array<std::uint8_t, 4> dst,
                                      std::size_t payload) {
    const std::size_t total = 20 + payload;
    std::vector<std::uint8_t> p{0x45, 0, static_cast<std::uint8_t>(total >> 8), static_cast<std::uint8_t>(total),
                                0,    0, 0,                                      0,
                                64,   17, 0,                                     0};
    p.reserve(total);
    p.insert(p.end(), src.begin(), src.end());
    p.insert(p.end(), dst.begin(), dst.end());
    p.resize(total, 0xAB);
    return p;
}

std::vector<std::uint8_t> ipv6_packet(const std::array<std::uint8_t, 16>& src,
                                      const std::array<std::uint8_t, 16>& dst, std::size_t payload) {
    std::vector<std::uint8_t> p{0x60, 0, 0, 0, static_cast<std::uint8_t>(payload >> 8),
                                static_cast<std::uint8_t>(payload), 17, 64};
    p.reserve(40 + payload);
    p.insert(p.end(), src.begin(), src.end());
    p.insert(p.end(), dst.begin(), dst.end());
    p.resize(40 + payload, 0xCD);
    return p;
}

std::vector<std::uint8_t> ethernet(std::uint16_t ethertype, const std::vector<std::uint8_t>& body,
                                   std::vector<std::uint16_t> vlan_tags) {
    std::vector<std::uint8_t> f{0x02, 0, 0, 0, 0, 2, 0x02, 0, 0, 0, 0, 1};
    for (auto tpid : vlan_tags) {
        f.push_back(static_cast<std::uint8_t>(tpid >> 8));
        f.push_back(static_cast<std::uint8_t>(tpid));
        f.push_back(0x00);
        f.push_back(0x64);
    }
    f.push_back(static_cast<std::uint8_t>(ethertype >> 8));
    f.push_back(static_cast<std::uint8_t>(ethertype));
    f.insert(f.end(), body.begin(), body.end());
    return f;
}

BruteCounts brute_force_decode(const std::vector<std::uint8_t>& file) {
    BruteCounts c;
    if (file.size() < 24) throw std::runtime_error("short");
    const bool be = file[0] == 0xA1;
    auto u32 = [&](std::size_t at) -> std::uint32_t {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            const std::uint32_t byte = file[at + static_cast<std::size_t>(i)];
            v |= be ? byte << (8 * (3 - i)) : byte << (8 * i);
        }
        return v;
    };
    std::size_t at = 24;
    while (at < file.size()) {
        if (file.size() - at < 16) {
            c.truncated = true;
            break;
        }
        const std::uint32_t incl = u32(at + 8);
        const std::uint32_t orig = u32(at + 12);
        if (file.size() - at - 16 < incl) {
            c.truncated = true;
            break;
        }
        const std::vector<std::uint8_t> frame(file.begin() + static_cast<long>(at + 16),
                                              file.begin() + static_cast<long>(at + 16 + incl));
        at += 16 + incl;
        ++c.records;
        if (incl > orig || frame.size() < 14) {
            ++c.malformed;
            continue;
        }
        std::size_t l3 = 12;
        unsigned type = static_cast<unsigned>(frame[l3]) << 8 | frame[l3 + 1];
        bool bad = false;
        while (type == 0x8100 || type == 0x88A8) {
            l3 += 4;
            if (frame.size() < l3 + 2) {
                bad = true;
                break;
            }
            type = static_cast<unsigned>(frame[l3]) << 8 | frame[l3 + 1];
        }
        l3 += 2;
        if (bad) {
            ++c.malformed;
            continue;
        }
        const std::size_t avail = frame.size() - l3;
        if (type == 0x0800) {
            if (avail < 20 || (frame[l3] & 0xF0) != 0x40) {
                ++c.malformed;
                continue;
            }
            c.pairs.push_back({{frame.begin() + static_cast<long>(l3 + 12), frame.begin() + static_cast<long>(l3 + 16)},
                               {frame.begin() + static_cast<long>(l3 + 16), frame.begin() + static_cast<long>(l3 + 20)}});
            ++c.valid;
        } else if (type == 0x86DD) {
            if (avail < 40 || (frame[l3] & 0xF0) != 0x60) {
                ++c.malformed;
                continue;
            }
            c.pairs.push_back({{frame.begin() + static_cast<long>(l3 + 8), frame.begin() + static_cast<long>(l3 + 24)},
                               {frame.begin() + static_cast<long>(l3 + 24), frame.begin() + static_cast<long>(l3 + 40)}});
            ++c.valid;
        } else {
            ++c.non_ip;
        }
    }
    return c;
}

std::vector<std::uint8_t> random_capture(std::mt19937_64& rng, std::size_t records) {
    PcapBuilder b(1, rng() % 2 == 0, rng() % 2 == 0);
    auto v4 = [&] {
        return std::array<std::uint8_t, 4>{10, 0, static_cast<std::uint8_t>(rng() % 3),
                                           static_cast<std::uint8_t>(rng() % 8)};
    };
    auto v6 = [&] {
        std::array<std::uint8_t, 16> a{0x20, 0x01, 0x0d, 0xb8};
        a[15] = static_cast<std::uint8_t>(rng() % 6);
        return a;
    };
    std::uint32_t sec = 1'700'000'000;
    for (std::size_t i = 0; i < records; ++i) {
        sec += static_cast<std::uint32_t>(rng() % 3);
        const auto frac = static_cast<std::uint32_t>(rng() % 1000);
        switch (rng() % 8) {
            case 0:
            case 1: b.record(sec, frac, ethernet(0x0800, ipv4_packet(v4(), v4(), rng() % 64))); break;
            case 2: b.record(sec, frac, ethernet(0x86DD, ipv6_packet(v6(), v6(), rng() % 32))); break;
            case 3: {
                std::vector<std::uint16_t> tags(1 + rng() % 2, 0x8100);
                if (rng() % 2) tags.front() = 0x88A8;
                b.record(sec, frac, ethernet(0x0800, ipv4_packet(v4(), v4()), tags));
                break;
            }
            case 4: b.record(sec, frac, ethernet(0x0806, std::vector<std::uint8_t>(28, 1))); break;
            case 5: {
                // Snap length cut inside the IPv4 addresses.
                auto f = ethernet(0x0800, ipv4_packet(v4(), v4(), 100));
                const auto orig = static_cast<std::uint32_t>(f.size());
                f.resize(14 + 10 + rng() % 8);
                b.record(sec, frac, f, orig);
                break;
            }
            case 6: b.record(sec, frac, std::vector<std::uint8_t>(rng() % 14, 0)); break;
            default: {
                auto f = ethernet(0x0800, ipv4_packet(v4(), v4()));
                f[14] = 0x65;  // wrong IP version nibble
                b.record(sec, frac, f);
                break;
            }
        }
    }
    return b.bytes();
}

std::vector<PacketRecord> random_packets(std::mt19937_64& rng, std::size_t count, std::size_t hosts) {
    std::vector<IpAddress> pool;
    std::set<std::uint32_t> used;
    while (pool.size() < hosts) {
        const auto a = static_cast<std::uint32_t>(rng());
        if (!used.insert(a).second) continue;
        pool.push_back(IpAddress::v4(static_cast<std::uint8_t>(a >> 24), static_cast<std::uint8_t>(a >> 16),
                                     static_cast<std::uint8_t>(a >> 8), static_cast<std::uint8_t>(a)));
    }
    std::vector<PacketRecord> out(count);
    for (auto& p : out) {
        p.src = pool[rng() % hosts];
        p.dst = pool[rng() % hosts];
        p.timestamp_us = 1'700'000'000'000'000ull + rng() % 3'600'000'000ull;
        p.wire_len = p.cap_len = 64;
    }
    return out;
}

TrafficMatrix random_matrix(std::mt19937_64& rng, const KeyId& key_id, std::uint32_t window_size,
                            std::size_t max_entries, std::size_t id_pool) {
    // Fixed id pool so independently drawn matrices share coordinates.
    std::vector<std::uint64_t> ids(id_pool);
    for (std::size_t i = 0; i < id_pool; ++i) {
        std::uint64_t z = (i + 1) * 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        ids[i] = (z ^ (z >> 31)) >> (i % 64);
    }
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> cells;
    const std::size_t n = max_entries ? rng() % (max_entries + 1) : 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t count = rng() % 16 == 0 ? rng() % (1ull << 40) + 1 : rng() % 50 + 1;
        cells[{ids[rng() % id_pool], ids[rng() % id_pool]}] += count;
    }
    TrafficMatrix m;
    m.window_size = window_size;
    m.key_id = key_id;
    for (const auto& [cell, count] : cells) {
        m.entries.push_back({AnonId{cell.first}, AnonId{cell.second}, count});
        m.packet_count += count;
    }
    if (m.packet_count) {
        m.start_time_us = rng() % (1ull << 52);
        m.end_time_us = m.start_time_us + rng() % 3'600'000'000ull;
    }
    return m;
}

AnalysisReport oracle_report(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& pairs) {
    struct PairHash {
        std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
            return std::hash<std::uint64_t>{}(p.first) * 31 + std::hash<std::uint64_t>{}(p.second);
        }
    };
    std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t, PairHash> links;
    for (const auto& p : pairs) ++links[p];

    std::unordered_map<std::uint64_t, std::uint64_t> src_packets, dst_packets;
    std::unordered_map<std::uint64_t, std::unordered_set<std::uint64_t>> src_peers, dst_peers;
    AnalysisReport r;
    for (const auto& [link, n] : links) {
        src_packets[link.first] += n;
        dst_packets[link.second] += n;
        src_peers[link.first].insert(link.second);
        dst_peers[link.second].insert(link.first);
        r.valid_packets += n;
        r.max_link_packets = std::max(r.max_link_packets, n);
    }
    r.unique_links = links.size();
    r.unique_sources = src_packets.size();
    r.unique_destinations = dst_packets.size();
    for (const auto& [s, n] : src_packets) r.max_source_packets = std::max(r.max_source_packets, n);
    for (const auto& [d, n] : dst_packets) r.max_destination_packets = std::max(r.max_destination_packets, n);
    for (const auto& [s, peers] : src_peers) {
        r.max_source_fanout = std::max<std::uint64_t>(r.max_source_fanout, peers.size());
        ++r.fanout_histogram[peers.size()];
    }
    for (const auto& [d, peers] : dst_peers) {
        r.max_destination_fanin = std::max<std::uint64_t>(r.max_destination_fanin, peers.size());
        ++r.fanin_histogram[peers.size()];
    }
    return r;
}

AnalysisReport oracle_report(const std::vector<PacketRecord>& packets, const AnonKey& key) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
    pairs.reserve(packets.size());
    std::map<IpAddress, std::uint64_t> ids;
    auto id = [&](const IpAddress& ip) {
        auto it = ids.find(ip);
        if (it == ids.end()) it = ids.emplace(ip, anonymize_ip(key, ip).value).first;
        return it->second;
    };
    for (const auto& p : packets) pairs.emplace_back(id(p.src), id(p.dst));
    return oracle_report(pairs);
}

std::vector<std::uint64_t> leb128_decode_all(const std::vector<std::uint8_t>& bytes) {
    std::vector<std::uint64_t> out;
    std::uint64_t acc = 0;
    unsigned shift = 0;
    for (std::uint8_t b : bytes) {
        acc += static_cast<std::uint64_t>(b % 128) << shift;
        if (b < 128) {
            out.push_back(acc);
            acc = 0;
            shift = 0;
        } else {
            shift += 7;
        }
    }
    if (shift != 0) throw std::runtime_error("dangling varint");
    return out;
}

AnonKey test_key(std::uint8_t fill) {
    AnonKey::Bytes b{};
    b.fill(fill);
    return AnonKey(b);
}

TempDir::TempDir() {
    std::random_device rd;
    for (;;) {
        auto p = std::filesystem::temp_directory_path() / ("tmsensor-test-" + std::to_string(rd()));
        if (std::filesystem::create_directory(p)) {
            path_ = p;
            return;
        }
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace tmtest
