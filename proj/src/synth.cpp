#include "tmsensor/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>
#include <string>

namespace tmsensor {

namespace {

constexpr std::uint32_t max_udp_payload = 65'507;
constexpr std::uint32_t max_hosts = 65'534;
constexpr std::uint32_t synth_snaplen = 262'144;
constexpr std::array<std::uint16_t, 6> service_ports{53, 80, 123, 443, 445, 3389};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    // [0, 1) with 53 bits of precision.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi], rejection-sampled to avoid modulo bias.
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;
        if (span == 0) return engine_();
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return lo + v % span;
    }

    double exponential(double mean) { return -mean * std::log1p(-unit()); }

private:
    std::mt19937_64 engine_;
};

class ZipfSampler {
public:
    ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            total += std::pow(static_cast<double>(k + 1), -exponent);
            cdf_[k] = total;
        }
        for (auto& c : cdf_) c /= total;
    }

    std::size_t operator()(Rng& rng) const {
        const double u = rng.unit();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    }

private:
    std::vector<double> cdf_;
};

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_le16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_be16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint16_t ipv4_checksum(const std::uint8_t* header) {
    std::uint32_t sum = 0;
    for (int i = 0; i < 20; i += 2) sum += static_cast<std::uint32_t>(header[i] << 8 | header[i + 1]);
    while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

void put_mac(std::vector<std::uint8_t>& out, const IpAddress& host) {
    const auto b = host.bytes();
    out.insert(out.end(), {0x02, 0x00, b[0], b[1], b[2], b[3]});
}

}  // namespace

void validate(const SynthSpec& spec) {
    if (spec.host_count < 2 || spec.host_count > max_hosts) {
        throw Error(Errc::SpecInvalid, "host_count must be in [2, 65534]");
    }
    if (!(spec.zipf_exponent > 0.0) || !std::isfinite(spec.zipf_exponent)) {
        throw Error(Errc::SpecInvalid, "zipf_exponent must be positive");
    }
    if (spec.payload_min > spec.payload_max) {
        throw Error(Errc::SpecInvalid, "payload_min exceeds payload_max");
    }
    if (spec.payload_max > max_udp_payload) {
        throw Error(Errc::SpecInvalid, "payload_max exceeds the UDP maximum");
    }
    if (!(spec.mean_interarrival_us > 0.0) || !std::isfinite(spec.mean_interarrival_us)) {
        throw Error(Errc::SpecInvalid, "mean_interarrival_us must be positive");
    }
}

std::string format_ip(const IpAddress& ip) {
    const auto b = ip.bytes();
    if (ip.version() == IpVersion::v4) {
        return std::to_string(b[0]) + "." + std::to_string(b[1]) + "." + std::to_string(b[2]) + "." +
               std::to_string(b[3]);
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (std::size_t i = 0; i < 16; i += 2) {
        if (i) out.push_back(':');
        for (std::size_t j = i; j < i + 2; ++j) {
            out.push_back(digits[b[j] >> 4]);
            out.push_back(digits[b[j] & 0xF]);
        }
    }
    return out;
}

GroundTruth synthesize(const SynthSpec& spec, std::ostream& pcap_out) {
    validate(spec);
    Rng rng(spec.seed);

    std::vector<IpAddress> hosts;
    hosts.reserve(spec.host_count);
    std::set<std::uint16_t> used;
    while (hosts.size() < spec.host_count) {
        const auto offset = static_cast<std::uint16_t>(rng.between(1, max_hosts));
        if (!used.insert(offset).second) continue;
        hosts.push_back(IpAddress::v4(10, 0, static_cast<std::uint8_t>(offset >> 8),
                                      static_cast<std::uint8_t>(offset & 0xFF)));
    }
    const ZipfSampler popularity(hosts.size(), spec.zipf_exponent);

    std::vector<std::uint8_t> buf;
    put_le32(buf, 0xA1B2C3D4);
    put_le16(buf, 2);
    put_le16(buf, 4);
    put_le32(buf, 0);
    put_le32(buf, 0);
    put_le32(buf, synth_snaplen);
    put_le32(buf, 1);
    pcap_out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));

    GroundTruth truth;
    double elapsed_us = 0.0;
    for (std::uint64_t i = 0; i < spec.packet_count; ++i) {
        const std::size_t s = popularity(rng);
        std::size_t d = popularity(rng);
        while (d == s) d = popularity(rng);
        const IpAddress& src = hosts[s];
        const IpAddress& dst = hosts[d];
        ++truth[{src, dst}];

        elapsed_us += rng.exponential(spec.mean_interarrival_us);
        const std::uint64_t ts = spec.start_time_us + static_cast<std::uint64_t>(elapsed_us);
        const auto payload_len = static_cast<std::uint32_t>(rng.between(spec.payload_min, spec.payload_max));
        const auto sport = static_cast<std::uint16_t>(rng.between(49152, 65535));
        const auto dport = service_ports[rng.between(0, service_ports.size() - 1)];
        const std::uint32_t frame_len = 14 + 20 + 8 + payload_len;

        buf.clear();
        put_le32(buf, static_cast<std::uint32_t>(ts / 1'000'000));
        put_le32(buf, static_cast<std::uint32_t>(ts % 1'000'000));
        put_le32(buf, frame_len);
        put_le32(buf, frame_len);

        put_mac(buf, dst);
        put_mac(buf, src);
        put_be16(buf, 0x0800);

        const std::size_t ip_at = buf.size();
        buf.insert(buf.end(), {0x45, 0x00});
        put_be16(buf, static_cast<std::uint16_t>(20 + 8 + payload_len));
        put_be16(buf, static_cast<std::uint16_t>(i & 0xFFFF));
        put_be16(buf, 0x4000);
        buf.insert(buf.end(), {64, 17, 0, 0});
        buf.insert(buf.end(), src.bytes().begin(), src.bytes().end());
        buf.insert(buf.end(), dst.bytes().begin(), dst.bytes().end());
        const std::uint16_t csum = ipv4_checksum(buf.data() + ip_at);
        buf[ip_at + 10] = static_cast<std::uint8_t>(csum >> 8);
        buf[ip_at + 11] = static_cast<std::uint8_t>(csum);

        put_be16(buf, sport);
        put_be16(buf, dport);
        put_be16(buf, static_cast<std::uint16_t>(8 + payload_len));
        put_be16(buf, 0);

        for (std::uint32_t k = 0; k < payload_len; k += 8) {
            const std::uint64_t r = rng.bits();
            for (std::uint32_t j = 0; j < 8 && k + j < payload_len; ++j) {
                buf.push_back(static_cast<std::uint8_t>(r >> (8 * j)));
            }
        }
        pcap_out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    if (!pcap_out) throw Error(Errc::Io, "failed writing synthetic capture");
    return truth;
}

void write_ground_truth(std::ostream& os, const GroundTruth& truth) {
    std::uint64_t total = 0;
    for (const auto& [pair, n] : truth) {
        os << format_ip(pair.first) << ' ' << format_ip(pair.second) << ' ' << n << '\n';
        total += n;
    }
    os << "total " << total << '\n';
}

}  // namespace tmsensor
