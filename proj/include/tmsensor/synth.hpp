#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <utility>
#include <vector>

#include "tmsensor/pcap.hpp"

namespace tmsensor {

/// Parameters of a synthetic exercise-like capture.
///
/// Hosts are distinct addresses drawn from 10.0.0.0/16. Each packet picks a
/// source and a distinct destination by Zipf popularity over the hosts, and
/// is written as an Ethernet/IPv4/UDP frame with a uniformly random payload
/// length. Timestamps accumulate exponentially distributed gaps.
///
/// Randomness comes from std::mt19937_64 seeded with `seed`; all
/// distribution transforms are implemented here so the output is
/// byte-identical on every platform.
struct SynthSpec {
    std::uint32_t host_count = 256;
    std::uint64_t packet_count = 200'000;
    double zipf_exponent = 1.2;
    std::uint32_t payload_min = 64;
    std::uint32_t payload_max = 600;
    std::uint64_t seed = 1;
    std::uint64_t start_time_us = 1'750'000'000'000'000;
    double mean_interarrival_us = 18'000.0;
};

/// Throws Errc::SpecInvalid.
void validate(const SynthSpec& spec);

using AddressPair = std::pair<IpAddress, IpAddress>;
/// Exact (src, dst) packet counts, ordered by src then dst.
using GroundTruth = std::map<AddressPair, std::uint64_t>;

/// Writes the capture to `pcap_out` and returns its ground truth.
GroundTruth synthesize(const SynthSpec& spec, std::ostream& pcap_out);

/// `<src_ip> <dst_ip> <count>` per pair, then `total <packet_count>`.
void write_ground_truth(std::ostream& os, const GroundTruth& truth);

std::string format_ip(const IpAddress& ip);

}  // namespace tmsensor
