#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "tmsensor/anonymizer.hpp"
#include "tmsensor/pcap.hpp"

namespace tmsensor {

struct MatrixEntry {
    AnonId row;  // source
    AnonId col;  // destination
    std::uint64_t count = 0;

    friend bool operator==(const MatrixEntry&, const MatrixEntry&) = default;
};

/// Sparse source x destination packet counts for one window.
///
/// Entries are sorted by (row, col) without duplicates and every count is at
/// least one. The counts sum to packet_count. Matrices produced by
/// WindowBuilder also satisfy packet_count <= window_size; merged matrices
/// may exceed it.
struct TrafficMatrix {
    std::uint32_t window_size = 0;
    std::uint64_t packet_count = 0;
    std::uint64_t start_time_us = 0;
    std::uint64_t end_time_us = 0;
    KeyId key_id{};
    std::vector<MatrixEntry> entries;

    bool empty() const noexcept { return packet_count == 0; }
    bool partial() const noexcept { return packet_count < window_size; }

    friend bool operator==(const TrafficMatrix&, const TrafficMatrix&) = default;
};

inline constexpr std::uint32_t default_window_size = 1u << 17;
inline constexpr std::uint32_t min_configured_window = 1u << 10;
inline constexpr std::uint32_t max_configured_window = 1u << 24;

/// True for the power-of-two window sizes accepted by the sensor configuration.
bool is_configurable_window(std::uint64_t window_size) noexcept;

/// Throws Errc::InvariantViolation when `m` breaks a TrafficMatrix invariant.
/// The packet_count <= window_size bound is only checked when `from_builder`.
void validate(const TrafficMatrix& m, bool from_builder = false);

/// Incremental window aggregation. Feed packets in stream order; a matrix is
/// returned each time window_size packets have accumulated. finish() yields
/// the trailing partial window, if any.
class WindowBuilder {
public:
    WindowBuilder(const AnonKey& key, std::uint32_t window_size);

    std::optional<TrafficMatrix> add(const PacketRecord& packet);
    std::optional<TrafficMatrix> finish();

    std::uint64_t pending() const noexcept { return count_; }

private:
    struct PairHash {
        std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const noexcept {
            return std::hash<std::uint64_t>{}(p.first * 0x9E3779B97F4A7C15ull ^ p.second);
        }
    };
    struct AddressHash {
        std::size_t operator()(const IpAddress& a) const noexcept;
    };

    AnonId pseudonym(const IpAddress& ip);
    TrafficMatrix flush();

    const AnonKey& key_;
    std::uint32_t window_size_;
    std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t, PairHash> cells_;
    std::unordered_map<IpAddress, AnonId, AddressHash> cache_;
    std::uint64_t count_ = 0;
    std::uint64_t start_ = 0;
    std::uint64_t end_ = 0;
};

std::vector<TrafficMatrix> build_windows(std::span<const PacketRecord> packets, const AnonKey& key,
                                         std::uint32_t window_size);

/// Element-wise sum. Requires equal key_id (Errc::KeyMismatch) and
/// window_size (Errc::WindowSizeMismatch). An empty matrix is the identity.
TrafficMatrix merge(const TrafficMatrix& a, const TrafficMatrix& b);

TrafficMatrix merge_all(std::span<const TrafficMatrix> ms);

}  // namespace tmsensor
