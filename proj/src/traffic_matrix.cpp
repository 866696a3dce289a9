#include "tmsensor/traffic_matrix.hpp"

#include <algorithm>
#include <string>
#include <tuple>

namespace tmsensor {

namespace {
// Bound on memoized pseudonyms before the cache is dropped and rebuilt.
constexpr std::size_t max_cached_addresses = 1u << 20;
}  // namespace

bool is_configurable_window(std::uint64_t window_size) noexcept {
    return window_size >= min_configured_window && window_size <= max_configured_window &&
           (window_size & (window_size - 1)) == 0;
}

void validate(const TrafficMatrix& m, bool from_builder) {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const auto& e = m.entries[i];
        if (e.count == 0) throw Error(Errc::InvariantViolation, "zero-count entry");
        if (i > 0) {
            const auto& p = m.entries[i - 1];
            if (!(std::tie(p.row, p.col) < std::tie(e.row, e.col))) {
                throw Error(Errc::InvariantViolation, "entries not strictly sorted");
            }
        }
        total += e.count;
    }
    if (total != m.packet_count) {
        throw Error(Errc::InvariantViolation, "entry counts sum to " + std::to_string(total) +
                                                  ", header says " + std::to_string(m.packet_count));
    }
    if (m.packet_count == 0) {
        if (m.start_time_us != 0 || m.end_time_us != 0) {
            throw Error(Errc::InvariantViolation, "empty matrix with nonzero time range");
        }
    } else if (m.start_time_us > m.end_time_us) {
        throw Error(Errc::InvariantViolation, "start time after end time");
    }
    if (from_builder && m.packet_count > m.window_size) {
        throw Error(Errc::InvariantViolation, "window holds more packets than its size");
    }
}

std::size_t WindowBuilder::AddressHash::operator()(const IpAddress& a) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto b : a.bytes()) h = (h ^ b) * 1099511628211ull;
    return static_cast<std::size_t>(h ^ static_cast<std::uint64_t>(a.version()));
}

WindowBuilder::WindowBuilder(const AnonKey& key, std::uint32_t window_size)
    : key_(key), window_size_(window_size) {
    if (window_size == 0) throw Error(Errc::InvariantViolation, "window size must be at least 1");
}

AnonId WindowBuilder::pseudonym(const IpAddress& ip) {
    if (auto it = cache_.find(ip); it != cache_.end()) return it->second;
    if (cache_.size() >= max_cached_addresses) cache_.clear();
    const AnonId id = anonymize_ip(key_, ip);
    cache_.emplace(ip, id);
    return id;
}

std::optional<TrafficMatrix> WindowBuilder::add(const PacketRecord& packet) {
    const AnonId src = pseudonym(packet.src);
    const AnonId dst = pseudonym(packet.dst);
    ++cells_[{src.value, dst.value}];
    if (count_ == 0) {
        start_ = end_ = packet.timestamp_us;
    } else {
        start_ = std::min(start_, packet.timestamp_us);
        end_ = std::max(end_, packet.timestamp_us);
    }
    if (++count_ == window_size_) return flush();
    return std::nullopt;
}

std::optional<TrafficMatrix> WindowBuilder::finish() {
    if (count_ == 0) return std::nullopt;
    return flush();
}

TrafficMatrix WindowBuilder::flush() {
    TrafficMatrix m;
    m.window_size = window_size_;
    m.packet_count = count_;
    m.start_time_us = start_;
    m.end_time_us = end_;
    m.key_id = key_.key_id();
    m.entries.reserve(cells_.size());
    for (const auto& [cell, n] : cells_) {
        m.entries.push_back({AnonId{cell.first}, AnonId{cell.second}, n});
    }
    std::sort(m.entries.begin(), m.entries.end(), [](const MatrixEntry& a, const MatrixEntry& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    cells_.clear();
    count_ = start_ = end_ = 0;
    return m;
}

std::vector<TrafficMatrix> build_windows(std::span<const PacketRecord> packets, const AnonKey& key,
                                         std::uint32_t window_size) {
    WindowBuilder builder(key, window_size);
    std::vector<TrafficMatrix> out;
    for (const auto& p : packets) {
        if (auto m = builder.add(p)) out.push_back(std::move(*m));
    }
    if (auto m = builder.finish()) out.push_back(std::move(*m));
    return out;
}

TrafficMatrix merge(const TrafficMatrix& a, const TrafficMatrix& b) {
    if (a.key_id != b.key_id) {
        throw Error(Errc::KeyMismatch, key_id_hex(a.key_id) + " vs " + key_id_hex(b.key_id));
    }
    if (a.window_size != b.window_size) {
        throw Error(Errc::WindowSizeMismatch,
                    std::to_string(a.window_size) + " vs " + std::to_string(b.window_size));
    }
    TrafficMatrix out;
    out.window_size = a.window_size;
    out.key_id = a.key_id;
    out.packet_count = a.packet_count + b.packet_count;
    if (a.empty()) {
        out.start_time_us = b.start_time_us;
        out.end_time_us = b.end_time_us;
    } else if (b.empty()) {
        out.start_time_us = a.start_time_us;
        out.end_time_us = a.end_time_us;
    } else {
        out.start_time_us = std::min(a.start_time_us, b.start_time_us);
        out.end_time_us = std::max(a.end_time_us, b.end_time_us);
    }

    out.entries.reserve(a.entries.size() + b.entries.size());
    auto ia = a.entries.begin();
    auto ib = b.entries.begin();
    while (ia != a.entries.end() && ib != b.entries.end()) {
        const auto ka = std::tie(ia->row, ia->col);
        const auto kb = std::tie(ib->row, ib->col);
        if (ka < kb) {
            out.entries.push_back(*ia++);
        } else if (kb < ka) {
            out.entries.push_back(*ib++);
        } else {
            out.entries.push_back({ia->row, ia->col, ia->count + ib->count});
            ++ia;
            ++ib;
        }
    }
    out.entries.insert(out.entries.end(), ia, a.entries.end());
    out.entries.insert(out.entries.end(), ib, b.entries.end());
    return out;
}

TrafficMatrix merge_all(std::span<const TrafficMatrix> ms) {
    if (ms.empty()) return {};
    TrafficMatrix acc = ms.front();
    for (const auto& m : ms.subspan(1)) acc = merge(acc, m);
    return acc;
}

}  // namespace tmsensor
