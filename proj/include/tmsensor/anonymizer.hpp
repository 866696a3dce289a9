#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "tmsensor/pcap.hpp"

namespace tmsensor {

using KeyId = std::array<std::uint8_t, 8>;

/// 32-byte deployment secret. The key id is the first 8 bytes of the
/// unkeyed SHA-256 of the key bytes and is safe to publish.
class AnonKey {
public:
    static constexpr std::size_t size = 32;
    using Bytes = std::array<std::uint8_t, size>;

    explicit AnonKey(const Bytes& bytes);
    explicit AnonKey(std::span<const std::uint8_t> bytes);

    const Bytes& bytes() const noexcept { return bytes_; }
    const KeyId& key_id() const noexcept { return key_id_; }

    friend bool operator==(const AnonKey&, const AnonKey&) = default;

private:
    Bytes bytes_;
    KeyId key_id_;
};

struct AnonId {
    std::uint64_t value = 0;
    friend auto operator<=>(const AnonId&, const AnonId&) = default;
};

/// Pseudonym of `ip` under `key`: the first 8 bytes, big-endian, of
/// HMAC-SHA-256(key, tag || ip) where tag is 0x04 for IPv4 and 0x06 for IPv6.
AnonId anonymize_ip(const AnonKey& key, IpVersion version, std::span<const std::uint8_t> ip);

inline AnonId anonymize_ip(const AnonKey& key, const IpAddress& ip) {
    return anonymize_ip(key, ip.version(), ip.bytes());
}

/// Draws a fresh key from the operating system's entropy source.
AnonKey generate_key();

KeyId compute_key_id(std::span<const std::uint8_t> key_bytes);
std::string key_id_hex(const KeyId& id);

// Key file: "ANK1", version 0x01, three zero bytes, 32 key bytes.
inline constexpr std::size_t key_file_size = 40;

std::array<std::uint8_t, key_file_size> encode_key_file(const AnonKey& key);
AnonKey decode_key_file(std::span<const std::uint8_t> bytes);

/// Writes a key file, refusing to replace an existing one (Errc::Exists).
/// Keep the file readable by its owner only.
void save_key(const AnonKey& key, const std::filesystem::path& path);
AnonKey load_key(const std::filesystem::path& path);

}  // namespace tmsensor
