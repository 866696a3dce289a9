#include "tmsensor/anonymizer.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>
#include <openssl/sha.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace tmsensor {

namespace {
constexpr std::array<std::uint8_t, 4> key_magic{'A', 'N', 'K', '1'};
constexpr std::uint8_t key_format_version = 1;
}  // namespace

KeyId compute_key_id(std::span<const std::uint8_t> key_bytes) {
    std::array<std::uint8_t, SHA256_DIGEST_LENGTH> digest{};
    SHA256(key_bytes.data(), key_bytes.size(), digest.data());
    KeyId id{};
    std::copy_n(digest.begin(), id.size(), id.begin());
    return id;
}

std::string key_id_hex(const KeyId& id) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (auto b : id) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

AnonKey::AnonKey(const Bytes& bytes) : bytes_(bytes), key_id_(compute_key_id(bytes_)) {}

AnonKey::AnonKey(std::span<const std::uint8_t> bytes) : bytes_{}, key_id_{} {
    if (bytes.size() != size) {
        throw Error(Errc::LengthMismatch,
                    "key must be 32 bytes, got " + std::to_string(bytes.size()));
    }
    std::copy(bytes.begin(), bytes.end(), bytes_.begin());
    key_id_ = compute_key_id(bytes_);
}

AnonId anonymize_ip(const AnonKey& key, IpVersion version, std::span<const std::uint8_t> ip) {
    const std::size_t want = version == IpVersion::v4 ? 4 : 16;
    if (ip.size() != want) {
        throw Error(Errc::LengthMismatch, "IPv" + std::to_string(static_cast<int>(version)) +
                                              " address needs " + std::to_string(want) +
                                              " bytes, got " + std::to_string(ip.size()));
    }
    std::array<std::uint8_t, 17> message{};
    message[0] = version == IpVersion::v4 ? 0x04 : 0x06;
    std::copy(ip.begin(), ip.end(), message.begin() + 1);

    std::array<std::uint8_t, EVP_MAX_MD_SIZE> mac{};
    unsigned int mac_len = 0;
    HMAC(EVP_sha256(), key.bytes().data(), static_cast<int>(key.bytes().size()), message.data(),
         1 + ip.size(), mac.data(), &mac_len);

    std::uint64_t value = 0;
    for (std::size_t i = 0; i < 8; ++i) value = value << 8 | mac[i];
    return AnonId{value};
}

AnonKey generate_key() {
    AnonKey::Bytes bytes{};
    if (RAND_bytes(bytes.data(), static_cast<int>(bytes.size())) != 1) {
        throw Error(Errc::EntropyUnavailable, "system random source failed");
    }
    return AnonKey(bytes);
}

std::array<std::uint8_t, key_file_size> encode_key_file(const AnonKey& key) {
    std::array<std::uint8_t, key_file_size> out{};
    std::copy(key_magic.begin(), key_magic.end(), out.begin());
    out[4] = key_format_version;
    std::copy(key.bytes().begin(), key.bytes().end(), out.begin() + 8);
    return out;
}

AnonKey decode_key_file(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != key_file_size) {
        throw Error(Errc::BadKeyFile, "key file must be 40 bytes, got " + std::to_string(bytes.size()));
    }
    if (!std::equal(key_magic.begin(), key_magic.end(), bytes.begin())) {
        throw Error(Errc::BadKeyFile, "missing ANK1 magic");
    }
    if (bytes[4] != key_format_version) {
        throw Error(Errc::BadKeyFile, "unsupported key file version " + std::to_string(bytes[4]));
    }
    if (bytes[5] != 0 || bytes[6] != 0 || bytes[7] != 0) {
        throw Error(Errc::BadKeyFile, "reserved bytes are not zero");
    }
    return AnonKey(bytes.subspan(8, AnonKey::size));
}

void save_key(const AnonKey& key, const std::filesystem::path& path) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0600);
    if (fd < 0) {
        if (errno == EEXIST) throw Error(Errc::Exists, path.string() + " already exists");
        throw Error(Errc::Io, path.string() + ": " + std::strerror(errno));
    }
    const auto encoded = encode_key_file(key);
    std::size_t written = 0;
    while (written < encoded.size()) {
        const ssize_t n = ::write(fd, encoded.data() + written, encoded.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            const std::string reason = std::strerror(errno);
            ::close(fd);
            ::unlink(path.c_str());
            throw Error(Errc::Io, path.string() + ": " + reason);
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0 || ::close(fd) != 0) {
        throw Error(Errc::Io, path.string() + ": " + std::strerror(errno));
    }
}

AnonKey load_key(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open key file " + path.string());
    std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(in), {});
    return decode_key_file(bytes);
}

}  // namespace tmsensor
