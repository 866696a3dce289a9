#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <random>

#include "tmsensor/sensor.hpp"

namespace tmsensor {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t us_per_hour = 3'600'000'000ull;

std::string hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

fs::path temp_name(const fs::path& out_dir, const fs::path& pcap_path) {
    std::random_device rd;
    const std::uint64_t tag = static_cast<std::uint64_t>(rd()) << 32 | rd();
    std::array<std::uint8_t, 8> raw{};
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<std::uint8_t>(tag >> (8 * i));
    return out_dir / ("." + pcap_path.filename().string() + "." + hex(raw) + ".partial");
}

// Removes the temporary output unless released.
struct TempFile {
    fs::path path;
    bool keep = false;
    ~TempFile() {
        if (!keep) {
            std::error_code ec;
            fs::remove(path, ec);
        }
    }
};

}  // namespace

std::string sha256_file_hex(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error(Errc::Io, "sha256 init failed");
    }
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    if (in.bad()) throw Error(Errc::Io, "read failed on " + path.string());
    std::array<std::uint8_t, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    return hex({md.data(), len});
}

ConversionResult convert_capture(const AnonKey& key, std::uint32_t window_size,
                                 const fs::path& pcap_path, const fs::path& out_dir,
                                 const std::string& prefix) {
    std::ifstream in(pcap_path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + pcap_path.string());

    TempFile temp{temp_name(out_dir, pcap_path)};
    std::ofstream out(temp.path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot create " + temp.path.string());

    ConversionResult result;
    PcapReader reader(in);
    WindowBuilder builder(key, window_size);
    TmfWriter writer(out);
    std::optional<std::uint64_t> first_ts;

    while (auto packet = reader.next()) {
        if (!first_ts) first_ts = packet->timestamp_us;
        if (auto m = builder.add(*packet)) writer.write(*m);
    }
    if (auto m = builder.finish()) writer.write(*m);
    out.close();
    if (!out) throw Error(Errc::Io, "failed writing " + temp.path.string());

    result.stats = reader.stats();
    result.pcap_bytes = result.stats.bytes_read;
    result.windows = writer.blocks_written();
    if (!first_ts) return result;

    result.tmf_bytes = writer.bytes_written();
    const std::uint64_t hour = *first_ts / us_per_hour;
    // Hard links never replace an existing name, so the first free seq wins
    // even against a concurrent converter.
    for (std::uint32_t seq = 0;; ++seq) {
        const fs::path target = out_dir / tmf_file_name(prefix, hour, seq);
        std::error_code ec;
        fs::create_hard_link(temp.path, target, ec);
        if (!ec) {
            result.tmf_path = target;
            break;
        }
        if (ec != std::errc::file_exists) {
            throw Error(Errc::Io, "cannot create " + target.string() + ": " + ec.message());
        }
    }
    return result;
}

}  // namespace tmsensor
