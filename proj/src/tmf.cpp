#include "tmsensor/tmf.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace tmsensor {

namespace {

constexpr std::array<std::uint8_t, 4> tmf_magic{'G', 'T', 'M', '1'};
constexpr std::size_t max_varint_len = 10;

template <typename T>
void store_le(std::uint8_t* p, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

template <typename T>
T load_le(const std::uint8_t* p) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
    return v;
}

TmfHeader header_for(const TrafficMatrix& m, const TmfOptions& options) {
    TmfHeader h;
    h.flags = options.deflate ? tmf_flag_deflate : 0;
    h.window_size = m.window_size;
    h.packet_count = m.packet_count;
    h.start_time_us = m.start_time_us;
    h.end_time_us = m.end_time_us;
    h.key_id = m.key_id;
    h.entry_count = m.entries.size();
    return h;
}

// Returns false on clean end of input; throws when a read stops part way.
bool read_exact(std::istream& in, std::uint8_t* dst, std::size_t n, const char* what) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0 && n > 0) return false;
    if (got < n) throw Error(Errc::CorruptPayload, std::string("truncated ") + what);
    return true;
}

std::vector<std::uint8_t> read_payload(std::istream& in, std::uint64_t len) {
    std::vector<std::uint8_t> out;
    constexpr std::size_t chunk = 1u << 20;
    while (out.size() < len) {
        const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(chunk, len - out.size()));
        const std::size_t at = out.size();
        out.resize(at + n);
        if (!read_exact(in, out.data() + at, n, "payload")) {
            throw Error(Errc::CorruptPayload, "truncated payload");
        }
    }
    return out;
}

TrafficMatrix decode_block(const TmfHeader& h, std::span<const std::uint8_t> payload) {
    std::vector<std::uint8_t> inflated;
    if (h.flags & tmf_flag_deflate) {
        const std::uint64_t cap = h.entry_count * 3 * max_varint_len;
        if (h.entry_count > std::numeric_limits<std::uint64_t>::max() / (3 * max_varint_len) ||
            cap > std::numeric_limits<std::size_t>::max()) {
            throw Error(Errc::CorruptPayload, "entry count out of range");
        }
        inflated = inflate_raw(payload, static_cast<std::size_t>(cap));
        payload = inflated;
    }
    TrafficMatrix m;
    m.window_size = h.window_size;
    m.packet_count = h.packet_count;
    m.start_time_us = h.start_time_us;
    m.end_time_us = h.end_time_us;
    m.key_id = h.key_id;
    m.entries = decode_entries(payload, h.entry_count);
    validate(m);
    return m;
}

}  // namespace

std::array<std::uint8_t, tmf_header_size> encode_header(const TmfHeader& h) {
    std::array<std::uint8_t, tmf_header_size> out{};
    std::copy(tmf_magic.begin(), tmf_magic.end(), out.begin());
    store_le(out.data() + 4, h.format_version);
    store_le(out.data() + 6, h.flags);
    store_le(out.data() + 8, h.window_size);
    store_le(out.data() + 12, h.packet_count);
    store_le(out.data() + 20, h.start_time_us);
    store_le(out.data() + 28, h.end_time_us);
    std::copy(h.key_id.begin(), h.key_id.end(), out.begin() + 36);
    out[44] = h.anon_scheme;
    store_le(out.data() + 48, h.entry_count);
    store_le(out.data() + 56, h.payload_len);
    return out;
}

TmfHeader decode_header(std::span<const std::uint8_t, tmf_header_size> b) {
    if (!std::equal(tmf_magic.begin(), tmf_magic.end(), b.begin())) {
        throw Error(Errc::BadMagic, "not a traffic matrix file");
    }
    TmfHeader h;
    h.format_version = load_le<std::uint16_t>(b.data() + 4);
    if (h.format_version != tmf_format_version) {
        throw Error(Errc::UnknownVersion, "format version " + std::to_string(h.format_version));
    }
    h.flags = load_le<std::uint16_t>(b.data() + 6);
    if (h.flags & ~tmf_flag_deflate) {
        throw Error(Errc::InvariantViolation, "reserved flag bits set");
    }
    h.window_size = load_le<std::uint32_t>(b.data() + 8);
    h.packet_count = load_le<std::uint64_t>(b.data() + 12);
    h.start_time_us = load_le<std::uint64_t>(b.data() + 20);
    h.end_time_us = load_le<std::uint64_t>(b.data() + 28);
    std::copy_n(b.begin() + 36, h.key_id.size(), h.key_id.begin());
    h.anon_scheme = b[44];
    if (h.anon_scheme != anon_scheme_hmac_sha256) {
        throw Error(Errc::UnknownScheme, "anonymization scheme " + std::to_string(h.anon_scheme));
    }
    if (b[45] != 0 || b[46] != 0 || b[47] != 0) {
        throw Error(Errc::InvariantViolation, "reserved header bytes are not zero");
    }
    h.entry_count = load_le<std::uint64_t>(b.data() + 48);
    h.payload_len = load_le<std::uint64_t>(b.data() + 56);
    return h;
}

void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<std::uint8_t>(v | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<std::uint8_t>(v));
}

std::optional<std::uint64_t> get_varint(std::span<const std::uint8_t> in, std::size_t& pos) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < max_varint_len; ++i) {
        if (pos >= in.size()) return std::nullopt;
        const std::uint8_t byte = in[pos++];
        if (i == max_varint_len - 1 && byte > 1) return std::nullopt;
        v |= static_cast<std::uint64_t>(byte & 0x7F) << (7 * i);
        if (!(byte & 0x80)) return v;
    }
    return std::nullopt;
}

std::vector<std::uint8_t> encode_entries(std::span<const MatrixEntry> entries) {
    std::vector<std::uint8_t> out;
    out.reserve(entries.size() * 12);
    std::uint64_t prev_row = 0;
    for (const auto& e : entries) {
        put_varint(out, e.row.value - prev_row);
        put_varint(out, e.col.value);
        put_varint(out, e.count);
        prev_row = e.row.value;
    }
    return out;
}

std::vector<MatrixEntry> decode_entries(std::span<const std::uint8_t> payload,
                                        std::uint64_t entry_count) {
    // Every entry takes at least three bytes.
    if (entry_count > payload.size() / 3) {
        throw Error(Errc::CorruptPayload, "payload too short for " + std::to_string(entry_count) +
                                              " entries");
    }
    std::vector<MatrixEntry> out;
    out.reserve(static_cast<std::size_t>(entry_count));
    std::size_t pos = 0;
    std::uint64_t row = 0;
    for (std::uint64_t i = 0; i < entry_count; ++i) {
        const auto delta = get_varint(payload, pos);
        const auto col = get_varint(payload, pos);
        const auto count = get_varint(payload, pos);
        if (!delta || !col || !count) throw Error(Errc::CorruptPayload, "bad varint");
        if (*delta > std::numeric_limits<std::uint64_t>::max() - row) {
            throw Error(Errc::CorruptPayload, "row overflow");
        }
        row += *delta;
        out.push_back({AnonId{row}, AnonId{*col}, *count});
    }
    if (pos != payload.size()) throw Error(Errc::CorruptPayload, "trailing payload bytes");
    return out;
}

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> in) {
    z_stream zs{};
    if (deflateInit2(&zs, 9, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        throw Error(Errc::SinkFailure, "deflateInit2 failed");
    }
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw Error(Errc::SinkFailure, "deflate did not finish");
    out.resize(produced);
    return out;
}

std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> in, std::size_t max_out) {
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK) throw Error(Errc::CorruptPayload, "inflateInit2 failed");
    std::vector<std::uint8_t> out;
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    // One byte beyond the cap lets an oversized stream be detected.
    const std::size_t limit = max_out + 1;
    while (rc == Z_OK) {
        const std::size_t at = out.size();
        const std::size_t grow = std::min<std::size_t>(std::max<std::size_t>(at, 4096), limit - at);
        if (grow == 0) break;
        out.resize(at + grow);
        zs.next_out = out.data() + at;
        zs.avail_out = static_cast<uInt>(grow);
        rc = inflate(&zs, Z_NO_FLUSH);
        out.resize(at + grow - zs.avail_out);
        if (rc == Z_BUF_ERROR && zs.avail_in == 0) break;
        if (rc == Z_BUF_ERROR) rc = Z_OK;
    }
    const bool clean = rc == Z_STREAM_END && zs.avail_in == 0 && out.size() <= max_out;
    inflateEnd(&zs);
    if (!clean) throw Error(Errc::CorruptPayload, "deflate stream is damaged");
    return out;
}

TmfWriter::TmfWriter(std::ostream& sink, TmfOptions options) : sink_(sink), options_(options) {}

void TmfWriter::write(const TrafficMatrix& m) {
    if (key_id_) {
        if (*key_id_ != m.key_id) throw Error(Errc::MixedKeys, "matrices use different keys");
        if (window_size_ != m.window_size) {
            throw Error(Errc::MixedWindowSizes, "matrices use different window sizes");
        }
    } else {
        key_id_ = m.key_id;
        window_size_ = m.window_size;
    }
    auto payload = encode_entries(m.entries);
    if (options_.deflate) payload = deflate_raw(payload);
    TmfHeader h = header_for(m, options_);
    h.payload_len = payload.size();
    const auto header = encode_header(h);
    sink_.write(reinterpret_cast<const char*>(header.data()), header.size());
    sink_.write(reinterpret_cast<const char*>(payload.data()),
                static_cast<std::streamsize>(payload.size()));
    if (!sink_) throw Error(Errc::SinkFailure, "write to sink failed");
    bytes_ += header.size() + payload.size();
    ++blocks_;
}

std::uint64_t write_tmf(std::span<const TrafficMatrix> matrices, std::ostream& sink,
                        TmfOptions options) {
    TmfWriter writer(sink, options);
    for (const auto& m : matrices) writer.write(m);
    return writer.bytes_written();
}

std::vector<std::uint8_t> encode_tmf(std::span<const TrafficMatrix> matrices, TmfOptions options) {
    std::ostringstream os;
    write_tmf(matrices, os, options);
    const std::string s = std::move(os).str();
    return {s.begin(), s.end()};
}

std::vector<TrafficMatrix> read_tmf(std::istream& source) {
    std::vector<TrafficMatrix> out;
    for (;;) {
        std::array<std::uint8_t, tmf_header_size> raw{};
        source.read(reinterpret_cast<char*>(raw.data()), raw.size());
        const auto got = static_cast<std::size_t>(source.gcount());
        if (got == 0 && !out.empty()) break;
        if (got < raw.size()) {
            if (out.empty()) throw Error(Errc::BadMagic, "input too short for a TMF header");
            throw Error(Errc::CorruptPayload, "truncated block header");
        }
        const TmfHeader h = decode_header(raw);
        if (!out.empty() && h.key_id != out.front().key_id) {
            throw Error(Errc::InvariantViolation, "blocks use different keys");
        }
        if (!out.empty() && h.window_size != out.front().window_size) {
            throw Error(Errc::InvariantViolation, "blocks use different window sizes");
        }
        const auto payload = read_payload(source, h.payload_len);
        out.push_back(decode_block(h, payload));
    }
    return out;
}

std::vector<TrafficMatrix> decode_tmf(std::span<const std::uint8_t> bytes) {
    std::istringstream in(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    return read_tmf(in);
}

std::vector<TrafficMatrix> read_tmf_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    return read_tmf(in);
}

std::vector<TmfHeader> scan_tmf(std::istream& source) {
    std::vector<TmfHeader> out;
    for (;;) {
        std::array<std::uint8_t, tmf_header_size> raw{};
        if (!read_exact(source, raw.data(), raw.size(), "block header")) {
            if (out.empty()) throw Error(Errc::BadMagic, "empty input");
            break;
        }
        out.push_back(decode_header(raw));
        source.ignore(static_cast<std::streamsize>(out.back().payload_len));
        if (static_cast<std::uint64_t>(source.gcount()) != out.back().payload_len) {
            throw Error(Errc::CorruptPayload, "truncated payload");
        }
    }
    return out;
}

CompressionReport compression_report(std::uint64_t pcap_bytes, std::uint64_t tmf_bytes) {
    if (tmf_bytes == 0) throw Error(Errc::DivisionByZeroGuard, "no traffic matrix bytes");
    return {pcap_bytes, tmf_bytes};
}

std::string tmf_file_name(const std::string& prefix, std::uint64_t epoch_hour, std::uint32_t seq) {
    return prefix + "-" + std::to_string(epoch_hour) + "-" + std::to_string(seq) + ".tmf";
}

}  // namespace tmsensor
