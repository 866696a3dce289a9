#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tmsensor {

enum class Errc {
    // pcap
    BadMagic,
    PcapngUnsupported,
    UnsupportedLinkType,
    TruncatedHeader,
    // anonymizer
    LengthMismatch,
    EntropyUnavailable,
    BadKeyFile,
    // traffic matrix / tmf
    KeyMismatch,
    WindowSizeMismatch,
    MixedKeys,
    MixedWindowSizes,
    SinkFailure,
    UnknownVersion,
    UnknownScheme,
    CorruptPayload,
    InvariantViolation,
    DivisionByZeroGuard,
    // synth
    SpecInvalid,
    // sensor
    ConfigInvalid,
    JournalCorrupt,
    Exists,
    Io,
};

std::string_view to_string(Errc code) noexcept;

/// Exception type thrown by every tmsensor module. `code()` identifies the
/// failure class; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace tmsensor
