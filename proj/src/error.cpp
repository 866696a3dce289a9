#include "tmsensor/error.hpp"

namespace tmsensor {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::BadMagic: return "BadMagic";
        case Errc::PcapngUnsupported: return "PcapngUnsupported";
        case Errc::UnsupportedLinkType: return "UnsupportedLinkType";
        case Errc::TruncatedHeader: return "TruncatedHeader";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::EntropyUnavailable: return "EntropyUnavailable";
        case Errc::BadKeyFile: return "BadKeyFile";
        case Errc::KeyMismatch: return "KeyMismatch";
        case Errc::WindowSizeMismatch: return "WindowSizeMismatch";
        case Errc::MixedKeys: return "MixedKeys";
        case Errc::MixedWindowSizes: return "MixedWindowSizes";
        case Errc::SinkFailure: return "SinkFailure";
        case Errc::UnknownVersion: return "UnknownVersion";
        case Errc::UnknownScheme: return "UnknownScheme";
        case Errc::CorruptPayload: return "CorruptPayload";
        case Errc::InvariantViolation: return "InvariantViolation";
        case Errc::DivisionByZeroGuard: return "DivisionByZeroGuard";
        case Errc::SpecInvalid: return "SpecInvalid";
        case Errc::ConfigInvalid: return "ConfigInvalid";
        case Errc::JournalCorrupt: return "JournalCorrupt";
        case Errc::Exists: return "Exists";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace tmsensor
