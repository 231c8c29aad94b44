#pragma once

#include <stdexcept>
#include <string>

namespace vimguard {

// Stable error identities. Tests assert on the code, not the message text.
enum class Err {
    MissingFile,
    BadMagic,
    BadHeader,
    FrameSizeMismatch,
    BadAudioFormat,
    DurationMismatch,
    AudioTooShort,
    IndivisibleShape,
    PlanMismatch,
    ShapeMismatch,
    NonFiniteActivation,
    SingleClassDataset,
    DimMismatch,
    SourceMismatch,
    DegenerateRank,
    DuplicateId,
    EmptyCorpus,
    UnknownDoc,
    EmptySummary,
    UnparseableVerdict,
    TransportError,
    MissingOutcome,
    SingleClass,
    ConfigError,
    DecoderError,
    IoError,
};

class VgError : public std::runtime_error {
public:
    VgError(Err code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Err code() const { return code_; }

private:
    Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) {
    throw VgError(code, msg);
}

inline void require(bool cond, Err code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

} // namespace vimguard
