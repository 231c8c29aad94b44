#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vimguard/claim_detect.hpp"
#include "vimguard/config.hpp"
#include "vimguard/mae.hpp"
#include "vimguard/verify.hpp"

namespace vimguard::pipeline {

enum class FinalDecision {
    harmless_no_claim,
    harmless_verified,
    misinformative,
    unverifiable_harmless,
};

const char* decision_name(FinalDecision d);

/// Final classification for one bundle. `decision` is empty only when `error`
/// is set (the bundle failed to load or its client calls failed); a verdict
/// is present exactly when the claim gate passed.
struct Outcome {
    std::string bundle_id;
    std::optional<FinalDecision> decision;
    double claim_probability = 0.0;
    std::optional<verify::Verdict> verdict;
    verify::ApiTally api_calls;
    double wall_time_ms = 0.0;
    std::optional<std::string> error;
};

/// Canonical JSON line for the outcome stream. Timing is opt-in so streams
/// are byte-reproducible by default.
std::string outcome_to_json(const Outcome& o, bool with_timings = false);
Outcome outcome_from_json(const std::string& line);

/// JSONL manifest row: {"bundle_id", "dir", "label", "hashtags", "true_label"}.
struct ManifestEntry {
    std::string bundle_id;
    std::string dir;
    std::optional<std::string> label; // claim | no_claim
    std::vector<std::string> hashtags;
    std::optional<std::string> true_label; // misinformative | not_misinformative
};

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

struct Models {
    const mae::MaeModel* video = nullptr;
    const mae::MaeModel* audio = nullptr;
    const claim::ClaimHead* head = nullptr;
};

struct CheckOptions {
    Config config;
    int jobs = 1;
    bool use_cache = false;
    std::filesystem::path cache_dir;
};

/// Embeds one loaded bundle with both encoders and fuses the result.
mae::Embedding embed_bundle(const media::SfvBundle& bundle, const Models& models,
                            const Config& cfg);

/// The gated two-stage check: embed -> fuse -> decide; claim-free bundles stop
/// with zero api calls, the rest run claim verification and map
/// {true_claims -> harmless_verified, false_claims -> misinformative,
/// unverifiable -> unverifiable_harmless}.
Outcome check_bundle(const media::SfvBundle& bundle, const Models& models,
                     verify::TextClient& client, const retrieval::Index& index, const Config& cfg,
                     verify::CallCounter* counter = nullptr);

struct BatchResult {
    std::vector<Outcome> outcomes; // manifest order
    verify::ApiTally total_calls;
    int errors = 0;
};

/// Worker pool over manifest entries; per-bundle failures are recorded in the
/// outcome stream and never abort the batch. Results are in manifest order
/// regardless of scheduling.
BatchResult check_batch(const std::vector<ManifestEntry>& manifest, const Models& models,
                        verify::TextClient& client, const retrieval::Index& index,
                        const CheckOptions& opts, verify::CallCounter* counter = nullptr);

} // namespace vimguard::pipeline
