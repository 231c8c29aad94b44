#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vimguard/media.hpp"
#include "vimguard/pipeline.hpp"
#include "vimguard/retrieval.hpp"

namespace vimguard::synth {

/// Procedural stand-ins for scraped clips. The claim-like family is bright
/// footage of a moving shape with a loud tone; the no-claim family is dim
/// noise with near-silent audio. The families are far apart in pixel/audio
/// space so even untrained encoders separate them.
struct BundleOptions {
    std::string id = "synthetic";
    int n_frames = 16;
    int height = 64;
    int width = 64;
    int fps = 8;
    int sample_rate = 16000;
    double duration_s = 2.0;
    bool claimlike = false;
};

media::SfvBundle make_bundle(uint64_t seed, const BundleOptions& opts);

/// Synthetic corpus for retrieval stress tests: n_docs articles over a closed
/// vocabulary with zipf-ish term frequencies, deterministic per seed.
std::vector<retrieval::Article> make_corpus(int n_docs, uint64_t seed);

/// Small topical corpus matched to the scripted fixture transcripts.
std::vector<retrieval::Article> fixture_corpus();

/// A complete on-disk mock fixture: bundles with scripted transcripts,
/// manifest (labels + true labels), fixture corpus, and a mock-client script
/// whose adjudications key off per-bundle transcript markers.
struct FixtureBatch {
    std::filesystem::path root;
    std::filesystem::path manifest_path;
    std::filesystem::path corpus_path;
    std::filesystem::path script_path;
    std::vector<pipeline::ManifestEntry> manifest;
    int n_claim = 0; // claim-positive bundles (n_false + n_true + n_unverifiable)
};

FixtureBatch make_fixture_batch(const std::filesystem::path& root, int n_false, int n_true,
                                int n_unverifiable, int n_noclaim, uint64_t seed);

} // namespace vimguard::synth
