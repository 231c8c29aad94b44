#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vimguard/media.hpp"

namespace vimguard::tokenizer {

/// Patchified modality tokens, [n_tokens x token_dim] row-major, normalized
/// per token set: value = (raw - norm_mean) / norm_scale, where norm_mean is
/// the mean of all raw values and norm_scale the max absolute deviation from
/// it (1 when the input is constant). Stats are kept so reassembly is exact.
struct TokenSet {
    std::vector<float> tokens;
    int n_tokens = 0;
    int token_dim = 0;
    std::vector<int> grid;        // (t,h,w) tiles for video, (f,t) tiles for audio
    std::vector<int> patch_shape; // (t,h,w) or (f,t)
    int channels = 1;             // 3 for video
    float norm_mean = 0.0f;
    float norm_scale = 1.0f;

    const float* row(int i) const { return tokens.data() + static_cast<size_t>(i) * token_dim; }
    float* row(int i) { return tokens.data() + static_cast<size_t>(i) * token_dim; }
};

/// Seeded visible/masked partition of token indices.
struct MaskPlan {
    int n_tokens = 0;
    std::vector<int> masked;  // sorted
    std::vector<int> visible; // sorted
    double ratio = 0.0;
    uint64_t seed = 0;
};

/// Tile a frame stack into t x h x w x 3 cubes. Frame count, height and width
/// must be divisible by the tube dims. Cube values flatten time-major, then
/// row, column, channel.
TokenSet tubify(const std::vector<media::Image>& frames, int t, int h, int w);

/// Inverse of tubify (uses the stored normalization stats; exact after the
/// round back to uint8).
std::vector<media::Image> reconstruct_frames(const TokenSet& ts);

/// Tile a spectrogram into f x t patches. Mel bins must be divisible by f;
/// time frames are edge-replicated up to a multiple of t.
TokenSet patchify_spectrogram(const media::Spectrogram& spec, int f, int t);

/// Inverse of patchify (returns the padded [bins x frames'] value matrix).
std::vector<float> reconstruct_spectrogram(const TokenSet& ts, int* bins_out, int* frames_out);

/// Uniform random subset without replacement; |masked| == round(ratio * n).
/// Deterministic for fixed (n_tokens, ratio, seed).
MaskPlan make_mask(int n_tokens, double ratio, uint64_t seed);

/// Row partition preserving within-partition index order. Returns
/// (visible tokens, masked reconstruction targets); both keep the source
/// normalization stats, neither keeps a grid.
std::pair<TokenSet, TokenSet> split_tokens(const TokenSet& ts, const MaskPlan& plan);

} // namespace vimguard::tokenizer
