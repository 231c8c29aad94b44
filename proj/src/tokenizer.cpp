#include "vimguard/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vimguard/error.hpp"
#include "vimguard/rng.hpp"

namespace vimguard::tokenizer {

namespace {

void normalize_in_place(TokenSet& ts) {
    double sum = 0.0;
    for (float v : ts.tokens) sum += v;
    const float mean = ts.tokens.empty() ? 0.0f : static_cast<float>(sum / ts.tokens.size());
    float max_abs = 0.0f;
    for (float v : ts.tokens) max_abs = std::max(max_abs, std::abs(v - mean));
    const float scale = max_abs > 0.0f ? max_abs : 1.0f;
    for (float& v : ts.tokens) v = (v - mean) / scale;
    ts.norm_mean = mean;
    ts.norm_scale = scale;
}

} // namespace

TokenSet tubify(const std::vector<media::Image>& frames, int t, int h, int w) {
    require(!frames.empty(), Err::ShapeMismatch, "no frames to tubify");
    const int num_frames = static_cast<int>(frames.size());
    const int height = frames.front().height;
    const int width = frames.front().width;
    require(t >= 1 && h >= 1 && w >= 1, Err::IndivisibleShape, "tube dims must be >= 1");
    require(num_frames % t == 0, Err::IndivisibleShape, "frame count not divisible by tube t");
    require(height % h == 0, Err::IndivisibleShape, "height not divisible by tube h");
    require(width % w == 0, Err::IndivisibleShape, "width not divisible by tube w");

    const int tt = num_frames / t, th = height / h, tw = width / w;
    TokenSet ts;
    ts.grid = {tt, th, tw};
    ts.patch_shape = {t, h, w};
    ts.channels = 3;
    ts.n_tokens = tt * th * tw;
    ts.token_dim = t * h * w * 3;
    ts.tokens.resize(static_cast<size_t>(ts.n_tokens) * ts.token_dim);

    for (int ti = 0; ti < tt; ++ti) {
        for (int hi = 0; hi < th; ++hi) {
            for (int wi = 0; wi < tw; ++wi) {
                const int token = (ti * th + hi) * tw + wi;
                float* dst = ts.row(token);
                size_t k = 0;
                for (int dt = 0; dt < t; ++dt) {
                    const media::Image& img = frames[ti * t + dt];
                    for (int dy = 0; dy < h; ++dy) {
                        for (int dx = 0; dx < w; ++dx) {
                            for (int c = 0; c < 3; ++c)
                                dst[k++] = static_cast<float>(
                                    img.at(hi * h + dy, wi * w + dx, c));
                        }
                    }
                }
            }
        }
    }
    normalize_in_place(ts);
    return ts;
}

std::vector<media::Image> reconstruct_frames(const TokenSet& ts) {
    require(ts.grid.size() == 3 && ts.patch_shape.size() == 3 && ts.channels == 3,
            Err::ShapeMismatch, "token set is not a video tiling");
    const int tt = ts.grid[0], th = ts.grid[1], tw = ts.grid[2];
    const int t = ts.patch_shape[0], h = ts.patch_shape[1], w = ts.patch_shape[2];

    std::vector<media::Image> frames(static_cast<size_t>(tt) * t);
    for (auto& img : frames) {
        img.height = th * h;
        img.width = tw * w;
        img.rgb.assign(static_cast<size_t>(img.height) * img.width * 3, 0);
    }
    for (int ti = 0; ti < tt; ++ti) {
        for (int hi = 0; hi < th; ++hi) {
            for (int wi = 0; wi < tw; ++wi) {
                const int token = (ti * th + hi) * tw + wi;
                const float* src = ts.row(token);
                size_t k = 0;
                for (int dt = 0; dt < t; ++dt) {
                    media::Image& img = frames[ti * t + dt];
                    for (int dy = 0; dy < h; ++dy) {
                        for (int dx = 0; dx < w; ++dx) {
                            for (int c = 0; c < 3; ++c) {
                                const float raw = src[k++] * ts.norm_scale + ts.norm_mean;
                                img.at(hi * h + dy, wi * w + dx, c) = static_cast<uint8_t>(
                                    std::clamp(std::lround(raw), 0l, 255l));
                            }
                        }
                    }
                }
            }
        }
    }
    return frames;
}

TokenSet patchify_spectrogram(const media::Spectrogram& spec, int f, int t) {
    require(f >= 1 && t >= 1, Err::IndivisibleShape, "patch dims must be >= 1");
    require(spec.bins % f == 0, Err::IndivisibleShape, "mel bins not divisible by patch f");
    require(spec.frames >= 1, Err::ShapeMismatch, "empty spectrogram");

    const int padded_frames = (spec.frames + t - 1) / t * t;
    const int fb = spec.bins / f, tb = padded_frames / t;

    TokenSet ts;
    ts.grid = {fb, tb};
    ts.patch_shape = {f, t};
    ts.channels = 1;
    ts.n_tokens = fb * tb;
    ts.token_dim = f * t;
    ts.tokens.resize(static_cast<size_t>(ts.n_tokens) * ts.token_dim);

    auto value_at = [&](int b, int frame) {
        // Edge-replicate past the last real frame.
        return spec.at(b, std::min(frame, spec.frames - 1));
    };
    for (int fi = 0; fi < fb; ++fi) {
        for (int ti = 0; ti < tb; ++ti) {
            float* dst = ts.row(fi * tb + ti);
            size_t k = 0;
            for (int df = 0; df < f; ++df)
                for (int dt = 0; dt < t; ++dt) dst[k++] = value_at(fi * f + df, ti * t + dt);
        }
    }
    normalize_in_place(ts);
    return ts;
}

std::vector<float> reconstruct_spectrogram(const TokenSet& ts, int* bins_out, int* frames_out) {
    require(ts.grid.size() == 2 && ts.patch_shape.size() == 2, Err::ShapeMismatch,
            "token set is not a spectrogram tiling");
    const int fb = ts.grid[0], tb = ts.grid[1];
    const int f = ts.patch_shape[0], t = ts.patch_shape[1];
    const int bins = fb * f, frames = tb * t;
    std::vector<float> out(static_cast<size_t>(bins) * frames, 0.0f);
    for (int fi = 0; fi < fb; ++fi) {
        for (int ti = 0; ti < tb; ++ti) {
            const float* src = ts.row(fi * tb + ti);
            size_t k = 0;
            for (int df = 0; df < f; ++df)
                for (int dt = 0; dt < t; ++dt)
                    out[static_cast<size_t>(fi * f + df) * frames + ti * t + dt] =
                        src[k++] * ts.norm_scale + ts.norm_mean;
        }
    }
    if (bins_out) *bins_out = bins;
    if (frames_out) *frames_out = frames;
    return out;
}

MaskPlan make_mask(int n_tokens, double ratio, uint64_t seed) {
    require(n_tokens >= 1, Err::ShapeMismatch, "need at least one token");
    require(ratio >= 0.0 && ratio <= 1.0, Err::ConfigError, "mask ratio must be in [0,1]");

    const int n_masked = static_cast<int>(std::lround(ratio * n_tokens));
    std::vector<int> perm(n_tokens);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);

    MaskPlan plan;
    plan.n_tokens = n_tokens;
    plan.ratio = ratio;
    plan.seed = seed;
    plan.masked.assign(perm.begin(), perm.begin() + n_masked);
    plan.visible.assign(perm.begin() + n_masked, perm.end());
    std::sort(plan.masked.begin(), plan.masked.end());
    std::sort(plan.visible.begin(), plan.visible.end());
    return plan;
}

std::pair<TokenSet, TokenSet> split_tokens(const TokenSet& ts, const MaskPlan& plan) {
    require(plan.n_tokens == ts.n_tokens, Err::PlanMismatch,
            "mask plan token count does not match token set");

    auto take = [&](const std::vector<int>& rows) {
        TokenSet part;
        part.n_tokens = static_cast<int>(rows.size());
        part.token_dim = ts.token_dim;
        part.channels = ts.channels;
        part.norm_mean = ts.norm_mean;
        part.norm_scale = ts.norm_scale;
        part.tokens.resize(static_cast<size_t>(part.n_tokens) * ts.token_dim);
        for (size_t i = 0; i < rows.size(); ++i)
            std::copy(ts.row(rows[i]), ts.row(rows[i]) + ts.token_dim, part.row(static_cast<int>(i)));
        return part;
    };
    return {take(plan.visible), take(plan.masked)};
}

} // namespace vimguard::tokenizer
