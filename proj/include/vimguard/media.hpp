#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vimguard::media {

struct Image {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> rgb; // row-major, 3 channels

    uint8_t at(int y, int x, int c) const {
        return rgb[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    uint8_t& at(int y, int x, int c) {
        return rgb[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    static Image filled(int h, int w, uint8_t r, uint8_t g, uint8_t b);
};

/// Optional per-bundle manifest.json sidecar.
struct BundleMeta {
    std::string id;
    std::string source;
    std::optional<std::string> label; // "claim" | "no_claim"
    std::vector<std::string> hashtags;
};

/// Decoded frames plus mono audio for one short-form video. The pipeline's
/// input unit. Audio is canonicalized to mono PCM at `sample_rate` on load
/// (float samples in [-1, 1], exact inverses of the PCM16 values).
struct SfvBundle {
    std::string id;
    std::vector<Image> frames;
    uint32_t fps_num = 0;
    uint32_t fps_den = 1;
    std::vector<float> audio;
    int sample_rate = 16000;
    double duration_s = 0.0;
    BundleMeta meta;

    double fps() const { return static_cast<double>(fps_num) / fps_den; }
};

struct SpectrogramParams {
    int window_len = 400; // 25 ms at 16 kHz
    int hop_len = 160;    // 10 ms
    int n_mels = 128;
    int sample_rate = 16000;
    float log_eps = 1e-6f;
};

/// Log-mel magnitudes, [bins x frames] row-major (frequency on rows, time on
/// columns).
struct Spectrogram {
    int bins = 0;
    int frames = 0;
    std::vector<float> values;
    SpectrogramParams params;

    float at(int b, int t) const { return values[static_cast<size_t>(b) * frames + t]; }
    float& at(int b, int t) { return values[static_cast<size_t>(b) * frames + t]; }
};

/// Number of STFT frames for a signal of n_samples: floor((n - win) / hop) + 1.
inline int spectrogram_frame_count(int64_t n_samples, int window_len, int hop_len) {
    if (n_samples < window_len) return 0;
    return static_cast<int>((n_samples - window_len) / hop_len) + 1;
}

/// Loads `frames.sfvb` + `audio.wav` (+ optional `manifest.json`) from a
/// bundle directory. Audio of any rate is resampled to 16 kHz on load.
SfvBundle load_bundle(const std::filesystem::path& dir);

/// Inverse of load_bundle; writes frames.sfvb, audio.wav and manifest.json.
void write_bundle(const std::filesystem::path& dir, const SfvBundle& bundle);

/// n frames at indices round(i*(F-1)/(n-1)); when F < n the clip is used in
/// full and the last frame repeated.
std::vector<Image> sample_frames(const SfvBundle& bundle, int n);

/// Bilinear resize with half-pixel center alignment, clamped to 0..255.
Image resize_frame(const Image& img, int h, int w);

/// Magnitude STFT (periodic Hann) -> triangular mel filterbank (HTK scale)
/// -> log(x + log_eps).
Spectrogram log_mel_spectrogram(const std::vector<float>& audio, const SpectrogramParams& params);

// WAV plumbing (RIFF, PCM16, mono). Exposed for fixtures and tests.
std::vector<float> read_wav_mono16(const std::filesystem::path& path, int* sample_rate_out);
void write_wav_mono16(const std::filesystem::path& path, const std::vector<float>& samples,
                      int sample_rate);
std::vector<float> resample_linear(const std::vector<float>& in, int from_rate, int to_rate);

/// Canonical PCM16 little-endian bytes of the bundle audio; the transcription
/// payload and the mock-client hash input.
std::string audio_pcm16_bytes(const SfvBundle& bundle);

} // namespace vimguard::media
