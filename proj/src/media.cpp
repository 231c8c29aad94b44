#include "vimguard/media.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "vimguard/error.hpp"
#include "vimguard/util.hpp"

namespace vimguard::media {

namespace fs = std::filesystem;
using nlohmann::json;

Image Image::filled(int h, int w, uint8_t r, uint8_t g, uint8_t b) {
    Image img;
    img.height = h;
    img.width = w;
    img.rgb.resize(static_cast<size_t>(h) * w * 3);
    for (size_t i = 0; i < img.rgb.size(); i += 3) {
        img.rgb[i] = r;
        img.rgb[i + 1] = g;
        img.rgb[i + 2] = b;
    }
    return img;
}

namespace {

constexpr char kMagic[4] = {'S', 'F', 'V', 'B'};
constexpr int kCanonicalRate = 16000;

int16_t float_to_pcm16(float v) {
    float scaled = v * 32768.0f;
    scaled = std::clamp(scaled, -32768.0f, 32767.0f);
    return static_cast<int16_t>(std::lrintf(scaled));
}

std::vector<float> pcm16_to_float(const int16_t* data, size_t n) {
    std::vector<float> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = static_cast<float>(data[i]) / 32768.0f;
    return out;
}

} // namespace

SfvBundle load_bundle(const fs::path& dir) {
    const fs::path frames_path = dir / "frames.sfvb";
    const fs::path audio_path = dir / "audio.wav";
    require(fs::exists(frames_path), Err::MissingFile, "missing " + frames_path.string());
    require(fs::exists(audio_path), Err::MissingFile, "missing " + audio_path.string());

    const std::string raw = read_file(frames_path);
    require(raw.size() >= 28, Err::BadHeader, "frames.sfvb too small");
    require(std::memcmp(raw.data(), kMagic, 4) == 0, Err::BadMagic, "frames.sfvb bad magic");

    const uint32_t version = get_le<uint32_t>(raw, 4);
    const uint32_t width = get_le<uint32_t>(raw, 8);
    const uint32_t height = get_le<uint32_t>(raw, 12);
    const uint32_t n_frames = get_le<uint32_t>(raw, 16);
    const uint32_t fps_num = get_le<uint32_t>(raw, 20);
    const uint32_t fps_den = get_le<uint32_t>(raw, 24);
    require(version == 1, Err::BadHeader, "unsupported frames.sfvb version");
    require(width > 0 && height > 0 && n_frames > 0, Err::BadHeader, "degenerate frame geometry");
    require(fps_num > 0 && fps_den > 0, Err::BadHeader, "fps must be positive");

    const size_t frame_bytes = static_cast<size_t>(width) * height * 3;
    require(raw.size() == 28 + frame_bytes * n_frames, Err::FrameSizeMismatch,
            "frames.sfvb payload size does not match header");

    SfvBundle b;
    b.fps_num = fps_num;
    b.fps_den = fps_den;
    b.frames.resize(n_frames);
    for (uint32_t i = 0; i < n_frames; ++i) {
        Image& img = b.frames[i];
        img.width = static_cast<int>(width);
        img.height = static_cast<int>(height);
        img.rgb.resize(frame_bytes);
        std::memcpy(img.rgb.data(), raw.data() + 28 + frame_bytes * i, frame_bytes);
    }

    int src_rate = 0;
    std::vector<float> audio = read_wav_mono16(audio_path, &src_rate);
    if (src_rate != kCanonicalRate) audio = resample_linear(audio, src_rate, kCanonicalRate);
    b.audio = std::move(audio);
    b.sample_rate = kCanonicalRate;

    b.duration_s = static_cast<double>(n_frames) / b.fps();
    const double audio_s = static_cast<double>(b.audio.size()) / b.sample_rate;
    require(std::abs(b.duration_s - audio_s) <= 0.25, Err::DurationMismatch,
            "frame and audio durations disagree by more than 0.25 s");

    b.id = dir.filename().string();
    const fs::path manifest_path = dir / "manifest.json";
    if (fs::exists(manifest_path)) {
        json m = json::parse(read_file(manifest_path));
        b.meta.id = m.value("id", b.id);
        b.meta.source = m.value("source", "");
        if (m.contains("label") && !m["label"].is_null())
            b.meta.label = m["label"].get<std::string>();
        if (m.contains("hashtags"))
            b.meta.hashtags = m["hashtags"].get<std::vector<std::string>>();
        if (!b.meta.id.empty()) b.id = b.meta.id;
    } else {
        b.meta.id = b.id;
    }
    return b;
}

void write_bundle(const fs::path& dir, const SfvBundle& bundle) {
    require(!bundle.frames.empty(), Err::BadHeader, "bundle has no frames");
    fs::create_directories(dir);

    const Image& first = bundle.frames.front();
    std::string out;
    out.append(kMagic, 4);
    put_le<uint32_t>(out, 1);
    put_le<uint32_t>(out, static_cast<uint32_t>(first.width));
    put_le<uint32_t>(out, static_cast<uint32_t>(first.height));
    put_le<uint32_t>(out, static_cast<uint32_t>(bundle.frames.size()));
    put_le<uint32_t>(out, bundle.fps_num);
    put_le<uint32_t>(out, bundle.fps_den);
    for (const Image& img : bundle.frames) {
        require(img.width == first.width && img.height == first.height, Err::FrameSizeMismatch,
                "all frames must share one geometry");
        out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
    }
    write_file(dir / "frames.sfvb", out);

    write_wav_mono16(dir / "audio.wav", bundle.audio, bundle.sample_rate);

    json m;
    m["id"] = bundle.meta.id.empty() ? bundle.id : bundle.meta.id;
    m["source"] = bundle.meta.source;
    m["label"] = bundle.meta.label ? json(*bundle.meta.label) : json(nullptr);
    m["hashtags"] = bundle.meta.hashtags;
    write_file(dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<Image> sample_frames(const SfvBundle& bundle, int n) {
    require(!bundle.frames.empty(), Err::BadHeader, "bundle has no frames");
    require(n >= 1, Err::BadHeader, "n must be >= 1");
    const int f = static_cast<int>(bundle.frames.size());
    std::vector<Image> out;
    out.reserve(n);
    if (f < n) {
        for (int i = 0; i < f; ++i) out.push_back(bundle.frames[i]);
        while (static_cast<int>(out.size()) < n) out.push_back(bundle.frames[f - 1]);
        return out;
    }
    for (int i = 0; i < n; ++i) {
        const int idx =
            n == 1 ? 0
                   : static_cast<int>(std::lround(static_cast<double>(i) * (f - 1) / (n - 1)));
        out.push_back(bundle.frames[idx]);
    }
    return out;
}

Image resize_frame(const Image& img, int h, int w) {
    require(h >= 1 && w >= 1, Err::BadHeader, "target size must be >= 1");
    if (h == img.height && w == img.width) return img;

    Image out;
    out.height = h;
    out.width = w;
    out.rgb.resize(static_cast<size_t>(h) * w * 3);

    const double sy = static_cast<double>(img.height) / h;
    const double sx = static_cast<double>(img.width) / w;
    for (int y = 0; y < h; ++y) {
        double src_y = (y + 0.5) * sy - 0.5;
        src_y = std::clamp(src_y, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(std::floor(src_y));
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = src_y - y0;
        for (int x = 0; x < w; ++x) {
            double src_x = (x + 0.5) * sx - 0.5;
            src_x = std::clamp(src_x, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(std::floor(src_x));
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = src_x - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
                const double bot = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
                double v = top * (1.0 - fy) + bot * fy;
                v = std::clamp(v, 0.0, 255.0);
                out.at(y, x, c) = static_cast<uint8_t>(std::lround(v));
            }
        }
    }
    return out;
}

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular mel filterbank over continuous bin frequencies, [n_mels x n_bins].
std::vector<double> mel_filterbank(int n_mels, int window_len, int sample_rate) {
    const int n_bins = window_len / 2 + 1;
    const double mel_max = hz_to_mel(sample_rate / 2.0);
    std::vector<double> centers(n_mels + 2);
    for (int i = 0; i < n_mels + 2; ++i) centers[i] = mel_to_hz(mel_max * i / (n_mels + 1));

    std::vector<double> fb(static_cast<size_t>(n_mels) * n_bins, 0.0);
    for (int m = 0; m < n_mels; ++m) {
        const double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
        for (int k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / window_len;
            double v = 0.0;
            if (f > lo && f < mid)
                v = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi)
                v = (hi - f) / (hi - mid);
            fb[static_cast<size_t>(m) * n_bins + k] = v;
        }
    }
    return fb;
}

} // namespace

Spectrogram log_mel_spectrogram(const std::vector<float>& audio, const SpectrogramParams& p) {
    require(p.window_len >= 2 && p.hop_len >= 1, Err::ConfigError, "bad spectrogram params");
    require(p.hop_len <= p.window_len, Err::ConfigError, "hop must be <= window");
    require(p.n_mels >= 1 && p.n_mels <= p.window_len / 2, Err::ConfigError,
            "n_mels must be <= window/2");
    require(static_cast<int64_t>(audio.size()) >= p.window_len, Err::AudioTooShort,
            "audio shorter than one analysis window");

    const int win = p.window_len;
    const int n_bins = win / 2 + 1;
    const int n_frames = spectrogram_frame_count(static_cast<int64_t>(audio.size()), win, p.hop_len);

    // Periodic Hann window.
    std::vector<double> hann(win);
    for (int i = 0; i < win; ++i) hann[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / win);

    // Precomputed DFT basis; win is small so the naive transform is fine here.
    std::vector<double> cos_t(static_cast<size_t>(n_bins) * win);
    std::vector<double> sin_t(static_cast<size_t>(n_bins) * win);
    for (int k = 0; k < n_bins; ++k) {
        for (int i = 0; i < win; ++i) {
            const double a = 2.0 * M_PI * k * i / win;
            cos_t[static_cast<size_t>(k) * win + i] = std::cos(a);
            sin_t[static_cast<size_t>(k) * win + i] = std::sin(a);
        }
    }

    const std::vector<double> fb = mel_filterbank(p.n_mels, win, p.sample_rate);

    Spectrogram spec;
    spec.bins = p.n_mels;
    spec.frames = n_frames;
    spec.params = p;
    spec.values.resize(static_cast<size_t>(p.n_mels) * n_frames);

    std::vector<double> windowed(win);
    std::vector<double> mag(n_bins);
    for (int t = 0; t < n_frames; ++t) {
        const size_t off = static_cast<size_t>(t) * p.hop_len;
        for (int i = 0; i < win; ++i) windowed[i] = audio[off + i] * hann[i];
        for (int k = 0; k < n_bins; ++k) {
            const double* ct = &cos_t[static_cast<size_t>(k) * win];
            const double* st = &sin_t[static_cast<size_t>(k) * win];
            double re = 0.0, im = 0.0;
            for (int i = 0; i < win; ++i) {
                re += windowed[i] * ct[i];
                im -= windowed[i] * st[i];
            }
            mag[k] = std::sqrt(re * re + im * im);
        }
        for (int m = 0; m < p.n_mels; ++m) {
            const double* row = &fb[static_cast<size_t>(m) * n_bins];
            double acc = 0.0;
            for (int k = 0; k < n_bins; ++k) acc += row[k] * mag[k];
            spec.at(m, t) = static_cast<float>(std::log(acc + p.log_eps));
        }
    }
    return spec;
}

std::vector<float> read_wav_mono16(const fs::path& path, int* sample_rate_out) {
    const std::string raw = read_file(path);
    require(raw.size() >= 44, Err::BadHeader, "wav too small");
    require(raw.compare(0, 4, "RIFF") == 0 && raw.compare(8, 4, "WAVE") == 0, Err::BadMagic,
            "not a RIFF/WAVE file");

    size_t off = 12;
    int channels = 0, bits = 0, rate = 0, format = 0;
    const int16_t* samples = nullptr;
    size_t n_samples = 0;
    while (off + 8 <= raw.size()) {
        const std::string id = raw.substr(off, 4);
        const uint32_t sz = get_le<uint32_t>(raw, off + 4);
        require(off + 8 + sz <= raw.size(), Err::BadHeader, "truncated wav chunk");
        if (id == "fmt ") {
            require(sz >= 16, Err::BadHeader, "short fmt chunk");
            format = get_le<uint16_t>(raw, off + 8);
            channels = get_le<uint16_t>(raw, off + 10);
            rate = static_cast<int>(get_le<uint32_t>(raw, off + 12));
            bits = get_le<uint16_t>(raw, off + 22);
        } else if (id == "data") {
            samples = reinterpret_cast<const int16_t*>(raw.data() + off + 8);
            n_samples = sz / 2;
        }
        off += 8 + sz + (sz % 2);
    }
    require(format == 1 && bits == 16, Err::BadAudioFormat, "audio must be PCM16");
    require(channels == 1, Err::BadAudioFormat, "audio must be mono");
    require(rate > 0 && samples != nullptr, Err::BadHeader, "wav missing fmt or data chunk");
    if (sample_rate_out) *sample_rate_out = rate;
    return pcm16_to_float(samples, n_samples);
}

void write_wav_mono16(const fs::path& path, const std::vector<float>& samples, int sample_rate) {
    std::string out;
    const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
    out.append("RIFF");
    put_le<uint32_t>(out, 36 + data_bytes);
    out.append("WAVE");
    out.append("fmt ");
    put_le<uint32_t>(out, 16);
    put_le<uint16_t>(out, 1); // PCM
    put_le<uint16_t>(out, 1); // mono
    put_le<uint32_t>(out, static_cast<uint32_t>(sample_rate));
    put_le<uint32_t>(out, static_cast<uint32_t>(sample_rate * 2));
    put_le<uint16_t>(out, 2);
    put_le<uint16_t>(out, 16);
    out.append("data");
    put_le<uint32_t>(out, data_bytes);
    for (float v : samples) put_le<uint16_t>(out, static_cast<uint16_t>(float_to_pcm16(v)));
    write_file(path, out);
}

std::vector<float> resample_linear(const std::vector<float>& in, int from_rate, int to_rate) {
    if (from_rate == to_rate || in.empty()) return in;
    const size_t n_out = static_cast<size_t>(
        std::llround(static_cast<double>(in.size()) * to_rate / from_rate));
    std::vector<float> out(n_out);
    for (size_t i = 0; i < n_out; ++i) {
        const double pos = static_cast<double>(i) * from_rate / to_rate;
        const size_t i0 = std::min(static_cast<size_t>(pos), in.size() - 1);
        const size_t i1 = std::min(i0 + 1, in.size() - 1);
        const double f = pos - static_cast<double>(i0);
        out[i] = static_cast<float>(in[i0] * (1.0 - f) + in[i1] * f);
    }
    return out;
}

std::string audio_pcm16_bytes(const SfvBundle& bundle) {
    std::string out;
    out.reserve(bundle.audio.size() * 2);
    for (float v : bundle.audio) put_le<uint16_t>(out, static_cast<uint16_t>(float_to_pcm16(v)));
    return out;
}

} // namespace vimguard::media
