#include "vimguard/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "vimguard/error.hpp"
#include "vimguard/rng.hpp"
#include "vimguard/util.hpp"

namespace vimguard::synth {

namespace fs = std::filesystem;
using nlohmann::json;

media::SfvBundle make_bundle(uint64_t seed, const BundleOptions& opts) {
    Rng rng(seed);
    media::SfvBundle b;
    b.id = opts.id;
    b.meta.id = opts.id;
    b.meta.source = "synthetic";
    b.fps_num = static_cast<uint32_t>(opts.fps);
    b.fps_den = 1;
    b.sample_rate = opts.sample_rate;
    b.duration_s = opts.duration_s;

    const int n_frames = opts.n_frames;
    const int box = std::max(2, opts.height / 8 + static_cast<int>(rng.uniform_int(
                                     std::max(1, opts.height / 8))));
    const double x0 = rng.uniform(0, opts.width - box);
    const double y0 = rng.uniform(0, opts.height - box);
    const double vx = rng.uniform(-2.0, 2.0);
    const double vy = rng.uniform(-2.0, 2.0);
    const int shape_boost = 40 + static_cast<int>(rng.uniform_int(30));
    const uint8_t dark = static_cast<uint8_t>(8 + rng.uniform_int(28));

    for (int f = 0; f < n_frames; ++f) {
        media::Image img = media::Image::filled(opts.height, opts.width, dark, dark, dark);
        if (opts.claimlike) {
            // Family-fixed vertical gradient (the learnable layout) with one
            // small moving bright rectangle per bundle.
            for (int y = 0; y < opts.height; ++y) {
                const int level = 30 + (220 * y) / std::max(1, opts.height - 1);
                for (int x = 0; x < opts.width; ++x)
                    for (int c = 0; c < 3; ++c)
                        img.at(y, x, c) = static_cast<uint8_t>(level);
            }
            const int bx = static_cast<int>(x0 + vx * f);
            const int by = static_cast<int>(y0 + vy * f);
            for (int y = std::max(0, by); y < std::min(opts.height, by + box); ++y)
                for (int x = std::max(0, bx); x < std::min(opts.width, bx + box); ++x)
                    for (int c = 0; c < 3; ++c)
                        img.at(y, x, c) = static_cast<uint8_t>(
                            std::min(255, img.at(y, x, c) + shape_boost));
        } else {
            // Dim per-pixel noise, no structure.
            for (uint8_t& v : img.rgb)
                v = static_cast<uint8_t>(std::clamp<int64_t>(
                    static_cast<int64_t>(dark) + static_cast<int64_t>(rng.uniform_int(25)) - 12,
                    0, 255));
        }
        b.frames.push_back(std::move(img));
    }

    const size_t n_samples =
        static_cast<size_t>(std::llround(opts.duration_s * opts.sample_rate));
    b.audio.resize(n_samples);
    if (opts.claimlike) {
        // Fixed fundamental across the family; amplitude and a weak second
        // harmonic vary per bundle.
        const double freq = 440.0;
        const double amp = 0.5 + rng.uniform(0, 0.2);
        const double harm = rng.uniform(0, 0.15);
        for (size_t i = 0; i < n_samples; ++i) {
            const double t = static_cast<double>(i) / opts.sample_rate;
            b.audio[i] = static_cast<float>(amp * std::sin(2.0 * M_PI * freq * t) +
                                            harm * std::sin(4.0 * M_PI * freq * t));
        }
    } else {
        const double amp = 0.01 + rng.uniform(0, 0.02);
        for (size_t i = 0; i < n_samples; ++i)
            b.audio[i] = static_cast<float>(amp * (rng.uniform() * 2.0 - 1.0));
    }
    return b;
}

std::vector<retrieval::Article> make_corpus(int n_docs, uint64_t seed) {
    require(n_docs >= 1, Err::ConfigError, "need at least one doc");
    Rng rng(seed);

    std::vector<std::string> vocab;
    const char* roots[] = {"river",  "mountain", "treaty", "engine",  "harvest", "signal",
                           "garden", "voyage",   "market", "council", "storm",   "record"};
    for (const char* r : roots)
        for (int i = 0; i < 20; ++i) vocab.push_back(std::string(r) + std::to_string(i));

    const char* sources[] = {"wikipedia", "claimreview", "news"};
    std::vector<retrieval::Article> out;
    out.reserve(n_docs);
    for (int d = 0; d < n_docs; ++d) {
        char id[32];
        std::snprintf(id, sizeof(id), "art-%04d", d);
        retrieval::Article a;
        a.id = id;
        const int len = 30 + static_cast<int>(rng.uniform_int(120));
        std::string body;
        for (int w = 0; w < len; ++w) {
            // Zipf-ish: square the uniform draw so low indices dominate.
            const double u = rng.uniform();
            const size_t idx = static_cast<size_t>(u * u * vocab.size());
            body += vocab[std::min(idx, vocab.size() - 1)];
            body += ' ';
        }
        a.body = body;
        a.title = "Notes on " + vocab[rng.uniform_int(vocab.size())];
        a.source = sources[d % 3];
        char date[16];
        std::snprintf(date, sizeof(date), "2023-%02d-%02d", 1 + d % 12, 1 + d % 28);
        a.published_at = date;
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<retrieval::Article> fixture_corpus() {
    std::vector<retrieval::Article> corpus;
    auto add = [&](const char* id, const char* title, const char* body, const char* source,
                   const char* date) {
        retrieval::Article a;
        a.id = id;
        a.title = title;
        a.body = body;
        a.source = source;
        a.published_at = std::string(date);
        corpus.push_back(std::move(a));
    };
    add("fx-bridge", "Avalon bridge inspection finds structure sound",
        "Engineers completed the annual inspection of the Avalon stone bridge this week and "
        "reported the structure sound and fully open to traffic. Rumors that the bridge "
        "collapsed were traced to a staged video. The county engineer said no damage of any "
        "kind was found on the Avalon bridge.",
        "news", "2024-03-02");
    add("fx-solar", "Laboratory confirms solar cell efficiency record",
        "An independent laboratory confirmed a new efficiency record for perovskite solar "
        "cells this spring. The certified measurement exceeded the previous record and was "
        "replicated twice. Researchers called the solar result a milestone for the field.",
        "claimreview", "2024-04-18");
    add("fx-comet", "Comet visible over the northern hemisphere",
        "Astronomers reported a bright comet visible at dawn across the northern hemisphere. "
        "Viewing conditions were best away from city lights.",
        "wikipedia", "2024-01-20");
    add("fx-harbor", "Harbor dredging project enters second phase",
        "The harbor authority began the second phase of its dredging project, deepening the "
        "shipping channel by two meters. Ferries continue to run on schedule.",
        "news", "2024-02-11");
    add("fx-museum", "Museum reopens east wing after renovation",
        "The city museum reopened its east wing following an eighteen month renovation. The "
        "new galleries focus on maritime history and early navigation instruments.",
        "wikipedia", "2023-11-05");
    add("fx-orchard", "Late frost trims orchard yields",
        "Growers reported that a late frost trimmed orchard yields across the valley, though "
        "quality of the surviving fruit remained high.",
        "news", "2023-05-30");
    return corpus;
}

FixtureBatch make_fixture_batch(const fs::path& root, int n_false, int n_true,
                                int n_unverifiable, int n_noclaim, uint64_t seed) {
    FixtureBatch fx;
    fx.root = root;
    fx.n_claim = n_false + n_true + n_unverifiable;
    fs::create_directories(root / "bundles");

    // Scripted transcripts stay under the summarize-skip threshold and carry a
    // marker the adjudicate rules key off. Key terms land in (or, for the
    // unverifiable kind, miss) the fixture corpus.
    const std::string transcript_false =
        "Breaking update the Avalon stone bridge collapsed into the river yesterday "
        "witnesses claim. MARKER_FALSE";
    const std::string transcript_true =
        "A laboratory just confirmed a new solar cell efficiency record this spring. "
        "MARKER_TRUE";
    const std::string transcript_unver =
        "Zorblax quantum kelpfarming doubles xylofruit output says anonymous forum post. "
        "MARKER_UNVER";

    json script;
    script["transcribe"] = {{"by_hash", json::object()}, {"default", ""}};
    script["summarize"] = {{"default", "SUMMARY UNAVAILABLE"}};
    script["adjudicate"] = {
        {"rules",
         json::array(
             {{{"contains", "MARKER_FALSE"},
               {"response", "FALSE The inspection article reports the Avalon bridge intact."}},
              {{"contains", "MARKER_TRUE"},
               {"response", "TRUE The laboratory article confirms the solar record."}},
              {{"contains", "MARKER_UNVER"},
               {"response", "UNVERIFIABLE No retrieved article addresses this claim."}}})},
        {"default", "UNVERIFIABLE No evidence either way."}};

    struct Kind {
        const std::string* transcript;
        const char* true_label;
        int count;
    };
    const Kind kinds[] = {
        {&transcript_false, "misinformative", n_false},
        {&transcript_true, "not_misinformative", n_true},
        {&transcript_unver, "not_misinformative", n_unverifiable},
    };

    int serial = 0;
    auto add_bundle = [&](bool claimlike, const std::string* transcript, const char* true_label) {
        char name[32];
        std::snprintf(name, sizeof(name), "sfv-%03d", serial);
        BundleOptions opts;
        opts.id = name;
        opts.claimlike = claimlike;
        media::SfvBundle b = make_bundle(seed + 1000 + serial, opts);
        b.meta.hashtags = {claimlike ? "#news" : "#dance"};
        b.meta.label = claimlike ? "claim" : "no_claim";
        const fs::path dir = root / "bundles" / name;
        media::write_bundle(dir, b);

        if (transcript) {
            const std::string audio = media::audio_pcm16_bytes(b);
            script["transcribe"]["by_hash"][hex64(fnv1a64(audio.data(), audio.size()))] =
                *transcript;
        }

        pipeline::ManifestEntry e;
        e.bundle_id = name;
        e.dir = dir.string();
        e.label = claimlike ? "claim" : "no_claim";
        e.hashtags = b.meta.hashtags;
        e.true_label = std::string(true_label);
        fx.manifest.push_back(std::move(e));
        ++serial;
    };

    for (const Kind& kind : kinds)
        for (int i = 0; i < kind.count; ++i) add_bundle(true, kind.transcript, kind.true_label);
    for (int i = 0; i < n_noclaim; ++i) add_bundle(false, nullptr, "not_misinformative");

    fx.manifest_path = root / "manifest.jsonl";
    pipeline::write_manifest(fx.manifest_path, fx.manifest);
    fx.corpus_path = root / "corpus.jsonl";
    retrieval::write_corpus_jsonl(fx.corpus_path, fixture_corpus());
    fx.script_path = root / "mock_script.json";
    write_file(fx.script_path, script.dump(2) + "\n");
    return fx;
}

} // namespace vimguard::synth
