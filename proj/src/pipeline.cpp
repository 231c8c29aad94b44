#include "vimguard/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "vimguard/error.hpp"
#include "vimguard/util.hpp"

namespace vimguard::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

const char* decision_name(FinalDecision d) {
    switch (d) {
    case FinalDecision::harmless_no_claim: return "harmless_no_claim";
    case FinalDecision::harmless_verified: return "harmless_verified";
    case FinalDecision::misinformative: return "misinformative";
    case FinalDecision::unverifiable_harmless: return "unverifiable_harmless";
    }
    return "?";
}

namespace {

std::optional<FinalDecision> decision_from_name(const std::string& s) {
    if (s == "harmless_no_claim") return FinalDecision::harmless_no_claim;
    if (s == "harmless_verified") return FinalDecision::harmless_verified;
    if (s == "misinformative") return FinalDecision::misinformative;
    if (s == "unverifiable_harmless") return FinalDecision::unverifiable_harmless;
    return std::nullopt;
}

verify::Decision verdict_decision_from_name(const std::string& s) {
    if (s == "true_claims") return verify::Decision::true_claims;
    if (s == "false_claims") return verify::Decision::false_claims;
    return verify::Decision::unverifiable;
}

} // namespace

std::string outcome_to_json(const Outcome& o, bool with_timings) {
    json j;
    j["bundle_id"] = o.bundle_id;
    j["decision"] = o.decision ? json(decision_name(*o.decision)) : json(nullptr);
    j["claim_probability"] = o.claim_probability;
    if (o.verdict) {
        json v;
        v["decision"] = verify::decision_name(o.verdict->decision);
        v["rationale"] = o.verdict->rationale;
        v["cited_article_ids"] = o.verdict->cited_article_ids;
        v["prompt_hash"] = o.verdict->prompt_hash;
        j["verdict"] = v;
    } else {
        j["verdict"] = nullptr;
    }
    j["api_calls"] = {{"llm", o.api_calls.llm}, {"database", o.api_calls.database}};
    j["error"] = o.error ? json(*o.error) : json(nullptr);
    if (with_timings) j["wall_time_ms"] = o.wall_time_ms;
    return j.dump();
}

Outcome outcome_from_json(const std::string& line) {
    const json j = json::parse(line);
    Outcome o;
    o.bundle_id = j.at("bundle_id");
    if (!j.at("decision").is_null())
        o.decision = decision_from_name(j["decision"].get<std::string>());
    o.claim_probability = j.at("claim_probability");
    if (!j.at("verdict").is_null()) {
        verify::Verdict v;
        v.decision = verdict_decision_from_name(j["verdict"].at("decision"));
        v.rationale = j["verdict"].at("rationale");
        v.cited_article_ids = j["verdict"].at("cited_article_ids").get<std::vector<std::string>>();
        v.prompt_hash = j["verdict"].at("prompt_hash");
        o.verdict = std::move(v);
    }
    o.api_calls.llm = j.at("api_calls").at("llm");
    o.api_calls.database = j.at("api_calls").at("database");
    if (j.contains("error") && !j["error"].is_null()) o.error = j["error"].get<std::string>();
    if (j.contains("wall_time_ms")) o.wall_time_ms = j["wall_time_ms"];
    return o;
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::vector<ManifestEntry> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(Err::BadHeader, "bad manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        ManifestEntry e;
        e.bundle_id = j.at("bundle_id");
        e.dir = j.at("dir");
        if (j.contains("label") && !j["label"].is_null()) e.label = j["label"].get<std::string>();
        if (j.contains("hashtags")) e.hashtags = j["hashtags"].get<std::vector<std::string>>();
        if (j.contains("true_label") && !j["true_label"].is_null())
            e.true_label = j["true_label"].get<std::string>();
        out.push_back(std::move(e));
    }
    return out;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const ManifestEntry& e : entries) {
        json j;
        j["bundle_id"] = e.bundle_id;
        j["dir"] = e.dir;
        j["label"] = e.label ? json(*e.label) : json(nullptr);
        j["hashtags"] = e.hashtags;
        j["true_label"] = e.true_label ? json(*e.true_label) : json(nullptr);
        out += j.dump();
        out += '\n';
    }
    write_file(path, out);
}

mae::Embedding embed_bundle(const media::SfvBundle& bundle, const Models& models,
                            const Config& cfg) {
    std::vector<media::Image> frames = media::sample_frames(bundle, cfg.media.frames);
    for (media::Image& f : frames)
        f = media::resize_frame(f, cfg.media.frame_size, cfg.media.frame_size);
    const tokenizer::TokenSet video_tokens =
        tokenizer::tubify(frames, cfg.tokenizer.tube_t, cfg.tokenizer.tube_h, cfg.tokenizer.tube_w);

    media::SpectrogramParams sp;
    sp.window_len = cfg.media.window_len;
    sp.hop_len = cfg.media.hop_len;
    sp.n_mels = cfg.media.n_mels;
    sp.sample_rate = cfg.media.sample_rate;
    sp.log_eps = static_cast<float>(cfg.media.log_eps);
    const media::Spectrogram spec = media::log_mel_spectrogram(bundle.audio, sp);
    const tokenizer::TokenSet audio_tokens =
        tokenizer::patchify_spectrogram(spec, cfg.tokenizer.patch_f, cfg.tokenizer.patch_t);

    const mae::Embedding ev = mae::embed(*models.video, video_tokens, bundle.id);
    const mae::Embedding ea = mae::embed(*models.audio, audio_tokens, bundle.id);
    return mae::fuse(ev, ea);
}

Outcome check_bundle(const media::SfvBundle& bundle, const Models& models,
                     verify::TextClient& client, const retrieval::Index& index, const Config& cfg,
                     verify::CallCounter* counter) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    o.bundle_id = bundle.id;

    const mae::Embedding fused = embed_bundle(bundle, models, cfg);
    const claim::ClaimDecision gate = claim::decide(*models.head, fused);
    o.claim_probability = gate.probability;

    if (!gate.has_claim) {
        o.decision = FinalDecision::harmless_no_claim;
    } else {
        verify::VerifyOptions vo;
        vo.top_k = cfg.retrieval.top_k;
        vo.key_terms = cfg.retrieval.key_terms;
        vo.excerpt_chars = cfg.verify.excerpt_chars;
        vo.summary_skip_chars = cfg.verify.summary_skip_chars;
        vo.retry_attempts = cfg.verify.retry_attempts;
        vo.retry_base_ms = cfg.verify.retry_base_ms;
        vo.retrieve_from_transcript = cfg.verify.retrieve_from == "transcript";
        if (!cfg.verify.since.empty()) vo.since = cfg.verify.since;

        verify::ApiTally tally;
        const verify::Verdict verdict =
            verify::verify_claims(bundle, client, index, vo, &tally, counter);
        o.api_calls = tally;
        o.verdict = verdict;
        switch (verdict.decision) {
        case verify::Decision::true_claims: o.decision = FinalDecision::harmless_verified; break;
        case verify::Decision::false_claims: o.decision = FinalDecision::misinformative; break;
        case verify::Decision::unverifiable:
            o.decision = FinalDecision::unverifiable_harmless;
            break;
        }
    }
    o.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return o;
}

namespace {

uint64_t bundle_content_hash(const media::SfvBundle& b) {
    uint64_t h = fnv1a64(b.id);
    for (const media::Image& img : b.frames) h = fnv1a64(img.rgb.data(), img.rgb.size(), h);
    const std::string audio = media::audio_pcm16_bytes(b);
    return fnv1a64(audio.data(), audio.size(), h);
}

} // namespace

BatchResult check_batch(const std::vector<ManifestEntry>& manifest, const Models& models,
                        verify::TextClient& client, const retrieval::Index& index,
                        const CheckOptions& opts, verify::CallCounter* counter) {
    BatchResult result;
    result.outcomes.resize(manifest.size());
    if (manifest.empty()) return result;

    uint64_t setup_hash = 0;
    if (opts.use_cache) {
        require(!opts.cache_dir.empty(), Err::ConfigError, "cache enabled without a cache dir");
        fs::create_directories(opts.cache_dir);
        setup_hash = models.video->encoder_checksum();
        setup_hash = fnv1a64(&setup_hash, sizeof(setup_hash));
        const uint64_t parts[3] = {models.audio->encoder_checksum(), models.head->checksum(),
                                   index.checksum()};
        setup_hash = fnv1a64(parts, sizeof(parts), setup_hash);
        const std::string cfg_dump = config_to_json(opts.config).dump();
        setup_hash = fnv1a64(cfg_dump, setup_hash);
    }

    std::atomic<size_t> next{0};
    std::atomic<int> errors{0};
    const int jobs = std::max(1, opts.jobs);

    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= manifest.size()) break;
            const ManifestEntry& entry = manifest[i];
            Outcome outcome;
            outcome.bundle_id = entry.bundle_id;
            try {
                const media::SfvBundle bundle = media::load_bundle(entry.dir);

                fs::path cache_file;
                if (opts.use_cache) {
                    uint64_t key = bundle_content_hash(bundle);
                    key = fnv1a64(&setup_hash, sizeof(setup_hash), key);
                    cache_file = opts.cache_dir / (hex64(key) + ".json");
                    if (fs::exists(cache_file)) {
                        result.outcomes[i] = outcome_from_json(read_file(cache_file));
                        continue;
                    }
                }

                outcome = check_bundle(bundle, models, client, index, opts.config, counter);

                if (opts.use_cache) {
                    const fs::path tmp =
                        cache_file.string() + ".tmp." + std::to_string(i);
                    write_file(tmp, outcome_to_json(outcome) + "\n");
                    fs::rename(tmp, cache_file);
                }
            } catch (const std::exception& e) {
                outcome.error = e.what();
                errors.fetch_add(1);
            }
            result.outcomes[i] = std::move(outcome);
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    for (const Outcome& o : result.outcomes) {
        result.total_calls.llm += o.api_calls.llm;
        result.total_calls.database += o.api_calls.database;
    }
    result.errors = errors.load();
    return result;
}

} // namespace vimguard::pipeline
