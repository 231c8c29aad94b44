#include "vimguard/config.hpp"

#include <cstdio>
#include <functional>

#include "vimguard/error.hpp"
#include "vimguard/util.hpp"

namespace vimguard {

using nlohmann::json;

namespace {

#define VG_FIELD(key_str, member, desc)                                                       \
    ConfigField {                                                                             \
        key_str, desc, [](const Config& c) { return json(c.member); },                       \
            [](Config& c, const json& v) { c.member = v.get<decltype(c.member)>(); }          \
    }

const std::vector<ConfigField> kSchema = {
    VG_FIELD("seed", seed, "seed for every stochastic stage"),
    VG_FIELD("media.sample_rate", media.sample_rate, "canonical audio rate (Hz)"),
    VG_FIELD("media.frames", media.frames, "frames sampled per bundle"),
    VG_FIELD("media.frame_size", media.frame_size, "square resize target (px)"),
    VG_FIELD("media.window_len", media.window_len, "STFT window length (samples)"),
    VG_FIELD("media.hop_len", media.hop_len, "STFT hop length (samples)"),
    VG_FIELD("media.n_mels", media.n_mels, "mel filterbank size"),
    VG_FIELD("media.log_eps", media.log_eps, "log-compression offset"),
    VG_FIELD("tokenizer.tube_t", tokenizer.tube_t, "video tube depth (frames)"),
    VG_FIELD("tokenizer.tube_h", tokenizer.tube_h, "video tube height (px)"),
    VG_FIELD("tokenizer.tube_w", tokenizer.tube_w, "video tube width (px)"),
    VG_FIELD("tokenizer.patch_f", tokenizer.patch_f, "audio patch height (mel bins)"),
    VG_FIELD("tokenizer.patch_t", tokenizer.patch_t, "audio patch width (frames)"),
    VG_FIELD("tokenizer.video_mask_ratio", tokenizer.video_mask_ratio, "video mask ratio"),
    VG_FIELD("tokenizer.audio_mask_ratio", tokenizer.audio_mask_ratio, "audio mask ratio"),
    VG_FIELD("model.d_model", model.d_model, "encoder width"),
    VG_FIELD("model.n_heads", model.n_heads, "attention heads"),
    VG_FIELD("model.enc_depth", model.enc_depth, "encoder blocks"),
    VG_FIELD("model.dec_depth", model.dec_depth, "decoder blocks"),
    VG_FIELD("model.dec_width", model.dec_width, "decoder width"),
    VG_FIELD("model.mlp_ratio", model.mlp_ratio, "MLP hidden = ratio * width"),
    VG_FIELD("train.lr", train.lr, "Adam learning rate (pretraining)"),
    VG_FIELD("train.beta1", train.beta1, "Adam beta1"),
    VG_FIELD("train.beta2", train.beta2, "Adam beta2"),
    VG_FIELD("train.eps", train.eps, "Adam epsilon"),
    VG_FIELD("finetune.epochs", finetune.epochs, "claim-head training epochs"),
    VG_FIELD("finetune.lr", finetune.lr, "claim-head learning rate"),
    VG_FIELD("finetune.threshold", finetune.threshold, "claim probability cutoff (>= fires)"),
    VG_FIELD("finetune.hidden", finetune.hidden, "claim-head hidden width"),
    VG_FIELD("retrieval.k1", retrieval.k1, "BM25 k1"),
    VG_FIELD("retrieval.b", retrieval.b, "BM25 b"),
    VG_FIELD("retrieval.top_k", retrieval.top_k, "articles per prompt"),
    VG_FIELD("retrieval.key_terms", retrieval.key_terms, "key terms per query"),
    VG_FIELD("verify.excerpt_chars", verify.excerpt_chars, "article excerpt cap (chars)"),
    VG_FIELD("verify.summary_skip_chars", verify.summary_skip_chars,
             "transcripts shorter than this skip the summarize call"),
    VG_FIELD("verify.retrieve_from", verify.retrieve_from,
             "key-term source: summary | transcript"),
    VG_FIELD("verify.retry_attempts", verify.retry_attempts, "client retry attempts"),
    VG_FIELD("verify.retry_base_ms", verify.retry_base_ms, "retry backoff base (ms)"),
    VG_FIELD("verify.since", verify.since, "drop articles published before this ISO date"),
    VG_FIELD("client.kind", client.kind, "text client: mock | http"),
    VG_FIELD("client.script", client.script, "mock script path"),
    VG_FIELD("client.base_url", client.base_url, "http client base url"),
    VG_FIELD("client.endpoint", client.endpoint, "http client endpoint path"),
    VG_FIELD("client.max_inflight", client.max_inflight, "max concurrent http requests"),
    VG_FIELD("client.timeout_s", client.timeout_s, "http timeout (s)"),
    VG_FIELD("ingest.decoder_cmd", ingest.decoder_cmd,
             "external decoder command, {input}/{out} placeholders"),
};

#undef VG_FIELD

const ConfigField* find_field(const std::string& key) {
    for (const ConfigField& f : kSchema)
        if (f.key == key) return &f;
    return nullptr;
}

void flatten(const json& doc, const std::string& prefix,
             const std::function<void(const std::string&, const json&)>& emit) {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it.value().is_object())
            flatten(it.value(), key, emit);
        else
            emit(key, it.value());
    }
}

} // namespace

const std::vector<ConfigField>& config_schema() { return kSchema; }

Config config_from_json(const json& doc) {
    require(doc.is_object(), Err::ConfigError, "config must be a JSON object");
    Config cfg;
    flatten(doc, "", [&](const std::string& key, const json& value) {
        const ConfigField* f = find_field(key);
        require(f != nullptr, Err::ConfigError, "unknown config key: " + key);
        try {
            f->set(cfg, value);
        } catch (const json::exception& e) {
            fail(Err::ConfigError, "bad value for " + key + ": " + e.what());
        }
    });
    return cfg;
}

Config load_config(const std::filesystem::path& path) {
    try {
        return config_from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        fail(Err::ConfigError, "cannot parse config file: " + std::string(e.what()));
    }
}

json config_to_json(const Config& cfg) {
    json doc;
    for (const ConfigField& f : kSchema) {
        json* slot = &doc;
        std::string rest = f.key;
        size_t dot;
        while ((dot = rest.find('.')) != std::string::npos) {
            slot = &(*slot)[rest.substr(0, dot)];
            rest = rest.substr(dot + 1);
        }
        (*slot)[rest] = f.get(cfg);
    }
    return doc;
}

void apply_override(Config& cfg, const std::string& dotted_key, const std::string& value) {
    const ConfigField* f = find_field(dotted_key);
    require(f != nullptr, Err::ConfigError, "unknown config key: " + dotted_key);
    // Parse the literal as JSON when possible; fall back to a plain string.
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;
    }
    try {
        f->set(cfg, parsed);
    } catch (const json::exception&) {
        f->set(cfg, json(value));
    }
}

std::string config_help() {
    const Config defaults;
    std::string out = "Configuration keys (config file and --set KEY=VALUE):\n";
    for (const ConfigField& f : kSchema) {
        char line[192];
        std::snprintf(line, sizeof(line), "  %-28s default=%-12s %s\n", f.key.c_str(),
                      f.get(defaults).dump().c_str(), f.description.c_str());
        out += line;
    }
    return out;
}

} // namespace vimguard
