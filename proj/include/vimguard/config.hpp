#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace vimguard {

/// Run configuration. Every key is documented in config_schema(); unknown
/// keys in a config file are rejected. The seed feeds every stochastic stage
/// (mask plans, init, shuffles, synthetic data).
struct Config {
    uint64_t seed = 42;

    struct Media {
        int sample_rate = 16000;
        int frames = 16;     // sampled frames per bundle
        int frame_size = 64; // square resize target
        int window_len = 400;
        int hop_len = 160;
        int n_mels = 128;
        double log_eps = 1e-6;
    } media;

    struct Tokenizer {
        int tube_t = 2;
        int tube_h = 16;
        int tube_w = 16;
        int patch_f = 16;
        int patch_t = 16;
        double video_mask_ratio = 0.75;
        double audio_mask_ratio = 0.75;
    } tokenizer;

    struct Model {
        int d_model = 192;
        int n_heads = 4;
        int enc_depth = 4;
        int dec_depth = 2;
        int dec_width = 96;
        int mlp_ratio = 4;
    } model;

    struct Train {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    } train;

    struct Finetune {
        int epochs = 100;
        double lr = 1e-2;
        double threshold = 0.5;
        int hidden = 128;
    } finetune;

    struct Retrieval {
        double k1 = 1.2;
        double b = 0.75;
        int top_k = 3;
        int key_terms = 10;
    } retrieval;

    struct Verify {
        int excerpt_chars = 1200;
        int summary_skip_chars = 200;
        std::string retrieve_from = "summary"; // summary | transcript
        int retry_attempts = 3;
        int retry_base_ms = 100;
        std::string since; // recency filter, ISO date; empty = off
    } verify;

    struct Client {
        std::string kind = "mock"; // mock | http
        std::string script;        // mock script path
        std::string base_url;
        std::string endpoint = "/v1/text";
        int max_inflight = 4;
        int timeout_s = 30;
    } client;

    struct Ingest {
        std::string decoder_cmd; // template with {input} and {out}
    } ingest;
};

struct ConfigField {
    std::string key;         // dotted, e.g. "media.frames"
    std::string description;
    nlohmann::json (*get)(const Config&);
    void (*set)(Config&, const nlohmann::json&);
};

const std::vector<ConfigField>& config_schema();

/// Strict parse: nested JSON document, unknown keys rejected.
Config config_from_json(const nlohmann::json& doc);
Config load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const Config& cfg);

/// `key=value` override (flags win over file values).
void apply_override(Config& cfg, const std::string& dotted_key, const std::string& value);

/// One line per key with default and description; embedded in --help.
std::string config_help();

} // namespace vimguard
