#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vimguard/media.hpp"
#include "vimguard/retrieval.hpp"

namespace vimguard::verify {

struct Transcript {
    std::string text;
    std::string source_id;
    std::string provider;
};

/// Shared per-operation tally. `llm` covers transcribe + summarize +
/// adjudicate; `database` covers index retrievals.
struct CallCounter {
    std::atomic<int64_t> transcribe{0};
    std::atomic<int64_t> summarize{0};
    std::atomic<int64_t> adjudicate{0};
    std::atomic<int64_t> retrieval{0};

    int64_t llm() const { return transcribe + summarize + adjudicate; }
    int64_t database() const { return retrieval; }
    void reset() { transcribe = summarize = adjudicate = retrieval = 0; }
};

/// Pluggable transcription/summarization/adjudication provider. The public
/// wrappers bump the attached counter; implementations see raw payloads. The
/// transcription payload is the bundle's canonical PCM16 byte stream.
class TextClient {
public:
    virtual ~TextClient() = default;

    Transcript transcribe(const media::SfvBundle& bundle);
    std::string summarize(const std::string& text);
    std::string adjudicate(const std::string& prompt);

    void attach_counter(CallCounter* counter) { counter_ = counter; }
    virtual std::string provider() const = 0;

protected:
    virtual std::string transcribe_impl(const std::string& pcm16_bytes) = 0;
    virtual std::string summarize_impl(const std::string& text) = 0;
    virtual std::string adjudicate_impl(const std::string& prompt) = 0;

private:
    CallCounter* counter_ = nullptr;
};

/// Deterministic scripted client. Script JSON, per op ("transcribe",
/// "summarize", "adjudicate"):
///   { "by_hash": { "<fnv1a64-hex of payload>": "response", ... },
///     "rules":   [ { "contains": "substr", "response": "..." }, ... ],
///     "default": "response" }
/// Resolution order: by_hash, first matching rule, default; no match is a
/// transport error.
class ScriptClient : public TextClient {
public:
    static std::unique_ptr<ScriptClient> from_file(const std::filesystem::path& path);
    static std::unique_ptr<ScriptClient> from_json_text(const std::string& text);

    std::string provider() const override { return "mock"; }

protected:
    std::string transcribe_impl(const std::string& payload) override;
    std::string summarize_impl(const std::string& text) override;
    std::string adjudicate_impl(const std::string& prompt) override;

private:
    struct OpScript;
    std::string resolve(const std::string& op, const std::string& payload) const;
    std::shared_ptr<void> script_; // pimpl for the parsed json
};

struct HttpClientConfig {
    std::string base_url;           // e.g. http://localhost:8080
    std::string endpoint = "/v1/text";
    std::string api_key_env = "VIMGUARD_API_KEY";
    int max_inflight = 4;
    int timeout_s = 30;
};

/// Generic HTTP adapter: POST {"op": ..., "payload": ...} -> {"output": ...}.
/// Audio payloads are base64; bearer token read from the configured env var.
class HttpClient : public TextClient {
public:
    explicit HttpClient(HttpClientConfig cfg);
    ~HttpClient() override;
    std::string provider() const override;

protected:
    std::string transcribe_impl(const std::string& pcm16_bytes) override;
    std::string summarize_impl(const std::string& text) override;
    std::string adjudicate_impl(const std::string& prompt) override;

private:
    std::string post(const std::string& op, const std::string& payload);
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Distinct summary terms ranked by tf(summary) * ln(N / (1 + df)), ties by
/// first occurrence. Empty result means "nothing to query" and the caller
/// treats the bundle as unverifiable.
std::vector<std::string> extract_key_terms(const std::string& summary, int k,
                                           const retrieval::Index& index);

struct Prompt {
    std::string text;
    std::string hash; // fnv1a64 hex of text
    std::vector<std::string> article_ids;
};

/// Deterministic adjudication prompt: instruction block, numbered article
/// excerpts (title + first excerpt_chars chars of body), the summary, and the
/// single-token answer contract. With no articles the evidence section is the
/// literal marker "NO ARTICLES RETRIEVED".
Prompt assemble_prompt(const std::string& summary,
                       const std::vector<retrieval::Index::Hit>& articles,
                       int excerpt_chars = 1200);

enum class Decision { true_claims, false_claims, unverifiable };
const char* decision_name(Decision d);

struct Verdict {
    Decision decision = Decision::unverifiable;
    std::string rationale;
    std::vector<std::string> cited_article_ids;
    std::string prompt_hash;
};

/// First whitespace-delimited token matched case-insensitively against
/// {TRUE, FALSE, UNVERIFIABLE}; the remainder is the rationale. Anything else
/// raises UnparseableVerdict with the raw text preserved in the message.
Verdict parse_verdict(const std::string& raw);

struct VerifyOptions {
    int top_k = 3;
    int key_terms = 10;
    int excerpt_chars = 1200;
    int summary_skip_chars = 200; // short transcripts skip the summarize call
    int retry_attempts = 3;
    int retry_base_ms = 100;
    bool retrieve_from_transcript = false;
    std::optional<std::string> since;
};

struct ApiTally {
    int64_t llm = 0;
    int64_t database = 0;
};

/// transcribe -> summarize -> key terms -> retrieve -> prompt -> adjudicate
/// -> parse. Empty transcripts and empty key-term lists short-circuit to
/// unverifiable without touching the index or the adjudicator. Client calls
/// retry on transport errors (exponential backoff); a verdict that stays
/// unparseable after the retry budget maps to unverifiable.
Verdict verify_claims(const media::SfvBundle& bundle, TextClient& client,
                      const retrieval::Index& index, const VerifyOptions& opts,
                      ApiTally* tally = nullptr, CallCounter* counter = nullptr);

} // namespace vimguard::verify
