#include "vimguard/verify.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vimguard/error.hpp"
#include "vimguard/util.hpp"

namespace vimguard::verify {

using nlohmann::json;

// ---- TextClient -------------------------------------------------------------

Transcript TextClient::transcribe(const media::SfvBundle& bundle) {
    if (counter_) counter_->transcribe += 1;
    Transcript t;
    t.text = transcribe_impl(media::audio_pcm16_bytes(bundle));
    t.source_id = bundle.id;
    t.provider = provider();
    return t;
}

std::string TextClient::summarize(const std::string& text) {
    if (counter_) counter_->summarize += 1;
    return summarize_impl(text);
}

std::string TextClient::adjudicate(const std::string& prompt) {
    if (counter_) counter_->adjudicate += 1;
    return adjudicate_impl(prompt);
}

// ---- ScriptClient -----------------------------------------------------------

struct ScriptClient::OpScript {
    json ops;
};

std::unique_ptr<ScriptClient> ScriptClient::from_file(const std::filesystem::path& path) {
    return from_json_text(read_file(path));
}

std::unique_ptr<ScriptClient> ScriptClient::from_json_text(const std::string& text) {
    auto client = std::unique_ptr<ScriptClient>(new ScriptClient());
    auto script = std::make_shared<OpScript>();
    try {
        script->ops = json::parse(text);
    } catch (const json::exception& e) {
        fail(Err::ConfigError, std::string("bad mock script: ") + e.what());
    }
    client->script_ = script;
    return client;
}

std::string ScriptClient::resolve(const std::string& op, const std::string& payload) const {
    const auto& ops = std::static_pointer_cast<OpScript>(script_)->ops;
    if (!ops.contains(op))
        fail(Err::TransportError, "mock script has no section for op " + op);
    const json& section = ops[op];

    const std::string key = hex64(fnv1a64(payload.data(), payload.size()));
    if (section.contains("by_hash")) {
        const json& by_hash = section["by_hash"];
        if (by_hash.contains(key)) return by_hash[key].get<std::string>();
    }
    if (section.contains("rules")) {
        for (const json& rule : section["rules"]) {
            if (payload.find(rule.at("contains").get<std::string>()) != std::string::npos)
                return rule.at("response").get<std::string>();
        }
    }
    if (section.contains("default")) return section["default"].get<std::string>();
    fail(Err::TransportError, "mock script has no response for " + op + " payload hash " + key);
}

std::string ScriptClient::transcribe_impl(const std::string& payload) {
    return resolve("transcribe", payload);
}
std::string ScriptClient::summarize_impl(const std::string& text) {
    return resolve("summarize", text);
}
std::string ScriptClient::adjudicate_impl(const std::string& prompt) {
    return resolve("adjudicate", prompt);
}

// ---- HttpClient -------------------------------------------------------------

struct HttpClient::Impl {
    HttpClientConfig cfg;
    std::string token;
    std::unique_ptr<httplib::Client> http;
    std::atomic<int> inflight{0};
};

HttpClient::HttpClient(HttpClientConfig cfg) : impl_(std::make_unique<Impl>()) {
    impl_->cfg = std::move(cfg);
    require(!impl_->cfg.base_url.empty(), Err::ConfigError, "http client needs a base url");
    if (const char* tok = std::getenv(impl_->cfg.api_key_env.c_str())) impl_->token = tok;
    impl_->http = std::make_unique<httplib::Client>(impl_->cfg.base_url);
    impl_->http->set_connection_timeout(impl_->cfg.timeout_s);
    impl_->http->set_read_timeout(impl_->cfg.timeout_s);
}

HttpClient::~HttpClient() = default;

std::string HttpClient::provider() const { return "http:" + impl_->cfg.base_url; }

std::string HttpClient::post(const std::string& op, const std::string& payload) {
    // Bound in-flight requests; spin-wait is fine at pipeline parallelism.
    while (true) {
        int cur = impl_->inflight.load();
        if (cur < impl_->cfg.max_inflight &&
            impl_->inflight.compare_exchange_weak(cur, cur + 1))
            break;
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    struct Release {
        std::atomic<int>* n;
        ~Release() { (*n) -= 1; }
    } release{&impl_->inflight};

    json body;
    body["op"] = op;
    body["payload"] = payload;
    httplib::Headers headers;
    if (!impl_->token.empty()) headers.emplace("Authorization", "Bearer " + impl_->token);
    auto res = impl_->http->Post(impl_->cfg.endpoint, headers, body.dump(), "application/json");
    if (!res) fail(Err::TransportError, "http request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        fail(Err::TransportError, "http status " + std::to_string(res->status));
    try {
        return json::parse(res->body).at("output").get<std::string>();
    } catch (const json::exception& e) {
        fail(Err::TransportError, std::string("bad response body: ") + e.what());
    }
}

std::string HttpClient::transcribe_impl(const std::string& pcm16_bytes) {
    return post("transcribe", base64_encode(pcm16_bytes));
}
std::string HttpClient::summarize_impl(const std::string& text) { return post("summarize", text); }
std::string HttpClient::adjudicate_impl(const std::string& prompt) {
    return post("adjudicate", prompt);
}

// ---- key terms --------------------------------------------------------------

std::vector<std::string> extract_key_terms(const std::string& summary, int k,
                                           const retrieval::Index& index) {
    const std::vector<std::string> terms = retrieval::tokenize_text(summary);

    struct TermInfo {
        int tf = 0;
        size_t first = 0;
    };
    std::unordered_map<std::string, TermInfo> info;
    for (size_t i = 0; i < terms.size(); ++i) {
        auto [it, inserted] = info.try_emplace(terms[i], TermInfo{0, i});
        it->second.tf += 1;
    }

    const double n_docs = index.stats().n_docs;
    struct Scored {
        std::string term;
        double score;
        size_t first;
    };
    std::vector<Scored> scored;
    scored.reserve(info.size());
    for (const auto& [term, ti] : info) {
        const double idf = std::log(n_docs / (1.0 + index.doc_frequency(term)));
        scored.push_back({term, ti.tf * idf, ti.first});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.first < b.first;
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(k);

    std::vector<std::string> out;
    out.reserve(scored.size());
    for (const Scored& s : scored) out.push_back(s.term);
    return out;
}

// ---- prompt -----------------------------------------------------------------

Prompt assemble_prompt(const std::string& summary,
                       const std::vector<retrieval::Index::Hit>& articles, int excerpt_chars) {
    std::string text;
    text += "You are a fact-checking assistant. Judge whether the claims in the video\n";
    text += "summary below are supported or contradicted by the retrieved articles.\n";
    text += "\n";
    text += "Retrieved articles:\n";
    if (articles.empty()) {
        text += "NO ARTICLES RETRIEVED\n";
    } else {
        for (size_t i = 0; i < articles.size(); ++i) {
            const retrieval::Article& a = *articles[i].article;
            text += "[" + std::to_string(i + 1) + "] " + a.title + "\n";
            text += a.body.substr(0, static_cast<size_t>(excerpt_chars));
            text += "\n\n";
        }
    }
    text += "Video summary:\n";
    text += summary;
    text += "\n\n";
    text += "Answer with exactly one token from {TRUE, FALSE, UNVERIFIABLE}, followed by a ";
    text += "one-sentence rationale.\n";

    Prompt p;
    p.text = std::move(text);
    p.hash = content_hash(p.text);
    for (const auto& hit : articles) p.article_ids.push_back(hit.article->id);
    return p;
}

// ---- verdict ----------------------------------------------------------------

const char* decision_name(Decision d) {
    switch (d) {
    case Decision::true_claims: return "true_claims";
    case Decision::false_claims: return "false_claims";
    case Decision::unverifiable: return "unverifiable";
    }
    return "?";
}

Verdict parse_verdict(const std::string& raw) {
    size_t start = 0;
    while (start < raw.size() && std::isspace(static_cast<unsigned char>(raw[start]))) ++start;
    size_t end = start;
    while (end < raw.size() && !std::isspace(static_cast<unsigned char>(raw[end]))) ++end;
    std::string token = raw.substr(start, end - start);
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return std::toupper(c); });

    Verdict v;
    if (token == "TRUE")
        v.decision = Decision::true_claims;
    else if (token == "FALSE")
        v.decision = Decision::false_claims;
    else if (token == "UNVERIFIABLE")
        v.decision = Decision::unverifiable;
    else
        fail(Err::UnparseableVerdict, "unparseable verdict: " + raw);

    size_t rat = end;
    while (rat < raw.size() && std::isspace(static_cast<unsigned char>(raw[rat]))) ++rat;
    v.rationale = raw.substr(rat);
    return v;
}

// ---- verify_claims ----------------------------------------------------------

namespace {

/// Retries transport failures with exponential backoff; other errors pass
/// through.
template <typename F>
auto with_retry(F&& call, int attempts, int base_ms) -> decltype(call()) {
    for (int attempt = 1;; ++attempt) {
        try {
            return call();
        } catch (const VgError& e) {
            if (e.code() != Err::TransportError || attempt >= attempts) throw;
            const int delay = base_ms * (1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
}

} // namespace

Verdict verify_claims(const media::SfvBundle& bundle, TextClient& client,
                      const retrieval::Index& index, const VerifyOptions& opts, ApiTally* tally,
                      CallCounter* counter) {
    auto count_llm = [&] {
        if (tally) tally->llm += 1;
    };
    client.attach_counter(counter);

    const Transcript transcript = with_retry([&] { return client.transcribe(bundle); },
                                             opts.retry_attempts, opts.retry_base_ms);
    count_llm();
    if (transcript.text.empty()) {
        Verdict v;
        v.decision = Decision::unverifiable;
        v.rationale = "empty transcript";
        return v;
    }

    std::string summary;
    if (static_cast<int>(transcript.text.size()) < opts.summary_skip_chars) {
        summary = transcript.text; // too short to be worth a summarize call
    } else {
        summary = with_retry([&] { return client.summarize(transcript.text); },
                             opts.retry_attempts, opts.retry_base_ms);
        count_llm();
    }

    const std::string& query_text = opts.retrieve_from_transcript ? transcript.text : summary;
    const std::vector<std::string> terms = extract_key_terms(query_text, opts.key_terms, index);
    if (terms.empty()) {
        Verdict v;
        v.decision = Decision::unverifiable;
        v.rationale = "no key terms in summary";
        return v;
    }

    const auto hits = index.retrieve(terms, opts.top_k, opts.since);
    if (tally) tally->database += 1;
    if (counter) counter->retrieval += 1;

    const Prompt prompt = assemble_prompt(summary, hits, opts.excerpt_chars);

    // Unparseable responses consume the same retry budget as transport
    // failures; deterministic clients will simply repeat themselves.
    for (int attempt = 1;; ++attempt) {
        const std::string raw = with_retry([&] { return client.adjudicate(prompt.text); },
                                           opts.retry_attempts, opts.retry_base_ms);
        count_llm();
        try {
            Verdict v = parse_verdict(raw);
            v.cited_article_ids = prompt.article_ids;
            v.prompt_hash = prompt.hash;
            return v;
        } catch (const VgError& e) {
            if (e.code() != Err::UnparseableVerdict) throw;
            if (attempt >= opts.retry_attempts) {
                Verdict v;
                v.decision = Decision::unverifiable;
                v.rationale = std::string("unparseable adjudicator output: ") + raw;
                v.cited_article_ids = prompt.article_ids;
                v.prompt_hash = prompt.hash;
                return v;
            }
        }
    }
}

} // namespace vimguard::verify
