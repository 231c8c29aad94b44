#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vimguard/retrieval.hpp"
#include "vimguard/synthetic.hpp"
#include "vimguard/util.hpp"
#include "vimguard/verify.hpp"

namespace fs = std::filesystem;
using namespace vimguard;
using nlohmann::json;

namespace {

media::SfvBundle fixture_bundle(bool claimlike, uint64_t seed, const std::string& id) {
    synth::BundleOptions opts;
    opts.id = id;
    opts.claimlike = claimlike;
    return synth::make_bundle(seed, opts);
}

std::unique_ptr<verify::ScriptClient> scripted(const std::string& transcript,
                                               const std::string& verdict) {
    json script;
    script["transcribe"] = {{"default", transcript}};
    script["summarize"] = {{"default", "SUMMARY"}};
    script["adjudicate"] = {{"default", verdict}};
    return verify::ScriptClient::from_json_text(script.dump());
}

} // namespace

TEST_CASE("extract_key_terms ranks by tf * ln(N/(1+df))") {
    const retrieval::Index idx = retrieval::Index::build(synth::fixture_corpus());

    SUBCASE("a repeated corpus-rare term ranks first") {
        const auto terms = verify::extract_key_terms(
            "zebra zebra zebra bridge inspection", 10, idx);
        REQUIRE(!terms.empty());
        CHECK(terms[0] == "zebra");
    }

    SUBCASE("stopword-only summaries give an empty list") {
        CHECK(verify::extract_key_terms("the and with from they", 10, idx).empty());
        CHECK(verify::extract_key_terms("", 10, idx).empty());
    }

    SUBCASE("scores match a hand-computed tf-idf table") {
        // Summary terms against the fixture corpus (N = 6):
        //   kelp:   tf 3, df 0 -> 3 * ln(6/1) = 5.37528
        //   bridge: tf 2, df 1 -> 2 * ln(6/2) = 2.19722
        //   solar:  tf 1, df 1 -> 1 * ln(6/2) = 1.09861
        //   museum: tf 1, df 1 -> ln 3 (tie with solar; first occurrence wins,
        //   and solar appears before museum below)
        const auto terms = verify::extract_key_terms(
            "kelp kelp kelp bridge bridge solar museum", 4, idx);
        REQUIRE(terms.size() == 4);
        CHECK(terms[0] == "kelp");
        CHECK(terms[1] == "bridge");
        CHECK(terms[2] == "solar");
        CHECK(terms[3] == "museum");
    }

    SUBCASE("top-k truncates") {
        const auto terms = verify::extract_key_terms("one two three four five six", 3, idx);
        CHECK(terms.size() == 3);
    }
}

TEST_CASE("assemble_prompt") {
    const retrieval::Index idx = retrieval::Index::build(synth::fixture_corpus());

    SUBCASE("zero articles produce the NO ARTICLES RETRIEVED marker") {
        const verify::Prompt p = verify::assemble_prompt("some summary", {});
        CHECK(p.text.find("NO ARTICLES RETRIEVED") != std::string::npos);
        CHECK(p.article_ids.empty());
    }

    SUBCASE("identical inputs give identical prompt hashes") {
        const auto hits = idx.retrieve({"bridge", "avalon"}, 3);
        const verify::Prompt a = verify::assemble_prompt("summary text", hits);
        const verify::Prompt b = verify::assemble_prompt("summary text", hits);
        CHECK(a.hash == b.hash);
        CHECK(a.text == b.text);
        const verify::Prompt c = verify::assemble_prompt("different summary", hits);
        CHECK(c.hash != a.hash);
    }

    SUBCASE("numbered excerpts carry title and capped body") {
        const auto hits = idx.retrieve({"bridge", "avalon"}, 2);
        REQUIRE(!hits.empty());
        const verify::Prompt p = verify::assemble_prompt("s", hits, 40);
        CHECK(p.text.find("[1] " + hits[0].article->title) != std::string::npos);
        CHECK(p.text.find(hits[0].article->body.substr(0, 40)) != std::string::npos);
        // The cap keeps the rest of the body out.
        CHECK(p.text.find(hits[0].article->body.substr(0, 80)) == std::string::npos);
        CHECK(p.article_ids.size() == hits.size());
    }

    SUBCASE("fixture inputs reproduce the committed golden prompt byte for byte") {
        const auto hits = idx.retrieve({"avalon", "bridge", "collapsed"}, 3);
        const verify::Prompt p = verify::assemble_prompt(
            "Breaking update the Avalon stone bridge collapsed into the river yesterday "
            "witnesses claim. MARKER_FALSE",
            hits);
        const std::string golden = read_file(fs::path(TEST_DATA_DIR) / "golden_prompt.txt");
        CHECK(p.text == golden);
    }
}

TEST_CASE("parse_verdict") {
    SUBCASE("FALSE with rationale") {
        const verify::Verdict v = verify::parse_verdict("FALSE The bridge is intact.");
        CHECK(v.decision == verify::Decision::false_claims);
        CHECK(v.rationale == "The bridge is intact.");
    }
    SUBCASE("case-insensitive token, leading whitespace") {
        CHECK(verify::parse_verdict("  true because reasons").decision ==
              verify::Decision::true_claims);
        CHECK(verify::parse_verdict("Unverifiable").decision == verify::Decision::unverifiable);
        CHECK(verify::parse_verdict("Unverifiable").rationale.empty());
    }
    SUBCASE("anything else is unparseable") {
        for (const char* raw : {"maybe?", "", "TRUEISH claim", "FALSE.", "0.7 confident"}) {
            try {
                verify::parse_verdict(raw);
                FAIL("expected throw for: ", raw);
            } catch (const VgError& e) {
                CHECK(e.code() == Err::UnparseableVerdict);
            }
        }
    }
}

TEST_CASE("script client resolves by hash, rule, then default") {
    json script;
    script["adjudicate"] = {
        {"by_hash", {{content_hash("exact prompt"), "TRUE exact match"}}},
        {"rules", json::array({{{"contains", "bridge"}, {"response", "FALSE rule match"}}})},
        {"default", "UNVERIFIABLE fallback"}};
    script["transcribe"] = {{"default", "words"}};
    script["summarize"] = {{"default", "summary"}};
    auto client = verify::ScriptClient::from_json_text(script.dump());

    CHECK(client->adjudicate("exact prompt") == "TRUE exact match");
    CHECK(client->adjudicate("the bridge fell") == "FALSE rule match");
    CHECK(client->adjudicate("nothing matches") == "UNVERIFIABLE fallback");
}

TEST_CASE("verify_claims end to end with scripted mocks") {
    const retrieval::Index idx = retrieval::Index::build(synth::fixture_corpus());
    const media::SfvBundle bundle = fixture_bundle(true, 11, "clip-1");
    verify::VerifyOptions opts;
    opts.retry_base_ms = 1;

    SUBCASE("scripted FALSE gives false_claims with cited fixture articles") {
        auto client = scripted(
            "Breaking update the Avalon stone bridge collapsed into the river yesterday "
            "witnesses claim unverified reports continue.",
            "FALSE The inspection article reports the bridge intact.");
        verify::ApiTally tally;
        verify::CallCounter counter;
        const verify::Verdict v = verify::verify_claims(bundle, *client, idx, opts, &tally, &counter);
        CHECK(v.decision == verify::Decision::false_claims);
        CHECK(!v.cited_article_ids.empty());
        // Cited ids must be retrieved fixture articles.
        for (const std::string& id : v.cited_article_ids)
            CHECK(idx.find(id) != nullptr);
        CHECK(std::find(v.cited_article_ids.begin(), v.cited_article_ids.end(), "fx-bridge") !=
              v.cited_article_ids.end());
        CHECK(!v.prompt_hash.empty());
        CHECK(tally.llm == 2); // transcribe + adjudicate (short transcript skips summarize)
        CHECK(tally.database == 1);
        CHECK(counter.transcribe == 1);
        CHECK(counter.summarize == 0);
        CHECK(counter.adjudicate == 1);
        CHECK(counter.retrieval == 1);
    }

    SUBCASE("long transcripts get a summarize call") {
        std::string longtext(300, 'x');
        longtext += " avalon bridge";
        json script;
        script["transcribe"] = {{"default", longtext}};
        script["summarize"] = {{"default", "avalon bridge collapse rumor"}};
        script["adjudicate"] = {{"default", "FALSE rumor debunked"}};
        auto client = verify::ScriptClient::from_json_text(script.dump());
        verify::ApiTally tally;
        verify::CallCounter counter;
        const verify::Verdict v = verify::verify_claims(bundle, *client, idx, opts, &tally, &counter);
        CHECK(v.decision == verify::Decision::false_claims);
        CHECK(counter.summarize == 1);
        CHECK(tally.llm == 3); // transcribe + summarize + adjudicate
    }

    SUBCASE("empty transcript short-circuits to unverifiable without adjudicating") {
        auto client = scripted("", "FALSE never reached");
        verify::ApiTally tally;
        verify::CallCounter counter;
        const verify::Verdict v = verify::verify_claims(bundle, *client, idx, opts, &tally, &counter);
        CHECK(v.decision == verify::Decision::unverifiable);
        CHECK(counter.adjudicate == 0);
        CHECK(counter.retrieval == 0);
        CHECK(tally.llm == 1);
        CHECK(tally.database == 0);
    }

    SUBCASE("stopword-only transcript is unverifiable without retrieval") {
        auto client = scripted("the they with", "TRUE never reached");
        verify::ApiTally tally;
        verify::CallCounter counter;
        const verify::Verdict v = verify::verify_claims(bundle, *client, idx, opts, &tally, &counter);
        CHECK(v.decision == verify::Decision::unverifiable);
        CHECK(counter.retrieval == 0);
        CHECK(counter.adjudicate == 0);
    }

    SUBCASE("identical runs produce identical verdicts and prompt hashes") {
        auto client = scripted("the avalon bridge collapsed witnesses claim", "FALSE intact.");
        const verify::Verdict a = verify::verify_claims(bundle, *client, idx, opts);
        const verify::Verdict b = verify::verify_claims(bundle, *client, idx, opts);
        CHECK(a.prompt_hash == b.prompt_hash);
        CHECK(a.decision == b.decision);
        CHECK(a.rationale == b.rationale);
        CHECK(a.cited_article_ids == b.cited_article_ids);
    }

    SUBCASE("unparseable adjudications settle to unverifiable after retries") {
        auto client = scripted("the avalon bridge collapsed", "hmm, not sure about this");
        verify::CallCounter counter;
        const verify::Verdict v =
            verify::verify_claims(bundle, *client, idx, opts, nullptr, &counter);
        CHECK(v.decision == verify::Decision::unverifiable);
        CHECK(counter.adjudicate == 3); // full retry budget consumed
    }
}

namespace {

/// Fails the first `failures` adjudicate calls with a transport error.
class FlakyClient : public verify::TextClient {
public:
    explicit FlakyClient(int failures) : failures_(failures) {}
    std::string provider() const override { return "flaky"; }
    int attempts = 0;

protected:
    std::string transcribe_impl(const std::string&) override {
        return "the avalon bridge collapsed yesterday";
    }
    std::string summarize_impl(const std::string& t) override { return t; }
    std::string adjudicate_impl(const std::string&) override {
        ++attempts;
        if (attempts <= failures_) fail(Err::TransportError, "synthetic outage");
        return "FALSE recovered";
    }

private:
    int failures_;
};

} // namespace

TEST_CASE("transport errors are retried with backoff") {
    const retrieval::Index idx = retrieval::Index::build(synth::fixture_corpus());
    const media::SfvBundle bundle = fixture_bundle(true, 12, "clip-2");
    verify::VerifyOptions opts;
    opts.retry_base_ms = 1;

    SUBCASE("two failures then success") {
        FlakyClient client(2);
        const verify::Verdict v = verify::verify_claims(bundle, client, idx, opts);
        CHECK(v.decision == verify::Decision::false_claims);
        CHECK(client.attempts == 3);
    }

    SUBCASE("persistent failure propagates after the attempt budget") {
        FlakyClient client(99);
        try {
            verify::verify_claims(bundle, client, idx, opts);
            FAIL("expected throw");
        } catch (const VgError& e) {
            CHECK(e.code() == Err::TransportError);
        }
        CHECK(client.attempts == 3);
    }
}

TEST_CASE("http adapter speaks the wire schema against a local server") {
    httplib::Server server;
    std::atomic<int> requests{0};
    std::string seen_auth;
    server.Post("/v1/text", [&](const httplib::Request& req, httplib::Response& res) {
        requests += 1;
        if (req.has_header("Authorization")) seen_auth = req.get_header_value("Authorization");
        const json body = json::parse(req.body);
        const std::string op = body.at("op");
        json out;
        if (op == "transcribe")
            out["output"] = "transcribed " + std::to_string(body.at("payload").get<std::string>().size());
        else if (op == "summarize")
            out["output"] = "summary of " + body.at("payload").get<std::string>();
        else
            out["output"] = "TRUE adjudicated";
        res.set_content(out.dump(), "application/json");
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("VIMGUARD_API_KEY", "sekrit-token", 1);
    verify::HttpClientConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    verify::HttpClient client(cfg);

    const media::SfvBundle bundle = fixture_bundle(true, 13, "clip-3");
    const verify::Transcript t = client.transcribe(bundle);
    CHECK(t.text.rfind("transcribed ", 0) == 0);
    CHECK(t.provider == "http:" + cfg.base_url);
    CHECK(client.summarize("abc") == "summary of abc");
    CHECK(client.adjudicate("prompt") == "TRUE adjudicated");
    CHECK(requests == 3);
    CHECK(seen_auth == "Bearer sekrit-token");

    server.stop();
    server_thread.join();

    // Dead server -> transport error.
    try {
        client.adjudicate("prompt");
        FAIL("expected throw");
    } catch (const VgError& e) {
        CHECK(e.code() == Err::TransportError);
    }
}
