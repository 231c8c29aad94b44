#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace vimguard::retrieval {

struct Article {
    std::string id;
    std::string title;
    std::string body;
    std::string source = "other"; // wikipedia | claimreview | news | other
    std::optional<std::string> published_at; // ISO-8601 date
};

struct Posting {
    int doc = 0; // internal dense id (articles sorted by string id)
    int tf = 0;
};

struct PostingList {
    std::string term;
    std::vector<Posting> entries; // sorted by doc id
    int doc_frequency() const { return static_cast<int>(entries.size()); }
};

struct IndexStats {
    int n_docs = 0;
    double avg_doc_len = 0.0;
    std::map<std::string, int> doc_lens; // string doc id -> token count
};

/// Lowercase, split on non-alphanumeric ASCII, drop terms shorter than 2
/// chars and the 50-word stopword list (see stopwords()).
std::vector<std::string> tokenize_text(const std::string& text);

const std::vector<std::string>& stopwords(); // exactly 50 entries

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Immutable BM25 inverted index over an article corpus. Articles are indexed
/// over title + body; internal ids follow the sorted string-id order, so
/// scores and the on-disk form are invariant to insertion order.
class Index {
public:
    static Index build(std::vector<Article> articles, const Bm25Params& params = {});

    /// Okapi BM25: sum over distinct query terms of
    /// IDF(t) * tf*(k1+1) / (tf + k1*(1 - b + b*dl/avgdl)),
    /// IDF(t) = ln(1 + (N - df + 0.5)/(df + 0.5)).
    double bm25_score(const std::vector<std::string>& query_terms, const std::string& doc_id) const;

    struct Hit {
        const Article* article;
        double score;
    };

    /// Top-k by score desc, doc id asc on ties. Zero-score documents are
    /// never returned. `since` keeps only articles with published_at >= since
    /// (ISO dates compare lexicographically); undated articles are dropped
    /// when the filter is active.
    std::vector<Hit> retrieve(const std::vector<std::string>& query_terms, int k,
                              const std::optional<std::string>& since = std::nullopt) const;

    const IndexStats& stats() const { return stats_; }
    const Bm25Params& params() const { return params_; }
    int doc_frequency(const std::string& term) const;
    const std::vector<Article>& articles() const { return articles_; }
    const Article* find(const std::string& doc_id) const;

    void save(const std::filesystem::path& dir) const;
    static Index load(const std::filesystem::path& dir);

    uint64_t checksum() const;

private:
    std::vector<Article> articles_; // sorted by id
    std::unordered_map<std::string, int> id_to_doc_;
    std::map<std::string, PostingList> postings_; // ordered for deterministic io
    std::vector<int> doc_len_;
    IndexStats stats_;
    Bm25Params params_;

    double idf(int df) const;
    double score_one(double idf_t, int tf, int dl) const;
};

std::vector<Article> read_corpus_jsonl(const std::filesystem::path& path);
void write_corpus_jsonl(const std::filesystem::path& path, const std::vector<Article>& articles);

} // namespace vimguard::retrieval
