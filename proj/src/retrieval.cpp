#include "vimguard/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vimguard/error.hpp"
#include "vimguard/util.hpp"

namespace vimguard::retrieval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// 50 high-frequency English function words. Length-1 words ("a", "i") are
// already removed by the min-length rule and are not listed.
const std::vector<std::string> kStopwords = {
    "an",   "and",  "are",   "as",    "at",    "be",    "but",  "by",   "for",  "from",
    "had",  "has",  "have",  "he",    "her",   "his",   "if",   "in",   "into", "is",
    "it",   "its",  "not",   "of",    "on",    "or",    "she",  "so",   "than", "that",
    "the",  "their", "them", "then",  "there", "these", "they", "this", "to",   "was",
    "we",   "were", "what",  "when",  "which", "who",   "will", "with", "you",  "your",
};

const std::set<std::string>& stopword_set() {
    static const std::set<std::string> s(kStopwords.begin(), kStopwords.end());
    return s;
}

// LEB128-style unsigned varint.
void put_varint(std::string& out, uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<char>((v & 0x7f) | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<char>(v));
}

uint64_t get_varint(const std::string& s, size_t& off) {
    uint64_t v = 0;
    int shift = 0;
    while (true) {
        require(off < s.size(), Err::BadHeader, "truncated varint");
        const uint8_t byte = static_cast<uint8_t>(s[off++]);
        v |= static_cast<uint64_t>(byte & 0x7f) << shift;
        if (!(byte & 0x80)) break;
        shift += 7;
        require(shift < 64, Err::BadHeader, "varint too long");
    }
    return v;
}

json article_to_json(const Article& a) {
    json j;
    j["id"] = a.id;
    j["title"] = a.title;
    j["body"] = a.body;
    j["source"] = a.source;
    j["published_at"] = a.published_at ? json(*a.published_at) : json(nullptr);
    return j;
}

Article article_from_json(const json& j) {
    Article a;
    a.id = j.at("id");
    a.title = j.value("title", "");
    a.body = j.at("body");
    a.source = j.value("source", "other");
    if (j.contains("published_at") && !j["published_at"].is_null())
        a.published_at = j["published_at"].get<std::string>();
    return a;
}

} // namespace

const std::vector<std::string>& stopwords() { return kStopwords; }

std::vector<std::string> tokenize_text(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (cur.size() >= 2 && !stopword_set().count(cur)) out.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c) && c < 128) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

Index Index::build(std::vector<Article> articles, const Bm25Params& params) {
    require(!articles.empty(), Err::EmptyCorpus, "cannot index an empty corpus");
    std::sort(articles.begin(), articles.end(),
              [](const Article& a, const Article& b) { return a.id < b.id; });
    for (size_t i = 1; i < articles.size(); ++i)
        require(articles[i].id != articles[i - 1].id, Err::DuplicateId,
                "duplicate article id: " + articles[i].id);
    for (const Article& a : articles)
        require(!a.body.empty(), Err::BadHeader, "article body must be non-empty: " + a.id);

    Index idx;
    idx.params_ = params;
    idx.articles_ = std::move(articles);
    idx.doc_len_.resize(idx.articles_.size());

    int64_t total_len = 0;
    for (size_t d = 0; d < idx.articles_.size(); ++d) {
        const Article& a = idx.articles_[d];
        idx.id_to_doc_[a.id] = static_cast<int>(d);
        const std::vector<std::string> terms = tokenize_text(a.title + " " + a.body);
        idx.doc_len_[d] = static_cast<int>(terms.size());
        total_len += idx.doc_len_[d];
        idx.stats_.doc_lens[a.id] = idx.doc_len_[d];

        std::map<std::string, int> tf;
        for (const std::string& t : terms) tf[t] += 1;
        for (const auto& [term, count] : tf) {
            PostingList& pl = idx.postings_[term];
            pl.term = term;
            pl.entries.push_back({static_cast<int>(d), count});
        }
    }
    idx.stats_.n_docs = static_cast<int>(idx.articles_.size());
    idx.stats_.avg_doc_len = static_cast<double>(total_len) / idx.stats_.n_docs;
    return idx;
}

double Index::idf(int df) const {
    const double n = stats_.n_docs;
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Index::score_one(double idf_t, int tf, int dl) const {
    const double norm = params_.k1 * (1.0 - params_.b + params_.b * dl / stats_.avg_doc_len);
    return idf_t * (tf * (params_.k1 + 1.0)) / (tf + norm);
}

int Index::doc_frequency(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.doc_frequency();
}

const Article* Index::find(const std::string& doc_id) const {
    auto it = id_to_doc_.find(doc_id);
    return it == id_to_doc_.end() ? nullptr : &articles_[it->second];
}

double Index::bm25_score(const std::vector<std::string>& query_terms,
                         const std::string& doc_id) const {
    auto it = id_to_doc_.find(doc_id);
    require(it != id_to_doc_.end(), Err::UnknownDoc, "unknown doc id: " + doc_id);
    const int d = it->second;

    double score = 0.0;
    std::set<std::string> seen;
    for (const std::string& term : query_terms) {
        if (!seen.insert(term).second) continue; // distinct terms only
        auto pit = postings_.find(term);
        if (pit == postings_.end()) continue;
        const auto& entries = pit->second.entries;
        auto eit = std::lower_bound(entries.begin(), entries.end(), d,
                                    [](const Posting& p, int doc) { return p.doc < doc; });
        if (eit == entries.end() || eit->doc != d) continue;
        score += score_one(idf(pit->second.doc_frequency()), eit->tf, doc_len_[d]);
    }
    return score;
}

std::vector<Index::Hit> Index::retrieve(const std::vector<std::string>& query_terms, int k,
                                        const std::optional<std::string>& since) const {
    require(k >= 1, Err::ConfigError, "k must be >= 1");

    // Accumulate per-document in query-term order so sums match a brute-force
    // scan bit for bit.
    std::unordered_map<int, double> scores;
    std::set<std::string> seen;
    for (const std::string& term : query_terms) {
        if (!seen.insert(term).second) continue;
        auto pit = postings_.find(term);
        if (pit == postings_.end()) continue;
        const double idf_t = idf(pit->second.doc_frequency());
        for (const Posting& p : pit->second.entries)
            scores[p.doc] += score_one(idf_t, p.tf, doc_len_[p.doc]);
    }

    std::vector<Hit> hits;
    hits.reserve(scores.size());
    for (const auto& [doc, score] : scores) {
        if (score <= 0.0) continue;
        const Article& a = articles_[doc];
        if (since) {
            if (!a.published_at || *a.published_at < *since) continue;
        }
        hits.push_back({&a, score});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& x, const Hit& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.article->id < y.article->id;
    });
    if (static_cast<int>(hits.size()) > k) hits.resize(k);
    return hits;
}

void Index::save(const fs::path& dir) const {
    fs::create_directories(dir);

    std::string postings_bin;
    std::string terms_tsv = "term\tdf\toffset\n";
    for (const auto& [term, pl] : postings_) {
        terms_tsv += term;
        terms_tsv += '\t';
        terms_tsv += std::to_string(pl.doc_frequency());
        terms_tsv += '\t';
        terms_tsv += std::to_string(postings_bin.size());
        terms_tsv += '\n';
        int prev = 0;
        for (const Posting& p : pl.entries) {
            put_varint(postings_bin, static_cast<uint64_t>(p.doc - prev));
            put_varint(postings_bin, static_cast<uint64_t>(p.tf));
            prev = p.doc;
        }
    }
    write_file(dir / "terms.tsv", terms_tsv);
    write_file(dir / "postings.bin", postings_bin);

    json stats;
    stats["n_docs"] = stats_.n_docs;
    stats["avg_doc_len"] = stats_.avg_doc_len;
    stats["doc_lens"] = stats_.doc_lens;
    stats["bm25"] = {{"k1", params_.k1}, {"b", params_.b}};
    write_file(dir / "stats.json", stats.dump(2) + "\n");

    write_corpus_jsonl(dir / "articles.jsonl", articles_);
}

Index Index::load(const fs::path& dir) {
    const json stats = json::parse(read_file(dir / "stats.json"));
    Bm25Params params;
    params.k1 = stats.at("bm25").at("k1");
    params.b = stats.at("bm25").at("b");

    Index idx = build(read_corpus_jsonl(dir / "articles.jsonl"), params);

    // The postings are rebuilt from the corpus; verify the stored directory
    // agrees so corruption cannot pass silently.
    require(stats.at("n_docs") == idx.stats_.n_docs, Err::BadHeader, "stats.json n_docs mismatch");
    const std::string terms_tsv = read_file(dir / "terms.tsv");
    const std::string postings_bin = read_file(dir / "postings.bin");
    std::istringstream lines(terms_tsv);
    std::string line;
    std::getline(lines, line); // header
    size_t n_terms = 0;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const size_t tab1 = line.find('\t');
        const size_t tab2 = line.find('\t', tab1 + 1);
        require(tab1 != std::string::npos && tab2 != std::string::npos, Err::BadHeader,
                "malformed terms.tsv");
        const std::string term = line.substr(0, tab1);
        const int df = std::stoi(line.substr(tab1 + 1, tab2 - tab1 - 1));
        size_t off = std::stoull(line.substr(tab2 + 1));
        auto it = idx.postings_.find(term);
        require(it != idx.postings_.end() && it->second.doc_frequency() == df, Err::BadHeader,
                "terms.tsv does not match corpus: " + term);
        int prev = 0;
        for (const Posting& p : it->second.entries) {
            const int doc = prev + static_cast<int>(get_varint(postings_bin, off));
            const int tf = static_cast<int>(get_varint(postings_bin, off));
            require(doc == p.doc && tf == p.tf, Err::BadHeader,
                    "postings.bin does not match corpus: " + term);
            prev = doc;
        }
        ++n_terms;
    }
    require(n_terms == idx.postings_.size(), Err::BadHeader, "terms.tsv term count mismatch");
    return idx;
}

uint64_t Index::checksum() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const Article& a : articles_) {
        h = fnv1a64(a.id, h);
        h = fnv1a64(a.title, h);
        h = fnv1a64(a.body, h);
    }
    return h;
}

std::vector<Article> read_corpus_jsonl(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::vector<Article> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(article_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            fail(Err::BadHeader,
                 "bad corpus line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_corpus_jsonl(const fs::path& path, const std::vector<Article>& articles) {
    std::string out;
    for (const Article& a : articles) {
        out += article_to_json(a).dump();
        out += '\n';
    }
    write_file(path, out);
}

} // namespace vimguard::retrieval
