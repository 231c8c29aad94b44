#include "vimguard/claim_detect.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <nlohmann/json.hpp>

#include "vimguard/checkpoint.hpp"
#include "vimguard/error.hpp"
#include "vimguard/rng.hpp"

namespace vimguard::claim {

using nlohmann::json;

namespace {

// §-free restatement of the scraping taxonomy the detector was built around.
const std::vector<std::string> kClaimTags = {
    "podcast", "news",    "politics",   "election",  "health",    "fitness",
    "nutrition", "science", "history",  "technology", "investing", "finance",
};
const std::vector<std::string> kNoClaimTags = {
    "dance", "music",  "challenge", "memes",   "prank",  "skit",   "standup", "gaming", "movies",
    "art",   "fashion", "beauty",   "diy",     "cooking", "travel", "adventure", "pets",
};

std::string normalize_tag(const std::string& tag) {
    std::string out;
    for (char c : tag) {
        if (c == '#') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

int forward_logits(nnet::Tape<float>& t, const ClaimHead& head, const nnet::Binding& b, int x) {
    auto node = [&](const char* name) {
        for (size_t i = 0; i < head.params.size(); ++i)
            if (head.params.entries()[i].name == name) return b.node_ids[i];
        fail(Err::ConfigError, std::string("missing head parameter ") + name);
    };
    const int h = nnet::gelu(t, nnet::linear(t, x, node("w1"), node("b1")));
    return nnet::linear(t, h, node("w2"), node("b2"));
}

} // namespace

const std::vector<std::string>& claim_hashtags() { return kClaimTags; }
const std::vector<std::string>& no_claim_hashtags() { return kNoClaimTags; }

Label label_from_hashtags(const std::vector<std::string>& tags) {
    bool any_claim = false, any_no_claim = false;
    for (const std::string& raw : tags) {
        const std::string tag = normalize_tag(raw);
        if (std::find(kClaimTags.begin(), kClaimTags.end(), tag) != kClaimTags.end())
            any_claim = true;
        if (std::find(kNoClaimTags.begin(), kNoClaimTags.end(), tag) != kNoClaimTags.end())
            any_no_claim = true;
    }
    if (any_claim && !any_no_claim) return Label::claim;
    if (any_no_claim && !any_claim) return Label::no_claim;
    return Label::ambiguous;
}

ClaimHead make_head(int input_dim, int hidden, double threshold, uint64_t seed) {
    require(input_dim >= 1 && hidden >= 1, Err::ConfigError, "bad head dims");
    require(threshold > 0.0 && threshold < 1.0, Err::ConfigError, "threshold must be in (0,1)");
    ClaimHead head;
    head.input_dim = input_dim;
    head.hidden = hidden;
    head.threshold = threshold;
    Rng rng(seed);
    auto tn = [&](std::vector<int> shape) {
        auto t = nnet::Tensor32::zeros(std::move(shape));
        for (float& v : t.data) v = static_cast<float>(rng.truncated_normal(0.02));
        return t;
    };
    head.params.add("w1", tn({input_dim, hidden}));
    head.params.add("b1", nnet::Tensor32::zeros({1, hidden}));
    head.params.add("w2", tn({hidden, 1}));
    head.params.add("b2", nnet::Tensor32::zeros({1, 1}));
    return head;
}

FinetuneResult finetune(ClaimHead& head, const std::vector<std::vector<float>>& embeddings,
                        const std::vector<int>& labels, const FinetuneOptions& opts) {
    require(embeddings.size() == labels.size(), Err::ShapeMismatch,
            "embedding/label count mismatch");
    const int n = static_cast<int>(embeddings.size());
    int n_pos = 0;
    for (int y : labels) n_pos += y ? 1 : 0;
    const int n_neg = n - n_pos;
    require(n_pos >= 2 && n_neg >= 2, Err::SingleClassDataset,
            "need at least 2 examples per class");
    for (const auto& e : embeddings)
        require(static_cast<int>(e.size()) == head.input_dim, Err::DimMismatch,
                "embedding dim does not match head");

    nnet::Tensor32 x = nnet::Tensor32::zeros({n, head.input_dim});
    for (int i = 0; i < n; ++i)
        std::copy(embeddings[i].begin(), embeddings[i].end(),
                  x.data.begin() + static_cast<size_t>(i) * head.input_dim);

    // Inverse-frequency class weights against skewed scraped sets.
    std::vector<float> weights(n);
    for (int i = 0; i < n; ++i)
        weights[i] = labels[i] ? static_cast<float>(n) / (2.0f * n_pos)
                               : static_cast<float>(n) / (2.0f * n_neg);

    nnet::AdamState<float> opt;
    nnet::AdamConfig adam;
    adam.lr = opts.lr;

    FinetuneResult result;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        nnet::Tape<float> t;
        nnet::Binding b = nnet::bind_params(t, head.params);
        const int logits = forward_logits(t, head, b, nnet::leaf(t, x));
        const int loss = nnet::bce_logits_mean(t, logits, labels, weights);
        t.backward(loss);
        nnet::read_grads(t, b, head.params);
        nnet::adam_step(head.params, opt, adam);

        int correct = 0;
        const nnet::Tensor32& z = t.val(logits);
        for (int i = 0; i < n; ++i) {
            const bool pred = sigmoid(z.data[i]) >= 0.5;
            correct += (pred == (labels[i] != 0)) ? 1 : 0;
        }
        result.epoch_accuracy.push_back(static_cast<double>(correct) / n);
    }
    return result;
}

double head_logit(const ClaimHead& head, const std::vector<float>& fused) {
    require(static_cast<int>(fused.size()) == head.input_dim, Err::DimMismatch,
            "embedding dim does not match head");
    const auto& w1 = head.params["w1"];
    const auto& b1 = head.params["b1"];
    const auto& w2 = head.params["w2"];
    const auto& b2 = head.params["b2"];
    std::vector<double> h(head.hidden, 0.0);
    for (int j = 0; j < head.hidden; ++j) {
        double acc = b1.data[j];
        for (int i = 0; i < head.input_dim; ++i) acc += fused[i] * w1.at(i, j);
        h[j] = acc * 0.5 * (1.0 + std::erf(acc / std::sqrt(2.0)));
    }
    double z = b2.data[0];
    for (int j = 0; j < head.hidden; ++j) z += h[j] * w2.data[j];
    return z;
}

ClaimDecision decide(const ClaimHead& head, const mae::Embedding& fused) {
    const double z = head_logit(head, fused.v);
    ClaimDecision d;
    d.probability = sigmoid(z);
    d.has_claim = d.probability >= head.threshold;
    d.embedding_ref = fused.source_id;
    return d;
}

void save_head(const std::filesystem::path& path, const ClaimHead& head) {
    json meta;
    meta["kind"] = "claim_head";
    meta["input_dim"] = head.input_dim;
    meta["hidden"] = head.hidden;
    meta["threshold"] = head.threshold;
    std::vector<ckpt::NamedTensor> tensors;
    for (const auto& e : head.params.entries()) tensors.push_back({e.name, &e.value});
    ckpt::save(path, meta, tensors);
}

ClaimHead load_head(const std::filesystem::path& path) {
    ckpt::Loaded file = ckpt::load(path);
    require(file.meta.at("kind") == "claim_head", Err::BadHeader, "not a claim-head checkpoint");
    ClaimHead head = make_head(file.meta.at("input_dim"), file.meta.at("hidden"),
                               file.meta.at("threshold"), 0);
    for (auto& e : head.params.entries()) {
        auto it = file.tensors.find(e.name);
        require(it != file.tensors.end(), Err::BadHeader, "checkpoint missing " + e.name);
        require(it->second.shape == e.value.shape, Err::ShapeMismatch, "head shape mismatch");
        e.value.data = it->second.data;
    }
    return head;
}

FinetuneResult finetune_unfrozen(mae::MaeModel& video, mae::MaeModel& audio, ClaimHead& head,
                                 const std::vector<tokenizer::TokenSet>& video_tokens,
                                 const std::vector<tokenizer::TokenSet>& audio_tokens,
                                 const std::vector<int>& labels, const FinetuneOptions& opts) {
    const int n = static_cast<int>(labels.size());
    require(static_cast<int>(video_tokens.size()) == n && static_cast<int>(audio_tokens.size()) == n,
            Err::ShapeMismatch, "token set/label count mismatch");
    require(head.input_dim == video.cfg.d_model + audio.cfg.d_model, Err::DimMismatch,
            "head dim must equal d_video + d_audio");
    int n_pos = 0;
    for (int y : labels) n_pos += y ? 1 : 0;
    require(n_pos >= 2 && n - n_pos >= 2, Err::SingleClassDataset,
            "need at least 2 examples per class");

    nnet::AdamState<float> head_opt;
    nnet::AdamConfig adam;
    adam.lr = opts.lr;
    nnet::AdamConfig enc_adam = adam;
    enc_adam.lr = opts.lr * 0.1; // encoders move slower than the fresh head

    auto to_tensor = [](const tokenizer::TokenSet& ts) {
        nnet::Tensor32 out = nnet::Tensor32::zeros({ts.n_tokens, ts.token_dim});
        std::copy(ts.tokens.begin(), ts.tokens.end(), out.data.begin());
        return out;
    };

    FinetuneResult result;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    Rng rng(opts.seed);

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        rng.shuffle(order);
        int correct = 0;
        for (int idx : order) {
            nnet::Tape<float> t;
            nnet::Binding bv = video.encoder.bind(t);
            nnet::Binding ba = audio.encoder.bind(t);
            nnet::Binding bh = nnet::bind_params(t, head.params);

            const int ev = nnet::mean_rows(
                t, video.encoder.forward(t, bv, nnet::leaf(t, to_tensor(video_tokens[idx]))));
            const int ea = nnet::mean_rows(
                t, audio.encoder.forward(t, ba, nnet::leaf(t, to_tensor(audio_tokens[idx]))));
            const int fused = nnet::concat_cols(t, {ev, ea});
            const int logits = forward_logits(t, head, bh, fused);
            const int loss = nnet::bce_logits_mean(t, logits, {labels[idx]}, {});
            t.backward(loss);
            nnet::read_grads(t, bv, video.encoder.params);
            nnet::read_grads(t, ba, audio.encoder.params);
            nnet::read_grads(t, bh, head.params);
            nnet::adam_step(video.encoder.params, video.enc_opt, enc_adam);
            nnet::adam_step(audio.encoder.params, audio.enc_opt, enc_adam);
            nnet::adam_step(head.params, head_opt, adam);

            const bool pred = sigmoid(t.val(logits).data[0]) >= 0.5;
            correct += (pred == (labels[idx] != 0)) ? 1 : 0;
        }
        result.epoch_accuracy.push_back(static_cast<double>(correct) / n);
    }
    return result;
}

} // namespace vimguard::claim
