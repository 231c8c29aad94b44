#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vimguard/mae.hpp"
#include "vimguard/nnet.hpp"

namespace vimguard::claim {

/// 2-layer MLP over fused embeddings: fused_dim -> hidden (GELU) -> 1 logit.
struct ClaimHead {
    nnet::ParamStore<float> params; // w1, b1, w2, b2
    int input_dim = 0;
    int hidden = 128;
    double threshold = 0.5;

    uint64_t checksum() const { return params.checksum(); }
};

ClaimHead make_head(int input_dim, int hidden, double threshold, uint64_t seed);

enum class Label { claim, no_claim, ambiguous };

/// Hashtag taxonomy labeling: claim if any claim-tag and no no-claim-tag,
/// symmetric for no_claim, ambiguous otherwise (both or neither present).
/// Tags are matched case-insensitively with any leading '#' stripped.
Label label_from_hashtags(const std::vector<std::string>& tags);

const std::vector<std::string>& claim_hashtags();
const std::vector<std::string>& no_claim_hashtags();

struct FinetuneOptions {
    int epochs = 100;
    double lr = 1e-2;
    uint64_t seed = 0;
};

struct FinetuneResult {
    std::vector<double> epoch_accuracy; // train accuracy after each epoch
};

/// Full-batch BCE training with inverse-class-frequency loss weights.
/// labels: 1 = claim, 0 = no_claim. Requires >= 2 examples per class.
FinetuneResult finetune(ClaimHead& head, const std::vector<std::vector<float>>& embeddings,
                        const std::vector<int>& labels, const FinetuneOptions& opts);

struct ClaimDecision {
    double probability = 0.0;
    bool has_claim = false;
    std::string embedding_ref;
};

double head_logit(const ClaimHead& head, const std::vector<float>& fused);

/// probability = sigmoid(logit); has_claim uses the >= threshold rule.
ClaimDecision decide(const ClaimHead& head, const mae::Embedding& fused);

void save_head(const std::filesystem::path& path, const ClaimHead& head);
ClaimHead load_head(const std::filesystem::path& path);

/// End-to-end fine-tuning (--unfreeze): gradients flow through both encoders.
/// Examples are (video tokens, audio tokens) per bundle; one Adam step per
/// example per epoch.
FinetuneResult finetune_unfrozen(mae::MaeModel& video, mae::MaeModel& audio, ClaimHead& head,
                                 const std::vector<tokenizer::TokenSet>& video_tokens,
                                 const std::vector<tokenizer::TokenSet>& audio_tokens,
                                 const std::vector<int>& labels, const FinetuneOptions& opts);

} // namespace vimguard::claim
