#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vimguard/nnet.hpp"
#include "vimguard/tokenizer.hpp"

namespace vimguard::mae {

enum class Modality { video, audio };

inline const char* modality_name(Modality m) { return m == Modality::video ? "video" : "audio"; }

struct MaeConfig {
    Modality modality = Modality::video;
    int token_dim = 0;
    int max_tokens = 0;
    double mask_ratio = 0.75;
    int d_model = 192;
    int n_heads = 4;
    int enc_depth = 4;
    int dec_width = 96;
    int dec_depth = 2;
    int mlp_ratio = 4;
    nnet::AdamConfig adam;
};

/// Masked autoencoder for one modality: encoder over visible tokens, narrow
/// decoder that reconstructs the full token grid from encoded-visible rows
/// plus a learned mask token. The decoder exists only for pretraining;
/// downstream checkpoints keep encoder weights alone.
template <typename S>
struct MaeModelT {
    MaeConfig cfg;
    nnet::ModuleGraph<S> encoder;      // token_dim -> d_model
    nnet::ModuleGraph<S> decoder;      // d_model -> dec_width (embed is the enc->dec projection)
    nnet::ParamStore<S> head;          // mask_token, out.w, out.b
    nnet::AdamState<S> enc_opt, dec_opt, head_opt;
    int64_t steps_taken = 0;

    static MaeModelT init(const MaeConfig& cfg, uint64_t seed) {
        require(cfg.token_dim >= 1 && cfg.max_tokens >= 1, Err::ConfigError, "bad MAE dims");
        MaeModelT m;
        m.cfg = cfg;
        Rng rng(seed);
        nnet::GraphConfig enc_cfg{cfg.token_dim, cfg.d_model, cfg.n_heads, cfg.enc_depth,
                                  cfg.max_tokens, cfg.mlp_ratio * cfg.d_model};
        m.encoder = nnet::ModuleGraph<S>(enc_cfg, rng);
        nnet::GraphConfig dec_cfg{cfg.d_model, cfg.dec_width, cfg.n_heads, cfg.dec_depth,
                                  cfg.max_tokens, cfg.mlp_ratio * cfg.dec_width};
        m.decoder = nnet::ModuleGraph<S>(dec_cfg, rng);
        auto tn = [&](std::vector<int> shape) {
            auto t = nnet::Tensor<S>::zeros(std::move(shape));
            for (S& v : t.data) v = static_cast<S>(rng.truncated_normal(0.02));
            return t;
        };
        m.head.add("mask_token", tn({1, cfg.dec_width}));
        m.head.add("out.w", tn({cfg.dec_width, cfg.token_dim}));
        m.head.add("out.b", nnet::Tensor<S>::zeros({1, cfg.token_dim}));
        return m;
    }

    int64_t param_count() const {
        return encoder.param_count() + decoder.param_count() + head.param_count();
    }
    uint64_t encoder_checksum() const { return encoder.params.checksum(); }

    template <typename T>
    MaeModelT<T> cast() const {
        MaeModelT<T> out;
        out.cfg = cfg;
        out.encoder.cfg = encoder.cfg;
        for (const auto& e : encoder.params.entries())
            out.encoder.params.add(e.name, e.value.template cast<T>());
        out.decoder.cfg = decoder.cfg;
        for (const auto& e : decoder.params.entries())
            out.decoder.params.add(e.name, e.value.template cast<T>());
        for (const auto& e : head.entries()) out.head.add(e.name, e.value.template cast<T>());
        out.steps_taken = steps_taken;
        return out;
    }
};

using MaeModel = MaeModelT<float>;

template <typename S>
struct MaeBinding {
    nnet::Binding enc, dec, head;
};

template <typename S>
MaeBinding<S> bind_mae(nnet::Tape<S>& t, const MaeModelT<S>& m) {
    return MaeBinding<S>{m.encoder.bind(t), m.decoder.bind(t), nnet::bind_params(t, m.head)};
}

/// Builds the masked-reconstruction loss on an existing tape: encode visible
/// tokens at their true positions, assemble the decoder sequence (projected
/// visible rows + mask tokens, in grid order), decode, and take MSE over the
/// masked rows only.
template <typename S>
int build_mae_loss(nnet::Tape<S>& t, const MaeModelT<S>& m, const MaeBinding<S>& b,
                   const tokenizer::TokenSet& ts, const tokenizer::MaskPlan& plan) {
    require(ts.token_dim == m.cfg.token_dim, Err::ShapeMismatch,
            "token set dim does not match MAE config");
    require(ts.n_tokens <= m.cfg.max_tokens, Err::ShapeMismatch, "too many tokens for MAE config");
    require(!plan.masked.empty(), Err::ShapeMismatch, "loss undefined with no masked tokens");

    auto [visible, targets] = tokenizer::split_tokens(ts, plan);
    const int n_vis = visible.n_tokens;
    const int n_mask = targets.n_tokens;

    auto to_tensor = [](const tokenizer::TokenSet& part) {
        nnet::Tensor<S> out = nnet::Tensor<S>::zeros({part.n_tokens, part.token_dim});
        for (size_t i = 0; i < part.tokens.size(); ++i) out.data[i] = static_cast<S>(part.tokens[i]);
        return out;
    };

    const int x = nnet::leaf(t, to_tensor(visible));
    const int enc_out = m.encoder.forward(t, b.enc, x, plan.visible);
    const int proj_vis = m.decoder.embed(t, b.dec, enc_out);

    int mask_node = -1;
    for (size_t i = 0; i < m.head.size(); ++i)
        if (m.head.entries()[i].name == "mask_token") mask_node = b.head.node_ids[i];
    const int mask_rows = nnet::broadcast_row(t, mask_node, n_mask);

    // Row k of `cat` is the k-th visible token; row n_vis + j the j-th masked.
    const int cat = nnet::concat_rows(t, proj_vis, mask_rows);
    std::vector<int> perm(ts.n_tokens);
    for (int k = 0; k < n_vis; ++k) perm[plan.visible[k]] = k;
    for (int j = 0; j < n_mask; ++j) perm[plan.masked[j]] = n_vis + j;
    const int full = nnet::gather_rows(t, cat, perm);

    const int dec_out = m.decoder.body(t, b.dec, full);
    int out_w = -1, out_b = -1;
    for (size_t i = 0; i < m.head.size(); ++i) {
        if (m.head.entries()[i].name == "out.w") out_w = b.head.node_ids[i];
        if (m.head.entries()[i].name == "out.b") out_b = b.head.node_ids[i];
    }
    const int pred = nnet::linear(t, dec_out, out_w, out_b);
    const int pred_masked = nnet::gather_rows(t, pred, plan.masked);
    return nnet::mse_against(t, pred_masked, to_tensor(targets));
}

/// Reconstruction loss without a parameter update.
template <typename S>
S reconstruction_loss(const MaeModelT<S>& m, const tokenizer::TokenSet& ts,
                      const tokenizer::MaskPlan& plan) {
    if (plan.masked.empty()) return S(0);
    nnet::Tape<S> t;
    MaeBinding<S> b = bind_mae(t, m);
    const int loss = build_mae_loss(t, m, b, ts, plan);
    return t.val(loss).data[0];
}

/// One masked-reconstruction step: mask, encode/decode, MSE on masked rows,
/// one Adam update. Returns the pre-update loss. A zero mask ratio yields
/// loss 0 and no update.
template <typename S>
S pretrain_step(MaeModelT<S>& m, const tokenizer::TokenSet& ts, uint64_t mask_seed) {
    const tokenizer::MaskPlan plan = tokenizer::make_mask(ts.n_tokens, m.cfg.mask_ratio, mask_seed);
    if (plan.masked.empty()) return S(0);

    nnet::Tape<S> t;
    MaeBinding<S> b = bind_mae(t, m);
    const int loss = build_mae_loss(t, m, b, ts, plan);
    const S loss_value = t.val(loss).data[0];
    require(std::isfinite(static_cast<double>(loss_value)), Err::NonFiniteActivation,
            "non-finite pretraining loss");

    t.backward(loss);
    nnet::read_grads(t, b.enc, m.encoder.params);
    nnet::read_grads(t, b.dec, m.decoder.params);
    nnet::read_grads(t, b.head, m.head);
    nnet::adam_step(m.encoder.params, m.enc_opt, m.cfg.adam);
    nnet::adam_step(m.decoder.params, m.dec_opt, m.cfg.adam);
    nnet::adam_step(m.head, m.head_opt, m.cfg.adam);
    m.steps_taken += 1;
    return loss_value;
}

/// Fixed-length summary of one modality (or the concatenation of both).
struct Embedding {
    enum class Kind { video, audio, fused };
    std::vector<float> v;
    Kind kind = Kind::video;
    std::string source_id;

    int dim() const { return static_cast<int>(v.size()); }
};

const char* kind_name(Embedding::Kind k);

/// Mask-free inference: encoder over all tokens, mean-pooled over rows.
template <typename S>
Embedding embed(const MaeModelT<S>& m, const tokenizer::TokenSet& ts,
                const std::string& source_id) {
    require(ts.token_dim == m.cfg.token_dim, Err::ShapeMismatch,
            "token set dim does not match MAE config");
    nnet::Tensor<S> x = nnet::Tensor<S>::zeros({ts.n_tokens, ts.token_dim});
    for (size_t i = 0; i < ts.tokens.size(); ++i) x.data[i] = static_cast<S>(ts.tokens[i]);
    const nnet::Tensor<S> out = m.encoder.forward_values(x);

    Embedding e;
    e.kind = m.cfg.modality == Modality::video ? Embedding::Kind::video : Embedding::Kind::audio;
    e.source_id = source_id;
    e.v.assign(m.cfg.d_model, 0.0f);
    for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j) e.v[j] += static_cast<float>(out.at(i, j));
    for (float& v : e.v) v /= static_cast<float>(out.rows());
    return e;
}

/// [video ‖ audio]; both halves preserved exactly.
Embedding fuse(const Embedding& video, const Embedding& audio);
std::pair<Embedding, Embedding> unfuse(const Embedding& fused, int d_video);

/// Top-2 PCA by power iteration with deflation (tol 1e-9, max 10000 iters).
struct Pca2d {
    std::vector<std::array<double, 2>> points; // mean-centered projections
    std::array<double, 2> explained;           // top-2 covariance eigenvalues
    std::vector<std::vector<double>> basis;    // 2 x d, orthonormal
};

Pca2d pca_2d(const std::vector<std::vector<double>>& rows);
Pca2d pca_2d_embeddings(const std::vector<Embedding>& embs);

/// Figure-style exports: CSV rows `x,y,label,modality` plus a JSON sidecar
/// carrying the explained variances.
void write_pca_csv(const std::filesystem::path& csv_path, const Pca2d& pca,
                   const std::vector<std::string>& labels,
                   const std::vector<std::string>& modalities);

// Encoder-only checkpoint (downstream artifact; decoder is dropped).
void save_encoder(const std::filesystem::path& path, const MaeModel& m);
MaeModel load_encoder(const std::filesystem::path& path);

// Full training state (encoder + decoder + mask head + Adam moments + step),
// for --resume.
void save_train_state(const std::filesystem::path& path, const MaeModel& m);
MaeModel load_train_state(const std::filesystem::path& path);

} // namespace vimguard::mae
