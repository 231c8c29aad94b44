#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "vimguard/nnet/tape.hpp"
#include "vimguard/rng.hpp"
#include "vimguard/util.hpp"

namespace vimguard::nnet {

/// Ordered, named parameter set. Creation order fixes both the init RNG
/// stream and the checkpoint layout.
template <typename S>
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor<S> value;
    };

    Tensor<S>& add(const std::string& name, Tensor<S> value) {
        require(index_.find(name) == index_.end(), Err::ConfigError,
                "duplicate parameter name: " + name);
        index_[name] = static_cast<int>(entries_.size());
        entries_.push_back(Entry{name, std::move(value)});
        return entries_.back().value;
    }

    Tensor<S>& operator[](const std::string& name) {
        auto it = index_.find(name);
        require(it != index_.end(), Err::ConfigError, "unknown parameter: " + name);
        return entries_[it->second].value;
    }
    const Tensor<S>& operator[](const std::string& name) const {
        auto it = index_.find(name);
        require(it != index_.end(), Err::ConfigError, "unknown parameter: " + name);
        return entries_[it->second].value;
    }
    bool contains(const std::string& name) const { return index_.count(name) > 0; }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }

    int64_t param_count() const {
        int64_t n = 0;
        for (const auto& e : entries_) n += e.value.numel();
        return n;
    }

    void zero_grads() {
        for (auto& e : entries_) e.value.zero_grad();
    }

    /// Hash of the raw parameter bytes; used to prove frozen stores stay
    /// untouched and to key pipeline caches.
    uint64_t checksum() const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& e : entries_) {
            h = fnv1a64(e.name.data(), e.name.size(), h);
            h = fnv1a64(e.value.data.data(), e.value.data.size() * sizeof(S), h);
        }
        return h;
    }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, int> index_;
};

/// Tape node ids for a bound ParamStore, in entry order.
struct Binding {
    std::vector<int> node_ids;
};

template <typename S>
Binding bind_params(Tape<S>& t, const ParamStore<S>& store) {
    Binding b;
    b.node_ids.reserve(store.size());
    for (const auto& e : store.entries()) b.node_ids.push_back(leaf(t, e.value));
    return b;
}

/// Copies leaf gradients back into the store after Tape::backward.
template <typename S>
void read_grads(Tape<S>& t, const Binding& b, ParamStore<S>& store) {
    for (size_t i = 0; i < store.size(); ++i)
        store.entries()[i].value.grad = t.grad(b.node_ids[i]);
}

template <typename S>
int linear(Tape<S>& t, int x, int w, int b) {
    return add_rowvec(t, matmul(t, x, w), b);
}

struct GraphConfig {
    int input_dim = 0;
    int d_model = 192;
    int n_heads = 4;
    int depth = 4;
    int max_positions = 256;
    int mlp_hidden = 0; // 0 -> 4 * d_model

    int mlp_dim() const { return mlp_hidden > 0 ? mlp_hidden : 4 * d_model; }
};

/// Transformer encoder: token embedding (linear), learned positional
/// embedding, `depth` pre-norm blocks (layernorm -> multi-head self-attention
/// -> residual; layernorm -> 2-layer GELU MLP -> residual), final layernorm.
///
/// embed() and body() are split so callers can splice rows (e.g. mask tokens)
/// between the token projection and the positional/block stack.
template <typename S>
class ModuleGraph {
public:
    GraphConfig cfg;
    ParamStore<S> params;

    ModuleGraph() = default;

    /// Truncated-normal(0.02) weights, zero biases, unit layernorm gains.
    ModuleGraph(const GraphConfig& config, Rng& rng) : cfg(config) {
        require(cfg.input_dim >= 1 && cfg.d_model >= 1, Err::ConfigError, "bad graph dims");
        require(cfg.d_model % cfg.n_heads == 0, Err::ConfigError,
                "d_model must be divisible by n_heads");
        auto tn = [&](std::vector<int> shape) {
            Tensor<S> w = Tensor<S>::zeros(std::move(shape));
            for (S& v : w.data) v = static_cast<S>(rng.truncated_normal(0.02));
            return w;
        };
        const int d = cfg.d_model;
        params.add("embed.w", tn({cfg.input_dim, d}));
        params.add("embed.b", Tensor<S>::zeros({1, d}));
        params.add("pos", tn({cfg.max_positions, d}));
        for (int i = 0; i < cfg.depth; ++i) {
            const std::string p = "block" + std::to_string(i) + ".";
            params.add(p + "ln1.gain", Tensor<S>::full({1, d}, S(1)));
            params.add(p + "ln1.bias", Tensor<S>::zeros({1, d}));
            params.add(p + "attn.wq", tn({d, d}));
            params.add(p + "attn.bq", Tensor<S>::zeros({1, d}));
            params.add(p + "attn.wk", tn({d, d}));
            params.add(p + "attn.bk", Tensor<S>::zeros({1, d}));
            params.add(p + "attn.wv", tn({d, d}));
            params.add(p + "attn.bv", Tensor<S>::zeros({1, d}));
            params.add(p + "attn.wo", tn({d, d}));
            params.add(p + "attn.bo", Tensor<S>::zeros({1, d}));
            params.add(p + "ln2.gain", Tensor<S>::full({1, d}, S(1)));
            params.add(p + "ln2.bias", Tensor<S>::zeros({1, d}));
            params.add(p + "mlp.w1", tn({d, cfg.mlp_dim()}));
            params.add(p + "mlp.b1", Tensor<S>::zeros({1, cfg.mlp_dim()}));
            params.add(p + "mlp.w2", tn({cfg.mlp_dim(), d}));
            params.add(p + "mlp.b2", Tensor<S>::zeros({1, d}));
        }
        params.add("final_ln.gain", Tensor<S>::full({1, d}, S(1)));
        params.add("final_ln.bias", Tensor<S>::zeros({1, d}));
    }

    Binding bind(Tape<S>& t) const { return bind_params(t, params); }

    int node_of(const Binding& b, const std::string& name) const {
        for (size_t i = 0; i < params.size(); ++i)
            if (params.entries()[i].name == name) return b.node_ids[i];
        fail(Err::ConfigError, "unknown parameter: " + name);
    }

    /// Token projection only: [n, input_dim] -> [n, d_model].
    int embed(Tape<S>& t, const Binding& b, int x) const {
        require(t.val(x).cols() == cfg.input_dim, Err::ShapeMismatch,
                "graph input dim mismatch");
        return linear(t, x, node_of(b, "embed.w"), node_of(b, "embed.b"));
    }

    /// Positional add + blocks + final layernorm over already-projected rows.
    /// `positions` gives each row's index into the positional table; empty
    /// means 0..n-1.
    int body(Tape<S>& t, const Binding& b, int z, std::vector<int> positions = {}) const {
        const int n = t.val(z).rows();
        if (positions.empty()) {
            positions.resize(n);
            for (int i = 0; i < n; ++i) positions[i] = i;
        }
        require(static_cast<int>(positions.size()) == n, Err::ShapeMismatch,
                "positions must match row count");
        for (int p : positions)
            require(p >= 0 && p < cfg.max_positions, Err::ShapeMismatch,
                    "position index out of range");

        int h = add(t, z, gather_rows(t, node_of(b, "pos"), positions));
        for (int i = 0; i < cfg.depth; ++i) h = block(t, b, h, i);
        return layernorm(t, h, node_of(b, "final_ln.gain"), node_of(b, "final_ln.bias"));
    }

    int forward(Tape<S>& t, const Binding& b, int x, std::vector<int> positions = {}) const {
        return body(t, b, embed(t, b, x), std::move(positions));
    }

    /// One-shot forward on a private tape with finiteness validation.
    Tensor<S> forward_values(const Tensor<S>& x, std::vector<int> positions = {}) const {
        require(x.finite(), Err::NonFiniteActivation, "non-finite input");
        Tape<S> t;
        Binding b = bind(t);
        const int out = forward(t, b, leaf(t, x), std::move(positions));
        Tensor<S> result = t.val(out);
        require(result.finite(), Err::NonFiniteActivation, "non-finite activation");
        return result;
    }

    int64_t param_count() const { return params.param_count(); }

private:
    int block(Tape<S>& t, const Binding& b, int x, int i) const {
        const std::string p = "block" + std::to_string(i) + ".";
        const int d = cfg.d_model;
        const int dh = d / cfg.n_heads;

        int h = layernorm(t, x, node_of(b, p + "ln1.gain"), node_of(b, p + "ln1.bias"));
        const int q = linear(t, h, node_of(b, p + "attn.wq"), node_of(b, p + "attn.bq"));
        const int k = linear(t, h, node_of(b, p + "attn.wk"), node_of(b, p + "attn.bk"));
        const int v = linear(t, h, node_of(b, p + "attn.wv"), node_of(b, p + "attn.bv"));

        std::vector<int> heads;
        heads.reserve(cfg.n_heads);
        for (int hd = 0; hd < cfg.n_heads; ++hd) {
            const int c0 = hd * dh, c1 = (hd + 1) * dh;
            const int qh = slice_cols(t, q, c0, c1);
            const int kh = slice_cols(t, k, c0, c1);
            const int vh = slice_cols(t, v, c0, c1);
            const int scores =
                scale(t, matmul(t, qh, transpose(t, kh)), static_cast<S>(1.0 / std::sqrt(dh)));
            heads.push_back(matmul(t, softmax_rows(t, scores), vh));
        }
        const int attn_out =
            linear(t, concat_cols(t, heads), node_of(b, p + "attn.wo"), node_of(b, p + "attn.bo"));
        int x1 = add(t, x, attn_out);

        int h2 = layernorm(t, x1, node_of(b, p + "ln2.gain"), node_of(b, p + "ln2.bias"));
        const int u = gelu(t, linear(t, h2, node_of(b, p + "mlp.w1"), node_of(b, p + "mlp.b1")));
        const int mlp_out = linear(t, u, node_of(b, p + "mlp.w2"), node_of(b, p + "mlp.b2"));
        return add(t, x1, mlp_out);
    }
};

using ModuleGraph32 = ModuleGraph<float>;
using ModuleGraph64 = ModuleGraph<double>;

} // namespace vimguard::nnet
