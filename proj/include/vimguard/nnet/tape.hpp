#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "vimguard/nnet/tensor.hpp"

namespace vimguard::nnet {

/// Reverse-mode autodiff tape. Nodes are appended in evaluation order;
/// backward() walks them in reverse, so topological order is insertion order.
/// Tapes are single-owner: one per training step, never shared across threads.
template <typename S>
class Tape {
public:
    struct Node {
        Tensor<S> val;
        std::vector<S> grad;
        std::function<void(Tape<S>&)> back; // accumulates into parent grads
    };

    int add(Tensor<S> val, std::function<void(Tape<S>&)> back = nullptr) {
        nodes_.push_back(Node{std::move(val), {}, std::move(back)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    const Tensor<S>& val(int id) const { return nodes_[id].val; }
    std::vector<S>& grad(int id) { return nodes_[id].grad; }
    int next_id() const { return static_cast<int>(nodes_.size()); }
    size_t size() const { return nodes_.size(); }

    /// Seeds d(loss)/d(loss) = 1 and propagates in reverse insertion order.
    /// Nodes the loss does not reach keep zero gradients.
    void backward(int loss_id) {
        require(nodes_[loss_id].val.numel() == 1, Err::ShapeMismatch,
                "backward target must be scalar");
        for (Node& n : nodes_) n.grad.assign(n.val.data.size(), S(0));
        nodes_[loss_id].grad[0] = S(1);
        for (int i = loss_id; i >= 0; --i)
            if (nodes_[i].back) nodes_[i].back(*this);
    }

private:
    std::vector<Node> nodes_;
};

template <typename S>
int leaf(Tape<S>& t, Tensor<S> v) {
    return t.add(std::move(v));
}

// ---- structural ops ---------------------------------------------------------

template <typename S>
int add(Tape<S>& t, int a, int b) {
    const Tensor<S>&A = t.val(a), &B = t.val(b);
    require(A.shape == B.shape, Err::ShapeMismatch, "add: shape mismatch");
    Tensor<S> out = A;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += B.data[i];
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        auto &ga = tp.grad(a), &gb = tp.grad(b);
        for (size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    });
}

/// [n,m] + [1,m] with the row vector broadcast down the rows.
template <typename S>
int add_rowvec(Tape<S>& t, int a, int bias) {
    const Tensor<S>&A = t.val(a), &B = t.val(bias);
    require(B.rows() == 1 && B.cols() == A.cols(), Err::ShapeMismatch, "add_rowvec: bad bias shape");
    Tensor<S> out = A;
    const int n = A.rows(), m = A.cols();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out.at(i, j) += B.data[j];
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        auto &ga = tp.grad(a), &gb = tp.grad(bias);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) {
                ga[static_cast<size_t>(i) * m + j] += g[static_cast<size_t>(i) * m + j];
                gb[j] += g[static_cast<size_t>(i) * m + j];
            }
    });
}

template <typename S>
int scale(Tape<S>& t, int a, S c) {
    Tensor<S> out = t.val(a);
    for (S& v : out.data) v *= c;
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        auto& ga = tp.grad(a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    });
}

template <typename S>
int matmul(Tape<S>& t, int a, int b) {
    const Tensor<S>&A = t.val(a), &B = t.val(b);
    require(A.cols() == B.rows(), Err::ShapeMismatch, "matmul: inner dims differ");
    const int n = A.rows(), k = A.cols(), m = B.cols();
    Tensor<S> out = Tensor<S>::zeros({n, m});
    for (int i = 0; i < n; ++i) {
        const S* arow = &A.data[static_cast<size_t>(i) * k];
        S* orow = &out.data[static_cast<size_t>(i) * m];
        for (int kk = 0; kk < k; ++kk) {
            const S av = arow[kk];
            const S* brow = &B.data[static_cast<size_t>(kk) * m];
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        const Tensor<S>&Av = tp.val(a), &Bv = tp.val(b);
        auto &ga = tp.grad(a), &gb = tp.grad(b);
        // dA = dC * B^T
        for (int i = 0; i < n; ++i)
            for (int kk = 0; kk < k; ++kk) {
                S acc = S(0);
                const S* grow = &g[static_cast<size_t>(i) * m];
                const S* brow = &Bv.data[static_cast<size_t>(kk) * m];
                for (int j = 0; j < m; ++j) acc += grow[j] * brow[j];
                ga[static_cast<size_t>(i) * k + kk] += acc;
            }
        // dB = A^T * dC
        for (int i = 0; i < n; ++i) {
            const S* arow = &Av.data[static_cast<size_t>(i) * k];
            const S* grow = &g[static_cast<size_t>(i) * m];
            for (int kk = 0; kk < k; ++kk) {
                const S av = arow[kk];
                S* gbrow = &gb[static_cast<size_t>(kk) * m];
                for (int j = 0; j < m; ++j) gbrow[j] += av * grow[j];
            }
        }
    });
}

template <typename S>
int transpose(Tape<S>& t, int a) {
    const Tensor<S>& A = t.val(a);
    const int n = A.rows(), m = A.cols();
    Tensor<S> out = Tensor<S>::zeros({m, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out.at(j, i) = A.at(i, j);
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        auto& ga = tp.grad(a);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                ga[static_cast<size_t>(i) * m + j] += g[static_cast<size_t>(j) * n + i];
    });
}

template <typename S>
int slice_cols(Tape<S>& t, int a, int c0, int c1) {
    const Tensor<S>& A = t.val(a);
    require(0 <= c0 && c0 < c1 && c1 <= A.cols(), Err::ShapeMismatch, "slice_cols: bad range");
    const int n = A.rows(), m = A.cols(), w = c1 - c0;
    Tensor<S> out = Tensor<S>::zeros({n, w});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < w; ++j) out.at(i, j) = A.at(i, c0 + j);
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        auto& ga = tp.grad(a);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < w; ++j)
                ga[static_cast<size_t>(i) * m + c0 + j] += g[static_cast<size_t>(i) * w + j];
    });
}

template <typename S>
int concat_cols(Tape<S>& t, const std::vector<int>& parts) {
    require(!parts.empty(), Err::ShapeMismatch, "concat_cols: empty");
    const int n = t.val(parts[0]).rows();
    int total = 0;
    std::vector<int> widths;
    for (int p : parts) {
        require(t.val(p).rows() == n, Err::ShapeMismatch, "concat_cols: row mismatch");
        widths.push_back(t.val(p).cols());
        total += widths.back();
    }
    Tensor<S> out = Tensor<S>::zeros({n, total});
    int off = 0;
    for (size_t pi = 0; pi < parts.size(); ++pi) {
        const Tensor<S>& P = t.val(parts[pi]);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < widths[pi]; ++j) out.at(i, off + j) = P.at(i, j);
        off += widths[pi];
    }
    const int id = t.next_id();
    std::vector<int> parts_copy = parts;
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        int o = 0;
        for (size_t pi = 0; pi < parts_copy.size(); ++pi) {
            auto& gp = tp.grad(parts_copy[pi]);
            const int w = widths[pi];
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < w; ++j)
                    gp[static_cast<size_t>(i) * w + j] += g[static_cast<size_t>(i) * total + o + j];
            o += w;
        }
    });
}

template <typename S>
int concat_rows(Tape<S>& t, int a, int b) {
    const Tensor<S>&A = t.val(a), &B = t.val(b);
    require(A.cols() == B.cols(), Err::ShapeMismatch, "concat_rows: col mismatch");
    const int na = A.rows(), nb = B.rows(), m = A.cols();
    Tensor<S> out = Tensor<S>::zeros({na + nb, m});
    std::copy(A.data.begin(), A.data.end(), out.data.begin());
    std::copy(B.data.begin(), B.data.end(), out.data.begin() + A.data.size());
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        auto &ga = tp.grad(a), &gb = tp.grad(b);
        const size_t asz = static_cast<size_t>(na) * m;
        for (size_t i = 0; i < asz; ++i) ga[i] += g[i];
        for (size_t i = 0; i < static_cast<size_t>(nb) * m; ++i) gb[i] += g[asz + i];
    });
}

/// out[i] = a[rows[i]]; indices may repeat (gradients accumulate).
template <typename S>
int gather_rows(Tape<S>& t, int a, std::vector<int> rows) {
    const Tensor<S>& A = t.val(a);
    const int m = A.cols();
    Tensor<S> out = Tensor<S>::zeros({static_cast<int>(rows.size()), m});
    for (size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] >= 0 && rows[i] < A.rows(), Err::ShapeMismatch, "gather_rows: bad index");
        std::copy(&A.data[static_cast<size_t>(rows[i]) * m], &A.data[static_cast<size_t>(rows[i]) * m] + m,
                  &out.data[i * m]);
    }
    const int id = t.next_id();
    return t.add(std::move(out), [=, rows = std::move(rows)](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        auto& ga = tp.grad(a);
        for (size_t i = 0; i < rows.size(); ++i)
            for (int j = 0; j < m; ++j)
                ga[static_cast<size_t>(rows[i]) * m + j] += g[i * m + j];
    });
}

/// [1,m] -> [n,m].
template <typename S>
int broadcast_row(Tape<S>& t, int a, int n) {
    const Tensor<S>& A = t.val(a);
    require(A.rows() == 1, Err::ShapeMismatch, "broadcast_row: source must be one row");
    const int m = A.cols();
    Tensor<S> out = Tensor<S>::zeros({n, m});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out.at(i, j) = A.data[j];
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        auto& ga = tp.grad(a);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) ga[j] += g[static_cast<size_t>(i) * m + j];
    });
}

template <typename S>
int mean_rows(Tape<S>& t, int a) {
    const Tensor<S>& A = t.val(a);
    const int n = A.rows(), m = A.cols();
    Tensor<S> out = Tensor<S>::zeros({1, m});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out.data[j] += A.at(i, j);
    for (S& v : out.data) v /= static_cast<S>(n);
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        auto& ga = tp.grad(a);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) ga[static_cast<size_t>(i) * m + j] += g[j] / static_cast<S>(n);
    });
}

// ---- nonlinearities ---------------------------------------------------------

/// Exact GELU: x * Phi(x) with the Gaussian CDF.
template <typename S>
int gelu(Tape<S>& t, int a) {
    const Tensor<S>& A = t.val(a);
    Tensor<S> out = A;
    for (S& v : out.data) {
        const double x = static_cast<double>(v);
        v = static_cast<S>(x * 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))));
    }
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        const Tensor<S>& Av = tp.val(a);
        auto& ga = tp.grad(a);
        for (size_t i = 0; i < g.size(); ++i) {
            const double x = static_cast<double>(Av.data[i]);
            const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
            const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
            ga[i] += g[i] * static_cast<S>(cdf + x * phi);
        }
    });
}

/// Row-wise layernorm with learned gain/bias, eps inside the sqrt.
template <typename S>
int layernorm(Tape<S>& t, int a, int gain, int bias, S eps = S(1e-5)) {
    const Tensor<S>&A = t.val(a), &G = t.val(gain), &B = t.val(bias);
    const int n = A.rows(), m = A.cols();
    require(G.rows() == 1 && G.cols() == m && B.rows() == 1 && B.cols() == m, Err::ShapeMismatch,
            "layernorm: gain/bias must be [1,m]");
    Tensor<S> out = Tensor<S>::zeros({n, m});
    for (int i = 0; i < n; ++i) {
        S mu = S(0);
        for (int j = 0; j < m; ++j) mu += A.at(i, j);
        mu /= static_cast<S>(m);
        S var = S(0);
        for (int j = 0; j < m; ++j) {
            const S d = A.at(i, j) - mu;
            var += d * d;
        }
        var /= static_cast<S>(m);
        const S inv = S(1) / std::sqrt(var + eps);
        for (int j = 0; j < m; ++j)
            out.at(i, j) = (A.at(i, j) - mu) * inv * G.data[j] + B.data[j];
    }
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        const Tensor<S>&Av = tp.val(a), &Gv = tp.val(gain);
        auto &ga = tp.grad(a), &gg = tp.grad(gain), &gb = tp.grad(bias);
        std::vector<S> xhat(m), dy(m);
        for (int i = 0; i < n; ++i) {
            S mu = S(0);
            for (int j = 0; j < m; ++j) mu += Av.at(i, j);
            mu /= static_cast<S>(m);
            S var = S(0);
            for (int j = 0; j < m; ++j) {
                const S d = Av.at(i, j) - mu;
                var += d * d;
            }
            var /= static_cast<S>(m);
            const S inv = S(1) / std::sqrt(var + eps);
            S mean_dy = S(0), mean_dy_xhat = S(0);
            for (int j = 0; j < m; ++j) {
                xhat[j] = (Av.at(i, j) - mu) * inv;
                const S go = g[static_cast<size_t>(i) * m + j];
                dy[j] = go * Gv.data[j];
                gg[j] += go * xhat[j];
                gb[j] += go;
                mean_dy += dy[j];
                mean_dy_xhat += dy[j] * xhat[j];
            }
            mean_dy /= static_cast<S>(m);
            mean_dy_xhat /= static_cast<S>(m);
            for (int j = 0; j < m; ++j)
                ga[static_cast<size_t>(i) * m + j] +=
                    inv * (dy[j] - mean_dy - xhat[j] * mean_dy_xhat);
        }
    });
}

/// Numerically stable row-wise softmax; rows sum to 1.
template <typename S>
int softmax_rows(Tape<S>& t, int a) {
    const Tensor<S>& A = t.val(a);
    const int n = A.rows(), m = A.cols();
    Tensor<S> out = Tensor<S>::zeros({n, m});
    for (int i = 0; i < n; ++i) {
        S mx = A.at(i, 0);
        for (int j = 1; j < m; ++j) mx = std::max(mx, A.at(i, j));
        S sum = S(0);
        for (int j = 0; j < m; ++j) {
            out.at(i, j) = std::exp(A.at(i, j) - mx);
            sum += out.at(i, j);
        }
        for (int j = 0; j < m; ++j) out.at(i, j) /= sum;
    }
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const auto& g = tp.grad(id);
        const Tensor<S>& Y = tp.val(id);
        auto& ga = tp.grad(a);
        for (int i = 0; i < n; ++i) {
            S dot = S(0);
            for (int j = 0; j < m; ++j)
                dot += g[static_cast<size_t>(i) * m + j] * Y.at(i, j);
            for (int j = 0; j < m; ++j)
                ga[static_cast<size_t>(i) * m + j] +=
                    Y.at(i, j) * (g[static_cast<size_t>(i) * m + j] - dot);
        }
    });
}

// ---- losses -----------------------------------------------------------------

/// Mean over all elements of squared error against a constant target.
template <typename S>
int mse_against(Tape<S>& t, int pred, Tensor<S> target) {
    const Tensor<S>& P = t.val(pred);
    require(P.shape == target.shape, Err::ShapeMismatch, "mse: shape mismatch");
    require(P.numel() > 0, Err::ShapeMismatch, "mse: empty tensors");
    double acc = 0.0;
    for (size_t i = 0; i < P.data.size(); ++i) {
        const double d = static_cast<double>(P.data[i]) - static_cast<double>(target.data[i]);
        acc += d * d;
    }
    const S k = static_cast<S>(P.numel());
    Tensor<S> out({1, 1}, {static_cast<S>(acc / P.numel())});
    const int id = t.next_id();
    return t.add(std::move(out), [=, target = std::move(target)](Tape<S>& tp) {
        const S go = tp.grad(id)[0];
        const Tensor<S>& Pv = tp.val(pred);
        auto& gp = tp.grad(pred);
        for (size_t i = 0; i < gp.size(); ++i)
            gp[i] += go * S(2) * (Pv.data[i] - target.data[i]) / k;
    });
}

/// Stable scalar binary cross-entropy on a logit:
/// max(z,0) - z*y + log1p(exp(-|z|)).
template <typename S>
S bce_logit_value(S logit, int label) {
    const double z = static_cast<double>(logit);
    const double y = label ? 1.0 : 0.0;
    return static_cast<S>(std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))));
}

/// Weighted mean BCE over logits [n,1]. Weights must be positive; gradients
/// are w_i * (sigmoid(z_i) - y_i) / sum(w).
template <typename S>
int bce_logits_mean(Tape<S>& t, int logits, std::vector<int> labels, std::vector<S> weights) {
    const Tensor<S>& Z = t.val(logits);
    const int n = Z.rows();
    require(Z.cols() == 1, Err::ShapeMismatch, "bce: logits must be [n,1]");
    require(static_cast<int>(labels.size()) == n, Err::ShapeMismatch, "bce: label count mismatch");
    if (weights.empty()) weights.assign(n, S(1));
    require(static_cast<int>(weights.size()) == n, Err::ShapeMismatch, "bce: weight count mismatch");

    S wsum = S(0);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += static_cast<double>(weights[i]) *
               static_cast<double>(bce_logit_value(Z.data[i], labels[i]));
        wsum += weights[i];
    }
    Tensor<S> out({1, 1}, {static_cast<S>(acc / static_cast<double>(wsum))});
    const int id = t.next_id();
    return t.add(std::move(out),
                 [=, labels = std::move(labels), weights = std::move(weights)](Tape<S>& tp) {
                     const S go = tp.grad(id)[0];
                     const Tensor<S>& Zv = tp.val(logits);
                     auto& gz = tp.grad(logits);
                     for (int i = 0; i < n; ++i) {
                         const double z = static_cast<double>(Zv.data[i]);
                         const double sig = 1.0 / (1.0 + std::exp(-z));
                         const double y = labels[i] ? 1.0 : 0.0;
                         gz[i] += go * weights[i] * static_cast<S>(sig - y) / wsum;
                     }
                 });
}

template <typename S>
int sum_all(Tape<S>& t, int a) {
    const Tensor<S>& A = t.val(a);
    S acc = S(0);
    for (S v : A.data) acc += v;
    Tensor<S> out({1, 1}, {acc});
    const int id = t.next_id();
    return t.add(std::move(out), [=](Tape<S>& tp) {
        const S go = tp.grad(id)[0];
        auto& ga = tp.grad(a);
        for (S& v : ga) v += go;
    });
}

} // namespace vimguard::nnet
