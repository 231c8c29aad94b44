// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Everything is seeded; fixtures are generated into a temp tree.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vimguard/claim_detect.hpp"
#include "vimguard/eval.hpp"
#include "vimguard/mae.hpp"
#include "vimguard/media.hpp"
#include "vimguard/pipeline.hpp"
#include "vimguard/retrieval.hpp"
#include "vimguard/rng.hpp"
#include "vimguard/synthetic.hpp"
#include "vimguard/tokenizer.hpp"
#include "vimguard/util.hpp"
#include "vimguard/verify.hpp"

namespace fs = std::filesystem;
using namespace vimguard;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path work_dir() {
    static const fs::path p = [] {
        fs::path dir = fs::temp_directory_path() / "vimguard_acceptance";
        fs::remove_all(dir);
        fs::create_directories(dir);
        return dir;
    }();
    return p;
}

template <typename S>
nnet::Tensor<S> random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    auto t = nnet::Tensor<S>::zeros(std::move(shape));
    for (S& v : t.data) v = static_cast<S>(rng.normal() * scale);
    return t;
}

// Desk-scale config shared by the model-facing criteria.
Config accept_config() {
    Config cfg;
    cfg.media.frames = 16;
    cfg.media.frame_size = 32;
    cfg.media.n_mels = 64;
    cfg.tokenizer.tube_t = 4;
    cfg.tokenizer.tube_h = 8;
    cfg.tokenizer.tube_w = 8;
    cfg.model.d_model = 32;
    cfg.model.n_heads = 4;
    cfg.model.enc_depth = 2;
    cfg.model.dec_depth = 1;
    cfg.model.dec_width = 16;
    cfg.train.lr = 3e-3;
    cfg.verify.retry_base_ms = 1;
    return cfg;
}

mae::MaeConfig mae_config_for(const Config& cfg, mae::Modality modality, int token_dim,
                              int max_tokens) {
    mae::MaeConfig mc;
    mc.modality = modality;
    mc.token_dim = token_dim;
    mc.max_tokens = max_tokens;
    mc.d_model = cfg.model.d_model;
    mc.n_heads = cfg.model.n_heads;
    mc.enc_depth = cfg.model.enc_depth;
    mc.dec_width = cfg.model.dec_width;
    mc.dec_depth = cfg.model.dec_depth;
    mc.adam.lr = cfg.train.lr;
    return mc;
}

tokenizer::TokenSet tokens_for(const Config& cfg, mae::Modality modality,
                               const media::SfvBundle& bundle) {
    if (modality == mae::Modality::video) {
        std::vector<media::Image> frames = media::sample_frames(bundle, cfg.media.frames);
        for (media::Image& f : frames)
            f = media::resize_frame(f, cfg.media.frame_size, cfg.media.frame_size);
        return tokenizer::tubify(frames, cfg.tokenizer.tube_t, cfg.tokenizer.tube_h,
                                 cfg.tokenizer.tube_w);
    }
    media::SpectrogramParams sp;
    sp.n_mels = cfg.media.n_mels;
    const media::Spectrogram spec = media::log_mel_spectrogram(bundle.audio, sp);
    return tokenizer::patchify_spectrogram(spec, cfg.tokenizer.patch_f, cfg.tokenizer.patch_t);
}

// ---- criterion 1: gradient correctness ---------------------------------------

/// Rescales a parameter store to a well-conditioned point: O(0.25) weights
/// (no vanishing paths, no softmax saturation), near-unit gains, small
/// biases. Finite differences at eps=1e-5 cannot certify 1e-4 around the
/// tiny-gradient regions the 0.02-scale init produces; the mutation fixture
/// below shows a wrong rule still fails by orders of magnitude.
template <typename Store>
void condition_params(Store& store, Rng& rng) {
    for (auto& e : store.entries()) {
        const bool gain = e.name.find("gain") != std::string::npos;
        const bool bias = e.name.find("bias") != std::string::npos ||
                          e.name.find(".b") != std::string::npos || e.name == "b";
        for (double& v : e.value.data) {
            if (gain)
                v = rng.uniform(0.9, 1.1);
            else if (bias)
                v = rng.uniform(-0.1, 0.1);
            else
                v = rng.uniform(-0.25, 0.25);
        }
    }
}

bool criterion_gradients(std::string& detail) {
    const auto start = Clock::now();
    double worst = 0.0;
    auto track = [&](double err) { worst = std::max(worst, err); };

    {
        // Linear-only: central differences are exact for quadratics. Positive
        // draws and a shifted target keep every gradient entry away from zero
        // so the 1e-9 bound measures the check, not cancellation noise.
        Rng rng(101);
        nnet::ParamStore<double> store;
        auto positive = [&](std::vector<int> shape) {
            auto t = nnet::Tensor<double>::zeros(std::move(shape));
            for (double& v : t.data) v = rng.uniform(0.3, 0.8);
            return t;
        };
        store.add("w", positive({5, 3}));
        store.add("b", positive({1, 3}));
        const auto x = positive({4, 5});
        auto target = nnet::Tensor<double>::zeros({4, 3});
        for (double& v : target.data) v = -3.0 + rng.uniform(0.0, 0.5);
        auto build = [&](nnet::Tape<double>& t, const nnet::Binding& b) {
            return nnet::mse_against(
                t, nnet::linear(t, nnet::leaf(t, x), b.node_ids[0], b.node_ids[1]), target);
        };
        auto loss = [&] {
            nnet::Tape<double> t;
            auto b = nnet::bind_params(t, store);
            return t.val(build(t, b)).data[0];
        };
        auto grads = [&] {
            nnet::Tape<double> t;
            auto b = nnet::bind_params(t, store);
            t.backward(build(t, b));
            nnet::read_grads(t, b, store);
        };
        const double err = nnet::grad_check({&store}, loss, grads);
        if (err >= 1e-9) {
            char buf[80];
            std::snprintf(buf, sizeof(buf), "linear-only error %.3e", err);
            detail = buf;
            return false;
        }
    }

    // Every layer type composed: layernorm -> attention -> gelu MLP inside the
    // standard block, at depths 1 and 2.
    for (int depth : {1, 2}) {
        Rng rng(213 + depth);
        nnet::GraphConfig gc;
        gc.input_dim = 6;
        gc.d_model = 8;
        gc.n_heads = 2;
        gc.depth = depth;
        gc.max_positions = 5;
        gc.mlp_hidden = 12;
        nnet::ModuleGraph<double> graph(gc, rng);
        condition_params(graph.params, rng);
        auto x = nnet::Tensor<double>::zeros({5, 6});
        for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
        auto target = nnet::Tensor<double>::zeros({5, 8});
        for (double& v : target.data) v = rng.uniform(-1.0, 1.0);
        auto loss = [&] {
            nnet::Tape<double> t;
            auto b = graph.bind(t);
            return t.val(nnet::mse_against(t, graph.forward(t, b, nnet::leaf(t, x)), target))
                .data[0];
        };
        auto grads = [&] {
            nnet::Tape<double> t;
            auto b = graph.bind(t);
            t.backward(nnet::mse_against(t, graph.forward(t, b, nnet::leaf(t, x)), target));
            nnet::read_grads(t, b, graph.params);
        };
        track(nnet::grad_check({&graph.params}, loss, grads));
    }

    {
        // Full MAE encoder/decoder graph through the masked loss.
        const uint64_t seed = 326;
        mae::MaeConfig mc;
        mc.modality = mae::Modality::video;
        mc.token_dim = 12;
        mc.max_tokens = 8;
        mc.d_model = 8;
        mc.n_heads = 2;
        mc.enc_depth = 1;
        mc.dec_width = 8;
        mc.dec_depth = 1;
        auto model = mae::MaeModelT<double>::init(mc, seed);
        Rng prng(seed * 31 + 7);
        condition_params(model.encoder.params, prng);
        condition_params(model.decoder.params, prng);
        condition_params(model.head, prng);
        tokenizer::TokenSet ts;
        ts.n_tokens = 8;
        ts.token_dim = 12;
        Rng rng(seed + 1);
        ts.tokens.resize(96);
        for (float& v : ts.tokens) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        const auto plan = tokenizer::make_mask(8, 0.5, seed + 2);

        auto loss = [&] {
            nnet::Tape<double> t;
            auto b = mae::bind_mae(t, model);
            return t.val(mae::build_mae_loss(t, model, b, ts, plan)).data[0];
        };
        auto grads = [&] {
            nnet::Tape<double> t;
            auto b = mae::bind_mae(t, model);
            t.backward(mae::build_mae_loss(t, model, b, ts, plan));
            nnet::read_grads(t, b.enc, model.encoder.params);
            nnet::read_grads(t, b.dec, model.decoder.params);
            nnet::read_grads(t, b.head, model.head);
        };
        track(nnet::grad_check(
            {&model.encoder.params, &model.decoder.params, &model.head}, loss, grads));
    }

    {
        // Mutation fixture: a corrupted backward rule must fail the check.
        Rng rng(116);
        nnet::ParamStore<double> store;
        store.add("w", random_tensor<double>({4, 4}, rng, 0.5));
        const auto x = random_tensor<double>({3, 4}, rng);
        auto corrupted = [](nnet::Tape<double>& t, int a) {
            nnet::Tensor<double> out = t.val(a);
            for (double& v : out.data) v = std::tanh(v);
            const int id = t.next_id();
            return t.add(std::move(out), [=](nnet::Tape<double>& tp) {
                const auto& g = tp.grad(id);
                const auto& av = tp.val(a);
                auto& ga = tp.grad(a);
                for (size_t i = 0; i < g.size(); ++i) {
                    const double th = std::tanh(av.data[i]);
                    ga[i] += 1.5 * g[i] * (1.0 - th * th); // wrong by 1.5x
                }
            });
        };
        auto build = [&](nnet::Tape<double>& t, const nnet::Binding& b) {
            return nnet::sum_all(t, corrupted(t, nnet::matmul(t, nnet::leaf(t, x), b.node_ids[0])));
        };
        auto loss = [&] {
            nnet::Tape<double> t;
            auto b = nnet::bind_params(t, store);
            return t.val(build(t, b)).data[0];
        };
        auto grads = [&] {
            nnet::Tape<double> t;
            auto b = nnet::bind_params(t, store);
            t.backward(build(t, b));
            nnet::read_grads(t, b, store);
        };
        if (nnet::grad_check({&store}, loss, grads) <= 1e-2) {
            detail = "mutation fixture passed the check (it must fail)";
            return false;
        }
    }

    const double elapsed = seconds_since(start);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "max rel error %.3e, mutation caught, %.1f s", worst, elapsed);
    detail = buf;
    return worst < 1e-4 && elapsed < 60.0;
}

// ---- criterion 2: masking contract -------------------------------------------

bool criterion_masking(std::string& detail) {
    Rng rng(202);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(500));
        const double ratio = rng.uniform();
        const uint64_t seed = rng.next_u64();
        const auto plan = tokenizer::make_mask(n, ratio, seed);

        if (static_cast<int>(plan.masked.size()) != static_cast<int>(std::lround(ratio * n))) {
            detail = "mask count mismatch";
            return false;
        }
        std::set<int> all(plan.masked.begin(), plan.masked.end());
        for (int v : plan.visible)
            if (!all.insert(v).second) {
                detail = "partitions overlap";
                return false;
            }
        if (static_cast<int>(all.size()) != n || (n > 0 && (*all.begin() != 0 || *all.rbegin() != n - 1))) {
            detail = "partitions not exhaustive";
            return false;
        }
        const auto again = tokenizer::make_mask(n, ratio, seed);
        if (again.masked != plan.masked || again.visible != plan.visible) {
            detail = "fixed seed did not reproduce the plan";
            return false;
        }
    }
    detail = "1000 random (n, ratio, seed) triples";
    return true;
}

// ---- criterion 3: pretraining descent ----------------------------------------

bool criterion_descent(std::string& detail) {
    const auto start = Clock::now();
    const Config cfg = accept_config();
    int ok_video = 0, ok_audio = 0;

    for (const mae::Modality modality : {mae::Modality::video, mae::Modality::audio}) {
        int& ok = modality == mae::Modality::video ? ok_video : ok_audio;
        for (uint64_t seed = 0; seed < 20; ++seed) {
            synth::BundleOptions opts;
            opts.n_frames = cfg.media.frames;
            opts.height = cfg.media.frame_size;
            opts.width = cfg.media.frame_size;
            opts.claimlike = true; // the structured pretraining family
            std::vector<tokenizer::TokenSet> data;
            for (int i = 0; i < 50; ++i)
                data.push_back(
                    tokens_for(cfg, modality, synth::make_bundle(seed * 1000 + i, opts)));

            auto model = mae::MaeModel::init(
                mae_config_for(cfg, modality, data[0].token_dim, data[0].n_tokens), 300 + seed);
            const auto eval_plan =
                tokenizer::make_mask(data[0].n_tokens, model.cfg.mask_ratio, 9090 + seed);
            const float initial = mae::reconstruction_loss(model, data[0], eval_plan);
            for (int step = 0; step < 50; ++step)
                mae::pretrain_step(model, data[step % data.size()], seed * 77 + step);
            const float trained = mae::reconstruction_loss(model, data[0], eval_plan);
            ok += (trained < 0.5f * initial) ? 1 : 0;
        }
    }
    const double elapsed = seconds_since(start);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "video %d/20, audio %d/20 seeds halved, %.1f s", ok_video,
                  ok_audio, elapsed);
    detail = buf;
    return ok_video >= 18 && ok_audio >= 18 && elapsed < 300.0;
}

// ---- criterion 4: claim head separability ------------------------------------

bool criterion_separability(std::string& detail) {
    const auto start = Clock::now();
    const int dim = 384; // the default fused width
    int ok = 0;
    double worst = 1.0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(400 + seed);
        std::vector<double> direction(dim);
        double norm = 0.0;
        for (double& d : direction) {
            d = rng.normal();
            norm += d * d;
        }
        norm = std::sqrt(norm);
        std::vector<std::vector<float>> embs;
        std::vector<int> labels;
        for (int cls = 0; cls < 2; ++cls) {
            const double shift = cls == 0 ? -2.0 : 2.0; // margin 2 sigma per class
            for (int i = 0; i < 200; ++i) {
                std::vector<float> x(dim);
                for (int j = 0; j < dim; ++j)
                    x[j] = static_cast<float>(shift * direction[j] / norm + rng.normal());
                embs.push_back(std::move(x));
                labels.push_back(cls);
            }
        }
        claim::ClaimHead head = claim::make_head(dim, 128, 0.5, 4000 + seed);
        claim::FinetuneOptions fo;
        fo.epochs = 100;
        fo.lr = 1e-2;
        const auto result = claim::finetune(head, embs, labels, fo);
        const double best =
            *std::max_element(result.epoch_accuracy.begin(), result.epoch_accuracy.end());
        worst = std::min(worst, best);
        ok += (best >= 0.95) ? 1 : 0;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d/10 seeds reached 95%% (worst best-acc %.3f), %.1f s", ok,
                  worst, seconds_since(start));
    detail = buf;
    return ok == 10;
}

// ---- criterion 5: retrieval oracle equivalence --------------------------------

bool criterion_retrieval(std::string& detail) {
    const auto corpus = synth::make_corpus(500, 515);
    const retrieval::Index index = retrieval::Index::build(corpus);

    // Brute-force oracle over tokenized docs.
    struct Doc {
        std::map<std::string, int> tf;
        int len = 0;
    };
    std::map<std::string, Doc> docs;
    std::map<std::string, int> df;
    for (const auto& a : corpus) {
        Doc d;
        for (const auto& t : retrieval::tokenize_text(a.title + " " + a.body)) {
            d.tf[t] += 1;
            ++d.len;
        }
        for (const auto& [t, n] : d.tf) df[t] += 1;
        docs[a.id] = std::move(d);
    }
    double avgdl = 0.0;
    for (const auto& [id, d] : docs) avgdl += d.len;
    avgdl /= docs.size();

    const char* roots[] = {"river",  "mountain", "treaty", "engine",  "harvest", "signal",
                           "garden", "voyage",   "market", "council", "storm",   "record"};
    Rng rng(516);
    for (int q = 0; q < 50; ++q) {
        std::vector<std::string> query;
        const int len = 1 + static_cast<int>(rng.uniform_int(6));
        for (int i = 0; i < len; ++i)
            query.push_back(std::string(roots[rng.uniform_int(12)]) +
                            std::to_string(rng.uniform_int(20)));

        std::vector<std::pair<std::string, double>> oracle;
        for (const auto& [id, d] : docs) {
            double score = 0.0;
            std::set<std::string> seen;
            for (const auto& term : query) {
                if (!seen.insert(term).second) continue;
                auto it = d.tf.find(term);
                if (it == d.tf.end()) continue;
                const double idf =
                    std::log(1.0 + (500.0 - df[term] + 0.5) / (df[term] + 0.5));
                score += idf * (it->second * 2.2) /
                         (it->second + 1.2 * (1.0 - 0.75 + 0.75 * d.len / avgdl));
            }
            if (score > 0.0) oracle.push_back({id, score});
        }
        std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (oracle.size() > 10) oracle.resize(10);

        const auto got = index.retrieve(query, 10);
        if (got.size() != oracle.size()) {
            detail = "row count differs from exhaustive scan on query " + std::to_string(q);
            return false;
        }
        for (size_t i = 0; i < got.size(); ++i) {
            if (got[i].article->id != oracle[i].first || got[i].score != oracle[i].second) {
                detail = "ranking differs from exhaustive scan on query " + std::to_string(q);
                return false;
            }
        }
    }

    // Hand-computed single-doc IDF case.
    const retrieval::Index single =
        retrieval::Index::build({retrieval::Article{"d", "", "apple banana banana", "other", {}}});
    const double tf_factor = (2.0 * 2.2) / (2.0 + 1.2);
    const double want = std::log(4.0 / 3.0) * tf_factor;
    if (std::abs(single.bm25_score({"banana"}, "d") - want) > 1e-9) {
        detail = "single-doc IDF case off";
        return false;
    }
    detail = "50 queries over 500 docs match the exhaustive scan exactly";
    return true;
}

// ---- criteria 6 and 9 share the fixture rig -----------------------------------

struct Rig {
    Config cfg = accept_config();
    synth::FixtureBatch fx;
    mae::MaeModel video;
    mae::MaeModel audio;
    claim::ClaimHead head;
    retrieval::Index index = retrieval::Index::build(synth::fixture_corpus());
    std::unique_ptr<verify::ScriptClient> client;
    fs::path dir;
};

Rig make_rig(const fs::path& dir, int n_false, int n_true, int n_unver, int n_noclaim) {
    Rig rig;
    rig.dir = dir;
    rig.fx = synth::make_fixture_batch(dir, n_false, n_true, n_unver, n_noclaim, 606);
    {
        synth::BundleOptions probe_opts;
        probe_opts.n_frames = rig.cfg.media.frames;
        probe_opts.height = rig.cfg.media.frame_size;
        probe_opts.width = rig.cfg.media.frame_size;
        const auto probe = synth::make_bundle(1, probe_opts);
        const auto vt = tokens_for(rig.cfg, mae::Modality::video, probe);
        const auto at = tokens_for(rig.cfg, mae::Modality::audio, probe);
        rig.video = mae::MaeModel::init(
            mae_config_for(rig.cfg, mae::Modality::video, vt.token_dim, vt.n_tokens), 61);
        rig.audio = mae::MaeModel::init(
            mae_config_for(rig.cfg, mae::Modality::audio, at.token_dim, at.n_tokens), 62);
    }
    rig.client = verify::ScriptClient::from_file(rig.fx.script_path);

    std::vector<std::vector<float>> embs;
    std::vector<int> labels;
    pipeline::Models m{&rig.video, &rig.audio, nullptr};
    for (const auto& entry : rig.fx.manifest) {
        embs.push_back(pipeline::embed_bundle(media::load_bundle(entry.dir), m, rig.cfg).v);
        labels.push_back(entry.label == "claim" ? 1 : 0);
    }
    rig.head = claim::make_head(2 * rig.cfg.model.d_model, rig.cfg.finetune.hidden, 0.5, 63);
    claim::FinetuneOptions fo;
    fo.epochs = 150;
    fo.lr = 1e-2;
    claim::finetune(rig.head, embs, labels, fo);
    return rig;
}

bool criterion_gate(std::string& detail) {
    Rig rig = make_rig(work_dir() / "gate", 3, 2, 2, 13); // 7 claim-positive of 20
    verify::CallCounter counter;
    pipeline::CheckOptions opts;
    opts.config = rig.cfg;
    pipeline::Models models{&rig.video, &rig.audio, &rig.head};
    const auto result =
        pipeline::check_batch(rig.fx.manifest, models, *rig.client, rig.index, opts, &counter);

    int no_claim_with_calls = 0, misinfo = 0, verified = 0, unver = 0, gated = 0;
    for (const auto& o : result.outcomes) {
        if (!o.decision) {
            detail = "bundle errored: " + o.error.value_or("?");
            return false;
        }
        switch (*o.decision) {
        case pipeline::FinalDecision::harmless_no_claim:
            ++gated;
            if (o.api_calls.llm != 0 || o.api_calls.database != 0) ++no_claim_with_calls;
            break;
        case pipeline::FinalDecision::misinformative: ++misinfo; break;
        case pipeline::FinalDecision::harmless_verified: ++verified; break;
        case pipeline::FinalDecision::unverifiable_harmless: ++unver; break;
        }
    }
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "adjudicate %lld, database %lld (want 7), gated-out %d with %d stray calls",
                  static_cast<long long>(counter.adjudicate.load()),
                  static_cast<long long>(counter.retrieval.load()), gated, no_claim_with_calls);
    detail = buf;
    return counter.adjudicate == 7 && counter.retrieval == 7 && no_claim_with_calls == 0 &&
           gated == 13 && misinfo == 3 && verified == 2 && unver == 2;
}

// ---- criterion 7: metric oracles ----------------------------------------------

bool criterion_metrics(std::string& detail) {
    Rng rng(707);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 5 + static_cast<int>(rng.uniform_int(80));
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        int pos = 0;
        for (int i = 0; i < n; ++i) {
            scores[i] = std::floor(rng.uniform() * 10.0) / 10.0;
            labels[i] = rng.uniform() < 0.5 ? 1 : 0;
            pos += labels[i];
        }
        if (pos == 0) labels[0] = 1;
        if (pos == n) labels[0] = 0;

        double concordant = 0.0, tied = 0.0;
        int64_t pairs = 0;
        for (int i = 0; i < n; ++i) {
            if (!labels[i]) continue;
            for (int j = 0; j < n; ++j) {
                if (labels[j]) continue;
                ++pairs;
                concordant += scores[i] > scores[j] ? 1.0 : 0.0;
                tied += scores[i] == scores[j] ? 1.0 : 0.0;
            }
        }
        const double oracle = (concordant + 0.5 * tied) / static_cast<double>(pairs);
        if (std::abs(eval::auroc(scores, labels) - oracle) > 1e-12) {
            detail = "auroc differs from the pair-counting oracle";
            return false;
        }

        if (trial < 10) {
            // Strictly increasing transform invariance.
            const double a = 0.5 + rng.uniform() * 2.0;
            const double b = rng.uniform(-1.0, 1.0);
            std::vector<double> mapped(scores.size());
            for (size_t i = 0; i < scores.size(); ++i)
                mapped[i] = a * scores[i] + b + std::exp(scores[i]);
            if (std::abs(eval::auroc(mapped, labels) - oracle) > 1e-12) {
                detail = "auroc not invariant under a monotone transform";
                return false;
            }
        }
    }

    // F1 against a direct recount.
    Rng rng2(708);
    for (int trial = 0; trial < 50; ++trial) {
        const int tp = static_cast<int>(rng2.uniform_int(40));
        const int fp = static_cast<int>(rng2.uniform_int(40));
        const int fn = static_cast<int>(rng2.uniform_int(40));
        if (tp + fp + fn == 0) continue;
        const double want = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
        if (std::abs(eval::f1(tp, fp, fn) - want) > 1e-15) {
            detail = "f1 differs from the direct formula";
            return false;
        }
    }
    detail = "100 auroc sets (tol 1e-12), 10 monotone transforms, f1 recount";
    return true;
}

// ---- criterion 8: PCA fidelity -------------------------------------------------

void jacobi_eigen(std::vector<double> a, int n, std::vector<double>& values,
                  std::vector<std::vector<double>>& vectors) {
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) v[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a[p * n + q]) < 1e-300) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * a[p * n + q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    values.resize(n);
    for (int i = 0; i < n; ++i) values[i] = a[i * n + i];
    vectors.assign(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) vectors[i][k] = v[k][i];
}

bool criterion_pca(std::string& detail) {
    Rng rng(808);
    double worst_angle = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < 10; ++i) {
            std::vector<double> r(5);
            for (double& x : r) x = rng.normal();
            rows.push_back(std::move(r));
        }
        const mae::Pca2d pca = mae::pca_2d(rows);
        if (pca.explained[0] < pca.explained[1] || pca.explained[1] < 0.0) {
            detail = "explained variances not non-increasing/non-negative";
            return false;
        }

        const int d = 5;
        std::vector<double> mean(d, 0.0);
        for (const auto& r : rows)
            for (int j = 0; j < d; ++j) mean[j] += r[j];
        for (double& m : mean) m /= rows.size();
        std::vector<double> cov(d * d, 0.0);
        for (const auto& r : rows)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    cov[i * d + j] += (r[i] - mean[i]) * (r[j] - mean[j]);
        for (double& c : cov) c /= (rows.size() - 1);

        std::vector<double> values;
        std::vector<std::vector<double>> vectors;
        jacobi_eigen(cov, d, values, vectors);
        std::vector<int> order = {0, 1, 2, 3, 4};
        std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] > values[b]; });

        // Principal angles via the singular values of the 2x2 cross-gram.
        double g00 = 0, g01 = 0, g10 = 0, g11 = 0;
        for (int j = 0; j < d; ++j) {
            g00 += pca.basis[0][j] * vectors[order[0]][j];
            g01 += pca.basis[0][j] * vectors[order[1]][j];
            g10 += pca.basis[1][j] * vectors[order[0]][j];
            g11 += pca.basis[1][j] * vectors[order[1]][j];
        }
        const double t = g00 * g00 + g01 * g01 + g10 * g10 + g11 * g11;
        const double det = g00 * g11 - g01 * g10;
        const double disc = std::sqrt(std::max(0.0, t * t / 4.0 - det * det));
        const double s1 = std::sqrt(std::max(0.0, t / 2.0 + disc));
        const double s2 = std::sqrt(std::max(0.0, t / 2.0 - disc));
        for (double s : {s1, s2}) {
            const double angle = std::acos(std::min(1.0, s));
            worst_angle = std::max(worst_angle, angle);
        }
    }
    if (worst_angle >= 1e-6) {
        char buf[120];
        std::snprintf(buf, sizeof(buf), "principal angle %.3e exceeds 1e-6", worst_angle);
        detail = buf;
        return false;
    }

    // Figure-shaped CSV emitted for a fixture embedding set.
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 12; ++i) {
        std::vector<double> r(16);
        for (double& x : r) x = rng.normal();
        rows.push_back(std::move(r));
    }
    const mae::Pca2d pca = mae::pca_2d(rows);
    const fs::path csv = work_dir() / "figure.csv";
    mae::write_pca_csv(csv, pca, std::vector<std::string>(12, "claim"),
                       std::vector<std::string>(12, "fused"));
    const std::string text = read_file(csv);
    if (text.rfind("x,y,label,modality\n", 0) != 0 || !fs::exists(work_dir() / "figure.json")) {
        detail = "figure CSV/sidecar missing or malformed";
        return false;
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "20 matrices, worst principal angle %.2e, CSV emitted",
                  worst_angle);
    detail = buf;
    return true;
}

// ---- criterion 9: end-to-end determinism through the binary --------------------

bool run_cmd(const std::string& cmd) { return std::system(cmd.c_str()) == 0; }

bool criterion_cli_determinism(std::string& detail) {
    const fs::path dir = work_dir() / "cli";
    fs::create_directories(dir);
    Rig rig = make_rig(dir / "fx", 3, 2, 2, 13);

    // Persist the artifacts the binary needs.
    mae::save_encoder(dir / "video.ckpt", rig.video);
    mae::save_encoder(dir / "audio.ckpt", rig.audio);
    claim::save_head(dir / "head.ckpt", rig.head);
    rig.index.save(dir / "index");
    write_file(dir / "cfg.json", config_to_json(rig.cfg).dump(2));

    const std::string bin = VIMGUARD_BIN_PATH;
    const std::string base = bin + " --config " + (dir / "cfg.json").string() +
                             " check --manifest " + rig.fx.manifest_path.string() +
                             " --video-ckpt " + (dir / "video.ckpt").string() + " --audio-ckpt " +
                             (dir / "audio.ckpt").string() + " --head " +
                             (dir / "head.ckpt").string() + " --index " +
                             (dir / "index").string() + " --client mock --mock-script " +
                             rig.fx.script_path.string();
    if (!run_cmd(base + " --jobs 1 --out " + (dir / "out1.jsonl").string() + " > /dev/null")) {
        detail = "check --jobs 1 failed";
        return false;
    }
    if (!run_cmd(base + " --jobs 8 --out " + (dir / "out8.jsonl").string() + " > /dev/null")) {
        detail = "check --jobs 8 failed";
        return false;
    }
    const std::string s1 = read_file(dir / "out1.jsonl");
    const std::string s8 = read_file(dir / "out8.jsonl");
    if (s1 != s8) {
        detail = "outcome streams differ between --jobs 1 and --jobs 8";
        return false;
    }

    // Decision mapping on the scripted mocks, read back from the stream.
    std::map<std::string, int> decisions;
    std::istringstream in(s1);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.find("\"summary\"") != std::string::npos) continue;
        const auto o = pipeline::outcome_from_json(line);
        if (o.decision) decisions[pipeline::decision_name(*o.decision)] += 1;
    }
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "streams byte-identical; decisions misinfo=%d verified=%d unver=%d gated=%d",
                  decisions["misinformative"], decisions["harmless_verified"],
                  decisions["unverifiable_harmless"], decisions["harmless_no_claim"]);
    detail = buf;
    return decisions["misinformative"] == 3 && decisions["harmless_verified"] == 2 &&
           decisions["unverifiable_harmless"] == 2 && decisions["harmless_no_claim"] == 13;
}

// ---- criterion 10: format round trips ------------------------------------------

bool criterion_roundtrips(std::string& detail) {
    const fs::path dir = work_dir() / "roundtrip";
    fs::create_directories(dir);

    // Bundle: write -> read -> write, byte-identical second write.
    synth::BundleOptions opts;
    opts.claimlike = true;
    const media::SfvBundle b = synth::make_bundle(1001, opts);
    media::write_bundle(dir / "b1", b);
    media::write_bundle(dir / "b2", media::load_bundle(dir / "b1"));
    for (const char* f : {"frames.sfvb", "audio.wav", "manifest.json"}) {
        if (read_file(dir / "b1" / f) != read_file(dir / "b2" / f)) {
            detail = std::string("bundle file differs after round trip: ") + f;
            return false;
        }
    }

    // Checkpoint (encoder and full train state).
    mae::MaeConfig mc;
    mc.modality = mae::Modality::audio;
    mc.token_dim = 12;
    mc.max_tokens = 8;
    mc.d_model = 8;
    mc.n_heads = 2;
    mc.enc_depth = 1;
    mc.dec_width = 8;
    mc.dec_depth = 1;
    mae::MaeModel model = mae::MaeModel::init(mc, 1002);
    tokenizer::TokenSet ts;
    ts.n_tokens = 8;
    ts.token_dim = 12;
    Rng rng(1003);
    ts.tokens.resize(96);
    for (float& v : ts.tokens) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    mae::pretrain_step(model, ts, 5);
    mae::save_encoder(dir / "enc1.ckpt", model);
    mae::save_encoder(dir / "enc2.ckpt", mae::load_encoder(dir / "enc1.ckpt"));
    if (read_file(dir / "enc1.ckpt") != read_file(dir / "enc2.ckpt")) {
        detail = "encoder checkpoint differs after round trip";
        return false;
    }
    mae::save_train_state(dir / "st1.ckpt", model);
    mae::save_train_state(dir / "st2.ckpt", mae::load_train_state(dir / "st1.ckpt"));
    if (read_file(dir / "st1.ckpt") != read_file(dir / "st2.ckpt")) {
        detail = "train state differs after round trip";
        return false;
    }

    // Index.
    const retrieval::Index index = retrieval::Index::build(synth::make_corpus(60, 1004));
    index.save(dir / "idx1");
    retrieval::Index::load(dir / "idx1").save(dir / "idx2");
    for (const char* f : {"terms.tsv", "postings.bin", "stats.json", "articles.jsonl"}) {
        if (read_file(dir / "idx1" / f) != read_file(dir / "idx2" / f)) {
            detail = std::string("index file differs after round trip: ") + f;
            return false;
        }
    }
    detail = "bundle, checkpoint, train state and index all byte-stable";
    return true;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<bool(std::string&)> run;
    };
    const std::vector<Criterion> criteria = {
        {"1 gradient correctness", criterion_gradients},
        {"2 masking contract", criterion_masking},
        {"3 pretraining descent", criterion_descent},
        {"4 claim head separability", criterion_separability},
        {"5 retrieval oracle equivalence", criterion_retrieval},
        {"6 gate efficiency invariant", criterion_gate},
        {"7 metric oracles", criterion_metrics},
        {"8 pca fidelity", criterion_pca},
        {"9 end-to-end determinism", criterion_cli_determinism},
        {"10 format round-trips", criterion_roundtrips},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %s%s%s\n", ok ? "PASS" : "FAIL", c.name,
                    detail.empty() ? "" : ": ", detail.c_str());
        std::fflush(stdout);
        failures += ok ? 0 : 1;
    }
    if (failures > 0) std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
