#include "vimguard/mae.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vimguard/checkpoint.hpp"
#include "vimguard/error.hpp"
#include "vimguard/util.hpp"

namespace vimguard::mae {

using nlohmann::json;

const char* kind_name(Embedding::Kind k) {
    switch (k) {
    case Embedding::Kind::video: return "video";
    case Embedding::Kind::audio: return "audio";
    case Embedding::Kind::fused: return "fused";
    }
    return "?";
}

Embedding fuse(const Embedding& video, const Embedding& audio) {
    require(video.kind == Embedding::Kind::video && audio.kind == Embedding::Kind::audio,
            Err::SourceMismatch, "fuse expects (video, audio) embeddings");
    require(video.source_id == audio.source_id, Err::SourceMismatch,
            "fuse requires embeddings of the same bundle");
    Embedding out;
    out.kind = Embedding::Kind::fused;
    out.source_id = video.source_id;
    out.v = video.v;
    out.v.insert(out.v.end(), audio.v.begin(), audio.v.end());
    return out;
}

std::pair<Embedding, Embedding> unfuse(const Embedding& fused, int d_video) {
    require(fused.kind == Embedding::Kind::fused, Err::SourceMismatch, "unfuse expects fused");
    require(d_video >= 0 && d_video <= fused.dim(), Err::DimMismatch, "bad split point");
    Embedding v, a;
    v.kind = Embedding::Kind::video;
    a.kind = Embedding::Kind::audio;
    v.source_id = a.source_id = fused.source_id;
    v.v.assign(fused.v.begin(), fused.v.begin() + d_video);
    a.v.assign(fused.v.begin() + d_video, fused.v.end());
    return {std::move(v), std::move(a)};
}

namespace {

constexpr double kPcaTol = 1e-9;
constexpr int kPcaMaxIters = 10000;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

std::vector<double> matvec(const std::vector<double>& cov, int d, const std::vector<double>& v) {
    std::vector<double> out(d, 0.0);
    for (int i = 0; i < d; ++i) {
        const double* row = &cov[static_cast<size_t>(i) * d];
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += row[j] * v[j];
        out[i] = acc;
    }
    return out;
}

/// Dominant eigenpair of a PSD matrix. `ortho_to` (optional) is removed from
/// the iterate each step so deflation does not drift.
std::pair<double, std::vector<double>> power_iterate(const std::vector<double>& cov, int d,
                                                     const std::vector<double>* ortho_to) {
    // Deterministic pseudo-random start so ties in any coordinate basis are
    // broken the same way everywhere.
    Rng rng(0x5eedf00dULL);
    std::vector<double> v(d);
    for (double& x : v) x = rng.normal();
    if (ortho_to) {
        const double c = dot(v, *ortho_to);
        for (int i = 0; i < d; ++i) v[i] -= c * (*ortho_to)[i];
    }
    const double vn = norm(v);
    for (double& x : v) x /= vn;

    for (int iter = 0; iter < kPcaMaxIters; ++iter) {
        std::vector<double> w = matvec(cov, d, v);
        if (ortho_to) {
            const double c = dot(w, *ortho_to);
            for (int i = 0; i < d; ++i) w[i] -= c * (*ortho_to)[i];
        }
        const double wn = norm(w);
        if (wn < 1e-300) {
            // Null component: eigenvalue 0, keep the current orthonormal v.
            return {0.0, v};
        }
        for (double& x : w) x /= wn;
        double diff = 0.0;
        for (int i = 0; i < d; ++i) diff += (w[i] - v[i]) * (w[i] - v[i]);
        v = std::move(w);
        if (std::sqrt(diff) < kPcaTol) break;
    }
    const std::vector<double> cv = matvec(cov, d, v);
    return {dot(v, cv), v};
}

} // namespace

Pca2d pca_2d(const std::vector<std::vector<double>>& rows) {
    require(rows.size() >= 3, Err::ShapeMismatch, "pca needs at least 3 points");
    const int d = static_cast<int>(rows.front().size());
    for (const auto& r : rows)
        require(static_cast<int>(r.size()) == d, Err::DimMismatch, "pca rows must share one dim");

    const int n = static_cast<int>(rows.size());
    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows)
        for (int j = 0; j < d; ++j) mean[j] += r[j];
    for (double& m : mean) m /= n;

    std::vector<std::vector<double>> centered(rows);
    for (auto& r : centered)
        for (int j = 0; j < d; ++j) r[j] -= mean[j];

    std::vector<double> cov(static_cast<size_t>(d) * d, 0.0);
    for (const auto& r : centered)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) cov[static_cast<size_t>(i) * d + j] += r[i] * r[j];
    for (double& c : cov) c /= (n - 1);

    double total_var = 0.0;
    for (int i = 0; i < d; ++i) total_var += cov[static_cast<size_t>(i) * d + i];
    require(total_var > 0.0, Err::DegenerateRank, "all points identical");

    auto [lambda1, v1] = power_iterate(cov, d, nullptr);
    std::vector<double> deflated = cov;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            deflated[static_cast<size_t>(i) * d + j] -= lambda1 * v1[i] * v1[j];
    auto [lambda2, v2] = power_iterate(deflated, d, &v1);
    lambda2 = std::max(lambda2, 0.0);

    Pca2d out;
    out.explained = {lambda1, lambda2};
    out.basis = {v1, v2};
    out.points.reserve(rows.size());
    for (const auto& r : centered) out.points.push_back({dot(r, v1), dot(r, v2)});
    return out;
}

Pca2d pca_2d_embeddings(const std::vector<Embedding>& embs) {
    std::vector<std::vector<double>> rows;
    rows.reserve(embs.size());
    for (const auto& e : embs) rows.emplace_back(e.v.begin(), e.v.end());
    return pca_2d(rows);
}

void write_pca_csv(const std::filesystem::path& csv_path, const Pca2d& pca,
                   const std::vector<std::string>& labels,
                   const std::vector<std::string>& modalities) {
    require(labels.size() == pca.points.size() && modalities.size() == pca.points.size(),
            Err::DimMismatch, "labels/modalities must match point count");
    std::string out = "x,y,label,modality\n";
    char buf[64];
    for (size_t i = 0; i < pca.points.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,", pca.points[i][0], pca.points[i][1]);
        out += buf;
        out += labels[i];
        out += ',';
        out += modalities[i];
        out += '\n';
    }
    write_file(csv_path, out);

    json sidecar;
    sidecar["explained_variance"] = {pca.explained[0], pca.explained[1]};
    sidecar["n_points"] = pca.points.size();
    std::filesystem::path side = csv_path;
    side.replace_extension(".json");
    write_file(side, sidecar.dump(2) + "\n");
}

namespace {

json mae_config_to_json(const MaeConfig& c) {
    json j;
    j["modality"] = modality_name(c.modality);
    j["token_dim"] = c.token_dim;
    j["max_tokens"] = c.max_tokens;
    j["mask_ratio"] = c.mask_ratio;
    j["d_model"] = c.d_model;
    j["n_heads"] = c.n_heads;
    j["enc_depth"] = c.enc_depth;
    j["dec_width"] = c.dec_width;
    j["dec_depth"] = c.dec_depth;
    j["mlp_ratio"] = c.mlp_ratio;
    j["adam"] = {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2},
                 {"eps", c.adam.eps}};
    return j;
}

MaeConfig mae_config_from_json(const json& j) {
    MaeConfig c;
    c.modality = j.at("modality") == "video" ? Modality::video : Modality::audio;
    c.token_dim = j.at("token_dim");
    c.max_tokens = j.at("max_tokens");
    c.mask_ratio = j.at("mask_ratio");
    c.d_model = j.at("d_model");
    c.n_heads = j.at("n_heads");
    c.enc_depth = j.at("enc_depth");
    c.dec_width = j.at("dec_width");
    c.dec_depth = j.at("dec_depth");
    c.mlp_ratio = j.at("mlp_ratio");
    c.adam.lr = j.at("adam").at("lr");
    c.adam.beta1 = j.at("adam").at("beta1");
    c.adam.beta2 = j.at("adam").at("beta2");
    c.adam.eps = j.at("adam").at("eps");
    return c;
}

void overwrite_store(nnet::ParamStore<float>& store, const ckpt::Loaded& file,
                     const std::string& prefix) {
    for (auto& e : store.entries()) {
        auto it = file.tensors.find(prefix + e.name);
        require(it != file.tensors.end(), Err::BadHeader, "checkpoint missing " + prefix + e.name);
        require(it->second.shape == e.value.shape, Err::ShapeMismatch,
                "checkpoint shape mismatch for " + prefix + e.name);
        e.value.data = it->second.data;
    }
}

} // namespace

void save_encoder(const std::filesystem::path& path, const MaeModel& m) {
    json meta;
    meta["kind"] = "mae_encoder";
    meta["modality"] = modality_name(m.cfg.modality);
    meta["config"] = mae_config_to_json(m.cfg);
    meta["steps_taken"] = m.steps_taken;
    std::vector<ckpt::NamedTensor> tensors;
    for (const auto& e : m.encoder.params.entries()) tensors.push_back({"enc." + e.name, &e.value});
    ckpt::save(path, meta, tensors);
}

MaeModel load_encoder(const std::filesystem::path& path) {
    ckpt::Loaded file = ckpt::load(path);
    require(file.meta.at("kind") == "mae_encoder", Err::BadHeader, "not an encoder checkpoint");
    MaeModel m = MaeModel::init(mae_config_from_json(file.meta.at("config")), 0);
    m.steps_taken = file.meta.at("steps_taken");
    overwrite_store(m.encoder.params, file, "enc.");
    return m;
}

void save_train_state(const std::filesystem::path& path, const MaeModel& m) {
    json meta;
    meta["kind"] = "mae_train_state";
    meta["modality"] = modality_name(m.cfg.modality);
    meta["config"] = mae_config_to_json(m.cfg);
    meta["steps_taken"] = m.steps_taken;
    meta["adam_steps"] = {{"enc", m.enc_opt.step}, {"dec", m.dec_opt.step}, {"head", m.head_opt.step}};

    std::vector<ckpt::NamedTensor> tensors;
    std::vector<nnet::Tensor32> moment_storage; // keeps NamedTensor pointers alive
    moment_storage.reserve((m.encoder.params.size() + m.decoder.params.size() + m.head.size()) * 2);

    auto add_store = [&](const nnet::ParamStore<float>& store, const nnet::AdamState<float>& opt,
                         const std::string& prefix) {
        for (const auto& e : store.entries()) tensors.push_back({prefix + e.name, &e.value});
        if (opt.m.size() == store.size()) {
            for (size_t i = 0; i < store.size(); ++i) {
                const auto& shape = store.entries()[i].value.shape;
                moment_storage.push_back(nnet::Tensor32(shape, opt.m[i]));
                tensors.push_back({"adam.m." + prefix + store.entries()[i].name, &moment_storage.back()});
                moment_storage.push_back(nnet::Tensor32(shape, opt.v[i]));
                tensors.push_back({"adam.v." + prefix + store.entries()[i].name, &moment_storage.back()});
            }
        }
    };
    add_store(m.encoder.params, m.enc_opt, "enc.");
    add_store(m.decoder.params, m.dec_opt, "dec.");
    add_store(m.head, m.head_opt, "head.");
    ckpt::save(path, meta, tensors);
}

MaeModel load_train_state(const std::filesystem::path& path) {
    ckpt::Loaded file = ckpt::load(path);
    require(file.meta.at("kind") == "mae_train_state", Err::BadHeader, "not a train-state file");
    MaeModel m = MaeModel::init(mae_config_from_json(file.meta.at("config")), 0);
    m.steps_taken = file.meta.at("steps_taken");
    overwrite_store(m.encoder.params, file, "enc.");
    overwrite_store(m.decoder.params, file, "dec.");
    overwrite_store(m.head, file, "head.");

    auto load_opt = [&](const nnet::ParamStore<float>& store, nnet::AdamState<float>& opt,
                        const std::string& prefix, int64_t step) {
        opt.step = step;
        opt.m.assign(store.size(), {});
        opt.v.assign(store.size(), {});
        for (size_t i = 0; i < store.size(); ++i) {
            const std::string name = store.entries()[i].name;
            auto mi = file.tensors.find("adam.m." + prefix + name);
            auto vi = file.tensors.find("adam.v." + prefix + name);
            if (mi == file.tensors.end() || vi == file.tensors.end()) {
                opt.m[i].assign(store.entries()[i].value.data.size(), 0.0f);
                opt.v[i].assign(store.entries()[i].value.data.size(), 0.0f);
            } else {
                opt.m[i] = mi->second.data;
                opt.v[i] = vi->second.data;
            }
        }
    };
    const auto& steps = file.meta.at("adam_steps");
    load_opt(m.encoder.params, m.enc_opt, "enc.", steps.at("enc"));
    load_opt(m.decoder.params, m.dec_opt, "dec.", steps.at("dec"));
    load_opt(m.head, m.head_opt, "head.", steps.at("head"));
    return m;
}

} // namespace vimguard::mae
