// vimguard: gated two-stage short-form-video fact checking.
//
// One binary, subcommand per stage: ingest, pretrain, finetune, index build,
// check, eval, viz-embeddings (plus make-fixture for demo data). Every
// stochastic stage honors --seed; flags win over --config file values.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vimguard/claim_detect.hpp"
#include "vimguard/config.hpp"
#include "vimguard/eval.hpp"
#include "vimguard/mae.hpp"
#include "vimguard/media.hpp"
#include "vimguard/pipeline.hpp"
#include "vimguard/retrieval.hpp"
#include "vimguard/synthetic.hpp"
#include "vimguard/tokenizer.hpp"
#include "vimguard/util.hpp"
#include "vimguard/verify.hpp"

namespace fs = std::filesystem;
using namespace vimguard;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTransport = 3;

struct GlobalArgs {
    std::string config_path;
    std::vector<std::string> overrides; // KEY=VALUE
    std::optional<uint64_t> seed;
};

Config resolve_config(const GlobalArgs& g) {
    Config cfg = g.config_path.empty() ? Config{} : load_config(g.config_path);
    for (const std::string& kv : g.overrides) {
        const size_t eq = kv.find('=');
        require(eq != std::string::npos, Err::ConfigError, "--set expects KEY=VALUE: " + kv);
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (g.seed) cfg.seed = *g.seed;
    return cfg;
}

/// The run config is echoed next to every output so results stay
/// reproducible from the artifact alone.
void echo_config(const Config& cfg, const fs::path& out) {
    fs::path target;
    if (fs::is_directory(out))
        target = out / "run_config.json";
    else
        target = out.string() + ".run_config.json";
    write_file(target, config_to_json(cfg).dump(2) + "\n");
}

media::SpectrogramParams spectrogram_params(const Config& cfg) {
    media::SpectrogramParams sp;
    sp.window_len = cfg.media.window_len;
    sp.hop_len = cfg.media.hop_len;
    sp.n_mels = cfg.media.n_mels;
    sp.sample_rate = cfg.media.sample_rate;
    sp.log_eps = static_cast<float>(cfg.media.log_eps);
    return sp;
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
    const media::Spectrogram spec = media::log_mel_spectrogram(bundle.audio, spectrogram_params(cfg));
    return tokenizer::patchify_spectrogram(spec, cfg.tokenizer.patch_f, cfg.tokenizer.patch_t);
}

mae::MaeConfig mae_config_for(const Config& cfg, mae::Modality modality, int token_dim,
                              int max_tokens) {
    mae::MaeConfig mc;
    mc.modality = modality;
    mc.token_dim = token_dim;
    mc.max_tokens = max_tokens;
    mc.mask_ratio = modality == mae::Modality::video ? cfg.tokenizer.video_mask_ratio
                                                     : cfg.tokenizer.audio_mask_ratio;
    mc.d_model = cfg.model.d_model;
    mc.n_heads = cfg.model.n_heads;
    mc.enc_depth = cfg.model.enc_depth;
    mc.dec_width = cfg.model.dec_width;
    mc.dec_depth = cfg.model.dec_depth;
    mc.mlp_ratio = cfg.model.mlp_ratio;
    mc.adam.lr = cfg.train.lr;
    mc.adam.beta1 = cfg.train.beta1;
    mc.adam.beta2 = cfg.train.beta2;
    mc.adam.eps = cfg.train.eps;
    return mc;
}

std::unique_ptr<verify::TextClient> make_client(const Config& cfg) {
    if (cfg.client.kind == "mock") {
        require(!cfg.client.script.empty(), Err::ConfigError,
                "mock client needs a script (client.script or --mock-script)");
        return verify::ScriptClient::from_file(cfg.client.script);
    }
    if (cfg.client.kind == "http") {
        verify::HttpClientConfig hc;
        hc.base_url = cfg.client.base_url;
        hc.endpoint = cfg.client.endpoint;
        hc.max_inflight = cfg.client.max_inflight;
        hc.timeout_s = cfg.client.timeout_s;
        return std::make_unique<verify::HttpClient>(hc);
    }
    fail(Err::ConfigError, "unknown client kind: " + cfg.client.kind);
}

// ---- subcommand bodies ------------------------------------------------------

struct IngestArgs {
    std::string input, out, decoder_cmd;
    bool dry_run = false;
};

void run_ingest(const Config& cfg, const IngestArgs& args) {
    std::string cmd = !args.decoder_cmd.empty() ? args.decoder_cmd : cfg.ingest.decoder_cmd;
    require(!cmd.empty(), Err::ConfigError,
            "no decoder configured; pass --decoder-cmd or set ingest.decoder_cmd "
            "(template with {input} and {out} placeholders)");
    auto substitute = [&](const std::string& key, const std::string& value) {
        size_t pos;
        while ((pos = cmd.find(key)) != std::string::npos) cmd.replace(pos, key.size(), value);
    };
    substitute("{input}", args.input);
    substitute("{out}", args.out);

    if (args.dry_run) {
        std::printf("%s\n", cmd.c_str());
        return;
    }
    fs::create_directories(args.out);
    const int rc = std::system(cmd.c_str());
    require(rc == 0, Err::DecoderError, "decoder command failed with status " + std::to_string(rc));

    const media::SfvBundle b = media::load_bundle(args.out);
    std::printf("ingested %s: %zu frames, %.2f s audio\n", b.id.c_str(), b.frames.size(),
                static_cast<double>(b.audio.size()) / b.sample_rate);
}

struct PretrainArgs {
    std::string modality = "video";
    int synthetic = 0;
    std::string bundles;
    int steps = 100;
    std::string out;
    std::string loss_csv;
    std::string resume;
    std::string state_out;
};

void run_pretrain(const Config& cfg, const PretrainArgs& args) {
    const mae::Modality modality =
        args.modality == "audio" ? mae::Modality::audio : mae::Modality::video;

    std::vector<tokenizer::TokenSet> data;
    if (args.synthetic > 0) {
        synth::BundleOptions opts;
        opts.n_frames = std::max(cfg.media.frames, cfg.tokenizer.tube_t);
        opts.height = cfg.media.frame_size;
        opts.width = cfg.media.frame_size;
        opts.claimlike = true; // the structured pretraining family
        for (int i = 0; i < args.synthetic; ++i) {
            opts.id = "synthetic-" + std::to_string(i);
            data.push_back(tokens_for(cfg, modality, synth::make_bundle(cfg.seed + i, opts)));
        }
    } else {
        require(!args.bundles.empty(), Err::ConfigError,
                "pretrain needs --synthetic N or --bundles MANIFEST");
        for (const auto& entry : pipeline::load_manifest(args.bundles))
            data.push_back(tokens_for(cfg, modality, media::load_bundle(entry.dir)));
    }
    require(!data.empty(), Err::ConfigError, "empty pretraining dataset");

    mae::MaeModel model =
        args.resume.empty()
            ? mae::MaeModel::init(
                  mae_config_for(cfg, modality, data[0].token_dim, data[0].n_tokens), cfg.seed)
            : mae::load_train_state(args.resume);
    require(model.cfg.token_dim == data[0].token_dim, Err::ShapeMismatch,
            "checkpoint token dim does not match the dataset");

    std::string csv = "step,loss\n";
    const tokenizer::MaskPlan eval_plan =
        tokenizer::make_mask(data[0].n_tokens, model.cfg.mask_ratio, cfg.seed ^ 0x9e3779b9ull);
    const float initial = mae::reconstruction_loss(model, data[0], eval_plan);
    for (int i = 0; i < args.steps; ++i) {
        const int64_t step = model.steps_taken;
        const float loss = mae::pretrain_step(model, data[step % data.size()],
                                              cfg.seed + 7777 + static_cast<uint64_t>(step));
        csv += std::to_string(step) + "," + std::to_string(loss) + "\n";
    }
    const float final_loss = mae::reconstruction_loss(model, data[0], eval_plan);

    mae::save_encoder(args.out, model);
    const std::string state_path = args.state_out.empty() ? args.out + ".state" : args.state_out;
    mae::save_train_state(state_path, model);
    if (!args.loss_csv.empty()) write_file(args.loss_csv, csv);
    echo_config(cfg, args.out);

    std::printf("pretrained %s MAE: %lld params, %lld total steps, eval loss %.4f -> %.4f\n",
                mae::modality_name(modality), static_cast<long long>(model.param_count()),
                static_cast<long long>(model.steps_taken), initial, final_loss);
}

struct FinetuneArgs {
    std::string manifest, video_ckpt, audio_ckpt, out;
    std::optional<int> epochs;
    std::optional<double> lr;
    bool unfreeze = false;
    std::string video_out, audio_out;
    std::string metrics_csv;
};

void run_finetune(const Config& cfg, const FinetuneArgs& args) {
    mae::MaeModel video = mae::load_encoder(args.video_ckpt);
    mae::MaeModel audio = mae::load_encoder(args.audio_ckpt);
    const auto manifest = pipeline::load_manifest(args.manifest);

    std::vector<std::vector<float>> embeddings;
    std::vector<tokenizer::TokenSet> video_tokens, audio_tokens;
    std::vector<int> labels;
    int ambiguous = 0;
    pipeline::Models models{&video, &audio, nullptr};
    for (const auto& entry : manifest) {
        std::optional<int> label;
        if (entry.label) {
            label = *entry.label == "claim" ? 1 : 0;
        } else {
            switch (claim::label_from_hashtags(entry.hashtags)) {
            case claim::Label::claim: label = 1; break;
            case claim::Label::no_claim: label = 0; break;
            case claim::Label::ambiguous: break;
            }
        }
        if (!label) {
            // Surfaced, never guessed.
            std::fprintf(stderr, "skipping %s: ambiguous hashtags\n", entry.bundle_id.c_str());
            ++ambiguous;
            continue;
        }
        const media::SfvBundle bundle = media::load_bundle(entry.dir);
        if (args.unfreeze) {
            video_tokens.push_back(tokens_for(cfg, mae::Modality::video, bundle));
            audio_tokens.push_back(tokens_for(cfg, mae::Modality::audio, bundle));
        } else {
            embeddings.push_back(pipeline::embed_bundle(bundle, models, cfg).v);
        }
        labels.push_back(*label);
    }

    claim::ClaimHead head = claim::make_head(video.cfg.d_model + audio.cfg.d_model,
                                             cfg.finetune.hidden, cfg.finetune.threshold,
                                             cfg.seed);
    claim::FinetuneOptions opts;
    opts.epochs = args.epochs.value_or(cfg.finetune.epochs);
    opts.lr = args.lr.value_or(cfg.finetune.lr);
    opts.seed = cfg.seed;

    claim::FinetuneResult result;
    if (args.unfreeze) {
        require(!args.video_out.empty() && !args.audio_out.empty(), Err::ConfigError,
                "--unfreeze needs --video-out and --audio-out for the updated encoders");
        result = claim::finetune_unfrozen(video, audio, head, video_tokens, audio_tokens, labels,
                                          opts);
        mae::save_encoder(args.video_out, video);
        mae::save_encoder(args.audio_out, audio);
    } else {
        result = claim::finetune(head, embeddings, labels, opts);
    }

    claim::save_head(args.out, head);
    echo_config(cfg, args.out);
    if (!args.metrics_csv.empty()) {
        std::string csv = "epoch,train_accuracy\n";
        for (size_t i = 0; i < result.epoch_accuracy.size(); ++i)
            csv += std::to_string(i) + "," + std::to_string(result.epoch_accuracy[i]) + "\n";
        write_file(args.metrics_csv, csv);
    }
    std::printf("finetuned head on %zu examples (%d ambiguous skipped), final train accuracy %.3f\n",
                labels.size(), ambiguous,
                result.epoch_accuracy.empty() ? 0.0 : result.epoch_accuracy.back());
}

struct IndexBuildArgs {
    std::string corpus, out;
};

void run_index_build(const Config& cfg, const IndexBuildArgs& args) {
    const auto articles = retrieval::read_corpus_jsonl(args.corpus);
    retrieval::Bm25Params params;
    params.k1 = cfg.retrieval.k1;
    params.b = cfg.retrieval.b;
    const retrieval::Index index = retrieval::Index::build(articles, params);
    index.save(args.out);
    echo_config(cfg, args.out);
    std::printf("indexed %d articles, avg doc len %.1f tokens\n", index.stats().n_docs,
                index.stats().avg_doc_len);
}

struct CheckArgs {
    std::string manifest, video_ckpt, audio_ckpt, head, index, out;
    int jobs = 1;
    bool no_cache = false;
    std::string cache_dir;
    bool timings = false;
    std::string since;
    std::string mock_script, base_url, client_kind;
};

void run_check(Config cfg, const CheckArgs& args) {
    if (!args.client_kind.empty()) cfg.client.kind = args.client_kind;
    if (!args.mock_script.empty()) cfg.client.script = args.mock_script;
    if (!args.base_url.empty()) cfg.client.base_url = args.base_url;
    if (!args.since.empty()) cfg.verify.since = args.since;

    const mae::MaeModel video = mae::load_encoder(args.video_ckpt);
    const mae::MaeModel audio = mae::load_encoder(args.audio_ckpt);
    const claim::ClaimHead head = claim::load_head(args.head);
    const retrieval::Index index = retrieval::Index::load(args.index);
    const auto manifest = pipeline::load_manifest(args.manifest);
    auto client = make_client(cfg);

    pipeline::CheckOptions opts;
    opts.config = cfg;
    opts.jobs = args.jobs;
    opts.use_cache = !args.no_cache && !args.cache_dir.empty();
    opts.cache_dir = args.cache_dir;

    verify::CallCounter counter;
    pipeline::Models models{&video, &audio, &head};
    const pipeline::BatchResult result =
        pipeline::check_batch(manifest, models, *client, index, opts, &counter);

    std::string stream;
    for (const auto& o : result.outcomes) stream += pipeline::outcome_to_json(o, args.timings) + "\n";
    json summary;
    summary["summary"] = {{"n_bundles", result.outcomes.size()},
                          {"errors", result.errors},
                          {"api_calls",
                           {{"llm", result.total_calls.llm},
                            {"database", result.total_calls.database}}},
                          {"counter",
                           {{"transcribe", counter.transcribe.load()},
                            {"summarize", counter.summarize.load()},
                            {"adjudicate", counter.adjudicate.load()},
                            {"retrieval", counter.retrieval.load()}}}};
    stream += summary.dump() + "\n";
    write_file(args.out, stream);
    echo_config(cfg, args.out);
    std::printf("checked %zu bundles (%d errors): llm calls %lld, database calls %lld\n",
                result.outcomes.size(), result.errors,
                static_cast<long long>(result.total_calls.llm),
                static_cast<long long>(result.total_calls.database));
}

struct EvalArgs {
    std::string outcomes, manifest, out_prefix, compare, system_name = "ViMGuard";
};

void run_eval(const Config& cfg, const EvalArgs& args) {
    std::vector<pipeline::Outcome> outcomes;
    {
        std::istringstream in(read_file(args.outcomes));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (json::parse(line).contains("summary")) continue;
            outcomes.push_back(pipeline::outcome_from_json(line));
        }
    }
    const auto manifest = pipeline::load_manifest(args.manifest);
    eval::EvalReport report = eval::evaluate(outcomes, manifest, args.system_name);
    if (!args.compare.empty()) {
        const auto rows = eval::read_comparison_csv(args.compare);
        report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    }

    const std::string table = eval::render_table(report);
    write_file(args.out_prefix + ".json", eval::report_to_json(report).dump(2) + "\n");
    write_file(args.out_prefix + ".txt", table);
    eval::write_report_csv(args.out_prefix + ".csv", report);
    echo_config(cfg, args.out_prefix + ".json");
    std::fputs(table.c_str(), stdout);
}

struct VizArgs {
    std::string manifest, video_ckpt, audio_ckpt, out;
    std::string mode = "fused";
};

void run_viz(const Config& cfg, const VizArgs& args) {
    const mae::MaeModel video = mae::load_encoder(args.video_ckpt);
    const mae::MaeModel audio = mae::load_encoder(args.audio_ckpt);
    const auto manifest = pipeline::load_manifest(args.manifest);
    require(manifest.size() >= 3, Err::ShapeMismatch, "need at least 3 bundles to project");

    std::vector<mae::Embedding> fused, video_embs, audio_embs;
    std::vector<std::string> labels;
    for (const auto& entry : manifest) {
        const media::SfvBundle bundle = media::load_bundle(entry.dir);
        const mae::Embedding ev =
            mae::embed(video, tokens_for(cfg, mae::Modality::video, bundle), bundle.id);
        const mae::Embedding ea =
            mae::embed(audio, tokens_for(cfg, mae::Modality::audio, bundle), bundle.id);
        video_embs.push_back(ev);
        audio_embs.push_back(ea);
        fused.push_back(mae::fuse(ev, ea));
        labels.push_back(entry.label.value_or("unlabeled"));
    }

    if (args.mode == "fused") {
        const mae::Pca2d pca = mae::pca_2d_embeddings(fused);
        mae::write_pca_csv(args.out, pca, labels,
                           std::vector<std::string>(labels.size(), "fused"));
        std::printf("wrote %s (fused, explained variance %.4g / %.4g)\n", args.out.c_str(),
                    pca.explained[0], pca.explained[1]);
    } else if (args.mode == "per-modality") {
        fs::path base(args.out);
        const fs::path video_csv = base.parent_path() / (base.stem().string() + ".video.csv");
        const fs::path audio_csv = base.parent_path() / (base.stem().string() + ".audio.csv");
        const mae::Pca2d pv = mae::pca_2d_embeddings(video_embs);
        const mae::Pca2d pa = mae::pca_2d_embeddings(audio_embs);
        mae::write_pca_csv(video_csv, pv, labels,
                           std::vector<std::string>(labels.size(), "video"));
        mae::write_pca_csv(audio_csv, pa, labels,
                           std::vector<std::string>(labels.size(), "audio"));
        std::printf("wrote %s and %s\n", video_csv.string().c_str(), audio_csv.string().c_str());
    } else {
        fail(Err::ConfigError, "--mode must be fused or per-modality");
    }
    echo_config(cfg, args.out);
}

struct FixtureArgs {
    std::string out;
    int n_false = 3, n_true = 2, n_unver = 2, n_noclaim = 13;
};

void run_make_fixture(const Config& cfg, const FixtureArgs& args) {
    const synth::FixtureBatch fx = synth::make_fixture_batch(
        args.out, args.n_false, args.n_true, args.n_unver, args.n_noclaim, cfg.seed);
    std::printf("fixture at %s: %zu bundles (%d claim-positive), manifest %s\n",
                fx.root.string().c_str(), fx.manifest.size(), fx.n_claim,
                fx.manifest_path.string().c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vimguard: gated two-stage short-form-video fact checking"};
    app.require_subcommand(1);
    app.footer(config_help());

    GlobalArgs global;
    app.add_option("--config", global.config_path, "JSON config file (strict keys)");
    app.add_option("--set", global.overrides, "config override KEY=VALUE (repeatable)");
    uint64_t seed_flag = 0;
    auto* seed_opt = app.add_option("--seed", seed_flag, "seed for every stochastic stage");

    IngestArgs ingest;
    auto* cmd_ingest = app.add_subcommand("ingest", "decode a media file into a bundle dir");
    cmd_ingest->add_option("--input", ingest.input, "source media file")->required();
    cmd_ingest->add_option("--out", ingest.out, "bundle output directory")->required();
    cmd_ingest->add_option("--decoder-cmd", ingest.decoder_cmd,
                           "decoder command template ({input}, {out})");
    cmd_ingest->add_flag("--dry-run", ingest.dry_run, "print the command without running it");

    PretrainArgs pretrain;
    auto* cmd_pretrain = app.add_subcommand("pretrain", "masked-autoencoder pretraining");
    cmd_pretrain->add_option("--modality", pretrain.modality, "video | audio")
        ->check(CLI::IsMember({"video", "audio"}));
    cmd_pretrain->add_option("--synthetic", pretrain.synthetic, "use N generated bundles");
    cmd_pretrain->add_option("--bundles", pretrain.bundles, "manifest of bundle dirs");
    cmd_pretrain->add_option("--steps", pretrain.steps, "optimization steps");
    cmd_pretrain->add_option("--out", pretrain.out, "encoder checkpoint path")->required();
    cmd_pretrain->add_option("--loss-csv", pretrain.loss_csv, "write per-step loss curve");
    cmd_pretrain->add_option("--resume", pretrain.resume, "resume from a .state file");
    cmd_pretrain->add_option("--state-out", pretrain.state_out,
                             "training-state output (default OUT.state)");

    FinetuneArgs finetune;
    auto* cmd_finetune = app.add_subcommand("finetune", "train the claim-detection head");
    cmd_finetune->add_option("--manifest", finetune.manifest, "labeled bundle manifest")->required();
    cmd_finetune->add_option("--video-ckpt", finetune.video_ckpt, "video encoder")->required();
    cmd_finetune->add_option("--audio-ckpt", finetune.audio_ckpt, "audio encoder")->required();
    cmd_finetune->add_option("--out", finetune.out, "head checkpoint path")->required();
    int ft_epochs = -1;
    double ft_lr = -1.0;
    cmd_finetune->add_option("--epochs", ft_epochs, "training epochs");
    cmd_finetune->add_option("--lr", ft_lr, "learning rate");
    cmd_finetune->add_flag("--unfreeze", finetune.unfreeze, "fine-tune encoders end to end");
    cmd_finetune->add_option("--video-out", finetune.video_out, "updated video encoder path");
    cmd_finetune->add_option("--audio-out", finetune.audio_out, "updated audio encoder path");
    cmd_finetune->add_option("--metrics-csv", finetune.metrics_csv, "per-epoch accuracy CSV");

    IndexBuildArgs index_build;
    auto* cmd_index = app.add_subcommand("index", "article index maintenance");
    auto* cmd_index_build = cmd_index->add_subcommand("build", "build a BM25 index");
    cmd_index_build->add_option("--corpus", index_build.corpus, "JSONL article corpus")->required();
    cmd_index_build->add_option("--out", index_build.out, "index directory")->required();

    CheckArgs check;
    auto* cmd_check = app.add_subcommand("check", "run the gated two-stage pipeline");
    cmd_check->add_option("--manifest", check.manifest, "bundle manifest")->required();
    cmd_check->add_option("--video-ckpt", check.video_ckpt, "video encoder")->required();
    cmd_check->add_option("--audio-ckpt", check.audio_ckpt, "audio encoder")->required();
    cmd_check->add_option("--head", check.head, "claim head checkpoint")->required();
    cmd_check->add_option("--index", check.index, "BM25 index directory")->required();
    cmd_check->add_option("--out", check.out, "outcome JSONL path")->required();
    cmd_check->add_option("--jobs", check.jobs, "worker threads");
    cmd_check->add_option("--client", check.client_kind, "mock | http")
        ->check(CLI::IsMember({"mock", "http"}));
    cmd_check->add_option("--mock-script", check.mock_script, "mock client script");
    cmd_check->add_option("--base-url", check.base_url, "http client base url");
    cmd_check->add_flag("--no-cache", check.no_cache, "disable the result cache");
    cmd_check->add_option("--cache-dir", check.cache_dir, "result cache directory");
    cmd_check->add_flag("--timings", check.timings, "include wall_time_ms in the stream");
    cmd_check->add_option("--since", check.since, "only retrieve articles published >= DATE");

    EvalArgs eval_args;
    auto* cmd_eval = app.add_subcommand("eval", "score outcomes against a labeled manifest");
    cmd_eval->add_option("--outcomes", eval_args.outcomes, "outcome JSONL from check")->required();
    cmd_eval->add_option("--manifest", eval_args.manifest, "manifest with true_label")->required();
    cmd_eval->add_option("--out-prefix", eval_args.out_prefix, "report path prefix")->required();
    cmd_eval->add_option("--compare", eval_args.compare, "comparison rows CSV");
    cmd_eval->add_option("--system", eval_args.system_name, "row name for this system");

    VizArgs viz;
    auto* cmd_viz = app.add_subcommand("viz-embeddings", "export 2-D PCA of embeddings");
    cmd_viz->add_option("--manifest", viz.manifest, "bundle manifest")->required();
    cmd_viz->add_option("--video-ckpt", viz.video_ckpt, "video encoder")->required();
    cmd_viz->add_option("--audio-ckpt", viz.audio_ckpt, "audio encoder")->required();
    cmd_viz->add_option("--out", viz.out, "CSV output path")->required();
    cmd_viz->add_option("--mode", viz.mode, "fused | per-modality")
        ->check(CLI::IsMember({"fused", "per-modality"}));

    FixtureArgs fixture;
    auto* cmd_fixture = app.add_subcommand("make-fixture", "generate a demo/mock fixture batch");
    cmd_fixture->add_option("--out", fixture.out, "fixture directory")->required();
    cmd_fixture->add_option("--false-claims", fixture.n_false, "bundles adjudicated FALSE");
    cmd_fixture->add_option("--true-claims", fixture.n_true, "bundles adjudicated TRUE");
    cmd_fixture->add_option("--unverifiable", fixture.n_unver, "bundles with no evidence");
    cmd_fixture->add_option("--no-claim", fixture.n_noclaim, "claim-free bundles");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        Config cfg = resolve_config(global);
        if (seed_opt->count() > 0) cfg.seed = seed_flag;

        if (cmd_ingest->parsed()) run_ingest(cfg, ingest);
        if (cmd_pretrain->parsed()) run_pretrain(cfg, pretrain);
        if (cmd_finetune->parsed()) {
            if (ft_epochs >= 0) finetune.epochs = ft_epochs;
            if (ft_lr > 0) finetune.lr = ft_lr;
            run_finetune(cfg, finetune);
        }
        if (cmd_index->parsed()) {
            require(cmd_index_build->parsed(), Err::ConfigError, "usage: vimguard index build ...");
            run_index_build(cfg, index_build);
        }
        if (cmd_check->parsed()) run_check(cfg, check);
        if (cmd_eval->parsed()) run_eval(cfg, eval_args);
        if (cmd_viz->parsed()) run_viz(cfg, viz);
        if (cmd_fixture->parsed()) run_make_fixture(cfg, fixture);
    } catch (const VgError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        switch (e.code()) {
        case Err::ConfigError: return kExitUsage;
        case Err::TransportError: return kExitTransport;
        default: return kExitData;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitOk;
}
