#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vimguard/pipeline.hpp"

namespace vimguard::eval {

/// One scored item: true label, continuous misinformation score and the hard
/// prediction (decision == misinformative).
struct EvalRecord {
    std::string bundle_id;
    bool misinformative = false; // ground truth
    double score = 0.0;
    bool predicted = false;
};

struct Confusion {
    int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Pair-counting AUROC: (concordant + 0.5 * tied) / (P * N). Implemented via
/// average ranks; requires both classes.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// 2*tp / (2*tp + fp + fn); 0 by convention when tp == 0. Requires
/// tp + fp + fn >= 1.
double f1(int64_t tp, int64_t fp, int64_t fn);

struct ReportRow {
    std::string system;
    std::string auroc;    // cells kept as strings so comparison rows stay verbatim
    std::string f1;
    std::string api_calls;
};

struct EvalReport {
    std::vector<ReportRow> rows; // this system first, then comparison rows
    int64_t n_items = 0;
    Confusion confusion;
    double auroc_score = 0.0;      // continuous-score AUROC
    double auroc_hard = 0.0;       // AUROC of the 0/1 predictions, for transparency
    double f1_score = 0.0;
    int64_t api_calls_llm = 0;
    int64_t api_calls_database = 0;
    std::vector<EvalRecord> records;
};

/// Continuous misinformation score (the artifact's convention, the papered
/// systems publish none): harmless_no_claim -> 0.5*p; false_claims ->
/// 0.5 + 0.5*p; other verified outcomes -> 0.25*p, with p the claim
/// probability.
double misinformation_score(const pipeline::Outcome& outcome);

/// Joins outcomes with the labeled manifest (true_label required per entry)
/// and computes the Table-style report. Throws MissingOutcome when a manifest
/// id has no outcome and rejects errored outcomes.
EvalReport evaluate(const std::vector<pipeline::Outcome>& outcomes,
                    const std::vector<pipeline::ManifestEntry>& manifest,
                    const std::string& system_name = "ViMGuard");

/// Comparison rows: CSV lines "name, auroc, f1, api_calls", reproduced
/// verbatim in the report.
std::vector<ReportRow> read_comparison_csv(const std::filesystem::path& path);

std::string render_table(const EvalReport& report);
nlohmann::json report_to_json(const EvalReport& report);
void write_report_csv(const std::filesystem::path& path, const EvalReport& report);

} // namespace vimguard::eval
