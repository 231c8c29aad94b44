#include "vimguard/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "vimguard/error.hpp"
#include "vimguard/util.hpp"

namespace vimguard::eval {

using nlohmann::json;

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    require(scores.size() == labels.size(), Err::ShapeMismatch, "score/label count mismatch");
    const size_t n = scores.size();
    int64_t pos = 0;
    for (int y : labels) pos += y ? 1 : 0;
    const int64_t neg = static_cast<int64_t>(n) - pos;
    require(pos > 0 && neg > 0, Err::SingleClass, "auroc needs both classes");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // Average ranks over ties; rank sum of positives gives the U statistic,
    // which counts concordant pairs plus half the ties.
    std::vector<double> rank(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (size_t k = 0; k < n; ++k)
        if (labels[k]) rank_sum_pos += rank[k];
    const double u = rank_sum_pos - static_cast<double>(pos) * (pos + 1) / 2.0;
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double f1(int64_t tp, int64_t fp, int64_t fn) {
    require(tp + fp + fn >= 1, Err::ShapeMismatch, "f1 undefined with no relevant items");
    if (tp == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double misinformation_score(const pipeline::Outcome& outcome) {
    require(outcome.decision.has_value(), Err::MissingOutcome,
            "cannot score an errored outcome: " + outcome.bundle_id);
    const double p = outcome.claim_probability;
    switch (*outcome.decision) {
    case pipeline::FinalDecision::harmless_no_claim: return 0.5 * p;
    case pipeline::FinalDecision::misinformative: return 0.5 + 0.5 * p;
    case pipeline::FinalDecision::harmless_verified:
    case pipeline::FinalDecision::unverifiable_harmless: return 0.25 * p;
    }
    return 0.0;
}

EvalReport evaluate(const std::vector<pipeline::Outcome>& outcomes,
                    const std::vector<pipeline::ManifestEntry>& manifest,
                    const std::string& system_name) {
    std::map<std::string, const pipeline::Outcome*> by_id;
    for (const auto& o : outcomes) by_id[o.bundle_id] = &o;

    EvalReport report;
    for (const pipeline::ManifestEntry& entry : manifest) {
        auto it = by_id.find(entry.bundle_id);
        require(it != by_id.end(), Err::MissingOutcome, "no outcome for " + entry.bundle_id);
        require(entry.true_label.has_value(), Err::BadHeader,
                "manifest entry lacks true_label: " + entry.bundle_id);
        const pipeline::Outcome& o = *it->second;

        EvalRecord r;
        r.bundle_id = entry.bundle_id;
        r.misinformative = *entry.true_label == "misinformative";
        r.score = misinformation_score(o);
        r.predicted = o.decision == pipeline::FinalDecision::misinformative;
        report.records.push_back(r);

        if (r.predicted && r.misinformative) report.confusion.tp += 1;
        if (r.predicted && !r.misinformative) report.confusion.fp += 1;
        if (!r.predicted && !r.misinformative) report.confusion.tn += 1;
        if (!r.predicted && r.misinformative) report.confusion.fn += 1;
        report.api_calls_llm += o.api_calls.llm;
        report.api_calls_database += o.api_calls.database;
    }
    report.n_items = static_cast<int64_t>(report.records.size());

    std::vector<double> scores, hard;
    std::vector<int> labels;
    for (const EvalRecord& r : report.records) {
        scores.push_back(r.score);
        hard.push_back(r.predicted ? 1.0 : 0.0);
        labels.push_back(r.misinformative ? 1 : 0);
    }
    report.auroc_score = auroc(scores, labels);
    report.auroc_hard = auroc(hard, labels);
    report.f1_score = f1(report.confusion.tp, report.confusion.fp, report.confusion.fn);

    char buf[32];
    ReportRow self;
    self.system = system_name;
    std::snprintf(buf, sizeof(buf), "%.1f", report.auroc_score * 100.0);
    self.auroc = buf;
    std::snprintf(buf, sizeof(buf), "%.1f", report.f1_score * 100.0);
    self.f1 = buf;
    self.api_calls = std::to_string(report.api_calls_llm + report.api_calls_database);
    report.rows.push_back(std::move(self));
    return report;
}

std::vector<ReportRow> read_comparison_csv(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<ReportRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            const size_t b = cell.find_first_not_of(" \t");
            const size_t e = cell.find_last_not_of(" \t\r");
            cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
        }
        require(cells.size() == 4, Err::BadHeader, "comparison rows need 4 cells: " + line);
        rows.push_back({cells[0], cells[1], cells[2], cells[3]});
    }
    return rows;
}

std::string render_table(const EvalReport& report) {
    size_t name_w = 5;
    for (const ReportRow& r : report.rows) name_w = std::max(name_w, r.system.size());

    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-*s  %8s  %8s  %11s\n", static_cast<int>(name_w), "Model",
                  "AUROC", "F1 Score", "# API Calls");
    out += line;
    out.append(name_w + 2 + 8 + 2 + 8 + 2 + 11, '-');
    out += '\n';
    for (const ReportRow& r : report.rows) {
        std::snprintf(line, sizeof(line), "%-*s  %8s  %8s  %11s\n", static_cast<int>(name_w),
                      r.system.c_str(), r.auroc.c_str(), r.f1.c_str(), r.api_calls.c_str());
        out += line;
    }
    std::snprintf(line, sizeof(line),
                  "\nn=%lld  confusion tp=%lld fp=%lld tn=%lld fn=%lld  auroc(hard)=%.3f\n",
                  static_cast<long long>(report.n_items), static_cast<long long>(report.confusion.tp),
                  static_cast<long long>(report.confusion.fp),
                  static_cast<long long>(report.confusion.tn),
                  static_cast<long long>(report.confusion.fn), report.auroc_hard);
    out += line;
    return out;
}

json report_to_json(const EvalReport& report) {
    json j;
    j["n_items"] = report.n_items;
    j["auroc"] = report.auroc_score;
    j["auroc_hard"] = report.auroc_hard;
    j["f1"] = report.f1_score;
    j["api_calls"] = {{"llm", report.api_calls_llm}, {"database", report.api_calls_database}};
    j["confusion"] = {{"tp", report.confusion.tp},
                      {"fp", report.confusion.fp},
                      {"tn", report.confusion.tn},
                      {"fn", report.confusion.fn}};
    json rows = json::array();
    for (const ReportRow& r : report.rows)
        rows.push_back({{"system", r.system},
                        {"auroc", r.auroc},
                        {"f1", r.f1},
                        {"api_calls", r.api_calls}});
    j["rows"] = rows;
    return j;
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
    std::string out = "system,auroc,f1,api_calls\n";
    for (const ReportRow& r : report.rows)
        out += r.system + "," + r.auroc + "," + r.f1 + "," + r.api_calls + "\n";
    write_file(path, out);
}

} // namespace vimguard::eval
