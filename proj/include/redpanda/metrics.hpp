#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "redpanda/scorer.hpp"
#include "redpanda/synthdata.hpp"

// ROC-AUC (Mann-Whitney with half credit for ties) and the three benchmark
// scores: AD (anomalies vs all normal test data), PA (pseudo-anomalies vs
// familiar samples, ideal 0.5) and RA (anomalies vs pseudo-anomalies).

namespace redpanda::metrics {

// Rank-sum formulation: P(s_pos > s_neg) + 0.5 P(s_pos = s_neg) in
// O((P+N) log(P+N)) with midranks for ties.
inline double roc_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    if (pos.empty() || neg.empty())
        throw std::invalid_argument(std::string("roc_auc: ") + (pos.empty() ? "positive" : "negative") +
                                    " score list is empty");
    struct Entry {
        double score;
        bool positive;
    };
    std::vector<Entry> all;
    all.reserve(pos.size() + neg.size());
    for (double s : pos) all.push_back({s, true});
    for (double s : neg) all.push_back({s, false});
    std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

    double pos_rank_sum = 0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t t = i; t < j; ++t)
            if (all[t].positive) pos_rank_sum += midrank;
        i = j;
    }
    const double p = static_cast<double>(pos.size()), n = static_cast<double>(neg.size());
    const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * n);
}

struct ScoreReport {
    double ad_score = 0;  // anomalies vs familiar + pseudo
    double pa_score = 0;  // pseudo vs familiar; 0.5 is ideal
    double ra_score = 0;  // anomalies vs pseudo
    std::map<std::string, std::size_t> counts;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string mode;
};

inline ScoreReport compute_report(const std::vector<scorer::ScoredSample>& scored, std::uint64_t config_hash = 0,
                                  std::uint64_t seed = 0, std::string mode = {}) {
    std::vector<double> familiar, pseudo, anomaly;
    ScoreReport report;
    report.config_hash = config_hash;
    report.seed = seed;
    report.mode = std::move(mode);
    for (const auto& s : scored) {
        report.counts[synthdata::role_name(s.role)]++;
        switch (s.role) {
            case synthdata::Role::test_familiar: familiar.push_back(s.score); break;
            case synthdata::Role::test_pseudo: pseudo.push_back(s.score); break;
            case synthdata::Role::test_anomaly: anomaly.push_back(s.score); break;
            case synthdata::Role::train_normal: break;  // not part of any metric
        }
    }
    if (familiar.empty()) throw std::invalid_argument("compute_report: no test_familiar scores");
    if (pseudo.empty()) throw std::invalid_argument("compute_report: no test_pseudo scores");
    if (anomaly.empty()) throw std::invalid_argument("compute_report: no test_anomaly scores");

    std::vector<double> normal_test(familiar);
    normal_test.insert(normal_test.end(), pseudo.begin(), pseudo.end());
    report.ad_score = roc_auc(anomaly, normal_test);
    report.pa_score = roc_auc(pseudo, familiar);
    report.ra_score = roc_auc(anomaly, pseudo);
    return report;
}

inline std::string report_json(const ScoreReport& r) {
    nlohmann::json j;
    j["ad_score"] = r.ad_score;
    j["pa_score"] = r.pa_score;
    j["ra_score"] = r.ra_score;
    j["pa_deviation"] = std::abs(r.pa_score - 0.5);
    j["counts"] = r.counts;
    j["config_hash"] = scorer::format_hash(r.config_hash);
    j["seed"] = r.seed;
    j["mode"] = r.mode;
    return j.dump(2) + "\n";
}

inline ScoreReport report_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ScoreReport r;
    r.ad_score = j.at("ad_score").get<double>();
    r.pa_score = j.at("pa_score").get<double>();
    r.ra_score = j.at("ra_score").get<double>();
    r.counts = j.at("counts").get<std::map<std::string, std::size_t>>();
    r.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mode = j.at("mode").get<std::string>();
    return r;
}

// Aligned plain-text table; PA is reported raw plus its deviation from the
// ideal 0.5 (pseudo-anomalies indistinguishable from familiar samples).
inline std::string report_table(const ScoreReport& r) {
    std::ostringstream os;
    os << std::left << std::setw(16) << "Method" << std::setw(11) << "AD-Score" << std::setw(11) << "PA-Score"
       << std::setw(11) << "RA-Score" << std::setw(10) << "|PA-0.5|" << "\n";
    os << std::fixed << std::setprecision(3);
    os << std::left << std::setw(16) << (r.mode.empty() ? "?" : r.mode) << std::setw(11) << r.ad_score
       << std::setw(11) << r.pa_score << std::setw(11) << r.ra_score << std::setw(10)
       << std::abs(r.pa_score - 0.5) << "\n";
    return os.str();
}

}  // namespace redpanda::metrics
