#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "redpanda/model.hpp"
#include "redpanda/synthdata.hpp"

// kNN density scoring over encoder codes: a bank of train-normal codes is
// queried exhaustively with cosine similarity; the anomaly score of a test
// code is the mean (1 - cos) over its k most similar bank rows, so higher
// means more anomalous and every score lies in [0, 2].

namespace redpanda::scorer {

struct CodeBank {
    std::size_t dim = 0;
    std::vector<float> codes;  // row-major (size, dim), unit rows
    std::vector<std::string> ids;

    std::size_t size() const { return ids.size(); }
    const float* row(std::size_t i) const { return codes.data() + i * dim; }
};

template <typename T>
CodeBank build_bank(const model::Encoder<T>& encoder, const std::vector<synthdata::LabeledSample>& train_normal) {
    if (train_normal.empty()) throw std::invalid_argument("build_bank: empty train split");
    std::vector<const numerics::Tensor<float>*> imgs;
    imgs.reserve(train_normal.size());
    CodeBank bank;
    for (const auto& s : train_normal) {
        imgs.push_back(&s.image);
        bank.ids.push_back(s.id);
    }
    auto rows = model::encode_images(encoder, imgs);
    bank.dim = rows[0].size();
    bank.codes.reserve(rows.size() * bank.dim);
    for (const auto& r : rows) bank.codes.insert(bank.codes.end(), r.begin(), r.end());
    return bank;
}

// Exhaustive kNN: similarities accumulated in double, fixed index order.
inline double anomaly_score(const CodeBank& bank, const std::vector<float>& code, std::size_t k) {
    if (bank.size() == 0) throw std::invalid_argument("anomaly_score: empty code bank");
    if (code.size() != bank.dim)
        throw std::invalid_argument("anomaly_score: query dimension " + std::to_string(code.size()) +
                                    " does not match bank dimension " + std::to_string(bank.dim));
    if (k < 1 || k > bank.size())
        throw std::invalid_argument("anomaly_score: k=" + std::to_string(k) + " outside [1," +
                                    std::to_string(bank.size()) + "]");
    std::vector<double> sims(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i) {
        const float* r = bank.row(i);
        double dot = 0;
        for (std::size_t j = 0; j < bank.dim; ++j) dot += static_cast<double>(r[j]) * static_cast<double>(code[j]);
        sims[i] = dot;
    }
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end(),
                      [](double a, double b) { return a > b; });
    double acc = 0;
    for (std::size_t i = 0; i < k; ++i) acc += 1.0 - sims[i];
    return acc / static_cast<double>(k);
}

struct ScoredSample {
    std::string id;
    synthdata::Role role = synthdata::Role::test_familiar;
    double score = 0;
};

template <typename T>
std::vector<ScoredSample> score_split(const model::Encoder<T>& encoder, const CodeBank& bank,
                                      const std::vector<const synthdata::LabeledSample*>& test_samples,
                                      std::size_t k) {
    std::vector<ScoredSample> out;
    out.reserve(test_samples.size());
    if (test_samples.empty()) return out;
    std::vector<const numerics::Tensor<float>*> imgs;
    imgs.reserve(test_samples.size());
    for (const auto* s : test_samples) imgs.push_back(&s->image);
    auto codes = model::encode_images(encoder, imgs);
    for (std::size_t i = 0; i < test_samples.size(); ++i)
        out.push_back({test_samples[i]->id, test_samples[i]->role, anomaly_score(bank, codes[i], k)});
    return out;
}

// CSV persistence: provenance comment, then id,role,score rows at full
// double precision.
struct ScoresFile {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string mode;
    std::size_t k = 1;
    std::vector<ScoredSample> scored;
};

inline std::string format_hash(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

inline std::string serialize_scores(const ScoresFile& f) {
    std::ostringstream os;
    os << "# config_hash=" << format_hash(f.config_hash) << " seed=" << f.seed << " mode=" << f.mode << " k=" << f.k
       << "\n";
    os << "id,role,score\n";
    os.precision(17);
    for (const auto& s : f.scored) os << s.id << "," << synthdata::role_name(s.role) << "," << s.score << "\n";
    return os.str();
}

inline ScoresFile parse_scores(std::istream& is, const std::string& origin) {
    ScoresFile f;
    std::string line;
    if (!std::getline(is, line) || line.rfind("# config_hash=", 0) != 0)
        throw std::runtime_error(origin + ": missing provenance header");
    {
        std::istringstream hs(line.substr(2));
        std::string tok;
        while (hs >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
            if (key == "config_hash") f.config_hash = std::stoull(val, nullptr, 16);
            else if (key == "seed") f.seed = std::stoull(val);
            else if (key == "mode") f.mode = val;
            else if (key == "k") f.k = std::stoul(val);
        }
    }
    if (!std::getline(is, line) || line != "id,role,score")
        throw std::runtime_error(origin + ": missing id,role,score header");
    std::size_t row = 2;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        auto fields = synthdata::split_csv_line(line);
        if (fields.size() != 3)
            throw std::runtime_error(origin + ": row " + std::to_string(row) + " has " +
                                     std::to_string(fields.size()) + " fields, expected 3");
        ScoredSample s;
        s.id = fields[0];
        s.role = synthdata::role_from_string(fields[1]);
        try {
            s.score = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw std::runtime_error(origin + ": row " + std::to_string(row) + " has a non-numeric score");
        }
        f.scored.push_back(std::move(s));
    }
    return f;
}

inline void write_scores_file(const std::string& path, const ScoresFile& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_scores_file: cannot open '" + path + "'");
    os << serialize_scores(f);
}

inline ScoresFile read_scores_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_scores_file: cannot open '" + path + "'");
    return parse_scores(is, path);
}

}  // namespace redpanda::scorer
