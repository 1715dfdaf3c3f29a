#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "redpanda/metrics.hpp"
#include "redpanda/model.hpp"
#include "redpanda/scorer.hpp"
#include "redpanda/synthdata.hpp"

// Experiment orchestration: INI-style configuration, the
// generate/train/score/evaluate stages (individually resumable, each artifact
// stamped with the dataset hash and seed), and multi-seed aggregation.

namespace redpanda::runner {

namespace fs = std::filesystem;

using IniSections = std::map<std::string, std::map<std::string, std::string>>;

inline IniSections parse_ini(std::istream& is) {
    IniSections out;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t begin = line.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        std::size_t end = line.find_last_not_of(" \t");
        std::string t = line.substr(begin, end - begin + 1);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw std::runtime_error("config line " + std::to_string(lineno) + ": bad section header");
            section = t.substr(1, t.size() - 2);
            out[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key=value, got '" + t + "'");
        std::string key = t.substr(0, eq);
        std::string val = t.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        while (!val.empty() && (val.front() == ' ' || val.front() == '\t')) val.erase(val.begin());
        out[section][key] = val;
    }
    return out;
}

namespace detail {

class SectionView {
public:
    SectionView(const IniSections& ini, std::string name) : name_(std::move(name)) {
        auto it = ini.find(name_);
        if (it != ini.end()) kv_ = &it->second;
    }
    std::optional<std::string> get(const std::string& key) const {
        if (!kv_) return std::nullopt;
        auto it = kv_->find(key);
        if (it == kv_->end()) return std::nullopt;
        return it->second;
    }
    template <typename T, typename Parse>
    T parse_or(const std::string& key, T fallback, Parse parse) const {
        auto v = get(key);
        if (!v) return fallback;
        try {
            return parse(*v);
        } catch (const std::exception&) {
            throw std::runtime_error("config: bad value '" + *v + "' for [" + name_ + "] " + key);
        }
    }
    double number(const std::string& key, double fallback) const {
        return parse_or<double>(key, fallback, [](const std::string& s) { return std::stod(s); });
    }
    std::uint64_t integer(const std::string& key, std::uint64_t fallback) const {
        return parse_or<std::uint64_t>(key, fallback, [](const std::string& s) { return std::stoull(s); });
    }
    bool flag(const std::string& key, bool fallback) const {
        return parse_or<bool>(key, fallback, [](const std::string& s) {
            if (s == "1" || s == "true" || s == "yes") return true;
            if (s == "0" || s == "false" || s == "no") return false;
            throw std::invalid_argument(s);
        });
    }
    std::string text(const std::string& key, std::string fallback) const {
        auto v = get(key);
        return v ? *v : fallback;
    }

private:
    std::string name_;
    const std::map<std::string, std::string>* kv_ = nullptr;
};

inline std::vector<std::uint64_t> parse_u64_list(const std::string& s) {
    std::vector<std::uint64_t> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty()) out.push_back(std::stoull(tok));
    return out;
}

}  // namespace detail

struct ExperimentConfig {
    synthdata::BenchmarkSpec dataset;
    std::string external_manifest;  // when set, this dataset directory is used as-is
    model::TrainingConfig training;
    std::size_t k = 1;
    std::string output_dir = "runs/experiment";
    std::vector<std::uint64_t> seeds = {0, 1, 2};

    std::string dataset_dir() const {
        return external_manifest.empty() ? (fs::path(output_dir) / "dataset").string() : external_manifest;
    }
    std::string run_dir(model::TrainMode mode, std::uint64_t seed) const {
        return (fs::path(output_dir) / (std::string(model::mode_name(mode)) + "_s" + std::to_string(seed))).string();
    }

    static ExperimentConfig from_ini(const IniSections& ini) {
        ExperimentConfig cfg;
        detail::SectionView ds(ini, "dataset");
        cfg.external_manifest = ds.text("manifest", "");
        cfg.dataset.attributes.nuisance_domains = ds.integer("domains", 4);
        cfg.dataset.attributes.relevant_classes = ds.integer("classes", 10);
        cfg.dataset.attributes.sizes = ds.integer("sizes", 3);
        cfg.dataset.attributes.jitters = ds.integer("jitters", 4);
        cfg.dataset.image_size = ds.integer("image_size", 64);
        cfg.dataset.per_cell = ds.integer("per_cell", 60);
        cfg.dataset.train_fraction = ds.number("train_fraction", 0.85);
        cfg.dataset.seed = ds.integer("seed", 7);
        if (auto v = ds.get("anomaly_classes")) {
            cfg.dataset.true_anomaly_classes.clear();
            for (auto x : detail::parse_u64_list(*v)) cfg.dataset.true_anomaly_classes.push_back(static_cast<int>(x));
        }
        if (auto v = ds.get("pseudo_pairs")) {
            cfg.dataset.pseudo_pairs.clear();
            std::istringstream is(*v);
            std::string tok;
            while (std::getline(is, tok, ',')) {
                if (tok.empty()) continue;
                const auto colon = tok.find(':');
                if (colon == std::string::npos)
                    throw std::runtime_error("config: pseudo_pairs entries must be nuisance:class, got '" + tok + "'");
                cfg.dataset.pseudo_pairs.emplace_back(std::stoi(tok.substr(0, colon)),
                                                      std::stoi(tok.substr(colon + 1)));
            }
        }

        detail::SectionView tr(ini, "train");
        cfg.training.tau = tr.number("tau", 0.1);
        cfg.training.rec_weight = tr.number("rec_weight", 0.3);
        cfg.training.aug_weight = tr.number("aug_weight", 1.0);
        cfg.training.epochs = tr.integer("epochs", 200);
        cfg.training.domains_per_batch = tr.integer("domains_per_batch", 4);
        cfg.training.samples_per_domain = tr.integer("samples_per_domain", 32);
        cfg.training.lr_encoder = tr.number("lr_encoder", 1e-4);
        cfg.training.lr_generator = tr.number("lr_generator", 3e-4);
        cfg.training.embed_dim = tr.integer("embed_dim", 64);
        cfg.training.checkpoint_every = tr.integer("checkpoint_every", 0);
        cfg.training.two_view_aug = tr.flag("two_view_aug", false);
        cfg.training.augment_policy.blur = tr.flag("aug_blur", true);
        cfg.training.augment_policy.contrast = tr.flag("aug_contrast", true);
        cfg.training.augment_policy.saturation = tr.flag("aug_saturation", true);
        cfg.training.augment_policy.crop = tr.flag("aug_crop", true);

        detail::SectionView sc(ini, "score");
        cfg.k = sc.integer("k", 1);

        detail::SectionView run(ini, "run");
        cfg.output_dir = run.text("output", cfg.output_dir);
        if (auto v = run.get("seeds")) cfg.seeds = detail::parse_u64_list(*v);
        if (cfg.seeds.empty()) throw std::runtime_error("config: [run] seeds must be nonempty");

        // Environment override for the output root.
        if (const char* root = std::getenv("REDPANDA_OUTPUT_ROOT"); root && *root)
            cfg.output_dir = (fs::path(root) / cfg.output_dir).string();
        return cfg;
    }

    static ExperimentConfig load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("config: cannot open '" + path + "'");
        auto ini = parse_ini(is);
        return from_ini(ini);
    }
};

struct StageResult {
    bool skipped = false;
    std::string message;
};

namespace detail {

inline std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + p.string() + "'");
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

inline void write_file(const fs::path& p, const std::string& bytes) {
    if (!p.parent_path().empty()) fs::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("write failed for '" + p.string() + "'");
}

// Role counts straight from the CSV, without loading any image.
inline std::map<std::string, std::size_t> count_roles(const std::string& dataset_dir) {
    std::ifstream is(fs::path(dataset_dir) / "manifest.csv");
    if (!is) throw std::runtime_error("dataset manifest not found under '" + dataset_dir + "'");
    std::map<std::string, std::size_t> counts;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto fields = synthdata::split_csv_line(line);
        if (!fields.empty()) counts[fields.back()]++;
    }
    return counts;
}

// Canonical fingerprint of everything the train stage consumes besides the
// dataset; resumability must re-run when any of it changes.
inline std::string training_fingerprint(const model::TrainingConfig& tc, model::TrainMode mode, std::uint64_t seed) {
    std::ostringstream os;
    os.precision(17);
    os << "mode=" << model::mode_name(mode) << "\nseed=" << seed << "\ntau=" << tc.tau
       << "\nrec_weight=" << tc.rec_weight << "\naug_weight=" << tc.aug_weight << "\nepochs=" << tc.epochs
       << "\ndomains_per_batch=" << tc.domains_per_batch << "\nsamples_per_domain=" << tc.samples_per_domain
       << "\nlr_encoder=" << tc.lr_encoder << "\nlr_generator=" << tc.lr_generator << "\nembed_dim=" << tc.embed_dim
       << "\ntwo_view_aug=" << tc.two_view_aug << "\ncheckpoint_every=" << tc.checkpoint_every
       << "\naug=" << tc.augment_policy.blur << tc.augment_policy.contrast << tc.augment_policy.saturation
       << tc.augment_policy.crop << "\n";
    return os.str();
}

inline std::string loss_csv(const std::vector<model::EpochStats>& curve, std::uint64_t hash, std::uint64_t seed,
                            model::TrainMode mode) {
    std::ostringstream os;
    os << "# config_hash=" << scorer::format_hash(hash) << " seed=" << seed << " mode=" << model::mode_name(mode)
       << "\n";
    os << "epoch,l_con,l_aug,l_rec,total\n";
    os.precision(17);
    for (const auto& e : curve) os << e.epoch << "," << e.l_con << "," << e.l_aug << "," << e.l_rec << "," << e.total << "\n";
    return os.str();
}

}  // namespace detail

// generate: materialize the synthetic benchmark under <output>/dataset.
// Re-running with an unchanged dataset section is a byte-wise no-op.
inline StageResult stage_generate(const ExperimentConfig& cfg, std::ostream& out) {
    if (!cfg.external_manifest.empty())
        throw std::runtime_error("generate: config uses an external manifest ('" + cfg.external_manifest +
                                 "'); nothing to generate");
    cfg.dataset.validate();
    const fs::path dir = cfg.dataset_dir();
    const fs::path spec_path = dir / "spec.txt";
    const std::string spec_text = cfg.dataset.serialize();

    if (fs::exists(dir / "manifest.csv") && fs::exists(spec_path) && detail::read_file(spec_path) == spec_text) {
        auto counts = detail::count_roles(dir.string());
        out << "dataset up to date at " << dir.string() << "\n";
        for (const auto& [role, n] : counts) out << "  " << role << ": " << n << "\n";
        return {true, "dataset up to date"};
    }

    auto split = synthdata::build_benchmark(cfg.dataset);
    synthdata::write_manifest(split, dir.string());
    detail::write_file(spec_path, spec_text);
    out << "dataset written to " << dir.string() << " (hash " << scorer::format_hash(synthdata::manifest_hash(dir.string()))
        << ")\n";
    out << "  train_normal: " << split.train_normal.size() << "\n";
    out << "  test_familiar: " << split.test_familiar.size() << "\n";
    out << "  test_pseudo: " << split.test_pseudo.size() << "\n";
    out << "  test_anomaly: " << split.test_anomaly.size() << "\n";
    return {false, "dataset generated"};
}

// train: produce checkpoint.rpc and loss.csv for (mode, seed).
inline StageResult stage_train(const ExperimentConfig& cfg, model::TrainMode mode, std::uint64_t seed,
                               std::ostream& out) {
    const std::string dataset_dir = cfg.dataset_dir();
    if (!fs::exists(fs::path(dataset_dir) / "manifest.csv"))
        throw std::runtime_error("train: dataset manifest not found at '" +
                                 (fs::path(dataset_dir) / "manifest.csv").string() + "'; run generate first");
    const std::uint64_t hash = synthdata::manifest_hash(dataset_dir);
    const fs::path rdir = cfg.run_dir(mode, seed);
    const fs::path ckpt_path = rdir / "checkpoint.rpc";
    const fs::path fingerprint_path = rdir / "train_config.txt";
    const std::string fingerprint = detail::training_fingerprint(cfg.training, mode, seed);

    if (fs::exists(ckpt_path) && fs::exists(fingerprint_path) &&
        detail::read_file(fingerprint_path) == fingerprint) {
        auto existing = numerics::read_checkpoint_file(ckpt_path.string());
        if (existing.config_hash == hash && existing.seed == seed) {
            out << "checkpoint up to date at " << ckpt_path.string() << "\n";
            return {true, "checkpoint up to date"};
        }
    }

    auto split = synthdata::read_manifest(dataset_dir);
    model::TrainingConfig tc = cfg.training;
    tc.mode = mode;
    tc.seed = seed;

    auto sink = [&](std::size_t epoch, model::Encoder<float>& enc, model::Generator<float>* gen) {
        auto ck = model::make_checkpoint(enc, gen, hash, seed);
        numerics::write_checkpoint_file(ckpt_path.string(), ck);
        out << "checkpoint written at epoch " << epoch << "\n";
    };
    fs::create_directories(rdir);
    auto result = model::train<float>(tc, split, sink, nullptr);
    if (mode == model::TrainMode::raw_encoder) {
        auto ck = model::make_checkpoint<float>(result.encoder, nullptr, hash, seed);
        numerics::write_checkpoint_file(ckpt_path.string(), ck);
    }
    detail::write_file(rdir / "loss.csv", detail::loss_csv(result.curve, hash, seed, mode));
    detail::write_file(fingerprint_path, fingerprint);
    out << "trained " << model::mode_name(mode) << " seed " << seed << " (" << result.curve.size() << " epochs) -> "
        << ckpt_path.string() << "\n";
    return {false, "trained"};
}

// score: encode the bank and every test sample, write scores.csv.
inline StageResult stage_score(const ExperimentConfig& cfg, model::TrainMode mode, std::uint64_t seed,
                               std::ostream& out) {
    const std::string dataset_dir = cfg.dataset_dir();
    const std::uint64_t hash = synthdata::manifest_hash(dataset_dir);
    const fs::path rdir = cfg.run_dir(mode, seed);
    const fs::path ckpt_path = rdir / "checkpoint.rpc";
    const fs::path scores_path = rdir / "scores.csv";
    if (!fs::exists(ckpt_path))
        throw std::runtime_error("score: checkpoint not found at '" + ckpt_path.string() + "'; run train first");

    if (fs::exists(scores_path)) {
        auto existing = scorer::read_scores_file(scores_path.string());
        if (existing.config_hash == hash && existing.seed == seed && existing.mode == model::mode_name(mode) &&
            existing.k == cfg.k) {
            out << "scores up to date at " << scores_path.string() << "\n";
            return {true, "scores up to date"};
        }
    }

    auto ckpt = numerics::read_checkpoint_file(ckpt_path.string());
    if (ckpt.config_hash != hash)
        throw std::runtime_error("score: checkpoint hash " + scorer::format_hash(ckpt.config_hash) +
                                 " does not match dataset hash " + scorer::format_hash(hash));
    auto split = synthdata::read_manifest(dataset_dir);
    model::Encoder<float> encoder(split.image_size, cfg.training.embed_dim, 0);
    model::load_encoder(ckpt, encoder);

    auto bank = scorer::build_bank(encoder, split.train_normal);
    scorer::ScoresFile f;
    f.config_hash = hash;
    f.seed = seed;
    f.mode = model::mode_name(mode);
    f.k = cfg.k;
    f.scored = scorer::score_split(encoder, bank, split.test_samples(), cfg.k);
    scorer::write_scores_file(scores_path.string(), f);
    out << "scored " << f.scored.size() << " test samples -> " << scores_path.string() << "\n";
    return {false, "scored"};
}

// evaluate: compute the AD/PA/RA report from scores.csv; refuses score files
// whose hash does not match the dataset.
inline StageResult stage_evaluate(const ExperimentConfig& cfg, model::TrainMode mode, std::uint64_t seed,
                                  std::ostream& out) {
    const std::string dataset_dir = cfg.dataset_dir();
    const std::uint64_t hash = synthdata::manifest_hash(dataset_dir);
    const fs::path rdir = cfg.run_dir(mode, seed);
    const fs::path scores_path = rdir / "scores.csv";
    const fs::path report_path = rdir / "report.json";
    if (!fs::exists(scores_path))
        throw std::runtime_error("evaluate: scores not found at '" + scores_path.string() + "'; run score first");

    auto scores = scorer::read_scores_file(scores_path.string());
    if (scores.config_hash != hash)
        throw std::runtime_error("evaluate: scores hash " + scorer::format_hash(scores.config_hash) +
                                 " does not match dataset hash " + scorer::format_hash(hash));

    if (fs::exists(report_path)) {
        auto existing = metrics::report_from_json(detail::read_file(report_path));
        if (existing.config_hash == hash && existing.seed == seed && existing.mode == model::mode_name(mode)) {
            out << "report up to date at " << report_path.string() << "\n";
            out << metrics::report_table(existing);
            return {true, "report up to date"};
        }
    }

    auto report = metrics::compute_report(scores.scored, hash, seed, model::mode_name(mode));
    detail::write_file(report_path, metrics::report_json(report));
    detail::write_file(rdir / "report.txt", metrics::report_table(report));
    out << metrics::report_table(report);
    return {false, "evaluated"};
}

// report: aggregate run directories into per-mode mean +- standard deviation
// (population sigma, so a single seed reports 0.000).
struct ModeSummary {
    std::string mode;
    std::size_t runs = 0;
    double ad_mean = 0, ad_std = 0;
    double pa_mean = 0, pa_std = 0;
    double ra_mean = 0, ra_std = 0;
};

inline std::vector<ModeSummary> summarize_runs(const std::vector<std::string>& run_dirs) {
    if (run_dirs.empty()) throw std::runtime_error("report: no run directories given");
    std::map<std::string, std::vector<metrics::ScoreReport>> by_mode;
    std::optional<std::uint64_t> hash;
    for (const auto& dir : run_dirs) {
        const fs::path p = fs::path(dir) / "report.json";
        if (!fs::exists(p)) throw std::runtime_error("report: missing '" + p.string() + "'");
        auto r = metrics::report_from_json(detail::read_file(p));
        if (hash && *hash != r.config_hash)
            throw std::runtime_error("report: run '" + dir + "' was evaluated against a different dataset (hash " +
                                     scorer::format_hash(r.config_hash) + " vs " + scorer::format_hash(*hash) + ")");
        hash = r.config_hash;
        by_mode[r.mode].push_back(std::move(r));
    }
    std::vector<ModeSummary> out;
    for (auto& [mode, reports] : by_mode) {
        ModeSummary s;
        s.mode = mode;
        s.runs = reports.size();
        auto stat = [&](auto pick, double& mean, double& sd) {
            double m = 0;
            for (const auto& r : reports) m += pick(r);
            m /= static_cast<double>(reports.size());
            double v = 0;
            for (const auto& r : reports) v += (pick(r) - m) * (pick(r) - m);
            mean = m;
            sd = std::sqrt(v / static_cast<double>(reports.size()));
        };
        stat([](const metrics::ScoreReport& r) { return r.ad_score; }, s.ad_mean, s.ad_std);
        stat([](const metrics::ScoreReport& r) { return r.pa_score; }, s.pa_mean, s.pa_std);
        stat([](const metrics::ScoreReport& r) { return r.ra_score; }, s.ra_mean, s.ra_std);
        out.push_back(std::move(s));
    }
    return out;
}

inline std::string summary_table(const std::vector<ModeSummary>& summaries) {
    std::ostringstream os;
    os << std::left << std::setw(16) << "Mode" << std::setw(6) << "Runs" << std::setw(19) << "AD-Score"
       << std::setw(19) << "PA-Score" << std::setw(19) << "RA-Score" << "\n";
    os << std::fixed << std::setprecision(3);
    for (const auto& s : summaries) {
        auto cell = [](double m, double sd) {
            std::ostringstream c;
            c << std::fixed << std::setprecision(3) << m << " \xC2\xB1 " << sd;
            return c.str();
        };
        os << std::left << std::setw(16) << s.mode << std::setw(6) << s.runs << std::setw(19)
           << cell(s.ad_mean, s.ad_std) << std::setw(19) << cell(s.pa_mean, s.pa_std) << std::setw(19)
           << cell(s.ra_mean, s.ra_std) << "\n";
    }
    return os.str();
}

inline std::string summary_csv(const std::vector<ModeSummary>& summaries) {
    std::ostringstream os;
    os << "mode,runs,ad_mean,ad_std,pa_mean,pa_std,ra_mean,ra_std\n";
    os.precision(17);
    for (const auto& s : summaries)
        os << s.mode << "," << s.runs << "," << s.ad_mean << "," << s.ad_std << "," << s.pa_mean << "," << s.pa_std
           << "," << s.ra_mean << "," << s.ra_std << "\n";
    return os.str();
}

inline void stage_report(const std::vector<std::string>& run_dirs, std::ostream& out,
                         const std::string& csv_path = "") {
    auto summaries = summarize_runs(run_dirs);
    out << summary_table(summaries);
    if (!csv_path.empty()) {
        detail::write_file(csv_path, summary_csv(summaries));
        out << "summary csv -> " << csv_path << "\n";
    }
}

}  // namespace redpanda::runner
