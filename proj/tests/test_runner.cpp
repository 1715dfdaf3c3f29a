#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "redpanda/runner.hpp"

using namespace redpanda;
using namespace redpanda::runner;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    auto p = fs::temp_directory_path() / (std::string("rp_runner_") + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// 2 domains x 4 classes toy configuration, small enough for seconds-long runs.
std::string toy_config(const fs::path& out) {
    std::ostringstream os;
    os << "[dataset]\n"
       << "domains=2\nclasses=4\nsizes=2\njitters=2\nimage_size=16\nper_cell=8\n"
       << "anomaly_classes=3\npseudo_pairs=0:0,1:1\ntrain_fraction=0.85\nseed=5\n"
       << "[train]\n"
       << "epochs=2\nembed_dim=8\ndomains_per_batch=2\nsamples_per_domain=4\n"
       << "[score]\nk=1\n"
       << "[run]\noutput=" << out.string() << "\nseeds=0,1\n";
    return os.str();
}

ExperimentConfig load_text(const std::string& text) {
    std::istringstream is(text);
    return ExperimentConfig::from_ini(parse_ini(is));
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("ini parsing: sections, comments, whitespace, errors") {
    std::istringstream is("# top comment\n[alpha]\nkey = value \nnum=3\n\n; other\n[beta]\nflag=1\n");
    auto ini = parse_ini(is);
    CHECK(ini.at("alpha").at("key") == "value");
    CHECK(ini.at("alpha").at("num") == "3");
    CHECK(ini.at("beta").at("flag") == "1");

    std::istringstream bad("[x]\nno_equals_here\n");
    CHECK_THROWS_AS(parse_ini(bad), std::runtime_error);
    std::istringstream bad2("[unclosed\n");
    CHECK_THROWS_AS(parse_ini(bad2), std::runtime_error);
}

TEST_CASE("config: defaults match the experiment setup; bad values are named") {
    auto cfg = load_text("[run]\noutput=/tmp/x\n");
    CHECK(cfg.dataset.attributes.nuisance_domains == 4);
    CHECK(cfg.dataset.attributes.relevant_classes == 10);
    CHECK(cfg.dataset.per_cell == 60);
    CHECK(cfg.dataset.image_size == 64);
    CHECK(cfg.training.tau == 0.1);
    CHECK(cfg.training.rec_weight == 0.3);
    CHECK(cfg.training.epochs == 200);
    CHECK(cfg.training.domains_per_batch == 4);
    CHECK(cfg.training.samples_per_domain == 32);
    CHECK(cfg.training.lr_encoder == 1e-4);
    CHECK(cfg.training.lr_generator == 3e-4);
    CHECK(cfg.training.embed_dim == 64);
    CHECK(cfg.k == 1);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1, 2});

    CHECK_THROWS_WITH_AS(load_text("[train]\ntau=banana\n"), doctest::Contains("tau"), std::runtime_error);
    CHECK_THROWS_AS(load_text("[run]\nseeds=\n"), std::runtime_error);
}

TEST_CASE("config: environment variable re-roots the output directory") {
    setenv("REDPANDA_OUTPUT_ROOT", "/tmp/rp_root", 1);
    auto cfg = load_text("[run]\noutput=exp1\n");
    CHECK(cfg.output_dir == "/tmp/rp_root/exp1");
    unsetenv("REDPANDA_OUTPUT_ROOT");
    auto cfg2 = load_text("[run]\noutput=exp1\n");
    CHECK(cfg2.output_dir == "exp1");
}

TEST_CASE("config: overlapping anomaly and pseudo classes rejected before rendering") {
    auto cfg = load_text("[dataset]\nanomaly_classes=0\npseudo_pairs=0:0\n[run]\noutput=/tmp/never\n");
    std::ostringstream out;
    CHECK_THROWS_AS(stage_generate(cfg, out), std::invalid_argument);
    CHECK(!fs::exists("/tmp/never"));
}

TEST_CASE("pipeline: generate / train / score / evaluate with resumability and hash gates") {
    auto dir = temp_dir("pipeline");
    auto cfg = load_text(toy_config(dir));

    // generate, twice: second call is a byte-wise no-op
    std::ostringstream out1;
    auto g1 = stage_generate(cfg, out1);
    CHECK(!g1.skipped);
    CHECK(out1.str().find("train_normal") != std::string::npos);
    const auto manifest_bytes = slurp(fs::path(cfg.dataset_dir()) / "manifest.csv");
    std::ostringstream out2;
    auto g2 = stage_generate(cfg, out2);
    CHECK(g2.skipped);
    CHECK(slurp(fs::path(cfg.dataset_dir()) / "manifest.csv") == manifest_bytes);

    // train (raw encoder is instant), then score and evaluate
    std::ostringstream tout;
    auto t1 = stage_train(cfg, model::TrainMode::raw_encoder, 0, tout);
    CHECK(!t1.skipped);
    const fs::path rdir = cfg.run_dir(model::TrainMode::raw_encoder, 0);
    CHECK(fs::exists(rdir / "checkpoint.rpc"));
    CHECK(fs::exists(rdir / "loss.csv"));
    const auto ckpt_bytes = slurp(rdir / "checkpoint.rpc");
    std::ostringstream tout2;
    auto t2 = stage_train(cfg, model::TrainMode::raw_encoder, 0, tout2);
    CHECK(t2.skipped);
    CHECK(slurp(rdir / "checkpoint.rpc") == ckpt_bytes);

    std::ostringstream sout;
    auto s1 = stage_score(cfg, model::TrainMode::raw_encoder, 0, sout);
    CHECK(!s1.skipped);
    CHECK(fs::exists(rdir / "scores.csv"));
    auto s2 = stage_score(cfg, model::TrainMode::raw_encoder, 0, sout);
    CHECK(s2.skipped);

    std::ostringstream eout;
    auto e1 = stage_evaluate(cfg, model::TrainMode::raw_encoder, 0, eout);
    CHECK(!e1.skipped);
    CHECK(fs::exists(rdir / "report.json"));
    CHECK(fs::exists(rdir / "report.txt"));
    CHECK(eout.str().find("AD-Score") != std::string::npos);
    auto e2 = stage_evaluate(cfg, model::TrainMode::raw_encoder, 0, eout);
    CHECK(e2.skipped);

    // a parsable report with all three metrics
    auto report = metrics::report_from_json(slurp(rdir / "report.json"));
    CHECK(report.ad_score >= 0.0);
    CHECK(report.ad_score <= 1.0);
    CHECK(report.pa_score >= 0.0);
    CHECK(report.ra_score <= 1.0);
    CHECK(report.mode == "raw_encoder");

    // tampered hash: evaluate refuses the file
    {
        auto scores = scorer::read_scores_file((rdir / "scores.csv").string());
        scores.config_hash ^= 0xFF;
        scorer::write_scores_file((rdir / "scores.csv").string(), scores);
        fs::remove(rdir / "report.json");
        std::ostringstream dummy;
        CHECK_THROWS_WITH_AS(stage_evaluate(cfg, model::TrainMode::raw_encoder, 0, dummy),
                             doctest::Contains("does not match"), std::runtime_error);
    }

    // missing prerequisite errors name the expected path
    std::ostringstream dummy;
    CHECK_THROWS_WITH_AS(stage_score(cfg, model::TrainMode::redpanda, 7, dummy), doctest::Contains("checkpoint"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(stage_evaluate(cfg, model::TrainMode::redpanda, 7, dummy), doctest::Contains("scores"),
                         std::runtime_error);

    fs::remove_all(dir);
}

TEST_CASE("pipeline: trained modes produce loss curves and load back") {
    auto dir = temp_dir("train_modes");
    auto cfg = load_text(toy_config(dir));
    std::ostringstream out;
    stage_generate(cfg, out);
    stage_train(cfg, model::TrainMode::simclr_global, 1, out);
    const fs::path rdir = cfg.run_dir(model::TrainMode::simclr_global, 1);
    auto loss_text = slurp(rdir / "loss.csv");
    CHECK(loss_text.find("epoch,l_con,l_aug,l_rec,total") != std::string::npos);
    // two epochs logged
    CHECK(loss_text.find("\n1,") != std::string::npos);
    CHECK(loss_text.find("\n2,") != std::string::npos);
    stage_score(cfg, model::TrainMode::simclr_global, 1, out);
    stage_evaluate(cfg, model::TrainMode::simclr_global, 1, out);
    CHECK(fs::exists(rdir / "report.json"));
    fs::remove_all(dir);
}

TEST_CASE("report aggregation: mean/sigma oracle, sigma=0 for one seed, table format") {
    auto dir = temp_dir("report");
    // three fabricated runs of one mode + one of another
    auto write_report = [&](const std::string& sub, double ad, double pa, double ra, const char* mode,
                            std::uint64_t seed) {
        metrics::ScoreReport r;
        r.ad_score = ad;
        r.pa_score = pa;
        r.ra_score = ra;
        r.counts = {{"test_familiar", 10}, {"test_pseudo", 5}, {"test_anomaly", 5}};
        r.config_hash = 0x1234;
        r.seed = seed;
        r.mode = mode;
        fs::create_directories(dir / sub);
        std::ofstream os(dir / sub / "report.json");
        os << metrics::report_json(r);
    };
    write_report("redpanda_s0", 0.95, 0.52, 0.94, "redpanda", 0);
    write_report("redpanda_s1", 0.96, 0.55, 0.95, "redpanda", 1);
    write_report("redpanda_s2", 0.94, 0.49, 0.96, "redpanda", 2);
    write_report("raw_s0", 0.70, 0.60, 0.55, "raw_encoder", 0);

    auto summaries = summarize_runs({(dir / "redpanda_s0").string(), (dir / "redpanda_s1").string(),
                                     (dir / "redpanda_s2").string(), (dir / "raw_s0").string()});
    REQUIRE(summaries.size() == 2);
    const auto& rp = summaries[0].mode == "redpanda" ? summaries[0] : summaries[1];
    const auto& raw = summaries[0].mode == "redpanda" ? summaries[1] : summaries[0];

    // spreadsheet-style recomputation: mean and population sigma
    const double mean = (0.95 + 0.96 + 0.94) / 3.0;
    double var = 0;
    for (double v : {0.95, 0.96, 0.94}) var += (v - mean) * (v - mean);
    const double sigma = std::sqrt(var / 3.0);
    CHECK(rp.ad_mean == doctest::Approx(mean).epsilon(1e-15));
    CHECK(rp.ad_std == doctest::Approx(sigma).epsilon(1e-12));
    CHECK(rp.runs == 3);

    // single seed: sigma exactly zero
    CHECK(raw.runs == 1);
    CHECK(raw.ad_std == 0.0);
    CHECK(raw.pa_std == 0.0);

    // three-decimal formatting with a plus-minus separator
    auto table = summary_table(summaries);
    CHECK(table.find("0.950 \xC2\xB1 0.008") != std::string::npos);
    CHECK(table.find("0.700 \xC2\xB1 0.000") != std::string::npos);

    // csv output
    std::ostringstream out;
    stage_report({(dir / "redpanda_s0").string(), (dir / "raw_s0").string()}, out, (dir / "summary.csv").string());
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK(slurp(dir / "summary.csv").find("mode,runs,ad_mean") != std::string::npos);

    // incompatible dataset hashes are rejected
    write_report("alien_s0", 0.5, 0.5, 0.5, "redpanda", 0);
    {
        auto r = metrics::report_from_json(slurp(dir / "alien_s0" / "report.json"));
        r.config_hash = 0x9999;
        std::ofstream os(dir / "alien_s0" / "report.json");
        os << metrics::report_json(r);
    }
    CHECK_THROWS_WITH_AS(summarize_runs({(dir / "redpanda_s0").string(), (dir / "alien_s0").string()}),
                         doctest::Contains("different dataset"), std::runtime_error);

    fs::remove_all(dir);
}

TEST_CASE("generate refuses to run for external-manifest configs") {
    auto cfg = load_text("[dataset]\nmanifest=/somewhere/external\n[run]\noutput=/tmp/never2\n");
    std::ostringstream out;
    CHECK_THROWS_WITH_AS(stage_generate(cfg, out), doctest::Contains("external"), std::runtime_error);
    CHECK(cfg.dataset_dir() == "/somewhere/external");
}
