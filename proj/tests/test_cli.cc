#include "lgsim/cli.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace lgsim::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("lgsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_config(const json& j, const std::string& name = "config.json") {
        const fs::path p = dir_ / name;
        std::ofstream(p) << j.dump(2);
        return p;
    }

    static json small_lg() {
        return {{"seed", 11},
                {"shots_per_arm", 200},
                {"wait_grid_us", {5, 100, 400}},
                {"statistics", {{"bootstrap_resamples", 500}, {"mc_resamples", 500}}}};
    }

    fs::path dir_;
};

TEST_F(CliTest, LgSweepWritesAllOutputs) {
    const auto cfg = write_config(small_lg());
    const auto out = dir_ / "run";
    const auto r = run_cli({"lg-sweep", "--config", cfg.string(), "--out-dir", out.string()});
    ASSERT_EQ(r.code, kOk) << r.err;
    const std::string summary = slurp(out / "summary.csv");
    EXPECT_EQ(summary.substr(0, summary.find('\n')),
              "wait_us,K,sigma_bootstrap,sigma_mc,C,W,significance,K_theory_low,K_theory_high");
    EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 4);
    const std::string records = slurp(out / "records.csv");
    EXPECT_EQ(records.substr(0, records.find('\n')), "protocol_id,arm,wait_us,outcome,shot_index");
    EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 1 + 3 * 3 * 200);
    const json manifest = json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(manifest["version"], kVersion);
    EXPECT_EQ(manifest["seed"], 11);
    ASSERT_EQ(manifest["points"].size(), 3u);
    const json& p0 = manifest["points"][0];
    for (const char* key : {"K", "sigma_bootstrap", "sigma_mc", "C", "W", "significance", "K_theory_low",
                            "K_theory_high", "arms"}) {
        EXPECT_TRUE(p0.contains(key)) << key;
    }
    EXPECT_TRUE(p0["arms"]["without_q2"].contains("p_d1_clopper_pearson_1sigma"));
    EXPECT_EQ(r.out, summary);
}

TEST_F(CliTest, ReplayIsByteIdenticalAndThreadIndependent) {
    const auto cfg = write_config(small_lg());
    const auto a = dir_ / "a";
    const auto b = dir_ / "b";
    ASSERT_EQ(run_cli({"lg-sweep", "--config", cfg.string(), "--out-dir", a.string(), "--threads", "1"}).code, kOk);
    ASSERT_EQ(run_cli({"lg-sweep", "--config", cfg.string(), "--out-dir", b.string(), "--threads", "5"}).code, kOk);
    for (const char* f : {"records.csv", "summary.csv", "manifest.json"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
}

TEST_F(CliTest, VerifyAcceptsFreshRunAndRejectsTampering) {
    const auto cfg = write_config(small_lg());
    const auto out = dir_ / "run";
    ASSERT_EQ(run_cli({"lg-sweep", "--config", cfg.string(), "--out-dir", out.string()}).code, kOk);
    const auto ok = run_cli({"verify", "--out-dir", out.string()});
    EXPECT_EQ(ok.code, kOk) << ok.err;

    std::string summary = slurp(out / "summary.csv");
    summary[summary.find('\n') + 1] = '6';
    std::ofstream(out / "summary.csv", std::ios::trunc) << summary;
    const auto bad = run_cli({"verify", "--out-dir", out.string()});
    EXPECT_EQ(bad.code, kInternalError);
    EXPECT_NE(bad.err.find("summary.csv"), std::string::npos);
}

TEST_F(CliTest, VerifyDetectsEditedRecords) {
    const auto cfg = write_config(small_lg());
    const auto out = dir_ / "run";
    ASSERT_EQ(run_cli({"lg-sweep", "--config", cfg.string(), "--out-dir", out.string()}).code, kOk);
    std::string records = slurp(out / "records.csv");
    const auto pos = records.find(",D2,");
    ASSERT_NE(pos, std::string::npos);
    records.replace(pos, 4, ",D1,");
    std::ofstream(out / "records.csv", std::ios::trunc) << records;
    EXPECT_EQ(run_cli({"verify", "--out-dir", out.string()}).code, kInternalError);
}

TEST_F(CliTest, VerifyMissingDirectoryIsIoError) {
    EXPECT_EQ(run_cli({"verify", "--out-dir", (dir_ / "nothing").string()}).code, kIoError);
}

TEST_F(CliTest, MissingSeedIsConfigErrorWithoutOutputs) {
    json j = small_lg();
    j.erase("seed");
    const auto cfg = write_config(j);
    const auto out = dir_ / "run";
    const auto r = run_cli({"lg-sweep", "--config", cfg.string(), "--out-dir", out.string()});
    EXPECT_EQ(r.code, kConfigError);
    EXPECT_NE(r.err.find("seed"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(out));
}

TEST_F(CliTest, SeedOverrideReplacesMissingSeed) {
    json j = small_lg();
    j.erase("seed");
    const auto cfg = write_config(j);
    const auto out = dir_ / "run";
    ASSERT_EQ(run_cli({"lg-sweep", "--config", cfg.string(), "--out-dir", out.string(), "--seed", "77"}).code, kOk);
    EXPECT_EQ(json::parse(slurp(out / "manifest.json"))["seed"], 77);
}

TEST_F(CliTest, ShotsOverride) {
    const auto cfg = write_config(small_lg());
    const auto out = dir_ / "run";
    ASSERT_EQ(run_cli({"lg-sweep", "--config", cfg.string(), "--out-dir", out.string(), "--shots", "50"}).code, kOk);
    const std::string records = slurp(out / "records.csv");
    EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 1 + 3 * 3 * 50);
}

TEST_F(CliTest, ConfigErrorsNameTheKey) {
    struct Case {
        std::string pointer;
        json value;
        std::string key;
    };
    const std::vector<Case> cases{
        {"/colour", 1, "colour"},
        {"/ramsey/coherence/tau_us", -1, "ramsey.coherence.tau_us"},
        {"/ramsey/coherence/shape", "lorentzian", "ramsey.coherence.shape"},
        {"/ramsey/pulse_theta", "tau/2", "ramsey.pulse_theta"},
        {"/imperfections/readout_error", 0.7, "imperfections.readout_error"},
        {"/imperfections/t1_us", "long", "imperfections.t1_us"},
        {"/statistics/bootstrap_resamples", 10, "statistics.bootstrap_resamples"},
        {"/theory_band/tau_low_us", 500, "theory_band.tau_low_us"},
        {"/wait_grid_us", json::array({5, 5}), "wait_grid_us"},
        {"/wait_grid_us", json::array(), "wait_grid_us"},
        {"/shots_per_arm", -3, "shots_per_arm"},
        {"/seed", "abc", "seed"},
        {"/protocol", "dichotomic", "protocol"},
    };
    for (const auto& c : cases) {
        json j = small_lg();
        j[json::json_pointer(c.pointer)] = c.value;
        const auto cfg = write_config(j);
        const auto r = run_cli({"lg-sweep", "--config", cfg.string(), "--out-dir", (dir_ / "run").string()});
        EXPECT_EQ(r.code, kConfigError) << c.pointer;
        EXPECT_NE(r.err.find(c.key), std::string::npos) << c.pointer << ": " << r.err;
        EXPECT_FALSE(fs::exists(dir_ / "run")) << c.pointer;
    }
}

TEST_F(CliTest, MalformedJsonIsConfigError) {
    const fs::path p = dir_ / "broken.json";
    std::ofstream(p) << "{\"seed\": 1,";
    EXPECT_EQ(run_cli({"lg-sweep", "--config", p.string(), "--out-dir", (dir_ / "run").string()}).code, kConfigError);
}

TEST_F(CliTest, UnreadableConfigIsIoError) {
    const auto r = run_cli({"lg-sweep", "--config", (dir_ / "absent.json").string(), "--out-dir", dir_.string()});
    EXPECT_EQ(r.code, kIoError);
}

TEST_F(CliTest, UnwritableOutputIsIoError) {
    const auto cfg = write_config(small_lg());
    const fs::path blocker = dir_ / "file";
    std::ofstream(blocker) << "x";
    const auto r = run_cli({"lg-sweep", "--config", cfg.string(), "--out-dir", (blocker / "sub").string()});
    EXPECT_EQ(r.code, kIoError) << r.err;
}

TEST_F(CliTest, FlagErrors) {
    EXPECT_EQ(run_cli({}).code, kConfigError);
    EXPECT_EQ(run_cli({"frobnicate"}).code, kConfigError);
    EXPECT_EQ(run_cli({"lg-sweep", "--out-dir", "x"}).code, kConfigError);
    EXPECT_EQ(run_cli({"lg-sweep", "--config", "c", "--out-dir", "x", "--shots", "many"}).code, kConfigError);
    EXPECT_EQ(run_cli({"--help"}).code, kOk);
    EXPECT_EQ(run_cli({"--version"}).code, kOk);
}

TEST_F(CliTest, DichotomicSummaryHasCorrelators) {
    const json j = {{"seed", 3}, {"shots_per_arm", 300}, {"wait_grid_us", {5}},
                    {"statistics", {{"bootstrap_resamples", 500}, {"mc_resamples", 500}}}};
    const auto cfg = write_config(j);
    const auto out = dir_ / "run";
    const auto r = run_cli({"dichotomic", "--config", cfg.string(), "--out-dir", out.string()});
    ASSERT_EQ(r.code, kOk) << r.err;
    const std::string summary = slurp(out / "summary.csv");
    EXPECT_EQ(summary.substr(0, summary.find('\n')),
              "wait_us,Q2Q1,Q3Q2,Q3Q1,K,sigma_bootstrap,sigma_mc,significance,K_theory_low,K_theory_high");
    EXPECT_EQ(run_cli({"verify", "--out-dir", out.string()}).code, kOk);
    const json manifest = json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(manifest["command"], "dichotomic");
    EXPECT_TRUE(manifest["points"][0]["arms"].contains("early_readout"));
}

TEST_F(CliTest, DichotomicRejectsOtherPulseArea) {
    const json j = {{"seed", 3}, {"wait_grid_us", {5}}, {"ramsey", {{"pulse_theta", "pi/2"}}}};
    const auto cfg = write_config(j);
    const auto r = run_cli({"dichotomic", "--config", cfg.string(), "--out-dir", (dir_ / "run").string()});
    EXPECT_EQ(r.code, kConfigError);
    EXPECT_NE(r.err.find("ramsey.pulse_theta"), std::string::npos);
}

TEST_F(CliTest, ResolvedConfigRoundTrips) {
    json j = small_lg();
    j["imperfections"] = {{"t1_us", 900}, {"prep_error", 0.02}};
    j["ramsey"] = {{"pulse_theta", "pi/2"}, {"phase_offset", 0.25}, {"coherence", {{"shape", "gaussian"}}}};
    const RunConfig cfg = parse_run_config(j, ProtocolKind::LeggettGarg);
    const json resolved = to_json(cfg);
    EXPECT_EQ(to_json(parse_run_config(resolved, ProtocolKind::LeggettGarg)), resolved);
    EXPECT_EQ(resolved["imperfections"]["t1_us"], 900.0);
    EXPECT_EQ(resolved["ramsey"]["coherence"]["shape"], "gaussian");
    EXPECT_EQ(resolved["statistics"]["seed"], 11);
    EXPECT_TRUE(to_json(parse_run_config(small_lg(), ProtocolKind::LeggettGarg))["imperfections"]["t1_us"].is_null());
}

TEST_F(CliTest, ParseAppliesDefaults) {
    const RunConfig cfg = parse_run_config({{"seed", 1}, {"wait_grid_us", {5}}}, ProtocolKind::LeggettGarg);
    EXPECT_EQ(cfg.campaign.shots_per_arm, 1000u);
    EXPECT_EQ(cfg.campaign.ramsey.coherence.tau_us, 130.0);
    EXPECT_EQ(cfg.campaign.imperfections.prep_error, 0.01);
    EXPECT_EQ(cfg.bootstrap.n_resamples, 10000u);
    EXPECT_EQ(cfg.band_tau_low_us, 75.0);
    EXPECT_EQ(cfg.band_tau_high_us, 200.0);
    try {
        parse_run_config({{"seed", 1}, {"wait_grid_us", {5}}, {"ramsey", {{"coherence", {{"tau", 1}}}}}},
                         ProtocolKind::LeggettGarg);
        FAIL() << "expected a ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "ramsey.coherence.tau");
    }
}

TEST_F(CliTest, BombtestTable) {
    const auto r = run_cli({"bombtest", "--shots", "20000", "--zeno", "5"});
    ASSERT_EQ(r.code, kOk) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "quantity,closed_form,monte_carlo,mc_stderr,shots");
    EXPECT_NE(r.out.find("power_single,0.25,"), std::string::npos);
    EXPECT_NE(r.out.find("rescue_repeated,0.333333333,"), std::string::npos);
    EXPECT_NE(r.out.find("zeno_success,0.60542905,"), std::string::npos);
    EXPECT_EQ(run_cli({"bombtest", "--shots", "20000", "--threads", "3"}).out,
              run_cli({"bombtest", "--shots", "20000", "--threads", "1"}).out);
}

TEST_F(CliTest, BombtestRejectsOutOfRangeFlags) {
    EXPECT_EQ(run_cli({"bombtest", "--split", "1.5"}).code, kConfigError);
    EXPECT_EQ(run_cli({"bombtest", "--contrast", "-0.1"}).code, kConfigError);
    EXPECT_EQ(run_cli({"bombtest", "--zeno", "0"}).code, kConfigError);
    EXPECT_EQ(run_cli({"bombtest", "--rounds", "0"}).code, kConfigError);
    EXPECT_EQ(run_cli({"bombtest", "--shots", "0"}).code, kConfigError);
}

}  // namespace
}  // namespace lgsim::cli
