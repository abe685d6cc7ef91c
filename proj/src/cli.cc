#include "lgsim/cli.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "lgsim/bombtest_metrics.h"
#include "lgsim/protocols.h"

namespace lgsim::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string fmt9(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// Reads one JSON object, tracking which keys were consumed so that leftovers
// can be reported.
class Section {
public:
    Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(display(), "expected an object");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    double number(const std::string& key, std::optional<double> fallback) {
        const json* v = find(key);
        if (!v) return require_default(key, fallback);
        if (!v->is_number()) throw ConfigError(child(key), "expected a number");
        return v->get<double>();
    }

    std::uint64_t count(const std::string& key, std::optional<std::uint64_t> fallback) {
        const json* v = find(key);
        if (!v) return require_default(key, fallback);
        if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
            throw ConfigError(child(key), "expected a non-negative integer");
        }
        return v->get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw ConfigError(child(key), "expected true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ConfigError(child(key), "expected a string");
        return v->get<std::string>();
    }

    Section object(const std::string& key) {
        static const json kEmpty = json::object();
        const json* v = find(key);
        return Section(v ? *v : kEmpty, child(key));
    }

    /// Rejects keys that no getter asked for.
    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (!seen_.count(key)) throw ConfigError(child(key), "unknown key");
        }
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    template <typename T>
    T require_default(const std::string& key, std::optional<T> fallback) const {
        if (!fallback) throw ConfigError(child(key), "required key is missing");
        return *fallback;
    }
    std::string display() const { return path_.empty() ? "<root>" : path_; }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

// Accepts a number of radians or the string "pi/N".
double parse_angle(const json& v, const std::string& key) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "pi") return std::numbers::pi;
        if (s.rfind("pi/", 0) == 0) {
            try {
                std::size_t used = 0;
                const double d = std::stod(s.substr(3), &used);
                if (used == s.size() - 3 && d > 0.0) return std::numbers::pi / d;
            } catch (const std::exception&) {
            }
        }
    }
    throw ConfigError(key, "expected radians or a string of the form \"pi/N\"");
}

template <typename Fn>
void as_config_error(const std::string& key, Fn&& fn) {
    try {
        fn();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
    }
}

json counts_json(const ArmCounts& c) {
    json j = {{"d1", c.d1}, {"d2", c.d2}, {"removed", c.removed}};
    if (c.post_selected() > 0) {
        const auto [lo, hi] = clopper_pearson(c.d1, c.post_selected());
        j["p_d1_clopper_pearson_1sigma"] = {lo, hi};
    }
    return j;
}

json arms_json(const CampaignConfig& campaign, const ArmTally& tally) {
    json j = json::object();
    for (Arm a : campaign.arms()) j[std::string(to_string(a))] = counts_json(counts(tally, a));
    return j;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out.flush()) throw IoError("write failed for " + p.string());
}

json read_json_file(const fs::path& p) {
    const std::string text = slurp(p);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<file>", std::string("malformed JSON in ") + p.string() + ": " + e.what());
    }
}

int sweep(ProtocolKind kind, const std::string& config_path, const std::string& out_dir, const Overrides& ov,
          unsigned threads, std::ostream& out) {
    const RunConfig cfg = parse_run_config(read_json_file(config_path), kind, ov);
    const auto records = sample_campaign(cfg.campaign, threads);
    const RenderedOutputs rendered = render_outputs(cfg, records);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    spit(fs::path(out_dir) / "records.csv", rendered.records_csv);
    spit(fs::path(out_dir) / "summary.csv", rendered.summary_csv);
    spit(fs::path(out_dir) / "manifest.json", rendered.manifest_json);
    out << rendered.summary_csv;
    return kOk;
}

int verify(const std::string& dir, unsigned threads, std::ostream& out, std::ostream& err) {
    const fs::path root(dir);
    const json manifest = read_json_file(root / "manifest.json");
    if (!manifest.contains("config") || !manifest["config"].contains("protocol")) {
        throw ConfigError("manifest.config", "missing resolved config");
    }
    const ProtocolKind kind = protocol_from_string(manifest["config"]["protocol"].get<std::string>());
    const RunConfig cfg = parse_run_config(manifest["config"], kind);

    const std::string records_text = slurp(root / "records.csv");
    std::istringstream rs(records_text);
    std::vector<ShotRecord> records;
    try {
        records = read_records(rs);
    } catch (const std::runtime_error& e) {
        throw IoError((root / "records.csv").string() + ": " + e.what());
    }
    const RenderedOutputs recomputed = render_outputs(cfg, records);

    bool ok = true;
    auto check = [&](const std::string& what, const std::string& expected, const std::string& actual) {
        if (expected != actual) {
            err << "verify: " << what << " does not match\n";
            ok = false;
        } else {
            out << "verify: " << what << " ok\n";
        }
    };
    check("summary.csv recomputed from records.csv", recomputed.summary_csv, slurp(root / "summary.csv"));
    check("manifest.json recomputed from records.csv", recomputed.manifest_json, slurp(root / "manifest.json"));
    std::ostringstream replay;
    const auto replayed = sample_campaign(cfg.campaign, threads);
    write_records(replay, replayed);
    check("records.csv replayed from config and seed", replay.str(), records_text);
    return ok ? kOk : kInternalError;
}

struct BombFlags {
    double split = 0.5;
    double contrast = 1.0;
    std::uint64_t rounds = 1000;
    std::uint64_t zeno = 5;
    std::uint64_t shots = 100000;
    std::uint64_t seed = 1;
};

// Fraction of `shots` independent trials for which `hit(rng)` is true; trial
// i always draws from stream (key, i), whatever the thread layout.
template <typename Hit>
double mc_fraction(std::uint64_t key, std::uint64_t shots, unsigned threads, Hit hit) {
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::uint64_t>(shots, 1024))));
    std::vector<std::uint64_t> hits(workers, 0);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
                for (std::uint64_t i = shots * t / workers; i < shots * (t + 1) / workers; ++i) {
                    CounterRng rng(StreamSeed{key, i});
                    if (hit(rng)) ++hits[t];
                }
            });
        }
    }
    std::uint64_t total = 0;
    for (auto h : hits) total += h;
    return static_cast<double>(total) / static_cast<double>(shots);
}

int bombtest(const BombFlags& f, unsigned threads, std::ostream& out) {
    if (!(f.split > 0.0 && f.split < 1.0)) throw ConfigError("--split", "must lie in (0, 1)");
    if (!(f.contrast >= 0.0 && f.contrast <= 1.0)) throw ConfigError("--contrast", "must lie in [0, 1]");
    if (f.rounds < 1) throw ConfigError("--rounds", "must be at least 1");
    if (f.zeno < 1) throw ConfigError("--zeno", "must be at least 1");
    if (f.shots < 1) throw ConfigError("--shots", "must be at least 1");

    const TestFigures fig = single_trial_figures(f.split, f.contrast);
    const BombTestConfig live{true, f.split, f.contrast};
    const BombTestConfig dud{false, f.split, f.contrast};
    const std::uint64_t key = mix64(f.seed);

    struct Row {
        const char* name;
        double closed;
        double mc;
    };
    auto single = [&](std::uint64_t tag, BombOutcome want) {
        return mc_fraction(key ^ tag, f.shots, threads,
                           [&](CounterRng& rng) { return run_mz_bomb_test(live, rng) == want; });
    };
    auto repeated = [&](std::uint64_t tag, RepeatedOutcome want) {
        return mc_fraction(key ^ tag, f.shots, threads,
                           [&](CounterRng& rng) { return run_repeated_bomb_test(live, f.rounds, rng) == want; });
    };
    const std::vector<Row> rows{
        {"power_single", fig.power, single(0x11, BombOutcome::D1)},
        {"explode_single", fig.explode_prob, single(0x11, BombOutcome::Exploded)},
        {"inconclusive_single", fig.inconclusive_prob, single(0x11, BombOutcome::D2)},
        {"alpha_dud", fig.alpha,
         mc_fraction(key ^ 0x22, f.shots, threads,
                     [&](CounterRng& rng) { return run_mz_bomb_test(dud, rng) == BombOutcome::D1; })},
        {"rescue_repeated", repeated_trial_power(f.split), repeated(0x33, RepeatedOutcome::Rescued)},
        {"explode_repeated", 1.0 / (2.0 - f.split), repeated(0x33, RepeatedOutcome::Exploded)},
        {"zeno_success", zeno_success_probability(f.zeno),
         mc_fraction(key ^ 0x44, f.shots, threads, [&](CounterRng& rng) { return run_zeno_shot(f.zeno, rng); })},
    };
    out << "quantity,closed_form,monte_carlo,mc_stderr,shots\n";
    for (const auto& r : rows) {
        const double se = std::sqrt(r.closed * (1.0 - r.closed) / static_cast<double>(f.shots));
        out << r.name << ',' << fmt9(r.closed) << ',' << fmt9(r.mc) << ',' << fmt9(se) << ',' << f.shots << '\n';
    }
    return kOk;
}

}  // namespace

RunConfig parse_run_config(const json& doc, ProtocolKind protocol, const Overrides& overrides) {
    Section root(doc, "");
    RunConfig cfg;
    CampaignConfig& c = cfg.campaign;
    c.protocol = protocol;

    if (root.has("protocol")) {
        const std::string p = root.string("protocol", "");
        if (p != to_string(protocol)) {
            throw ConfigError("protocol", "config is for '" + p + "' but the command runs '" +
                                              std::string(to_string(protocol)) + "'");
        }
    } else {
        root.find("protocol");
    }

    c.seed = overrides.seed ? (root.find("seed"), *overrides.seed) : root.count("seed", std::nullopt);
    c.shots_per_arm = overrides.shots_per_arm ? (root.find("shots_per_arm"), *overrides.shots_per_arm)
                                              : root.count("shots_per_arm", 1000);
    if (c.shots_per_arm < 1) throw ConfigError("shots_per_arm", "must be at least 1");

    const json* grid = root.find("wait_grid_us");
    if (!grid) throw ConfigError("wait_grid_us", "required key is missing");
    if (!grid->is_array() || grid->empty()) throw ConfigError("wait_grid_us", "expected a non-empty array");
    for (const auto& v : *grid) {
        if (!v.is_number()) throw ConfigError("wait_grid_us", "expected numbers");
        c.wait_grid_us.push_back(v.get<double>());
    }
    as_config_error("wait_grid_us", [&] {
        for (std::size_t i = 0; i < c.wait_grid_us.size(); ++i) {
            if (!(c.wait_grid_us[i] >= 0.0) || !std::isfinite(c.wait_grid_us[i])) {
                throw std::invalid_argument("values must be finite and non-negative");
            }
            if (i > 0 && !(c.wait_grid_us[i] > c.wait_grid_us[i - 1])) {
                throw std::invalid_argument("values must be strictly increasing");
            }
        }
    });

    {
        Section r = root.object("ramsey");
        const double default_theta =
            protocol == ProtocolKind::Dichotomic ? std::numbers::pi / 3.0 : std::numbers::pi / 2.0;
        const json* theta = r.find("pulse_theta");
        c.ramsey.pulse_theta = theta ? parse_angle(*theta, r.child("pulse_theta")) : default_theta;
        if (!(c.ramsey.pulse_theta > 0.0 && c.ramsey.pulse_theta <= std::numbers::pi)) {
            throw ConfigError(r.child("pulse_theta"), "must lie in (0, pi]");
        }
        if (protocol == ProtocolKind::Dichotomic &&
            std::abs(c.ramsey.pulse_theta - std::numbers::pi / 3.0) > 1e-12) {
            throw ConfigError(r.child("pulse_theta"), "the dichotomic protocol requires pi/3");
        }
        c.ramsey.pulse_phi = r.number("pulse_phi", 0.0);
        c.ramsey.phase_offset = r.number("phase_offset", 0.0);
        c.calibrate_phase = r.boolean("calibrate_phase", true);
        Section coh = r.object("coherence");
        as_config_error(coh.child("shape"), [&] {
            c.ramsey.coherence.shape = coherence_shape_from_string(coh.string("shape", "exponential"));
        });
        c.ramsey.coherence.tau_us = coh.number("tau_us", 130.0);
        if (!(c.ramsey.coherence.tau_us > 0.0)) throw ConfigError(coh.child("tau_us"), "must be positive");
        coh.finish();
        r.finish();
    }
    {
        Section im = root.object("imperfections");
        c.imperfections.prep_error = im.number("prep_error", 0.01);
        c.imperfections.readout_error = im.number("readout_error", 0.01);
        for (const char* key : {"prep_error", "readout_error"}) {
            const double v = std::string(key) == "prep_error" ? c.imperfections.prep_error
                                                              : c.imperfections.readout_error;
            if (!(v >= 0.0 && v < 0.5)) throw ConfigError(im.child(key), "must lie in [0, 0.5)");
        }
        const json* t1 = im.find("t1_us");
        if (t1 && !t1->is_null()) {
            if (!t1->is_number() || !(t1->get<double>() > 0.0)) {
                throw ConfigError(im.child("t1_us"), "expected a positive number or null (no spin flips)");
            }
            c.imperfections.t1_us = t1->get<double>();
        } else {
            c.imperfections.t1_us = std::numeric_limits<double>::infinity();
        }
        im.finish();
    }
    {
        Section st = root.object("statistics");
        cfg.bootstrap.n_resamples = st.count("bootstrap_resamples", 10000);
        cfg.monte_carlo.n_resamples = st.count("mc_resamples", 10000);
        for (const char* key : {"bootstrap_resamples", "mc_resamples"}) {
            const auto v = std::string(key) == "mc_resamples" ? cfg.monte_carlo.n_resamples : cfg.bootstrap.n_resamples;
            if (v < 100) throw ConfigError(st.child(key), "must be at least 100");
        }
        const std::uint64_t stats_seed = st.count("seed", c.seed);
        cfg.bootstrap.seed = stats_seed;
        cfg.monte_carlo.seed = stats_seed;
        st.finish();
    }
    {
        Section tb = root.object("theory_band");
        cfg.band_tau_low_us = tb.number("tau_low_us", 75.0);
        cfg.band_tau_high_us = tb.number("tau_high_us", 200.0);
        if (!(cfg.band_tau_low_us > 0.0 && cfg.band_tau_low_us < cfg.band_tau_high_us)) {
            throw ConfigError(tb.child("tau_low_us"), "need 0 < tau_low_us < tau_high_us");
        }
        tb.finish();
    }
    root.finish();
    as_config_error("<campaign>", [&] { c.validate(); });
    return cfg;
}

json to_json(const RunConfig& cfg) {
    const CampaignConfig& c = cfg.campaign;
    json t1 = std::isinf(c.imperfections.t1_us) ? json(nullptr) : json(c.imperfections.t1_us);
    return {
        {"protocol", std::string(to_string(c.protocol))},
        {"seed", c.seed},
        {"shots_per_arm", c.shots_per_arm},
        {"wait_grid_us", c.wait_grid_us},
        {"ramsey",
         {{"pulse_theta", c.ramsey.pulse_theta},
          {"pulse_phi", c.ramsey.pulse_phi},
          {"phase_offset", c.ramsey.phase_offset},
          {"calibrate_phase", c.calibrate_phase},
          {"coherence",
           {{"shape", std::string(to_string(c.ramsey.coherence.shape))}, {"tau_us", c.ramsey.coherence.tau_us}}}}},
        {"imperfections",
         {{"prep_error", c.imperfections.prep_error}, {"readout_error", c.imperfections.readout_error}, {"t1_us", t1}}},
        {"statistics",
         {{"bootstrap_resamples", cfg.bootstrap.n_resamples},
          {"mc_resamples", cfg.monte_carlo.n_resamples},
          {"seed", cfg.bootstrap.seed}}},
        {"theory_band", {{"tau_low_us", cfg.band_tau_low_us}, {"tau_high_us", cfg.band_tau_high_us}}},
    };
}

RenderedOutputs render_outputs(const RunConfig& cfg, const std::vector<ShotRecord>& records) {
    const CampaignConfig& c = cfg.campaign;
    const auto groups = split_by_wait(records);
    if (groups.size() != c.wait_grid_us.size()) {
        throw std::logic_error("record set has " + std::to_string(groups.size()) + " wait points, config has " +
                               std::to_string(c.wait_grid_us.size()));
    }
    const auto band = c.protocol == ProtocolKind::LeggettGarg
                          ? theory_band(c.wait_grid_us, cfg.band_tau_low_us, cfg.band_tau_high_us,
                                        c.ramsey.coherence.shape)
                          : dichotomic_theory_band(c, cfg.band_tau_low_us, cfg.band_tau_high_us);

    RenderedOutputs outs;
    std::ostringstream rec;
    write_records(rec, records);
    outs.records_csv = rec.str();

    std::ostringstream sum;
    json points = json::array();
    if (c.protocol == ProtocolKind::LeggettGarg) {
        sum << "wait_us,K,sigma_bootstrap,sigma_mc,C,W,significance,K_theory_low,K_theory_high\n";
    } else {
        sum << "wait_us,Q2Q1,Q3Q2,Q3Q1,K,sigma_bootstrap,sigma_mc,significance,K_theory_low,K_theory_high\n";
    }
    for (std::size_t w = 0; w < groups.size(); ++w) {
        if (groups[w].front().wait_us != c.wait_grid_us[w]) {
            throw std::logic_error("record wait values do not match the configured grid");
        }
        json p = {{"wait_us", c.wait_grid_us[w]},
                  {"phase_adjust", point_config(c, w).phase_adjust},
                  {"K_theory_low", band[w].k_low},
                  {"K_theory_high", band[w].k_high}};
        if (c.protocol == ProtocolKind::LeggettGarg) {
            const auto s = summarize_lg_point(groups[w], w, cfg.bootstrap, cfg.monte_carlo);
            sum << fmt9(s.wait_us) << ',' << fmt9(s.k.value) << ',' << fmt9(s.sigma_bootstrap) << ','
                << fmt9(s.sigma_mc) << ',' << fmt9(s.contrast.estimate.value) << ',' << fmt9(s.witness) << ','
                << fmt9(s.significance) << ',' << fmt9(band[w].k_low) << ',' << fmt9(band[w].k_high) << '\n';
            p["K"] = s.k.value;
            p["sigma_bootstrap"] = s.sigma_bootstrap;
            p["sigma_mc"] = s.sigma_mc;
            p["C"] = s.contrast.estimate.value;
            p["C_clamped"] = s.contrast.clamped;
            p["W"] = s.witness;
            p["significance"] = s.significance;
            p["n_post_selected"] = s.k.n_shots_used;
            p["arms"] = arms_json(c, s.counts);
        } else {
            const auto s = summarize_dichotomic_point(groups[w], w, cfg.bootstrap, cfg.monte_carlo);
            sum << fmt9(s.wait_us) << ',' << fmt9(s.correlators.q2q1.value) << ','
                << fmt9(s.correlators.q3q2.value) << ',' << fmt9(s.correlators.q3q1.value) << ','
                << fmt9(s.k.value) << ',' << fmt9(s.sigma_bootstrap) << ',' << fmt9(s.sigma_mc) << ','
                << fmt9(s.significance) << ',' << fmt9(band[w].k_low) << ',' << fmt9(band[w].k_high) << '\n';
            p["Q2Q1"] = {s.correlators.q2q1.value, s.correlators.q2q1.sigma};
            p["Q3Q2"] = {s.correlators.q3q2.value, s.correlators.q3q2.sigma};
            p["Q3Q1"] = {s.correlators.q3q1.value, s.correlators.q3q1.sigma};
            p["K"] = s.k.value;
            p["sigma_bootstrap"] = s.sigma_bootstrap;
            p["sigma_mc"] = s.sigma_mc;
            p["significance"] = s.significance;
            p["n_post_selected"] = s.k.n_shots_used;
            p["arms"] = arms_json(c, s.counts);
        }
        points.push_back(std::move(p));
    }
    outs.summary_csv = sum.str();

    const json manifest = {
        {"artifact", "lgsim"},
        {"version", kVersion},
        {"command", c.protocol == ProtocolKind::LeggettGarg ? "lg-sweep" : "dichotomic"},
        {"seed", c.seed},
        {"config", to_json(cfg)},
        {"points", points},
    };
    outs.manifest_json = manifest.dump(2) + "\n";
    return outs;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Leggett-Garg / interaction-free measurement simulator", "lgsim"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::uint64_t shots = 0;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());

    auto add_sweep = [&](const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "campaign config (JSON)")->required();
        sub->add_option("--out-dir", out_dir, "directory for records.csv, summary.csv, manifest.json")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--shots", shots, "override shots_per_arm");
        sub->add_option("--threads", threads, "sampling threads (does not change results)");
        return sub;
    };
    CLI::App* lg = add_sweep("lg-sweep", "K versus wait time with the constant Q(t2) designation");
    CLI::App* dich = add_sweep("dichotomic", "pi/3 Ramsey sequence with dichotomic Q(t2)");

    CLI::App* ver = app.add_subcommand("verify", "recompute and replay the outputs of a previous run");
    ver->add_option("--out-dir", out_dir, "directory written by lg-sweep or dichotomic")->required();
    ver->add_option("--threads", threads, "sampling threads for the replay");

    BombFlags bf;
    CLI::App* bomb = app.add_subcommand("bombtest", "closed-form vs Monte Carlo bomb-test figures of merit");
    bomb->add_option("--split", bf.split, "first-splitter probability of branch B");
    bomb->add_option("--contrast", bf.contrast, "interferometer contrast for the dud");
    bomb->add_option("--rounds", bf.rounds, "round cap for the repeated test");
    bomb->add_option("--zeno", bf.zeno, "Zeno cycle count");
    bomb->add_option("--shots", bf.shots, "Monte Carlo trials per row");
    bomb->add_option("--seed", bf.seed, "Monte Carlo seed");
    bomb->add_option("--threads", threads, "Monte Carlo threads (does not change results)");

    std::vector<std::string> argv_store;
    argv_store.reserve(args.size() + 1);
    argv_store.emplace_back("lgsim");
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }
    threads = std::max(1u, threads);

    try {
        Overrides ov;
        if (lg->parsed() || dich->parsed()) {
            CLI::App* sub = lg->parsed() ? lg : dich;
            if (sub->count("--seed")) ov.seed = seed;
            if (sub->count("--shots")) ov.shots_per_arm = shots;
            return sweep(lg->parsed() ? ProtocolKind::LeggettGarg : ProtocolKind::Dichotomic, config_path, out_dir,
                         ov, threads, out);
        }
        if (ver->parsed()) return verify(out_dir, threads, out, err);
        if (bomb->parsed()) return bombtest(bf, threads, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kInternalError;
}

}  // namespace lgsim::cli
