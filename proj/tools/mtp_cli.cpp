// mtp: scenario generation, pipeline runs, evaluation, and benchmarking.
//
// Subcommands:
//   synth  write synthetic scenario files (crossing, dropout, clutter)
//   run    track + predict one scenario, write logs and a run manifest
//   eval   evaluate a finished run against scenario ground truth
//   bench  time tracking and prediction across hypothesis counts
//
// Exit codes: 0 success, 2 usage error, 3 data error.

#include <mtp/pipeline.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kUsageError = 2;
constexpr int kDataError = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << data;
}

std::string scenario_hash(const std::string& serialized) {
    return mtp::hex64(mtp::fnv1a64(serialized));
}

// --- synth ------------------------------------------------------------------

struct SynthFlags {
    std::string kind;
    std::string out;
    std::uint64_t seed = 0;
    int count = 1;
    double noise_sigma = 0.0;
    int n_agents = 2;
    int frames = 40;
    double drop_prob = 0.0;
    double clutter_rate = 0.0;
};

mtp::Scenario make_scenario(const SynthFlags& f, std::uint64_t seed) {
    if (f.kind == "crossing") {
        mtp::CrossingParams p;
        p.frames = f.frames;
        p.noise_sigma = f.noise_sigma;
        return mtp::synth_crossing(p, seed);
    }
    if (f.kind == "dropout") {
        mtp::DropoutParams p;
        p.n_agents = f.n_agents;
        p.frames = f.frames;
        p.noise_sigma = f.noise_sigma;
        p.drop_prob = f.drop_prob;
        return mtp::synth_dropout(p, seed);
    }
    mtp::ClutterParams p;
    p.n_agents = f.n_agents;
    p.frames = f.frames;
    p.noise_sigma = f.noise_sigma;
    p.clutter_rate = f.clutter_rate;
    return mtp::synth_clutter(p, seed);
}

// "s.jsonl" with seed 7 becomes "s_7.jsonl" when generating a suite.
std::string numbered_path(const std::string& out, std::uint64_t seed) {
    const auto dot = out.rfind('.');
    const auto slash = out.rfind('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return out + "_" + std::to_string(seed);
    return out.substr(0, dot) + "_" + std::to_string(seed) + out.substr(dot);
}

int cmd_synth(const SynthFlags& f) {
    for (int i = 0; i < f.count; ++i) {
        const std::uint64_t seed = f.count > 1 ? static_cast<std::uint64_t>(i)
                                               : f.seed;
        const std::string path =
            f.count > 1 ? numbered_path(f.out, seed) : f.out;
        const mtp::Scenario s = make_scenario(f, seed);
        const std::string serialized = mtp::serialize_scenario(s);
        write_file(path, serialized);
        const nlohmann::json manifest = {
            {"kind", f.kind},
            {"seed", seed},
            {"frames", s.frames},
            {"path", path},
            {"hash", scenario_hash(serialized)}};
        write_file(path + ".manifest.json", manifest.dump(2) + "\n");
    }
    return 0;
}

// --- run --------------------------------------------------------------------

struct RunFlags {
    std::string scenario;
    std::string out_prefix = "run";
    std::string matching = "center2d";
    std::string predictor = "cv";
    std::string sampling = "off";
    mtp::PipelineConfig cfg;
    bool gt_past = false;
};

mtp::RunOptions run_options(const RunFlags& f) {
    mtp::RunOptions opt;
    opt.use_gt_past = f.gt_past;
    opt.sampling = f.sampling == "on";
    return opt;
}

int cmd_run(RunFlags& f) {
    f.cfg.matching = mtp::matching_mode_from_string(f.matching);
    f.cfg.validate();

    const std::string serialized = read_file(f.scenario);
    std::istringstream in(serialized);
    const mtp::Scenario s = mtp::parse_scenario(in);
    const mtp::RunOptions opt = run_options(f);
    const mtp::RunResult res = mtp::run_pipeline(s, f.cfg, opt);

    write_file(f.out_prefix + ".tracks.jsonl", res.tracks_log);
    write_file(f.out_prefix + ".predictions.jsonl", res.predictions_log);
    nlohmann::json manifest = mtp::make_manifest(
        f.cfg, opt, f.scenario, scenario_hash(serialized), res);
    manifest["outputs"] = {f.out_prefix + ".tracks.jsonl",
                           f.out_prefix + ".predictions.jsonl"};
    write_file(f.out_prefix + ".manifest.json", manifest.dump(2) + "\n");
    return 0;
}

// --- eval -------------------------------------------------------------------

struct EvalFlags {
    std::string manifest;
    std::string out_prefix = "eval";
    std::string dataset = "scenario";
    std::string method = "mtp";
};

// Rebuilds the run from its manifest (runs are deterministic), then
// evaluates globally and on the IDS/FRAG-targeted subsets.
int cmd_eval(const EvalFlags& f) {
    const nlohmann::json manifest = nlohmann::json::parse(read_file(f.manifest));

    const std::string scenario_path = manifest["scenario"]["path"];
    const std::string serialized = read_file(scenario_path);
    if (scenario_hash(serialized) !=
        manifest["scenario"]["hash"].get<std::string>()) {
        std::cerr << "eval: scenario " << scenario_path
                  << " no longer matches the run manifest hash\n";
        return kDataError;
    }

    mtp::PipelineConfig cfg;
    const auto& c = manifest["config"];
    cfg.hypotheses = c["hypotheses"];
    cfg.samples = c["samples"];
    cfg.children_per_parent = c["children_per_parent"];
    cfg.matching = mtp::matching_mode_from_string(c["matching"]);
    cfg.gate_threshold = c["gate_threshold"];
    cfg.past_len = c["past_len"];
    cfg.horizon = c["horizon"];
    cfg.max_age = c["max_age"];
    cfg.min_hits = c["min_hits"];
    cfg.unmatched_penalty = c["unmatched_penalty"];
    cfg.sigma_speed = c["sigma_speed"];
    cfg.sigma_heading = c["sigma_heading"];
    cfg.rng_seed = c["rng_seed"];
    mtp::RunOptions opt;
    opt.use_gt_past = manifest["options"]["use_gt_past"];
    opt.sampling = manifest["options"]["sampling"];
    opt.force_multi = manifest["options"]["force_multi"];

    std::istringstream in(serialized);
    const mtp::Scenario s = mtp::parse_scenario(in);
    const mtp::RunResult res = mtp::run_pipeline(s, cfg, opt);

    std::vector<mtp::ErrorEvent> events;
    if (!opt.use_gt_past && !res.observations.empty())
        events = mtp::classify_run_errors(res.observations[0], cfg);
    mtp::MetricsReport report = mtp::evaluate(res.eval_frames, s.gt, events, cfg);
    if (!opt.use_gt_past && cfg.hypotheses > 1)
        report.multi_hypothesis =
            mtp::shared_error_stats(mtp::classify_lineage_errors(res, cfg));

    nlohmann::json j = report.to_json();
    j["manifest"] = f.manifest;
    write_file(f.out_prefix + ".json", j.dump(2) + "\n");
    write_file(f.out_prefix + ".csv", report.to_csv(f.dataset, f.method));
    return 0;
}

// --- bench ------------------------------------------------------------------

struct BenchFlags {
    std::string scenario;
    std::vector<int> hypotheses = {1, 5, 10, 20};
    int repeats = 3;
};

int cmd_bench(const BenchFlags& f) {
    std::istringstream in(read_file(f.scenario));
    const mtp::Scenario s = mtp::parse_scenario(in);

    nlohmann::json rows = nlohmann::json::array();
    for (int h : f.hypotheses) {
        mtp::PipelineConfig cfg;
        cfg.hypotheses = h;
        mtp::RunOptions opt;
        opt.force_multi = true;
        mtp::run_pipeline(s, cfg, opt);  // warm-up, excluded from stats
        std::vector<double> track, pred;
        for (int r = 0; r < f.repeats; ++r) {
            const mtp::RunResult res = mtp::run_pipeline(s, cfg, opt);
            track.push_back(res.tracking_ms_per_frame);
            pred.push_back(res.prediction_ms_per_frame);
        }
        auto mean = [](std::vector<double> v) {
            double t = 0.0;
            for (double x : v) t += x;
            return t / static_cast<double>(v.size());
        };
        auto median = [](std::vector<double> v) {
            std::sort(v.begin(), v.end());
            const std::size_t n = v.size();
            return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        };
        rows.push_back({{"hypotheses", h},
                        {"tracking_ms_per_frame_mean", mean(track)},
                        {"tracking_ms_per_frame_median", median(track)},
                        {"prediction_ms_per_frame_mean", mean(pred)},
                        {"prediction_ms_per_frame_median", median(pred)}});
    }
    std::cout << rows.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-hypothesis tracking-and-prediction pipeline"};
    app.require_subcommand(1);

    SynthFlags sf;
    CLI::App* synth = app.add_subcommand("synth", "generate scenario files");
    synth->add_option("--kind", sf.kind, "scenario family")
        ->required()
        ->check(CLI::IsMember({"crossing", "dropout", "clutter"}));
    synth->add_option("--seed", sf.seed, "generator seed");
    synth->add_option("--out", sf.out, "output path")->required();
    synth->add_option("--count", sf.count,
                      "generate a suite with seeds 0..count-1")
        ->check(CLI::Range(1, 1000000));
    synth->add_option("--noise-sigma", sf.noise_sigma, "detection noise (m)");
    synth->add_option("--agents", sf.n_agents, "agent count (dropout, clutter)");
    synth->add_option("--frames", sf.frames, "frame count");
    synth->add_option("--drop-prob", sf.drop_prob,
                      "per-detection drop probability (dropout)");
    synth->add_option("--clutter-rate", sf.clutter_rate,
                      "false detections per frame (clutter)");

    RunFlags rf;
    CLI::App* run = app.add_subcommand("run", "track and predict one scenario");
    run->add_option("--scenario", rf.scenario, "scenario JSONL")->required();
    run->add_option("--out-prefix", rf.out_prefix, "output file prefix");
    run->add_option("--hypotheses", rf.cfg.hypotheses, "hypothesis count H")
        ->check(CLI::Range(1, 1000000));
    run->add_option("--samples", rf.cfg.samples, "prediction samples k")
        ->check(CLI::Range(1, 1000000));
    run->add_option("--children-per-parent", rf.cfg.children_per_parent,
                    "assignments expanded per parent hypothesis (0 = H)");
    run->add_option("--matching", rf.matching, "association metric")
        ->check(CLI::IsMember({"center2d", "iou3d"}));
    run->add_option("--gate", rf.cfg.gate_threshold, "association gate");
    run->add_option("--sampling", rf.sampling, "k-means++ pool reduction")
        ->check(CLI::IsMember({"on", "off"}));
    run->add_option("--predictor", rf.predictor, "trajectory predictor")
        ->check(CLI::IsMember({"cv"}));
    run->add_option("--seed", rf.cfg.rng_seed, "predictor seed");
    run->add_flag("--gt-past", rf.gt_past,
                  "predict from ground-truth pasts (idealized baseline)");

    EvalFlags ef;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a finished run");
    eval->add_option("--manifest", ef.manifest, "run manifest")->required();
    eval->add_option("--out-prefix", ef.out_prefix, "report file prefix");
    eval->add_option("--dataset", ef.dataset, "dataset label for CSV rows");
    eval->add_option("--method", ef.method, "method label for CSV rows");

    BenchFlags bf;
    CLI::App* bench = app.add_subcommand("bench", "time a scenario across H");
    bench->add_option("--scenario", bf.scenario, "scenario JSONL")->required();
    bench->add_option("--hypotheses", bf.hypotheses,
                      "hypothesis counts to time")
        ->delimiter(',');
    bench->add_option("--repeats", bf.repeats, "timed runs per H")
        ->check(CLI::Range(1, 1000000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*synth) return cmd_synth(sf);
        if (*run) return cmd_run(rf);
        if (*eval) return cmd_eval(ef);
        return cmd_bench(bf);
    } catch (const std::invalid_argument& e) {
        std::cerr << "mtp: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "mtp: " << e.what() << "\n";
        return kDataError;
    }
}
