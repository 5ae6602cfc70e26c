// Command-line entry point: learning runs, the random baseline, ground-truth
// construction, Table-1 style evaluation, and DOT export.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "atg/config.hpp"
#include "atg/eval.hpp"
#include "atg/learner.hpp"
#include "atg/serialize.hpp"
#include "atg/simworld.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<long> seed;
    std::optional<long> max_actions;
    std::string actions;  // "", "orbit", "orbit+grasp"
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "Config file (key = value lines)");
    cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Seed override");
    cmd->add_option("--max-actions", o.max_actions, "Action budget override");
    cmd->add_option("--actions", o.actions, "Action set: orbit | orbit+grasp")
        ->check(CLI::IsMember({"orbit", "orbit+grasp"}));
}

atg::FullConfig load_config(const CommonOpts& o) {
    atg::FullConfig cfg;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw std::runtime_error("config file not found: " + o.config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = atg::parse_config(ss.str());
    }
    if (o.seed) cfg.set_seed(static_cast<std::uint64_t>(*o.seed));
    if (o.max_actions) cfg.learner.max_actions = *o.max_actions;
    if (o.actions == "orbit") cfg.extended_actions = false;
    if (o.actions == "orbit+grasp") cfg.extended_actions = true;
    cfg.validate();
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::vector<long> parse_checkpoints(const std::string& spec) {
    std::vector<long> cps;
    auto parse_one = [](const std::string& tok) {
        size_t used = 0;
        long v = std::stol(tok, &used);
        if (used != tok.size() || v < 1) throw std::runtime_error("bad checkpoint '" + tok + "'");
        return v;
    };
    size_t dots = spec.find("..");
    if (dots != std::string::npos) {
        size_t colon = spec.find(':', dots);
        if (colon == std::string::npos) {
            throw std::runtime_error("checkpoint range needs a step: start..end:step");
        }
        long start = parse_one(spec.substr(0, dots));
        long end = parse_one(spec.substr(dots + 2, colon - dots - 2));
        long step = parse_one(spec.substr(colon + 1));
        if (end < start) throw std::runtime_error("checkpoint range end precedes start");
        for (long v = start; v <= end; v += step) cps.push_back(v);
        return cps;
    }
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) cps.push_back(parse_one(tok));
    if (cps.empty()) throw std::runtime_error("empty checkpoint list");
    return cps;
}

unsigned thread_cap() {
    if (const char* env = std::getenv("ATG_THREADS")) {
        long v = std::atol(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 0;  // library default: hardware concurrency
}

int run_learn(const CommonOpts& opts, bool baseline) {
    atg::FullConfig cfg = load_config(opts);
    atg::sim::World world(cfg.sim);
    atg::RunResult rr = baseline ? atg::run_baseline(world, cfg.learner, cfg.kinds())
                                 : atg::run_learning(world, cfg.learner, cfg.kinds());
    const std::string head = atg::provenance(cfg);
    write_file(fs::path(opts.out_dir) / "model.atg", atg::serialize(rr.model, head));
    std::ostringstream steps;
    atg::write_steps_csv(steps, rr.log, head);
    write_file(fs::path(opts.out_dir) / "steps.csv", steps.str());

    atg::eval::GroundTruthModel gt = atg::eval::build_ground_truth(cfg.sim, cfg.kinds());
    std::cout << (baseline ? "baseline" : "learn") << ": nodes=" << rr.model.node_count()
              << " edges=" << rr.model.edge_count() << " steps=" << rr.log.size()
              << " error=" << atg::eval::model_error(rr.model, gt.model) << " -> "
              << (fs::path(opts.out_dir) / "model.atg").string() << "\n";
    return 0;
}

int run_ground_truth(const CommonOpts& opts, int resolution, int grasp_resolution) {
    atg::FullConfig cfg = load_config(opts);
    atg::eval::GroundTruthModel gt =
        atg::eval::build_ground_truth(cfg.sim, cfg.kinds(), resolution, grasp_resolution);
    const std::string head = atg::provenance(cfg);
    write_file(fs::path(opts.out_dir) / "ground_truth.atg", atg::serialize(gt.model, head));
    write_file(fs::path(opts.out_dir) / "ground_truth.dot", atg::export_dot(gt.model, head));
    std::cout << "ground-truth: nodes=" << gt.model.node_count()
              << " edges=" << gt.model.edge_count() << " resolution=" << resolution << " -> "
              << (fs::path(opts.out_dir) / "ground_truth.atg").string() << "\n";
    return 0;
}

int run_evaluate(const CommonOpts& opts, int trials, const std::string& checkpoint_spec) {
    atg::FullConfig cfg = load_config(opts);
    std::vector<long> cps = parse_checkpoints(checkpoint_spec);
    for (long cp : cps) {
        if (cp > cfg.learner.max_actions) {
            throw std::runtime_error("checkpoint " + std::to_string(cp) +
                                     " exceeds max_actions " +
                                     std::to_string(cfg.learner.max_actions));
        }
    }
    atg::eval::GroundTruthModel gt = atg::eval::build_ground_truth(cfg.sim, cfg.kinds());
    atg::eval::TrialTable table = atg::eval::run_trials(cfg.sim, cfg.learner, cfg.kinds(),
                                                        trials, cps, gt.model, thread_cap());
    const std::string head = atg::provenance(cfg);

    std::ostringstream t1;
    atg::eval::write_table_csv(t1, table, head);
    write_file(fs::path(opts.out_dir) / "table1.csv", t1.str());

    std::ostringstream rc;
    atg::eval::write_reward_curve_csv(rc, table.proposed.logs, head);
    write_file(fs::path(opts.out_dir) / "reward_curve.csv", rc.str());

    std::ostringstream vc;
    atg::eval::write_value_curve_csv(vc, table.proposed.logs, head);
    write_file(fs::path(opts.out_dir) / "value_curve.csv", vc.str());

    for (int t = 0; t < trials; ++t) {
        write_file(fs::path(opts.out_dir) / ("proposed_trial" + std::to_string(t) + ".dot"),
                   atg::export_dot(table.proposed.final_models[t], head));
        write_file(fs::path(opts.out_dir) / ("baseline_trial" + std::to_string(t) + ".dot"),
                   atg::export_dot(table.baseline.final_models[t], head));
    }
    std::cout << "evaluate: trials=" << trials << " checkpoints=" << cps.size() << " -> "
              << (fs::path(opts.out_dir) / "table1.csv").string() << "\n";
    return 0;
}

int run_export_dot(const std::string& model_path, const std::string& out_dir) {
    std::ifstream in(model_path);
    if (!in) throw std::runtime_error("model file not found: " + model_path);
    std::stringstream ss;
    ss << in.rdbuf();
    atg::AtgModel model = atg::deserialize(ss.str());
    fs::path out = fs::path(out_dir) / (fs::path(model_path).stem().string() + ".dot");
    write_file(out, atg::export_dot(model));
    std::cout << "export-dot: nodes=" << model.node_count() << " edges=" << model.edge_count()
              << " -> " << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aspect transition graph structure learning"};
    app.require_subcommand(1);

    CommonOpts learn_opts, base_opts, gt_opts, eval_opts;

    CLI::App* learn = app.add_subcommand("learn", "Run the intrinsically motivated learner");
    add_common(learn, learn_opts);

    CLI::App* baseline = app.add_subcommand("baseline", "Run the random+memorize baseline");
    add_common(baseline, base_opts);

    CLI::App* ground = app.add_subcommand("ground-truth", "Build the empirical ground truth");
    add_common(ground, gt_opts);
    int resolution = 720, grasp_resolution = 15;
    ground->add_option("--resolution", resolution, "Sweep samples per dimension (1-D kinds)")
        ->capture_default_str();
    ground->add_option("--grasp-resolution", grasp_resolution,
                       "Sweep samples per dimension (3-D kinds)")
        ->capture_default_str();

    CLI::App* evaluate = app.add_subcommand("evaluate", "Compare learner against baseline");
    add_common(evaluate, eval_opts);
    int trials = 5;
    std::string checkpoints = "50..500:50";
    evaluate->add_option("--trials", trials, "Trials per method")->capture_default_str();
    evaluate->add_option("--checkpoints", checkpoints, "start..end:step or comma list")
        ->capture_default_str();

    CLI::App* exportdot = app.add_subcommand("export-dot", "Render a model file as GraphViz");
    std::string model_path, export_out = ".";
    exportdot->add_option("--model", model_path, "Model file (.atg)")->required();
    exportdot->add_option("--out", export_out, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(learn)) return run_learn(learn_opts, false);
        if (app.got_subcommand(baseline)) return run_learn(base_opts, true);
        if (app.got_subcommand(ground)) return run_ground_truth(gt_opts, resolution,
                                                                grasp_resolution);
        if (app.got_subcommand(evaluate)) return run_evaluate(eval_opts, trials, checkpoints);
        if (app.got_subcommand(exportdot)) return run_export_dot(model_path, export_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
