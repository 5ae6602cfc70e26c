#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <deque>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "atg/learner.hpp"
#include "atg/model.hpp"
#include "atg/serialize.hpp"
#include "atg/simworld.hpp"

namespace atg::eval {

/// Empirical model built by a dense, noise-free parameter sweep, iterated
/// until the reachable aspect set is closed.
struct GroundTruthModel {
    AtgModel model;
    int sweep_resolution = 0;        // samples per dimension, 1-D kinds
    int grasp_resolution = 0;        // samples per dimension, 3-D kinds
};

namespace detail {

inline std::vector<Eigen::VectorXd> sweep_grid(const ActionKind& kind, int resolution,
                                               int grasp_resolution) {
    std::vector<Eigen::VectorXd> out;
    if (kind.param_dim == 0) {
        out.emplace_back(0);
        return out;
    }
    const int res = kind.param_dim == 1 ? resolution : grasp_resolution;
    std::vector<double> axis(static_cast<size_t>(res));
    auto axis_for = [&](int d) {
        const double lo = kind.bounds[d][0];
        const double w = (kind.bounds[d][1] - lo) / static_cast<double>(res);
        for (int j = 0; j < res; ++j) axis[static_cast<size_t>(j)] = lo + (j + 0.5) * w;
        return axis;
    };
    if (kind.param_dim == 1) {
        for (double v : axis_for(0)) {
            Eigen::VectorXd rho(1);
            rho(0) = v;
            out.push_back(rho);
        }
        return out;
    }
    const auto xs = axis_for(0);
    const auto ys = axis_for(1);
    const auto zs = axis_for(2);
    for (double x : xs) {
        for (double y : ys) {
            for (double z : zs) {
                Eigen::VectorXd rho(3);
                rho << x, y, z;
                out.push_back(rho);
            }
        }
    }
    return out;
}

/// Centers a representative state inside its aspect: finds the azimuth arc
/// over which the noise-free aspect key is unchanged and moves the base to
/// its midpoint. Boundaries are located by bisection on the aspect oracle.
inline sim::WorldState center_representative(sim::WorldState state, const sim::SimConfig& cfg) {
    const std::string key = sim::true_aspect(state, cfg);
    auto key_at = [&](double delta) {
        sim::WorldState probe = state;
        probe.azimuth = wrap_two_pi(state.azimuth + delta);
        return sim::true_aspect(probe, cfg);
    };
    auto boundary = [&](double direction) {
        double inside = 0.0;
        double outside = direction * kTwoPi;  // key must change within a full turn
        double step = direction * cfg.sector_half_width / 4.0;
        for (double d = step;; d += step) {
            if (std::abs(d) >= kTwoPi || key_at(d) != key) {
                outside = d;
                break;
            }
            inside = d;
        }
        for (int i = 0; i < 60; ++i) {
            double mid = (inside + outside) / 2.0;
            (key_at(mid) == key ? inside : outside) = mid;
        }
        return (inside + outside) / 2.0;
    };
    const double lo = boundary(-1.0);
    const double hi = boundary(+1.0);
    state.azimuth = wrap_two_pi(state.azimuth + (lo + hi) / 2.0);
    return state;
}

}  // namespace detail

/// Sweeps every action kind over a midpoint grid from a representative state
/// of every reachable aspect, recording all transitions. Representatives are
/// centered within their aspects so edge means sit at arc midpoints. Noise
/// is forced off so the result is deterministic.
inline GroundTruthModel build_ground_truth(sim::SimConfig cfg,
                                           const std::vector<ActionKind>& kinds,
                                           int resolution = 720, int grasp_resolution = 15) {
    if (resolution < 1 || grasp_resolution < 1) {
        throw std::invalid_argument("build_ground_truth: resolution must be >= 1");
    }
    cfg.act_noise_sigma = 0.0;
    cfg.obs_noise_sigma = 0.0;
    cfg.validate();

    GroundTruthModel gt;
    gt.sweep_resolution = resolution;
    gt.grasp_resolution = grasp_resolution;

    std::mt19937_64 rng(0);  // never consulted at zero noise
    ObservationPipeline pipeline;

    sim::WorldState start;
    start.azimuth = 0.0;
    start.object_yaw = 0.0;

    std::deque<std::pair<std::string, sim::WorldState>> frontier;
    std::set<std::string> seen;

    start = detail::center_representative(start, cfg);
    const std::string start_key = sim::true_aspect(start, cfg);
    pipeline.ingest(gt.model, sim::detail::detections_impl(start, cfg, false, nullptr));
    frontier.emplace_back(start_key, start);
    seen.insert(start_key);

    constexpr size_t kMaxAspects = 64;
    while (!frontier.empty()) {
        auto [key, state] = frontier.front();
        frontier.pop_front();
        for (const ActionKind& kind : kinds) {
            for (const Eigen::VectorXd& rho :
                 detail::sweep_grid(kind, resolution, grasp_resolution)) {
                sim::StepResult res = sim::step(state, kind, rho, cfg, rng);
                if (res.noop || res.grasp_failed) continue;
                const std::string key2 = sim::true_aspect(res.state, cfg);
                if (!seen.count(key2)) {
                    if (seen.size() >= kMaxAspects) {
                        throw std::runtime_error(
                            "build_ground_truth: aspect set failed to close");
                    }
                    pipeline.ingest(gt.model,
                                    sim::detail::detections_impl(res.state, cfg, false, nullptr));
                    seen.insert(key2);
                    frontier.emplace_back(key2, detail::center_representative(res.state, cfg));
                }
                record_experience(gt.model, Experience{key, kind, rho, key2});
            }
        }
    }
    return gt;
}

/// True when no feature token of the key is tactile.
inline bool is_visual_key(const std::string& key) {
    size_t pos = 0;
    while (pos <= key.size()) {
        size_t end = key.find(';', pos);
        if (end == std::string::npos) end = key.size();
        const std::string token = key.substr(pos, end - pos);
        if (token.rfind("tactile:", 0) == 0) return false;
        pos = end + 1;
    }
    return true;
}

/// Mean absolute angular error over the ground truth's ORBIT edges between
/// visual aspects. An edge the learner never discovered costs the maximum,
/// pi. Models must not disagree on the action-kind universe.
inline double model_error(const AtgModel& learned, const AtgModel& ground_truth) {
    std::set<Action> gt_kinds;
    for (const auto& [ek, e] : ground_truth.edges) gt_kinds.insert(ek.kind);
    for (const auto& [ek, e] : learned.edges) {
        if (!gt_kinds.count(ek.kind) && !ground_truth.edges.empty()) {
            throw std::invalid_argument("model_error: learned model uses an action kind "
                                        "absent from the ground truth");
        }
    }

    double total = 0.0;
    long n = 0;
    for (const auto& [ek, e] : ground_truth.edges) {
        if (ek.kind != Action::Orbit) continue;
        if (!is_visual_key(ek.src) || !is_visual_key(ek.dst)) continue;
        ++n;
        auto it = learned.edges.find(ek);
        if (it == learned.edges.end()) {
            total += kPi;
        } else {
            total += circular_abs_diff(it->second.dist.mean(0), e.dist.mean(0));
        }
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

/// Companion metric for Cartesian-parameter edges: mean Euclidean distance
/// between learned and ground-truth means, a missing edge costing the
/// diameter of the parameter box.
inline double euclidean_error(const AtgModel& learned, const AtgModel& ground_truth,
                              Action kind) {
    double total = 0.0;
    long n = 0;
    for (const auto& [ek, e] : ground_truth.edges) {
        if (ek.kind != kind || e.kind.param_dim == 0) continue;
        ++n;
        auto it = learned.edges.find(ek);
        if (it == learned.edges.end()) {
            double diag = 0.0;
            for (const auto& b : e.kind.bounds) {
                diag += (b[1] - b[0]) * (b[1] - b[0]);
            }
            total += std::sqrt(diag);
        } else {
            total += (it->second.dist.mean - e.dist.mean).norm();
        }
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

/// Two-sided Welch unequal-variance t-test.
inline double welch_p(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() < 2 || ys.size() < 2) {
        throw std::invalid_argument("welch_p: need at least two samples per group");
    }
    auto stats = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::make_pair(m, ss / static_cast<double>(v.size() - 1));
    };
    const auto [m1, v1] = stats(xs);
    const auto [m2, v2] = stats(ys);
    const double n1 = static_cast<double>(xs.size());
    const double n2 = static_cast<double>(ys.size());
    const double se2 = v1 / n1 + v2 / n2;
    if (se2 == 0.0) return m1 == m2 ? 1.0 : 0.0;
    const double t = (m1 - m2) / std::sqrt(se2);
    const double dof =
        se2 * se2 / ((v1 / n1) * (v1 / n1) / (n1 - 1.0) + (v2 / n2) * (v2 / n2) / (n2 - 1.0));
    boost::math::students_t dist(dof);
    return 2.0 * boost::math::cdf(dist, -std::abs(t));
}

enum class Method { Proposed, Baseline };

inline const char* to_string(Method m) {
    return m == Method::Proposed ? "proposed" : "baseline";
}

/// Per-method, per-checkpoint results of a seeded multi-trial experiment.
struct MethodResult {
    std::vector<std::vector<double>> errors;       // [checkpoint][trial]
    std::vector<std::vector<StepRecord>> logs;     // [trial]
    std::vector<AtgModel> final_models;            // [trial]
};

/// Aggregated comparison of the two methods.
struct TrialTable {
    std::vector<long> checkpoints;
    std::vector<double> proposed_mean, baseline_mean;
    std::vector<std::optional<double>> proposed_std, baseline_std, p_values;
    MethodResult proposed, baseline;
};

namespace detail {

inline std::uint64_t trial_seed(std::uint64_t base, Method method, int trial) {
    const std::uint64_t tag = method == Method::Proposed ? 0x70726f70ull : 0x62617365ull;
    return mix_seed(mix_seed(base, tag), static_cast<std::uint64_t>(trial));
}

inline double mean_of(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return v.empty() ? 0.0 : m / static_cast<double>(v.size());
}

inline std::optional<double> std_of(const std::vector<double>& v) {
    if (v.size() < 2) return std::nullopt;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Runs n seeded trials of one method, snapshotting the model error against
/// the ground truth at every checkpoint. Trials execute on up to `threads`
/// workers; results are identical regardless of scheduling.
inline MethodResult run_method_trials(const sim::SimConfig& sim_cfg,
                                      const LearnerConfig& base_cfg,
                                      const std::vector<ActionKind>& kinds, Method method,
                                      int n_trials, const std::vector<long>& checkpoints,
                                      const AtgModel& ground_truth, unsigned threads = 0) {
    if (n_trials < 1) throw std::invalid_argument("run_method_trials: n_trials must be >= 1");
    for (long cp : checkpoints) {
        if (cp < 1 || cp > base_cfg.max_actions) {
            throw std::invalid_argument("run_method_trials: checkpoint outside action budget");
        }
    }
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
        throw std::invalid_argument("run_method_trials: checkpoints must be ascending");
    }

    MethodResult result;
    result.errors.assign(checkpoints.size(), std::vector<double>(n_trials, 0.0));
    result.logs.resize(n_trials);
    result.final_models.resize(n_trials);

    auto run_one = [&](int trial) {
        LearnerConfig cfg = base_cfg;
        cfg.seed = detail::trial_seed(base_cfg.seed, method, trial);
        sim::World world(sim_cfg);
        std::vector<char> done(checkpoints.size(), 0);
        StepObserver observer = [&](long step, const AtgModel& model, const StepRecord&) {
            for (size_t i = 0; i < checkpoints.size(); ++i) {
                if (checkpoints[i] == step) {
                    result.errors[i][trial] = model_error(model, ground_truth);
                    done[i] = 1;
                }
            }
        };
        RunResult rr = method == Method::Proposed ? run_learning(world, cfg, kinds, observer)
                                                  : run_baseline(world, cfg, kinds, observer);
        for (size_t i = 0; i < checkpoints.size(); ++i) {
            if (!done[i]) {  // run converged before this checkpoint
                result.errors[i][trial] = model_error(rr.model, ground_truth);
            }
        }
        result.logs[trial] = std::move(rr.log);
        result.final_models[trial] = std::move(rr.model);
    };

    unsigned n_workers = threads != 0 ? threads : std::thread::hardware_concurrency();
    n_workers = std::max(1u, std::min<unsigned>(n_workers, static_cast<unsigned>(n_trials)));
    if (n_workers == 1) {
        for (int t = 0; t < n_trials; ++t) run_one(t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_workers; ++w) {
            pool.emplace_back([&]() {
                int t;
                while ((t = next.fetch_add(1)) < n_trials) run_one(t);
            });
        }
        for (auto& th : pool) th.join();
    }
    return result;
}

/// Runs both methods and aggregates Table-1 style statistics with Welch
/// p-values per checkpoint.
inline TrialTable run_trials(const sim::SimConfig& sim_cfg, const LearnerConfig& base_cfg,
                             const std::vector<ActionKind>& kinds, int n_trials,
                             const std::vector<long>& checkpoints, const AtgModel& ground_truth,
                             unsigned threads = 0) {
    TrialTable table;
    table.checkpoints = checkpoints;
    table.proposed = run_method_trials(sim_cfg, base_cfg, kinds, Method::Proposed, n_trials,
                                       checkpoints, ground_truth, threads);
    table.baseline = run_method_trials(sim_cfg, base_cfg, kinds, Method::Baseline, n_trials,
                                       checkpoints, ground_truth, threads);
    for (size_t i = 0; i < checkpoints.size(); ++i) {
        const auto& pe = table.proposed.errors[i];
        const auto& be = table.baseline.errors[i];
        table.proposed_mean.push_back(detail::mean_of(pe));
        table.baseline_mean.push_back(detail::mean_of(be));
        table.proposed_std.push_back(detail::std_of(pe));
        table.baseline_std.push_back(detail::std_of(be));
        if (pe.size() >= 2 && be.size() >= 2) {
            table.p_values.push_back(welch_p(pe, be));
        } else {
            table.p_values.push_back(std::nullopt);
        }
    }
    return table;
}

inline void write_table_csv(std::ostream& os, const TrialTable& table,
                            const std::string& header_comment = "") {
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "checkpoint,p,proposed_mean,proposed_std,baseline_mean,baseline_std\n";
    for (size_t i = 0; i < table.checkpoints.size(); ++i) {
        os << table.checkpoints[i] << ",";
        if (table.p_values[i]) os << fmt_double(*table.p_values[i]);
        os << "," << fmt_double(table.proposed_mean[i]) << ",";
        if (table.proposed_std[i]) os << fmt_double(*table.proposed_std[i]);
        os << "," << fmt_double(table.baseline_mean[i]) << ",";
        if (table.baseline_std[i]) os << fmt_double(*table.baseline_std[i]);
        os << "\n";
    }
}

inline constexpr double kLogRewardFloor = 1e-12;

/// Per-step reward curve: across-trial mean and standard deviation of
/// log10(max(r, 1e-12)), over the steps all trials reached.
inline void write_reward_curve_csv(std::ostream& os,
                                   const std::vector<std::vector<StepRecord>>& trial_logs,
                                   const std::string& header_comment = "") {
    if (trial_logs.empty()) throw std::invalid_argument("write_reward_curve_csv: no logs");
    size_t n_steps = trial_logs.front().size();
    for (const auto& log : trial_logs) n_steps = std::min(n_steps, log.size());
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "step,log10_reward_mean,log10_reward_std\n";
    for (size_t k = 0; k < n_steps; ++k) {
        std::vector<double> vals;
        vals.reserve(trial_logs.size());
        for (const auto& log : trial_logs) {
            vals.push_back(std::log10(std::max(log[k].reward, kLogRewardFloor)));
        }
        os << trial_logs.front()[k].step << "," << fmt_double(detail::mean_of(vals)) << ",";
        if (auto sd = detail::std_of(vals)) os << fmt_double(*sd);
        os << "\n";
    }
}

/// Per-step mean model Q and discovered-edge counts, averaged across trials.
inline void write_value_curve_csv(std::ostream& os,
                                  const std::vector<std::vector<StepRecord>>& trial_logs,
                                  const std::string& header_comment = "") {
    if (trial_logs.empty()) throw std::invalid_argument("write_value_curve_csv: no logs");
    size_t n_steps = trial_logs.front().size();
    for (const auto& log : trial_logs) n_steps = std::min(n_steps, log.size());
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "step,mean_q_mean,mean_q_std,edges_mean,edges_std\n";
    for (size_t k = 0; k < n_steps; ++k) {
        std::vector<double> qs, es;
        for (const auto& log : trial_logs) {
            qs.push_back(log[k].mean_q);
            es.push_back(static_cast<double>(log[k].edge_count));
        }
        os << trial_logs.front()[k].step << "," << fmt_double(detail::mean_of(qs)) << ",";
        if (auto sd = detail::std_of(qs)) os << fmt_double(*sd);
        os << "," << fmt_double(detail::mean_of(es)) << ",";
        if (auto sd = detail::std_of(es)) os << fmt_double(*sd);
        os << "\n";
    }
}

}  // namespace atg::eval
