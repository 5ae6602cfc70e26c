#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "atg/lhs.hpp"
#include "atg/model.hpp"
#include "atg/rng.hpp"
#include "atg/serialize.hpp"
#include "atg/simworld.hpp"

namespace atg {

struct LearnerConfig {
    double alpha = 0.2;
    double gamma = 0.9;
    double epsilon_explore = 0.5;
    double r_max = 1.0;
    double epsilon_stop = 0.01;
    long max_actions = 500;
    int lhs_strata_orbit = 16;
    int lhs_strata_grasp = 6;   // per dimension
    double thin_var = 1e-6;
    double wide_var = 2.0;      // wide enough that novelty reward clamps at r_max
    std::uint64_t seed = 0;

    int strata_for(Action a) const {
        switch (a) {
            case Action::Orbit: return lhs_strata_orbit;
            case Action::Grasp: return lhs_strata_grasp;
            case Action::Release: return 1;
        }
        return 1;
    }

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) {
            throw std::invalid_argument("config: alpha must be in (0,1]");
        }
        if (!(gamma >= 0.0 && gamma < 1.0)) {
            throw std::invalid_argument("config: gamma must be in [0,1)");
        }
        if (!(epsilon_explore >= 0.0 && epsilon_explore <= 1.0)) {
            throw std::invalid_argument("config: epsilon_explore must be in [0,1]");
        }
        if (!(r_max > 0.0)) throw std::invalid_argument("config: r_max must be > 0");
        if (!(epsilon_stop >= 0.0)) {
            throw std::invalid_argument("config: epsilon_stop must be >= 0");
        }
        if (max_actions < 0) throw std::invalid_argument("config: max_actions must be >= 0");
        if (lhs_strata_orbit < 1 || lhs_strata_grasp < 1) {
            throw std::invalid_argument("config: lhs strata must be >= 1");
        }
        if (!(thin_var > 0.0)) throw std::invalid_argument("config: thin_var must be > 0");
        if (!(wide_var > thin_var)) {
            throw std::invalid_argument("config: wide_var must exceed thin_var");
        }
    }
};

enum class SelectMode { Explore, Exploit };

inline const char* to_string(SelectMode m) {
    return m == SelectMode::Explore ? "explore" : "exploit";
}

/// One row of the learning log.
struct StepRecord {
    long step = 0;
    std::string s;
    Action kind = Action::Orbit;
    Eigen::VectorXd rho;
    std::string s_prime;
    double reward = 0.0;
    SelectMode mode = SelectMode::Explore;
    long node_count = 0;
    long edge_count = 0;
    double max_q = 0.0;
    double mean_q = 0.0;  // kept in memory for the value curves
};

/// Novelty pays the (clamped) differential variance between the wide and
/// thin Gaussians; refinement pays the change in the distribution norm.
inline double intrinsic_reward(const UpdateOutcome& outcome, const LearnerConfig& cfg) {
    if (outcome.novel_edge || outcome.novel_node) {
        return std::min(cfg.r_max, std::abs(cfg.wide_var - cfg.thin_var));
    }
    return std::min(cfg.r_max, std::abs(outcome.norm_k - outcome.norm_km1));
}

/// V(s): best outgoing Q at a node, zero when it has no outgoing edges.
inline double node_value(const AtgModel& model, const std::string& key) {
    double v = 0.0;
    bool any = false;
    for (auto it = model.edges.lower_bound(EdgeKey{key, Action::Orbit, ""});
         it != model.edges.end() && it->first.src == key; ++it) {
        v = any ? std::max(v, it->second.q) : it->second.q;
        any = true;
    }
    return any ? std::max(0.0, v) : 0.0;
}

/// Sample-based Q backup on one edge; the new value is mirrored onto it.
inline double value_update(AtgModel& model, const EdgeKey& ek, double reward,
                           const LearnerConfig& cfg) {
    ActionEdge& e = model.edges.at(ek);
    const double v_next = node_value(model, e.dst);
    e.q = (1.0 - cfg.alpha) * e.q + cfg.alpha * (reward + cfg.gamma * v_next);
    return e.q;
}

/// Establishes the value function over the whole model by Gauss-Seidel
/// value-iteration sweeps against each edge's most recent intrinsic reward.
/// Value flowing backward from novelty-rich regions is what steers the
/// exploit mode toward them.
inline void value_iteration(AtgModel& model, const LearnerConfig& cfg, double tol = 1e-12,
                            int max_sweeps = 1000) {
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double moved = 0.0;
        for (auto& [ek, e] : model.edges) {
            const double next = e.last_reward + cfg.gamma * node_value(model, e.dst);
            moved = std::max(moved, std::abs(next - e.q));
            e.q = next;
        }
        if (moved <= tol) break;
    }
}

/// Lazily built LHS grids, one per (aspect node, action kind), plus the
/// applicability facts the robot picks up from flagged no-ops (GRASP while
/// holding, RELEASE with empty hands). Grid seeds are derived from the node
/// key so results do not depend on creation order.
class GridTable {
  public:
    explicit GridTable(std::uint64_t base_seed) : base_seed_(base_seed) {}

    LhsGrid& grid_for(const std::string& node_key, const ActionKind& kind, int strata) {
        auto k = std::make_pair(node_key, kind.name);
        auto it = grids_.find(k);
        if (it == grids_.end()) {
            std::uint64_t seed =
                mix_seed(base_seed_, fnv1a64(node_key) ^ static_cast<std::uint64_t>(kind.name));
            it = grids_.emplace(k, LhsGrid(kind, strata, seed)).first;
        }
        return it->second;
    }

    void mark_inapplicable(const std::string& node_key, Action kind) {
        inapplicable_.emplace(node_key, kind);
    }

    bool applicable(const std::string& node_key, Action kind) const {
        return !inapplicable_.count({node_key, kind});
    }

  private:
    std::uint64_t base_seed_;
    std::map<std::pair<std::string, Action>, LhsGrid> grids_;
    std::set<std::pair<std::string, Action>> inapplicable_;
};

struct Selection {
    ActionKind kind;
    Eigen::VectorXd rho;
    SelectMode mode = SelectMode::Explore;
};

/// Convergence rule: one full pass of discovery is in hand (every known
/// node has consumed a complete LHS cycle for every action kind) and no
/// edge retains value above epsilon_stop. The action budget bounds the run
/// either way.
inline bool converged(const AtgModel& model, const LearnerConfig& cfg,
                      const std::vector<ActionKind>& kinds, GridTable& grids) {
    if (model.edges.empty()) return false;
    for (const auto& [key, node] : model.nodes) {
        for (const ActionKind& kind : kinds) {
            if (!grids.applicable(key, kind.name)) continue;
            if (grids.grid_for(key, kind, cfg.strata_for(kind.name)).completed_cycles() < 1) {
                return false;
            }
        }
    }
    return model.max_q() <= cfg.epsilon_stop;
}

/// Coverage comes first: a node keeps drawing LHS parameters until every
/// action kind has consumed one full Latin cycle there. After that the node
/// explores with probability epsilon and otherwise exploits the
/// highest-valued outgoing edge, sampling from its learned distribution
/// clamped to the parameter bounds; ties go to the lowest edge key.
inline Selection select_action(const AtgModel& model, const std::string& s,
                               const LearnerConfig& cfg, const std::vector<ActionKind>& kinds,
                               GridTable& grids, std::mt19937_64& rng) {
    Selection sel;
    std::vector<size_t> usable;
    std::vector<size_t> uncovered;
    for (size_t i = 0; i < kinds.size(); ++i) {
        if (!grids.applicable(s, kinds[i].name)) continue;
        usable.push_back(i);
        if (grids.grid_for(s, kinds[i], cfg.strata_for(kinds[i].name)).completed_cycles() < 1) {
            uncovered.push_back(i);
        }
    }
    if (usable.empty()) usable.push_back(0);  // cannot happen in this world; stay total
    if (!uncovered.empty()) {
        std::uniform_int_distribution<size_t> pick(0, uncovered.size() - 1);
        sel.kind = kinds[uncovered[pick(rng)]];
        sel.rho = grids.grid_for(s, sel.kind, cfg.strata_for(sel.kind.name)).draw();
        sel.mode = SelectMode::Explore;
        return sel;
    }

    const ActionEdge* best = nullptr;
    for (auto it = model.edges.lower_bound(EdgeKey{s, Action::Orbit, ""});
         it != model.edges.end() && it->first.src == s; ++it) {
        if (best == nullptr || it->second.q > best->q) best = &it->second;
    }

    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const bool explore = best == nullptr || u01(rng) < cfg.epsilon_explore;

    if (explore) {
        std::uniform_int_distribution<size_t> pick(0, usable.size() - 1);
        sel.kind = kinds[usable[pick(rng)]];
        sel.rho = grids.grid_for(s, sel.kind, cfg.strata_for(sel.kind.name)).draw();
        sel.mode = SelectMode::Explore;
        return sel;
    }

    sel.kind = best->kind;
    sel.mode = SelectMode::Exploit;
    Eigen::VectorXd rho = sample_gaussian(best->dist, rng);
    if (sel.kind.circular && rho.size() == 1) rho(0) = wrap_pi(rho(0));
    for (int d = 0; d < sel.kind.param_dim; ++d) {
        rho(d) = std::clamp(rho(d), sel.kind.bounds[d][0], sel.kind.bounds[d][1]);
    }
    sel.rho = rho;
    return sel;
}

struct RunResult {
    AtgModel model;
    std::vector<StepRecord> log;
};

using StepObserver = std::function<void(long step, const AtgModel&, const StepRecord&)>;

namespace detail {

/// Shared main loop of the proposed learner and the random baseline.
inline RunResult run_loop(sim::World& world, const LearnerConfig& cfg,
                          const std::vector<ActionKind>& kinds, bool baseline,
                          const StepObserver& observer) {
    cfg.validate();
    if (kinds.empty()) throw std::invalid_argument("run: empty action set");

    world.reset(cfg.seed);
    AtgModel model;
    ObservationPipeline pipeline;
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x6c6561726e6572ull));
    GridTable grids(mix_seed(cfg.seed, 0x676c6864ull));

    RunResult out;
    std::string s = pipeline.ingest(model, world.detections()).key;

    for (long k = 1; k <= cfg.max_actions; ++k) {
        Selection sel;
        if (baseline) {
            std::uniform_int_distribution<size_t> pick(0, kinds.size() - 1);
            sel.kind = kinds[pick(rng)];
            sel.rho = Eigen::VectorXd(sel.kind.param_dim);
            for (int d = 0; d < sel.kind.param_dim; ++d) {
                std::uniform_real_distribution<double> u(sel.kind.bounds[d][0],
                                                         sel.kind.bounds[d][1]);
                sel.rho(d) = u(rng);
            }
            sel.mode = SelectMode::Explore;
        } else {
            sel = select_action(model, s, cfg, kinds, grids, rng);
        }

        const sim::StepResult sr = world.apply(sel.kind, sel.rho);
        const auto obs = pipeline.ingest(model, world.detections());
        const std::string s_prime = obs.key;

        if (sr.noop && !baseline) {
            // The controller refused to engage; this kind does nothing here.
            grids.mark_inapplicable(s, sel.kind.name);
        }

        double reward = 0.0;
        if (!sr.noop && !sr.grasp_failed) {
            const EdgeKey ek{s, sel.kind.name, s_prime};
            UpdateOutcome outcome =
                record_experience(model, Experience{s, sel.kind, sel.rho, s_prime}, cfg.thin_var);
            outcome.novel_node = outcome.novel_node || obs.novel_node;
            reward = intrinsic_reward(outcome, cfg);
            if (!baseline) {
                model.edges.at(ek).last_reward = reward;
                value_update(model, ek, reward, cfg);
                value_iteration(model, cfg);
            }
        }

        StepRecord rec;
        rec.step = k;
        rec.s = s;
        rec.kind = sel.kind.name;
        rec.rho = sel.rho;
        rec.s_prime = s_prime;
        rec.reward = reward;
        rec.mode = sel.mode;
        rec.node_count = model.node_count();
        rec.edge_count = model.edge_count();
        rec.max_q = model.max_q();
        rec.mean_q = model.mean_q();
        out.log.push_back(rec);
        if (observer) observer(k, model, out.log.back());

        s = s_prime;

        if (!baseline && converged(model, cfg, kinds, grids)) break;
    }

    out.model = std::move(model);
    return out;
}

}  // namespace detail

/// Algorithm main loop: observe, select by LHS or argmax, act, record the
/// experience, pay intrinsic reward, back up the value.
inline RunResult run_learning(sim::World& world, const LearnerConfig& cfg,
                              const std::vector<ActionKind>& kinds,
                              const StepObserver& observer = {}) {
    return detail::run_loop(world, cfg, kinds, false, observer);
}

/// Random+memorize baseline: uniform kinds, uniform parameters, experiences
/// recorded identically, no value function. Runs to the action budget.
inline RunResult run_baseline(sim::World& world, const LearnerConfig& cfg,
                              const std::vector<ActionKind>& kinds,
                              const StepObserver& observer = {}) {
    return detail::run_loop(world, cfg, kinds, true, observer);
}

/// Step log as CSV. Parameter columns are padded to the widest kind present.
inline void write_steps_csv(std::ostream& os, const std::vector<StepRecord>& log,
                            const std::string& header_comment = "") {
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    int rho_dims = 1;
    for (const auto& r : log) rho_dims = std::max(rho_dims, static_cast<int>(r.rho.size()));
    os << "step,s,kind";
    for (int d = 0; d < rho_dims; ++d) os << ",rho" << d;
    os << ",s_prime,reward,mode,nodes,edges,max_q\n";
    for (const auto& r : log) {
        os << r.step << "," << r.s << "," << to_string(r.kind);
        for (int d = 0; d < rho_dims; ++d) {
            os << ",";
            if (d < r.rho.size()) os << fmt_double(r.rho(d));
        }
        os << "," << r.s_prime << "," << fmt_double(r.reward) << "," << to_string(r.mode) << ","
           << r.node_count << "," << r.edge_count << "," << fmt_double(r.max_q) << "\n";
    }
}

}  // namespace atg
