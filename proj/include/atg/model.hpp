#pragma once

#include <Eigen/Dense>
#include <array>
#include <cctype>
#include <cmath>
#include <compare>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "atg/angles.hpp"
#include "atg/gaussian.hpp"

namespace atg {

// ---------------------------------------------------------------------------
// Action kinds
// ---------------------------------------------------------------------------

enum class Action { Orbit, Grasp, Release };

inline const char* to_string(Action a) {
    switch (a) {
        case Action::Orbit: return "ORBIT";
        case Action::Grasp: return "GRASP";
        case Action::Release: return "RELEASE";
    }
    return "?";
}

inline Action action_from_string(const std::string& s) {
    if (s == "ORBIT") return Action::Orbit;
    if (s == "GRASP") return Action::Grasp;
    if (s == "RELEASE") return Action::Release;
    throw std::invalid_argument("unknown action kind: " + s);
}

/// Parameter space of one control program. The set of kinds and their bounds
/// are fixed a priori; edges reference them by name.
struct ActionKind {
    Action name = Action::Orbit;
    int param_dim = 0;
    std::vector<std::array<double, 2>> bounds;  // closed interval per dimension
    bool circular = false;  // 1-D angular parameter, fitted with circular statistics

    bool in_bounds(const Eigen::VectorXd& rho) const {
        if (rho.size() != param_dim) return false;
        for (int i = 0; i < param_dim; ++i) {
            if (!(rho(i) >= bounds[i][0] && rho(i) <= bounds[i][1])) return false;
        }
        return true;
    }
};

inline constexpr double kGraspBound = 0.15;   // hand-offset half-range, meters

inline ActionKind orbit_kind() {
    return ActionKind{Action::Orbit, 1, {{-kPi, kPi}}, true};
}

inline ActionKind grasp_kind() {
    return ActionKind{Action::Grasp, 3,
                      {{-kGraspBound, kGraspBound},
                       {-kGraspBound, kGraspBound},
                       {-kGraspBound, kGraspBound}},
                      false};
}

inline ActionKind release_kind() {
    return ActionKind{Action::Release, 0, {}, false};
}

inline ActionKind kind_by_name(Action a) {
    switch (a) {
        case Action::Orbit: return orbit_kind();
        case Action::Grasp: return grasp_kind();
        case Action::Release: return release_kind();
    }
    throw std::invalid_argument("kind_by_name: bad action");
}

/// Orbit-only or the full ORBIT/GRASP/RELEASE set.
inline std::vector<ActionKind> action_set(bool extended) {
    if (!extended) return {orbit_kind()};
    return {orbit_kind(), grasp_kind(), release_kind()};
}

// ---------------------------------------------------------------------------
// Model types
// ---------------------------------------------------------------------------

/// One identified percept: a (type, value) pair plus its estimated Cartesian
/// position in the object frame. Ids are chronological by discovery.
struct Feature {
    int id = 0;
    std::string ftype;
    std::string value;
    Eigen::Vector3d pos_mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d pos_cov = Eigen::Matrix3d::Identity();
};

/// Throws unless the token is usable inside an aspect key (the key grammar
/// reserves ':' and ';' as separators).
inline void validate_feature_token(const std::string& tok, const char* what) {
    if (tok.empty()) {
        throw std::invalid_argument(std::string(what) + " must be nonempty");
    }
    for (char c : tok) {
        if (c == ':' || c == ';' || std::isspace(static_cast<unsigned char>(c))) {
            throw std::invalid_argument(std::string(what) +
                                        " must not contain ':', ';' or whitespace: " + tok);
        }
    }
}

/// An ordered constellation of features; the key is the string form of the
/// ordered (ftype, value) sequence.
struct AspectNode {
    std::string key;
    std::vector<int> feature_ids;
};

/// One directed transition edge. The sample list is the nonparametric store
/// of every parameter that produced this transition; dist is always the
/// Gaussian refitted from it.
struct ActionEdge {
    std::string src;
    std::string dst;
    ActionKind kind;
    std::vector<Eigen::VectorXd> samples;
    GaussianDist dist;
    double q = 0.0;
    double last_reward = 0.0;  // most recent intrinsic reward paid on this edge
    long visit_count = 0;
};

struct EdgeKey {
    std::string src;
    Action kind;
    std::string dst;

    auto operator<=>(const EdgeKey&) const = default;
};

/// One <s, a, rho, s'> tuple produced by acting in the world.
struct Experience {
    std::string s;
    ActionKind kind;
    Eigen::VectorXd rho;
    std::string s_prime;
};

/// What an experience did to the model; feeds the intrinsic reward.
struct UpdateOutcome {
    bool novel_node = false;
    bool novel_edge = false;
    double norm_k = 0.0;
    double norm_km1 = std::numeric_limits<double>::quiet_NaN();  // NaN when novel_edge
};

/// Directed multigraph of aspect nodes and parametrized action edges.
/// Edge identity is the (src, kind, dst) triple; parallel edges between the
/// same node pair differ in kind or destination.
struct AtgModel {
    std::vector<Feature> features;  // index == id
    std::map<std::string, AspectNode> nodes;
    std::map<EdgeKey, ActionEdge> edges;

    const Feature* find_feature(const std::string& ftype, const std::string& value) const {
        for (const auto& f : features) {
            if (f.ftype == ftype && f.value == value) return &f;
        }
        return nullptr;
    }

    Feature* find_feature(const std::string& ftype, const std::string& value) {
        for (auto& f : features) {
            if (f.ftype == ftype && f.value == value) return &f;
        }
        return nullptr;
    }

    /// Adds a feature if the (ftype, value) identity is new; otherwise
    /// refreshes the stored position estimate. Returns its id.
    int upsert_feature(const std::string& ftype, const std::string& value,
                       const Eigen::Vector3d& pos_mean, const Eigen::Matrix3d& pos_cov) {
        validate_feature_token(ftype, "feature type");
        validate_feature_token(value, "feature value");
        if (Feature* f = find_feature(ftype, value)) {
            f->pos_mean = pos_mean;
            f->pos_cov = pos_cov;
            return f->id;
        }
        Feature f;
        f.id = static_cast<int>(features.size());
        f.ftype = ftype;
        f.value = value;
        f.pos_mean = pos_mean;
        f.pos_cov = pos_cov;
        features.push_back(std::move(f));
        return features.back().id;
    }

    long node_count() const { return static_cast<long>(nodes.size()); }
    long edge_count() const { return static_cast<long>(edges.size()); }

    long sample_count() const {
        long n = 0;
        for (const auto& [k, e] : edges) n += static_cast<long>(e.samples.size());
        return n;
    }

    double max_q() const {
        double m = 0.0;
        for (const auto& [k, e] : edges) m = std::max(m, e.q);
        return m;
    }

    double mean_q() const {
        if (edges.empty()) return 0.0;
        double s = 0.0;
        for (const auto& [k, e] : edges) s += e.q;
        return s / static_cast<double>(edges.size());
    }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Key corresponding to an ordered (ftype, value) sequence.
inline std::string key_for_ids(const AtgModel& model, const std::vector<int>& feature_ids) {
    if (feature_ids.empty()) return "∅";
    std::string key;
    for (size_t i = 0; i < feature_ids.size(); ++i) {
        const Feature& f = model.features.at(static_cast<size_t>(feature_ids[i]));
        if (i > 0) key += ';';
        key += f.ftype;
        key += ':';
        key += f.value;
    }
    return key;
}

/// Looks up or inserts the aspect node for `key`. Returns the node and
/// whether it was newly created. When feature_ids are given they must
/// resolve and must reproduce the key.
inline std::pair<AspectNode*, bool> get_or_create_node(AtgModel& model, const std::string& key,
                                                       const std::vector<int>& feature_ids = {}) {
    if (key.empty()) throw std::invalid_argument("get_or_create_node: empty key");
    for (int id : feature_ids) {
        if (id < 0 || static_cast<size_t>(id) >= model.features.size()) {
            throw std::invalid_argument("get_or_create_node: unknown feature id " +
                                        std::to_string(id));
        }
    }
    if (!feature_ids.empty() && key_for_ids(model, feature_ids) != key) {
        throw std::invalid_argument("get_or_create_node: key '" + key +
                                    "' does not match its feature constellation");
    }
    auto it = model.nodes.find(key);
    if (it != model.nodes.end()) {
        if (!feature_ids.empty() && !it->second.feature_ids.empty() &&
            it->second.feature_ids != feature_ids) {
            throw std::invalid_argument("get_or_create_node: conflicting feature ids for '" +
                                        key + "'");
        }
        if (it->second.feature_ids.empty() && !feature_ids.empty()) {
            it->second.feature_ids = feature_ids;  // fill in a bare node
        }
        return {&it->second, false};
    }
    AspectNode node;
    node.key = key;
    node.feature_ids = feature_ids;
    auto [ins, ok] = model.nodes.emplace(key, std::move(node));
    return {&ins->second, true};
}

/// Appends the experience's parameter to its edge, refits the edge Gaussian
/// from all samples, and reports how the distribution norm moved. The source
/// node must already exist; an unseen destination is created bare.
inline UpdateOutcome record_experience(AtgModel& model, const Experience& exp,
                                       double thin_var = kDefaultThinVar) {
    if (model.nodes.find(exp.s) == model.nodes.end()) {
        throw std::invalid_argument("record_experience: unknown source node '" + exp.s + "'");
    }
    Eigen::VectorXd rho = exp.rho;
    if (rho.size() != exp.kind.param_dim) {
        throw std::domain_error("record_experience: parameter dimension mismatch");
    }
    if (exp.kind.circular && rho.size() == 1) {
        rho(0) = wrap_pi(rho(0));
    }
    if (!exp.kind.in_bounds(rho)) {
        throw std::domain_error("record_experience: parameter out of bounds");
    }

    UpdateOutcome out;
    if (model.nodes.find(exp.s_prime) == model.nodes.end()) {
        get_or_create_node(model, exp.s_prime);
        out.novel_node = true;
    }

    EdgeKey ek{exp.s, exp.kind.name, exp.s_prime};
    auto it = model.edges.find(ek);
    if (it == model.edges.end()) {
        ActionEdge e;
        e.src = exp.s;
        e.dst = exp.s_prime;
        e.kind = exp.kind;
        auto [ins, ok] = model.edges.emplace(ek, std::move(e));
        it = ins;
        out.novel_edge = true;
    } else {
        out.norm_km1 = spectral_norm(it->second.dist.cov);
    }

    ActionEdge& edge = it->second;
    edge.samples.push_back(rho);
    edge.dist = edge.kind.circular ? fit_gaussian_circular(edge.samples, thin_var)
                                   : fit_gaussian(edge.samples, thin_var);
    edge.visit_count += 1;
    out.norm_k = spectral_norm(edge.dist.cov);
    return out;
}

/// Empirical transition distribution from `s` under `kind`, proportional to
/// edge visit counts. Empty map when no such edges exist.
inline std::map<std::string, double> transition_dist(const AtgModel& model, const std::string& s,
                                                     Action kind) {
    if (model.nodes.find(s) == model.nodes.end()) {
        throw std::invalid_argument("transition_dist: unknown node '" + s + "'");
    }
    std::map<std::string, double> probs;
    long total = 0;
    for (auto it = model.edges.lower_bound(EdgeKey{s, kind, ""}); it != model.edges.end(); ++it) {
        if (it->first.src != s || it->first.kind != kind) break;
        probs[it->first.dst] = static_cast<double>(it->second.visit_count);
        total += it->second.visit_count;
    }
    if (total > 0) {
        for (auto& [k, v] : probs) v /= static_cast<double>(total);
    }
    return probs;
}

/// Structural integrity: every edge endpoint resolves to a node, every node
/// feature id resolves, and non-bare nodes reproduce their key.
inline void validate_model(const AtgModel& model) {
    for (const auto& [key, node] : model.nodes) {
        if (key != node.key) throw std::runtime_error("model: node key index mismatch");
        for (int id : node.feature_ids) {
            if (id < 0 || static_cast<size_t>(id) >= model.features.size()) {
                throw std::runtime_error("model: node '" + key + "' references missing feature " +
                                         std::to_string(id));
            }
        }
        if (!node.feature_ids.empty() && key_for_ids(model, node.feature_ids) != key) {
            throw std::runtime_error("model: node '" + key + "' key does not match its features");
        }
    }
    for (const auto& [ek, edge] : model.edges) {
        if (model.nodes.find(edge.src) == model.nodes.end() ||
            model.nodes.find(edge.dst) == model.nodes.end()) {
            throw std::runtime_error("model: edge " + edge.src + " -> " + edge.dst +
                                     " references a missing node");
        }
        if (static_cast<long>(edge.samples.size()) != edge.dist.n_samples) {
            throw std::runtime_error("model: edge sample count disagrees with its fit");
        }
    }
}

}  // namespace atg
