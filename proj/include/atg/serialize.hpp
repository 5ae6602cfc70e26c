#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "atg/model.hpp"

namespace atg {

inline constexpr int kAtgFormatVersion = 1;

/// Shortest decimal form that parses back to the same double.
inline std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

inline double parse_double(const std::string& tok, int line) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
        throw ParseError(line, "bad number '" + tok + "'");
    }
    return v;
}

inline long parse_long(const std::string& tok, int line) {
    long v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
        throw ParseError(line, "bad integer '" + tok + "'");
    }
    return v;
}

/// Reads lines, skipping blank and '#' comment lines, tracking line numbers.
class LineReader {
  public:
    explicit LineReader(const std::string& text) : in_(text) {}

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            size_t i = line.find_first_not_of(" \t");
            if (i == std::string::npos) continue;
            if (line[i] == '#') continue;
            return true;
        }
        return false;
    }

    int line_no() const { return line_no_; }

  private:
    std::istringstream in_;
    int line_no_ = 0;
};

}  // namespace detail

/// Writes the model as a line-oriented text document. Maps iterate in key
/// order, so equal models serialize identically.
inline std::string serialize(const AtgModel& model, const std::string& header_comment = "") {
    std::string out;
    if (!header_comment.empty()) {
        out += "# " + header_comment + "\n";
    }
    out += "atg_version: " + std::to_string(kAtgFormatVersion) + "\n";
    out += "features: " + std::to_string(model.features.size()) + "\n";
    for (const auto& f : model.features) {
        out += "f " + std::to_string(f.id) + " " + f.ftype + " " + f.value;
        for (int i = 0; i < 3; ++i) out += " " + fmt_double(f.pos_mean(i));
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out += " " + fmt_double(f.pos_cov(r, c));
        out += "\n";
    }
    out += "nodes: " + std::to_string(model.nodes.size()) + "\n";
    for (const auto& [key, node] : model.nodes) {
        out += "n " + key + " " + std::to_string(node.feature_ids.size());
        for (int id : node.feature_ids) out += " " + std::to_string(id);
        out += "\n";
    }
    out += "edges: " + std::to_string(model.edges.size()) + "\n";
    for (const auto& [ek, e] : model.edges) {
        out += "e " + e.src + " " + std::string(to_string(e.kind.name)) + " " + e.dst + " " +
               std::to_string(e.visit_count) + " " + fmt_double(e.q) + " " +
               fmt_double(e.last_reward) + " " + std::to_string(e.samples.size()) + "\n";
        const int d = e.dist.dim();
        out += "g " + std::to_string(d);
        for (int i = 0; i < d; ++i) out += " " + fmt_double(e.dist.mean(i));
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) out += " " + fmt_double(e.dist.cov(r, c));
        out += "\n";
        for (const auto& s : e.samples) {
            out += "s";
            for (int i = 0; i < s.size(); ++i) out += " " + fmt_double(s(i));
            out += "\n";
        }
    }
    return out;
}

/// Parses a document produced by serialize(). Rejects malformed input and
/// referential breakage with the offending line number.
inline AtgModel deserialize(const std::string& text) {
    using detail::parse_double;
    using detail::parse_long;
    detail::LineReader rd(text);
    std::string line;

    auto expect = [&](const char* what) {
        if (!rd.next(line)) throw ParseError(rd.line_no() + 1, std::string("expected ") + what);
    };

    expect("atg_version header");
    {
        auto toks = detail::split_ws(line);
        if (toks.size() != 2 || toks[0] != "atg_version:") {
            throw ParseError(rd.line_no(), "expected 'atg_version: 1'");
        }
        if (parse_long(toks[1], rd.line_no()) != kAtgFormatVersion) {
            throw ParseError(rd.line_no(), "unsupported atg_version " + toks[1]);
        }
    }

    AtgModel model;

    expect("features count");
    auto toks = detail::split_ws(line);
    if (toks.size() != 2 || toks[0] != "features:") {
        throw ParseError(rd.line_no(), "expected 'features: <count>'");
    }
    long n_features = parse_long(toks[1], rd.line_no());
    for (long i = 0; i < n_features; ++i) {
        expect("feature record");
        toks = detail::split_ws(line);
        if (toks.size() != 16 || toks[0] != "f") {
            throw ParseError(rd.line_no(), "malformed feature record");
        }
        Feature f;
        f.id = static_cast<int>(parse_long(toks[1], rd.line_no()));
        if (f.id != static_cast<int>(model.features.size())) {
            throw ParseError(rd.line_no(), "feature ids must be dense and ordered");
        }
        f.ftype = toks[2];
        f.value = toks[3];
        if (model.find_feature(f.ftype, f.value) != nullptr) {
            throw ParseError(rd.line_no(), "duplicate feature " + f.ftype + ":" + f.value);
        }
        int t = 4;
        for (int k = 0; k < 3; ++k) f.pos_mean(k) = parse_double(toks[t++], rd.line_no());
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) f.pos_cov(r, c) = parse_double(toks[t++], rd.line_no());
        model.features.push_back(std::move(f));
    }

    expect("nodes count");
    toks = detail::split_ws(line);
    if (toks.size() != 2 || toks[0] != "nodes:") {
        throw ParseError(rd.line_no(), "expected 'nodes: <count>'");
    }
    long n_nodes = parse_long(toks[1], rd.line_no());
    for (long i = 0; i < n_nodes; ++i) {
        expect("node record");
        toks = detail::split_ws(line);
        if (toks.size() < 3 || toks[0] != "n") {
            throw ParseError(rd.line_no(), "malformed node record");
        }
        AspectNode node;
        node.key = toks[1];
        long n_ids = parse_long(toks[2], rd.line_no());
        if (static_cast<long>(toks.size()) != 3 + n_ids) {
            throw ParseError(rd.line_no(), "node feature id count mismatch");
        }
        for (long k = 0; k < n_ids; ++k) {
            int id = static_cast<int>(parse_long(toks[3 + k], rd.line_no()));
            if (id < 0 || static_cast<size_t>(id) >= model.features.size()) {
                throw ParseError(rd.line_no(), "node references missing feature " +
                                                   std::to_string(id));
            }
            node.feature_ids.push_back(id);
        }
        if (model.nodes.count(node.key)) {
            throw ParseError(rd.line_no(), "duplicate node '" + node.key + "'");
        }
        model.nodes.emplace(node.key, std::move(node));
    }

    expect("edges count");
    toks = detail::split_ws(line);
    if (toks.size() != 2 || toks[0] != "edges:") {
        throw ParseError(rd.line_no(), "expected 'edges: <count>'");
    }
    long n_edges = parse_long(toks[1], rd.line_no());
    for (long i = 0; i < n_edges; ++i) {
        expect("edge record");
        toks = detail::split_ws(line);
        if (toks.size() != 8 || toks[0] != "e") {
            throw ParseError(rd.line_no(), "malformed edge record");
        }
        ActionEdge e;
        e.src = toks[1];
        try {
            e.kind = kind_by_name(action_from_string(toks[2]));
        } catch (const std::invalid_argument& ex) {
            throw ParseError(rd.line_no(), ex.what());
        }
        e.dst = toks[3];
        if (!model.nodes.count(e.src) || !model.nodes.count(e.dst)) {
            throw ParseError(rd.line_no(),
                             "edge " + e.src + " -> " + e.dst + " references a missing node");
        }
        e.visit_count = parse_long(toks[4], rd.line_no());
        e.q = parse_double(toks[5], rd.line_no());
        e.last_reward = parse_double(toks[6], rd.line_no());
        long n_samples = parse_long(toks[7], rd.line_no());

        expect("edge distribution");
        toks = detail::split_ws(line);
        if (toks.size() < 2 || toks[0] != "g") {
            throw ParseError(rd.line_no(), "malformed distribution record");
        }
        int d = static_cast<int>(parse_long(toks[1], rd.line_no()));
        if (d != e.kind.param_dim) {
            throw ParseError(rd.line_no(), "distribution dimension does not match action kind");
        }
        if (static_cast<int>(toks.size()) != 2 + d + d * d) {
            throw ParseError(rd.line_no(), "distribution record length mismatch");
        }
        e.dist.mean = Eigen::VectorXd(d);
        e.dist.cov = Eigen::MatrixXd(d, d);
        int t = 2;
        for (int k = 0; k < d; ++k) e.dist.mean(k) = parse_double(toks[t++], rd.line_no());
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) e.dist.cov(r, c) = parse_double(toks[t++], rd.line_no());
        e.dist.n_samples = static_cast<int>(n_samples);

        for (long k = 0; k < n_samples; ++k) {
            expect("edge sample");
            toks = detail::split_ws(line);
            if (toks.empty() || toks[0] != "s" ||
                static_cast<int>(toks.size()) != 1 + e.kind.param_dim) {
                throw ParseError(rd.line_no(), "malformed sample record");
            }
            Eigen::VectorXd s(e.kind.param_dim);
            for (int j = 0; j < e.kind.param_dim; ++j) {
                s(j) = parse_double(toks[1 + j], rd.line_no());
            }
            e.samples.push_back(std::move(s));
        }

        EdgeKey ek{e.src, e.kind.name, e.dst};
        if (model.edges.count(ek)) {
            throw ParseError(rd.line_no(), "duplicate edge");
        }
        model.edges.emplace(ek, std::move(e));
    }

    if (rd.next(line)) {
        throw ParseError(rd.line_no(), "trailing content after model document");
    }
    return model;
}

/// True when the two models agree field for field, including sample order.
inline bool models_equal(const AtgModel& a, const AtgModel& b) {
    return serialize(a) == serialize(b);
}

/// GraphViz rendering with one node per aspect and one labeled edge per
/// transition; output is deterministic (map order, fixed formatting).
inline std::string export_dot(const AtgModel& model, const std::string& header_comment = "") {
    std::string out;
    if (!header_comment.empty()) out += "// " + header_comment + "\n";
    out += "digraph atg {\n";
    out += "  rankdir=LR;\n";
    out += "  node [shape=box];\n";
    for (const auto& [key, node] : model.nodes) {
        out += "  \"" + key + "\";\n";
    }
    for (const auto& [ek, e] : model.edges) {
        std::string label = std::string(to_string(e.kind.name));
        if (e.dist.dim() > 0) {
            label += " mu=(";
            for (int i = 0; i < e.dist.dim(); ++i) {
                if (i > 0) label += ",";
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.3f", e.dist.mean(i));
                label += buf;
            }
            label += ")";
        }
        label += " n=" + std::to_string(e.visit_count);
        out += "  \"" + e.src + "\" -> \"" + e.dst + "\" [label=\"" + label + "\"];\n";
    }
    out += "}\n";
    return out;
}

}  // namespace atg
