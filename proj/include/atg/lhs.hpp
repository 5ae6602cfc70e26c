#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "atg/model.hpp"

namespace atg {

/// Latin hypercube sampler over one action's parameter box. Each cycle pairs
/// the per-dimension strata so that every stratum of every dimension is used
/// exactly once; a fresh pairing is generated when the cycle is exhausted.
/// Zero-dimensional kinds degenerate to a single empty-parameter cell.
class LhsGrid {
  public:
    LhsGrid(ActionKind kind, int strata, std::uint64_t seed)
        : kind_(std::move(kind)), strata_(strata), rng_(seed) {
        if (strata_ < 1) throw std::invalid_argument("lhs: strata must be >= 1");
        refill();
    }

    const ActionKind& kind() const { return kind_; }
    int strata() const { return strata_; }
    size_t cells_remaining() const { return unused_cells_.size(); }
    long completed_cycles() const { return completed_cycles_; }

    /// Cells of one full cycle (strata of them, or one when param_dim == 0).
    size_t cycle_length() const {
        return kind_.param_dim == 0 ? 1 : static_cast<size_t>(strata_);
    }

    /// Picks an unused cell uniformly, samples uniformly inside it, and
    /// marks the cell used. Refills with a fresh pairing when exhausted.
    Eigen::VectorXd draw() {
        if (unused_cells_.empty()) refill();
        std::uniform_int_distribution<size_t> pick(0, unused_cells_.size() - 1);
        const size_t idx = pick(rng_);
        const std::vector<int> cell = unused_cells_[idx];
        unused_cells_.erase(unused_cells_.begin() + static_cast<std::ptrdiff_t>(idx));

        Eigen::VectorXd rho(kind_.param_dim);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (int d = 0; d < kind_.param_dim; ++d) {
            const double lo = kind_.bounds[d][0];
            const double hi = kind_.bounds[d][1];
            const double w = (hi - lo) / static_cast<double>(strata_);
            rho(d) = lo + (static_cast<double>(cell[d]) + u01(rng_)) * w;
        }
        if (unused_cells_.empty()) ++completed_cycles_;
        return rho;
    }

  private:
    void refill() {
        unused_cells_.clear();
        if (kind_.param_dim == 0) {
            unused_cells_.push_back({});
            return;
        }
        std::vector<std::vector<int>> perms(kind_.param_dim);
        for (auto& p : perms) {
            p.resize(static_cast<size_t>(strata_));
            std::iota(p.begin(), p.end(), 0);
            std::shuffle(p.begin(), p.end(), rng_);
        }
        for (int j = 0; j < strata_; ++j) {
            std::vector<int> cell(kind_.param_dim);
            for (int d = 0; d < kind_.param_dim; ++d) cell[d] = perms[d][j];
            unused_cells_.push_back(std::move(cell));
        }
    }

    ActionKind kind_;
    int strata_;
    std::vector<std::vector<int>> unused_cells_;
    std::mt19937_64 rng_;
    long completed_cycles_ = 0;
};

inline LhsGrid lhs_init(const ActionKind& kind, int strata, std::uint64_t seed) {
    return LhsGrid(kind, strata, seed);
}

inline Eigen::VectorXd lhs_draw(LhsGrid& grid) { return grid.draw(); }

}  // namespace atg
