#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dataset.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace smoothboost {

class ThreadPool;

// The winning tuple of one growth step: which terminal node to split, on
// which variable, where, how steeply, and the two closed-form child weights.
struct SplitCandidate {
    std::int64_t node = 0;
    int variable = 0;
    double location = 0.0;
    double slope = 1.0;     // effective (already divided by the column sd)
    double raw_gamma = 1.0;
    double beta_left = 0.0;   // child 2j+1, weighted by L
    double beta_right = 0.0;  // child 2j+2, weighted by 1-L
    double sse = 0.0;         // full-model SSE achieved by this candidate
};

struct GrowthConfig {
    int splits = 4;
    double gamma_min = 0.5;
    double gamma_max = 5.0;
    double variable_fraction = 2.0 / 3.0;
    int threshold_grid = 100;
    std::uint64_t seed = 0;

    // Test hooks. pinned_slope bypasses the gamma draw and uses the given
    // value as the effective slope for every split (raw_gamma is back-filled
    // as slope*sd so the stored-model invariant still holds). location_grids
    // overrides the per-column candidate locations (e.g. all midpoints for
    // hard-split comparisons). Borrowed pointer; caller keeps it alive.
    std::optional<double> pinned_slope;
    const std::vector<std::vector<double>>* location_grids = nullptr;

    void validate() const;
};

// Candidate split locations per column: the column's unique values when there
// are at most threshold_grid of them, otherwise threshold_grid equally spaced
// quantiles of the full column (nearest-rank, deduplicated). Columns with
// zero variance get an empty grid and are never searched.
std::vector<std::vector<double>> make_location_grids(const Dataset& data, int threshold_grid);

struct LeafSolve {
    double beta_left = 0.0;
    double beta_right = 0.0;
    double sse = 0.0;
    bool degenerate = false;  // both weight columns identically zero
};

// Least squares for the two new leaf weights with everything else frozen:
// minimizes sum_i (targets_i - offset_i - bl*w_left_i - br*w_right_i)^2 via
// the 2x2 normal equations with ridge 1e-10 on the diagonal. sse is the
// achieved objective (ridge excluded).
LeafSolve solve_leaf_weights(const std::vector<double>& w_left,
                             const std::vector<double>& w_right,
                             const std::vector<double>& offset,
                             const std::vector<double>& targets);

// Grows one tree step by step. Exposed (rather than just grow_tree) so the
// split search is unit-testable against exhaustive oracles.
class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const std::vector<double>& targets,
                const GrowthConfig& config, ThreadPool& pool);

    // One growth step: draws this step's randomness (variable subset, then
    // one gamma per chosen variable in ascending column order), scores every
    // (terminal node x chosen variable x grid location) candidate, and
    // returns the lexicographic minimum (sse, node position, variable,
    // location). Throws degenerate_data_error when nothing is solvable.
    SplitCandidate search_best_split();

    // Commits a candidate: the node becomes a split, its two children become
    // leaves with the candidate's weights.
    void apply(const SplitCandidate& cand);

    double current_sse() const;
    int splits_done() const { return static_cast<int>(splits_.size()); }

    // Assembles and validates the finished SmoothTree.
    SmoothTree finish() const;

private:
    struct NodeState {
        std::int64_t position;
        int slot;
        double weight;
    };

    void build_logistic_grid(int var, double slope, std::vector<double>& out) const;
    void refresh_fitted();

    const Dataset& data_;
    const std::vector<double>& targets_;
    GrowthConfig config_;
    ThreadPool& pool_;
    Rng rng_;

    std::size_t n_ = 0;
    std::vector<int> eligible_;                       // columns with sd > 0
    std::vector<double> column_mean_;                 // exp-factorization anchors
    std::vector<std::vector<double>> owned_grids_;    // used when config has none
    const std::vector<std::vector<double>>* grids_ = nullptr;

    std::vector<SplitNode> splits_;
    std::vector<NodeState> active_;                   // sorted by position
    std::vector<std::vector<double>> bases_;          // by slot
    std::vector<double> fitted_;
};

// Algorithm driver: `splits` consecutive best-split steps. If step_sse is
// given it receives the model SSE after every step (index 0 = before any
// split). N < 2 is an invalid-argument error; an unsplittable root (no
// usable variable or every candidate degenerate) is a degenerate-data error.
SmoothTree grow_tree(const Dataset& data, const std::vector<double>& targets,
                     const GrowthConfig& config, ThreadPool& pool,
                     std::vector<double>* step_sse = nullptr);

} // namespace smoothboost
