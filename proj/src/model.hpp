#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace smoothboost {

// ---------------------------------------------------------------------------
// Transition function
// ---------------------------------------------------------------------------

// Soft split: 1/(1+exp(-slope*(x-location))), increasing in x. Arguments with
// |slope*(x-location)| >= 700 saturate to exactly 0 or 1 (the IEEE double
// overflow boundary for exp); everything in between uses the closed form.
// Inputs are validated by logistic(); the _unchecked variant is the hot-path
// core shared with tree evaluation.
inline double logistic_unchecked(double x, double slope, double location) {
    double t = slope * (x - location);
    if (t >= 700.0) return 1.0;
    if (t <= -700.0) return 0.0;
    return 1.0 / (1.0 + std::exp(-t));
}

double logistic(double x, double slope, double location);

// d/dx logistic = slope * L * (1-L); peaks at slope/4 when x = location and
// is exactly 0 in the saturated regions.
double logistic_derivative(double x, double slope, double location);

// ---------------------------------------------------------------------------
// Tree types
// ---------------------------------------------------------------------------

// One soft split. `position` is the heap index of the node that was split:
// its children live at 2*position+1 (the high-x side, weighted by L) and
// 2*position+2 (the low-x side, weighted by 1-L). `slope` is what the
// logistic actually uses; `raw_gamma` is the value drawn before dividing by
// the variable's standard deviation.
struct SplitNode {
    std::int64_t position = 0;
    int variable = 0;
    double location = 0.0;
    double slope = 1.0;
    double raw_gamma = 1.0;
};

// Terminal node. path_codes carries one entry per split in the tree:
// +1 when this leaf sits on the split's high (L) branch, 0 on the low (1-L)
// branch, -1 when the split is not an ancestor at all.
struct Leaf {
    std::int64_t position = 0;
    double weight = 0.0;
    std::map<std::int64_t, int> path_codes;
};

// A smooth transition regression tree: `splits` in the order they were
// created, `leaves` sorted by position. finalize() derives the compact slot
// layout used by evaluation and verifies every structural invariant.
class SmoothTree {
public:
    std::vector<SplitNode> splits;
    std::vector<Leaf> leaves;

    // Derived by finalize(): each node the tree ever created gets a dense
    // slot id (root = 0; split k's children = 2k+1, 2k+2), so evaluation
    // buffers are sized by node count rather than by heap position.
    std::vector<int> split_parent_slot;
    std::vector<int> leaf_slot;
    int max_variable = -1;

    int slot_count() const { return static_cast<int>(2 * splits.size() + 1); }

    // Rebuilds the slot layout, fills in missing leaf path codes, and checks
    // the structural invariants (child indexing, leaf/split counts, path-code
    // consistency, finite parameters). Throws corrupt_model_error naming the
    // violated invariant.
    void finalize();

    // Replays the splits in creation order, writing every node's basis value
    // for one input row into `bases` (length slot_count()). The arithmetic
    // matches incremental growth operation for operation, so a reloaded tree
    // reproduces training-time values bitwise.
    void compute_bases(const double* row, double* bases) const;

    // Same replay carrying d(basis)/d(x[variable]) alongside via the product
    // rule. dbases must also have slot_count() entries.
    void compute_bases_partial(const double* row, int variable,
                               double* bases, double* dbases) const;
};

// Soft membership weight of `leaf` for one input point: the product over the
// tree's splits of L (code +1), 1-L (code 0), or nothing (code -1), taken in
// split-creation order. An empty tree gives 1.
double leaf_basis(const SmoothTree& tree, const Leaf& leaf,
                  const double* point, std::size_t dim);

// Sum over leaves of weight * basis; bounded by [min weight, max weight]
// because the bases form a partition of unity.
double tree_predict(const SmoothTree& tree, const double* point, std::size_t dim);

// ---------------------------------------------------------------------------
// Ensemble
// ---------------------------------------------------------------------------

struct BoostStage {
    double rho = 0.0;
    SmoothTree tree;
};

// Fitted boosting model: prediction = baseline + sum_m shrinkage * rho_m *
// tree_m(x). Column metadata is carried so a serialized model is
// self-contained at prediction time.
struct BoostEnsemble {
    double baseline = 0.0;
    double shrinkage = 1.0;
    std::vector<BoostStage> stages;
    std::vector<std::string> column_names;
    std::vector<double> column_sd;
    std::string target_name;

    std::size_t num_features() const { return column_names.size(); }

    // Finalizes every stage's tree in place (rebuilding the derived slot
    // layout) and checks the ensemble-level invariants (ranges, finiteness,
    // variable indices within the column count). Must run after
    // deserialization, before any prediction. Throws corrupt_model_error.
    void finalize();

    // The same checks without mutating (works on a copy).
    void validate() const;
};

double ensemble_predict_row(const BoostEnsemble& model, const double* point, std::size_t dim);

// ---------------------------------------------------------------------------
// Hyperparameters
// ---------------------------------------------------------------------------

struct Hyperparameters {
    int num_trees = 1000;
    int splits_per_tree = 4;
    double gamma_min = 0.5;
    double gamma_max = 5.0;
    double shrinkage = 0.2;
    double variable_fraction = 2.0 / 3.0;
    int threshold_grid = 100;
    std::uint64_t seed = 42;

    // Throws invalid_argument_error quoting the violated range.
    void validate() const;
};

} // namespace smoothboost
