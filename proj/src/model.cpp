#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "errors.hpp"

namespace smoothboost {

double logistic(double x, double slope, double location) {
    if (!std::isfinite(x) || !std::isfinite(slope) || !std::isfinite(location))
        throw invalid_argument_error("logistic: inputs must be finite");
    if (!(slope > 0.0)) throw invalid_argument_error("logistic: slope must be positive");
    return logistic_unchecked(x, slope, location);
}

double logistic_derivative(double x, double slope, double location) {
    if (!std::isfinite(x) || !std::isfinite(slope) || !std::isfinite(location))
        throw invalid_argument_error("logistic_derivative: inputs must be finite");
    if (!(slope > 0.0)) throw invalid_argument_error("logistic_derivative: slope must be positive");
    double t = slope * (x - location);
    if (t >= 700.0 || t <= -700.0) return 0.0;
    double L = 1.0 / (1.0 + std::exp(-t));
    return slope * L * (1.0 - L);
}

namespace {

// Heap-position ancestry: code of `parent` on the path to `leaf_pos`.
// +1 when the path passes through the 2j+1 child, 0 through 2j+2, -1 when
// `parent` is not an ancestor.
int derive_path_code(std::int64_t leaf_pos, std::int64_t parent) {
    std::int64_t p = leaf_pos;
    while (p > 0) {
        std::int64_t up = (p - 1) / 2;
        if (up == parent) return p == 2 * parent + 1 ? 1 : 0;
        p = up;
    }
    return -1;
}

} // namespace

void SmoothTree::finalize() {
    // Replay the splits to assign slots; every split must act on a node that
    // is a leaf at that moment. Root (position 0) is the initial leaf.
    std::unordered_map<std::int64_t, int> slot_of;
    slot_of.reserve(2 * splits.size() + 2);
    slot_of[0] = 0;
    std::vector<bool> is_split_slot(slot_count(), false);

    split_parent_slot.assign(splits.size(), -1);
    max_variable = -1;

    for (std::size_t k = 0; k < splits.size(); ++k) {
        const SplitNode& s = splits[k];
        if (s.position < 0) throw corrupt_model_error("split position must be nonnegative");
        auto it = slot_of.find(s.position);
        if (it == slot_of.end())
            throw corrupt_model_error("split at position " + std::to_string(s.position) +
                                      " does not follow the 2j+1/2j+2 child indexing from the root");
        if (is_split_slot[it->second])
            throw corrupt_model_error("node at position " + std::to_string(s.position) + " is split twice");
        if (s.variable < 0) throw corrupt_model_error("split variable index must be nonnegative");
        if (!std::isfinite(s.location)) throw corrupt_model_error("split location must be finite");
        if (!(s.slope > 0.0) || !std::isfinite(s.slope))
            throw corrupt_model_error("split slope must be positive and finite");
        if (!(s.raw_gamma > 0.0) || !std::isfinite(s.raw_gamma))
            throw corrupt_model_error("split raw_gamma must be positive and finite");

        split_parent_slot[k] = it->second;
        is_split_slot[it->second] = true;
        slot_of[2 * s.position + 1] = static_cast<int>(2 * k + 1);
        slot_of[2 * s.position + 2] = static_cast<int>(2 * k + 2);
        max_variable = std::max(max_variable, s.variable);
    }

    if (leaves.size() != splits.size() + 1)
        throw corrupt_model_error("tree must have exactly one more leaf than splits");
    if (!std::is_sorted(leaves.begin(), leaves.end(),
                        [](const Leaf& a, const Leaf& b) { return a.position < b.position; }))
        throw corrupt_model_error("leaves must be sorted by position");

    leaf_slot.assign(leaves.size(), -1);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        Leaf& leaf = leaves[i];
        auto it = slot_of.find(leaf.position);
        if (it == slot_of.end() || is_split_slot[it->second])
            throw corrupt_model_error("leaf position " + std::to_string(leaf.position) +
                                      " is not a terminal node of the tree");
        if (i > 0 && leaves[i - 1].position == leaf.position)
            throw corrupt_model_error("duplicate leaf position " + std::to_string(leaf.position));
        if (!std::isfinite(leaf.weight))
            throw corrupt_model_error("leaf weight must be finite");
        leaf_slot[i] = it->second;

        // Path codes are derivable from positions; fill them when absent and
        // verify them when present so loaded files cannot lie.
        for (const SplitNode& s : splits) {
            int expected = derive_path_code(leaf.position, s.position);
            auto pc = leaf.path_codes.find(s.position);
            if (pc == leaf.path_codes.end()) {
                leaf.path_codes.emplace(s.position, expected);
            } else if (pc->second != expected) {
                throw corrupt_model_error("leaf " + std::to_string(leaf.position) +
                                          ": path code for parent " + std::to_string(s.position) +
                                          " should be " + std::to_string(expected));
            }
        }
        if (leaf.path_codes.size() != splits.size())
            throw corrupt_model_error("leaf " + std::to_string(leaf.position) +
                                      ": path_codes must carry one entry per split");
    }
}

void SmoothTree::compute_bases(const double* row, double* bases) const {
    bases[0] = 1.0;
    for (std::size_t k = 0; k < splits.size(); ++k) {
        const SplitNode& s = splits[k];
        double b = bases[split_parent_slot[k]];
        double L = logistic_unchecked(row[s.variable], s.slope, s.location);
        bases[2 * k + 1] = b * L;
        bases[2 * k + 2] = b * (1.0 - L);
    }
}

void SmoothTree::compute_bases_partial(const double* row, int variable,
                                       double* bases, double* dbases) const {
    bases[0] = 1.0;
    dbases[0] = 0.0;
    for (std::size_t k = 0; k < splits.size(); ++k) {
        const SplitNode& s = splits[k];
        int p = split_parent_slot[k];
        double b = bases[p];
        double db = dbases[p];
        double L = logistic_unchecked(row[s.variable], s.slope, s.location);
        bases[2 * k + 1] = b * L;
        bases[2 * k + 2] = b * (1.0 - L);
        if (s.variable == variable) {
            // Saturated L is exactly 0 or 1, so slope*L*(1-L) vanishes there
            // on its own — no separate clamp needed.
            double dL = s.slope * L * (1.0 - L);
            dbases[2 * k + 1] = db * L + b * dL;
            dbases[2 * k + 2] = db * (1.0 - L) - b * dL;
        } else {
            dbases[2 * k + 1] = db * L;
            dbases[2 * k + 2] = db * (1.0 - L);
        }
    }
}

double leaf_basis(const SmoothTree& tree, const Leaf& leaf,
                  const double* point, std::size_t dim) {
    if (tree.max_variable >= 0 && static_cast<std::size_t>(tree.max_variable) >= dim)
        throw invalid_argument_error("leaf_basis: point has fewer dimensions than the tree uses");
    bool found = false;
    for (const Leaf& l : tree.leaves) {
        if (l.position == leaf.position) { found = true; break; }
    }
    if (!found) throw invalid_argument_error("leaf_basis: leaf does not belong to the tree");

    double b = 1.0;
    for (const SplitNode& s : tree.splits) {
        auto it = leaf.path_codes.find(s.position);
        int code = it == leaf.path_codes.end() ? -1 : it->second;
        if (code == -1) continue;
        double L = logistic_unchecked(point[s.variable], s.slope, s.location);
        b *= code == 1 ? L : (1.0 - L);
    }
    return b;
}

double tree_predict(const SmoothTree& tree, const double* point, std::size_t dim) {
    if (tree.max_variable >= 0 && static_cast<std::size_t>(tree.max_variable) >= dim)
        throw invalid_argument_error("tree_predict: point has fewer dimensions than the tree uses");
    std::vector<double> bases(tree.slot_count());
    tree.compute_bases(point, bases.data());
    double y = 0.0;
    for (std::size_t i = 0; i < tree.leaves.size(); ++i) {
        y += tree.leaves[i].weight * bases[tree.leaf_slot[i]];
    }
    return y;
}

void BoostEnsemble::finalize() {
    if (!std::isfinite(baseline)) throw corrupt_model_error("baseline must be finite");
    if (!(shrinkage > 0.0) || !(shrinkage <= 1.0))
        throw corrupt_model_error("shrinkage must be in (0, 1]");
    if (column_names.empty()) throw corrupt_model_error("model must record at least one column");
    if (column_sd.size() != column_names.size())
        throw corrupt_model_error("column metadata is inconsistent");
    for (double sd : column_sd) {
        if (!std::isfinite(sd) || sd < 0.0)
            throw corrupt_model_error("column standard deviations must be finite and nonnegative");
    }
    for (std::size_t m = 0; m < stages.size(); ++m) {
        BoostStage& stage = stages[m];
        if (!std::isfinite(stage.rho))
            throw corrupt_model_error("stage " + std::to_string(m) + ": rho must be finite");
        try {
            stage.tree.finalize();
        } catch (const corrupt_model_error& e) {
            throw corrupt_model_error("stage " + std::to_string(m) + ": " + e.what());
        }
        if (stage.tree.max_variable >= static_cast<int>(column_names.size()))
            throw corrupt_model_error("stage " + std::to_string(m) +
                                      ": split variable index exceeds the column count");
    }
}

void BoostEnsemble::validate() const {
    BoostEnsemble copy = *this;
    copy.finalize();
}

double ensemble_predict_row(const BoostEnsemble& model, const double* point, std::size_t dim) {
    if (dim != model.num_features())
        throw invalid_argument_error("predict: point has " + std::to_string(dim) +
                                     " dimensions, model expects " +
                                     std::to_string(model.num_features()));
    double y = model.baseline;
    for (const BoostStage& stage : model.stages) {
        y += model.shrinkage * stage.rho * tree_predict(stage.tree, point, dim);
    }
    return y;
}

void Hyperparameters::validate() const {
    if (num_trees < 1) throw invalid_argument_error("num_trees must be >= 1");
    if (splits_per_tree < 1) throw invalid_argument_error("splits_per_tree must be >= 1");
    if (!(gamma_min > 0.0) || !(gamma_min <= gamma_max) || !std::isfinite(gamma_max))
        throw invalid_argument_error("gamma range requires 0 < gamma_min <= gamma_max");
    if (!(shrinkage > 0.0) || !(shrinkage <= 1.0))
        throw invalid_argument_error("shrinkage must be in (0, 1]");
    if (!(variable_fraction > 0.0) || !(variable_fraction <= 1.0))
        throw invalid_argument_error("variable_fraction must be in (0, 1]");
    if (threshold_grid < 1) throw invalid_argument_error("threshold_grid must be >= 1");
}

} // namespace smoothboost
