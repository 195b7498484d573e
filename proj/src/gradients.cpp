#include "gradients.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"
#include "parallel.hpp"

namespace smoothboost {

double tree_partial(const SmoothTree& tree, const double* point, std::size_t dim, int variable) {
    if (tree.max_variable >= 0 && static_cast<std::size_t>(tree.max_variable) >= dim)
        throw invalid_argument_error("tree_partial: point has fewer dimensions than the tree uses");
    if (variable < 0 || static_cast<std::size_t>(variable) >= dim)
        throw invalid_argument_error("tree_partial: variable index out of range");
    std::vector<double> bases(tree.slot_count());
    std::vector<double> dbases(tree.slot_count());
    tree.compute_bases_partial(point, variable, bases.data(), dbases.data());
    double d = 0.0;
    for (std::size_t l = 0; l < tree.leaves.size(); ++l)
        d += tree.leaves[l].weight * dbases[tree.leaf_slot[l]];
    return d;
}

double ensemble_partial_row(const BoostEnsemble& model, const double* point, std::size_t dim,
                            int variable) {
    if (dim != model.num_features())
        throw invalid_argument_error("partial: point has " + std::to_string(dim) +
                                     " dimensions, model expects " +
                                     std::to_string(model.num_features()));
    if (variable < 0 || static_cast<std::size_t>(variable) >= dim)
        throw invalid_argument_error("partial: variable index out of range");
    double d = 0.0;
    for (const BoostStage& stage : model.stages)
        d += model.shrinkage * stage.rho * tree_partial(stage.tree, point, dim, variable);
    return d;
}

std::vector<double> ensemble_partial_dataset(const BoostEnsemble& model, const Dataset& data,
                                             int variable, ThreadPool& pool) {
    if (data.cols() != model.num_features())
        throw invalid_argument_error("partial: dataset has " + std::to_string(data.cols()) +
                                     " columns, model expects " +
                                     std::to_string(model.num_features()));
    std::size_t n = data.rows();
    std::size_t m = data.cols();
    std::vector<double> out(n);
    pool.run(n, [&](std::size_t i) {
        std::vector<double> row(m);
        data.gather_row(i, row.data());
        out[i] = ensemble_partial_row(model, row.data(), m, variable);
    });
    return out;
}

std::vector<double> ensemble_partial_matrix(const BoostEnsemble& model, const double* points,
                                            std::size_t n, std::size_t dim, int variable,
                                            ThreadPool& pool) {
    std::vector<double> out(n);
    pool.run(n, [&](std::size_t i) {
        out[i] = ensemble_partial_row(model, points + i * dim, dim, variable);
    });
    return out;
}

double finite_difference_check(const BoostEnsemble& model, const double* points,
                               std::size_t n, std::size_t dim, int variable, double step,
                               ThreadPool& pool) {
    if (!(step > 0.0)) throw invalid_argument_error("finite_difference_check: step must be positive");
    if (variable < 0 || static_cast<std::size_t>(variable) >= dim)
        throw invalid_argument_error("finite_difference_check: variable index out of range");

    std::vector<double> rel(n);
    pool.run(n, [&](std::size_t i) {
        std::vector<double> row(points + i * dim, points + (i + 1) * dim);
        double analytic = ensemble_partial_row(model, row.data(), dim, variable);
        double x = row[static_cast<std::size_t>(variable)];
        row[static_cast<std::size_t>(variable)] = x + step;
        double hi = ensemble_predict_row(model, row.data(), dim);
        row[static_cast<std::size_t>(variable)] = x - step;
        double lo = ensemble_predict_row(model, row.data(), dim);
        double central = (hi - lo) / (2.0 * step);
        rel[i] = std::abs(analytic - central) /
                 (std::abs(analytic) + std::abs(central) + 1e-12);
    });
    double worst = 0.0;
    for (double r : rel) worst = std::max(worst, r);
    return worst;
}

} // namespace smoothboost
