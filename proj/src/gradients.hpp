#pragma once

#include <cstddef>
#include <vector>

#include "dataset.hpp"
#include "model.hpp"

namespace smoothboost {

class ThreadPool;

// Exact derivative of one tree's output with respect to point[variable]:
// product-rule accumulation over the same split replay used for prediction.
// Splits on other variables contribute factor-only terms; saturated splits
// contribute zero slope.
double tree_partial(const SmoothTree& tree, const double* point, std::size_t dim, int variable);

// Exact derivative of the ensemble: sum over stages of
// shrinkage * rho_m * tree_partial. The baseline is a constant and drops out.
double ensemble_partial_row(const BoostEnsemble& model, const double* point, std::size_t dim,
                            int variable);

std::vector<double> ensemble_partial_dataset(const BoostEnsemble& model, const Dataset& data,
                                             int variable, ThreadPool& pool);

std::vector<double> ensemble_partial_matrix(const BoostEnsemble& model, const double* points,
                                            std::size_t n, std::size_t dim, int variable,
                                            ThreadPool& pool);

// Verification utility: max over points of
// |analytic - central_difference| / (|analytic| + |central| + 1e-12)
// with the central difference taken at x +/- step along `variable`.
double finite_difference_check(const BoostEnsemble& model, const double* points,
                               std::size_t n, std::size_t dim, int variable, double step,
                               ThreadPool& pool);

} // namespace smoothboost
