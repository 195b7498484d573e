#pragma once

#include <utility>
#include <vector>

#include "dataset.hpp"
#include "grower.hpp"
#include "model.hpp"

namespace smoothboost {

class ThreadPool;

struct FitReport {
    std::vector<double> rmse_trace;  // in-sample RMSE after each iteration
    std::vector<double> rho_trace;   // line-search coefficient per iteration
    double wall_time = 0.0;          // seconds
};

// Closed-form minimizer of sum_i (u_i - rho * fitted_i)^2, i.e.
// <u,fitted>/<fitted,fitted>; 0 when the learner is numerically null.
double line_search(const std::vector<double>& residuals, const std::vector<double>& fitted);

// Boosting driver: start from the response mean, repeatedly grow a tree on
// the current residuals, line-search its step, and advance by
// shrinkage * rho * tree. Each iteration grows its tree from an independent
// substream of params.seed, so results are reproducible at any thread count.
std::pair<BoostEnsemble, FitReport> fit(const Dataset& data, const Hyperparameters& params,
                                        ThreadPool& pool);

// Batch prediction over a dataset's rows (parallel across rows).
std::vector<double> predict_dataset(const BoostEnsemble& model, const Dataset& data,
                                    ThreadPool& pool);

// Batch prediction over a row-major buffer (n points of dim values each).
std::vector<double> predict_matrix(const BoostEnsemble& model, const double* points,
                                   std::size_t n, std::size_t dim, ThreadPool& pool);

} // namespace smoothboost
