#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "booster.hpp"
#include "dataset.hpp"
#include "model.hpp"

namespace smoothboost {

class ThreadPool;

double rmse(const std::vector<double>& actual, const std::vector<double>& predicted);

// A model under evaluation: fit returns a predictor closure plus an optional
// diagnostic note (e.g. the OLS ridge-fallback flag).
struct FittedModel {
    std::function<std::vector<double>(const Dataset&)> predict;
    std::string note;
};

struct ModelSpec {
    std::string name;
    std::function<FittedModel(const Dataset& train, std::uint64_t fold_seed)> fit;
};

// Benchmarks: "mean" predicts the training-response mean; "ols" is linear
// least squares with intercept via normal equations (ridge 1e-10, flagged
// when the ridge is what made the system solvable).
std::vector<ModelSpec> benchmark_models();

// The boosting engine wrapped as a ModelSpec named "boost". Each fold trains
// with the fold's derived seed.
ModelSpec boost_model_spec(const Hyperparameters& params, ThreadPool& pool);

struct TTestResult {
    double p = 1.0;
    bool degenerate = false;
};

// Two-sided paired t-test on equal-length vectors (pairing by index).
// Identical vectors are flagged degenerate with p = 1.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct CvResult {
    int k = 0;
    std::vector<std::string> model_names;  // evaluation order
    std::map<std::string, std::vector<double>> per_fold_rmse;
    std::map<std::string, double> relative_table;  // mean RMSE / reference mean RMSE
    std::map<std::string, double> p_values;        // paired t vs champion
    std::string reference;
    std::string champion;
    std::vector<std::string> notes;
};

// Shuffle rows once by seed, cut k near-equal folds, fit every model on each
// held-in part and score the held-out fold. Model failures are rethrown with
// the model name and fold attached.
CvResult kfold_cv(const Dataset& data, const std::vector<ModelSpec>& models, int k,
                  const std::string& reference, const std::string& champion,
                  std::uint64_t seed);

// Derivative RMSE against a known truth, split by whether the target
// variable's value falls inside the [lo, hi] empirical quantile window of
// the evaluation points. Returns (inside, outside).
std::pair<double, double> derivative_recovery(const BoostEnsemble& model, const Dataset& points,
                                              int variable,
                                              const std::vector<double>& truth_partial,
                                              double lo, double hi, ThreadPool& pool);

struct SweepPoint {
    std::string label;
    Hyperparameters params;
};

// Expand a one-hyperparameter sweep against a base configuration.
// kind "shrinkage": a = values; "splits": a = integer values;
// "gamma": (a[i], b[i]) are interval endpoints.
std::vector<SweepPoint> make_sweep(const Hyperparameters& base, const std::string& kind,
                                   const std::vector<double>& a, const std::vector<double>& b);

struct TraceRun {
    std::string label;
    FitReport report;
};

// One fit per sweep point on identical data and seed; failures are rethrown
// with the sweep label attached.
std::vector<TraceRun> convergence_experiment(const Dataset& data,
                                             const std::vector<SweepPoint>& grid,
                                             ThreadPool& pool);

} // namespace smoothboost
