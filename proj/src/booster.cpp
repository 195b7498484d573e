#include "booster.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace smoothboost {

double line_search(const std::vector<double>& residuals, const std::vector<double>& fitted) {
    if (residuals.size() != fitted.size())
        throw invalid_argument_error("line_search: vector lengths must match");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        num += residuals[i] * fitted[i];
        den += fitted[i] * fitted[i];
    }
    if (den < 1e-300) return 0.0;
    return num / den;
}

namespace {

// Per-tree training predictions. Row-parallel; each row writes its own slot,
// so the result is independent of the thread count.
std::vector<double> tree_predict_dataset(const SmoothTree& tree, const Dataset& data,
                                         ThreadPool& pool) {
    std::size_t n = data.rows();
    std::size_t m = data.cols();
    std::vector<double> out(n);
    pool.run(n, [&](std::size_t i) {
        std::vector<double> row(m);
        std::vector<double> bases(tree.slot_count());
        data.gather_row(i, row.data());
        tree.compute_bases(row.data(), bases.data());
        double y = 0.0;
        for (std::size_t l = 0; l < tree.leaves.size(); ++l)
            y += tree.leaves[l].weight * bases[tree.leaf_slot[l]];
        out[i] = y;
    });
    return out;
}

} // namespace

std::pair<BoostEnsemble, FitReport> fit(const Dataset& data, const Hyperparameters& params,
                                        ThreadPool& pool) {
    auto start = std::chrono::steady_clock::now();
    params.validate();
    data.validate();
    if (!data.has_response())
        throw invalid_argument_error("fit: dataset has no response column");
    std::size_t n = data.rows();
    if (n < 2) throw invalid_argument_error("fit: need at least 2 rows");

    BoostEnsemble model;
    model.baseline = sample_mean(data.response);
    model.shrinkage = params.shrinkage;
    model.column_names = data.column_names;
    model.column_sd = data.column_sd;
    model.target_name = data.target_name;
    model.stages.reserve(static_cast<std::size_t>(params.num_trees));

    FitReport report;
    report.rmse_trace.reserve(static_cast<std::size_t>(params.num_trees));
    report.rho_trace.reserve(static_cast<std::size_t>(params.num_trees));

    // Location grids depend only on the data, so they are shared by all
    // trees of the fit.
    std::vector<std::vector<double>> grids = make_location_grids(data, params.threshold_grid);

    GrowthConfig config;
    config.splits = params.splits_per_tree;
    config.gamma_min = params.gamma_min;
    config.gamma_max = params.gamma_max;
    config.variable_fraction = params.variable_fraction;
    config.threshold_grid = params.threshold_grid;
    config.location_grids = &grids;

    std::vector<double> phi(n, model.baseline);
    std::vector<double> residuals(n);

    for (int m_it = 0; m_it < params.num_trees; ++m_it) {
        for (std::size_t i = 0; i < n; ++i) residuals[i] = data.response[i] - phi[i];
        config.seed = derive_stream(params.seed, static_cast<std::uint64_t>(m_it));

        SmoothTree tree;
        try {
            tree = grow_tree(data, residuals, config, pool);
        } catch (const degenerate_data_error& e) {
            throw degenerate_data_error("iteration " + std::to_string(m_it + 1) + ": " + e.what());
        }

        std::vector<double> u_hat = tree_predict_dataset(tree, data, pool);
        double rho = line_search(residuals, u_hat);
        for (std::size_t i = 0; i < n; ++i) phi[i] += params.shrinkage * rho * u_hat[i];

        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = data.response[i] - phi[i];
            sse += e * e;
        }
        report.rmse_trace.push_back(std::sqrt(sse / static_cast<double>(n)));
        report.rho_trace.push_back(rho);
        model.stages.push_back(BoostStage{rho, std::move(tree)});
    }

    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(model), std::move(report)};
}

std::vector<double> predict_dataset(const BoostEnsemble& model, const Dataset& data,
                                    ThreadPool& pool) {
    if (data.cols() != model.num_features())
        throw invalid_argument_error("predict: dataset has " + std::to_string(data.cols()) +
                                     " columns, model expects " +
                                     std::to_string(model.num_features()));
    std::size_t n = data.rows();
    std::size_t m = data.cols();
    std::vector<double> out(n);
    pool.run(n, [&](std::size_t i) {
        std::vector<double> row(m);
        data.gather_row(i, row.data());
        out[i] = ensemble_predict_row(model, row.data(), m);
    });
    return out;
}

std::vector<double> predict_matrix(const BoostEnsemble& model, const double* points,
                                   std::size_t n, std::size_t dim, ThreadPool& pool) {
    if (dim != model.num_features())
        throw invalid_argument_error("predict: points have " + std::to_string(dim) +
                                     " dimensions, model expects " +
                                     std::to_string(model.num_features()));
    std::vector<double> out(n);
    pool.run(n, [&](std::size_t i) { out[i] = ensemble_predict_row(model, points + i * dim, dim); });
    return out;
}

} // namespace smoothboost
