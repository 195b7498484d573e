#include "evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "errors.hpp"
#include "gradients.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace smoothboost {

namespace {

constexpr std::uint64_t kShuffleSalt = 0xF01D5U;
constexpr std::uint64_t kFoldSaltBase = 0xB005EU;

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Linear least squares with intercept via normal equations. A small ridge
// keeps the Cholesky factorization alive on collinear designs; when the
// ridge is what made a pivot positive the fit is flagged so callers know
// the coefficients are regularized rather than exact OLS.
struct OlsFit {
    std::vector<double> coef;  // [intercept, per-feature slopes]
    bool ridge_fallback = false;
};

OlsFit fit_ols(const Dataset& train) {
    const std::size_t n = train.rows();
    const std::size_t m = train.cols();
    const std::size_t p = m + 1;
    const std::vector<double>& y = train.response;

    std::vector<double> gram(p * p, 0.0);
    std::vector<double> rhs(p, 0.0);
    std::vector<double> row(p, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) row[j + 1] = train.value(i, j);
        for (std::size_t a = 0; a < p; ++a) {
            rhs[a] += row[a] * y[i];
            for (std::size_t b = a; b < p; ++b) gram[a * p + b] += row[a] * row[b];
        }
    }
    constexpr double kRidge = 1e-10;
    for (std::size_t a = 0; a < p; ++a) gram[a * p + a] += kRidge;

    // In-place Cholesky on the upper triangle; track the pivot range.
    std::vector<double> chol(gram);
    double min_pivot = std::numeric_limits<double>::infinity();
    double max_pivot = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
        double d = chol[a * p + a];
        for (std::size_t k = 0; k < a; ++k) d -= chol[k * p + a] * chol[k * p + a];
        if (!(d > 0.0))
            throw degenerate_data_error("least-squares normal equations are not positive definite");
        min_pivot = std::min(min_pivot, d);
        max_pivot = std::max(max_pivot, d);
        const double l = std::sqrt(d);
        chol[a * p + a] = l;
        for (std::size_t b = a + 1; b < p; ++b) {
            double s = chol[a * p + b];
            for (std::size_t k = 0; k < a; ++k) s -= chol[k * p + a] * chol[k * p + b];
            chol[a * p + b] = s / l;
        }
    }

    // Solve L' \ (L \ rhs).
    std::vector<double> z(p, 0.0);
    for (std::size_t a = 0; a < p; ++a) {
        double s = rhs[a];
        for (std::size_t k = 0; k < a; ++k) s -= chol[k * p + a] * z[k];
        z[a] = s / chol[a * p + a];
    }
    OlsFit fit;
    fit.coef.assign(p, 0.0);
    for (std::size_t a = p; a-- > 0;) {
        double s = z[a];
        for (std::size_t b = a + 1; b < p; ++b) s -= chol[a * p + b] * fit.coef[b];
        fit.coef[a] = s / chol[a * p + a];
    }
    // A pivot at ridge scale (absolute or relative to the largest pivot)
    // means the unregularized system was singular to working precision.
    fit.ridge_fallback = min_pivot <= 1e-7 || min_pivot <= 1e-7 * max_pivot;
    return fit;
}

} // namespace

double rmse(const std::vector<double>& actual, const std::vector<double>& predicted) {
    if (actual.empty()) throw invalid_argument_error("rmse requires at least one value");
    if (actual.size() != predicted.size())
        throw invalid_argument_error("rmse requires vectors of equal length");
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double d = actual[i] - predicted[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(actual.size()));
}

std::vector<ModelSpec> benchmark_models() {
    std::vector<ModelSpec> specs;

    specs.push_back({"mean", [](const Dataset& train, std::uint64_t) {
                         if (!train.has_response())
                             throw invalid_argument_error("mean model requires a response");
                         const double mu = sample_mean(train.response);
                         FittedModel fm;
                         fm.predict = [mu](const Dataset& test) {
                             return std::vector<double>(test.rows(), mu);
                         };
                         return fm;
                     }});

    specs.push_back({"ols", [](const Dataset& train, std::uint64_t) {
                         if (!train.has_response())
                             throw invalid_argument_error("ols model requires a response");
                         OlsFit fit = fit_ols(train);
                         const std::size_t m = train.cols();
                         FittedModel fm;
                         if (fit.ridge_fallback) fm.note = "ridge fallback on rank-deficient design";
                         fm.predict = [coef = std::move(fit.coef), m](const Dataset& test) {
                             if (test.cols() != m)
                                 throw invalid_argument_error(
                                     "ols prediction data has a different feature count than training data");
                             std::vector<double> out(test.rows());
                             for (std::size_t i = 0; i < test.rows(); ++i) {
                                 double v = coef[0];
                                 for (std::size_t j = 0; j < m; ++j)
                                     v += coef[j + 1] * test.value(i, j);
                                 out[i] = v;
                             }
                             return out;
                         };
                         return fm;
                     }});

    return specs;
}

ModelSpec boost_model_spec(const Hyperparameters& params, ThreadPool& pool) {
    ModelSpec spec;
    spec.name = "boost";
    spec.fit = [params, &pool](const Dataset& train, std::uint64_t fold_seed) {
        Hyperparameters fold_params = params;
        fold_params.seed = fold_seed;
        auto [model, report] = fit(train, fold_params, pool);
        auto shared = std::make_shared<BoostEnsemble>(std::move(model));
        FittedModel fm;
        fm.predict = [shared, &pool](const Dataset& test) {
            return predict_dataset(*shared, test, pool);
        };
        return fm;
    };
    return spec;
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw invalid_argument_error("paired t-test requires vectors of equal length");
    if (a.size() < 2) throw invalid_argument_error("paired t-test requires at least two pairs");
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double mu = mean_of(d);
    const double sd = sample_sd(d);
    if (sd == 0.0) {
        // Zero spread: identical vectors give p = 1, a constant nonzero
        // difference is "infinitely significant". Both lack a finite t.
        return {mu == 0.0 ? 1.0 : 0.0, true};
    }
    const double t = mu / (sd / std::sqrt(static_cast<double>(n)));
    boost::math::students_t_distribution<double> dist(static_cast<double>(n - 1));
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
    return {p, false};
}

CvResult kfold_cv(const Dataset& data, const std::vector<ModelSpec>& models, int k,
                  const std::string& reference, const std::string& champion,
                  std::uint64_t seed) {
    data.validate();
    if (!data.has_response()) throw invalid_argument_error("cross-validation requires a response");
    if (models.empty()) throw invalid_argument_error("cross-validation requires at least one model");
    if (k < 2) throw invalid_argument_error("fold count must be at least 2");
    if (static_cast<std::size_t>(k) > data.rows())
        throw invalid_argument_error("fold count exceeds the number of rows");

    CvResult result;
    result.k = k;
    result.reference = reference;
    result.champion = champion;
    std::set<std::string> seen;
    for (const ModelSpec& spec : models) {
        if (!seen.insert(spec.name).second)
            throw invalid_argument_error("duplicate model name '" + spec.name + "'");
        result.model_names.push_back(spec.name);
        result.per_fold_rmse[spec.name] = std::vector<double>();
    }
    if (!seen.count(reference))
        throw invalid_argument_error("reference model '" + reference + "' is not in the model list");
    if (!seen.count(champion))
        throw invalid_argument_error("champion model '" + champion + "' is not in the model list");

    const std::size_t n = data.rows();
    Rng shuffler(derive_stream(seed, kShuffleSalt));
    const std::vector<std::size_t> order = shuffled_indices(n, shuffler);

    std::set<std::string> note_set;
    for (int f = 0; f < k; ++f) {
        const std::size_t lo = (static_cast<std::size_t>(f) * n) / static_cast<std::size_t>(k);
        const std::size_t hi = (static_cast<std::size_t>(f) + 1) * n / static_cast<std::size_t>(k);
        std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                          order.begin() + static_cast<std::ptrdiff_t>(hi));
        std::vector<std::size_t> train_idx;
        train_idx.reserve(n - test_idx.size());
        train_idx.insert(train_idx.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(lo));
        train_idx.insert(train_idx.end(), order.begin() + static_cast<std::ptrdiff_t>(hi), order.end());

        const Dataset train = data.subset(train_idx);
        const Dataset test = data.subset(test_idx);
        const std::uint64_t fold_seed = derive_stream(seed, kFoldSaltBase + static_cast<std::uint64_t>(f));

        for (const ModelSpec& spec : models) {
            const std::string where = "model '" + spec.name + "' failed on fold " + std::to_string(f) + ": ";
            try {
                FittedModel fm = spec.fit(train, fold_seed);
                if (!fm.note.empty())
                    note_set.insert(spec.name + " fold " + std::to_string(f) + ": " + fm.note);
                const std::vector<double> pred = fm.predict(test);
                result.per_fold_rmse[spec.name].push_back(rmse(test.response, pred));
            } catch (const invalid_argument_error& e) {
                throw invalid_argument_error(where + e.what());
            } catch (const degenerate_data_error& e) {
                throw degenerate_data_error(where + e.what());
            } catch (const io_error& e) {
                throw io_error(where + e.what());
            } catch (const std::exception& e) {
                throw std::runtime_error(where + e.what());
            }
        }
    }

    const double ref_mean = mean_of(result.per_fold_rmse.at(reference));
    for (const std::string& name : result.model_names) {
        result.relative_table[name] = mean_of(result.per_fold_rmse.at(name)) / ref_mean;
        const TTestResult t = paired_t_test(result.per_fold_rmse.at(champion),
                                            result.per_fold_rmse.at(name));
        result.p_values[name] = t.p;
        if (t.degenerate) {
            if (name == champion)
                note_set.insert("p-value of '" + name + "' against itself is degenerate and fixed at 1");
            else
                note_set.insert("paired t-test of '" + champion + "' vs '" + name +
                                "' is degenerate (zero variance of differences)");
        }
    }
    result.notes.assign(note_set.begin(), note_set.end());
    return result;
}

std::pair<double, double> derivative_recovery(const BoostEnsemble& model, const Dataset& points,
                                              int variable,
                                              const std::vector<double>& truth_partial,
                                              double lo, double hi, ThreadPool& pool) {
    if (variable < 0 || static_cast<std::size_t>(variable) >= points.cols())
        throw invalid_argument_error("variable index out of range");
    if (truth_partial.size() != points.rows())
        throw invalid_argument_error("truth vector length does not match the number of points");
    if (!(lo >= 0.0 && hi <= 1.0 && lo < hi))
        throw invalid_argument_error("quantile window must satisfy 0 <= lo < hi <= 1");

    const std::vector<double> partial = ensemble_partial_dataset(model, points, variable, pool);

    std::vector<double> sorted(points.columns[static_cast<std::size_t>(variable)]);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    auto quantile = [&](double p) {
        if (p <= 0.0) return sorted.front();
        if (p >= 1.0) return sorted.back();
        const std::size_t idx = std::min(n - 1, static_cast<std::size_t>(
                                                    std::floor(p * static_cast<double>(n))));
        return sorted[idx];
    };
    const double q_lo = quantile(lo);
    const double q_hi = quantile(hi);

    double sum_in = 0.0, sum_out = 0.0;
    std::size_t n_in = 0, n_out = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = points.value(i, static_cast<std::size_t>(variable));
        const double d = partial[i] - truth_partial[i];
        if (x >= q_lo && x <= q_hi) {
            sum_in += d * d;
            ++n_in;
        } else {
            sum_out += d * d;
            ++n_out;
        }
    }
    if (n_in == 0 || n_out == 0)
        throw invalid_argument_error("quantile window leaves an empty partition of the points");
    return {std::sqrt(sum_in / static_cast<double>(n_in)),
            std::sqrt(sum_out / static_cast<double>(n_out))};
}

std::vector<SweepPoint> make_sweep(const Hyperparameters& base, const std::string& kind,
                                   const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty()) throw invalid_argument_error("sweep requires at least one value");
    std::vector<SweepPoint> grid;
    grid.reserve(a.size());
    if (kind == "shrinkage") {
        for (double v : a) {
            SweepPoint p{"shrinkage=" + format_value(v), base};
            p.params.shrinkage = v;
            grid.push_back(std::move(p));
        }
    } else if (kind == "splits") {
        for (double v : a) {
            if (v != std::floor(v))
                throw invalid_argument_error("splits sweep values must be integers");
            SweepPoint p{"splits=" + format_value(v), base};
            p.params.splits_per_tree = static_cast<int>(v);
            grid.push_back(std::move(p));
        }
    } else if (kind == "gamma") {
        if (b.size() != a.size())
            throw invalid_argument_error("gamma sweep requires matching interval endpoints");
        for (std::size_t i = 0; i < a.size(); ++i) {
            SweepPoint p{"gamma=" + format_value(a[i]) + ":" + format_value(b[i]), base};
            p.params.gamma_min = a[i];
            p.params.gamma_max = b[i];
            grid.push_back(std::move(p));
        }
    } else {
        throw invalid_argument_error("unknown sweep kind '" + kind +
                                     "' (expected shrinkage, splits, or gamma)");
    }
    return grid;
}

std::vector<TraceRun> convergence_experiment(const Dataset& data,
                                             const std::vector<SweepPoint>& grid,
                                             ThreadPool& pool) {
    if (grid.empty()) throw invalid_argument_error("sweep grid is empty");
    std::vector<TraceRun> runs;
    runs.reserve(grid.size());
    for (const SweepPoint& point : grid) {
        const std::string where = "sweep point '" + point.label + "': ";
        try {
            auto [model, report] = fit(data, point.params, pool);
            (void)model;
            runs.push_back({point.label, std::move(report)});
        } catch (const invalid_argument_error& e) {
            throw invalid_argument_error(where + e.what());
        } catch (const degenerate_data_error& e) {
            throw degenerate_data_error(where + e.what());
        } catch (const std::exception& e) {
            throw std::runtime_error(where + e.what());
        }
    }
    return runs;
}

} // namespace smoothboost
