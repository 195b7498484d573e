#include "smoothboost/c_api.h"

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "booster.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "evalkit.hpp"
#include "gradients.hpp"
#include "model.hpp"
#include "modelio.hpp"
#include "parallel.hpp"
#include "simgen.hpp"

// Opaque handle bodies: thin bags around the core types.
struct sb_dataset {
    smoothboost::Dataset data;
};
struct sb_model {
    smoothboost::BoostEnsemble model;
};
struct sb_report {
    smoothboost::FitReport report;
};
struct sb_cv_result {
    smoothboost::CvResult result;
};
struct sb_trace {
    std::vector<smoothboost::TraceRun> runs;
};

namespace {

namespace core = smoothboost;

thread_local std::string g_last_error;

// Every entry point funnels through here: exceptions become status codes and
// a thread-local message, and C++ never unwinds across the C boundary.
template <typename Fn>
sb_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return SB_OK;
    } catch (const core::invalid_argument_error& e) {
        g_last_error = e.what();
        return SB_ERROR_INVALID_ARGUMENT;
    } catch (const core::io_error& e) {
        g_last_error = e.what();
        return SB_ERROR_IO;
    } catch (const core::degenerate_data_error& e) {
        g_last_error = e.what();
        return SB_ERROR_DEGENERATE_DATA;
    } catch (const core::corrupt_model_error& e) {
        g_last_error = e.what();
        return SB_ERROR_CORRUPT_MODEL;
    } catch (const core::unsupported_version_error& e) {
        g_last_error = e.what();
        return SB_ERROR_UNSUPPORTED_VERSION;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return SB_ERROR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SB_ERROR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return SB_ERROR_INTERNAL;
    }
}

void require(bool ok, const char* message) {
    if (!ok) throw core::invalid_argument_error(message);
}

core::Hyperparameters to_core(const sb_hyperparams& p) {
    core::Hyperparameters out;
    out.num_trees = p.trees;
    out.splits_per_tree = p.splits;
    out.gamma_min = p.gamma_min;
    out.gamma_max = p.gamma_max;
    out.shrinkage = p.shrinkage;
    out.variable_fraction = p.variable_fraction;
    out.threshold_grid = p.threshold_grid;
    out.seed = p.seed;
    return out;
}

// Reorder a prediction table's columns to the model's feature order, matching
// by name. A column named like the training target is ignored so a training
// file can be fed back unchanged; any other unknown column is an error.
core::Dataset align_to_model(const core::BoostEnsemble& model, const core::Dataset& data) {
    const std::size_t m = model.column_names.size();
    std::vector<std::size_t> source(m, static_cast<std::size_t>(-1));
    for (std::size_t j = 0; j < data.cols(); ++j) {
        const std::string& name = data.column_names[j];
        bool matched = false;
        for (std::size_t k = 0; k < m; ++k) {
            if (model.column_names[k] == name) {
                source[k] = j;
                matched = true;
                break;
            }
        }
        if (!matched && name != model.target_name)
            throw core::invalid_argument_error("column '" + name + "' is not a model feature");
    }
    for (std::size_t k = 0; k < m; ++k)
        if (source[k] == static_cast<std::size_t>(-1))
            throw core::invalid_argument_error("data is missing model feature '" +
                                               model.column_names[k] + "'");
    std::vector<std::vector<double>> columns(m);
    for (std::size_t k = 0; k < m; ++k) columns[k] = data.columns[source[k]];
    return core::Dataset::from_columns(model.column_names, std::move(columns));
}

int find_variable(const core::BoostEnsemble& model, const char* variable) {
    require(variable != nullptr && *variable != '\0', "variable name is required");
    for (std::size_t k = 0; k < model.column_names.size(); ++k)
        if (model.column_names[k] == variable) return static_cast<int>(k);
    throw core::invalid_argument_error("variable '" + std::string(variable) +
                                       "' is not a model feature");
}

void require_finite_points(const double* point, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        require(std::isfinite(point[i]), "point contains a non-finite value");
}

double cv_lookup(const sb_cv_result* result, const char* name,
                 const std::map<std::string, double>& table) {
    require(result != nullptr, "null result");
    require(name != nullptr, "null model name");
    auto it = table.find(name);
    if (it == table.end())
        throw core::invalid_argument_error("model '" + std::string(name) +
                                           "' is not in the result");
    return it->second;
}

} // namespace

extern "C" {

const char* sb_last_error(void) { return g_last_error.c_str(); }

const char* sb_version(void) {
#ifdef SMOOTHBOOST_VERSION
    return SMOOTHBOOST_VERSION;
#else
    return "0.0.0";
#endif
}

/* -------------------------------------------------------------------------- */
/* Hyperparameters                                                            */
/* -------------------------------------------------------------------------- */

void sb_hyperparams_init(sb_hyperparams* params) {
    if (!params) return;
    const core::Hyperparameters defaults;
    params->trees = defaults.num_trees;
    params->splits = defaults.splits_per_tree;
    params->gamma_min = defaults.gamma_min;
    params->gamma_max = defaults.gamma_max;
    params->shrinkage = defaults.shrinkage;
    params->variable_fraction = defaults.variable_fraction;
    params->threshold_grid = defaults.threshold_grid;
    params->seed = defaults.seed;
    params->threads = 0;
}

sb_status sb_hyperparams_validate(const sb_hyperparams* params) {
    return guarded([&] {
        require(params != nullptr, "null hyperparameters");
        require(params->threads >= 0, "threads must be >= 0 (0 = auto)");
        to_core(*params).validate();
    });
}

/* -------------------------------------------------------------------------- */
/* Datasets                                                                   */
/* -------------------------------------------------------------------------- */

sb_status sb_dataset_read_csv(const char* path, const char* target,
                              const char* const* features, size_t n_features,
                              int encode_binary, sb_dataset** out) {
    return guarded([&] {
        require(path != nullptr, "null path");
        require(out != nullptr, "null output handle");
        require(features != nullptr || n_features == 0,
                "null feature list with nonzero length");
        core::CsvReadOptions options;
        if (target) options.target = target;
        for (size_t i = 0; i < n_features; ++i) {
            require(features[i] != nullptr, "null feature name");
            options.features.emplace_back(features[i]);
        }
        options.encode_binary = encode_binary != 0;
        auto handle = new sb_dataset{core::read_csv(path, options)};
        *out = handle;
    });
}

sb_status sb_dataset_from_arrays(const char* const* names, size_t n_cols, size_t n_rows,
                                 const double* const* columns, const double* response,
                                 const char* target_name, sb_dataset** out) {
    return guarded([&] {
        require(out != nullptr, "null output handle");
        require(names != nullptr && columns != nullptr, "null names or columns");
        require(n_cols > 0, "at least one column is required");
        require(n_rows > 0, "at least one row is required");
        std::vector<std::string> name_vec;
        std::vector<std::vector<double>> col_vec;
        name_vec.reserve(n_cols);
        col_vec.reserve(n_cols);
        for (size_t j = 0; j < n_cols; ++j) {
            require(names[j] != nullptr, "null column name");
            require(columns[j] != nullptr, "null column data");
            name_vec.emplace_back(names[j]);
            col_vec.emplace_back(columns[j], columns[j] + n_rows);
        }
        std::vector<double> resp;
        if (response) resp.assign(response, response + n_rows);
        auto handle = new sb_dataset{core::Dataset::from_columns(
            std::move(name_vec), std::move(col_vec), std::move(resp),
            target_name ? target_name : "")};
        *out = handle;
    });
}

size_t sb_dataset_rows(const sb_dataset* data) { return data ? data->data.rows() : 0; }
size_t sb_dataset_cols(const sb_dataset* data) { return data ? data->data.cols() : 0; }
size_t sb_dataset_skipped_rows(const sb_dataset* data) {
    return data ? data->data.skipped_rows : 0;
}

const char* sb_dataset_column_name(const sb_dataset* data, size_t index) {
    if (!data || index >= data->data.cols()) return nullptr;
    return data->data.column_names[index].c_str();
}

sb_status sb_dataset_write_csv(const sb_dataset* data, const char* path) {
    return guarded([&] {
        require(data != nullptr, "null dataset");
        require(path != nullptr, "null path");
        std::vector<std::string> names = data->data.column_names;
        std::vector<std::vector<double>> columns = data->data.columns;
        if (data->data.has_response()) {
            names.push_back(data->data.target_name.empty() ? "y" : data->data.target_name);
            columns.push_back(data->data.response);
        }
        core::write_csv(path, names, columns);
    });
}

void sb_dataset_free(sb_dataset* data) { delete data; }

sb_status sb_simulate(const char* dgp, size_t n, double r2, uint64_t seed,
                      sb_dataset** out_data, sb_dataset** out_truth) {
    return guarded([&] {
        require(dgp != nullptr, "null dgp name");
        require(out_data != nullptr, "null output handle");
        core::SimSpec spec;
        spec.dgp = core::dgp_from_string(dgp);
        spec.n = n;
        spec.target_r2 = r2;
        spec.seed = seed;
        core::SimResult sim = core::generate(spec);
        std::unique_ptr<sb_dataset> truth;
        if (out_truth) {
            truth = std::make_unique<sb_dataset>(sb_dataset{core::Dataset::from_columns(
                {"truth", "partial_x1"}, {sim.truth, sim.partial})});
        }
        auto data_handle = std::make_unique<sb_dataset>(sb_dataset{std::move(sim.data)});
        *out_data = data_handle.release();
        if (out_truth) *out_truth = truth.release();
    });
}

/* -------------------------------------------------------------------------- */
/* Training, prediction, derivatives                                          */
/* -------------------------------------------------------------------------- */

sb_status sb_train(const sb_dataset* data, const sb_hyperparams* params,
                   sb_model** out_model, sb_report** out_report) {
    return guarded([&] {
        require(data != nullptr, "null dataset");
        require(params != nullptr, "null hyperparameters");
        require(out_model != nullptr, "null output handle");
        require(params->threads >= 0, "threads must be >= 0 (0 = auto)");
        core::ThreadPool pool(core::resolve_threads(params->threads));
        auto [model, report] = core::fit(data->data, to_core(*params), pool);
        *out_model = new sb_model{std::move(model)};
        if (out_report) *out_report = new sb_report{std::move(report)};
    });
}

sb_status sb_model_save(const sb_model* model, const char* path) {
    return guarded([&] {
        require(model != nullptr, "null model");
        require(path != nullptr, "null path");
        core::save_model(model->model, path);
    });
}

sb_status sb_model_load(const char* path, sb_model** out) {
    return guarded([&] {
        require(path != nullptr, "null path");
        require(out != nullptr, "null output handle");
        *out = new sb_model{core::load_model(path)};
    });
}

size_t sb_model_num_trees(const sb_model* model) {
    return model ? model->model.stages.size() : 0;
}

size_t sb_model_num_features(const sb_model* model) {
    return model ? model->model.num_features() : 0;
}

const char* sb_model_feature_name(const sb_model* model, size_t index) {
    if (!model || index >= model->model.column_names.size()) return nullptr;
    return model->model.column_names[index].c_str();
}

const char* sb_model_target_name(const sb_model* model) {
    return model ? model->model.target_name.c_str() : nullptr;
}

void sb_model_free(sb_model* model) { delete model; }

sb_status sb_predict(const sb_model* model, const sb_dataset* data, int threads, double* out) {
    return guarded([&] {
        require(model != nullptr, "null model");
        require(data != nullptr, "null dataset");
        require(out != nullptr, "null output buffer");
        const core::Dataset aligned = align_to_model(model->model, data->data);
        core::ThreadPool pool(core::resolve_threads(threads));
        const std::vector<double> pred = core::predict_dataset(model->model, aligned, pool);
        std::memcpy(out, pred.data(), pred.size() * sizeof(double));
    });
}

sb_status sb_partial(const sb_model* model, const sb_dataset* data, const char* variable,
                     int threads, double* out) {
    return guarded([&] {
        require(model != nullptr, "null model");
        require(data != nullptr, "null dataset");
        require(out != nullptr, "null output buffer");
        const int var = find_variable(model->model, variable);
        const core::Dataset aligned = align_to_model(model->model, data->data);
        core::ThreadPool pool(core::resolve_threads(threads));
        const std::vector<double> partial =
            core::ensemble_partial_dataset(model->model, aligned, var, pool);
        std::memcpy(out, partial.data(), partial.size() * sizeof(double));
    });
}

sb_status sb_predict_row(const sb_model* model, const double* point, size_t dim, double* out) {
    return guarded([&] {
        require(model != nullptr, "null model");
        require(point != nullptr, "null point");
        require(out != nullptr, "null output buffer");
        require(dim == model->model.num_features(),
                "point dimension does not match the model's feature count");
        require_finite_points(point, dim);
        *out = core::ensemble_predict_row(model->model, point, dim);
    });
}

sb_status sb_partial_row(const sb_model* model, const double* point, size_t dim,
                         const char* variable, double* out) {
    return guarded([&] {
        require(model != nullptr, "null model");
        require(point != nullptr, "null point");
        require(out != nullptr, "null output buffer");
        require(dim == model->model.num_features(),
                "point dimension does not match the model's feature count");
        require_finite_points(point, dim);
        const int var = find_variable(model->model, variable);
        *out = core::ensemble_partial_row(model->model, point, dim, var);
    });
}

sb_status sb_predict_to_csv(const sb_model* model, const sb_dataset* data, int threads,
                            const char* path) {
    return guarded([&] {
        require(model != nullptr, "null model");
        require(data != nullptr, "null dataset");
        require(path != nullptr, "null path");
        const core::Dataset aligned = align_to_model(model->model, data->data);
        core::ThreadPool pool(core::resolve_threads(threads));
        const std::vector<double> pred = core::predict_dataset(model->model, aligned, pool);
        core::write_csv(path, {"prediction"}, {pred});
    });
}

sb_status sb_partial_to_csv(const sb_model* model, const sb_dataset* data, const char* variable,
                            int threads, const char* path) {
    return guarded([&] {
        require(model != nullptr, "null model");
        require(data != nullptr, "null dataset");
        require(path != nullptr, "null path");
        const int var = find_variable(model->model, variable);
        const core::Dataset aligned = align_to_model(model->model, data->data);
        core::ThreadPool pool(core::resolve_threads(threads));
        core::PartialTable table;
        table.covariate_names = model->model.column_names;
        table.covariates = aligned.columns;
        table.fitted = core::predict_dataset(model->model, aligned, pool);
        table.partial = core::ensemble_partial_dataset(model->model, aligned, var, pool);
        core::export_results(table, path, core::ExportFormat::csv);
    });
}

sb_status sb_fd_check(const sb_model* model, const sb_dataset* data, const char* variable,
                      double step, int threads, double* out_max_rel_err) {
    return guarded([&] {
        require(model != nullptr, "null model");
        require(data != nullptr, "null dataset");
        require(out_max_rel_err != nullptr, "null output buffer");
        const int var = find_variable(model->model, variable);
        const core::Dataset aligned = align_to_model(model->model, data->data);
        const std::size_t n = aligned.rows();
        const std::size_t dim = aligned.cols();
        std::vector<double> points(n * dim);
        for (std::size_t i = 0; i < n; ++i) aligned.gather_row(i, points.data() + i * dim);
        core::ThreadPool pool(core::resolve_threads(threads));
        *out_max_rel_err =
            core::finite_difference_check(model->model, points.data(), n, dim, var, step, pool);
    });
}

/* -------------------------------------------------------------------------- */
/* Fit reports                                                                */
/* -------------------------------------------------------------------------- */

size_t sb_report_iterations(const sb_report* report) {
    return report ? report->report.rmse_trace.size() : 0;
}

sb_status sb_report_rmse(const sb_report* report, double* out) {
    return guarded([&] {
        require(report != nullptr, "null report");
        require(out != nullptr, "null output buffer");
        std::memcpy(out, report->report.rmse_trace.data(),
                    report->report.rmse_trace.size() * sizeof(double));
    });
}

sb_status sb_report_rho(const sb_report* report, double* out) {
    return guarded([&] {
        require(report != nullptr, "null report");
        require(out != nullptr, "null output buffer");
        std::memcpy(out, report->report.rho_trace.data(),
                    report->report.rho_trace.size() * sizeof(double));
    });
}

double sb_report_wall_time(const sb_report* report) {
    return report ? report->report.wall_time : 0.0;
}

sb_status sb_report_save_csv(const sb_report* report, const char* path) {
    return guarded([&] {
        require(report != nullptr, "null report");
        require(path != nullptr, "null path");
        core::export_results(report->report, path, core::ExportFormat::csv);
    });
}

void sb_report_free(sb_report* report) { delete report; }

/* -------------------------------------------------------------------------- */
/* Cross-validation                                                           */
/* -------------------------------------------------------------------------- */

sb_status sb_cv(const sb_dataset* data, const sb_hyperparams* params, int k,
                sb_cv_result** out) {
    return guarded([&] {
        require(data != nullptr, "null dataset");
        require(params != nullptr, "null hyperparameters");
        require(out != nullptr, "null output handle");
        require(params->threads >= 0, "threads must be >= 0 (0 = auto)");
        const core::Hyperparameters hp = to_core(*params);
        hp.validate();
        core::ThreadPool pool(core::resolve_threads(params->threads));
        std::vector<core::ModelSpec> models = core::benchmark_models();
        models.push_back(core::boost_model_spec(hp, pool));
        *out = new sb_cv_result{
            core::kfold_cv(data->data, models, k, "ols", "boost", hp.seed)};
    });
}

size_t sb_cv_num_models(const sb_cv_result* result) {
    return result ? result->result.model_names.size() : 0;
}

const char* sb_cv_model_name(const sb_cv_result* result, size_t index) {
    if (!result || index >= result->result.model_names.size()) return nullptr;
    return result->result.model_names[index].c_str();
}

sb_status sb_cv_mean_rmse(const sb_cv_result* result, const char* name, double* out) {
    return guarded([&] {
        require(out != nullptr, "null output buffer");
        require(result != nullptr, "null result");
        require(name != nullptr, "null model name");
        auto it = result->result.per_fold_rmse.find(name);
        if (it == result->result.per_fold_rmse.end())
            throw core::invalid_argument_error("model '" + std::string(name) +
                                               "' is not in the result");
        double s = 0.0;
        for (double v : it->second) s += v;
        *out = s / static_cast<double>(it->second.size());
    });
}

sb_status sb_cv_relative_rmse(const sb_cv_result* result, const char* name, double* out) {
    return guarded([&] {
        require(out != nullptr, "null output buffer");
        *out = cv_lookup(result, name, result->result.relative_table);
    });
}

sb_status sb_cv_p_value(const sb_cv_result* result, const char* name, double* out) {
    return guarded([&] {
        require(out != nullptr, "null output buffer");
        *out = cv_lookup(result, name, result->result.p_values);
    });
}

size_t sb_cv_num_notes(const sb_cv_result* result) {
    return result ? result->result.notes.size() : 0;
}

const char* sb_cv_note(const sb_cv_result* result, size_t index) {
    if (!result || index >= result->result.notes.size()) return nullptr;
    return result->result.notes[index].c_str();
}

sb_status sb_cv_save(const sb_cv_result* result, const char* path, int structured) {
    return guarded([&] {
        require(result != nullptr, "null result");
        require(path != nullptr, "null path");
        core::export_results(result->result, path,
                             structured ? core::ExportFormat::structured_text
                                        : core::ExportFormat::csv);
    });
}

void sb_cv_free(sb_cv_result* result) { delete result; }

/* -------------------------------------------------------------------------- */
/* Hyperparameter sweeps                                                      */
/* -------------------------------------------------------------------------- */

sb_status sb_trace_run(const sb_dataset* data, const sb_hyperparams* params, const char* kind,
                       const double* a, const double* b, size_t n_values, sb_trace** out) {
    return guarded([&] {
        require(data != nullptr, "null dataset");
        require(params != nullptr, "null hyperparameters");
        require(kind != nullptr, "null sweep kind");
        require(a != nullptr, "null sweep values");
        require(n_values > 0, "sweep needs at least one value");
        require(out != nullptr, "null output handle");
        require(params->threads >= 0, "threads must be >= 0 (0 = auto)");
        const std::vector<double> a_vec(a, a + n_values);
        std::vector<double> b_vec;
        if (std::string(kind) == "gamma") {
            require(b != nullptr, "gamma sweep needs interval endpoints");
            b_vec.assign(b, b + n_values);
        }
        const std::vector<core::SweepPoint> grid =
            core::make_sweep(to_core(*params), kind, a_vec, b_vec);
        core::ThreadPool pool(core::resolve_threads(params->threads));
        *out = new sb_trace{core::convergence_experiment(data->data, grid, pool)};
    });
}

size_t sb_trace_num_runs(const sb_trace* trace) { return trace ? trace->runs.size() : 0; }

const char* sb_trace_label(const sb_trace* trace, size_t index) {
    if (!trace || index >= trace->runs.size()) return nullptr;
    return trace->runs[index].label.c_str();
}

size_t sb_trace_iterations(const sb_trace* trace) {
    if (!trace || trace->runs.empty()) return 0;
    return trace->runs[0].report.rmse_trace.size();
}

sb_status sb_trace_rmse(const sb_trace* trace, size_t index, double* out) {
    return guarded([&] {
        require(trace != nullptr, "null trace");
        require(out != nullptr, "null output buffer");
        require(index < trace->runs.size(), "trace index out of range");
        const std::vector<double>& rmse = trace->runs[index].report.rmse_trace;
        std::memcpy(out, rmse.data(), rmse.size() * sizeof(double));
    });
}

sb_status sb_trace_save_csv(const sb_trace* trace, const char* path) {
    return guarded([&] {
        require(trace != nullptr, "null trace");
        require(path != nullptr, "null path");
        core::write_trace_csv(trace->runs, path);
    });
}

void sb_trace_free(sb_trace* trace) { delete trace; }

} // extern "C"
