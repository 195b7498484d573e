// Command-line front end for the smoothboost engine. Every subcommand talks
// to the shared library through its C API only; this file is glue: flag
// parsing, exit-code policy, and stderr diagnostics.
//
// Exit codes: 0 success, 1 runtime failure (I/O, bad data, mismatched
// model/data), 2 usage error (unknown flags, out-of-range values).

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <smoothboost/c_api.h>

namespace {

struct HandleDeleter {
    void operator()(sb_dataset* p) const { sb_dataset_free(p); }
    void operator()(sb_model* p) const { sb_model_free(p); }
    void operator()(sb_report* p) const { sb_report_free(p); }
    void operator()(sb_cv_result* p) const { sb_cv_free(p); }
    void operator()(sb_trace* p) const { sb_trace_free(p); }
};
template <typename T>
using Handle = std::unique_ptr<T, HandleDeleter>;

int fail_runtime() {
    std::fprintf(stderr, "error: %s\n", sb_last_error());
    return 1;
}

int fail_usage() {
    std::fprintf(stderr, "error: %s\n", sb_last_error());
    return 2;
}

int fail_usage(const std::string& message) {
    std::fprintf(stderr, "error: %s\n", message.c_str());
    return 2;
}

void warn_skipped(const sb_dataset* data, const std::string& path) {
    const size_t skipped = sb_dataset_skipped_rows(data);
    if (skipped > 0)
        std::fprintf(stderr, "warning: skipped %zu row%s of '%s' with missing cells\n", skipped,
                     skipped == 1 ? "" : "s", path.c_str());
}

std::vector<const char*> to_cstrs(const std::vector<std::string>& v) {
    std::vector<const char*> out;
    out.reserve(v.size());
    for (const std::string& s : v) out.push_back(s.c_str());
    return out;
}

bool parse_double(const std::string& s, double* out) {
    if (s.empty()) return false;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return false;
    *out = v;
    return true;
}

// ---------------------------------------------------------------------------
// Per-subcommand option bags
// ---------------------------------------------------------------------------

struct TrainOpts {
    std::string data, target, out, report;
    std::vector<std::string> features;
    bool encode_binary = false;
    sb_hyperparams hp{};
};

struct PredictOpts {
    std::string model, data, out;
    int threads = 0;
};

struct DeriveOpts {
    std::string model, data, var, out;
    std::vector<double> at;
    int threads = 0;
};

struct SimulateOpts {
    std::string dgp = "cosine", out, truth;
    size_t n = 1000;
    double r2 = 0.5;
    uint64_t seed = 42;
};

struct CvOpts {
    std::string data, target, out;
    std::vector<std::string> features;
    bool encode_binary = false;
    int k = 5;
    sb_hyperparams hp{};
};

struct TraceOpts {
    std::string data, target, sweep, out;
    std::vector<std::string> features;
    std::vector<std::string> values;
    bool encode_binary = false;
    sb_hyperparams hp{};
};

void add_model_flags(CLI::App* cmd, sb_hyperparams& hp) {
    cmd->add_option("--trees", hp.trees, "boosting iterations")->capture_default_str();
    cmd->add_option("--splits", hp.splits, "soft splits per tree")->capture_default_str();
    cmd->add_option("--gamma-min", hp.gamma_min, "lower end of the transition-speed draw")
        ->capture_default_str();
    cmd->add_option("--gamma-max", hp.gamma_max, "upper end of the transition-speed draw")
        ->capture_default_str();
    cmd->add_option("--shrinkage", hp.shrinkage, "step-size factor in (0, 1]")
        ->capture_default_str();
    cmd->add_option("--var-frac", hp.variable_fraction,
                    "share of eligible variables tried per split")
        ->capture_default_str();
    cmd->add_option("--grid", hp.threshold_grid, "candidate split locations per variable")
        ->capture_default_str();
    cmd->add_option("--seed", hp.seed, "random seed")->capture_default_str();
    cmd->add_option("--threads", hp.threads, "worker threads (0 = auto)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

void add_data_flags(CLI::App* cmd, std::string& data, std::string& target,
                    std::vector<std::string>& features, bool& encode_binary) {
    cmd->add_option("--data", data, "training CSV with a header row")->required();
    cmd->add_option("--target", target, "response column name")->required();
    cmd->add_option("--features", features, "comma-separated feature columns (default: all others)")
        ->delimiter(',');
    cmd->add_flag("--encode-binary", encode_binary, "map two-valued text columns to 0/1");
}

Handle<sb_dataset> load_training_data(const std::string& path, const std::string& target,
                                      const std::vector<std::string>& features,
                                      bool encode_binary) {
    const std::vector<const char*> feature_ptrs = to_cstrs(features);
    sb_dataset* raw = nullptr;
    if (sb_dataset_read_csv(path.c_str(), target.c_str(),
                            feature_ptrs.empty() ? nullptr : feature_ptrs.data(),
                            feature_ptrs.size(), encode_binary ? 1 : 0, &raw) != SB_OK)
        return nullptr;
    warn_skipped(raw, path);
    return Handle<sb_dataset>(raw);
}

Handle<sb_dataset> load_prediction_data(const std::string& path) {
    sb_dataset* raw = nullptr;
    if (sb_dataset_read_csv(path.c_str(), nullptr, nullptr, 0, 0, &raw) != SB_OK) return nullptr;
    warn_skipped(raw, path);
    return Handle<sb_dataset>(raw);
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int run_train(const TrainOpts& opts) {
    if (sb_hyperparams_validate(&opts.hp) != SB_OK) return fail_usage();

    Handle<sb_dataset> data =
        load_training_data(opts.data, opts.target, opts.features, opts.encode_binary);
    if (!data) return fail_runtime();

    sb_model* model_raw = nullptr;
    sb_report* report_raw = nullptr;
    if (sb_train(data.get(), &opts.hp, &model_raw, &report_raw) != SB_OK) return fail_runtime();
    Handle<sb_model> model(model_raw);
    Handle<sb_report> report(report_raw);

    if (sb_model_save(model.get(), opts.out.c_str()) != SB_OK) return fail_runtime();
    if (!opts.report.empty() &&
        sb_report_save_csv(report.get(), opts.report.c_str()) != SB_OK)
        return fail_runtime();

    const size_t iterations = sb_report_iterations(report.get());
    std::vector<double> rmse(iterations, 0.0);
    if (sb_report_rmse(report.get(), rmse.data()) != SB_OK) return fail_runtime();
    std::fprintf(stderr,
                 "trained %zu trees on %zu rows x %zu features in %.2fs; "
                 "final in-sample rmse %.6g\n",
                 sb_model_num_trees(model.get()), sb_dataset_rows(data.get()),
                 sb_dataset_cols(data.get()), sb_report_wall_time(report.get()),
                 iterations ? rmse.back() : 0.0);
    std::fprintf(stderr, "model written to '%s'\n", opts.out.c_str());
    return 0;
}

int run_predict(const PredictOpts& opts) {
    sb_model* model_raw = nullptr;
    if (sb_model_load(opts.model.c_str(), &model_raw) != SB_OK) return fail_runtime();
    Handle<sb_model> model(model_raw);

    Handle<sb_dataset> data = load_prediction_data(opts.data);
    if (!data) return fail_runtime();

    if (sb_predict_to_csv(model.get(), data.get(), opts.threads, opts.out.c_str()) != SB_OK)
        return fail_runtime();
    std::fprintf(stderr, "wrote %zu predictions to '%s'\n", sb_dataset_rows(data.get()),
                 opts.out.c_str());
    return 0;
}

int run_derive(const DeriveOpts& opts) {
    sb_model* model_raw = nullptr;
    if (sb_model_load(opts.model.c_str(), &model_raw) != SB_OK) return fail_runtime();
    Handle<sb_model> model(model_raw);

    Handle<sb_dataset> data;
    if (!opts.at.empty()) {
        const size_t m = sb_model_num_features(model.get());
        if (opts.at.size() != m) {
            std::fprintf(stderr,
                         "error: --at has %zu values but the model has %zu features (order:",
                         opts.at.size(), m);
            for (size_t j = 0; j < m; ++j)
                std::fprintf(stderr, " %s", sb_model_feature_name(model.get(), j));
            std::fprintf(stderr, ")\n");
            return 1;
        }
        std::vector<const char*> names(m);
        std::vector<const double*> columns(m);
        for (size_t j = 0; j < m; ++j) {
            names[j] = sb_model_feature_name(model.get(), j);
            columns[j] = &opts.at[j];
        }
        sb_dataset* raw = nullptr;
        if (sb_dataset_from_arrays(names.data(), m, 1, columns.data(), nullptr, nullptr, &raw) !=
            SB_OK)
            return fail_runtime();
        data.reset(raw);
    } else {
        data = load_prediction_data(opts.data);
        if (!data) return fail_runtime();
    }

    if (sb_partial_to_csv(model.get(), data.get(), opts.var.c_str(), opts.threads,
                          opts.out.c_str()) != SB_OK)
        return fail_runtime();
    std::fprintf(stderr, "wrote fitted values and d/d%s for %zu points to '%s'\n",
                 opts.var.c_str(), sb_dataset_rows(data.get()), opts.out.c_str());
    return 0;
}

int run_simulate(const SimulateOpts& opts) {
    sb_dataset* data_raw = nullptr;
    sb_dataset* truth_raw = nullptr;
    const sb_status status =
        sb_simulate(opts.dgp.c_str(), opts.n, opts.r2, opts.seed, &data_raw,
                    opts.truth.empty() ? nullptr : &truth_raw);
    if (status == SB_ERROR_INVALID_ARGUMENT) return fail_usage();  // all inputs are flags
    if (status != SB_OK) return fail_runtime();
    Handle<sb_dataset> data(data_raw);
    Handle<sb_dataset> truth(truth_raw);

    if (sb_dataset_write_csv(data.get(), opts.out.c_str()) != SB_OK) return fail_runtime();
    if (truth && sb_dataset_write_csv(truth.get(), opts.truth.c_str()) != SB_OK)
        return fail_runtime();
    std::fprintf(stderr, "simulated %zu rows (%s dgp) to '%s'\n", sb_dataset_rows(data.get()),
                 opts.dgp.c_str(), opts.out.c_str());
    if (truth) std::fprintf(stderr, "truth table written to '%s'\n", opts.truth.c_str());
    return 0;
}

int run_cv(const CvOpts& opts) {
    if (sb_hyperparams_validate(&opts.hp) != SB_OK) return fail_usage();
    if (opts.k < 2) return fail_usage("fold count must be at least 2");

    Handle<sb_dataset> data =
        load_training_data(opts.data, opts.target, opts.features, opts.encode_binary);
    if (!data) return fail_runtime();

    sb_cv_result* result_raw = nullptr;
    if (sb_cv(data.get(), &opts.hp, opts.k, &result_raw) != SB_OK) return fail_runtime();
    Handle<sb_cv_result> result(result_raw);

    if (sb_cv_save(result.get(), opts.out.c_str(), 0) != SB_OK) return fail_runtime();

    std::fprintf(stderr, "%d-fold cross-validation on %zu rows:\n", opts.k,
                 sb_dataset_rows(data.get()));
    const size_t n_models = sb_cv_num_models(result.get());
    for (size_t i = 0; i < n_models; ++i) {
        const char* name = sb_cv_model_name(result.get(), i);
        double mean = 0.0, rel = 0.0, p = 0.0;
        if (sb_cv_mean_rmse(result.get(), name, &mean) != SB_OK ||
            sb_cv_relative_rmse(result.get(), name, &rel) != SB_OK ||
            sb_cv_p_value(result.get(), name, &p) != SB_OK)
            return fail_runtime();
        std::fprintf(stderr, "  %-6s mean rmse %.6g  relative %.4f  p %.4g\n", name, mean, rel, p);
    }
    for (size_t i = 0; i < sb_cv_num_notes(result.get()); ++i)
        std::fprintf(stderr, "  note: %s\n", sb_cv_note(result.get(), i));
    std::fprintf(stderr, "results written to '%s'\n", opts.out.c_str());
    return 0;
}

int run_trace(const TraceOpts& opts) {
    if (sb_hyperparams_validate(&opts.hp) != SB_OK) return fail_usage();
    if (opts.values.empty()) return fail_usage("--values needs at least one entry");

    // Decode the sweep list and range-check each value the same way the
    // equivalent single-value flag would be checked.
    std::vector<double> a, b;
    for (const std::string& item : opts.values) {
        sb_hyperparams probe = opts.hp;
        if (opts.sweep == "gamma") {
            const size_t colon = item.find(':');
            double lo = 0.0, hi = 0.0;
            if (colon == std::string::npos || !parse_double(item.substr(0, colon), &lo) ||
                !parse_double(item.substr(colon + 1), &hi))
                return fail_usage("gamma sweep values look like LO:HI, got '" + item + "'");
            probe.gamma_min = lo;
            probe.gamma_max = hi;
            a.push_back(lo);
            b.push_back(hi);
        } else {
            double v = 0.0;
            if (!parse_double(item, &v))
                return fail_usage("sweep value '" + item + "' is not a number");
            if (opts.sweep == "shrinkage") probe.shrinkage = v;
            else {
                if (v != static_cast<int>(v) || v < 1)
                    return fail_usage("splits sweep values must be positive integers, got '" +
                                      item + "'");
                probe.splits = static_cast<int>(v);
            }
            a.push_back(v);
        }
        if (sb_hyperparams_validate(&probe) != SB_OK) return fail_usage();
    }

    Handle<sb_dataset> data =
        load_training_data(opts.data, opts.target, opts.features, opts.encode_binary);
    if (!data) return fail_runtime();

    sb_trace* trace_raw = nullptr;
    if (sb_trace_run(data.get(), &opts.hp, opts.sweep.c_str(), a.data(),
                     b.empty() ? nullptr : b.data(), a.size(), &trace_raw) != SB_OK)
        return fail_runtime();
    Handle<sb_trace> trace(trace_raw);

    if (sb_trace_save_csv(trace.get(), opts.out.c_str()) != SB_OK) return fail_runtime();
    std::fprintf(stderr, "wrote %zu convergence traces x %zu iterations to '%s'\n",
                 sb_trace_num_runs(trace.get()), sb_trace_iterations(trace.get()),
                 opts.out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"boosted smooth transition regression trees: predictions and exact "
                 "partial effects"};
    app.require_subcommand(1);
    app.set_version_flag("--version", []() { return std::string(sb_version()); });

    TrainOpts train_opts;
    sb_hyperparams_init(&train_opts.hp);
    CLI::App* train = app.add_subcommand("train", "fit a model to a CSV and save it");
    add_data_flags(train, train_opts.data, train_opts.target, train_opts.features,
                   train_opts.encode_binary);
    train->add_option("--out", train_opts.out, "output model file")->required();
    train->add_option("--report", train_opts.report, "write per-iteration rmse/rho CSV here");
    add_model_flags(train, train_opts.hp);

    PredictOpts predict_opts;
    CLI::App* predict = app.add_subcommand("predict", "evaluate a saved model on a CSV");
    predict->add_option("--model", predict_opts.model, "model file from train")->required();
    predict->add_option("--data", predict_opts.data, "CSV of points (columns matched by name)")
        ->required();
    predict->add_option("--out", predict_opts.out, "output CSV of predictions")->required();
    predict->add_option("--threads", predict_opts.threads, "worker threads (0 = auto)")
        ->check(CLI::NonNegativeNumber);

    DeriveOpts derive_opts;
    CLI::App* derive =
        app.add_subcommand("derive", "fitted values and the partial effect of one variable");
    derive->add_option("--model", derive_opts.model, "model file from train")->required();
    derive->add_option("--var", derive_opts.var, "variable to differentiate with respect to")
        ->required();
    derive->add_option("--out", derive_opts.out, "output CSV")->required();
    CLI::Option* derive_data =
        derive->add_option("--data", derive_opts.data, "CSV of points (columns matched by name)");
    CLI::Option* derive_at = derive->add_option(
        "--at", derive_opts.at, "single comma-separated point in model feature order");
    derive_at->delimiter(',');
    derive_data->excludes(derive_at);
    derive_at->excludes(derive_data);
    derive->add_option("--threads", derive_opts.threads, "worker threads (0 = auto)")
        ->check(CLI::NonNegativeNumber);

    SimulateOpts sim_opts;
    CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic benchmark CSV");
    simulate->add_option("--dgp", sim_opts.dgp, "data-generating process")
        ->check(CLI::IsMember({"cosine", "cubic"}))
        ->capture_default_str();
    simulate->add_option("--n", sim_opts.n, "number of rows")->capture_default_str();
    simulate->add_option("--r2", sim_opts.r2, "target signal share in (0, 1)")
        ->capture_default_str();
    simulate->add_option("--seed", sim_opts.seed, "random seed")->capture_default_str();
    simulate->add_option("--out", sim_opts.out, "output CSV")->required();
    simulate->add_option("--truth", sim_opts.truth,
                         "also write the noiseless surface and its derivative here");

    CvOpts cv_opts;
    sb_hyperparams_init(&cv_opts.hp);
    CLI::App* cv = app.add_subcommand(
        "cv", "k-fold comparison against mean and least-squares baselines");
    add_data_flags(cv, cv_opts.data, cv_opts.target, cv_opts.features, cv_opts.encode_binary);
    cv->add_option("--k", cv_opts.k, "number of folds")->required();
    cv->add_option("--out", cv_opts.out, "output CSV")->required();
    add_model_flags(cv, cv_opts.hp);

    TraceOpts trace_opts;
    sb_hyperparams_init(&trace_opts.hp);
    CLI::App* trace =
        app.add_subcommand("trace", "convergence traces across one hyperparameter sweep");
    add_data_flags(trace, trace_opts.data, trace_opts.target, trace_opts.features,
                   trace_opts.encode_binary);
    trace->add_option("--sweep", trace_opts.sweep, "hyperparameter to sweep")
        ->check(CLI::IsMember({"shrinkage", "splits", "gamma"}))
        ->required();
    trace->add_option("--values", trace_opts.values,
                      "comma-separated sweep values (gamma: LO:HI pairs)")
        ->delimiter(',')
        ->required();
    trace->add_option("--out", trace_opts.out, "output CSV")->required();
    add_model_flags(trace, trace_opts.hp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*train) return run_train(train_opts);
    if (*predict) return run_predict(predict_opts);
    if (*derive) {
        if (derive_opts.data.empty() && derive_opts.at.empty())
            return fail_usage("derive needs --data or --at");
        return run_derive(derive_opts);
    }
    if (*simulate) return run_simulate(sim_opts);
    if (*cv) return run_cv(cv_opts);
    if (*trace) return run_trace(trace_opts);
    return fail_usage("no subcommand given");
}
