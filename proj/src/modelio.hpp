#pragma once

#include <string>
#include <vector>

#include "booster.hpp"
#include "dataset.hpp"
#include "evalkit.hpp"
#include "model.hpp"

namespace smoothboost {

struct CsvReadOptions {
    // Name of the response column; empty loads a prediction-only table.
    std::string target;
    // Explicit feature subset in the given order; empty selects every
    // non-target column in header order.
    std::vector<std::string> features;
    // Map two-valued text columns to 0/1 (lexicographically smaller value
    // becomes 0). Off by default: unparseable cells are errors.
    bool encode_binary = false;
};

// RFC-4180-style reader (quoted fields, embedded commas/newlines, header
// required). Rows with missing cells in selected columns are dropped and
// counted in Dataset::skipped_rows; a non-numeric cell in a selected column
// is an error naming the column and line.
Dataset read_csv(const std::string& path, const CsvReadOptions& options = {});

// Writes named columns with round-trip-safe floats (17 significant digits).
void write_csv(const std::string& path, const std::vector<std::string>& names,
               const std::vector<std::vector<double>>& columns);

// Model persistence: human-readable structured text with a format_version
// gate. Loading validates every model invariant before returning, so a
// truncated or edited file never yields a partial model.
void save_model(const BoostEnsemble& model, const std::string& path);
BoostEnsemble load_model(const std::string& path);

// In-memory forms of the same encoding (used by save/load and tests).
std::string model_to_text(const BoostEnsemble& model);
BoostEnsemble model_from_text(const std::string& text);

enum class ExportFormat { csv, structured_text };

// Per-point covariates with fitted values and the partial effect of one
// variable; the shape written for derivative output.
struct PartialTable {
    std::vector<std::string> covariate_names;
    std::vector<std::vector<double>> covariates;  // column-major
    std::vector<double> fitted;
    std::vector<double> partial;
};

// Deterministic column order, 17-significant-digit floats, atomic replace.
// Empty objects and non-finite values are errors, never empty files.
void export_results(const FitReport& report, const std::string& path, ExportFormat format);
void export_results(const CvResult& result, const std::string& path, ExportFormat format);
void export_results(const PartialTable& table, const std::string& path, ExportFormat format);

// Convergence traces side by side: one `iteration` column plus one RMSE
// column per sweep label.
void write_trace_csv(const std::vector<TraceRun>& runs, const std::string& path);

} // namespace smoothboost
