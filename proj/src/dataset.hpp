#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace smoothboost {

double sample_mean(const std::vector<double>& v);

// Sample standard deviation (n-1 denominator). Defined as 0 for n < 2.
double sample_sd(const std::vector<double>& v);

// Column-major numeric table with column metadata. `response` may be empty
// for prediction-only tables; when present it has one entry per row.
class Dataset {
public:
    std::vector<std::string> column_names;
    std::vector<std::vector<double>> columns;
    std::vector<double> column_sd;
    std::vector<double> response;
    std::string target_name;

    // CSV-loader bookkeeping: rows dropped for missing cells.
    std::size_t skipped_rows = 0;

    std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
    std::size_t cols() const { return columns.size(); }
    bool has_response() const { return !response.empty(); }

    double value(std::size_t row, std::size_t col) const { return columns[col][row]; }

    void gather_row(std::size_t row, double* out) const {
        for (std::size_t j = 0; j < columns.size(); ++j) out[j] = columns[j][row];
    }

    // Builds a table, computes per-column standard deviations, and enforces
    // the structural invariants (rectangular, finite, N >= 1, m >= 1).
    static Dataset from_columns(std::vector<std::string> names,
                                std::vector<std::vector<double>> columns,
                                std::vector<double> response = {},
                                std::string target_name = {});

    // Re-checks every invariant, including that stored column_sd matches a
    // recomputation within 1e-12. Throws invalid_argument_error.
    void validate() const;

    // Row subset (used by cross-validation). Standard deviations are
    // recomputed on the subset.
    Dataset subset(const std::vector<std::size_t>& row_indices) const;
};

} // namespace smoothboost
