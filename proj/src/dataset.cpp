#include "dataset.hpp"

#include <cmath>
#include <set>

#include "errors.hpp"

namespace smoothboost {

double sample_mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mu = sample_mean(v);
    double ss = 0.0;
    for (double x : v) {
        double d = x - mu;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

Dataset Dataset::from_columns(std::vector<std::string> names,
                              std::vector<std::vector<double>> columns,
                              std::vector<double> response,
                              std::string target_name) {
    Dataset d;
    d.column_names = std::move(names);
    d.columns = std::move(columns);
    d.response = std::move(response);
    d.target_name = std::move(target_name);
    d.column_sd.resize(d.columns.size());
    for (std::size_t j = 0; j < d.columns.size(); ++j) {
        d.column_sd[j] = sample_sd(d.columns[j]);
    }
    d.validate();
    return d;
}

void Dataset::validate() const {
    if (columns.empty()) throw invalid_argument_error("dataset must have at least one column");
    if (column_names.size() != columns.size())
        throw invalid_argument_error("dataset column name count does not match column count");
    if (column_sd.size() != columns.size())
        throw invalid_argument_error("dataset column_sd count does not match column count");

    std::size_t n = columns[0].size();
    if (n == 0) throw invalid_argument_error("dataset must have at least one row");
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j].size() != n)
            throw invalid_argument_error("dataset column '" + column_names[j] + "' has ragged length");
        for (double x : columns[j]) {
            if (!std::isfinite(x))
                throw invalid_argument_error("dataset column '" + column_names[j] + "' contains a non-finite value");
        }
        double sd = sample_sd(columns[j]);
        if (std::abs(sd - column_sd[j]) > 1e-12)
            throw invalid_argument_error("dataset column '" + column_names[j] + "' has stale column_sd metadata");
    }
    if (!response.empty()) {
        if (response.size() != n)
            throw invalid_argument_error("dataset response length does not match row count");
        for (double y : response) {
            if (!std::isfinite(y)) throw invalid_argument_error("dataset response contains a non-finite value");
        }
    }
    std::set<std::string> seen;
    for (const auto& name : column_names) {
        if (!seen.insert(name).second)
            throw invalid_argument_error("duplicate column name '" + name + "'");
    }
}

Dataset Dataset::subset(const std::vector<std::size_t>& row_indices) const {
    for (std::size_t i : row_indices) {
        if (i >= rows()) throw invalid_argument_error("subset row index out of range");
    }
    std::vector<std::vector<double>> sub_cols(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        sub_cols[j].reserve(row_indices.size());
        for (std::size_t i : row_indices) sub_cols[j].push_back(columns[j][i]);
    }
    std::vector<double> sub_resp;
    if (!response.empty()) {
        sub_resp.reserve(row_indices.size());
        for (std::size_t i : row_indices) sub_resp.push_back(response[i]);
    }
    return from_columns(column_names, std::move(sub_cols), std::move(sub_resp), target_name);
}

} // namespace smoothboost
