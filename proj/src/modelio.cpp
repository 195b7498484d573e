#include "modelio.hpp"

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "errors.hpp"

namespace smoothboost {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Low-level file helpers
// ---------------------------------------------------------------------------

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw io_error("failed reading '" + path + "'");
    return std::move(buf).str();
}

// Write-then-rename so readers never observe a half-written file and a
// failed write never clobbers an existing one.
void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot write '" + tmp + "'");
        out << text;
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw io_error("failed writing '" + tmp + "'");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw io_error("cannot replace '" + path + "'");
    }
}

std::string format_double17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string quote_csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

// ---------------------------------------------------------------------------
// CSV reading
// ---------------------------------------------------------------------------

struct CsvRecord {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based file line the record starts on
};

std::vector<CsvRecord> tokenize_csv(const std::string& text, const std::string& path) {
    std::vector<CsvRecord> records;
    std::size_t pos = 0;
    std::size_t line = 1;
    const std::size_t n = text.size();

    // Strip a UTF-8 byte-order mark so the first header name matches.
    if (n >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) pos = 3;

    while (pos < n) {
        CsvRecord record;
        record.line = line;
        bool any_content = false;
        while (true) {
            std::string field;
            if (pos < n && text[pos] == '"') {
                any_content = true;
                const std::size_t open_line = line;
                ++pos;
                bool closed = false;
                while (pos < n) {
                    const char c = text[pos];
                    if (c == '"') {
                        if (pos + 1 < n && text[pos + 1] == '"') {
                            field += '"';
                            pos += 2;
                        } else {
                            ++pos;
                            closed = true;
                            break;
                        }
                    } else {
                        if (c == '\n') ++line;
                        field += c;
                        ++pos;
                    }
                }
                if (!closed)
                    throw io_error("unterminated quoted field starting at line " +
                                   std::to_string(open_line) + " of '" + path + "'");
            } else {
                while (pos < n && text[pos] != ',' && text[pos] != '\n' && text[pos] != '\r') {
                    field += text[pos];
                    ++pos;
                }
                if (!field.empty()) any_content = true;
            }
            record.fields.push_back(std::move(field));
            if (pos < n && text[pos] == ',') {
                any_content = true;  // a delimiter implies a multi-field row
                ++pos;
                continue;
            }
            break;
        }
        // Consume the record terminator.
        if (pos < n && text[pos] == '\r') ++pos;
        if (pos < n && text[pos] == '\n') {
            ++pos;
            ++line;
        }
        // Blank lines are not data rows.
        if (any_content) records.push_back(std::move(record));
    }
    return records;
}

std::string trim_cell(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

bool parse_number(const std::string& cell, double* out) {
    if (cell.empty()) return false;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size() || end == cell.c_str()) return false;
    *out = v;
    return true;
}

} // namespace

Dataset read_csv(const std::string& path, const CsvReadOptions& options) {
    const std::string text = read_text_file(path);
    const std::vector<CsvRecord> records = tokenize_csv(text, path);
    if (records.empty()) throw io_error("'" + path + "' has no header row");

    const std::vector<std::string> header = records[0].fields;
    std::set<std::string> header_seen;
    for (const std::string& raw : header) {
        const std::string name = trim_cell(raw);
        if (name.empty())
            throw io_error("'" + path + "' has an empty column name in the header");
        if (!header_seen.insert(name).second)
            throw io_error("'" + path + "' has duplicate column '" + name + "' in the header");
    }
    auto column_index = [&](const std::string& name) -> std::size_t {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (trim_cell(header[j]) == name) return j;
        return header.size();
    };

    // Resolve the selection: features in order, then optionally the target.
    std::size_t target_idx = header.size();
    if (!options.target.empty()) {
        target_idx = column_index(options.target);
        if (target_idx == header.size())
            throw invalid_argument_error("target column '" + options.target + "' not found in '" +
                                         path + "'");
    }
    std::vector<std::size_t> feature_idx;
    std::vector<std::string> feature_names;
    if (options.features.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j == target_idx) continue;
            feature_idx.push_back(j);
            feature_names.push_back(trim_cell(header[j]));
        }
    } else {
        std::set<std::string> chosen;
        for (const std::string& name : options.features) {
            if (!chosen.insert(name).second)
                throw invalid_argument_error("feature column '" + name + "' listed twice");
            if (!options.target.empty() && name == options.target)
                throw invalid_argument_error("feature column '" + name + "' is the target");
            const std::size_t j = column_index(name);
            if (j == header.size())
                throw invalid_argument_error("feature column '" + name + "' not found in '" +
                                             path + "'");
            feature_idx.push_back(j);
            feature_names.push_back(name);
        }
    }
    if (feature_idx.empty())
        throw invalid_argument_error("no feature columns selected from '" + path + "'");

    std::vector<std::size_t> selected = feature_idx;
    if (target_idx < header.size()) selected.push_back(target_idx);

    // Structural pass: drop short rows and rows with empty selected cells.
    std::size_t skipped = 0;
    std::vector<const CsvRecord*> usable;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const CsvRecord& rec = records[r];
        if (rec.fields.size() > header.size())
            throw io_error("line " + std::to_string(rec.line) + " of '" + path +
                           "' has more fields than the header");
        bool missing = rec.fields.size() < header.size();
        if (!missing) {
            for (std::size_t j : selected) {
                if (trim_cell(rec.fields[j]).empty()) {
                    missing = true;
                    break;
                }
            }
        }
        if (missing) ++skipped;
        else usable.push_back(&rec);
    }
    if (usable.empty()) throw io_error("no usable data rows in '" + path + "'");

    // Classify each selected column: numeric, or (with the flag) a two-valued
    // text column mapped lexicographically to 0/1.
    struct ColumnPlan {
        bool numeric = true;
        std::string bad_value;
        std::size_t bad_line = 0;
        std::set<std::string> distinct;
    };
    std::map<std::size_t, ColumnPlan> plans;
    for (std::size_t j : selected) plans.emplace(j, ColumnPlan{});
    for (const CsvRecord* rec : usable) {
        for (std::size_t j : selected) {
            ColumnPlan& plan = plans.at(j);
            const std::string cell = trim_cell(rec->fields[j]);
            double value = 0.0;
            if (!parse_number(cell, &value) || !std::isfinite(value)) {
                if (plan.numeric) {
                    plan.numeric = false;
                    plan.bad_value = cell;
                    plan.bad_line = rec->line;
                }
            }
            if (plan.distinct.size() < 3) plan.distinct.insert(cell);
        }
    }
    std::map<std::size_t, std::pair<std::string, std::string>> binary_map;
    for (std::size_t j : selected) {
        const ColumnPlan& plan = plans.at(j);
        if (plan.numeric) continue;
        const std::string name = trim_cell(header[j]);
        if (options.encode_binary && plan.distinct.size() <= 2) {
            auto it = plan.distinct.begin();
            const std::string zero = *it;
            // A one-valued column keeps "smaller value maps to 0": nothing maps to 1.
            const std::string one = plan.distinct.size() == 2 ? *std::next(it) : std::string();
            binary_map[j] = {zero, one};
            continue;
        }
        throw io_error("column '" + name + "' has non-numeric value '" + plan.bad_value +
                       "' at line " + std::to_string(plan.bad_line) + " of '" + path + "'");
    }

    auto cell_value = [&](const CsvRecord& rec, std::size_t j) {
        const std::string cell = trim_cell(rec.fields[j]);
        auto bin = binary_map.find(j);
        if (bin != binary_map.end())
            return !bin->second.second.empty() && cell == bin->second.second ? 1.0 : 0.0;
        double value = 0.0;
        parse_number(cell, &value);
        return value;
    };

    std::vector<std::vector<double>> columns(feature_idx.size());
    for (auto& col : columns) col.reserve(usable.size());
    std::vector<double> response;
    if (target_idx < header.size()) response.reserve(usable.size());
    for (const CsvRecord* rec : usable) {
        for (std::size_t k = 0; k < feature_idx.size(); ++k)
            columns[k].push_back(cell_value(*rec, feature_idx[k]));
        if (target_idx < header.size()) response.push_back(cell_value(*rec, target_idx));
    }

    Dataset data = Dataset::from_columns(std::move(feature_names), std::move(columns),
                                         std::move(response), options.target);
    data.skipped_rows = skipped;
    return data;
}

void write_csv(const std::string& path, const std::vector<std::string>& names,
               const std::vector<std::vector<double>>& columns) {
    if (names.empty() || names.size() != columns.size())
        throw invalid_argument_error("csv writer needs one name per column");
    const std::size_t n = columns[0].size();
    for (const auto& col : columns)
        if (col.size() != n) throw invalid_argument_error("csv columns must have equal length");
    if (n == 0) throw invalid_argument_error("refusing to write a csv with no rows");

    std::string out;
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (j) out += ',';
        out += quote_csv_field(names[j]);
    }
    out += '\n';
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (j) out += ',';
            if (!std::isfinite(columns[j][i]))
                throw invalid_argument_error("non-finite value in column '" + names[j] + "'");
            out += format_double17(columns[j][i]);
        }
        out += '\n';
    }
    write_text_atomic(path, out);
}

// ---------------------------------------------------------------------------
// Model persistence
// ---------------------------------------------------------------------------

namespace {

const ordered_json& need_field(const ordered_json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key))
        throw corrupt_model_error(std::string("model file is missing field '") + key + "'");
    return obj.at(key);
}

double need_double(const ordered_json& obj, const char* key) {
    const ordered_json& v = need_field(obj, key);
    if (!v.is_number())
        throw corrupt_model_error(std::string("model field '") + key + "' must be a number");
    return v.get<double>();
}

std::int64_t need_int(const ordered_json& obj, const char* key) {
    const ordered_json& v = need_field(obj, key);
    if (!v.is_number_integer())
        throw corrupt_model_error(std::string("model field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

std::string need_string(const ordered_json& obj, const char* key) {
    const ordered_json& v = need_field(obj, key);
    if (!v.is_string())
        throw corrupt_model_error(std::string("model field '") + key + "' must be a string");
    return v.get<std::string>();
}

const ordered_json& need_array(const ordered_json& obj, const char* key) {
    const ordered_json& v = need_field(obj, key);
    if (!v.is_array())
        throw corrupt_model_error(std::string("model field '") + key + "' must be an array");
    return v;
}

} // namespace

std::string model_to_text(const BoostEnsemble& model) {
    model.validate();  // never serialize a broken model

    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["baseline"] = model.baseline;
    j["shrinkage"] = model.shrinkage;
    j["target_name"] = model.target_name;
    j["column_names"] = model.column_names;
    j["column_sd"] = model.column_sd;
    ordered_json stages = ordered_json::array();
    for (const BoostStage& stage : model.stages) {
        ordered_json js;
        js["rho"] = stage.rho;
        ordered_json splits = ordered_json::array();
        for (const SplitNode& s : stage.tree.splits) {
            ordered_json node;
            node["position"] = s.position;
            node["variable"] = s.variable;
            node["location"] = s.location;
            node["slope"] = s.slope;
            node["raw_gamma"] = s.raw_gamma;
            splits.push_back(std::move(node));
        }
        js["splits"] = std::move(splits);
        ordered_json leaves = ordered_json::array();
        for (const Leaf& leaf : stage.tree.leaves) {
            ordered_json node;
            node["position"] = leaf.position;
            node["weight"] = leaf.weight;
            ordered_json path = ordered_json::array();
            for (const auto& [split_pos, code] : leaf.path_codes)
                path.push_back(ordered_json::array({split_pos, code}));
            node["path"] = std::move(path);
            leaves.push_back(std::move(node));
        }
        js["leaves"] = std::move(leaves);
        stages.push_back(std::move(js));
    }
    j["stages"] = std::move(stages);
    return j.dump(2) + "\n";
}

BoostEnsemble model_from_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw corrupt_model_error(std::string("not a valid model file: ") + e.what());
    }
    if (!j.is_object()) throw corrupt_model_error("model file must be a key-value document");

    const std::int64_t version = need_int(j, "format_version");
    if (version != kFormatVersion)
        throw unsupported_version_error("unsupported model format version " +
                                        std::to_string(version) + " (this build reads version " +
                                        std::to_string(kFormatVersion) + ")");

    BoostEnsemble model;
    model.baseline = need_double(j, "baseline");
    model.shrinkage = need_double(j, "shrinkage");
    model.target_name = need_string(j, "target_name");
    for (const ordered_json& v : need_array(j, "column_names")) {
        if (!v.is_string()) throw corrupt_model_error("column_names entries must be strings");
        model.column_names.push_back(v.get<std::string>());
    }
    for (const ordered_json& v : need_array(j, "column_sd")) {
        if (!v.is_number()) throw corrupt_model_error("column_sd entries must be numbers");
        model.column_sd.push_back(v.get<double>());
    }
    for (const ordered_json& js : need_array(j, "stages")) {
        BoostStage stage;
        stage.rho = need_double(js, "rho");
        for (const ordered_json& node : need_array(js, "splits")) {
            SplitNode s;
            s.position = need_int(node, "position");
            const std::int64_t variable = need_int(node, "variable");
            s.variable = static_cast<int>(variable);
            if (s.variable != variable)
                throw corrupt_model_error("split variable index out of range");
            s.location = need_double(node, "location");
            s.slope = need_double(node, "slope");
            s.raw_gamma = need_double(node, "raw_gamma");
            stage.tree.splits.push_back(std::move(s));
        }
        for (const ordered_json& node : need_array(js, "leaves")) {
            Leaf leaf;
            leaf.position = need_int(node, "position");
            leaf.weight = need_double(node, "weight");
            for (const ordered_json& entry : need_array(node, "path")) {
                if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer() ||
                    !entry[1].is_number_integer())
                    throw corrupt_model_error("leaf path entries must be [position, code] pairs");
                const std::int64_t split_pos = entry[0].get<std::int64_t>();
                const int code = entry[1].get<int>();
                if (!leaf.path_codes.emplace(split_pos, code).second)
                    throw corrupt_model_error("leaf path lists a split position twice");
            }
            stage.tree.leaves.push_back(std::move(leaf));
        }
        model.stages.push_back(std::move(stage));
    }

    // In-place finalize: rebuilds each tree's derived slot layout (required
    // before any prediction) and verifies every invariant.
    try {
        model.finalize();
    } catch (const corrupt_model_error&) {
        throw;
    } catch (const std::exception& e) {
        throw corrupt_model_error(e.what());
    }
    return model;
}

void save_model(const BoostEnsemble& model, const std::string& path) {
    write_text_atomic(path, model_to_text(model));
}

BoostEnsemble load_model(const std::string& path) {
    return model_from_text(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Result export
// ---------------------------------------------------------------------------

namespace {

void check_finite(double v, const char* what) {
    if (!std::isfinite(v))
        throw invalid_argument_error(std::string("non-finite value in ") + what);
}

} // namespace

void export_results(const FitReport& report, const std::string& path, ExportFormat format) {
    if (report.rmse_trace.empty())
        throw invalid_argument_error("refusing to export an empty fit report");
    if (report.rmse_trace.size() != report.rho_trace.size())
        throw invalid_argument_error("fit report traces have different lengths");
    for (double v : report.rmse_trace) check_finite(v, "fit report");
    for (double v : report.rho_trace) check_finite(v, "fit report");

    if (format == ExportFormat::csv) {
        std::string out = "iteration,rmse,rho\n";
        for (std::size_t i = 0; i < report.rmse_trace.size(); ++i) {
            out += std::to_string(i + 1);
            out += ',';
            out += format_double17(report.rmse_trace[i]);
            out += ',';
            out += format_double17(report.rho_trace[i]);
            out += '\n';
        }
        write_text_atomic(path, out);
    } else {
        ordered_json j;
        j["iterations"] = report.rmse_trace.size();
        j["rmse"] = report.rmse_trace;
        j["rho"] = report.rho_trace;
        write_text_atomic(path, j.dump(2) + "\n");
    }
}

void export_results(const CvResult& result, const std::string& path, ExportFormat format) {
    if (result.model_names.empty() || result.k <= 0)
        throw invalid_argument_error("refusing to export an empty cross-validation result");
    for (const std::string& name : result.model_names) {
        for (double v : result.per_fold_rmse.at(name)) check_finite(v, "cross-validation result");
        check_finite(result.relative_table.at(name), "cross-validation result");
        check_finite(result.p_values.at(name), "cross-validation result");
    }

    auto mean_rmse = [&](const std::string& name) {
        const std::vector<double>& folds = result.per_fold_rmse.at(name);
        double s = 0.0;
        for (double v : folds) s += v;
        return s / static_cast<double>(folds.size());
    };

    if (format == ExportFormat::csv) {
        std::string out = "model,mean_rmse,relative_rmse,p_value";
        for (int f = 1; f <= result.k; ++f) out += ",fold_" + std::to_string(f);
        out += '\n';
        for (const std::string& name : result.model_names) {
            out += quote_csv_field(name);
            out += ',';
            out += format_double17(mean_rmse(name));
            out += ',';
            out += format_double17(result.relative_table.at(name));
            out += ',';
            out += format_double17(result.p_values.at(name));
            for (double v : result.per_fold_rmse.at(name)) {
                out += ',';
                out += format_double17(v);
            }
            out += '\n';
        }
        write_text_atomic(path, out);
    } else {
        ordered_json j;
        j["k"] = result.k;
        j["reference"] = result.reference;
        j["champion"] = result.champion;
        ordered_json models = ordered_json::array();
        for (const std::string& name : result.model_names) {
            ordered_json m;
            m["name"] = name;
            m["mean_rmse"] = mean_rmse(name);
            m["relative_rmse"] = result.relative_table.at(name);
            m["p_value"] = result.p_values.at(name);
            m["folds"] = result.per_fold_rmse.at(name);
            models.push_back(std::move(m));
        }
        j["models"] = std::move(models);
        j["notes"] = result.notes;
        write_text_atomic(path, j.dump(2) + "\n");
    }
}

void export_results(const PartialTable& table, const std::string& path, ExportFormat format) {
    if (table.fitted.empty()) throw invalid_argument_error("refusing to export an empty table");
    if (table.covariate_names.size() != table.covariates.size())
        throw invalid_argument_error("partial-effect table needs one name per covariate column");
    const std::size_t n = table.fitted.size();
    if (table.partial.size() != n)
        throw invalid_argument_error("partial-effect table columns have different lengths");
    for (const auto& col : table.covariates)
        if (col.size() != n)
            throw invalid_argument_error("partial-effect table columns have different lengths");
    for (double v : table.fitted) check_finite(v, "partial-effect table");
    for (double v : table.partial) check_finite(v, "partial-effect table");
    for (const auto& col : table.covariates)
        for (double v : col) check_finite(v, "partial-effect table");

    if (format == ExportFormat::csv) {
        std::string out = "index";
        for (const std::string& name : table.covariate_names)
            out += "," + quote_csv_field(name);
        out += ",fitted,partial\n";
        for (std::size_t i = 0; i < n; ++i) {
            out += std::to_string(i);
            for (const auto& col : table.covariates) {
                out += ',';
                out += format_double17(col[i]);
            }
            out += ',';
            out += format_double17(table.fitted[i]);
            out += ',';
            out += format_double17(table.partial[i]);
            out += '\n';
        }
        write_text_atomic(path, out);
    } else {
        ordered_json j;
        j["covariate_names"] = table.covariate_names;
        j["covariates"] = table.covariates;
        j["fitted"] = table.fitted;
        j["partial"] = table.partial;
        write_text_atomic(path, j.dump(2) + "\n");
    }
}

void write_trace_csv(const std::vector<TraceRun>& runs, const std::string& path) {
    if (runs.empty()) throw invalid_argument_error("refusing to export an empty trace table");
    const std::size_t m = runs[0].report.rmse_trace.size();
    if (m == 0) throw invalid_argument_error("refusing to export an empty trace table");
    for (const TraceRun& run : runs) {
        if (run.report.rmse_trace.size() != m)
            throw invalid_argument_error("sweep traces have different lengths");
        for (double v : run.report.rmse_trace) check_finite(v, "trace table");
    }

    std::string out = "iteration";
    for (const TraceRun& run : runs) out += "," + quote_csv_field(run.label);
    out += '\n';
    for (std::size_t i = 0; i < m; ++i) {
        out += std::to_string(i + 1);
        for (const TraceRun& run : runs) {
            out += ',';
            out += format_double17(run.report.rmse_trace[i]);
        }
        out += '\n';
    }
    write_text_atomic(path, out);
}

} // namespace smoothboost
