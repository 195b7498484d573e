#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "evalkit.hpp"
#include "modelio.hpp"
#include "rng.hpp"
#include "support.hpp"

using namespace smoothboost;
using testsupport::TempDir;
using testsupport::read_file;
using testsupport::write_file;

TEST_CASE("csv reading") {
    TempDir dir;
    const std::string path = dir.file("data.csv");

    SUBCASE("basic table with target selection") {
        write_file(path, "x1,x2,y\n1,10,100\n2,20,200\n3,30,300\n");
        CsvReadOptions opt;
        opt.target = "y";
        Dataset d = read_csv(path, opt);
        REQUIRE(d.rows() == 3);
        REQUIRE(d.cols() == 2);
        CHECK(d.column_names == std::vector<std::string>{"x1", "x2"});
        CHECK(d.target_name == "y");
        CHECK(d.columns[0] == std::vector<double>{1.0, 2.0, 3.0});
        CHECK(d.columns[1] == std::vector<double>{10.0, 20.0, 30.0});
        CHECK(d.response == std::vector<double>{100.0, 200.0, 300.0});
        CHECK(d.skipped_rows == 0);
    }

    SUBCASE("prediction-only load when no target is named") {
        write_file(path, "x1,x2\n1,2\n3,4\n");
        Dataset d = read_csv(path);
        CHECK(d.cols() == 2);
        CHECK_FALSE(d.has_response());
    }

    SUBCASE("quoted fields: commas, escaped quotes, embedded newlines") {
        write_file(path, "\"na,me\",y\n\"1\",2\n3,\"4\"\n");
        CsvReadOptions opt;
        opt.target = "y";
        Dataset d = read_csv(path, opt);
        CHECK(d.column_names[0] == "na,me");
        CHECK(d.columns[0] == std::vector<double>{1.0, 3.0});

        // A quoted cell may span lines; the record still tokenizes as one row.
        const std::string tricky = dir.file("tricky.csv");
        write_file(tricky, "label,x,y\n\"a\nb\"\"c\",5,6\n");
        CsvReadOptions pick;
        pick.target = "y";
        pick.features = {"x"};
        Dataset t = read_csv(tricky, pick);
        CHECK(t.rows() == 1);
        CHECK(t.columns[0] == std::vector<double>{5.0});
        CHECK(t.response == std::vector<double>{6.0});

        // Selecting the target as a feature is rejected.
        CsvReadOptions clash;
        clash.target = "y";
        clash.features = {"y"};
        CHECK_THROWS_WITH_AS(read_csv(tricky, clash), doctest::Contains("is the target"),
                             invalid_argument_error);
    }

    SUBCASE("utf-8 byte-order mark is stripped from the first header name") {
        write_file(path, "\xEF\xBB\xBFx1,y\n1,2\n");
        CsvReadOptions opt;
        opt.target = "y";
        Dataset d = read_csv(path, opt);
        CHECK(d.column_names[0] == "x1");
    }

    SUBCASE("crlf line endings and surrounding spaces") {
        write_file(path, "x1 , y\r\n 1 , 2 \r\n3,4\r\n");
        CsvReadOptions opt;
        opt.target = "y";
        Dataset d = read_csv(path, opt);
        CHECK(d.column_names[0] == "x1");
        CHECK(d.columns[0] == std::vector<double>{1.0, 3.0});
        CHECK(d.response == std::vector<double>{2.0, 4.0});
    }

    SUBCASE("blank lines are ignored, incomplete rows are dropped and counted") {
        write_file(path, "x1,x2,y\n1,2,3\n\n4,5\n6,,7\n8,9,10\n");
        CsvReadOptions opt;
        opt.target = "y";
        Dataset d = read_csv(path, opt);
        // "4,5" is short and "6,,7" has an empty selected cell.
        CHECK(d.rows() == 2);
        CHECK(d.skipped_rows == 2);
        CHECK(d.columns[0] == std::vector<double>{1.0, 8.0});
    }

    SUBCASE("a malformed cell in an unselected column is never touched") {
        write_file(path, "x,junk,y\n1,???,2\n");
        CsvReadOptions opt;
        opt.target = "y";
        opt.features = {"x"};
        Dataset d = read_csv(path, opt);
        CHECK(d.cols() == 1);
        CHECK(d.columns[0] == std::vector<double>{1.0});
        CHECK(d.response == std::vector<double>{2.0});
    }

    SUBCASE("explicit feature list controls order") {
        write_file(path, "a,b,c,y\n1,2,3,4\n");
        CsvReadOptions opt;
        opt.target = "y";
        opt.features = {"c", "a"};
        Dataset d = read_csv(path, opt);
        CHECK(d.column_names == std::vector<std::string>{"c", "a"});
        CHECK(d.columns[0] == std::vector<double>{3.0});
        CHECK(d.columns[1] == std::vector<double>{1.0});
    }

    SUBCASE("scientific notation and signs parse") {
        write_file(path, "x,y\n-1.5e-3,+2\n1E4,3\n");
        CsvReadOptions opt;
        opt.target = "y";
        Dataset d = read_csv(path, opt);
        CHECK(d.columns[0][0] == doctest::Approx(-0.0015));
        CHECK(d.columns[0][1] == 10000.0);
    }

    SUBCASE("error cases name the problem") {
        CsvReadOptions opt;
        opt.target = "y";

        write_file(path, "");
        CHECK_THROWS_WITH_AS(read_csv(path, opt), doctest::Contains("no header row"), io_error);

        write_file(path, "x,x,y\n1,2,3\n");
        CHECK_THROWS_WITH_AS(read_csv(path, opt), doctest::Contains("duplicate column 'x'"),
                             io_error);

        write_file(path, "x,,y\n1,2,3\n");
        CHECK_THROWS_WITH_AS(read_csv(path, opt), doctest::Contains("empty column name"), io_error);

        write_file(path, "x,y\n1,2,3\n");
        CHECK_THROWS_WITH_AS(read_csv(path, opt), doctest::Contains("more fields than the header"),
                             io_error);

        write_file(path, "x,y\n1,2\nabc,4\n");
        CHECK_THROWS_WITH_AS(read_csv(path, opt),
                             doctest::Contains("column 'x' has non-numeric value 'abc' at line 3"),
                             io_error);

        // Non-finite numbers are data errors, not values.
        write_file(path, "x,y\ninf,2\n");
        CHECK_THROWS_AS(read_csv(path, opt), io_error);

        write_file(path, "x,y\n\"1,2\n");
        CHECK_THROWS_WITH_AS(read_csv(path, opt), doctest::Contains("unterminated quoted field"),
                             io_error);

        write_file(path, "x,y\n,\n");
        CHECK_THROWS_WITH_AS(read_csv(path, opt), doctest::Contains("no usable data rows"),
                             io_error);

        write_file(path, "x,z\n1,2\n");
        CHECK_THROWS_WITH_AS(read_csv(path, opt), doctest::Contains("target column 'y'"),
                             invalid_argument_error);

        write_file(path, "x,y\n1,2\n");
        CsvReadOptions missing = opt;
        missing.features = {"q"};
        CHECK_THROWS_WITH_AS(read_csv(path, missing), doctest::Contains("feature column 'q'"),
                             invalid_argument_error);
        CsvReadOptions twice = opt;
        twice.features = {"x", "x"};
        CHECK_THROWS_WITH_AS(read_csv(path, twice), doctest::Contains("listed twice"),
                             invalid_argument_error);

        CHECK_THROWS_WITH_AS(read_csv(dir.file("missing.csv")), doctest::Contains("cannot open"),
                             io_error);
    }

    SUBCASE("binary text encoding") {
        CsvReadOptions opt;
        opt.target = "y";
        opt.encode_binary = true;

        write_file(path, "flag,y\nyes,1\nno,2\nyes,3\n");
        Dataset d = read_csv(path, opt);
        // Lexicographically smaller value maps to 0: "no" < "yes".
        CHECK(d.columns[0] == std::vector<double>{1.0, 0.0, 1.0});

        // One distinct value: everything is the smaller value, so all zero.
        write_file(path, "flag,y\nsame,1\nsame,2\n");
        Dataset one = read_csv(path, opt);
        CHECK(one.columns[0] == std::vector<double>{0.0, 0.0});
        CHECK(one.column_sd[0] == 0.0);

        // Three distinct values stay an error even with the flag on.
        write_file(path, "flag,y\na,1\nb,2\nc,3\n");
        CHECK_THROWS_WITH_AS(read_csv(path, opt), doctest::Contains("column 'flag'"), io_error);

        // Numeric columns are untouched by the flag.
        write_file(path, "x,y\n5,1\n7,2\n");
        Dataset num = read_csv(path, opt);
        CHECK(num.columns[0] == std::vector<double>{5.0, 7.0});

        // Without the flag the same text column is an error.
        write_file(path, "flag,y\nyes,1\nno,2\n");
        CsvReadOptions strict;
        strict.target = "y";
        CHECK_THROWS_AS(read_csv(path, strict), io_error);

        // The target column itself may be binary text.
        write_file(path, "x,y\n1,up\n2,down\n");
        Dataset bin_y = read_csv(path, opt);
        CHECK(bin_y.response == std::vector<double>{1.0, 0.0});
    }
}

TEST_CASE("csv writing round-trips doubles exactly") {
    TempDir dir;
    const std::string path = dir.file("out.csv");

    std::vector<double> awkward = {1.0 / 3.0, -0.0, 1e-300, 12345.678901234567, 2.0};
    std::vector<double> y = {1.0, 2.0, 3.0, 4.0, 5.0};
    write_csv(path, {"v", "y"}, {awkward, y});

    CsvReadOptions opt;
    opt.target = "y";
    Dataset d = read_csv(path, opt);
    REQUIRE(d.rows() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(d.columns[0][i] == awkward[i]);

    SUBCASE("header names get quoted when they need it") {
        const std::string q = dir.file("quoted.csv");
        write_csv(q, {"a,b", "y"}, {{1.0}, {2.0}});
        std::string text = read_file(q);
        CHECK(text.substr(0, text.find('\n')) == "\"a,b\",y");
        Dataset back = read_csv(q);
        CHECK(back.column_names[0] == "a,b");
    }

    SUBCASE("writer validation") {
        CHECK_THROWS_AS(write_csv(path, {"a"}, {{1.0}, {2.0}}), invalid_argument_error);
        CHECK_THROWS_AS(write_csv(path, {"a", "b"}, {{1.0}, {2.0, 3.0}}), invalid_argument_error);
        CHECK_THROWS_AS(write_csv(path, {"a"}, {{}}), invalid_argument_error);
        CHECK_THROWS_AS(write_csv(path, {"a"}, {{std::nan("")}}), invalid_argument_error);
        CHECK_THROWS_WITH_AS(write_csv(dir.file("no_dir/x.csv"), {"a"}, {{1.0}}),
                             doctest::Contains("cannot write"), io_error);
    }
}

namespace {

// A complete model document written by hand, pinning the on-disk shape.
const char* kHandModel = R"({
  "format_version": 1,
  "baseline": 0.5,
  "shrinkage": 0.2,
  "target_name": "y",
  "column_names": ["x1"],
  "column_sd": [1.0],
  "stages": [
    {
      "rho": 0.8,
      "splits": [
        {"position": 0, "variable": 0, "location": 0.25, "slope": 2.0, "raw_gamma": 2.0}
      ],
      "leaves": [
        {"position": 1, "weight": 1.5, "path": [[0, 1]]},
        {"position": 2, "weight": -0.5, "path": [[0, 0]]}
      ]
    }
  ]
}
)";

std::string patched(const std::string& original, const std::string& from, const std::string& to) {
    std::string text = original;
    const std::size_t at = text.find(from);
    REQUIRE(at != std::string::npos);
    text.replace(at, from.size(), to);
    return text;
}

} // namespace

TEST_CASE("model text format") {
    SUBCASE("a hand-written document loads and predicts") {
        BoostEnsemble model = model_from_text(kHandModel);
        CHECK(model.baseline == 0.5);
        CHECK(model.shrinkage == 0.2);
        CHECK(model.target_name == "y");
        REQUIRE(model.stages.size() == 1);
        // At the split location the transition is exactly 1/2, so the tree
        // contributes (1.5 - 0.5)/2 and the stage adds 0.2*0.8*0.5.
        double x = 0.25;
        CHECK(ensemble_predict_row(model, &x, 1) == doctest::Approx(0.58).epsilon(1e-15));
    }

    SUBCASE("serialization is canonical: parse-print reaches a fixed point") {
        BoostEnsemble model = model_from_text(kHandModel);
        std::string once = model_to_text(model);
        CHECK(once.find("\"format_version\": 1") != std::string::npos);
        std::string twice = model_to_text(model_from_text(once));
        CHECK(once == twice);
    }

    SUBCASE("rejects damage with a named cause") {
        const std::string good = kHandModel;

        CHECK_THROWS_WITH_AS(model_from_text("{nope"), doctest::Contains("not a valid model file"),
                             corrupt_model_error);
        CHECK_THROWS_WITH_AS(model_from_text("[]"), doctest::Contains("key-value document"),
                             corrupt_model_error);
        CHECK_THROWS_WITH_AS(
            model_from_text(patched(good, "\"format_version\": 1", "\"format_version\": 3")),
            doctest::Contains("unsupported model format version 3 (this build reads version 1)"),
            unsupported_version_error);
        CHECK_THROWS_WITH_AS(model_from_text(patched(good, "\"baseline\": 0.5,", "")),
                             doctest::Contains("missing field 'baseline'"), corrupt_model_error);
        CHECK_THROWS_WITH_AS(
            model_from_text(patched(good, "\"baseline\": 0.5", "\"baseline\": \"x\"")),
            doctest::Contains("'baseline' must be a number"), corrupt_model_error);
        CHECK_THROWS_WITH_AS(
            model_from_text(patched(good, "\"path\": [[0, 1]]", "\"path\": [[0, 1], [0, 1]]")),
            doctest::Contains("lists a split position twice"), corrupt_model_error);
        CHECK_THROWS_WITH_AS(model_from_text(patched(good, "\"path\": [[0, 1]]", "\"path\": [[0]]")),
                             doctest::Contains("[position, code] pairs"), corrupt_model_error);
        // Structurally valid JSON, structurally broken tree.
        CHECK_THROWS_AS(
            model_from_text(patched(good, "\"position\": 2", "\"position\": 7")),
            corrupt_model_error);
        // A contradictory path code is caught by the ancestry check.
        CHECK_THROWS_AS(
            model_from_text(patched(good, "\"path\": [[0, 1]]", "\"path\": [[0, 0]]")),
            corrupt_model_error);
    }

    SUBCASE("save and load round-trip a trained-shape model bitwise") {
        TempDir dir;
        Rng rng(31);
        BoostEnsemble model = testsupport::random_ensemble(rng, 20, 3, 2);
        const std::string path = dir.file("model.txt");
        save_model(model, path);
        BoostEnsemble loaded = load_model(path);

        CHECK(model_to_text(loaded) == model_to_text(model));
        for (int t = 0; t < 50; ++t) {
            double point[2] = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
            CHECK(ensemble_predict_row(loaded, point, 2) == ensemble_predict_row(model, point, 2));
        }

        // Saving over an existing file replaces it atomically: no temp file
        // remains and the content is the new model's.
        BoostEnsemble other = testsupport::random_ensemble(rng, 2, 1, 2);
        save_model(other, path);
        CHECK(read_file(path) == model_to_text(other));
        CHECK_THROWS_AS(load_model(dir.file("model.txt.tmp")), io_error);

        CHECK_THROWS_WITH_AS(load_model(dir.file("absent.txt")), doctest::Contains("cannot open"),
                             io_error);
        CHECK_THROWS_AS(save_model(model, dir.file("no_dir/m.txt")), io_error);
    }
}

TEST_CASE("result export") {
    TempDir dir;

    SUBCASE("fit report") {
        FitReport report;
        report.rmse_trace = {0.5, 0.25};
        report.rho_trace = {1.5, -0.75};

        const std::string csv = dir.file("trace.csv");
        export_results(report, csv, ExportFormat::csv);
        CHECK(read_file(csv) == "iteration,rmse,rho\n1,0.5,1.5\n2,0.25,-0.75\n");

        const std::string txt = dir.file("trace.txt");
        export_results(report, txt, ExportFormat::structured_text);
        std::string text = read_file(txt);
        CHECK(text.find("\"iterations\": 2") != std::string::npos);
        CHECK(text.find("\"rmse\"") != std::string::npos);
        CHECK(text.find("0.25") != std::string::npos);

        FitReport empty;
        CHECK_THROWS_AS(export_results(empty, csv, ExportFormat::csv), invalid_argument_error);
        FitReport ragged;
        ragged.rmse_trace = {1.0};
        CHECK_THROWS_AS(export_results(ragged, csv, ExportFormat::csv), invalid_argument_error);
        FitReport bad;
        bad.rmse_trace = {std::nan("")};
        bad.rho_trace = {1.0};
        CHECK_THROWS_AS(export_results(bad, csv, ExportFormat::csv), invalid_argument_error);
    }

    SUBCASE("cross-validation table") {
        CvResult r;
        r.k = 2;
        r.model_names = {"mean", "boost"};
        r.per_fold_rmse["mean"] = {1.0, 3.0};
        r.per_fold_rmse["boost"] = {0.5, 0.75};
        r.relative_table["mean"] = 1.0;
        r.relative_table["boost"] = 0.3125;
        r.p_values["mean"] = 0.5;
        r.p_values["boost"] = 1.0;
        r.reference = "mean";
        r.champion = "boost";
        r.notes = {"a note"};

        const std::string csv = dir.file("cv.csv");
        export_results(r, csv, ExportFormat::csv);
        CHECK(read_file(csv) ==
              "model,mean_rmse,relative_rmse,p_value,fold_1,fold_2\n"
              "mean,2,1,0.5,1,3\n"
              "boost,0.625,0.3125,1,0.5,0.75\n");

        const std::string txt = dir.file("cv.txt");
        export_results(r, txt, ExportFormat::structured_text);
        std::string text = read_file(txt);
        CHECK(text.find("\"reference\": \"mean\"") != std::string::npos);
        CHECK(text.find("\"champion\": \"boost\"") != std::string::npos);
        CHECK(text.find("a note") != std::string::npos);

        CvResult empty;
        CHECK_THROWS_AS(export_results(empty, csv, ExportFormat::csv), invalid_argument_error);
    }

    SUBCASE("partial-effect table") {
        PartialTable t;
        t.covariate_names = {"x1"};
        t.covariates = {{0.5, 1.5}};
        t.fitted = {2.0, 3.0};
        t.partial = {-1.0, 0.25};

        const std::string csv = dir.file("partial.csv");
        export_results(t, csv, ExportFormat::csv);
        CHECK(read_file(csv) == "index,x1,fitted,partial\n0,0.5,2,-1\n1,1.5,3,0.25\n");

        const std::string txt = dir.file("partial.txt");
        export_results(t, txt, ExportFormat::structured_text);
        CHECK(read_file(txt).find("\"partial\"") != std::string::npos);

        PartialTable ragged = t;
        ragged.partial.pop_back();
        CHECK_THROWS_AS(export_results(ragged, csv, ExportFormat::csv), invalid_argument_error);
        PartialTable unnamed = t;
        unnamed.covariate_names.clear();
        CHECK_THROWS_AS(export_results(unnamed, csv, ExportFormat::csv), invalid_argument_error);
        PartialTable empty;
        CHECK_THROWS_AS(export_results(empty, csv, ExportFormat::csv), invalid_argument_error);
    }

    SUBCASE("side-by-side convergence traces") {
        std::vector<TraceRun> runs(2);
        runs[0].label = "a";
        runs[0].report.rmse_trace = {1.0, 0.5};
        runs[1].label = "v,1";
        runs[1].report.rmse_trace = {0.75, 0.25};

        const std::string path = dir.file("sweep.csv");
        write_trace_csv(runs, path);
        CHECK(read_file(path) == "iteration,a,\"v,1\"\n1,1,0.75\n2,0.5,0.25\n");

        CHECK_THROWS_AS(write_trace_csv({}, path), invalid_argument_error);
        std::vector<TraceRun> ragged = runs;
        ragged[1].report.rmse_trace.pop_back();
        CHECK_THROWS_AS(write_trace_csv(ragged, path), invalid_argument_error);
        std::vector<TraceRun> hollow(1);
        hollow[0].label = "x";
        CHECK_THROWS_AS(write_trace_csv(hollow, path), invalid_argument_error);
    }
}
