#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "grower.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "simgen.hpp"

using namespace smoothboost;

namespace {

// Exhaustive hard-split search: every variable, every midpoint between
// adjacent distinct values, children set to the group means.
double best_cart_sse(const Dataset& data, const std::vector<double>& y) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < data.cols(); ++j) {
        std::vector<double> uniq = data.columns[j];
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (std::size_t t = 0; t + 1 < uniq.size(); ++t) {
            double c = 0.5 * (uniq[t] + uniq[t + 1]);
            double sum_hi = 0.0, sum_lo = 0.0;
            std::size_t n_hi = 0, n_lo = 0;
            for (std::size_t i = 0; i < data.rows(); ++i) {
                if (data.value(i, j) > c) {
                    sum_hi += y[i];
                    ++n_hi;
                } else {
                    sum_lo += y[i];
                    ++n_lo;
                }
            }
            double mu_hi = n_hi ? sum_hi / static_cast<double>(n_hi) : 0.0;
            double mu_lo = n_lo ? sum_lo / static_cast<double>(n_lo) : 0.0;
            double sse = 0.0;
            for (std::size_t i = 0; i < data.rows(); ++i) {
                double fit = data.value(i, j) > c ? mu_hi : mu_lo;
                sse += (y[i] - fit) * (y[i] - fit);
            }
            best = std::min(best, sse);
        }
    }
    return best;
}

// Midpoints between adjacent distinct values, one grid per column.
std::vector<std::vector<double>> midpoint_grids(const Dataset& data) {
    std::vector<std::vector<double>> grids(data.cols());
    for (std::size_t j = 0; j < data.cols(); ++j) {
        std::vector<double> uniq = data.columns[j];
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (std::size_t t = 0; t + 1 < uniq.size(); ++t)
            grids[j].push_back(0.5 * (uniq[t] + uniq[t + 1]));
    }
    return grids;
}

// Values snapped to a 2e-3 lattice so that distinct values are never closer
// than the saturation scale of a 1e6 slope.
Dataset lattice_dataset(Rng& rng, std::size_t n, std::size_t dims) {
    std::vector<std::vector<double>> cols(dims);
    for (auto& col : cols) {
        col.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            col.push_back(std::round(rng.uniform(-2.0, 2.0) * 500.0) / 500.0);
    }
    std::vector<std::string> names;
    for (std::size_t j = 0; j < dims; ++j) names.push_back("x" + std::to_string(j + 1));
    return Dataset::from_columns(std::move(names), std::move(cols));
}

} // namespace

TEST_CASE("growth config ranges") {
    GrowthConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.splits = 0;
    CHECK_THROWS_AS(cfg.validate(), invalid_argument_error);
    cfg = GrowthConfig{};
    cfg.gamma_min = -1.0;
    CHECK_THROWS_AS(cfg.validate(), invalid_argument_error);
    cfg = GrowthConfig{};
    cfg.pinned_slope = 0.0;
    CHECK_THROWS_AS(cfg.validate(), invalid_argument_error);
}

TEST_CASE("make_location_grids") {
    SUBCASE("small columns use their unique sorted values") {
        Dataset d = Dataset::from_columns({"a"}, {{3.0, 1.0, 2.0, 2.0}});
        auto grids = make_location_grids(d, 100);
        CHECK(grids[0] == std::vector<double>{1.0, 2.0, 3.0});
    }

    SUBCASE("constant columns get no grid") {
        Dataset d = Dataset::from_columns({"a", "b"}, {{5.0, 5.0}, {1.0, 2.0}});
        auto grids = make_location_grids(d, 100);
        CHECK(grids[0].empty());
        CHECK(grids[1].size() == 2);
    }

    SUBCASE("large columns reduce to nearest-rank quantiles") {
        Rng rng(3);
        std::vector<double> col;
        for (int i = 0; i < 1000; ++i) col.push_back(rng.uniform(0.0, 10.0));
        Dataset d = Dataset::from_columns({"a"}, {col});
        const int grid = 10;
        auto grids = make_location_grids(d, grid);

        std::vector<double> sorted = col;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> expected;
        for (int t = 0; t < grid; ++t) {
            double p = (t + 0.5) / grid;
            auto idx = std::min(sorted.size() - 1,
                                static_cast<std::size_t>(p * static_cast<double>(sorted.size())));
            double c = sorted[idx];
            if (expected.empty() || c != expected.back()) expected.push_back(c);
        }
        CHECK(grids[0] == expected);
        CHECK(grids[0].size() <= static_cast<std::size_t>(grid));
        CHECK(std::is_sorted(grids[0].begin(), grids[0].end()));
    }
}

TEST_CASE("solve_leaf_weights") {
    SUBCASE("disjoint indicators recover the group means") {
        std::vector<double> wl = {1, 1, 0, 0, 0};
        std::vector<double> wr = {0, 0, 1, 1, 1};
        std::vector<double> offset(5, 0.0);
        std::vector<double> y = {2.0, 4.0, 9.0, 10.0, 11.0};
        LeafSolve s = solve_leaf_weights(wl, wr, offset, y);
        CHECK_FALSE(s.degenerate);
        CHECK(s.beta_left == doctest::Approx(3.0).epsilon(1e-9));
        CHECK(s.beta_right == doctest::Approx(10.0).epsilon(1e-9));
        CHECK(s.sse == doctest::Approx(2.0 + 2.0).epsilon(1e-6));
    }

    SUBCASE("targets equal to the offset need no adjustment") {
        std::vector<double> wl = {0.7, 0.2, 0.9};
        std::vector<double> wr = {0.3, 0.8, 0.1};
        std::vector<double> offset = {1.0, -2.0, 0.5};
        LeafSolve s = solve_leaf_weights(wl, wr, offset, offset);
        CHECK(std::abs(s.beta_left) < 1e-8);
        CHECK(std::abs(s.beta_right) < 1e-8);
        CHECK(s.sse < 1e-12);
    }

    SUBCASE("matches a coarse-to-fine grid search on random instances") {
        Rng rng(41);
        for (int trial = 0; trial < 5; ++trial) {
            const std::size_t n = 20;
            std::vector<double> wl(n), wr(n), offset(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
                wl[i] = rng.uniform(0.0, 1.0);
                wr[i] = rng.uniform(0.0, 1.0);
                offset[i] = rng.uniform(-1.0, 1.0);
                y[i] = rng.uniform(-3.0, 3.0);
            }
            LeafSolve s = solve_leaf_weights(wl, wr, offset, y);

            auto objective = [&](double bl, double br) {
                double sse = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double e = y[i] - offset[i] - bl * wl[i] - br * wr[i];
                    sse += e * e;
                }
                return sse;
            };
            // The objective is a convex quadratic, so refining around the
            // best coarse cell converges to the global minimum.
            double lo_l = -10.0, hi_l = 10.0, lo_r = -10.0, hi_r = 10.0;
            double best = std::numeric_limits<double>::infinity();
            double best_l = 0.0, best_r = 0.0;
            for (int level = 0; level < 3; ++level) {
                double step_l = (hi_l - lo_l) / 200.0;
                double step_r = (hi_r - lo_r) / 200.0;
                for (double bl = lo_l; bl <= hi_l + 1e-15; bl += step_l) {
                    for (double br = lo_r; br <= hi_r + 1e-15; br += step_r) {
                        double v = objective(bl, br);
                        if (v < best) {
                            best = v;
                            best_l = bl;
                            best_r = br;
                        }
                    }
                }
                double span_l = 2.0 * (hi_l - lo_l) / 200.0;
                double span_r = 2.0 * (hi_r - lo_r) / 200.0;
                lo_l = best_l - span_l;
                hi_l = best_l + span_l;
                lo_r = best_r - span_r;
                hi_r = best_r + span_r;
            }
            CHECK(s.sse <= best + 1e-2);
            CHECK(objective(s.beta_left, s.beta_right) == doctest::Approx(s.sse).epsilon(1e-10));
        }
    }

    SUBCASE("all-zero weight columns flag degeneracy") {
        std::vector<double> zeros(4, 0.0);
        std::vector<double> y = {1.0, 2.0, 3.0, 4.0};
        LeafSolve s = solve_leaf_weights(zeros, zeros, zeros, y);
        CHECK(s.degenerate);
        CHECK(s.sse == doctest::Approx(30.0));
    }

    SUBCASE("length mismatch is an error") {
        CHECK_THROWS_AS(solve_leaf_weights({1.0}, {1.0, 2.0}, {0.0}, {1.0}),
                        invalid_argument_error);
    }
}

TEST_CASE("search_best_split matches an exhaustive hard-split oracle") {
    Rng rng(71);
    ThreadPool pool(1);
    for (int trial = 0; trial < 12; ++trial) {
        std::size_t n = 10 + rng.uniform_index(41);  // 10..50 rows
        Dataset data = lattice_dataset(rng, n, 2);
        std::vector<double> y(n);
        for (auto& v : y) v = rng.uniform(-2.0, 2.0);

        auto grids = midpoint_grids(data);
        GrowthConfig cfg;
        cfg.splits = 1;
        cfg.variable_fraction = 1.0;
        cfg.pinned_slope = 1e6;
        cfg.location_grids = &grids;
        cfg.seed = 1234 + static_cast<std::uint64_t>(trial);

        TreeBuilder builder(data, y, cfg, pool);
        SplitCandidate cand = builder.search_best_split();
        double oracle = best_cart_sse(data, y);
        CHECK(cand.sse == doctest::Approx(oracle).epsilon(1e-8));

        // The reported sse is recomputable from the candidate itself.
        double recomputed = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double L = logistic(data.value(i, static_cast<std::size_t>(cand.variable)),
                                cand.slope, cand.location);
            double fit = cand.beta_left * L + cand.beta_right * (1.0 - L);
            recomputed += (y[i] - fit) * (y[i] - fit);
        }
        CHECK(recomputed == doctest::Approx(cand.sse).epsilon(1e-8));
    }
}

TEST_CASE("a saturated split separates a two-point dataset exactly") {
    Dataset data = Dataset::from_columns({"x1"}, {{0.0, 10.0}});
    std::vector<double> y = {0.0, 1.0};
    auto grids = midpoint_grids(data);
    GrowthConfig cfg;
    cfg.splits = 1;
    cfg.variable_fraction = 1.0;
    cfg.pinned_slope = 1e6;
    cfg.location_grids = &grids;
    ThreadPool pool(1);

    TreeBuilder builder(data, y, cfg, pool);
    SplitCandidate cand = builder.search_best_split();
    CHECK(cand.location == doctest::Approx(5.0));
    CHECK(cand.beta_left == doctest::Approx(1.0).epsilon(1e-8));   // high-x child
    CHECK(cand.beta_right == doctest::Approx(0.0).epsilon(1e-8));  // low-x child
    CHECK(cand.sse < 1e-12);
}

TEST_CASE("perfectly separable step data reaches zero loss") {
    Rng rng(5);
    std::vector<double> x;
    for (int i = 0; i < 40; ++i) x.push_back(rng.uniform(-1.0, 1.0));
    std::vector<double> y;
    for (double v : x) y.push_back(v > 0.0 ? 1.0 : 0.0);
    Dataset data = Dataset::from_columns({"x1"}, {x});

    auto grids = midpoint_grids(data);
    GrowthConfig cfg;
    cfg.splits = 1;
    cfg.variable_fraction = 1.0;
    cfg.pinned_slope = 1e6;
    cfg.location_grids = &grids;
    ThreadPool pool(1);
    std::vector<double> step_sse;
    SmoothTree tree = grow_tree(data, y, cfg, pool, &step_sse);
    CHECK(step_sse.back() < 1e-10);
}

TEST_CASE("constant targets produce a constant tree") {
    Rng rng(19);
    std::vector<double> x;
    for (int i = 0; i < 30; ++i) x.push_back(rng.uniform(-1.0, 1.0));
    Dataset data = Dataset::from_columns({"x1"}, {x});
    std::vector<double> y(30, 3.0);

    GrowthConfig cfg;
    cfg.splits = 1;
    cfg.variable_fraction = 1.0;
    cfg.seed = 7;
    ThreadPool pool(1);
    TreeBuilder builder(data, y, cfg, pool);
    SplitCandidate cand = builder.search_best_split();
    CHECK(cand.beta_left == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(cand.beta_right == doctest::Approx(3.0).epsilon(1e-8));
    builder.apply(cand);
    SmoothTree tree = builder.finish();
    for (double p : {-0.9, 0.0, 0.4}) {
        CHECK(tree_predict(tree, &p, 1) == doctest::Approx(3.0).epsilon(1e-8));
    }
}

TEST_CASE("step losses never increase while a tree grows") {
    SimResult sim = generate({Dgp::cosine, 300, 0.5, 11});
    std::vector<double> y = sim.data.response;
    GrowthConfig cfg;
    cfg.splits = 6;
    cfg.seed = 3;
    ThreadPool pool(1);
    std::vector<double> step_sse;
    grow_tree(sim.data, y, cfg, pool, &step_sse);
    REQUIRE(step_sse.size() == 7);  // before any split, then one entry per split
    for (std::size_t s = 1; s < step_sse.size(); ++s) {
        CHECK(step_sse[s] <= step_sse[s - 1] + 1e-9 * std::abs(step_sse[s - 1]));
    }
}

TEST_CASE("growth is deterministic in the seed") {
    SimResult sim = generate({Dgp::cosine, 120, 0.5, 13});
    GrowthConfig cfg;
    cfg.splits = 3;
    cfg.seed = 99;
    ThreadPool pool(1);
    SmoothTree a = grow_tree(sim.data, sim.data.response, cfg, pool);
    SmoothTree b = grow_tree(sim.data, sim.data.response, cfg, pool);
    REQUIRE(a.splits.size() == b.splits.size());
    for (std::size_t k = 0; k < a.splits.size(); ++k) {
        CHECK(a.splits[k].position == b.splits[k].position);
        CHECK(a.splits[k].variable == b.splits[k].variable);
        CHECK(a.splits[k].location == b.splits[k].location);
        CHECK(a.splits[k].slope == b.splits[k].slope);
    }
    for (std::size_t k = 0; k < a.leaves.size(); ++k) {
        CHECK(a.leaves[k].weight == b.leaves[k].weight);
    }

    cfg.seed = 100;
    SmoothTree c = grow_tree(sim.data, sim.data.response, cfg, pool);
    bool any_diff = c.splits.size() != a.splits.size();
    for (std::size_t k = 0; !any_diff && k < a.splits.size(); ++k)
        any_diff = a.splits[k].location != c.splits[k].location ||
                   a.splits[k].slope != c.splits[k].slope;
    CHECK(any_diff);
}

TEST_CASE("a single tree fits a cubic curve better than its derivative") {
    SimResult sim = generate({Dgp::cubic, 300, 0.9, 21});
    GrowthConfig cfg;
    cfg.splits = 4;
    cfg.seed = 2;
    ThreadPool pool(1);
    SmoothTree tree = grow_tree(sim.data, sim.data.response, cfg, pool);

    double mean_truth = sample_mean(sim.truth);
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < sim.data.rows(); ++i) {
        double row[2];
        sim.data.gather_row(i, row);
        double fit = tree_predict(tree, row, 2);
        ss_res += (sim.truth[i] - fit) * (sim.truth[i] - fit);
        ss_tot += (sim.truth[i] - mean_truth) * (sim.truth[i] - mean_truth);
    }
    CHECK(1.0 - ss_res / ss_tot > 0.3);
}

TEST_CASE("degenerate inputs are rejected") {
    ThreadPool pool(1);
    GrowthConfig cfg;

    SUBCASE("fewer than two rows") {
        Dataset one = Dataset::from_columns({"a"}, {{1.0}});
        std::vector<double> y = {2.0};
        CHECK_THROWS_AS(grow_tree(one, y, cfg, pool), invalid_argument_error);
    }

    SUBCASE("no column with positive variance") {
        Dataset flat = Dataset::from_columns({"a"}, {{4.0, 4.0, 4.0}});
        std::vector<double> y = {1.0, 2.0, 3.0};
        CHECK_THROWS_AS(grow_tree(flat, y, cfg, pool), degenerate_data_error);
    }

    SUBCASE("targets length mismatch") {
        Dataset d = Dataset::from_columns({"a"}, {{1.0, 2.0}});
        std::vector<double> y = {1.0};
        CHECK_THROWS_AS(grow_tree(d, y, cfg, pool), invalid_argument_error);
    }
}
