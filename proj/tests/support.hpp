#pragma once

// Shared helpers for the test suites: deterministic random models, a scratch
// directory that cleans up after itself, and a tiny process runner for the
// CLI tests.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace testsupport {

// Random tree with `n_splits` soft splits over `dims` variables. Splitting a
// random active leaf keeps the position/child arithmetic honest; finalize()
// derives the path codes.
inline smoothboost::SmoothTree random_tree(smoothboost::Rng& rng, int n_splits, int dims,
                                           double slope_lo = 0.5, double slope_hi = 3.0) {
    smoothboost::SmoothTree tree;
    std::vector<std::int64_t> active = {0};
    for (int s = 0; s < n_splits; ++s) {
        std::size_t pick = rng.uniform_index(active.size());
        std::int64_t pos = active[pick];
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(pick));
        smoothboost::SplitNode node;
        node.position = pos;
        node.variable = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(dims)));
        node.location = rng.uniform(-2.0, 2.0);
        node.slope = rng.uniform(slope_lo, slope_hi);
        node.raw_gamma = node.slope;  // column sd of 1 keeps the pair consistent
        tree.splits.push_back(node);
        active.push_back(2 * pos + 1);
        active.push_back(2 * pos + 2);
    }
    std::sort(active.begin(), active.end());
    for (std::int64_t pos : active) {
        smoothboost::Leaf leaf;
        leaf.position = pos;
        leaf.weight = rng.uniform(-1.0, 1.0);
        tree.leaves.push_back(leaf);
    }
    tree.finalize();
    return tree;
}

inline smoothboost::BoostEnsemble random_ensemble(smoothboost::Rng& rng, int stages,
                                                  int splits_per_tree, int dims) {
    smoothboost::BoostEnsemble model;
    model.baseline = rng.uniform(-1.0, 1.0);
    model.shrinkage = 0.2;
    model.target_name = "y";
    for (int d = 0; d < dims; ++d) {
        model.column_names.push_back("x" + std::to_string(d + 1));
        model.column_sd.push_back(1.0);
    }
    for (int m = 0; m < stages; ++m) {
        smoothboost::BoostStage stage;
        stage.rho = rng.uniform(-1.0, 1.0);
        stage.tree = random_tree(rng, splits_per_tree, dims);
        model.stages.push_back(std::move(stage));
    }
    model.finalize();
    return model;
}

// RAII scratch directory under the system temp root.
class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto candidate = base / ("smoothboost_test_" + std::to_string(std::rand()) + "_" +
                                     std::to_string(attempt));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create a scratch directory");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace testsupport
