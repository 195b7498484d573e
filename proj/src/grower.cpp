#include "grower.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "parallel.hpp"

namespace smoothboost {

namespace {
constexpr double kRidge = 1e-10;
}

void GrowthConfig::validate() const {
    if (splits < 1) throw invalid_argument_error("splits must be >= 1");
    if (!(gamma_min > 0.0) || !(gamma_min <= gamma_max) || !std::isfinite(gamma_max))
        throw invalid_argument_error("gamma range requires 0 < gamma_min <= gamma_max");
    if (!(variable_fraction > 0.0) || !(variable_fraction <= 1.0))
        throw invalid_argument_error("variable_fraction must be in (0, 1]");
    if (threshold_grid < 1 && location_grids == nullptr)
        throw invalid_argument_error("threshold_grid must be >= 1");
    if (pinned_slope && (!(*pinned_slope > 0.0) || !std::isfinite(*pinned_slope)))
        throw invalid_argument_error("pinned_slope must be positive and finite");
}

std::vector<std::vector<double>> make_location_grids(const Dataset& data, int threshold_grid) {
    std::vector<std::vector<double>> grids(data.cols());
    for (std::size_t j = 0; j < data.cols(); ++j) {
        if (!(data.column_sd[j] > 0.0)) continue;  // ineligible column, no grid

        std::vector<double> sorted = data.columns[j];
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> uniq = sorted;
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

        if (static_cast<int>(uniq.size()) <= threshold_grid) {
            grids[j] = std::move(uniq);
            continue;
        }
        // Nearest-rank quantiles at p = (t+0.5)/G over the full column, so
        // candidate thresholds track the data density; duplicates collapse.
        std::vector<double>& g = grids[j];
        std::size_t n = sorted.size();
        for (int t = 0; t < threshold_grid; ++t) {
            double p = (t + 0.5) / threshold_grid;
            auto idx = std::min(n - 1, static_cast<std::size_t>(p * static_cast<double>(n)));
            double c = sorted[idx];
            if (g.empty() || c != g.back()) g.push_back(c);
        }
    }
    return grids;
}

LeafSolve solve_leaf_weights(const std::vector<double>& w_left,
                             const std::vector<double>& w_right,
                             const std::vector<double>& offset,
                             const std::vector<double>& targets) {
    std::size_t n = targets.size();
    if (n == 0 || w_left.size() != n || w_right.size() != n || offset.size() != n)
        throw invalid_argument_error("solve_leaf_weights: vector lengths must match and be nonempty");

    double sll = 0.0, srr = 0.0, slr = 0.0, b1 = 0.0, b2 = 0.0, rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = targets[i] - offset[i];
        sll += w_left[i] * w_left[i];
        srr += w_right[i] * w_right[i];
        slr += w_left[i] * w_right[i];
        b1 += w_left[i] * r;
        b2 += w_right[i] * r;
        rr += r * r;
    }

    LeafSolve out;
    if (sll == 0.0 && srr == 0.0) {
        out.degenerate = true;
        out.sse = rr;
        return out;
    }
    double a11 = sll + kRidge;
    double a22 = srr + kRidge;
    double det = a11 * a22 - slr * slr;
    if (!(det > 0.0) || !std::isfinite(det)) {
        out.degenerate = true;
        out.sse = rr;
        return out;
    }
    out.beta_left = (b1 * a22 - b2 * slr) / det;
    out.beta_right = (b2 * a11 - b1 * slr) / det;

    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = targets[i] - offset[i] - out.beta_left * w_left[i] - out.beta_right * w_right[i];
        sse += e * e;
    }
    out.sse = sse;
    return out;
}

TreeBuilder::TreeBuilder(const Dataset& data, const std::vector<double>& targets,
                         const GrowthConfig& config, ThreadPool& pool)
    : data_(data), targets_(targets), config_(config), pool_(pool), rng_(config.seed) {
    config_.validate();
    n_ = data.rows();
    if (n_ < 2) throw invalid_argument_error("tree growth requires at least 2 rows");
    if (targets.size() != n_)
        throw invalid_argument_error("targets length must match the dataset row count");
    for (double t : targets) {
        if (!std::isfinite(t)) throw invalid_argument_error("targets must be finite");
    }

    for (std::size_t j = 0; j < data.cols(); ++j) {
        if (data.column_sd[j] > 0.0) eligible_.push_back(static_cast<int>(j));
    }
    column_mean_.resize(data.cols());
    for (std::size_t j = 0; j < data.cols(); ++j) column_mean_[j] = sample_mean(data.columns[j]);

    if (config_.location_grids != nullptr) {
        grids_ = config_.location_grids;
        if (grids_->size() != data.cols())
            throw invalid_argument_error("location grid override must cover every column");
    } else {
        owned_grids_ = make_location_grids(data, config_.threshold_grid);
        grids_ = &owned_grids_;
    }

    bases_.reserve(2 * static_cast<std::size_t>(config_.splits) + 1);
    bases_.emplace_back(n_, 1.0);
    active_.push_back(NodeState{0, 0, sample_mean(targets)});
    fitted_.assign(n_, active_[0].weight);
}

// Fills `out` (grid-major: out[t*n + i]) with the logistic of every data
// point against every candidate location for one variable. The hot trick:
// exp(-slope*(x-c)) factors into exp(-slope*(x-anchor)) * exp(slope*(c-anchor)),
// so one exp per point plus one per grid location replaces one per pair.
// The factored form only kicks in when neither factor's argument can
// overflow; wild columns fall back to the direct evaluation.
void TreeBuilder::build_logistic_grid(int var, double slope, std::vector<double>& out) const {
    const std::vector<double>& grid = (*grids_)[var];
    const std::vector<double>& x = data_.columns[var];
    std::size_t G = grid.size();
    out.resize(G * n_);

    double anchor = column_mean_[var];
    double amax = 0.0;
    for (std::size_t i = 0; i < n_; ++i) amax = std::max(amax, std::abs(slope * (x[i] - anchor)));
    double cmax = 0.0;
    for (double c : grid) cmax = std::max(cmax, std::abs(slope * (c - anchor)));

    if (amax <= 600.0 && cmax <= 600.0) {
        std::vector<double> u(n_);
        for (std::size_t i = 0; i < n_; ++i) u[i] = std::exp(-slope * (x[i] - anchor));
        for (std::size_t t = 0; t < G; ++t) {
            double s = std::exp(slope * (grid[t] - anchor));
            double* row = out.data() + t * n_;
            for (std::size_t i = 0; i < n_; ++i) row[i] = 1.0 / (1.0 + u[i] * s);
        }
    } else {
        for (std::size_t t = 0; t < G; ++t) {
            double* row = out.data() + t * n_;
            for (std::size_t i = 0; i < n_; ++i) row[i] = logistic_unchecked(x[i], slope, grid[t]);
        }
    }
}

SplitCandidate TreeBuilder::search_best_split() {
    if (eligible_.empty())
        throw degenerate_data_error("no split variable has positive variance");

    // All randomness for the step happens here, serially: first the variable
    // subset, then one gamma per chosen variable in ascending column order.
    // Everything after this point is deterministic, so candidate evaluation
    // can fan out across threads without affecting the outcome.
    std::size_t m_el = eligible_.size();
    auto want = static_cast<std::size_t>(
        std::ceil(config_.variable_fraction * static_cast<double>(m_el)));
    want = std::clamp<std::size_t>(want, 1, m_el);
    std::vector<std::size_t> pick = sample_without_replacement(m_el, want, rng_);

    struct VarPlan {
        int column;
        double slope;
        double raw_gamma;
        const std::vector<double>* grid;
        std::vector<double> logistic_rows;
    };
    std::vector<VarPlan> plans;
    plans.reserve(pick.size());
    for (std::size_t idx : pick) {
        int col = eligible_[idx];
        const std::vector<double>& grid = (*grids_)[col];
        if (grid.empty()) continue;
        double raw, slope;
        if (config_.pinned_slope) {
            slope = *config_.pinned_slope;
            raw = slope * data_.column_sd[col];
        } else {
            raw = rng_.uniform(config_.gamma_min, config_.gamma_max);
            slope = raw / data_.column_sd[col];
        }
        plans.push_back(VarPlan{col, slope, raw, &grid, {}});
    }
    if (plans.empty())
        throw degenerate_data_error("no usable split variable this step");

    // Residual each node's children would have to fit: the full residual
    // with the node's own contribution added back.
    struct NodeMoments {
        std::vector<double> r;
        double s3 = 0.0;   // sum B^2
        double t2 = 0.0;   // sum B*r
        double rr = 0.0;   // sum r^2
        bool usable = false;
    };
    std::vector<NodeMoments> moments(active_.size());
    for (std::size_t ni = 0; ni < active_.size(); ++ni) {
        const std::vector<double>& B = bases_[active_[ni].slot];
        NodeMoments& mom = moments[ni];
        double s3 = 0.0;
        for (std::size_t i = 0; i < n_; ++i) s3 += B[i] * B[i];
        if (s3 == 0.0) continue;  // basis identically zero: nothing to fit here
        mom.usable = true;
        mom.s3 = s3;
        mom.r.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            mom.r[i] = targets_[i] - fitted_[i] + active_[ni].weight * B[i];
            mom.t2 += B[i] * mom.r[i];
            mom.rr += mom.r[i] * mom.r[i];
        }
    }

    pool_.run(plans.size(), [&](std::size_t pi) {
        build_logistic_grid(plans[pi].column, plans[pi].slope, plans[pi].logistic_rows);
    });

    // One unit per (terminal node, chosen variable), node-major so the
    // serial reduction below realizes the (sse, node, variable, location)
    // lexicographic tie-break.
    struct Unit {
        std::size_t node_index;
        std::size_t plan_index;
    };
    std::vector<Unit> units;
    for (std::size_t ni = 0; ni < active_.size(); ++ni) {
        if (!moments[ni].usable) continue;
        for (std::size_t pi = 0; pi < plans.size(); ++pi) units.push_back(Unit{ni, pi});
    }

    struct UnitBest {
        bool found = false;
        double sse = std::numeric_limits<double>::infinity();
        double location = 0.0;
    };
    std::vector<UnitBest> unit_best(units.size());

    pool_.run(units.size(), [&](std::size_t u) {
        const NodeMoments& mom = moments[units[u].node_index];
        const std::vector<double>& B = bases_[active_[units[u].node_index].slot];
        const VarPlan& plan = plans[units[u].plan_index];
        const std::vector<double>& grid = *plan.grid;
        const double* r = mom.r.data();
        const double* Bp = B.data();

        UnitBest ub;
        for (std::size_t t = 0; t < grid.size(); ++t) {
            const double* L = plan.logistic_rows.data() + t * n_;
            double s1 = 0.0, s2 = 0.0, t1 = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                double lb = L[i] * Bp[i];
                s1 += lb * lb;
                s2 += lb * Bp[i];
                t1 += lb * r[i];
            }
            // Moments of the two candidate weight columns w_L = L*B and
            // w_R = (1-L)*B expressed through s1..s3, then the ridge solve.
            double a22r = mom.s3 - 2.0 * s2 + s1;
            if (a22r < 0.0) a22r = 0.0;
            if (s1 == 0.0 && a22r == 0.0) continue;
            double a11 = s1 + kRidge;
            double a22 = a22r + kRidge;
            double a12 = s2 - s1;
            double det = a11 * a22 - a12 * a12;
            if (!(det > 0.0) || !std::isfinite(det)) continue;
            double b1 = t1;
            double b2 = mom.t2 - t1;
            double bl = (b1 * a22 - b2 * a12) / det;
            double br = (b2 * a11 - b1 * a12) / det;
            double sse = mom.rr - 2.0 * (bl * b1 + br * b2) + bl * bl * s1 +
                         2.0 * bl * br * a12 + br * br * a22r;
            if (!std::isfinite(sse)) continue;
            if (!ub.found || sse < ub.sse) {
                ub.found = true;
                ub.sse = sse;
                ub.location = grid[t];
            }
        }
        unit_best[u] = ub;
    });

    std::ptrdiff_t win = -1;
    for (std::size_t u = 0; u < units.size(); ++u) {
        if (!unit_best[u].found) continue;
        if (win < 0 || unit_best[u].sse < unit_best[static_cast<std::size_t>(win)].sse)
            win = static_cast<std::ptrdiff_t>(u);
    }
    if (win < 0) {
        if (splits_.empty())
            throw degenerate_data_error("every root split candidate was degenerate");
        throw degenerate_data_error("every split candidate was degenerate at step " +
                                    std::to_string(splits_.size() + 1));
    }

    // The scan above scored candidates through the factored exponentials.
    // Re-solve the winner through the exact logistic so the returned betas
    // and sse are precisely what the committed tree will reproduce.
    const Unit& w = units[static_cast<std::size_t>(win)];
    const NodeState& node = active_[w.node_index];
    const VarPlan& plan = plans[w.plan_index];
    double c = unit_best[static_cast<std::size_t>(win)].location;
    const std::vector<double>& B = bases_[node.slot];
    const std::vector<double>& x = data_.columns[plan.column];

    std::vector<double> wl(n_), wr(n_), offset(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        double L = logistic_unchecked(x[i], plan.slope, c);
        wl[i] = B[i] * L;
        wr[i] = B[i] * (1.0 - L);
        offset[i] = fitted_[i] - node.weight * B[i];
    }
    LeafSolve ls = solve_leaf_weights(wl, wr, offset, targets_);
    if (ls.degenerate) {
        // Border case: the factored scan admitted a candidate the exact
        // arithmetic rejects. Fall back to a no-op split (children inherit
        // the parent weight), which keeps the model unchanged.
        ls.beta_left = node.weight;
        ls.beta_right = node.weight;
        ls.sse = current_sse();
    }

    SplitCandidate cand;
    cand.node = node.position;
    cand.variable = plan.column;
    cand.location = c;
    cand.slope = plan.slope;
    cand.raw_gamma = plan.raw_gamma;
    cand.beta_left = ls.beta_left;
    cand.beta_right = ls.beta_right;
    cand.sse = ls.sse;
    return cand;
}

void TreeBuilder::apply(const SplitCandidate& cand) {
    auto it = std::find_if(active_.begin(), active_.end(),
                           [&](const NodeState& a) { return a.position == cand.node; });
    if (it == active_.end())
        throw invalid_argument_error("apply: node " + std::to_string(cand.node) +
                                     " is not a terminal node");
    if (cand.variable < 0 || static_cast<std::size_t>(cand.variable) >= data_.cols())
        throw invalid_argument_error("apply: variable index out of range");
    if (!(cand.slope > 0.0)) throw invalid_argument_error("apply: slope must be positive");

    NodeState parent = *it;
    std::size_t k = splits_.size();
    bases_.emplace_back(n_);
    bases_.emplace_back(n_);
    std::vector<double>& bl = bases_[2 * k + 1];
    std::vector<double>& br = bases_[2 * k + 2];
    const std::vector<double>& bp = bases_[parent.slot];
    const std::vector<double>& x = data_.columns[cand.variable];
    for (std::size_t i = 0; i < n_; ++i) {
        double L = logistic_unchecked(x[i], cand.slope, cand.location);
        bl[i] = bp[i] * L;
        br[i] = bp[i] * (1.0 - L);
    }

    splits_.push_back(SplitNode{cand.node, cand.variable, cand.location,
                                cand.slope, cand.raw_gamma});

    active_.erase(std::find_if(active_.begin(), active_.end(),
                               [&](const NodeState& a) { return a.position == cand.node; }));
    NodeState left{2 * cand.node + 1, static_cast<int>(2 * k + 1), cand.beta_left};
    NodeState right{2 * cand.node + 2, static_cast<int>(2 * k + 2), cand.beta_right};
    auto insert_sorted = [&](const NodeState& node) {
        auto pos = std::lower_bound(active_.begin(), active_.end(), node,
                                    [](const NodeState& a, const NodeState& b) {
                                        return a.position < b.position;
                                    });
        active_.insert(pos, node);
    };
    insert_sorted(left);
    insert_sorted(right);
    refresh_fitted();
}

void TreeBuilder::refresh_fitted() {
    std::fill(fitted_.begin(), fitted_.end(), 0.0);
    for (const NodeState& a : active_) {
        const std::vector<double>& B = bases_[a.slot];
        for (std::size_t i = 0; i < n_; ++i) fitted_[i] += a.weight * B[i];
    }
}

double TreeBuilder::current_sse() const {
    double sse = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        double e = targets_[i] - fitted_[i];
        sse += e * e;
    }
    return sse;
}

SmoothTree TreeBuilder::finish() const {
    SmoothTree tree;
    tree.splits = splits_;
    tree.leaves.reserve(active_.size());
    for (const NodeState& a : active_) {
        Leaf leaf;
        leaf.position = a.position;
        leaf.weight = a.weight;
        tree.leaves.push_back(std::move(leaf));
    }
    tree.finalize();
    return tree;
}

SmoothTree grow_tree(const Dataset& data, const std::vector<double>& targets,
                     const GrowthConfig& config, ThreadPool& pool,
                     std::vector<double>* step_sse) {
    TreeBuilder builder(data, targets, config, pool);
    if (step_sse) {
        step_sse->clear();
        step_sse->push_back(builder.current_sse());
    }
    for (int s = 0; s < config.splits; ++s) {
        SplitCandidate cand = builder.search_best_split();
        builder.apply(cand);
        if (step_sse) step_sse->push_back(builder.current_sse());
    }
    return builder.finish();
}

} // namespace smoothboost
