#include "simgen.hpp"

#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "rng.hpp"

namespace smoothboost {

Dgp dgp_from_string(const std::string& name) {
    if (name == "cosine") return Dgp::cosine;
    if (name == "cubic") return Dgp::cubic;
    throw invalid_argument_error("unknown dgp '" + name + "' (expected cosine or cubic)");
}

std::string dgp_to_string(Dgp dgp) {
    return dgp == Dgp::cosine ? "cosine" : "cubic";
}

void SimSpec::validate() const {
    if (n < 2) throw invalid_argument_error("simulation needs n >= 2");
    if (!(target_r2 > 0.0) || !(target_r2 < 1.0))
        throw invalid_argument_error("target_r2 must be in (0, 1)");
}

double calibrate_sigma(double signal_variance, double target_r2) {
    if (!(signal_variance > 0.0))
        throw invalid_argument_error("calibrate_sigma: signal variance must be positive");
    if (!(target_r2 > 0.0) || !(target_r2 < 1.0))
        throw invalid_argument_error("calibrate_sigma: target_r2 must be in (0, 1)");
    return std::sqrt(signal_variance * (1.0 - target_r2) / target_r2);
}

SimResult generate(const SimSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::size_t n = spec.n;

    // Draw order is part of the reproducibility contract: x1 first, then x2,
    // then (after sigma is known) the noise.
    std::vector<double> x1(n), x2(n);
    for (std::size_t i = 0; i < n; ++i) x1[i] = rng.normal();
    if (spec.dgp == Dgp::cosine) {
        for (std::size_t i = 0; i < n; ++i) x2[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    } else {
        for (std::size_t i = 0; i < n; ++i) x2[i] = rng.normal();
    }

    SimResult out;
    out.truth.resize(n);
    out.partial.resize(n);
    if (spec.dgp == Dgp::cosine) {
        for (std::size_t i = 0; i < n; ++i) {
            double a = std::numbers::pi * (x1[i] + x2[i]);
            out.truth[i] = std::cos(a);
            out.partial[i] = -std::numbers::pi * std::sin(a);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            out.truth[i] = x1[i] * x1[i] * x1[i];
            out.partial[i] = 3.0 * x1[i] * x1[i];
        }
    }

    double var_f = sample_sd(out.truth);
    var_f *= var_f;
    out.sigma = calibrate_sigma(var_f, spec.target_r2);

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = out.truth[i] + rng.normal(0.0, out.sigma);

    out.data = Dataset::from_columns({"x1", "x2"}, {std::move(x1), std::move(x2)},
                                     std::move(y), "y");
    return out;
}

} // namespace smoothboost
