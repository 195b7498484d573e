#pragma once

#include <cstdint>
#include <string>

#include "dataset.hpp"

namespace smoothboost {

enum class Dgp { cosine, cubic };

Dgp dgp_from_string(const std::string& name);
std::string dgp_to_string(Dgp dgp);

struct SimSpec {
    Dgp dgp = Dgp::cosine;
    std::size_t n = 1000;
    double target_r2 = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SimResult {
    Dataset data;                 // covariates x1, x2 and response y
    std::vector<double> truth;    // noise-free signal f(x_i)
    std::vector<double> partial;  // df/dx1 at each row
    double sigma = 0.0;           // noise level used
};

// Noise level hitting a target in-sample R^2: from
// R^2 = var(f) / (var(f) + sigma^2), sigma = sqrt(var(f)*(1-R^2)/R^2).
double calibrate_sigma(double signal_variance, double target_r2);

// Synthetic benchmark data. cosine: x1 ~ N(0,1), x2 ~ Bernoulli(0.5),
// f = cos(pi*(x1+x2)). cubic: x1 ~ N(0,1), f = x1^3, plus a pure-noise x2
// column so variable subsampling stays exercised (truth and partial ignore
// it). sigma is calibrated against the realized sample variance of f, so the
// in-sample signal share matches target_r2 exactly.
SimResult generate(const SimSpec& spec);

} // namespace smoothboost
