#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "solitonq/bethe.hpp"
#include "solitonq/model.hpp"
#include "solitonq/stats.hpp"

namespace solitonq {

struct McmcConfig {
    int chains = 8;
    long samples_per_chain = 125000;
    long burn_in = 12500;          // >= 10% of samples_per_chain
    double proposal_stddev = 0.5;  // starting value, auto-tuned in burn-in
    std::uint64_t seed = 12345;

    void validate() const;
};

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

struct MomentEstimates {
    Estimate mean_abs_distance;  // pair-averaged <|z_j - z_i|>
    Estimate q;                  // pair-averaged <d^2> / <d>^2
    Estimate var_sum;            // <(sum z)^2>
    Estimate cov_same;           // <z_j^2>, pooled over j
    Estimate cov_cross;          // <z_i z_j>, pooled over i != j
    Estimate cov_cross_u;        // <x_i x_j> within mode U; zero unless n >= 2
    Estimate cov_cross_v;        // <y_k y_l> within mode V; zero unless m >= 2
    Estimate cov_cross_between;  // <x_j y_k>; zero unless n, m >= 1
    Estimate p_minus_var;        // <(P_X - P_Y)^2> via the score identity
    double ess = 0.0;            // of the pair-distance series
    double acceptance_rate = 0.0;
    long total_samples = 0;
    double proposal_stddev = 0.0;  // frozen post-tuning value
};

// Metropolis random walk over |f|^2 at t=0. Chains own independent RNG
// streams and merge in chain order, so results are identical for any
// worker count. Throws DiagnosticError if acceptance leaves [0.15, 0.7]
// after tuning or the pair-distance ESS falls below 1000.
MomentEstimates sample_positions(const SolitonParams& params,
                                 const PulseCenterState& state,
                                 const McmcConfig& mcmc, int threads = 1);

struct QEstimate {
    double q = 0.0;
    double se = 0.0;
    double ess = 0.0;
    double dp = 0.0;             // converged shot-noise spread
    int iterations = 0;
    std::vector<double> trace;   // q iterates, for the failure report
};

// Fixed point of (q -> shot_noise_dp(q) -> sampled q), seeded at the exact
// N=2 value q=2. Converges fast because the relative-coordinate law does
// not actually depend on dp; the loop exists to make that self-consistency
// checkable. Throws DiagnosticError with the trace after 10 iterations.
QEstimate estimate_q(const SolitonParams& params, const McmcConfig& mcmc,
                     int threads = 1, double tol = 0.02);

// <(v . P)^2> at t=0 through the score identity
//   <(v.P)^2> = dp^2 (sum v)^2 + (c/2b)^2 E[(v.g)^2],
// exact Gaussian part plus sampled bound part (the cross term vanishes).
// dp is the q=2 shot-noise value from derive_scales; it only enters through
// the exact part, so any direction with sum(v)=0 is dp-independent.
Estimate momentum_quadratics(const SolitonParams& params,
                             const McmcConfig& mcmc,
                             std::span<const double> direction,
                             int threads = 1);

}  // namespace solitonq
