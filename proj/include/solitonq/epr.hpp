#pragma once

#include "solitonq/bethe.hpp"
#include "solitonq/model.hpp"

namespace solitonq {

// Pulse-center quadratures X = mean of mode-U positions, Y = mean of
// mode-V positions, with P_X, P_Y the total mode momenta, so [X, P_X] = i
// and the (X-Y, P_X-P_Y) uncertainty bound is 1.
struct EprMetrics {
    double var_sum_half;   // <((X+Y)/2)^2>
    double var_diff_half;  // <((X-Y)/2)^2>
    double p_sum_var;      // <(P_X+P_Y)^2> = N^2 dp^2
    double p_diff_var;     // <(P_X-P_Y)^2>
    double product_dd;     // <(X-Y)^2><(P_X-P_Y)^2>, conjugate pair
    double product_ds;     // <(X-Y)^2><(P_X+P_Y)^2>, commuting pair
    double product_sd;     // <(X+Y)^2><(P_X-P_Y)^2>, the other commuting pair
    double epr_bound;      // 1 in hbar=1 units
    bool p_diff_sampled;   // true when p_diff_var came from the sampler
};

// Closed-form metrics for n = m, B = 1:
//   <((X+Y)/2)^2> = delta_z_sq / N^2,  <((X-Y)/2)^2> = 2 q b^2 / (N^3 c^2),
// p_sum_var = N^2 dp^2. p_diff_var has a closed form only at N=2 (4 kappa^2
// with kappa = |c/2b|); for larger N call epr_metrics_with_sampled_pdiff
// with a sampler.momentum_quadratics value.
EprMetrics epr_metrics_analytic(const SolitonParams& params,
                                const PulseCenterState& state, double q);

EprMetrics epr_metrics_with_sampled_pdiff(const SolitonParams& params,
                                          const PulseCenterState& state,
                                          double q, double p_diff_var);

struct WitnessReport {
    bool entangled;        // strict: a commuting product below the bound
    double best_product;   // min(product_ds, product_sd)
    double ratio;          // best_product / epr_bound
    const char* pair;      // which commuting pair achieved the minimum
};

// Entanglement flag: either commuting-pair variance product driven below
// the conjugate pair's uncertainty bound.
WitnessReport epr_witness(const EprMetrics& metrics);

}  // namespace solitonq
