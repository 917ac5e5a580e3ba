#include "solitonq/epr.hpp"

#include <cmath>

namespace solitonq {

namespace {

EprMetrics metrics_common(const SolitonParams& params,
                          const PulseCenterState& state, double q,
                          double p_diff_var, bool sampled) {
    params.validate();
    if (!params.has_bound_state())
        throw ValidationError("b*c >= 0: no bound state");
    if (params.B != 1.0)
        throw ValidationError("pulse-center metrics require B = 1");
    if (params.n != params.m)
        throw ValidationError("mode quadratures need equal photon numbers");
    if (!(q > 0.0)) throw ValidationError("dispersion ratio q must be positive");
    if (state.N != params.N())
        throw ValidationError("state photon count does not match parameters");

    const double N = params.N();
    EprMetrics m;
    m.var_sum_half = state.delta_z_sq() / (N * N);
    m.var_diff_half =
        2.0 * q * params.b * params.b / (N * N * N * params.c * params.c);
    m.p_sum_var = N * N * state.dp * state.dp;
    m.p_diff_var = p_diff_var;
    m.product_dd = 4.0 * m.var_diff_half * m.p_diff_var;
    m.product_ds = 4.0 * m.var_diff_half * m.p_sum_var;
    m.product_sd = 4.0 * m.var_sum_half * m.p_diff_var;
    m.epr_bound = 1.0;
    m.p_diff_sampled = sampled;
    return m;
}

}  // namespace

EprMetrics epr_metrics_analytic(const SolitonParams& params,
                                const PulseCenterState& state, double q) {
    if (params.N() != 2)
        throw ValidationError(
            "closed-form relative momentum exists only at N = 2; use the "
            "sampled variant");
    double kappa = std::fabs(params.c / (2.0 * params.b));
    return metrics_common(params, state, q, 4.0 * kappa * kappa, false);
}

EprMetrics epr_metrics_with_sampled_pdiff(const SolitonParams& params,
                                          const PulseCenterState& state,
                                          double q, double p_diff_var) {
    if (!(p_diff_var >= 0.0))
        throw ValidationError("sampled momentum variance must be >= 0");
    return metrics_common(params, state, q, p_diff_var, true);
}

WitnessReport epr_witness(const EprMetrics& metrics) {
    WitnessReport w;
    if (metrics.product_ds <= metrics.product_sd) {
        w.best_product = metrics.product_ds;
        w.pair = "diff-sum";
    } else {
        w.best_product = metrics.product_sd;
        w.pair = "sum-diff";
    }
    w.ratio = w.best_product / metrics.epr_bound;
    w.entangled = w.best_product < metrics.epr_bound;
    return w;
}

}  // namespace solitonq
