#include "solitonq/protocol.hpp"

#include <cmath>

namespace solitonq {

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::moderate:
            return "moderate";
        case Regime::crossover:
            return "crossover";
        default:
            return "ultimate";
    }
}

AdiabaticResult apply_adiabatic(const SolitonParams& params,
                                const AdiabaticSchedule& schedule,
                                const PulseCenterState& state) {
    params.validate();
    schedule.validate();
    if (!params.has_bound_state())
        throw ValidationError("b*c >= 0: no soliton to expand");
    if (schedule.c_initial() != params.c)
        throw ValidationError("schedule must start at the current coupling");

    AdiabaticResult out;
    out.params = params;
    out.params.c = schedule.c_final();
    out.state = state;
    out.state.phase_accum += params.b * schedule.total_duration();
    out.margin = adiabaticity_margin(schedule, params);
    return out;
}

PulseCenterState apply_dispersion_management(const PulseCenterState& state,
                                             double b_prime, double t_prime) {
    if (!std::isfinite(b_prime) || !std::isfinite(t_prime) || t_prime < 0.0)
        throw ValidationError("dispersion-management span must be finite, t' >= 0");
    PulseCenterState out = state;
    out.phase_accum += b_prime * t_prime;
    return out;
}

ProtocolReport enhancement_report(const SolitonParams& initial,
                                  const SolitonParams& final_params,
                                  const PulseCenterState& state, double q,
                                  double margin) {
    initial.validate();
    final_params.validate();
    if (final_params.b != initial.b)
        throw ValidationError("expansion protocol keeps b fixed");
    if (final_params.n != initial.n || final_params.m != initial.m)
        throw ValidationError("photon numbers cannot change mid-protocol");
    if (initial.c * final_params.c <= 0.0)
        throw ValidationError("coupling must keep its sign");
    if (!(q > 0.0)) throw ValidationError("dispersion ratio q must be positive");
    if (state.N != initial.N())
        throw ValidationError("state photon count does not match parameters");
    double dp2 = state.dp * state.dp;
    if (std::fabs(state.phase_accum) > 1e-9 / (4.0 * dp2))
        throw ValidationError(
            "residual dispersion phase too large; compensate before reporting");

    const int N = initial.N();
    ProtocolReport rep;
    rep.gamma = std::fabs(initial.c / final_params.c);
    rep.bandwidth_initial = std::fabs(initial.c / (2.0 * initial.b));
    rep.bandwidth_final = std::fabs(final_params.c / (2.0 * final_params.b));
    rep.dp = state.dp;
    rep.dz_final = std::sqrt(state.delta_z_sq());
    rep.sql_final = derive_scales(final_params).W0 / std::sqrt(double(N));
    rep.enhancement = rep.sql_final / (rep.dz_final / N);
    double cap = std::sqrt(2.0 / q) * std::sqrt(double(N));
    rep.enhancement_capped = std::min(rep.gamma, cap);
    rep.margin = margin;
    double lo = std::sqrt(N / 3.0), hi = std::sqrt(3.0 * N);
    rep.regime = rep.gamma < lo
                     ? Regime::moderate
                     : (rep.gamma < hi ? Regime::crossover : Regime::ultimate);
    return rep;
}

}  // namespace solitonq
