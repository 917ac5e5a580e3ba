#pragma once

#include "solitonq/bethe.hpp"
#include "solitonq/model.hpp"

namespace solitonq {

enum class Regime { moderate, crossover, ultimate };

const char* regime_name(Regime r);

struct ProtocolReport {
    double gamma;              // |c_initial / c_final| expansion ratio
    double bandwidth_initial;  // relative-momentum scale |c/(2b)| before
    double bandwidth_final;    // and after
    double dp;                 // unchanged by the protocol
    double dz_final;           // pulse-center spread after compensation
    double sql_final;          // standard quantum limit at the final width
    double enhancement;        // sql_final / achieved per-photon spread = gamma
    double enhancement_capped; // min(gamma, kappa sqrt(N)), kappa = sqrt(2/q)
    double margin;             // adiabaticity margin of the ramp
    Regime regime;
};

struct AdiabaticResult {
    SolitonParams params;     // with the final c
    PulseCenterState state;   // phase_accum advanced by b * duration
    double margin;
};

// Slow expansion at fixed b: the amplitude keeps its form, c ramps to its
// final value, and ordinary dispersion accrues during the ramp. The
// schedule must start at the current c and never cross zero.
AdiabaticResult apply_adiabatic(const SolitonParams& params,
                                const AdiabaticSchedule& schedule,
                                const PulseCenterState& state);

// Linear propagation with opposite dispersion b' for time t': adds
// b'*t' to phase_accum. Overshoot is allowed (delta_z_sq is even in the
// accumulated phase) and simply reported.
PulseCenterState apply_dispersion_management(const PulseCenterState& state,
                                             double b_prime, double t_prime);

// Summary after compensation (requires |phase_accum| <= 1e-9 / (4 dp^2)).
// enhancement is the exact ratio of the final-bandwidth standard quantum
// limit to the achieved per-photon spread, which works out to gamma.
// enhancement_capped folds in the ceiling where the gain stops being real:
// the small-gamma branch and the sqrt(N) cap scaling are physics, but the
// cap constant kappa = sqrt(2/q) and the hard min are this module's
// interpolation, and the CLI tags that number's provenance accordingly.
ProtocolReport enhancement_report(const SolitonParams& initial,
                                  const SolitonParams& final_params,
                                  const PulseCenterState& state, double q,
                                  double margin = 0.0);

}  // namespace solitonq
