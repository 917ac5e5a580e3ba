#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace solitonq {

// Bad inputs or configuration; the CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A computation ran but failed its own quality checks (low ESS, power drift,
// non-convergence); the CLI maps this to exit code 3.
struct DiagnosticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Physical parameters of the two-mode soliton model, hbar = 1 throughout.
struct SolitonParams {
    double b = -1.0;  // group velocity dispersion coefficient
    double c = 1.0;   // self phase modulation coefficient
    double B = 1.0;   // cross to self phase modulation ratio, >= 0
    int n = 1;        // photon number, mode U
    int m = 1;        // photon number, mode V

    int N() const { return n + m; }
    // The ansatz is an exact eigenstate only for uncoupled (B=0) and
    // Manakov (B=1) solitons.
    bool eigenstate_valid() const { return B == 0.0 || B == 1.0; }
    bool has_bound_state() const { return b * c < 0.0; }
    void validate() const;  // throws ValidationError on nonsense
};

struct DerivedScales {
    double W0;             // classical soliton width |2b/(Nc)|
    double T_sol;          // soliton period, pi W0^2 / (2|b|)
    double shot_noise_dp;  // 1/(2 sqrt(N) W0), the q=2 shot-noise spread
};

DerivedScales derive_scales(const SolitonParams& params);

// Momentum spread that zeroes the cross covariance at t=0 for a given
// relative-distance dispersion ratio q: sqrt(N)|c| / (sqrt(8q)|b|).
double shot_noise_dp(const SolitonParams& params, double q);

struct ScheduleSegment {
    double duration;
    double c_start;
    double c_end;
};

// Piecewise-linear ramp of c at fixed b. c must keep its sign throughout.
struct AdiabaticSchedule {
    std::vector<ScheduleSegment> segments;

    double total_duration() const;
    double c_initial() const;  // throws if empty
    double c_final() const;
    // c at elapsed time t, clamped to the endpoints.
    double c_at(double t) const;
    void validate() const;
};

// T * |E(end) - E(start)| at p=0; large values indicate the ramp is slow
// enough for the state to follow adiabatically. Zero-duration or constant-c
// schedules give 0.
double adiabaticity_margin(const AdiabaticSchedule& schedule,
                           const SolitonParams& params);

}  // namespace solitonq
