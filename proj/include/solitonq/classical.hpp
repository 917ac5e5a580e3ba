#pragma once

#include <complex>
#include <string>
#include <vector>

#include "solitonq/model.hpp"

namespace solitonq {

// Two complex envelopes on a uniform periodic grid over [-L, L).
struct Field2 {
    std::vector<std::complex<double>> u;
    std::vector<std::complex<double>> v;
    double grid_halfwidth = 0.0;
    int M = 0;

    double dz() const { return 2.0 * grid_halfwidth / M; }
    double coordinate(int i) const { return -grid_halfwidth + dz() * i; }
    double power() const;          // sum (|u|^2 + |v|^2) dz
    double momentum_mean() const;  // first spectral moment of u+v intensity
    void validate() const;
};

struct StepPlan {
    double dt = 0.0;
    long steps = 0;
    // Smooth edge absorber for radiation runs; off for conservation tests.
    bool absorber = false;

    // Enforces dt < dz^2 / (pi |b|).
    void validate(double dz, double b) const;
};

// Equal sech pair u = v = A sech(z/W) with A^2 = |b| / ((1+B)|c| W^2), the
// stationary vector-soliton amplitude rule.
Field2 make_sech_pair(int M, double halfwidth, double W,
                      const SolitonParams& params);

// Same profile rescaled so total power = P (width then no longer
// stationary unless P matches the soliton rule).
Field2 make_sech_pair_with_power(int M, double halfwidth, double W,
                                 const SolitonParams& params, double P);

// Single-mode Gaussian exp(-z^2/(4 sigma0^2)) e^{i k0 z} in u, v = 0;
// intensity variance starts at sigma0^2.
Field2 make_gaussian(int M, double halfwidth, double sigma0, double k0 = 0.0);

// Strang split-step integration of
//   i u_t = -b u_zz + 2c (|u|^2 + B |v|^2) u   (and u <-> v),
// spectral dispersion half-steps around a pointwise nonlinear step. With a
// ramp, c is sampled at each substep midpoint. Aborts with DiagnosticError
// on NaN or relative power drift beyond 1e-6, reporting the step index.
Field2 propagate(const Field2& field, const SolitonParams& params,
                 const StepPlan& plan,
                 const AdiabaticSchedule* c_ramp = nullptr);

// Least-squares sech^2 width of the total intensity profile. Throws
// ValidationError on zero or multimodal input.
double fit_soliton_width(const Field2& field);

// Variance of the normalized total intensity about its centroid.
double intensity_variance(const Field2& field);

struct RampReport {
    double width_initial;
    double width_final;
    double width_predicted;     // gamma * width_initial
    double radiation_fraction;  // power outside 10x the final width
    bool stable;                // radiation below 5%
};

// Ramps c down by 1/gamma over time T while propagating the B-appropriate
// soliton; adiabatic theory predicts the width grows by gamma.
RampReport ramp_stability_probe(const SolitonParams& params, double gamma,
                                double T, int M, double halfwidth);

// Binary snapshot: little-endian header (i32 M, f64 halfwidth, f64 t) then
// interleaved re/im doubles for u, then v.
void write_snapshot(const Field2& field, double t, const std::string& path);

}  // namespace solitonq
