#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "solitonq/model.hpp"

namespace solitonq {

// Labeled photon positions: n coordinates in mode U, m in mode V. The
// flattened view z = (xs..., ys...) is what the sampler and the grid
// validator work with.
struct Configuration {
    std::vector<double> xs;
    std::vector<double> ys;

    int N() const { return static_cast<int>(xs.size() + ys.size()); }
    std::vector<double> zs() const;
};

struct AmplitudeValue {
    std::complex<double> value;
    double log_modulus;  // finite even when value under/overflows
};

// Pulse-center bookkeeping: momentum spread dp and the accumulated
// dispersion phase integral(b dt). Kept in length^2 units so piecewise
// media compose by addition.
struct PulseCenterState {
    double dp;
    double phase_accum = 0.0;
    int N = 1;

    // Variance of sum(z_j) under the pulse-center Gaussian:
    // 1/(4 dp^2) + 4 (N dp phase_accum)^2.
    double delta_z_sq() const {
        double a = N * dp * phase_accum;
        return 1.0 / (4.0 * dp * dp) + 4.0 * a * a;
    }
};

// Exponent weight S = sum |x_j - x_i| + sum |y_k - y_l| + B sum |x_j - y_k|.
double pairwise_potential(const Configuration& config, double B);

// Same weight on a flattened coordinate span (first n entries are mode U).
// Hot path for the sampler, no allocation.
double bound_weight(std::span<const double> z, int n, double B);

// Stationary amplitude C_nm exp[i p sum(z) + (c/2b) S]. Computable for any
// B >= 0 (the grid validator needs the non-eigenstate case); the
// normalization constant is applied only where it is known (B in {0,1}),
// otherwise C = 1.
AmplitudeValue eval_eigenamplitude(const Configuration& config,
                                   const SolitonParams& params, double p);

// [(N-1)! |c/b|^(N-1) / (2 pi)]^(1/2) for B=1, via lgamma. For B=0 the
// state factorizes and the constant is the product of the per-mode scalar
// constants. Other B rejected: normalization unknown.
double norm_constant(const SolitonParams& params);

// Bound-state energy b N p^2 - (c^2/12b)[n(n^2-1) + m(m^2-1) + 3B^2 nm(n+m)],
// valid only for B in {0,1}.
double energy(const SolitonParams& params, double p);

// Momentum-superposed amplitude: Gaussian pulse-center factor (spread dp,
// dispersion through phase_accum) times the bound-state exponential.
AmplitudeValue eval_time_amplitude(const Configuration& config,
                                   const SolitonParams& params,
                                   const PulseCenterState& state);

// log |f|^2 of the time amplitude, dropping configuration-independent
// constants. This is the sampler's target density exponent.
double log_density(std::span<const double> z, const SolitonParams& params,
                   const PulseCenterState& state);

// Order-sign sums g_j = sum_{i != j} kappa_ij sign(z_j - z_i) with
// kappa = 1 within a mode and B across modes. Exact ties resolve as if the
// later-indexed coordinate were displaced one ulp upward.
void sign_sums(std::span<const double> z, int n, double B,
               std::span<double> g);

// Gradient of log |f|^2: -4 dp^2 w(t) sum(z) + (c/b) g_j, where w is the
// real part factor of the pulse-center exponent.
std::vector<double> logdensity_gradient(const Configuration& config,
                                        const SolitonParams& params,
                                        const PulseCenterState& state);

}  // namespace solitonq
