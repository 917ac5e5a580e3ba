#include "solitonq/bethe.hpp"

#include <cmath>

namespace solitonq {

namespace {

// Dispersion attenuation of the pulse-center exponent: the Gaussian
// momentum superposition turns exp(-dp^2 u^2) into exp(-dp^2 u^2 / D) with
// D = 1 + i x, x = 4 N dp^2 phase_accum. Only w = Re(1/D) = 1/(1+x^2)
// reaches the modulus.
double dispersion_x(const PulseCenterState& state) {
    return 4.0 * state.N * state.dp * state.dp * state.phase_accum;
}

double log_norm_or_zero(const SolitonParams& params) {
    if (!params.eigenstate_valid()) return 0.0;
    return std::log(norm_constant(params));
}

}  // namespace

std::vector<double> Configuration::zs() const {
    std::vector<double> z;
    z.reserve(xs.size() + ys.size());
    z.insert(z.end(), xs.begin(), xs.end());
    z.insert(z.end(), ys.begin(), ys.end());
    return z;
}

double pairwise_potential(const Configuration& config, double B) {
    std::vector<double> z = config.zs();
    return bound_weight(z, static_cast<int>(config.xs.size()), B);
}

double bound_weight(std::span<const double> z, int n, double B) {
    const int N = static_cast<int>(z.size());
    double s = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
            double kappa = ((i < n) == (j < n)) ? 1.0 : B;
            s += kappa * std::fabs(z[j] - z[i]);
        }
    return s;
}

AmplitudeValue eval_eigenamplitude(const Configuration& config,
                                   const SolitonParams& params, double p) {
    params.validate();
    double S = pairwise_potential(config, params.B);
    double u = 0.0;
    for (double x : config.xs) u += x;
    for (double y : config.ys) u += y;
    AmplitudeValue out;
    out.log_modulus =
        log_norm_or_zero(params) + params.c / (2.0 * params.b) * S;
    out.value = std::polar(std::exp(out.log_modulus), p * u);
    return out;
}

double norm_constant(const SolitonParams& params) {
    params.validate();
    double lr = std::log(std::fabs(params.c / params.b));
    auto one_mode = [&](int k) {
        if (k == 0) return 0.0;  // empty mode contributes no factor
        return 0.5 * (std::lgamma(double(k)) + (k - 1) * lr -
                      std::log(2.0 * M_PI));
    };
    if (params.B == 1.0) return std::exp(one_mode(params.N()));
    if (params.B == 0.0)
        return std::exp(one_mode(params.n) + one_mode(params.m));
    throw ValidationError("normalization constant known only for B in {0,1}");
}

double energy(const SolitonParams& params, double p) {
    params.validate();
    if (!params.eigenstate_valid())
        throw ValidationError("closed-form energy requires B in {0,1}");
    double n = params.n, m = params.m, B = params.B;
    double interior = n * (n * n - 1.0) + m * (m * m - 1.0) +
                      3.0 * B * B * n * m * (n + m);
    return params.b * params.N() * p * p -
           params.c * params.c / (12.0 * params.b) * interior;
}

AmplitudeValue eval_time_amplitude(const Configuration& config,
                                   const SolitonParams& params,
                                   const PulseCenterState& state) {
    params.validate();
    double S = pairwise_potential(config, params.B);
    double u = 0.0;
    for (double x : config.xs) u += x;
    for (double y : config.ys) u += y;
    double x = dispersion_x(state);
    double w = 1.0 / (1.0 + x * x);
    double a = state.dp * state.dp * u * u * w;
    AmplitudeValue out;
    out.log_modulus =
        log_norm_or_zero(params) + params.c / (2.0 * params.b) * S - a;
    out.value = std::polar(std::exp(out.log_modulus), a * x);
    return out;
}

double log_density(std::span<const double> z, const SolitonParams& params,
                   const PulseCenterState& state) {
    double u = 0.0;
    for (double zi : z) u += zi;
    double x = dispersion_x(state);
    double w = 1.0 / (1.0 + x * x);
    return -2.0 * state.dp * state.dp * w * u * u +
           params.c / params.b * bound_weight(z, params.n, params.B);
}

void sign_sums(std::span<const double> z, int n, double B,
               std::span<double> g) {
    const int N = static_cast<int>(z.size());
    for (int i = 0; i < N; ++i) g[i] = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
            double kappa = ((i < n) == (j < n)) ? 1.0 : B;
            // tie: the later index counts as the upper coordinate
            double s = z[j] > z[i] ? 1.0 : (z[j] < z[i] ? -1.0 : 1.0);
            g[j] += kappa * s;
            g[i] -= kappa * s;
        }
}

std::vector<double> logdensity_gradient(const Configuration& config,
                                        const SolitonParams& params,
                                        const PulseCenterState& state) {
    std::vector<double> z = config.zs();
    std::vector<double> g(z.size());
    sign_sums(z, static_cast<int>(config.xs.size()), params.B, g);
    double u = 0.0;
    for (double zi : z) u += zi;
    double x = dispersion_x(state);
    double w = 1.0 / (1.0 + x * x);
    double drift = -4.0 * state.dp * state.dp * w * u;
    std::vector<double> grad(z.size());
    for (std::size_t j = 0; j < z.size(); ++j)
        grad[j] = drift + params.c / params.b * g[j];
    return grad;
}

}  // namespace solitonq
