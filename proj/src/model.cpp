#include "solitonq/model.hpp"

#include <cmath>

#include "solitonq/bethe.hpp"

namespace solitonq {

void SolitonParams::validate() const {
    if (!std::isfinite(b) || !std::isfinite(c) || !std::isfinite(B))
        throw ValidationError("non-finite soliton parameter");
    if (b == 0.0) throw ValidationError("dispersion coefficient b must be nonzero");
    if (c == 0.0) throw ValidationError("nonlinearity c must be nonzero");
    if (B < 0.0) throw ValidationError("coupling ratio B must be >= 0");
    if (n < 0 || m < 0) throw ValidationError("photon numbers must be >= 0");
    if (N() < 1) throw ValidationError("need at least one photon");
}

DerivedScales derive_scales(const SolitonParams& params) {
    params.validate();
    if (!params.has_bound_state())
        throw ValidationError("b*c >= 0: no bound state, no soliton scales");
    DerivedScales s;
    s.W0 = std::fabs(2.0 * params.b / (params.N() * params.c));
    s.T_sol = M_PI * s.W0 * s.W0 / (2.0 * std::fabs(params.b));
    s.shot_noise_dp = 1.0 / (2.0 * std::sqrt(double(params.N())) * s.W0);
    return s;
}

double shot_noise_dp(const SolitonParams& params, double q) {
    params.validate();
    if (!params.has_bound_state())
        throw ValidationError("b*c >= 0: no bound state, no soliton scales");
    if (!(q > 0.0)) throw ValidationError("dispersion ratio q must be positive");
    return std::sqrt(double(params.N())) * std::fabs(params.c) /
           (std::sqrt(8.0 * q) * std::fabs(params.b));
}

double AdiabaticSchedule::total_duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
}

double AdiabaticSchedule::c_initial() const {
    if (segments.empty()) throw ValidationError("empty schedule");
    return segments.front().c_start;
}

double AdiabaticSchedule::c_final() const {
    if (segments.empty()) throw ValidationError("empty schedule");
    return segments.back().c_end;
}

double AdiabaticSchedule::c_at(double t) const {
    if (segments.empty()) throw ValidationError("empty schedule");
    if (t <= 0.0) return c_initial();
    double cum = 0.0;
    for (const auto& s : segments) {
        if (t < cum + s.duration) {
            double frac = (t - cum) / s.duration;
            return s.c_start + (s.c_end - s.c_start) * frac;
        }
        cum += s.duration;
    }
    return c_final();
}

void AdiabaticSchedule::validate() const {
    if (segments.empty()) throw ValidationError("empty schedule");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (!std::isfinite(s.duration) || s.duration < 0.0)
            throw ValidationError("schedule segment duration must be >= 0");
        if (!std::isfinite(s.c_start) || !std::isfinite(s.c_end) ||
            s.c_start * s.c_end <= 0.0)
            throw ValidationError("schedule c must keep its sign");
        if (i > 0 && segments[i - 1].c_end != s.c_start)
            throw ValidationError("schedule segments must be continuous in c");
    }
}

double adiabaticity_margin(const AdiabaticSchedule& schedule,
                           const SolitonParams& params) {
    schedule.validate();
    SolitonParams at_start = params;
    at_start.c = schedule.c_initial();
    SolitonParams at_end = params;
    at_end.c = schedule.c_final();
    double dE = energy(at_end, 0.0) - energy(at_start, 0.0);
    return schedule.total_duration() * std::fabs(dE);
}

}  // namespace solitonq
