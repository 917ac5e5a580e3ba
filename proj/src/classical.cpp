#include "solitonq/classical.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

namespace solitonq {

namespace {

// ln cosh without overflow for large |x|
double log_cosh(double x) {
    double a = std::fabs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - 0.6931471805599453094172321;
}

double total_intensity(const Field2& f, int i) {
    return std::norm(f.u[i]) + std::norm(f.v[i]);
}

double intensity_centroid(const Field2& f) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < f.M; ++i) {
        double I = total_intensity(f, i);
        num += f.coordinate(i) * I;
        den += I;
    }
    if (!(den > 0.0))
        throw ValidationError("field carries no power; centroid is undefined");
    return num / den;
}

}  // namespace

double Field2::power() const {
    double acc = 0.0;
    for (int i = 0; i < M; ++i) acc += std::norm(u[i]) + std::norm(v[i]);
    return acc * dz();
}

double Field2::momentum_mean() const {
    validate();
    std::vector<std::complex<double>> su = u, sv = v;
    fftw_plan pu = fftw_plan_dft_1d(
        M, reinterpret_cast<fftw_complex*>(su.data()),
        reinterpret_cast<fftw_complex*>(su.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(pu);
    fftw_destroy_plan(pu);
    fftw_plan pv = fftw_plan_dft_1d(
        M, reinterpret_cast<fftw_complex*>(sv.data()),
        reinterpret_cast<fftw_complex*>(sv.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(pv);
    fftw_destroy_plan(pv);

    double num = 0.0, den = 0.0;
    for (int j = 0; j < M; ++j) {
        double k = M_PI * (j < M / 2 ? j : j - M) / grid_halfwidth;
        double w = std::norm(su[j]) + std::norm(sv[j]);
        num += k * w;
        den += w;
    }
    if (!(den > 0.0))
        throw ValidationError("field carries no power; momentum is undefined");
    return num / den;
}

void Field2::validate() const {
    if (M < 16 || (M & (M - 1)) != 0)
        throw ValidationError("grid size must be a power of two, at least 16");
    if (static_cast<int>(u.size()) != M || static_cast<int>(v.size()) != M)
        throw ValidationError("field buffers do not match the grid size");
    if (!(grid_halfwidth > 0.0) || !std::isfinite(grid_halfwidth))
        throw ValidationError("grid halfwidth must be positive and finite");
}

void StepPlan::validate(double dz, double b) const {
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ValidationError("time step must be positive and finite");
    if (steps < 0) throw ValidationError("step count must not be negative");
    double bound = dz * dz / (M_PI * std::fabs(b));
    if (b != 0.0 && !(dt < bound)) {
        std::ostringstream msg;
        msg << "time step " << dt << " does not resolve the grid dispersion; "
            << "need dt < dz^2/(pi |b|) = " << bound;
        throw ValidationError(msg.str());
    }
}

Field2 make_sech_pair(int M, double halfwidth, double W,
                      const SolitonParams& params) {
    params.validate();
    if (!params.has_bound_state())
        throw ValidationError(
            "b*c >= 0: no bound state, the sech pair amplitude rule needs "
            "attractive coupling");
    if (!(W > 0.0) || !std::isfinite(W))
        throw ValidationError("soliton width must be positive and finite");
    Field2 f;
    f.M = M;
    f.grid_halfwidth = halfwidth;
    f.u.resize(std::max(M, 0));
    f.v.resize(std::max(M, 0));
    f.validate();
    double A =
        std::sqrt(std::fabs(params.b) / ((1.0 + params.B) * std::fabs(params.c))) /
        W;
    for (int i = 0; i < M; ++i) {
        double s = A / std::cosh(f.coordinate(i) / W);
        f.u[i] = s;
        f.v[i] = s;
    }
    return f;
}

Field2 make_sech_pair_with_power(int M, double halfwidth, double W,
                                 const SolitonParams& params, double P) {
    if (!(P > 0.0) || !std::isfinite(P))
        throw ValidationError("target power must be positive and finite");
    Field2 f = make_sech_pair(M, halfwidth, W, params);
    double scale = std::sqrt(P / f.power());
    for (int i = 0; i < M; ++i) {
        f.u[i] *= scale;
        f.v[i] *= scale;
    }
    return f;
}

Field2 make_gaussian(int M, double halfwidth, double sigma0, double k0) {
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0))
        throw ValidationError("gaussian width must be positive and finite");
    Field2 f;
    f.M = M;
    f.grid_halfwidth = halfwidth;
    f.u.resize(std::max(M, 0));
    f.v.resize(std::max(M, 0));
    f.validate();
    for (int i = 0; i < M; ++i) {
        double z = f.coordinate(i);
        f.u[i] = std::polar(std::exp(-z * z / (4.0 * sigma0 * sigma0)), k0 * z);
        f.v[i] = 0.0;
    }
    return f;
}

Field2 propagate(const Field2& field, const SolitonParams& params,
                 const StepPlan& plan, const AdiabaticSchedule* c_ramp) {
    field.validate();
    plan.validate(field.dz(), params.b);
    if (c_ramp) c_ramp->validate();

    Field2 out = field;
    const long S = plan.steps;
    if (S == 0) return out;
    const int M = out.M;
    const double L = out.grid_halfwidth;

    // spectral factors for exp(-i b k^2 dt); the inverse-transform 1/M
    // normalization is folded in
    std::vector<std::complex<double>> kin_half(M), kin_full(M);
    for (int j = 0; j < M; ++j) {
        double k = M_PI * (j < M / 2 ? j : j - M) / L;
        double rate = -params.b * k * k;
        kin_half[j] = std::polar(1.0 / M, rate * plan.dt * 0.5);
        kin_full[j] = std::polar(1.0 / M, rate * plan.dt);
    }

    std::vector<double> mask;
    if (plan.absorber) {
        mask.resize(M);
        double z0 = 0.8 * L;
        for (int i = 0; i < M; ++i) {
            double az = std::fabs(out.coordinate(i));
            if (az <= z0) {
                mask[i] = 1.0;
            } else {
                double r = (az - z0) / (L - z0);
                mask[i] = std::exp(-50.0 * plan.dt * r * r);
            }
        }
    }

    auto* up = reinterpret_cast<fftw_complex*>(out.u.data());
    auto* vp = reinterpret_cast<fftw_complex*>(out.v.data());
    struct PlanSet {
        fftw_plan fu, bu, fv, bv;
        ~PlanSet() {
            fftw_destroy_plan(fu);
            fftw_destroy_plan(bu);
            fftw_destroy_plan(fv);
            fftw_destroy_plan(bv);
        }
    } plans{fftw_plan_dft_1d(M, up, up, FFTW_FORWARD, FFTW_ESTIMATE),
            fftw_plan_dft_1d(M, up, up, FFTW_BACKWARD, FFTW_ESTIMATE),
            fftw_plan_dft_1d(M, vp, vp, FFTW_FORWARD, FFTW_ESTIMATE),
            fftw_plan_dft_1d(M, vp, vp, FFTW_BACKWARD, FFTW_ESTIMATE)};

    auto kinetic = [&](const std::vector<std::complex<double>>& fac) {
        fftw_execute(plans.fu);
        fftw_execute(plans.fv);
        for (int j = 0; j < M; ++j) {
            out.u[j] *= fac[j];
            out.v[j] *= fac[j];
        }
        fftw_execute(plans.bu);
        fftw_execute(plans.bv);
    };
    auto nonlinear = [&](long step) {
        double c = c_ramp ? c_ramp->c_at((step + 0.5) * plan.dt) : params.c;
        for (int i = 0; i < M; ++i) {
            double Iu = std::norm(out.u[i]);
            double Iv = std::norm(out.v[i]);
            out.u[i] *= std::polar(1.0, -2.0 * c * (Iu + params.B * Iv) * plan.dt);
            out.v[i] *= std::polar(1.0, -2.0 * c * (Iv + params.B * Iu) * plan.dt);
        }
    };

    const double p0 = out.power();
    auto check = [&](long done) {
        double p = out.power();
        if (!std::isfinite(p) || !std::isfinite(p0)) {
            std::ostringstream msg;
            msg << "field went non-finite by step " << done << " of " << S;
            throw DiagnosticError(msg.str());
        }
        if (!plan.absorber && std::fabs(p - p0) > 1e-6 * p0) {
            std::ostringstream msg;
            msg << "power drifted by " << std::fabs(p - p0) / p0
                << " (relative) at step " << done << "; the step is unstable";
            throw DiagnosticError(msg.str());
        }
    };

    if (plan.absorber) {
        for (long s = 0; s < S; ++s) {
            kinetic(kin_half);
            nonlinear(s);
            kinetic(kin_half);
            for (int i = 0; i < M; ++i) {
                out.u[i] *= mask[i];
                out.v[i] *= mask[i];
            }
            if ((s + 1) % 50 == 0 || s + 1 == S) check(s + 1);
        }
    } else {
        // Strang with merged interior half-steps
        kinetic(kin_half);
        for (long s = 0; s < S; ++s) {
            nonlinear(s);
            kinetic(s + 1 < S ? kin_full : kin_half);
            if ((s + 1) % 50 == 0 || s + 1 == S) check(s + 1);
        }
    }
    return out;
}

double fit_soliton_width(const Field2& field) {
    field.validate();
    const int M = field.M;
    std::vector<double> I(M);
    double peak = 0.0;
    int ip = 0;
    for (int i = 0; i < M; ++i) {
        I[i] = total_intensity(field, i);
        if (I[i] > peak) {
            peak = I[i];
            ip = i;
        }
    }
    if (!(peak > 0.0) || !std::isfinite(peak))
        throw ValidationError("intensity profile is empty; nothing to fit");

    // main lobe: grow from the peak until the profile falls below 2% of it
    int lo = ip, hi = ip;
    while (lo > 0 && I[lo - 1] > 0.02 * peak) --lo;
    while (hi < M - 1 && I[hi + 1] > 0.02 * peak) ++hi;
    for (int i = 0; i < M; ++i) {
        if (i >= lo && i <= hi) continue;
        if (I[i] > 0.25 * peak)
            throw ValidationError(
                "intensity profile is not single-lobed; width fit would be "
                "meaningless");
    }
    int n = hi - lo + 1;
    if (n < 5)
        throw ValidationError("main lobe spans too few grid points to fit");

    double zc = 0.0, wsum = 0.0;
    for (int i = lo; i <= hi; ++i) {
        zc += field.coordinate(i) * I[i];
        wsum += I[i];
    }
    zc /= wsum;

    std::vector<double> y(n), r(n);
    for (int i = 0; i < n; ++i) {
        y[i] = std::log(I[lo + i]);
        r[i] = field.coordinate(lo + i) - zc;
    }

    // least squares of ln I = a - 2 ln cosh(r/W) with the offset a profiled out
    auto misfit = [&](double W) {
        double a = 0.0;
        for (int i = 0; i < n; ++i) a += y[i] + 2.0 * log_cosh(r[i] / W);
        a /= n;
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            double d = y[i] + 2.0 * log_cosh(r[i] / W) - a;
            s += d * d;
        }
        return s;
    };

    // sech^2 falls to 2% of peak about 2.64 widths out; bracket around that
    double half_span = 0.5 * (field.coordinate(hi) - field.coordinate(lo));
    double west = half_span / 2.64;
    double wa = west / 4.0, wb = west * 4.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = wb - gr * (wb - wa), x2 = wa + gr * (wb - wa);
    double f1 = misfit(x1), f2 = misfit(x2);
    for (int it = 0; it < 200 && (wb - wa) > 1e-13 * wb; ++it) {
        if (f1 < f2) {
            wb = x2;
            x2 = x1;
            f2 = f1;
            x1 = wb - gr * (wb - wa);
            f1 = misfit(x1);
        } else {
            wa = x1;
            x1 = x2;
            f1 = f2;
            x2 = wa + gr * (wb - wa);
            f2 = misfit(x2);
        }
    }
    return 0.5 * (wa + wb);
}

double intensity_variance(const Field2& field) {
    field.validate();
    double zc = intensity_centroid(field);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < field.M; ++i) {
        double d = field.coordinate(i) - zc;
        double I = total_intensity(field, i);
        num += d * d * I;
        den += I;
    }
    return num / den;
}

RampReport ramp_stability_probe(const SolitonParams& params, double gamma,
                                double T, int M, double halfwidth) {
    params.validate();
    if (!(gamma >= 1.0) || !std::isfinite(gamma))
        throw ValidationError("expansion factor must be at least 1");
    if (!(T > 0.0) || !std::isfinite(T))
        throw ValidationError("ramp duration must be positive and finite");

    DerivedScales sc = derive_scales(params);
    Field2 f0 = make_sech_pair(M, halfwidth, sc.W0, params);
    double dz = f0.dz();
    StepPlan plan;
    plan.dt = std::min(sc.T_sol / 2000.0,
                       0.5 * dz * dz / (M_PI * std::fabs(params.b)));
    plan.steps = static_cast<long>(std::ceil(T / plan.dt));
    AdiabaticSchedule ramp;
    ramp.segments = {{T, params.c, params.c / gamma}};
    Field2 f1 = propagate(f0, params, plan, &ramp);

    RampReport rep;
    rep.width_initial = fit_soliton_width(f0);
    rep.width_final = fit_soliton_width(f1);
    rep.width_predicted = gamma * rep.width_initial;
    double zc = intensity_centroid(f1);
    double outside = 0.0, total = 0.0;
    for (int i = 0; i < M; ++i) {
        double I = total_intensity(f1, i);
        total += I;
        if (std::fabs(f1.coordinate(i) - zc) > 10.0 * rep.width_final)
            outside += I;
    }
    rep.radiation_fraction = outside / total;
    rep.stable = rep.radiation_fraction < 0.05;
    return rep;
}

void write_snapshot(const Field2& field, double t, const std::string& path) {
    field.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ValidationError("cannot open snapshot file for writing: " + path);
    std::int32_t m = field.M;
    double hw = field.grid_halfwidth;
    out.write(reinterpret_cast<const char*>(&m), sizeof m);
    out.write(reinterpret_cast<const char*>(&hw), sizeof hw);
    out.write(reinterpret_cast<const char*>(&t), sizeof t);
    auto dump = [&](const std::vector<std::complex<double>>& a) {
        for (const auto& z : a) {
            double re = z.real(), im = z.imag();
            out.write(reinterpret_cast<const char*>(&re), sizeof re);
            out.write(reinterpret_cast<const char*>(&im), sizeof im);
        }
    };
    dump(field.u);
    dump(field.v);
    out.flush();
    if (!out) throw DiagnosticError("snapshot write failed: " + path);
}

}  // namespace solitonq
