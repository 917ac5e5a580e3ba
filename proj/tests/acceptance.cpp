// Acceptance gate: one line per criterion, nonzero exit if any fails.
// Invokes the installed CLI binary for the end-to-end checks, the library
// directly for everything else.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "solitonq/bethe.hpp"
#include "solitonq/classical.hpp"
#include "solitonq/eigencheck.hpp"
#include "solitonq/epr.hpp"
#include "solitonq/model.hpp"
#include "solitonq/protocol.hpp"
#include "solitonq/sampler.hpp"

namespace fs = std::filesystem;
using namespace solitonq;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int idx, bool pass, const std::string& details) {
    std::printf("criterion %d: %s - %s\n", idx, pass ? "PASS" : "FAIL",
                details.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

double secs_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli_binary(const std::string& bin, const std::string& args,
                   const fs::path& log) {
    std::string cmd = bin + " " + args + " >> " + log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

SolitonParams pair_params(int N) {
    SolitonParams p;
    if (N % 2 == 0) {
        p.n = N / 2;
        p.m = N / 2;
    } else {
        p.n = N;
        p.m = 0;
    }
    return p;
}

constexpr int kThreads = 4;

// ---------------------------------------------------------------- criterion 1

void criterion_1() {
    auto t0 = std::chrono::steady_clock::now();
    SolitonParams params;
    PulseCenterState st{derive_scales(params).shot_noise_dp};
    st.N = params.N();
    McmcConfig cfg;  // defaults: 8 chains x 125000 kept samples
    MomentEstimates est = sample_positions(params, st, cfg, kThreads);
    double dt = secs_since(t0);

    double dm = std::fabs(est.mean_abs_distance.value - 1.0);
    double dq = std::fabs(est.q.value - 2.0);
    bool pass = dm <= 3.0 * est.mean_abs_distance.se &&
                est.mean_abs_distance.se <= 0.01 && dq <= 3.0 * est.q.se &&
                est.q.se <= 0.02 && est.total_samples >= 1000000 && dt < 60.0;
    report(1, pass,
           fmt("mean|z1-z2|=%.4f (se %.4f, target 1), q=%.4f (se %.4f, target "
               "2), samples=%ld, %.1fs",
               est.mean_abs_distance.value, est.mean_abs_distance.se,
               est.q.value, est.q.se, est.total_samples, dt));
}

// ---------------------------------------------------------------- criterion 2

void criterion_2() {
    bool pass = true;
    std::string det;
    for (int N : {2, 4, 6}) {
        SolitonParams params = pair_params(N);
        PulseCenterState st{shot_noise_dp(params, 2.0)};
        st.N = N;
        McmcConfig cfg;
        cfg.chains = 4;
        cfg.samples_per_chain = 40000;
        cfg.burn_in = 4000;
        cfg.seed = 2024 + static_cast<unsigned>(N);
        MomentEstimates est = sample_positions(params, st, cfg, kThreads);

        double b = params.b, c = params.c;
        double q = est.q.value;
        double dz2 = st.delta_z_sq();
        double ts = dz2 / (N * N) +
                    2.0 * q * (N - 1) * b * b / (std::pow(N, 3) * c * c);
        double tc = dz2 / (N * N) - 2.0 * q * b * b / (std::pow(N, 3) * c * c);
        double ds_dq = 2.0 * (N - 1) * b * b / (std::pow(N, 3) * c * c);
        double dc_dq = 2.0 * b * b / (std::pow(N, 3) * c * c);
        double se_s = std::hypot(est.cov_same.se, ds_dq * est.q.se);
        double se_c = std::hypot(est.cov_cross.se, dc_dq * est.q.se);

        bool ok_s = std::fabs(est.cov_same.value - ts) <= 3.0 * se_s;
        bool ok_c = std::fabs(est.cov_cross.value - tc) <= 3.0 * se_c;
        double ident = est.var_sum.value -
                       (N * est.cov_same.value +
                        double(N) * (N - 1) * est.cov_cross.value);
        bool ok_i = std::fabs(ident) <= 1e-12 * std::max(1.0, est.var_sum.value);
        pass = pass && ok_s && ok_c && ok_i;
        det += fmt("N=%d same %.4f vs %.4f, cross %.4f vs %.4f, ident %.1e; ",
                   N, est.cov_same.value, ts, est.cov_cross.value, tc, ident);
    }
    report(2, pass, det + "targets use each run's own q");
}

// ---------------------------------------------------------------- criterion 3

void criterion_3() {
    bool pass = true;
    std::string det;
    for (int N : {2, 4}) {
        SolitonParams params = pair_params(N);
        McmcConfig qcfg;
        qcfg.chains = 4;
        qcfg.samples_per_chain = 30000;
        qcfg.burn_in = 3000;
        qcfg.seed = 4100 + static_cast<unsigned>(N);
        QEstimate qe = estimate_q(params, qcfg, kThreads);

        PulseCenterState st{qe.dp};
        st.N = N;
        McmcConfig cfg = qcfg;
        cfg.samples_per_chain = 40000;
        cfg.burn_in = 4000;
        cfg.seed = 8200 + static_cast<unsigned>(N);
        MomentEstimates est = sample_positions(params, st, cfg, kThreads);
        bool ok = std::fabs(est.cov_cross.value) <= 3.0 * est.cov_cross.se;
        pass = pass && ok;
        det += fmt("N=%d dp*=%.4f cross=%.5f (se %.5f); ", N, qe.dp,
                   est.cov_cross.value, est.cov_cross.se);
    }
    report(3, pass, det + "cross-covariance vanishes at the balanced width");
}

// ---------------------------------------------------------------- criterion 4

void criterion_4() {
    auto t0 = std::chrono::steady_clock::now();
    SolitonParams params;
    params.n = 2;
    params.m = 1;

    auto spread = [&](double B) {
        params.B = B;
        auto pats = ordering_patterns(params);
        double lo = 1e300, hi = -1e300;
        for (const auto& pat : pats) {
            double e = region_energy_analytic(params, pat, 0.0);
            lo = std::min(lo, e);
            hi = std::max(hi, e);
        }
        return hi - lo;
    };
    bool ok_exact = spread(0.0) == 0.0 && spread(1.0) == 0.0;
    bool ok_split = spread(2.0 / 3.0) > 1e-3 && spread(2.0) > 1e-3;

    std::vector<double> full_b1, glob_b23;
    double glob_b1_96 = 0.0;
    for (int M : {24, 48, 96}) {
        GridSpec g;
        g.points_per_axis = M;
        params.B = 1.0;
        ResidualReport r1 = residual(params, g, 0.0, kThreads);
        full_b1.push_back(r1.full_residual);
        if (M == 96) glob_b1_96 = r1.global_residual;
        params.B = 2.0 / 3.0;
        glob_b23.push_back(residual(params, g, 0.0, kThreads).global_residual);
    }
    bool ok_decrease = full_b1[1] < full_b1[0] && full_b1[2] < full_b1[1];
    bool ok_plateau = glob_b23[2] > 0.5 * glob_b23[0];
    double ratio = glob_b23[2] / std::max(glob_b1_96, 1e-300);
    bool ok_ratio = ratio >= 10.0;
    double dt = secs_since(t0);

    report(4,
           ok_exact && ok_split && ok_decrease && ok_plateau && ok_ratio &&
               dt < 300.0,
           fmt("spreads B=0/1 exact 0, B=2/3 %.3f, B=2 %.3f; full[B=1] "
               "%.2e>%.2e>%.2e; global[B=2/3] %.2e,%.2e,%.2e plateaus; "
               "96^3 ratio %.1e; %.1fs",
               spread(2.0 / 3.0), spread(2.0), full_b1[0], full_b1[1],
               full_b1[2], glob_b23[0], glob_b23[1], glob_b23[2], ratio, dt));
}

// ---------------------------------------------------------------- criterion 5

void criterion_5() {
    PulseCenterState st{0.35};
    st.N = 2;
    st.phase_accum = -2.5;  // free flight at b=-1 for t=2.5
    PulseCenterState comp = apply_dispersion_management(st, 1.0, 2.5);
    double target = 1.0 / (4.0 * st.dp * st.dp);
    double rel = std::fabs(comp.delta_z_sq() - target) / target;
    bool ok_restore = rel <= 1e-12 && comp.phase_accum == 0.0;

    int best = -1;
    double best_v = 1e300;
    for (int i = 0; i <= 40; ++i) {
        PulseCenterState probe = apply_dispersion_management(st, 1.0, 0.125 * i);
        double v = probe.delta_z_sq();
        if (v < best_v) {
            best_v = v;
            best = i;
        }
    }
    bool ok_scan = best == 20;  // t' = 2.5 sits at index 20 of the grid
    report(5, ok_restore && ok_scan,
           fmt("restored width^2 rel err %.1e; scan minimum at t'=%.3f "
               "(compensation point)",
               rel, 0.125 * best));
}

// ---------------------------------------------------------------- criterion 6

void criterion_6(const std::string& bin, const fs::path& work) {
    SolitonParams init = pair_params(100);
    PulseCenterState st{derive_scales(init).shot_noise_dp};
    st.N = 100;

    bool ok_exact = true;
    std::string det;
    for (double gamma : {2.0, 4.0, 8.0}) {
        SolitonParams fin = init;
        fin.c = init.c / gamma;
        ProtocolReport rep = enhancement_report(init, fin, st, 2.0);
        ok_exact = ok_exact &&
                   std::fabs(rep.enhancement - gamma) <= 1e-12 * gamma;
        det += fmt("g=%g->%.12f ", gamma, rep.enhancement);
    }

    double cap = std::sqrt(2.0 / 2.0) * 10.0;  // kappa*sqrt(N) at q=2, N=100
    bool ok_mono = true, ok_sat = true;
    double prev = 0.0;
    for (double gamma = 1.0; gamma <= 1024.0; gamma *= 2.0) {
        SolitonParams fin = init;
        fin.c = init.c / gamma;
        ProtocolReport rep = enhancement_report(init, fin, st, 2.0);
        ok_mono = ok_mono && rep.enhancement_capped >= prev - 1e-15;
        prev = rep.enhancement_capped;
        if (gamma >= 16.0)
            ok_sat = ok_sat && std::fabs(rep.enhancement_capped - cap) < 1e-12;
    }

    fs::path dir = work / "c6";
    fs::create_directories(dir);
    std::ofstream(dir / "cfg.json")
        << R"({"params": {"n": 50, "m": 50},
               "schedule": {"duration": 50.0, "c_final": 0.125},
               "q": {"source": "fixed", "value": 2.0}})";
    fs::path out = dir / "out";
    int rc = run_cli_binary(bin,
                            "protocol --config " + (dir / "cfg.json").string() +
                                " --out " + out.string(),
                            dir / "cli.log");
    bool ok_cli = rc == 0;
    std::string prov = "(cli failed)";
    if (ok_cli) {
        json res = json::parse(slurp(out / "results.json"));
        prov = res["enhancement_capped"]["provenance"].get<std::string>();
        ok_cli = std::fabs(res["enhancement"]["value"].get<double>() - 8.0) <
                     1e-9 &&
                 prov == "model";
    }
    report(6, ok_exact && ok_mono && ok_sat && ok_cli,
           det + fmt("; cap=%.1f saturates, monotone; cli capped provenance "
                     "\"%s\"",
                     cap, prov.c_str()));
}

// ---------------------------------------------------------------- criterion 7

void criterion_7() {
    // note: the commuting-quadrature product reported here as product_sd
    // (position sum x momentum difference) is the squeezed one; product_ds
    // is its mirror. Both are emitted, the witness takes the smaller.
    McmcConfig qcfg;
    qcfg.chains = 4;
    qcfg.samples_per_chain = 40000;
    qcfg.burn_in = 4000;

    auto dd_for = [&](double b, double c, unsigned seed) {
        SolitonParams params;
        params.b = b;
        params.c = c;
        McmcConfig cfg = qcfg;
        cfg.seed = seed;
        QEstimate qe = estimate_q(params, cfg, kThreads);
        PulseCenterState st{qe.dp};
        st.N = 2;
        return epr_metrics_analytic(params, st, qe.q).product_dd;
    };

    double dd1 = dd_for(-1.0, 1.0, 7100);
    bool ok_dd = std::fabs(dd1 - 2.0) <= 0.04;

    double dd2 = dd_for(-2.0, 1.0, 7200);
    double dd4 = dd_for(-4.0, 1.0, 7300);
    double lo = std::min({dd1, dd2, dd4}), hi = std::max({dd1, dd2, dd4});
    bool ok_inv = (hi - lo) / 2.0 <= 0.05;

    SolitonParams init;
    PulseCenterState st{derive_scales(init).shot_noise_dp};
    st.N = 2;
    double sd1 = 0.0;
    bool ok_scale = true, ok_wit = true;
    for (double gamma : {1.0, 2.0, 4.0, 8.0}) {
        SolitonParams fin = init;
        fin.c = init.c / gamma;
        EprMetrics met = epr_metrics_analytic(fin, st, 2.0);
        if (gamma == 1.0)
            sd1 = met.product_sd;
        else
            ok_scale = ok_scale &&
                       std::fabs(met.product_sd * gamma * gamma - sd1) <=
                           1e-12 * sd1;
        WitnessReport wit = epr_witness(met);
        if (gamma == 1.0) {
            // no expansion: the best commuting product sits exactly on the
            // bound, so pin the value, not the ulp-sensitive strict flag
            ok_wit = ok_wit &&
                     std::fabs(wit.best_product - met.epr_bound) <= 1e-12;
        } else {
            ok_wit = ok_wit && wit.entangled;
        }
    }
    report(7, ok_dd && ok_inv && ok_scale && ok_wit,
           fmt("dd=%.3f/%.3f/%.3f across |b/c|=1,2,4 (target 2); squeezed "
               "commuting product (reported as product_sd) scales as 1/g^2 "
               "from %.3f; witness fires for g>=2, sits on the bound at g=1",
               dd1, dd2, dd4, sd1));
}

// ---------------------------------------------------------------- criterion 8

void criterion_8() {
    SolitonParams params;  // b=-1, c=1
    bool pass = true;
    std::string det;
    for (double B : {1.0, 2.0 / 3.0}) {
        params.B = B;
        int M = 2048;
        double hw = 40.0, W = 1.0;
        Field2 f = make_sech_pair(M, hw, W, params);
        std::vector<double> mod0(M);
        for (int i = 0; i < M; ++i) mod0[i] = std::abs(f.u[i]);
        double T_sol = M_PI * W * W / (2.0 * std::fabs(params.b));
        double T = 5.0 * T_sol;
        StepPlan plan;
        double dz = f.dz();
        plan.dt = std::min(T_sol / 2000.0,
                           0.5 * dz * dz / (M_PI * std::fabs(params.b)));
        plan.steps = static_cast<long>(std::ceil(T / plan.dt));
        double p0 = f.power();
        Field2 f1 = propagate(f, params, plan);
        double linf = 0.0;
        for (int i = 0; i < M; ++i)
            linf = std::max(linf, std::fabs(std::abs(f1.u[i]) - mod0[i]));
        double drift = std::fabs(f1.power() - p0) / p0;
        pass = pass && linf < 1e-3 && drift < 1e-10;
        det += fmt("B=%.3g Linf=%.1e drift=%.1e; ", B, linf, drift);
    }

    // second-order convergence: halving dt cuts the shape error ~4x
    params.B = 1.0;
    auto shape_err = [&](double dt) {
        Field2 f = make_sech_pair(512, 25.0, 1.0, params);
        std::vector<double> mod0(512);
        for (int i = 0; i < 512; ++i) mod0[i] = std::abs(f.u[i]);
        StepPlan plan;
        plan.dt = dt;
        plan.steps = static_cast<long>(std::ceil(M_PI / 2.0 / dt));
        Field2 f1 = propagate(f, params, plan);
        double e = 0.0;
        for (int i = 0; i < 512; ++i)
            e = std::max(e, std::fabs(std::abs(f1.u[i]) - mod0[i]));
        return e;
    };
    double e1 = shape_err(5e-4), e2 = shape_err(2.5e-4);
    double ratio = e1 / e2;
    bool ok_conv = ratio > 3.2 && ratio < 4.8;

    // fixed power 4 binds at half the width
    Field2 g = make_sech_pair_with_power(1024, 25.0, 0.5, params, 4.0);
    StepPlan plan;
    plan.dt = 2e-4;
    double Tw = M_PI * 0.25 / 2.0;
    plan.steps = static_cast<long>(std::ceil(Tw / plan.dt));
    Field2 g1 = propagate(g, params, plan);
    double w = fit_soliton_width(g1);
    bool ok_w = std::fabs(w - 0.5) <= 0.01;

    report(8, pass && ok_conv && ok_w,
           det + fmt("dt-halving ratio %.2f; power-4 width %.4f (target 0.5)",
                     ratio, w));
}

// ---------------------------------------------------------------- criterion 9

void criterion_9(const std::string& bin, const fs::path& work) {
    fs::path dir = work / "c9";
    fs::create_directories(dir);
    std::ofstream(dir / "cfg.json")
        << R"({"mcmc": {"chains": 4, "samples_per_chain": 8000,
                         "burn_in": 800}})";
    std::vector<std::string> blobs;
    bool ok = true;
    for (int threads : {1, 2, 8}) {
        fs::path out = dir / ("out_t" + std::to_string(threads));
        int rc = run_cli_binary(
            bin,
            "sample --config " + (dir / "cfg.json").string() + " --out " +
                out.string() + " --seed 5150 --threads " +
                std::to_string(threads),
            dir / "cli.log");
        ok = ok && rc == 0;
        blobs.push_back(slurp(out / "results.json"));
    }
    ok = ok && !blobs[0].empty() && blobs[0] == blobs[1] &&
         blobs[0] == blobs[2];
    report(9, ok,
           fmt("results.json byte-identical across --threads 1/2/8 (%zu bytes)",
               blobs.empty() ? 0 : blobs[0].size()));
}

}  // namespace

int main(int argc, char** argv) {
    std::string bin;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--solitonq-bin") bin = argv[i + 1];
    if (bin.empty()) {
        std::fprintf(stderr, "usage: acceptance --solitonq-bin PATH\n");
        return 2;
    }
    fs::path work = fs::temp_directory_path() / "solitonq_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6(bin, work);
    criterion_7();
    criterion_8();
    criterion_9(bin, work);

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
