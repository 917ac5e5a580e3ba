#include "solitonq/cli.hpp"

#include <CLI11.hpp>
#include <fcntl.h>
#include <json.hpp>
#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <set>
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

namespace solitonq {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct RunContext {
    std::string kind;
    fs::path out;
    std::uint64_t seed = 0;
    int threads = 1;
    ordered_json config;
    ordered_json resolved;
    ordered_json results;
    std::ofstream log;
};

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---- config schema -------------------------------------------------------

void reject_unknown(const ordered_json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        throw ValidationError(where + " must be a JSON object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw ValidationError("unknown key '" + item.key() + "' in " +
                                  where);
    }
}

double get_num(const ordered_json& obj, const char* key, double dflt) {
    if (!obj.contains(key)) return dflt;
    const auto& v = obj.at(key);
    if (!v.is_number())
        throw ValidationError(std::string("key '") + key +
                              "' must be a number");
    return v.get<double>();
}

long get_int(const ordered_json& obj, const char* key, long dflt) {
    if (!obj.contains(key)) return dflt;
    const auto& v = obj.at(key);
    if (!v.is_number_integer())
        throw ValidationError(std::string("key '") + key +
                              "' must be an integer");
    return v.get<long>();
}

bool get_bool(const ordered_json& obj, const char* key, bool dflt) {
    if (!obj.contains(key)) return dflt;
    const auto& v = obj.at(key);
    if (!v.is_boolean())
        throw ValidationError(std::string("key '") + key +
                              "' must be a boolean");
    return v.get<bool>();
}

std::string get_string(const ordered_json& obj, const char* key,
                       const std::string& dflt) {
    if (!obj.contains(key)) return dflt;
    const auto& v = obj.at(key);
    if (!v.is_string())
        throw ValidationError(std::string("key '") + key +
                              "' must be a string");
    return v.get<std::string>();
}

// ---- shared resolvers ----------------------------------------------------

SolitonParams resolve_params(const ordered_json& cfg) {
    SolitonParams p;
    if (cfg.contains("params")) {
        const auto& j = cfg.at("params");
        reject_unknown(j, "params", {"b", "c", "B", "n", "m"});
        p.b = get_num(j, "b", p.b);
        p.c = get_num(j, "c", p.c);
        p.B = get_num(j, "B", p.B);
        p.n = static_cast<int>(get_int(j, "n", p.n));
        p.m = static_cast<int>(get_int(j, "m", p.m));
    }
    p.validate();
    return p;
}

ordered_json echo_params(const SolitonParams& p) {
    return {{"b", p.b}, {"c", p.c}, {"B", p.B}, {"n", p.n}, {"m", p.m}};
}

McmcConfig resolve_mcmc(const ordered_json& cfg, std::uint64_t seed) {
    McmcConfig m;
    if (cfg.contains("mcmc")) {
        const auto& j = cfg.at("mcmc");
        reject_unknown(j, "mcmc",
                       {"chains", "samples_per_chain", "burn_in",
                        "proposal_stddev"});
        m.chains = static_cast<int>(get_int(j, "chains", m.chains));
        m.samples_per_chain =
            get_int(j, "samples_per_chain", m.samples_per_chain);
        m.burn_in = get_int(j, "burn_in", m.burn_in);
        m.proposal_stddev = get_num(j, "proposal_stddev", m.proposal_stddev);
    }
    m.seed = seed;
    m.validate();
    return m;
}

ordered_json echo_mcmc(const McmcConfig& m) {
    return {{"chains", m.chains},
            {"samples_per_chain", m.samples_per_chain},
            {"burn_in", m.burn_in},
            {"proposal_stddev", m.proposal_stddev}};
}

PulseCenterState resolve_state(const ordered_json& cfg,
                               const SolitonParams& p) {
    PulseCenterState st;
    st.N = p.N();
    st.phase_accum = 0.0;
    bool has_dp = false, has_q = false;
    double dp = 0.0, q = 0.0;
    if (cfg.contains("state")) {
        const auto& j = cfg.at("state");
        reject_unknown(j, "state", {"dp", "dp_from_q"});
        has_dp = j.contains("dp");
        has_q = j.contains("dp_from_q");
        if (has_dp && has_q)
            throw ValidationError(
                "state.dp and state.dp_from_q are mutually exclusive");
        dp = get_num(j, "dp", 0.0);
        q = get_num(j, "dp_from_q", 0.0);
    }
    if (has_dp)
        st.dp = dp;
    else if (has_q)
        st.dp = shot_noise_dp(p, q);
    else
        st.dp = derive_scales(p).shot_noise_dp;
    return st;
}

// ---- result entries ------------------------------------------------------

void put_entry(ordered_json& res, const std::string& name, const Estimate& e,
               const char* provenance) {
    res[name] = {{"value", e.value}, {"se", e.se}, {"provenance", provenance}};
}

template <class T>
void put_value(ordered_json& res, const std::string& name, const T& value,
               const char* provenance) {
    res[name] = {{"value", value}, {"provenance", provenance}};
}

std::ofstream open_csv(const RunContext& cx, const std::string& name,
                       const std::string& header) {
    std::ofstream out(cx.out / "data" / name, std::ios::trunc);
    if (!out)
        throw DiagnosticError("cannot open output file data/" + name);
    out << header << "\n";
    return out;
}

// ---- kinds ---------------------------------------------------------------

void run_sample(RunContext& cx) {
    reject_unknown(cx.config, "config", {"params", "mcmc", "state"});
    SolitonParams p = resolve_params(cx.config);
    McmcConfig mcmc = resolve_mcmc(cx.config, cx.seed);
    PulseCenterState st = resolve_state(cx.config, p);
    cx.resolved["params"] = echo_params(p);
    cx.resolved["mcmc"] = echo_mcmc(mcmc);
    cx.resolved["state"] = {{"dp", st.dp}, {"phase_accum", st.phase_accum}};

    cx.log << "sampling " << mcmc.chains << " chains x "
           << mcmc.samples_per_chain << " at dp = " << st.dp << "\n";
    MomentEstimates est = sample_positions(p, st, mcmc, cx.threads);

    put_entry(cx.results, "mean_abs_distance", est.mean_abs_distance,
              "sampled");
    put_entry(cx.results, "q", est.q, "sampled");
    put_entry(cx.results, "var_sum", est.var_sum, "sampled");
    put_entry(cx.results, "cov_same", est.cov_same, "sampled");
    put_entry(cx.results, "cov_cross", est.cov_cross, "sampled");
    put_entry(cx.results, "cov_cross_u", est.cov_cross_u, "sampled");
    put_entry(cx.results, "cov_cross_v", est.cov_cross_v, "sampled");
    put_entry(cx.results, "cov_cross_between", est.cov_cross_between,
              "sampled");
    put_entry(cx.results, "p_minus_var", est.p_minus_var, "sampled");
    put_value(cx.results, "ess", est.ess, "sampled");
    put_value(cx.results, "acceptance_rate", est.acceptance_rate, "sampled");
    put_value(cx.results, "total_samples", est.total_samples, "sampled");
    put_value(cx.results, "proposal_stddev", est.proposal_stddev, "sampled");

    std::ofstream csv = open_csv(cx, "moments.csv", "name,value,se");
    auto row = [&](const char* name, const Estimate& e) {
        csv << name << "," << fmt_double(e.value) << "," << fmt_double(e.se)
            << "\n";
    };
    row("mean_abs_distance", est.mean_abs_distance);
    row("q", est.q);
    row("var_sum", est.var_sum);
    row("cov_same", est.cov_same);
    row("cov_cross", est.cov_cross);
    row("cov_cross_u", est.cov_cross_u);
    row("cov_cross_v", est.cov_cross_v);
    row("cov_cross_between", est.cov_cross_between);
    row("p_minus_var", est.p_minus_var);
}

void run_q_table(RunContext& cx) {
    reject_unknown(cx.config, "config", {"Ns", "mcmc", "params"});
    SolitonParams base = resolve_params(cx.config);
    std::vector<int> Ns;
    if (cx.config.contains("Ns")) {
        const auto& j = cx.config.at("Ns");
        if (!j.is_array())
            throw ValidationError("key 'Ns' must be an array of integers");
        for (const auto& v : j) {
            if (!v.is_number_integer())
                throw ValidationError("key 'Ns' must be an array of integers");
            int N = v.get<int>();
            if (N < 2)
                throw ValidationError(
                    "photon numbers in 'Ns' must be at least 2");
            Ns.push_back(N);
        }
    }
    McmcConfig mcmc = resolve_mcmc(cx.config, cx.seed);
    cx.resolved["params"] = echo_params(base);
    cx.resolved["Ns"] = Ns;
    cx.resolved["mcmc"] = echo_mcmc(mcmc);

    std::ofstream csv = open_csv(cx, "q_table.csv", "N,q,se,ess");
    for (int N : Ns) {
        SolitonParams p = base;
        if (N % 2 == 0) {
            p.n = N / 2;
            p.m = N / 2;
        } else {
            p.n = N;
            p.m = 0;
        }
        McmcConfig m = mcmc;
        m.seed = cx.seed + static_cast<std::uint64_t>(N);
        cx.log << "estimating q at N = " << N << "\n";
        QEstimate qe = estimate_q(p, m, cx.threads);
        csv << N << "," << fmt_double(qe.q) << "," << fmt_double(qe.se) << ","
            << fmt_double(qe.ess) << "\n";
        Estimate e{qe.q, qe.se};
        put_entry(cx.results, "q_N" + std::to_string(N), e, "sampled");
    }
}

void run_eigencheck(RunContext& cx) {
    reject_unknown(cx.config, "config", {"params", "B_list", "grid"});
    SolitonParams base = resolve_params(cx.config);

    std::vector<double> B_list = {0.0, 2.0 / 3.0, 1.0, 2.0};
    if (cx.config.contains("B_list")) {
        const auto& j = cx.config.at("B_list");
        if (!j.is_array() || j.empty())
            throw ValidationError("key 'B_list' must be a non-empty array");
        B_list.clear();
        for (const auto& v : j) {
            if (!v.is_number())
                throw ValidationError("key 'B_list' must hold numbers");
            B_list.push_back(v.get<double>());
        }
    }

    std::vector<int> points = {16, 24, 32};
    GridSpec proto;
    if (cx.config.contains("grid")) {
        const auto& j = cx.config.at("grid");
        reject_unknown(j, "grid",
                       {"points_per_axis", "box_halfwidth", "boundary_margin"});
        if (j.contains("points_per_axis")) {
            const auto& pts = j.at("points_per_axis");
            if (!pts.is_array() || pts.empty())
                throw ValidationError(
                    "grid.points_per_axis must be a non-empty array");
            points.clear();
            for (const auto& v : pts) {
                if (!v.is_number_integer())
                    throw ValidationError(
                        "grid.points_per_axis must hold integers");
                points.push_back(v.get<int>());
            }
        }
        proto.box_halfwidth = get_num(j, "box_halfwidth", proto.box_halfwidth);
        proto.boundary_margin =
            get_num(j, "boundary_margin", proto.boundary_margin);
    }
    cx.resolved["params"] = echo_params(base);
    cx.resolved["B_list"] = B_list;
    cx.resolved["grid"] = {{"points_per_axis", points},
                           {"box_halfwidth", proto.box_halfwidth},
                           {"boundary_margin", proto.boundary_margin}};

    std::ofstream ref = open_csv(
        cx, "refinement.csv",
        "B,points_per_axis,dz,rayleigh,full_residual,global_residual");
    std::ofstream reg =
        open_csv(cx, "region_energies.csv",
                 "B,points_per_axis,ordering,region_energy,analytic_energy");

    for (std::size_t bi = 0; bi < B_list.size(); ++bi) {
        SolitonParams p = base;
        p.B = B_list[bi];
        p.validate();
        std::vector<std::string> patterns = ordering_patterns(p);
        ResidualReport last;
        for (int M : points) {
            GridSpec g = proto;
            g.points_per_axis = M;
            cx.log << "residual pass B = " << p.B << ", M = " << M << "\n";
            last = residual(p, g, 0.0, cx.threads);
            ref << fmt_double(p.B) << "," << M << ","
                << fmt_double(last.grid_dz) << ","
                << fmt_double(last.rayleigh_energy) << ","
                << fmt_double(last.full_residual) << ","
                << fmt_double(last.global_residual) << "\n";
            for (const auto& pat : patterns) {
                reg << fmt_double(p.B) << "," << M << "," << pat << ","
                    << fmt_double(last.region_energies.at(pat)) << ","
                    << fmt_double(region_energy_analytic(p, pat, 0.0)) << "\n";
            }
        }
        double an_lo = 0.0, an_hi = 0.0;
        for (std::size_t k = 0; k < patterns.size(); ++k) {
            double e = region_energy_analytic(p, patterns[k], 0.0);
            if (k == 0) an_lo = an_hi = e;
            an_lo = std::min(an_lo, e);
            an_hi = std::max(an_hi, e);
        }
        std::string tag = "_b" + std::to_string(bi);
        put_value(cx.results, "rayleigh" + tag, last.rayleigh_energy, "model");
        put_value(cx.results, "full_residual" + tag, last.full_residual,
                  "model");
        put_value(cx.results, "global_residual" + tag, last.global_residual,
                  "model");
        put_value(cx.results, "region_spread" + tag, an_hi - an_lo,
                  "analytic");
    }
}

void run_bethe_eval(RunContext& cx) {
    reject_unknown(cx.config, "config", {"params", "p", "points"});
    SolitonParams params = resolve_params(cx.config);
    double p = get_num(cx.config, "p", 0.0);

    std::vector<Configuration> points;
    if (cx.config.contains("points")) {
        const auto& j = cx.config.at("points");
        if (!j.is_array())
            throw ValidationError("key 'points' must be an array");
        for (std::size_t i = 0; i < j.size(); ++i) {
            const auto& pt = j[i];
            reject_unknown(pt, "points[" + std::to_string(i) + "]",
                           {"xs", "ys"});
            Configuration c;
            for (const char* key : {"xs", "ys"}) {
                if (!pt.contains(key)) continue;
                const auto& arr = pt.at(key);
                if (!arr.is_array())
                    throw ValidationError(std::string("points[].") + key +
                                          " must be an array of numbers");
                for (const auto& v : arr) {
                    if (!v.is_number())
                        throw ValidationError(std::string("points[].") + key +
                                              " must hold numbers");
                    (key[0] == 'x' ? c.xs : c.ys).push_back(v.get<double>());
                }
            }
            if (static_cast<int>(c.xs.size()) != params.n ||
                static_cast<int>(c.ys.size()) != params.m)
                throw ValidationError(
                    "points[" + std::to_string(i) + "] must list " +
                    std::to_string(params.n) + " xs and " +
                    std::to_string(params.m) + " ys");
            points.push_back(std::move(c));
        }
    }
    cx.resolved["params"] = echo_params(params);
    cx.resolved["p"] = p;
    cx.resolved["points"] = static_cast<long>(points.size());

    put_value(cx.results, "energy", energy(params, p), "analytic");
    put_value(cx.results, "norm_constant", norm_constant(params), "analytic");

    std::ofstream csv = open_csv(cx, "amplitudes.csv",
                                 "index,log_modulus,phase");
    for (std::size_t i = 0; i < points.size(); ++i) {
        AmplitudeValue amp = eval_eigenamplitude(points[i], params, p);
        csv << i << "," << fmt_double(amp.log_modulus) << ","
            << fmt_double(std::arg(amp.value)) << "\n";
    }
}

// q used by the protocol kinds, tagged with how it was obtained.
struct ResolvedQ {
    double value;
    double se = 0.0;
    const char* provenance;
};

ResolvedQ resolve_q(RunContext& cx, const SolitonParams& params,
                    const std::string& source, double fixed_value,
                    const ordered_json& mcmc_block) {
    if (source == "exact-n2") {
        if (params.N() != 2)
            throw ValidationError(
                "q source 'exact-n2' is only valid for two photons; use "
                "'fixed' or 'sampled'");
        return {2.0, 0.0, "analytic"};
    }
    if (source == "fixed") {
        if (!(fixed_value > 0.0) || !std::isfinite(fixed_value))
            throw ValidationError(
                "q source 'fixed' needs a positive q value");
        return {fixed_value, 0.0, "model"};
    }
    if (source == "sampled") {
        McmcConfig mcmc = resolve_mcmc(mcmc_block, cx.seed);
        cx.log << "estimating q by sampling\n";
        QEstimate qe = estimate_q(params, mcmc, cx.threads);
        return {qe.q, qe.se, "sampled"};
    }
    throw ValidationError("unknown q source '" + source +
                          "'; expected exact-n2, fixed, or sampled");
}

void run_protocol(RunContext& cx) {
    reject_unknown(cx.config, "config",
                   {"params", "schedule", "dispersion", "tprime_scan", "q"});
    SolitonParams params = resolve_params(cx.config);

    double duration = 200.0;
    double c_final = params.c / 4.0;
    if (cx.config.contains("schedule")) {
        const auto& j = cx.config.at("schedule");
        reject_unknown(j, "schedule", {"duration", "c_final"});
        duration = get_num(j, "duration", duration);
        c_final = get_num(j, "c_final", c_final);
    }
    double b_prime = 1.0;
    if (cx.config.contains("dispersion")) {
        const auto& j = cx.config.at("dispersion");
        reject_unknown(j, "dispersion", {"b_prime"});
        b_prime = get_num(j, "b_prime", b_prime);
    }
    long scan_count = 0;
    double scan_span = 0.0;
    if (cx.config.contains("tprime_scan")) {
        const auto& j = cx.config.at("tprime_scan");
        reject_unknown(j, "tprime_scan", {"count", "span"});
        scan_count = get_int(j, "count", scan_count);
        scan_span = get_num(j, "span", scan_span);
        if (scan_count < 0 || !(scan_span >= 0.0))
            throw ValidationError(
                "tprime_scan.count and span must not be negative");
    }
    std::string q_source = "exact-n2";
    double q_value = 0.0;
    ordered_json q_mcmc = ordered_json::object();
    if (cx.config.contains("q")) {
        const auto& j = cx.config.at("q");
        reject_unknown(j, "q", {"source", "value", "mcmc"});
        q_source = get_string(j, "source", q_source);
        q_value = get_num(j, "value", q_value);
        if (j.contains("mcmc")) q_mcmc["mcmc"] = j.at("mcmc");
    }
    if (b_prime == 0.0 || !std::isfinite(b_prime))
        throw ValidationError("dispersion.b_prime must be nonzero and finite");

    cx.resolved["params"] = echo_params(params);
    cx.resolved["schedule"] = {{"duration", duration}, {"c_final", c_final}};
    cx.resolved["dispersion"] = {{"b_prime", b_prime}};
    cx.resolved["tprime_scan"] = {{"count", scan_count}, {"span", scan_span}};
    cx.resolved["q"] = {{"source", q_source}};

    PulseCenterState st0;
    st0.dp = derive_scales(params).shot_noise_dp;
    st0.phase_accum = 0.0;
    st0.N = params.N();

    AdiabaticSchedule schedule;
    schedule.segments = {{duration, params.c, c_final}};
    cx.log << "adiabatic ramp c " << params.c << " -> " << c_final
           << " over T = " << duration << "\n";
    AdiabaticResult ad = apply_adiabatic(params, schedule, st0);

    double t_comp = -ad.state.phase_accum / b_prime;
    if (!(t_comp >= 0.0))
        throw ValidationError(
            "dispersion.b_prime has the wrong sign to compensate the "
            "accumulated phase");
    cx.log << "dispersion management t' = " << t_comp << "\n";
    PulseCenterState comp =
        apply_dispersion_management(ad.state, b_prime, t_comp);

    ResolvedQ q = resolve_q(cx, params, q_source, q_value, q_mcmc);
    ProtocolReport rep =
        enhancement_report(params, ad.params, comp, q.value, ad.margin);

    put_value(cx.results, "gamma", rep.gamma, "analytic");
    put_value(cx.results, "enhancement", rep.enhancement, "analytic");
    put_value(cx.results, "enhancement_capped", rep.enhancement_capped,
              "model");
    put_value(cx.results, "regime", std::string(regime_name(rep.regime)),
              "model");
    cx.results["q"] = {{"value", q.value}, {"se", q.se},
                       {"provenance", q.provenance}};
    put_value(cx.results, "dp", rep.dp, "analytic");
    put_value(cx.results, "dz_final", rep.dz_final, "analytic");
    put_value(cx.results, "sql_final", rep.sql_final, "analytic");
    put_value(cx.results, "bandwidth_initial", rep.bandwidth_initial,
              "analytic");
    put_value(cx.results, "bandwidth_final", rep.bandwidth_final, "analytic");
    put_value(cx.results, "adiabaticity_margin", rep.margin, "analytic");
    put_value(cx.results, "t_prime", t_comp, "analytic");

    std::ofstream csv = open_csv(cx, "tprime_scan.csv", "t_prime,delta_z_sq");
    for (long i = 0; i < scan_count; ++i) {
        double frac = scan_count > 1
                          ? static_cast<double>(i) / (scan_count - 1)
                          : 0.5;
        double t = t_comp - 0.5 * scan_span + scan_span * frac;
        PulseCenterState probe =
            apply_dispersion_management(ad.state, b_prime, t);
        csv << fmt_double(t) << "," << fmt_double(probe.delta_z_sq()) << "\n";
    }
}

void run_epr(RunContext& cx) {
    reject_unknown(cx.config, "config", {"params", "gamma_list"});
    SolitonParams params = resolve_params(cx.config);
    std::vector<double> gammas;
    if (cx.config.contains("gamma_list")) {
        const auto& j = cx.config.at("gamma_list");
        if (!j.is_array() || j.empty())
            throw ValidationError(
                "key 'gamma_list' must be a non-empty array");
        for (const auto& v : j) {
            if (!v.is_number())
                throw ValidationError("key 'gamma_list' must hold numbers");
            double g = v.get<double>();
            if (!(g > 0.0) || !std::isfinite(g))
                throw ValidationError("expansion ratios must be positive");
            gammas.push_back(g);
        }
    } else {
        gammas = {1.0, 2.0, 4.0, 8.0};
    }
    cx.resolved["params"] = echo_params(params);
    cx.resolved["gamma_list"] = gammas;

    PulseCenterState st;
    st.dp = derive_scales(params).shot_noise_dp;
    st.phase_accum = 0.0;
    st.N = params.N();

    std::ofstream csv = open_csv(
        cx, "epr_vs_gamma.csv",
        "gamma,product_dd,product_ds,product_sd,best_product,witness_pair,"
        "entangled");
    EprMetrics met{};
    WitnessReport wit{};
    for (double g : gammas) {
        SolitonParams fin = params;
        fin.c = params.c / g;
        met = epr_metrics_analytic(fin, st, 2.0);
        wit = epr_witness(met);
        csv << fmt_double(g) << "," << fmt_double(met.product_dd) << ","
            << fmt_double(met.product_ds) << ","
            << fmt_double(met.product_sd) << ","
            << fmt_double(wit.best_product) << "," << wit.pair << ","
            << (wit.entangled ? 1 : 0) << "\n";
    }

    put_value(cx.results, "q", 2.0, "analytic");
    put_value(cx.results, "var_sum_half", met.var_sum_half, "analytic");
    put_value(cx.results, "var_diff_half", met.var_diff_half, "analytic");
    put_value(cx.results, "p_sum_var", met.p_sum_var, "analytic");
    put_value(cx.results, "p_diff_var", met.p_diff_var, "analytic");
    put_value(cx.results, "product_dd", met.product_dd, "analytic");
    put_value(cx.results, "product_ds", met.product_ds, "analytic");
    put_value(cx.results, "product_sd", met.product_sd, "analytic");
    put_value(cx.results, "epr_bound", met.epr_bound, "analytic");
    put_value(cx.results, "witness_entangled", wit.entangled, "analytic");
    put_value(cx.results, "witness_pair", std::string(wit.pair), "analytic");
    put_value(cx.results, "witness_ratio", wit.ratio, "analytic");
}

void run_classical(RunContext& cx) {
    reject_unknown(cx.config, "config", {"params", "run"});
    SolitonParams params = resolve_params(cx.config);
    if (!cx.config.contains("run"))
        throw ValidationError("classical needs a 'run' block");
    const auto& j = cx.config.at("run");
    if (!j.is_object())
        throw ValidationError("run must be a JSON object");
    std::string type = get_string(j, "type", "soliton");

    auto profile_csv = [&](const Field2& f) {
        std::ofstream csv =
            open_csv(cx, "profile_final.csv", "z,intensity_u,intensity_v");
        for (int i = 0; i < f.M; ++i)
            csv << fmt_double(f.coordinate(i)) << ","
                << fmt_double(std::norm(f.u[i])) << ","
                << fmt_double(std::norm(f.v[i])) << "\n";
    };

    if (type == "soliton") {
        reject_unknown(j, "run",
                       {"type", "M", "halfwidth", "W", "periods", "snapshot"});
        int M = static_cast<int>(get_int(j, "M", 512));
        double hw = get_num(j, "halfwidth", 25.0);
        double W = get_num(j, "W", 1.0);
        double periods = get_num(j, "periods", 1.0);
        bool snapshot = get_bool(j, "snapshot", false);
        cx.resolved["params"] = echo_params(params);
        cx.resolved["run"] = {{"type", type},     {"M", M},
                              {"halfwidth", hw},  {"W", W},
                              {"periods", periods}, {"snapshot", snapshot}};
        if (!(periods > 0.0) || !std::isfinite(periods))
            throw ValidationError("run.periods must be positive");

        Field2 f0 = make_sech_pair(M, hw, W, params);
        double period = M_PI * W * W / (2.0 * std::fabs(params.b));
        StepPlan plan;
        double dz = f0.dz();
        plan.dt = std::min(period / 2000.0,
                           0.5 * dz * dz / (M_PI * std::fabs(params.b)));
        plan.steps =
            static_cast<long>(std::ceil(periods * period / plan.dt));
        cx.log << "soliton run: " << plan.steps << " steps of dt = "
               << plan.dt << "\n";
        Field2 f1 = propagate(f0, params, plan);
        double p0 = f0.power(), p1 = f1.power();
        put_value(cx.results, "power_initial", p0, "model");
        put_value(cx.results, "power_final", p1, "model");
        put_value(cx.results, "power_drift", (p1 - p0) / p0, "model");
        put_value(cx.results, "width_fitted", fit_soliton_width(f1), "model");
        put_value(cx.results, "dt", plan.dt, "model");
        put_value(cx.results, "steps", plan.steps, "model");
        profile_csv(f1);
        if (snapshot)
            write_snapshot(f1, plan.steps * plan.dt,
                           (cx.out / "data" / "snapshot.bin").string());
        return;
    }

    if (type == "gaussian") {
        reject_unknown(j, "run",
                       {"type", "M", "halfwidth", "sigma0", "k0", "duration",
                        "snapshot"});
        int M = static_cast<int>(get_int(j, "M", 512));
        double hw = get_num(j, "halfwidth", 40.0);
        double sigma0 = get_num(j, "sigma0", 2.0);
        double k0 = get_num(j, "k0", 0.0);
        double T = get_num(j, "duration", 1.0);
        bool snapshot = get_bool(j, "snapshot", false);
        cx.resolved["params"] = echo_params(params);
        cx.resolved["run"] = {{"type", type},   {"M", M},
                              {"halfwidth", hw}, {"sigma0", sigma0},
                              {"k0", k0},        {"duration", T},
                              {"snapshot", snapshot}};
        if (!(T > 0.0) || !std::isfinite(T))
            throw ValidationError("run.duration must be positive");

        Field2 f0 = make_gaussian(M, hw, sigma0, k0);
        StepPlan plan;
        double dz = f0.dz();
        plan.dt = 0.5 * dz * dz / (M_PI * std::fabs(params.b));
        plan.steps = static_cast<long>(std::ceil(T / plan.dt));
        cx.log << "gaussian run: " << plan.steps << " steps of dt = "
               << plan.dt << "\n";
        Field2 f1 = propagate(f0, params, plan);
        double t_actual = plan.steps * plan.dt;
        double predicted =
            sigma0 * sigma0 +
            params.b * params.b * t_actual * t_actual / (sigma0 * sigma0);
        double p0 = f0.power(), p1 = f1.power();
        put_value(cx.results, "power_drift", (p1 - p0) / p0, "model");
        put_value(cx.results, "variance_final", intensity_variance(f1),
                  "model");
        put_value(cx.results, "variance_predicted", predicted, "analytic");
        put_value(cx.results, "momentum_mean", f1.momentum_mean(), "model");
        profile_csv(f1);
        if (snapshot)
            write_snapshot(f1, t_actual,
                           (cx.out / "data" / "snapshot.bin").string());
        return;
    }

    if (type == "ramp") {
        reject_unknown(j, "run",
                       {"type", "M", "halfwidth", "gamma", "periods"});
        int M = static_cast<int>(get_int(j, "M", 1024));
        double hw = get_num(j, "halfwidth", 30.0);
        double gamma = get_num(j, "gamma", 2.0);
        double periods = get_num(j, "periods", 20.0);
        cx.resolved["params"] = echo_params(params);
        cx.resolved["run"] = {{"type", type},
                              {"M", M},
                              {"halfwidth", hw},
                              {"gamma", gamma},
                              {"periods", periods}};
        if (!(periods > 0.0) || !std::isfinite(periods))
            throw ValidationError("run.periods must be positive");

        double T = periods * derive_scales(params).T_sol;
        cx.log << "ramp probe: gamma = " << gamma << " over T = " << T
               << "\n";
        RampReport rep = ramp_stability_probe(params, gamma, T, M, hw);
        put_value(cx.results, "width_initial", rep.width_initial, "model");
        put_value(cx.results, "width_final", rep.width_final, "model");
        put_value(cx.results, "width_predicted", rep.width_predicted,
                  "analytic");
        put_value(cx.results, "radiation_fraction", rep.radiation_fraction,
                  "model");
        put_value(cx.results, "stable", rep.stable, "model");
        return;
    }

    throw ValidationError("unknown run type '" + type +
                          "'; expected soliton, gaussian, or ramp");
}

void run_full_pipeline(RunContext& cx) {
    reject_unknown(cx.config, "config",
                   {"params", "gamma", "duration", "b_prime", "q_source",
                    "q_value", "mcmc"});
    SolitonParams params = resolve_params(cx.config);
    double gamma = get_num(cx.config, "gamma", 4.0);
    double duration = get_num(cx.config, "duration", 200.0);
    double b_prime = get_num(cx.config, "b_prime", 1.0);
    std::string q_source = get_string(cx.config, "q_source", "sampled");
    double q_value = get_num(cx.config, "q_value", 0.0);
    if (!(gamma >= 1.0) || !std::isfinite(gamma))
        throw ValidationError("gamma must be at least 1");
    if (!(duration > 0.0) || !std::isfinite(duration))
        throw ValidationError("duration must be positive");
    if (b_prime == 0.0 || !std::isfinite(b_prime))
        throw ValidationError("b_prime must be nonzero and finite");

    cx.resolved["params"] = echo_params(params);
    cx.resolved["gamma"] = gamma;
    cx.resolved["duration"] = duration;
    cx.resolved["b_prime"] = b_prime;
    cx.resolved["q_source"] = q_source;

    std::ofstream stages = open_csv(cx, "stages.csv", "stage,summary");

    PulseCenterState st0;
    st0.dp = derive_scales(params).shot_noise_dp;
    st0.phase_accum = 0.0;
    st0.N = params.N();

    AdiabaticSchedule schedule;
    schedule.segments = {{duration, params.c, params.c / gamma}};
    cx.log << "stage adiabatic\n";
    AdiabaticResult ad = apply_adiabatic(params, schedule, st0);
    stages << "adiabatic,c " << fmt_double(params.c) << " -> "
           << fmt_double(ad.params.c) << " over T = " << fmt_double(duration)
           << "\n";

    double t_comp = -ad.state.phase_accum / b_prime;
    if (!(t_comp >= 0.0))
        throw ValidationError(
            "b_prime has the wrong sign to compensate the accumulated phase");
    cx.log << "stage dispersion-management\n";
    PulseCenterState comp =
        apply_dispersion_management(ad.state, b_prime, t_comp);
    stages << "dispersion-management,b' = " << fmt_double(b_prime)
           << " for t' = " << fmt_double(t_comp) << "\n";

    ordered_json q_mcmc = ordered_json::object();
    if (cx.config.contains("mcmc")) q_mcmc["mcmc"] = cx.config.at("mcmc");
    ResolvedQ q = resolve_q(cx, params, q_source, q_value, q_mcmc);

    ProtocolReport rep =
        enhancement_report(params, ad.params, comp, q.value, ad.margin);
    stages << "enhancement,gamma " << fmt_double(rep.gamma) << " capped at "
           << fmt_double(rep.enhancement_capped) << "\n";

    cx.log << "stage epr\n";
    EprMetrics met = epr_metrics_analytic(ad.params, comp, q.value);
    WitnessReport wit = epr_witness(met);
    stages << "epr," << wit.pair << " product "
           << fmt_double(wit.best_product)
           << (wit.entangled ? " entangled" : " not entangled") << "\n";

    const char* met_prov =
        q_source == "sampled" ? "sampled" : "analytic";
    put_value(cx.results, "gamma", rep.gamma, "analytic");
    put_value(cx.results, "enhancement", rep.enhancement, "analytic");
    put_value(cx.results, "enhancement_capped", rep.enhancement_capped,
              "model");
    put_value(cx.results, "regime", std::string(regime_name(rep.regime)),
              "model");
    cx.results["q"] = {{"value", q.value}, {"se", q.se},
                       {"provenance", q.provenance}};
    put_value(cx.results, "dz_final", rep.dz_final, "analytic");
    put_value(cx.results, "sql_final", rep.sql_final, "analytic");
    put_value(cx.results, "product_dd", met.product_dd, met_prov);
    put_value(cx.results, "product_ds", met.product_ds, met_prov);
    put_value(cx.results, "product_sd", met.product_sd, met_prov);
    put_value(cx.results, "witness_entangled", wit.entangled, met_prov);
    put_value(cx.results, "witness_pair", std::string(wit.pair), met_prov);
    put_value(cx.results, "witness_ratio", wit.ratio, met_prov);
}

// ---- driver --------------------------------------------------------------

void cleanup_partial(const fs::path& out) {
    std::error_code ec;
    fs::remove(out / "results.json", ec);
    fs::remove(out / "config_resolved.json", ec);
    fs::remove_all(out / "data", ec);
}

ordered_json parse_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot read config file: " + path.string());
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config parse error: ") + e.what());
    }
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"vector-soliton quantum metrology toolkit"};
    std::string kind, config_path, out_path;
    std::uint64_t seed = 0;
    int threads = 1;
    app.add_option("kind", kind,
                   "one of: sample, q-table, eigencheck, bethe-eval, "
                   "protocol, epr, classical, full-pipeline")
        ->required();
    app.add_option("--config", config_path, "JSON config file")->required();
    app.add_option("--out", out_path, "output directory")->required();
    app.add_option("--seed", seed, "base RNG seed (default 0)");
    app.add_option("--threads", threads, "worker threads (default 1)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (threads < 1) {
        std::cerr << "--threads must be at least 1\n";
        return 2;
    }

    fs::path out = out_path;
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        std::cerr << "cannot create output directory " << out << ": "
                  << ec.message() << "\n";
        return 2;
    }

    // one writer per output directory
    fs::path lockfile = out / ".lock";
    int fd = ::open(lockfile.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        std::cerr << "output directory " << out
                  << " is locked; remove " << lockfile
                  << " if no other run is active\n";
        return 2;
    }
    ::close(fd);

    RunContext cx;
    cx.kind = kind;
    cx.out = out;
    cx.seed = seed;
    cx.threads = threads;
    cx.log.open(out / "log.txt", std::ios::trunc);
    cx.resolved["kind"] = kind;
    cx.resolved["seed"] = seed;

    int rc = 0;
    try {
        cx.config = parse_config_file(config_path);
        fs::create_directories(out / "data");
        cx.log << "run kind: " << kind << ", seed " << seed << ", threads "
               << threads << "\n";
        if (kind == "sample")
            run_sample(cx);
        else if (kind == "q-table")
            run_q_table(cx);
        else if (kind == "eigencheck")
            run_eigencheck(cx);
        else if (kind == "bethe-eval")
            run_bethe_eval(cx);
        else if (kind == "protocol")
            run_protocol(cx);
        else if (kind == "epr")
            run_epr(cx);
        else if (kind == "classical")
            run_classical(cx);
        else if (kind == "full-pipeline")
            run_full_pipeline(cx);
        else
            throw ValidationError("unknown run kind '" + kind + "'");

        std::ofstream res(out / "results.json", std::ios::trunc);
        res << cx.results.dump(2) << "\n";
        std::ofstream echo(out / "config_resolved.json", std::ios::trunc);
        echo << cx.resolved.dump(2) << "\n";
        cx.log << "ok\n";
    } catch (const ValidationError& e) {
        cx.log << "validation error: " << e.what() << "\n";
        std::cerr << "validation error: " << e.what() << "\n";
        cleanup_partial(out);
        rc = 2;
    } catch (const DiagnosticError& e) {
        cx.log << "diagnostic failure: " << e.what() << "\n";
        std::cerr << "diagnostic failure: " << e.what() << "\n";
        cleanup_partial(out);
        rc = 3;
    } catch (const nlohmann::json::exception& e) {
        cx.log << "config error: " << e.what() << "\n";
        std::cerr << "config error: " << e.what() << "\n";
        cleanup_partial(out);
        rc = 2;
    } catch (const std::exception& e) {
        cx.log << "unexpected error: " << e.what() << "\n";
        std::cerr << "unexpected error: " << e.what() << "\n";
        cleanup_partial(out);
        rc = 3;
    }
    cx.log.close();
    fs::remove(lockfile, ec);
    return rc;
}

}  // namespace solitonq
