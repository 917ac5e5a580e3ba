#include "solitonq/sampler.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

#include "solitonq/rng.hpp"

namespace solitonq {

// ---------------------------------------------------------------- statistics

SeriesStats series_stats(const std::vector<std::vector<double>>& chains) {
    SeriesStats out;
    std::size_t n_total = 0;
    for (const auto& ch : chains) n_total += ch.size();
    if (n_total == 0) return out;
    const std::size_t L = chains.front().size();

    double sum = 0.0;
    for (const auto& ch : chains)
        for (double x : ch) sum += x;
    out.mean = sum / double(n_total);

    double ss = 0.0;
    for (const auto& ch : chains)
        for (double x : ch) ss += (x - out.mean) * (x - out.mean);
    out.variance = ss / double(n_total);

    if (out.variance == 0.0 || L < 4) {
        out.iat = 1.0;
        out.ess = double(n_total);
        out.se = 0.0;
        return out;
    }

    // chain-averaged autocovariances about per-chain means
    std::vector<double> cmean(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
        double s = 0.0;
        for (double x : chains[c]) s += x;
        cmean[c] = s / double(chains[c].size());
    }
    auto gamma = [&](std::size_t k) {
        double acc = 0.0;
        for (std::size_t c = 0; c < chains.size(); ++c) {
            const auto& ch = chains[c];
            double m = cmean[c];
            double s = 0.0;
            for (std::size_t i = 0; i + k < ch.size(); ++i)
                s += (ch[i] - m) * (ch[i + k] - m);
            acc += s / double(ch.size());
        }
        return acc / double(chains.size());
    };

    double g0 = gamma(0);
    if (g0 <= 0.0) {
        out.iat = 1.0;
        out.ess = double(n_total);
        out.se = 0.0;
        return out;
    }
    // Geyer initial positive sequence: sum even-odd pairs while positive
    double asym = -g0;
    for (std::size_t t = 0; 2 * t + 1 < L / 2; ++t) {
        double pair = gamma(2 * t) + gamma(2 * t + 1);
        if (pair <= 0.0) break;
        asym += 2.0 * pair;
    }
    if (asym <= 0.0) asym = g0;
    out.iat = asym / g0;
    out.ess = double(n_total) / out.iat;
    out.se = std::sqrt(asym / double(n_total));
    return out;
}

SeriesStats ratio_sq_stats(const std::vector<std::vector<double>>& num,
                           const std::vector<std::vector<double>>& den) {
    double ns = 0.0, ds = 0.0;
    std::size_t count = 0;
    for (const auto& ch : num)
        for (double x : ch) ns += x;
    for (const auto& ch : den) {
        for (double x : ch) ds += x;
        count += ch.size();
    }
    double nm = ns / double(count);
    double dm = ds / double(count);
    double q = nm / (dm * dm);

    std::vector<std::vector<double>> h(num.size());
    for (std::size_t c = 0; c < num.size(); ++c) {
        h[c].resize(num[c].size());
        for (std::size_t i = 0; i < num[c].size(); ++i)
            h[c][i] = (num[c][i] - q * 2.0 * dm * den[c][i]) / (dm * dm);
    }
    SeriesStats st = series_stats(h);
    st.mean = q;
    return st;
}

// ------------------------------------------------------------------ sampling

void McmcConfig::validate() const {
    if (chains < 2) throw ValidationError("need at least 2 chains");
    if (samples_per_chain < 100)
        throw ValidationError("samples_per_chain too small");
    if (burn_in < samples_per_chain / 10)
        throw ValidationError("burn_in must be at least 10% of samples_per_chain");
    if (!(proposal_stddev > 0.0))
        throw ValidationError("proposal_stddev must be positive");
}

namespace {

struct ChainRun {
    std::vector<double> samples;  // kept steps x N, row-major
    long accepted = 0;
    double sigma = 0.0;
};

void check_sampling_inputs(const SolitonParams& params,
                           const PulseCenterState& state,
                           const McmcConfig& cfg) {
    params.validate();
    cfg.validate();
    if (params.N() < 2)
        throw ValidationError("position statistics need at least two photons");
    if (!(state.dp > 0.0))
        throw ValidationError("momentum spread dp must be positive");
    if (!params.has_bound_state())
        throw ValidationError("b*c >= 0: no bound state to sample");
    if (params.B != 1.0)
        throw ValidationError(
            "position sampling requires B = 1: for other couplings the "
            "density is not normalizable in all coordinates");
    if (state.phase_accum != 0.0)
        throw ValidationError("position sampling is defined at t = 0");
    if (state.N != params.N())
        throw ValidationError("state photon count does not match parameters");
}

void run_one_chain(const SolitonParams& params, const PulseCenterState& state,
                   const McmcConfig& cfg, int chain_index, ChainRun& out) {
    const int N = params.N();
    ChainRng rng(cfg.seed, static_cast<std::uint64_t>(chain_index));

    // symmetric deterministic start near the origin, scale |b/c|
    std::vector<double> z(N), prop(N);
    double scale = std::fabs(params.b / params.c);
    for (int j = 0; j < N; ++j)
        z[j] = 0.3 * scale * (j - 0.5 * (N - 1));
    double logd = log_density(z, params, state);

    double sigma = cfg.proposal_stddev;
    long window_acc = 0, window_len = 0;
    out.samples.reserve(static_cast<std::size_t>(cfg.samples_per_chain) * N);
    const long total = cfg.burn_in + cfg.samples_per_chain;
    for (long step = 0; step < total; ++step) {
        for (int j = 0; j < N; ++j) prop[j] = z[j] + sigma * rng.normal();
        double logp = log_density(prop, params, state);
        bool accept = std::log(rng.uniform()) < logp - logd;
        if (accept) {
            z.swap(prop);
            logd = logp;
        }
        if (step < cfg.burn_in) {
            window_acc += accept ? 1 : 0;
            if (++window_len == 200) {
                double rate = window_acc / 200.0;
                if (rate < 0.3)
                    sigma *= 0.8;
                else if (rate > 0.5)
                    sigma *= 1.25;
                window_acc = 0;
                window_len = 0;
            }
        } else {
            out.accepted += accept ? 1 : 0;
            out.samples.insert(out.samples.end(), z.begin(), z.end());
        }
    }
    out.sigma = sigma;
}

std::vector<ChainRun> run_chains(const SolitonParams& params,
                                 const PulseCenterState& state,
                                 const McmcConfig& cfg, int threads) {
    std::vector<ChainRun> runs(cfg.chains);
    int workers = std::max(1, std::min(threads, cfg.chains));
    if (workers == 1) {
        for (int c = 0; c < cfg.chains; ++c)
            run_one_chain(params, state, cfg, c, runs[c]);
        return runs;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            int c = next.fetch_add(1);
            if (c >= cfg.chains) return;
            run_one_chain(params, state, cfg, c, runs[c]);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return runs;
}

// per-chain series of some per-sample statistic
using Series = std::vector<std::vector<double>>;

Series build_series(const std::vector<ChainRun>& runs, int N,
                    const std::function<double(const double*)>& f) {
    Series s(runs.size());
    for (std::size_t c = 0; c < runs.size(); ++c) {
        std::size_t L = runs[c].samples.size() / N;
        s[c].resize(L);
        for (std::size_t i = 0; i < L; ++i)
            s[c][i] = f(runs[c].samples.data() + i * N);
    }
    return s;
}

struct PooledMeans {
    std::vector<double> coord;  // per-coordinate mean
    double u = 0.0;             // mean of the coordinate sum
    std::size_t count = 0;
};

PooledMeans pooled_means(const std::vector<ChainRun>& runs, int N) {
    PooledMeans m;
    m.coord.assign(N, 0.0);
    double usum = 0.0;
    for (const auto& run : runs) {
        std::size_t L = run.samples.size() / N;
        for (std::size_t i = 0; i < L; ++i) {
            const double* z = run.samples.data() + i * N;
            double u = 0.0;
            for (int j = 0; j < N; ++j) {
                m.coord[j] += z[j];
                u += z[j];
            }
            usum += u;
        }
        m.count += L;
    }
    for (int j = 0; j < N; ++j) m.coord[j] /= double(m.count);
    m.u = usum / double(m.count);
    return m;
}

double gate_and_get_acceptance(const std::vector<ChainRun>& runs,
                               const McmcConfig& cfg, double ess) {
    long acc = 0;
    for (const auto& r : runs) acc += r.accepted;
    double rate = double(acc) / double(cfg.chains * cfg.samples_per_chain);
    if (rate < 0.15 || rate > 0.7) {
        std::ostringstream msg;
        msg << "acceptance rate " << rate << " outside [0.15, 0.7]";
        throw DiagnosticError(msg.str());
    }
    if (ess < 1000.0) {
        std::ostringstream msg;
        msg << "insufficient sampling: ESS " << ess << " below 1000";
        throw DiagnosticError(msg.str());
    }
    return rate;
}

}  // namespace

MomentEstimates sample_positions(const SolitonParams& params,
                                 const PulseCenterState& state,
                                 const McmcConfig& mcmc, int threads) {
    check_sampling_inputs(params, state, mcmc);
    const int N = params.N();
    const int n = params.n;
    std::vector<ChainRun> runs = run_chains(params, state, mcmc, threads);
    PooledMeans pm = pooled_means(runs, N);

    // pair-averaged |d| and d^2
    const double pairs = 0.5 * N * (N - 1);
    Series a = build_series(runs, N, [&](const double* z) {
        double s = 0.0;
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j) s += std::fabs(z[i] - z[j]);
        return s / pairs;
    });
    Series d2 = build_series(runs, N, [&](const double* z) {
        double s = 0.0;
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j)
                s += (z[i] - z[j]) * (z[i] - z[j]);
        return s / pairs;
    });
    SeriesStats sa = series_stats(a);
    SeriesStats sq = ratio_sq_stats(d2, a);

    MomentEstimates est;
    est.mean_abs_distance = {sa.mean, sa.se};
    est.q = {sq.mean, sq.se};
    est.ess = sa.ess;
    est.acceptance_rate = gate_and_get_acceptance(runs, mcmc, sa.ess);
    est.total_samples = static_cast<long>(pm.count);
    double sig = 0.0;
    for (const auto& r : runs) sig += r.sigma;
    est.proposal_stddev = sig / double(runs.size());

    // second moments: plug-in values, delta-method influence series for se
    double m2u = 0.0;
    std::vector<double> m2(N, 0.0);
    for (const auto& run : runs) {
        std::size_t L = run.samples.size() / N;
        for (std::size_t i = 0; i < L; ++i) {
            const double* z = run.samples.data() + i * N;
            double u = 0.0;
            for (int j = 0; j < N; ++j) {
                m2[j] += z[j] * z[j];
                u += z[j];
            }
            m2u += u * u;
        }
    }
    m2u /= double(pm.count);
    for (int j = 0; j < N; ++j) m2[j] /= double(pm.count);

    double var_u = m2u - pm.u * pm.u;
    double sum_var_z = 0.0;
    for (int j = 0; j < N; ++j) sum_var_z += m2[j] - pm.coord[j] * pm.coord[j];
    double cov_same = sum_var_z / N;
    double cov_cross = (var_u - sum_var_z) / (double(N) * (N - 1));

    Series h_u = build_series(runs, N, [&](const double* z) {
        double u = 0.0;
        for (int j = 0; j < N; ++j) u += z[j];
        return u * u - 2.0 * pm.u * u;
    });
    Series h_same = build_series(runs, N, [&](const double* z) {
        double s = 0.0;
        for (int j = 0; j < N; ++j) s += z[j] * z[j] - 2.0 * pm.coord[j] * z[j];
        return s / N;
    });
    Series h_cross(runs.size());
    for (std::size_t c = 0; c < runs.size(); ++c) {
        h_cross[c].resize(h_u[c].size());
        for (std::size_t i = 0; i < h_u[c].size(); ++i)
            h_cross[c][i] =
                (h_u[c][i] - N * h_same[c][i]) / (double(N) * (N - 1));
    }
    est.var_sum = {var_u, series_stats(h_u).se};
    est.cov_same = {cov_same, series_stats(h_same).se};
    est.cov_cross = {cov_cross, series_stats(h_cross).se};

    // pair-class cross covariances
    auto pair_class = [&](int lo_a, int hi_a, int lo_b, int hi_b,
                          bool same_block) -> Estimate {
        std::vector<std::pair<int, int>> pl;
        if (same_block) {
            for (int i = lo_a; i < hi_a; ++i)
                for (int j = i + 1; j < hi_a; ++j) pl.push_back({i, j});
        } else {
            for (int i = lo_a; i < hi_a; ++i)
                for (int j = lo_b; j < hi_b; ++j) pl.push_back({i, j});
        }
        if (pl.empty()) return {0.0, 0.0};
        double val = 0.0;
        for (auto [i, j] : pl) {
            double m11 = 0.0;
            for (const auto& run : runs) {
                std::size_t L = run.samples.size() / N;
                for (std::size_t k = 0; k < L; ++k) {
                    const double* z = run.samples.data() + k * N;
                    m11 += z[i] * z[j];
                }
            }
            m11 /= double(pm.count);
            val += m11 - pm.coord[i] * pm.coord[j];
        }
        val /= double(pl.size());
        Series h = build_series(runs, N, [&](const double* z) {
            double s = 0.0;
            for (auto [i, j] : pl)
                s += z[i] * z[j] - pm.coord[j] * z[i] - pm.coord[i] * z[j];
            return s / double(pl.size());
        });
        return {val, series_stats(h).se};
    };
    est.cov_cross_u = pair_class(0, n, 0, n, true);
    est.cov_cross_v = pair_class(n, N, n, N, true);
    est.cov_cross_between = pair_class(0, n, n, N, false);

    // <(P_X - P_Y)^2> through the score identity with v = (+1...,-1...)
    std::vector<double> v(N, 1.0);
    for (int j = n; j < N; ++j) v[j] = -1.0;
    double sv = 0.0;
    for (double x : v) sv += x;
    std::vector<double> g(N);
    Series vg2 = build_series(runs, N, [&](const double* z) {
        sign_sums(std::span<const double>(z, N), n, params.B, g);
        double s = 0.0;
        for (int j = 0; j < N; ++j) s += v[j] * g[j];
        return s * s;
    });
    SeriesStats svg = series_stats(vg2);
    double half_rate = params.c / (2.0 * params.b);
    est.p_minus_var = {state.dp * state.dp * sv * sv +
                           half_rate * half_rate * svg.mean,
                       half_rate * half_rate * svg.se};
    return est;
}

QEstimate estimate_q(const SolitonParams& params, const McmcConfig& mcmc,
                     int threads, double tol) {
    params.validate();
    mcmc.validate();
    QEstimate qe;
    double q_prev = 2.0;  // exact two-photon value as the seed
    for (int iter = 0; iter < 10; ++iter) {
        double dp = shot_noise_dp(params, q_prev);
        PulseCenterState st{dp, 0.0, params.N()};
        McmcConfig cfg = mcmc;
        cfg.seed = mcmc.seed + static_cast<std::uint64_t>(iter);
        MomentEstimates est = sample_positions(params, st, cfg, threads);
        ++qe.iterations;
        qe.trace.push_back(est.q.value);
        qe.se = est.q.se;
        qe.ess = est.ess;
        if (std::fabs(est.q.value - q_prev) <= std::max(tol, 2.0 * est.q.se)) {
            qe.q = est.q.value;
            qe.dp = shot_noise_dp(params, qe.q);
            return qe;
        }
        q_prev = est.q.value;
    }
    std::ostringstream msg;
    msg << "q iteration did not converge; trace:";
    for (double q : qe.trace) msg << " " << q;
    throw DiagnosticError(msg.str());
}

Estimate momentum_quadratics(const SolitonParams& params,
                             const McmcConfig& mcmc,
                             std::span<const double> direction, int threads) {
    const int N = params.N();
    if (static_cast<int>(direction.size()) != N)
        throw ValidationError("direction length does not match photon count");
    PulseCenterState state{derive_scales(params).shot_noise_dp, 0.0, N};
    check_sampling_inputs(params, state, mcmc);
    std::vector<ChainRun> runs = run_chains(params, state, mcmc, threads);

    const double pairs = 0.5 * N * (N - 1);
    Series a = build_series(runs, N, [&](const double* z) {
        double s = 0.0;
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j) s += std::fabs(z[i] - z[j]);
        return s / pairs;
    });
    SeriesStats sa = series_stats(a);
    gate_and_get_acceptance(runs, mcmc, sa.ess);

    double sv = 0.0;
    for (double x : direction) sv += x;
    std::vector<double> g(N);
    Series vg2 = build_series(runs, N, [&](const double* z) {
        sign_sums(std::span<const double>(z, N), params.n, params.B, g);
        double s = 0.0;
        for (int j = 0; j < N; ++j) s += direction[j] * g[j];
        return s * s;
    });
    SeriesStats svg = series_stats(vg2);
    double half_rate = params.c / (2.0 * params.b);
    return {state.dp * state.dp * sv * sv + half_rate * half_rate * svg.mean,
            half_rate * half_rate * svg.se};
}

}  // namespace solitonq
