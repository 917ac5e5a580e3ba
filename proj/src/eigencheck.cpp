#include "solitonq/eigencheck.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace solitonq {

void GridSpec::validate() const {
    if (points_per_axis < 12)
        throw ValidationError("points_per_axis must be at least 12");
    if (!std::isfinite(box_halfwidth) || box_halfwidth <= 0.0)
        throw ValidationError("box_halfwidth must be positive");
    if (!std::isfinite(boundary_margin) || boundary_margin < 0.0)
        throw ValidationError("boundary_margin must be >= 0");
    if (2.0 * boundary_margin >= box_halfwidth)
        throw ValidationError("boundary_margin must leave an interior");
}

HamiltonianApply::HamiltonianApply(const SolitonParams& params,
                                   const GridSpec& grid)
    : params_(params) {
    params.validate();
    grid.validate();
    if (!params.has_bound_state())
        throw ValidationError("b*c >= 0: ansatz grows, box check meaningless");
    axes_ = params.N();
    if (axes_ > 3)
        throw ValidationError("grid check supports at most 3 photons");
    M_ = grid.points_per_axis;
    double W0 = derive_scales(params).W0;
    L_ = grid.box_halfwidth * W0;
    dz_ = 2.0 * L_ / (M_ + 1);
    size_ = 1;
    for (int a = 0; a < axes_; ++a) size_ *= static_cast<std::size_t>(M_);
}

void HamiltonianApply::apply(const std::vector<double>& f,
                             std::vector<double>& out, int threads) const {
    if (f.size() != size_)
        throw ValidationError("field length does not match the grid");
    out.assign(size_, 0.0);

    const int M = M_;
    const int axes = axes_;
    const double inv_d2 = 1.0 / (dz_ * dz_);
    const double b = params_.b;
    // pair coefficients: same mode 2c/dz, cross mode 2cB/dz
    double coeff[3][3] = {};
    for (int a = 0; a < axes; ++a)
        for (int b2 = a + 1; b2 < axes; ++b2) {
            bool same = (a < params_.n) == (b2 < params_.n);
            coeff[a][b2] = 2.0 * params_.c * (same ? 1.0 : params_.B) / dz_;
        }

    std::size_t stride[3] = {1, 1, 1};
    for (int a = axes - 2; a >= 0; --a)
        stride[a] = stride[a + 1] * static_cast<std::size_t>(M);

    auto run_slab = [&](int i0_begin, int i0_end) {
        int idx[3] = {0, 0, 0};
        std::size_t inner = size_ / static_cast<std::size_t>(M);
        for (int i0 = i0_begin; i0 < i0_end; ++i0) {
            std::size_t base = static_cast<std::size_t>(i0) * inner;
            for (std::size_t r = 0; r < inner; ++r) {
                std::size_t s = base + r;
                idx[0] = i0;
                if (axes == 2) {
                    idx[1] = static_cast<int>(r);
                } else if (axes == 3) {
                    idx[1] = static_cast<int>(r / static_cast<std::size_t>(M));
                    idx[2] = static_cast<int>(r % static_cast<std::size_t>(M));
                }
                double acc = 0.0;
                for (int a = 0; a < axes; ++a) {
                    double lo = idx[a] > 0 ? f[s - stride[a]] : 0.0;
                    double hi = idx[a] < M - 1 ? f[s + stride[a]] : 0.0;
                    acc += -b * (lo + hi - 2.0 * f[s]) * inv_d2;
                }
                for (int a = 0; a < axes; ++a)
                    for (int b2 = a + 1; b2 < axes; ++b2)
                        if (idx[a] == idx[b2]) acc += coeff[a][b2] * f[s];
                out[s] = acc;
            }
        }
    };

    int workers = std::max(1, std::min(threads, M));
    if (workers == 1) {
        run_slab(0, M);
        return;
    }
    // each element is written by exactly one worker, so the result does not
    // depend on the partition
    std::vector<std::thread> pool;
    int chunk = (M + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        int begin = w * chunk;
        int end = std::min(M, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(run_slab, begin, end);
    }
    for (auto& t : pool) t.join();
}

std::vector<double> HamiltonianApply::ansatz() const {
    std::vector<double> f(size_);
    const int M = M_;
    const int axes = axes_;
    const double half_rate = params_.c / (2.0 * params_.b);
    int idx[3] = {0, 0, 0};
    double z[3] = {0.0, 0.0, 0.0};
    for (std::size_t s = 0; s < size_; ++s) {
        std::size_t rem = s;
        for (int a = axes - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % static_cast<std::size_t>(M));
            rem /= static_cast<std::size_t>(M);
            z[a] = coordinate(idx[a]);
        }
        double S = 0.0;
        for (int a = 0; a < axes; ++a)
            for (int b2 = a + 1; b2 < axes; ++b2) {
                bool same = (a < params_.n) == (b2 < params_.n);
                S += (same ? 1.0 : params_.B) * std::fabs(z[a] - z[b2]);
            }
        f[s] = std::exp(half_rate * S);
    }
    return f;
}

ResidualReport residual(const SolitonParams& params, const GridSpec& grid,
                        double p, int threads) {
    if (p != 0.0)
        throw ValidationError("grid check is defined at p = 0");
    HamiltonianApply H(params, grid);
    std::vector<double> f = H.ansatz();
    std::vector<double> Hf;
    H.apply(f, Hf, threads);

    const int M = H.points();
    const int axes = H.axes();
    double W0 = derive_scales(params).W0;
    int mc = static_cast<int>(std::ceil(grid.boundary_margin * W0 / H.dz()));

    // serial reductions in index order: identical for every thread count
    double num_int = 0.0, den_int = 0.0;
    double num_core = 0.0, den_core = 0.0;
    std::vector<std::size_t> interior_cells, core_cells;
    int idx[3] = {0, 0, 0};
    for (std::size_t s = 0; s < H.size(); ++s) {
        std::size_t rem = s;
        for (int a = axes - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % static_cast<std::size_t>(M));
            rem /= static_cast<std::size_t>(M);
        }
        bool interior = true;
        for (int a = 0; a < axes; ++a)
            interior = interior && idx[a] >= mc && idx[a] < M - mc;
        if (!interior) continue;
        interior_cells.push_back(s);
        num_int += f[s] * Hf[s];
        den_int += f[s] * f[s];
        bool away = true;
        for (int a = 0; a < axes; ++a)
            for (int b2 = a + 1; b2 < axes; ++b2)
                away = away && std::abs(idx[a] - idx[b2]) > 1;
        if (!away) continue;
        core_cells.push_back(s);
        num_core += f[s] * Hf[s];
        den_core += f[s] * f[s];
    }
    if (interior_cells.empty() || core_cells.empty())
        throw ValidationError("no cells survive the masks; grid too coarse");

    ResidualReport rep;
    rep.points_per_axis = M;
    rep.grid_dz = H.dz();
    rep.rayleigh_energy = num_int / den_int;

    double rn = 0.0, rd = 0.0;
    for (std::size_t s : interior_cells) {
        double r = Hf[s] - rep.rayleigh_energy * f[s];
        double ef = rep.rayleigh_energy * f[s];
        rn += r * r;
        rd += ef * ef;
    }
    rep.full_residual = std::sqrt(rn / rd);

    double e_core = num_core / den_core;
    rn = 0.0;
    rd = 0.0;
    for (std::size_t s : core_cells) {
        double r = Hf[s] - e_core * f[s];
        double ef = e_core * f[s];
        rn += r * r;
        rd += ef * ef;
    }
    rep.global_residual = std::sqrt(rn / rd);

    std::map<std::string, std::pair<double, double>> region_sums;
    for (std::size_t s : core_cells) {
        std::size_t rem = s;
        for (int a = axes - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % static_cast<std::size_t>(M));
            rem /= static_cast<std::size_t>(M);
        }
        int order[3] = {0, 1, 2};
        std::sort(order, order + axes,
                  [&](int a, int b2) { return idx[a] < idx[b2]; });
        std::string pat;
        for (int r = 0; r < axes; ++r)
            pat += order[r] < params.n ? 'x' : 'y';
        auto& [num, den] = region_sums[pat];
        num += f[s] * Hf[s];
        den += f[s] * f[s];
    }
    for (const auto& [pat, sums] : region_sums)
        rep.region_energies[pat] = sums.first / sums.second;
    return rep;
}

std::vector<std::string> ordering_patterns(const SolitonParams& params) {
    params.validate();
    std::string pat(params.n, 'x');
    pat += std::string(params.m, 'y');
    std::vector<std::string> out;
    do {
        out.push_back(pat);
    } while (std::next_permutation(pat.begin(), pat.end()));
    return out;
}

double region_energy_analytic(const SolitonParams& params,
                              const std::string& ordering, double p) {
    params.validate();
    if (static_cast<int>(ordering.size()) != params.N())
        throw ValidationError("ordering length does not match photon count");
    int nx = 0;
    for (char ch : ordering) {
        if (ch == 'x')
            ++nx;
        else if (ch != 'y')
            throw ValidationError("ordering must use only 'x' and 'y'");
    }
    if (nx != params.n)
        throw ValidationError("ordering mode counts do not match n, m");

    // exponent is linear inside the region; the kinetic term gives
    // -(b) sum (c/2b g_j)^2 = -(c^2/4b) sum g_j^2
    const int N = params.N();
    double sum_g2 = 0.0;
    for (int j = 0; j < N; ++j) {
        double g = 0.0;
        for (int i = 0; i < N; ++i) {
            if (i == j) continue;
            double kappa = (ordering[i] == ordering[j]) ? 1.0 : params.B;
            g += kappa * (j > i ? 1.0 : -1.0);
        }
        sum_g2 += g * g;
    }
    return params.b * N * p * p -
           params.c * params.c / (4.0 * params.b) * sum_g2;
}

}  // namespace solitonq
