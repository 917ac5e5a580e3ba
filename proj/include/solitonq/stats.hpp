#pragma once

#include <cstddef>
#include <vector>

namespace solitonq {

struct SeriesStats {
    double mean = 0.0;
    double variance = 0.0;  // marginal, not corrected for autocorrelation
    double iat = 1.0;       // integrated autocorrelation time
    double ess = 0.0;
    double se = 0.0;        // sqrt(variance * iat / n_total)
};

// Multi-chain mean/variance/IAT with Geyer's initial-positive-sequence
// truncation. Autocovariances use per-chain means; the lag sum stops at the
// first nonpositive even-odd pair. All reductions run in fixed index order.
SeriesStats series_stats(const std::vector<std::vector<double>>& chains);

// Standard error of the ratio a_mean / b_mean^2 (the q statistic) via the
// delta-method influence series h_i = (a_i - q*(2 b_mean) b_i) / b_mean^2,
// fed through the same IAT machinery.
SeriesStats ratio_sq_stats(const std::vector<std::vector<double>>& num,
                           const std::vector<std::vector<double>>& den);

}  // namespace solitonq
