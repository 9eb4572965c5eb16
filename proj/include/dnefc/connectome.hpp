#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dnefc {

/// ROI x time BOLD-like signals, row-major (one row per ROI).
struct TimeSeriesPanel {
    std::size_t n_rois = 0;
    std::size_t n_timepoints = 0;
    std::vector<double> values;

    std::span<const double> roi(std::size_t i) const noexcept {
        return std::span<const double>(values).subspan(i * n_timepoints, n_timepoints);
    }
};

/// Symmetric n x n matrix of Fisher-z correlations with a zero diagonal.
struct ConnectivityMatrix {
    std::size_t n = 0;
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const noexcept { return values[i * n + j]; }
};

inline constexpr double kCorrelationClamp = 1.0 - 1e-7;
inline constexpr std::size_t kCerebralRois = 105;

/// Pearson product-moment correlation (single pass, Welford co-moments).
/// Throws DegenerateInputError when either series has zero variance.
double pearson_corr(std::span<const double> x, std::span<const double> y);

/// atanh(r) after clamping |r| to kCorrelationClamp.
double fisher_z(double r) noexcept;

ConnectivityMatrix build_connectivity(const TimeSeriesPanel& panel);

/// Keeps the leading `keep` ROIs (rows and columns).
ConnectivityMatrix truncate_rois(const ConnectivityMatrix& m, std::size_t keep = kCerebralRois);

/// Median of all entries: sort, take the middle value, or the midpoint of the
/// two middle values for an even count.
double median_of(std::span<const double> values);

/// Min-max scales every entry to [0, 1], then sets entries strictly above
/// the median of the scaled entries to exactly 1.
std::vector<double> scale_and_threshold(std::span<const double> values);
inline std::vector<double> scale_and_threshold(const ConnectivityMatrix& m) { return scale_and_threshold(m.values); }

} // namespace dnefc
