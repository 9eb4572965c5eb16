#include "dnefc/connectome.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dnefc/errors.hpp"

namespace dnefc {

double pearson_corr(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("correlation needs equal-length series");
    if (x.size() < 3) throw ValidationError("correlation needs at least 3 time points");
    double mean_x = 0.0, mean_y = 0.0, m2x = 0.0, m2y = 0.0, cxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        mean_x += dx / n;
        mean_y += dy / n;
        m2x += dx * (x[i] - mean_x);
        m2y += dy * (y[i] - mean_y);
        cxy += dx * (y[i] - mean_y);
    }
    if (!(m2x > 0.0) || !(m2y > 0.0)) throw DegenerateInputError("zero-variance series");
    return std::clamp(cxy / std::sqrt(m2x * m2y), -1.0, 1.0);
}

double fisher_z(double r) noexcept {
    r = std::clamp(r, -kCorrelationClamp, kCorrelationClamp);
    return 0.5 * (std::log1p(r) - std::log1p(-r));
}

ConnectivityMatrix build_connectivity(const TimeSeriesPanel& panel) {
    if (panel.n_timepoints < 3) throw ValidationError("time series panel needs at least 3 time points");
    if (panel.values.size() != panel.n_rois * panel.n_timepoints) {
        throw ValidationError("time series panel size does not match n_rois * n_timepoints");
    }
    ConnectivityMatrix m{panel.n_rois, std::vector<double>(panel.n_rois * panel.n_rois, 0.0)};
    for (std::size_t i = 0; i < panel.n_rois; ++i) {
        for (std::size_t j = i + 1; j < panel.n_rois; ++j) {
            double r = 0.0;
            try {
                r = pearson_corr(panel.roi(i), panel.roi(j));
            } catch (const DegenerateInputError&) {
                throw DegenerateInputError("zero-variance time series in ROI pair (" + std::to_string(i) + ", " +
                                           std::to_string(j) + ")");
            }
            m.values[i * m.n + j] = m.values[j * m.n + i] = fisher_z(r);
        }
    }
    return m;
}

ConnectivityMatrix truncate_rois(const ConnectivityMatrix& m, std::size_t keep) {
    if (m.n < keep) {
        throw UsageError("cannot keep " + std::to_string(keep) + " ROIs of a " + std::to_string(m.n) + "-ROI matrix");
    }
    ConnectivityMatrix out{keep, std::vector<double>(keep * keep)};
    for (std::size_t i = 0; i < keep; ++i) {
        std::copy_n(m.values.begin() + static_cast<std::ptrdiff_t>(i * m.n), keep,
                    out.values.begin() + static_cast<std::ptrdiff_t>(i * keep));
    }
    return out;
}

double median_of(std::span<const double> values) {
    if (values.empty()) throw ValidationError("median of an empty set");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    return sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
}

std::vector<double> scale_and_threshold(std::span<const double> values) {
    if (values.empty()) throw ValidationError("cannot threshold an empty matrix");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double min = *lo;
    const double range = *hi - min;
    if (!(range > 0.0)) throw DegenerateInputError("constant matrix cannot be min-max scaled");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::clamp((values[i] - min) / range, 0.0, 1.0);
    const double threshold = median_of(out);
    for (double& v : out) {
        if (v > threshold) v = 1.0;
    }
    return out;
}

} // namespace dnefc
