#pragma once

// Reference implementations used only by tests. They are written directly
// from the definitions and share no code with the library fast paths.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "dnefc/network.hpp"

namespace oracle {

/// Direct sliding-window convolution. Input (h, w, cin) channels-last, kernel
/// (k, k, cin, cout), zero padding, accumulation in double.
inline std::vector<double> conv2d(const std::vector<float>& in, std::size_t h, std::size_t w, std::size_t cin,
                                  const std::vector<float>& kernel, const std::vector<float>& bias, std::size_t k,
                                  std::size_t cout, std::size_t stride, std::size_t pad, std::size_t& oh,
                                  std::size_t& ow) {
    oh = (h + 2 * pad - k) / stride + 1;
    ow = (w + 2 * pad - k) / stride + 1;
    std::vector<double> out(oh * ow * cout, 0.0);
    for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox)
            for (std::size_t co = 0; co < cout; ++co) {
                double acc = bias[co];
                for (std::size_t ky = 0; ky < k; ++ky)
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
                        const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
                        if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
                        for (std::size_t ci = 0; ci < cin; ++ci)
                            acc += static_cast<double>(in[(iy * w + ix) * cin + ci]) *
                                   kernel[((ky * k + kx) * cin + ci) * cout + co];
                    }
                out[(oy * ow + ox) * cout + co] = acc;
            }
    return out;
}

/// Parameter count summed layer by layer from the textbook formulas.
inline std::size_t param_sum(const std::vector<dnefc::LayerSpec>& layers) {
    std::size_t total = 0;
    for (const auto& l : layers) {
        if (const auto* c = std::get_if<dnefc::Conv2D>(&l))
            total += c->kernel * c->kernel * c->in_channels * c->out_channels + c->out_channels;
        else if (const auto* d = std::get_if<dnefc::Dense>(&l))
            total += d->in_features * d->out_features + d->out_features;
    }
    return total;
}

/// Two-pass sample correlation.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline std::vector<float> random_floats(std::mt19937_64& rng, std::size_t n, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> u(lo, hi);
    std::vector<float> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("dnefc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace oracle
