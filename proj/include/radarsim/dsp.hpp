#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "radarsim/baseband.hpp"
#include "radarsim/constants.hpp"
#include "radarsim/errors.hpp"
#include "radarsim/matrix.hpp"

namespace radarsim {

enum class Window { kRectangular, kHamming, kFlattop };

inline std::string_view to_string(Window w) {
    switch (w) {
        case Window::kRectangular: return "rectangular";
        case Window::kHamming: return "hamming";
        case Window::kFlattop: return "flattop";
    }
    return "?";
}

inline Window parse_window(std::string_view name) {
    if (name == "rectangular" || name == "rect") return Window::kRectangular;
    if (name == "hamming") return Window::kHamming;
    if (name == "flattop") return Window::kFlattop;
    throw ValidationError("unknown window '" + std::string(name) + "'");
}

/// Symmetric window of length n with peak near 1.
///   hamming: 0.54 - 0.46 cos(2 pi m / (n-1))
///   flattop: 5-term cosine sum with a = (0.21557895, 0.41663158,
///            0.277263158, 0.083578947, 0.006947368)
inline std::vector<double> window_coefficients(Window w, std::size_t n) {
    std::vector<double> out(n, 1.0);
    if (w == Window::kRectangular || n < 2) return out;
    const double denom = static_cast<double>(n - 1);
    for (std::size_t m = 0; m < n; ++m) {
        const double x = 2.0 * kPi * static_cast<double>(m) / denom;
        if (w == Window::kHamming) {
            out[m] = 0.54 - 0.46 * std::cos(x);
        } else {
            out[m] = 0.21557895 - 0.41663158 * std::cos(x) + 0.277263158 * std::cos(2 * x) -
                     0.083578947 * std::cos(3 * x) + 0.006947368 * std::cos(4 * x);
        }
    }
    return out;
}

/// Mean of the window: the amplitude factor it applies to an on-bin tone.
inline double coherent_gain(Window w, std::size_t n) {
    const auto c = window_coefficients(w, n);
    double s = 0.0;
    for (double v : c) s += v;
    return s / static_cast<double>(n);
}

/// Power R of an on-bin tone A cos(.) after range processing with window w
/// is A^2 M CG^2 / 2; this inverts that relation.
inline double tone_amplitude_from_power(double power, Window w, std::size_t samples) {
    const double cg = coherent_gain(w, samples);
    return std::sqrt(2.0 * power / (static_cast<double>(samples) * cg * cg));
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// Owns an FFTW plan; planning is serialized since FFTW's planner is not reentrant.
class FftwPlan {
public:
    explicit FftwPlan(fftw_plan plan) : plan_(plan) {}
    FftwPlan(const FftwPlan&) = delete;
    FftwPlan& operator=(const FftwPlan&) = delete;
    ~FftwPlan() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }
    fftw_plan get() const { return plan_; }

private:
    fftw_plan plan_;
};

template <typename T>
struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : ptr(static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)))) {}
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    ~FftwBuffer() { fftw_free(ptr); }
    T* ptr;
};

}  // namespace detail

/// Output of the fast-time transform: complex spectrum S and power R, both
/// (M/2+1) x N.
struct RangeFftResult {
    Matrix<std::complex<double>> spectrum;
    Matrix<double> power;
    double range_bin_size{0.0};  // m
};

/// S(o,n) = sum_m w(m) x(m,n) e^{-j 2 pi o m / M}, o = 0..M/2;
/// R = |S|^2 / M at o in {0, M/2}, 2 |S|^2 / M otherwise.
inline RangeFftResult range_fft(const BasebandFrame& frame, Window window) {
    const std::size_t M = frame.samples.rows(), N = frame.samples.cols();
    if (M < 2 || M % 2 != 0) throw DomainError("range_fft: M must be even and >= 2");
    const std::size_t bins = M / 2 + 1;
    const auto w = window_coefficients(window, M);
    detail::FftwBuffer<double> in(M);
    detail::FftwBuffer<fftw_complex> out(bins);
    fftw_plan raw;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        raw = fftw_plan_dft_r2c_1d(static_cast<int>(M), in.ptr, out.ptr, FFTW_ESTIMATE);
    }
    const detail::FftwPlan plan(raw);

    RangeFftResult r{Matrix<std::complex<double>>(bins, N), Matrix<double>(bins, N),
                     frame.config.range_bin_size()};
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t m = 0; m < M; ++m) in.ptr[m] = w[m] * frame.samples(m, n);
        fftw_execute(plan.get());
        for (std::size_t o = 0; o < bins; ++o) {
            const std::complex<double> s{out.ptr[o][0], out.ptr[o][1]};
            r.spectrum(o, n) = s;
            const double scale = (o == 0 || o == M / 2) ? 1.0 : 2.0;
            r.power(o, n) = scale * std::norm(s) / static_cast<double>(M);
        }
    }
    return r;
}

struct RangeProfile {
    std::vector<double> values;
    double bin_size{0.0};  // m per bin

    double range_of(std::size_t bin) const { return static_cast<double>(bin) * bin_size; }
};

/// Mean of the first `count` columns of R.
inline RangeProfile average_profiles(const Matrix<double>& power, std::size_t count,
                                     double bin_size = 0.0) {
    if (count == 0 || count > power.cols()) {
        throw DomainError("average_profiles: count " + std::to_string(count) + " not in [1, " +
                          std::to_string(power.cols()) + "]");
    }
    RangeProfile p{std::vector<double>(power.rows(), 0.0), bin_size};
    for (std::size_t o = 0; o < power.rows(); ++o) {
        double s = 0.0;
        for (std::size_t n = 0; n < count; ++n) s += power(o, n);
        p.values[o] = s / static_cast<double>(count);
    }
    return p;
}

/// Power map over (range bin o, Doppler column q). Columns are center-shifted:
/// q = (p + N/2) mod N for raw Doppler bin p, so zero Doppler sits at column
/// N/2 (integer division) and v(q) = (q - N/2) * velocity_bin_size.
struct RangeDopplerMap {
    Matrix<double> values;
    double range_bin_size{0.0};     // m
    double velocity_bin_size{0.0};  // m/s

    std::size_t range_bins() const { return values.rows(); }
    std::size_t doppler_bins() const { return values.cols(); }
    std::size_t center_column() const { return values.cols() / 2; }
    double range_of(std::size_t o) const { return static_cast<double>(o) * range_bin_size; }
    double velocity_of(std::size_t q) const {
        return (static_cast<double>(q) - static_cast<double>(center_column())) * velocity_bin_size;
    }
};

/// T(o,p) = sum_n w(n) S(o,n) e^{-j 2 pi p n / N};
/// D = |T|^2 / (N M) at o in {0, M/2}, 2 |T|^2 / (N M) otherwise.
inline RangeDopplerMap doppler_fft(const Matrix<std::complex<double>>& spectrum, Window window,
                                   double range_bin_size = 0.0, double velocity_bin_size = 0.0) {
    if (window == Window::kFlattop) {
        throw DomainError("doppler_fft: window must be rectangular or hamming");
    }
    const std::size_t bins = spectrum.rows(), N = spectrum.cols();
    if (bins < 2 || N < 1) throw DomainError("doppler_fft: empty spectrum");
    const std::size_t M = 2 * (bins - 1);
    const auto w = window_coefficients(window, N);
    detail::FftwBuffer<fftw_complex> in(N), out(N);
    fftw_plan raw;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        raw = fftw_plan_dft_1d(static_cast<int>(N), in.ptr, out.ptr, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    const detail::FftwPlan plan(raw);

    RangeDopplerMap map{Matrix<double>(bins, N), range_bin_size, velocity_bin_size};
    const double norm_nm = static_cast<double>(N) * static_cast<double>(M);
    for (std::size_t o = 0; o < bins; ++o) {
        for (std::size_t n = 0; n < N; ++n) {
            const auto v = w[n] * spectrum(o, n);
            in.ptr[n][0] = v.real();
            in.ptr[n][1] = v.imag();
        }
        fftw_execute(plan.get());
        const double scale = (o == 0 || o == M / 2) ? 1.0 : 2.0;
        for (std::size_t p = 0; p < N; ++p) {
            const double mag2 = out.ptr[p][0] * out.ptr[p][0] + out.ptr[p][1] * out.ptr[p][1];
            map.values(o, (p + N / 2) % N) = scale * mag2 / norm_nm;
        }
    }
    return map;
}

/// Full chain: range transform then Doppler transform, calibrated from the frame's config.
inline RangeDopplerMap range_doppler_map(const BasebandFrame& frame, Window range_window,
                                         Window doppler_window) {
    const auto r = range_fft(frame, range_window);
    return doppler_fft(r.spectrum, doppler_window, frame.config.range_bin_size(),
                       frame.config.velocity_bin_size());
}

/// Normalized 5x5 Gaussian kernel, row-major.
inline std::array<double, 25> gaussian_kernel(double sigma) {
    std::array<double, 25> k{};
    double sum = 0.0;
    for (int i = -2; i <= 2; ++i) {
        for (int j = -2; j <= 2; ++j) {
            const double v = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
            k[static_cast<std::size_t>((i + 2) * 5 + (j + 2))] = v;
            sum += v;
        }
    }
    for (double& v : k) v /= sum;
    return k;
}

/// 5x5 Gaussian convolution with replicate padding.
inline RangeDopplerMap gaussian_blur(const RangeDopplerMap& map, double sigma = 1.0) {
    const std::size_t R = map.values.rows(), C = map.values.cols();
    if (R < 5 || C < 5) throw DomainError("gaussian_blur: map must be at least 5x5");
    if (!(sigma > 0.0)) throw DomainError("gaussian_blur: sigma must be positive");
    const auto k = gaussian_kernel(sigma);
    RangeDopplerMap out = map;
    const auto clampi = [](long v, std::size_t n) {
        return static_cast<std::size_t>(std::clamp<long>(v, 0, static_cast<long>(n) - 1));
    };
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; ++c) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) {
                const std::size_t rr = clampi(static_cast<long>(r) + i, R);
                for (int j = -2; j <= 2; ++j) {
                    const std::size_t cc = clampi(static_cast<long>(c) + j, C);
                    acc += k[static_cast<std::size_t>((i + 2) * 5 + (j + 2))] * map.values(rr, cc);
                }
            }
            out.values(r, c) = acc;
        }
    }
    return out;
}

/// Mean noise power estimated as median / ln 2 (the median-to-mean ratio of
/// an exponential distribution, which |complex Gaussian|^2 bins follow).
inline double estimate_noise_floor(const RangeDopplerMap& map) {
    std::vector<double> v(map.values.data().begin(), map.values.data().end());
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid / std::numbers::ln2;
}

struct Feature {
    double range{0.0};     // m
    double velocity{0.0};  // m/s
    double amplitude{0.0}; // map power units
    std::size_t range_bin{0};
    std::size_t doppler_bin{0};  // shifted column
};

/// Local maxima over the 8-neighborhood above noise_floor * 10^(margin/10),
/// sorted by descending amplitude. Plateaus keep their first cell in
/// row-major order.
inline std::vector<Feature> detect_peaks(const RangeDopplerMap& map, double noise_floor,
                                         double margin_db) {
    if (!(margin_db >= 0.0)) throw DomainError("detect_peaks: margin must be >= 0 dB");
    const double threshold = noise_floor * std::pow(10.0, margin_db / 10.0);
    const auto& v = map.values;
    const std::size_t R = v.rows(), C = v.cols();
    std::vector<Feature> out;
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; ++c) {
            const double x = v(r, c);
            if (!(x > threshold)) continue;
            bool peak = true;
            for (int i = -1; i <= 1 && peak; ++i) {
                for (int j = -1; j <= 1; ++j) {
                    if (i == 0 && j == 0) continue;
                    const long rr = static_cast<long>(r) + i, cc = static_cast<long>(c) + j;
                    if (rr < 0 || cc < 0 || rr >= static_cast<long>(R) || cc >= static_cast<long>(C)) continue;
                    const double y = v(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
                    // Earlier neighbors must be strictly lower, later ones not higher.
                    const bool earlier = i < 0 || (i == 0 && j < 0);
                    if (earlier ? !(y < x) : (y > x)) {
                        peak = false;
                        break;
                    }
                }
            }
            if (peak) out.push_back({map.range_of(r), map.velocity_of(c), x, r, c});
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Feature& a, const Feature& b) { return a.amplitude > b.amplitude; });
    return out;
}

/// Maximum of the profile within +-tolerance_bins of the bin nearest expected_range.
inline double peak_amplitude(const RangeProfile& profile, double expected_range,
                             std::size_t tolerance_bins) {
    if (!(profile.bin_size > 0.0)) throw DomainError("peak_amplitude: profile has no range scale");
    const double span = profile.range_of(profile.values.size() - 1);
    if (!(expected_range >= 0.0 && expected_range <= span)) {
        throw DomainError("peak_amplitude: expected range " + std::to_string(expected_range) +
                          " m outside [0, " + std::to_string(span) + "] m");
    }
    const auto center = static_cast<std::size_t>(std::lround(expected_range / profile.bin_size));
    const std::size_t lo = center >= tolerance_bins ? center - tolerance_bins : 0;
    const std::size_t hi = std::min(profile.values.size() - 1, center + tolerance_bins);
    double best = 0.0;
    for (std::size_t o = lo; o <= hi; ++o) best = std::max(best, profile.values[o]);
    return best;
}

}  // namespace radarsim
