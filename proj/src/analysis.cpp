#include "tpl/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include "tpl/cavity.hpp"
#include "tpl/error.hpp"

namespace tpl {

Signal polarizer_projection(const TimeSeries& ts, double theta) {
    Signal out;
    out.dt_us = ts.sample_period_us;
    out.t0_us = ts.samples.empty() ? 0.0 : ts.samples.front().t_us;
    out.values.reserve(ts.samples.size());
    const double c = std::cos(theta), s = std::sin(theta);
    for (const auto& x : ts.samples) out.values.push_back(std::norm(c * x.a_z + s * x.a_x));
    return out;
}

Signal total_photons(const TimeSeries& ts) {
    Signal out;
    out.dt_us = ts.sample_period_us;
    out.t0_us = ts.samples.empty() ? 0.0 : ts.samples.front().t_us;
    for (const auto& x : ts.samples) out.values.push_back(x.n_tot());
    return out;
}

TimeSeries select_window(const TimeSeries& ts, double t_from, double t_to) {
    TimeSeries out;
    out.sample_period_us = ts.sample_period_us;
    const double eps = 1e-9 * std::max(1.0, std::abs(t_to));
    for (const auto& s : ts.samples)
        if (s.t_us >= t_from - eps && s.t_us <= t_to + eps) out.samples.push_back(s);
    return out;
}

Stokes stokes(complex a_z, complex a_x) {
    const complex m = std::conj(a_z) * a_x;
    return {std::norm(a_z) + std::norm(a_x), std::norm(a_z) - std::norm(a_x), 2.0 * m.real(),
            2.0 * m.imag()};
}

PolarizationSample polarization_sample(const Sample& x) {
    PolarizationSample p;
    p.t_us = x.t_us;
    p.s = stokes(x.a_z, x.a_x);
    if (p.s.s0 > 0.0) {
        const double r = std::clamp(p.s.s3 / p.s.s0, -1.0, 1.0);
        p.ellipticity = std::tan(0.5 * std::asin(r));
        double psi = 0.5 * std::atan2(p.s.s2, p.s.s1);
        if (psi >= 0.5 * constants::pi) psi -= constants::pi;
        p.major_axis_angle = psi;
    }
    return p;
}

std::vector<PolarizationSample> polarization_track(const TimeSeries& ts) {
    std::vector<PolarizationSample> out;
    out.reserve(ts.samples.size());
    for (const auto& s : ts.samples) out.push_back(polarization_sample(s));
    return out;
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw InvalidInput("percentile of an empty record");
    if (!(q >= 0.0 && q <= 100.0)) throw InvalidInput("percentile must lie in [0, 100]");
    std::sort(v.begin(), v.end());
    const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= v.size()) return v.back();
    const double f = pos - static_cast<double>(i);
    return v[i] + f * (v[i + 1] - v[i]);
}

double modulation_depth(const std::vector<double>& intensity) {
    if (intensity.empty()) throw InvalidInput("modulation depth of an empty window");
    const double lo = percentile(intensity, 1.0);
    const double hi = percentile(intensity, 99.0);
    if (hi + lo <= 0.0) return 0.0;
    return (hi - lo) / (hi + lo);
}

namespace {

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

// |FFT|^2 of a real sequence, bins 0 .. n/2.
std::vector<double> power_of_real(const std::vector<double>& in) {
    const int n = static_cast<int>(in.size());
    std::vector<double> buf(in);
    fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lk(plan_mutex());
        plan = fftw_plan_dft_r2c_1d(n, buf.data(), out, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::vector<double> pw(static_cast<std::size_t>(n / 2 + 1));
    for (std::size_t k = 0; k < pw.size(); ++k) pw[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    {
        std::lock_guard<std::mutex> lk(plan_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(out);
    return pw;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double flatness(const std::vector<double>& p, std::size_t from) {
    if (p.size() <= from) return 0.0;
    double lsum = 0.0, sum = 0.0;
    const double tiny = std::numeric_limits<double>::min();
    for (std::size_t k = from; k < p.size(); ++k) {
        lsum += std::log(std::max(p[k], tiny));
        sum += p[k];
    }
    const double n = static_cast<double>(p.size() - from);
    if (sum <= 0.0) return 0.0;
    return std::exp(lsum / n) / (sum / n);
}

// Fluctuations below integrator accuracy are treated as a flat line.
bool near_constant(const std::vector<double>& v) {
    const double mu = mean_of(v);
    double sq = 0.0;
    for (double x : v) sq += (x - mu) * (x - mu);
    const double rms = std::sqrt(sq / static_cast<double>(v.size()));
    return rms <= 1e-6 * std::max(std::abs(mu), std::numeric_limits<double>::min());
}

SpectrumReport raw_periodogram(const Signal& s) {
    const std::size_t n = s.values.size();
    if (n < 4) throw InvalidInput("periodogram needs at least 4 samples");
    if (!(s.dt_us > 0.0)) throw InvalidInput("sample period must be positive");
    const double mu = mean_of(s.values);
    std::vector<double> xw(n);
    double u = 0.0, ms = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * constants::pi * static_cast<double>(i) /
                                              static_cast<double>(n));
        xw[i] = w * (s.values[i] - mu);
        u += w * w;
        ms += xw[i] * xw[i];
    }
    u /= static_cast<double>(n);
    ms /= static_cast<double>(n);

    const double dt = s.dt_us * 1e-6;
    const auto pw = power_of_real(xw);
    SpectrumReport r;
    r.frequency_hz.resize(pw.size());
    r.power_density.resize(pw.size());
    const double df = 1.0 / (static_cast<double>(n) * dt);
    const double norm = dt / (static_cast<double>(n) * u);
    for (std::size_t k = 0; k < pw.size(); ++k) {
        const bool edge = k == 0 || (n % 2 == 0 && k == pw.size() - 1);
        r.frequency_hz[k] = static_cast<double>(k) * df;
        r.power_density[k] = (edge ? 1.0 : 2.0) * pw[k] * norm;
    }
    r.total_power = std::accumulate(r.power_density.begin(), r.power_density.end(), 0.0) * df;
    r.windowed_mean_square = ms / u;
    std::size_t kmax = 1;
    for (std::size_t k = 1; k < pw.size(); ++k)
        if (r.power_density[k] > r.power_density[kmax]) kmax = k;
    r.dominant_peak_hz = r.frequency_hz[kmax];
    r.spectral_flatness = flatness(r.power_density, 1);
    return r;
}

std::vector<double> welch(const Signal& s, std::size_t seg);

}  // namespace

SpectrumReport periodogram(const Signal& s) {
    auto r = raw_periodogram(s);
    const std::size_t n = s.values.size();
    if (near_constant(s.values)) r.spectral_flatness = 0.0;
    else if (n >= 32) r.spectral_flatness = flatness(welch(s, n / 4), 1);
    return r;
}

namespace {

// Averaged Hann periodogram over quarter-length segments with 50% overlap.
std::vector<double> welch(const Signal& s, std::size_t seg) {
    std::vector<double> acc;
    int count = 0;
    for (std::size_t start = 0; start + seg <= s.values.size(); start += seg / 2) {
        Signal part;
        part.dt_us = s.dt_us;
        part.values.assign(s.values.begin() + static_cast<std::ptrdiff_t>(start),
                           s.values.begin() + static_cast<std::ptrdiff_t>(start + seg));
        const auto p = raw_periodogram(part).power_density;
        if (acc.empty()) acc.assign(p.size(), 0.0);
        for (std::size_t k = 0; k < p.size(); ++k) acc[k] += p[k];
        ++count;
    }
    for (auto& v : acc) v /= count;
    return acc;
}

}  // namespace

PeriodEstimate dominant_period(const Signal& s) {
    PeriodEstimate e;
    const std::size_t n = s.values.size();
    if (n < 32) throw InvalidInput("dominant period needs at least 32 samples");
    if (near_constant(s.values)) return e;
    // detection on the averaged spectrum, location on the full one
    const std::size_t seg = n / 4;
    const auto w = welch(s, seg);
    // skip the lowest bins: fewer than two cycles per segment is a trend
    if (w.size() < 8) return e;
    std::size_t kw = 2;
    for (std::size_t i = 2; i < w.size(); ++i)
        if (w[i] > w[kw]) kw = i;
    // floor is the median over an octave either side, so a red spectrum
    // does not count as a peak
    const std::size_t band_lo = std::max<std::size_t>(1, kw / 2);
    const std::size_t band_hi = std::min(w.size() - 1, 2 * kw);
    std::vector<double> band(w.begin() + static_cast<std::ptrdiff_t>(band_lo),
                             w.begin() + static_cast<std::ptrdiff_t>(band_hi) + 1);
    const double floor = percentile(band, 50.0);
    e.peak_to_floor = floor > 0.0 ? w[kw] / floor : std::numeric_limits<double>::infinity();
    if (!(w[kw] > 0.0) || e.peak_to_floor < 6.0) return e;

    const auto sp = periodogram(s);
    const auto& p = sp.power_density;
    const double ratio = static_cast<double>(n) / static_cast<double>(seg);
    const auto centre = static_cast<std::size_t>(std::lround(static_cast<double>(kw) * ratio));
    const auto reach = static_cast<std::size_t>(std::ceil(ratio)) + 1;
    const std::size_t lo = centre > reach ? centre - reach : 1;
    const std::size_t hi = std::min(p.size() - 1, centre + reach);
    std::size_t k = std::max<std::size_t>(lo, 1);
    for (std::size_t i = k; i <= hi; ++i)
        if (p[i] > p[k]) k = i;
    double shift = 0.0;
    if (k + 1 < p.size() && p[k - 1] > 0.0 && p[k + 1] > 0.0) {
        const double a = std::log(p[k - 1]), b = std::log(p[k]), c = std::log(p[k + 1]);
        const double den = a - 2.0 * b + c;
        if (den < 0.0) shift = 0.5 * (a - c) / den;
    }
    e.frequency_hz = (static_cast<double>(k) + shift) * sp.frequency_hz[1];
    if (!(e.frequency_hz > 0.0)) return e;
    e.oscillating = true;
    e.period_us = 1e6 / e.frequency_hz;
    return e;
}

std::vector<double> autocorrelation(const std::vector<double>& v, std::size_t max_lag) {
    const std::size_t n = v.size();
    if (n == 0) throw InvalidInput("autocorrelation of an empty record");
    max_lag = std::min(max_lag, n - 1);
    const double mu = mean_of(v);
    // zero-padded FFT: |X|^2 back-transformed gives the linear autocovariance
    std::size_t m = 1;
    while (m < 2 * n) m <<= 1;
    std::vector<double> buf(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) buf[i] = v[i] - mu;
    fftw_complex* spec = fftw_alloc_complex(m / 2 + 1);
    fftw_plan fwd, bwd;
    {
        std::lock_guard<std::mutex> lk(plan_mutex());
        fwd = fftw_plan_dft_r2c_1d(static_cast<int>(m), buf.data(), spec, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(static_cast<int>(m), spec, buf.data(), FFTW_ESTIMATE);
    }
    fftw_execute(fwd);
    for (std::size_t k = 0; k < m / 2 + 1; ++k) {
        spec[k][0] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
        spec[k][1] = 0.0;
    }
    fftw_execute(bwd);
    {
        std::lock_guard<std::mutex> lk(plan_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    fftw_free(spec);
    std::vector<double> r(max_lag + 1, 0.0);
    const double c0 = buf[0];
    if (!(c0 > 0.0)) {
        r[0] = 1.0;
        return r;
    }
    for (std::size_t k = 0; k <= max_lag; ++k) r[k] = buf[k] / c0;
    r[0] = 1.0;
    return r;
}

DropTime autocorrelation_drop_time(const Signal& s, double threshold) {
    if (s.values.size() < 8) throw InvalidInput("autocorrelation needs at least 8 samples");
    DropTime d;
    d.time_us = s.duration_us();
    if (near_constant(s.values)) return d;
    const std::size_t max_lag = s.values.size() / 4;
    const auto r = autocorrelation(s.values, max_lag);
    for (std::size_t k = 1; k + 2 <= max_lag; ++k) {
        if (std::abs(r[k]) < threshold && std::abs(r[k + 1]) < threshold &&
            std::abs(r[k + 2]) < threshold) {
            for (std::size_t j = k + 3; j <= max_lag; ++j)
                if (std::abs(r[j]) >= 0.5) return d;
            d.dropped = true;
            d.time_us = static_cast<double>(k) * s.dt_us;
            return d;
        }
    }
    return d;
}

LyapunovEstimate largest_lyapunov(const Signal& s, int m, std::size_t max_points) {
    LyapunovEstimate out;
    const std::size_t n = s.values.size();
    if (n < 64 || m < 1) return out;
    const auto r = autocorrelation(s.values, n / 4);
    std::size_t tau = 1;
    while (tau < r.size() && r[tau] > std::exp(-1.0)) ++tau;
    tau = std::max<std::size_t>(1, std::min(tau, n / 16));
    const std::size_t span = static_cast<std::size_t>(m - 1) * tau;
    if (n <= span + 32) return out;
    const std::size_t count = std::min(n - span, max_points);
    const std::size_t theiler = static_cast<std::size_t>(m) * tau;
    const std::size_t horizon = std::max<std::size_t>(8, count / 8);

    auto dist2 = [&](std::size_t i, std::size_t j) {
        double acc = 0.0;
        for (int d = 0; d < m; ++d) {
            const double e = s.values[i + d * tau] - s.values[j + d * tau];
            acc += e * e;
        }
        return acc;
    };
    std::vector<double> sum(horizon, 0.0);
    std::vector<long> cnt(horizon, 0);
    for (std::size_t i = 0; i + horizon < count; ++i) {
        std::size_t best = count;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j + horizon < count; ++j) {
            if ((i > j ? i - j : j - i) <= theiler) continue;
            const double d2 = dist2(i, j);
            if (d2 > 0.0 && d2 < bd) {
                bd = d2;
                best = j;
            }
        }
        if (best == count) continue;
        for (std::size_t k = 0; k < horizon; ++k) {
            const double d2 = dist2(i + k, best + k);
            if (d2 > 0.0) {
                sum[k] += 0.5 * std::log(d2);
                ++cnt[k];
            }
        }
    }
    std::vector<double> curve;
    for (std::size_t k = 0; k < horizon && cnt[k] > 0; ++k)
        curve.push_back(sum[k] / static_cast<double>(cnt[k]));
    if (curve.size() < 4) return out;
    const double top = *std::max_element(curve.begin(), curve.end());
    std::size_t kend = 1;
    while (kend + 1 < curve.size() && curve[kend] < curve[0] + 0.8 * (top - curve[0])) ++kend;
    // least-squares slope over 0 .. kend
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double np = static_cast<double>(kend + 1);
    for (std::size_t k = 0; k <= kend; ++k) {
        const double x = static_cast<double>(k) * s.dt_us;
        sx += x;
        sy += curve[k];
        sxx += x * x;
        sxy += x * curve[k];
    }
    const double den = np * sxx - sx * sx;
    if (den <= 0.0) return out;
    out.exponent_per_us = (np * sxy - sx * sy) / den;
    out.scaling_decades = (curve[kend] - curve[0]) / std::log(10.0);
    out.valid = out.scaling_decades >= 1.0 && kend >= 3;
    return out;
}

ChaosIndicators chaos_indicators(const Signal& s, bool with_lyapunov) {
    ChaosIndicators c;
    c.spectral_flatness = periodogram(s).spectral_flatness;
    c.drop = autocorrelation_drop_time(s);
    if (with_lyapunov) c.lyapunov = largest_lyapunov(s);
    return c;
}

}  // namespace tpl
