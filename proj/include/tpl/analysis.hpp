#pragma once

#include <optional>
#include <vector>

#include "tpl/integrator.hpp"

namespace tpl {

/// Uniformly sampled scalar record.
struct Signal {
    double t0_us = 0.0;
    double dt_us = 0.0;
    std::vector<double> values;

    double duration_us() const { return dt_us * static_cast<double>(values.size()); }
};

/// |cos(theta) a_z + sin(theta) a_x|^2 at every sample.
Signal polarizer_projection(const TimeSeries& ts, double theta);
/// n_tot at every sample.
Signal total_photons(const TimeSeries& ts);
/// Samples with t_from <= t <= t_to.
TimeSeries select_window(const TimeSeries& ts, double t_from_us, double t_to_us);

struct Stokes {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
};

Stokes stokes(complex a_z, complex a_x);

struct PolarizationSample {
    double t_us = 0.0;
    Stokes s;
    double ellipticity = 0.0;       // tan(chi), signed by handedness
    double major_axis_angle = 0.0;  // psi in [-pi/2, pi/2), from the z axis
};

PolarizationSample polarization_sample(const Sample& s);
std::vector<PolarizationSample> polarization_track(const TimeSeries& ts);

/// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> v, double q);

/// (I99 - I1) / (I99 + I1). Throws InvalidInput on an empty record.
double modulation_depth(const std::vector<double>& intensity);

struct SpectrumReport {
    std::vector<double> frequency_hz;
    std::vector<double> power_density;  // one-sided, per Hz
    double dominant_peak_hz = 0.0;
    /// Geometric over arithmetic mean of the non-DC Welch average
    /// (raw periodogram below 32 samples).
    double spectral_flatness = 0.0;
    /// sum(P) df; equals the window-normalized mean square of the
    /// mean-removed record.
    double total_power = 0.0;
    double windowed_mean_square = 0.0;
};

/// Hann-windowed periodogram of the mean-removed signal.
SpectrumReport periodogram(const Signal& s);

struct PeriodEstimate {
    bool oscillating = false;
    double period_us = 0.0;
    double frequency_hz = 0.0;
    double peak_to_floor = 0.0;
};

/// Peak found on a Welch average (quarter-length Hann segments), located
/// on the full periodogram and refined by a parabola through log power.
/// Not oscillating when the peak is below 6x the median of the octave
/// around it, or completes fewer than two cycles per segment.
PeriodEstimate dominant_period(const Signal& s);

/// Normalized autocovariance for lags 0 .. max_lag (r[0] == 1).
std::vector<double> autocorrelation(const std::vector<double>& v, std::size_t max_lag);

struct DropTime {
    bool dropped = false;
    double time_us = 0.0;  // window length when not dropped
};

/// First lag where |r| stays below threshold for 3 consecutive lags. A
/// later return of |r| above 0.5 (within a quarter of the record) marks
/// the signal as not dropped.
DropTime autocorrelation_drop_time(const Signal& s, double threshold = 0.1);

struct LyapunovEstimate {
    double exponent_per_us = 0.0;
    bool valid = false;
    double scaling_decades = 0.0;
};

/// Nearest-neighbour divergence of delay-embedded states.
LyapunovEstimate largest_lyapunov(const Signal& s, int embedding_dim = 4,
                                  std::size_t max_points = 3000);

struct ChaosIndicators {
    double spectral_flatness = 0.0;
    DropTime drop;
    std::optional<LyapunovEstimate> lyapunov;
};

ChaosIndicators chaos_indicators(const Signal& s, bool with_lyapunov = false);

}  // namespace tpl
