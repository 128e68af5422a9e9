// Copyright 2026 The crfit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "crfit/errors.hpp"

namespace crfit {

/// Flat-top pulse with lifted-Gaussian rise and fall edges. Durations are in
/// integer sampler ticks; the waveform itself is evaluated analytically at
/// arbitrary time, not on the tick grid.
struct GaussianSquarePulse {
  double amplitude = 0.0;    // dimensionless, in [-1, 1]
  int total_duration_dt = 0; // full pulse length, ticks
  int risefall_dt = 0;       // length of each edge, ticks
  double sigma_dt = 8.0;     // Gaussian width of the edges, ticks

  void validate() const {
    if (total_duration_dt < 0)
      throw DataError("pulse: total_duration_dt must be >= 0");
    if (risefall_dt < 0) throw DataError("pulse: risefall_dt must be >= 0");
    if (2 * risefall_dt > total_duration_dt)
      throw DataError("pulse: edges longer than the pulse");
    if (!(amplitude >= -1.0 && amplitude <= 1.0))
      throw DataError("pulse: amplitude must lie in [-1, 1]");
    if (risefall_dt > 0 && !(sigma_dt > 0.0))
      throw DataError("pulse: sigma_dt must be positive");
  }
};

/// Dimensionless envelope S(t). Zero outside [0, duration], exactly zero at
/// both ends, exactly `amplitude` on the plateau. The edges are Gaussians
/// lifted so the waveform is continuous at the boundary and the plateau:
///   edge(tau) = A * (exp(-tau^2/2sigma^2) - c) / (1 - c),
///   c = exp(-r^2/2sigma^2),
/// with tau the distance from the nearest plateau end.
inline double envelope(const GaussianSquarePulse& p, double t_ns,
                       double dt_ns) {
  const double duration = p.total_duration_dt * dt_ns;
  if (!(t_ns >= 0.0 && t_ns <= duration)) return 0.0;
  if (p.amplitude == 0.0) return 0.0;
  const double rise = p.risefall_dt * dt_ns;
  if (rise <= 0.0) return p.amplitude;
  const double plateau_end = duration - rise;
  if (t_ns >= rise && t_ns <= plateau_end) return p.amplitude;
  const double sigma = p.sigma_dt * dt_ns;
  const double tau = (t_ns < rise) ? (t_ns - rise) : (t_ns - plateau_end);
  const double lift = std::exp(-0.5 * (rise / sigma) * (rise / sigma));
  const double g = std::exp(-0.5 * (tau / sigma) * (tau / sigma));
  return p.amplitude * (g - lift) / (1.0 - lift);
}

/// Arithmetic ladder of total pulse durations, in ticks:
/// base + k*step + edges for k = 0 .. count-1.
inline std::vector<int> duration_ladder(int count, int base_dt, int step_dt,
                                        int edges_dt) {
  if (count < 0) throw DataError("duration_ladder: count must be >= 0");
  if (base_dt < 0 || step_dt < 0 || edges_dt < 0)
    throw DataError("duration_ladder: negative duration component");
  std::vector<int> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) out.push_back(base_dt + k * step_dt + edges_dt);
  return out;
}

/// Simultaneous drive pulses on both transmons plus their carrier
/// frequencies. Both pulses share one clock and one total duration.
struct PulseSchedule {
  GaussianSquarePulse pulse_q1;
  GaussianSquarePulse pulse_q2;
  double drive_freq_q1 = 0.0; // carrier, rad/ns
  double drive_freq_q2 = 0.0; // carrier, rad/ns
  double dt_ns = 0.0;         // tick length, ns

  double duration_ns() const { return pulse_q1.total_duration_dt * dt_ns; }

  void validate() const {
    if (!(dt_ns > 0.0)) throw DataError("schedule: dt_ns must be positive");
    pulse_q1.validate();
    pulse_q2.validate();
    if (pulse_q1.total_duration_dt != pulse_q2.total_duration_dt)
      throw DataError("schedule: pulses must share one total duration");
  }

  /// Interior times where an envelope switches between edge and plateau.
  /// Integrators restart at these points so each step sees a smooth
  /// right-hand side.
  std::vector<double> breakpoints() const {
    std::vector<double> ts;
    const double total = duration_ns();
    for (const GaussianSquarePulse* p : {&pulse_q1, &pulse_q2}) {
      if (p->risefall_dt <= 0) continue;
      const double r = p->risefall_dt * dt_ns;
      ts.push_back(r);
      ts.push_back(total - r);
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](double a, double b) {
                           return std::abs(a - b) < 1e-12;
                         }),
             ts.end());
    std::vector<double> interior;
    for (double t : ts)
      if (t > 1e-12 && t < total - 1e-12) interior.push_back(t);
    return interior;
  }
};

}  // namespace crfit
