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

#include <string>
#include <vector>

#include "crfit/training.hpp"

namespace crfit {

/// Per-point average L1 losses of one amplitude pair, with and without the
/// fitted correction, over all points of the pair and over the validation
/// subset alone.
struct PairEvaluation {
  double a1 = 0.0;
  double a2 = 0.0;
  int n_points = 0;
  int n_validation = 0;
  double loss_uncorrected = 0.0;     // average over all points of the pair
  double loss_corrected = 0.0;
  double val_loss_uncorrected = 0.0; // average over the validation subset
  double val_loss_corrected = 0.0;
};

inline double average_loss(const ParamVector& p,
                           const std::vector<DataPoint>& points,
                           const FitModel& model, int workers = 1) {
  if (points.empty()) throw DataError("average_loss: empty point set");
  return batch_loss(p, points, model, workers) / double(points.size());
}

inline PairEvaluation evaluate_pair(const Dataset& ds, const FitModel& model,
                                    const ParamVector& fitted, double a1,
                                    double a2, int workers = 1) {
  const std::vector<DataPoint> pts = points_for_pair(ds, a1, a2);
  const TrainValSplit sp = split_pair(ds, a1, a2);
  const ParamVector zero = zero_params(model.dim(), model.complex_params);
  PairEvaluation ev;
  ev.a1 = a1;
  ev.a2 = a2;
  ev.n_points = int(pts.size());
  ev.n_validation = int(sp.validation.size());
  ev.loss_uncorrected = average_loss(zero, pts, model, workers);
  ev.loss_corrected = average_loss(fitted, pts, model, workers);
  if (!sp.validation.empty()) {
    ev.val_loss_uncorrected = average_loss(zero, sp.validation, model, workers);
    ev.val_loss_corrected = average_loss(fitted, sp.validation, model, workers);
  }
  return ev;
}

/// Observed versus simulated time series of one prepared state of one pair,
/// for plotting model quality over the duration ladder. The observed column
/// is the survival probability of the prepared state; the simulated columns
/// give it without and with the fitted correction.
struct SeriesRow {
  int duration_dt = 0;
  double duration_ns = 0.0;
  double observed = 0.0;
  double uncorrected = 0.0;
  double corrected = 0.0;
};

inline std::vector<SeriesRow> survival_series(const Dataset& ds,
                                              const FitModel& model,
                                              const ParamVector& fitted,
                                              double a1, double a2,
                                              InitialState state,
                                              int workers = 1) {
  std::vector<DataPoint> pts;
  for (const DataPoint& p : points_for_pair(ds, a1, a2))
    if (p.initial_state == state) pts.push_back(p);
  if (pts.empty())
    throw NotFoundError("survival_series: no points with requested state");
  std::sort(pts.begin(), pts.end(), [](const DataPoint& x, const DataPoint& y) {
    return x.duration_dt < y.duration_dt;
  });
  const int outcome = int(state); // outcome index matching the prepared state
  const ParamVector zero = zero_params(model.dim(), model.complex_params);
  std::vector<SeriesRow> rows(pts.size());
  parallel_for(pts.size(), workers, [&](std::size_t i) {
    const DataPoint& pt = pts[i];
    const PulseSchedule sched = model.schedule_for(pt);
    const StateVector psi0 =
        make_initial_state(pt.initial_state, model.sim.params.levels);
    const CorrectionSet c0 = model.corrections(zero);
    const CorrectionSet cf = model.corrections(fitted);
    const StateVector psi_u =
        evolve(model.sim, &c0, sched, psi0, model.rel_tol, model.abs_tol);
    const StateVector psi_c =
        evolve(model.sim, &cf, sched, psi0, model.rel_tol, model.abs_tol);
    SeriesRow row;
    row.duration_dt = pt.duration_dt;
    row.duration_ns = pt.duration_dt * model.sim.params.dt_ns;
    row.observed = pt.probs[outcome];
    row.uncorrected =
        computational_probs(psi_u, model.sim.params.levels)[outcome];
    row.corrected = computational_probs(psi_c, model.sim.params.levels)[outcome];
    rows[i] = row;
  });
  return rows;
}

inline void export_survival_series(const std::vector<SeriesRow>& rows,
                                   const std::string& path) {
  std::ostringstream os;
  os << "duration_dt,duration_ns,observed,uncorrected,corrected\n";
  for (const SeriesRow& r : rows)
    os << r.duration_dt << "," << detail::csv_num(r.duration_ns) << ","
       << detail::csv_num(r.observed) << "," << detail::csv_num(r.uncorrected)
       << "," << detail::csv_num(r.corrected) << "\n";
  detail::atomic_write(path, os.str());
}

}  // namespace crfit
