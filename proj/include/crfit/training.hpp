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

#include <chrono>
#include <string>
#include <vector>

#include "crfit/adjoint.hpp"

namespace crfit {

struct FitConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int max_iterations = 5000;
  double loss_threshold = -1.0; // summed loss; negative disables early stop
  int workers = 1;
};

struct FitResult {
  ParamVector params;
  CorrectionSet corrections;
  std::vector<double> loss_history; // per-iteration lookahead loss + final
  double final_loss = 0.0;          // summed training loss at final params
  int iterations_used = 0;
  double wall_time_s = 0.0;
};

/// Summed L1 loss of a point set at parameters p.
inline double loss(const ParamVector& p, const std::vector<DataPoint>& points,
                   const FitModel& model, int workers = 1) {
  return batch_loss(p, points, model, workers);
}

/// Minimize the summed L1 probability loss with Nesterov momentum descent:
///
///   v <- mu v - eta grad L(p + mu v)
///   p <- p + v
///
/// starting from p = 0 and v = 0. Every gradient is evaluated at the
/// lookahead point, and the loss recorded per iteration is the lookahead
/// loss that came with that gradient. The history always ends with the loss
/// at the returned parameters: on early stop that is the last lookahead
/// entry itself (the lookahead point is returned), otherwise one extra
/// evaluation is appended. Diagonal parameter slots are re-zeroed after
/// every update (their gradient is identically zero, so this only guards
/// against drift).
///
/// Runs deterministically: same data and config give bit-identical results.
/// A loss exceeding ten times the initial loss for fifty consecutive
/// iterations aborts with a divergence error suggesting a smaller learning
/// rate.
inline FitResult fit(const std::vector<DataPoint>& train,
                     const FitConfig& cfg, const FitModel& model) {
  if (train.empty()) throw DataError("fit: empty training set");
  if (!(cfg.learning_rate > 0.0))
    throw DataError("fit: learning_rate must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw DataError("fit: momentum must lie in [0, 1)");
  if (cfg.max_iterations < 0)
    throw DataError("fit: max_iterations must be >= 0");

  const auto t_start = std::chrono::steady_clock::now();
  const int n = model.n_params();
  ParamVector p = ParamVector::Zero(n);
  ParamVector v = ParamVector::Zero(n);
  ParamVector lookahead(n);

  FitResult res;
  res.loss_history.reserve(cfg.max_iterations + 1);

  double initial_loss = -1.0;
  int high_loss_streak = 0;
  int iter = 0;
  bool stopped_early = false;
  for (; iter < cfg.max_iterations; ++iter) {
    lookahead = p + cfg.momentum * v;
    const BatchGradient bg =
        batch_gradient(lookahead, train, model, cfg.workers);
    res.loss_history.push_back(bg.loss);
    if (initial_loss < 0.0) initial_loss = bg.loss;

    if (bg.loss > 10.0 * initial_loss && initial_loss > 0.0) {
      if (++high_loss_streak >= 50) {
        std::ostringstream os;
        os << "fit: diverged (loss " << bg.loss << " stayed above 10x the "
           << "initial loss " << initial_loss << " for 50 iterations); try a "
           << "smaller learning rate";
        throw NumericalError(os.str());
      }
    } else {
      high_loss_streak = 0;
    }

    if (cfg.loss_threshold >= 0.0 && bg.loss <= cfg.loss_threshold) {
      // The measured lookahead point met the target; return it as-is. The
      // history then already ends with the loss at the final parameters.
      p = lookahead;
      zero_diagonal_params(p, model.dim(), model.complex_params);
      res.final_loss = bg.loss;
      stopped_early = true;
      break;
    }

    v = cfg.momentum * v - cfg.learning_rate * bg.grad;
    p += v;
    zero_diagonal_params(p, model.dim(), model.complex_params);
  }

  res.iterations_used = iter;
  if (!stopped_early) {
    res.final_loss = loss(p, train, model, cfg.workers);
    res.loss_history.push_back(res.final_loss);
  }
  res.params = p;
  res.corrections = model.corrections(p);
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return res;
}

// ---------------------------------------------------------------------------
// Fit result files.

/// A fit result plus everything needed to reproduce and reuse it.
struct FitRecord {
  double a1 = 0.0;
  double a2 = 0.0;
  FitConfig config;
  Frame frame = Frame::rotating;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  bool complex_params = false;
  double modulation_freq = 0.0;
  ActiveTerms active;
  int dim = 0;
  FitResult result;
};

namespace detail {

inline nlohmann::json matrix_to_json(const ComplexMatrix& m) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json rre = nlohmann::json::array();
    nlohmann::json rim = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rre.push_back(m(r, c).real());
      rim.push_back(m(r, c).imag());
    }
    re.push_back(std::move(rre));
    im.push_back(std::move(rim));
  }
  return {{"re", std::move(re)}, {"im", std::move(im)}};
}

inline ComplexMatrix matrix_from_json(const nlohmann::json& j,
                                      const std::string& where) {
  const auto re = require<std::vector<std::vector<double>>>(j, "re", where);
  const auto im = require<std::vector<std::vector<double>>>(j, "im", where);
  const std::size_t d = re.size();
  if (im.size() != d) throw DataError(where + ": re/im size mismatch");
  ComplexMatrix m(d, d);
  for (std::size_t r = 0; r < d; ++r) {
    if (re[r].size() != d || im[r].size() != d)
      throw DataError(where + ": matrix rows must be square");
    for (std::size_t c = 0; c < d; ++c)
      m(r, c) = std::complex<double>(re[r][c], im[r][c]);
  }
  return m;
}

}  // namespace detail

/// Serialize a fit. Every field is deterministic for a given fit except the
/// wall-clock measurement, which is confined to the "timing" object.
inline void save_fit_record(const FitRecord& rec, const std::string& path) {
  nlohmann::json j;
  j["schema"] = "crfit.fit.v1";
  j["pair"] = {{"a1", rec.a1}, {"a2", rec.a2}};
  j["config"] = {
      {"learning_rate", rec.config.learning_rate},
      {"momentum", rec.config.momentum},
      {"max_iterations", rec.config.max_iterations},
      {"loss_threshold", rec.config.loss_threshold},
      {"frame", rec.frame == Frame::rotating ? "rotating" : "lab"},
      {"rel_tol", rec.rel_tol},
      {"abs_tol", rec.abs_tol},
      {"complex_params", rec.complex_params},
      {"modulation_freq", rec.modulation_freq},
      {"active_terms",
       {{"m", rec.active.m}, {"d1", rec.active.d1}, {"d2", rec.active.d2}}},
  };
  j["dim"] = rec.dim;
  j["param_vector"] = std::vector<double>(
      rec.result.params.data(), rec.result.params.data() + rec.result.params.size());
  j["matrices"] = {{"m", detail::matrix_to_json(rec.result.corrections.m)},
                   {"d1", detail::matrix_to_json(rec.result.corrections.d1)},
                   {"d2", detail::matrix_to_json(rec.result.corrections.d2)}};
  j["loss_history"] = rec.result.loss_history;
  j["final_loss"] = rec.result.final_loss;
  j["iterations_used"] = rec.result.iterations_used;
  j["timing"] = {{"wall_time_s", rec.result.wall_time_s}};
  detail::atomic_write(path, j.dump(2) + "\n");
}

inline FitRecord load_fit_record(const std::string& path) {
  const std::string where = "fit record '" + path + "'";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": " + e.what());
  }
  FitRecord rec;
  try {
    rec.a1 = detail::require<double>(j.at("pair"), "a1", where);
    rec.a2 = detail::require<double>(j.at("pair"), "a2", where);
    const auto& jc = j.at("config");
    rec.config.learning_rate =
        detail::require<double>(jc, "learning_rate", where);
    rec.config.momentum = detail::require<double>(jc, "momentum", where);
    rec.config.max_iterations =
        detail::require<int>(jc, "max_iterations", where);
    rec.config.loss_threshold =
        detail::require<double>(jc, "loss_threshold", where);
    const std::string frame = detail::require<std::string>(jc, "frame", where);
    if (frame == "rotating")
      rec.frame = Frame::rotating;
    else if (frame == "lab")
      rec.frame = Frame::lab;
    else
      throw DataError(where + ": unknown frame '" + frame + "'");
    rec.rel_tol = detail::require<double>(jc, "rel_tol", where);
    rec.abs_tol = detail::require<double>(jc, "abs_tol", where);
    rec.complex_params = detail::require<bool>(jc, "complex_params", where);
    rec.modulation_freq = detail::require<double>(jc, "modulation_freq", where);
    const auto& ja = jc.at("active_terms");
    rec.active.m = detail::require<bool>(ja, "m", where);
    rec.active.d1 = detail::require<bool>(ja, "d1", where);
    rec.active.d2 = detail::require<bool>(ja, "d2", where);
    rec.dim = detail::require<int>(j, "dim", where);
    const auto pv =
        detail::require<std::vector<double>>(j, "param_vector", where);
    rec.result.params = Eigen::Map<const Eigen::VectorXd>(pv.data(), pv.size());
    const auto& jm = j.at("matrices");
    rec.result.corrections.m = detail::matrix_from_json(jm.at("m"), where);
    rec.result.corrections.d1 = detail::matrix_from_json(jm.at("d1"), where);
    rec.result.corrections.d2 = detail::matrix_from_json(jm.at("d2"), where);
    rec.result.corrections.active_m = rec.active.m;
    rec.result.corrections.active_d1 = rec.active.d1;
    rec.result.corrections.active_d2 = rec.active.d2;
    rec.result.corrections.modulation_freq = rec.modulation_freq;
    rec.result.loss_history =
        detail::require<std::vector<double>>(j, "loss_history", where);
    rec.result.final_loss = detail::require<double>(j, "final_loss", where);
    rec.result.iterations_used =
        detail::require<int>(j, "iterations_used", where);
    if (j.contains("timing") && j.at("timing").contains("wall_time_s"))
      rec.result.wall_time_s = j.at("timing").at("wall_time_s").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": " + e.what());
  }
  return rec;
}

}  // namespace crfit
