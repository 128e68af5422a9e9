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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits with the number of failed criteria. argv[1] is the CLI binary used
// by the workflow-determinism check.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "crfit/crfit.hpp"

namespace fs = std::filesystem;
using namespace crfit;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Tuning of the synthetic-recovery fits (criteria 6 and 7). The planted
// element sizes keep the accumulated rotation angles below a quarter turn
// even at the longest validation duration, so the landscape seen from zero
// corrections has a single relevant basin.
constexpr double kPlant0001 = 0.0025;  // |00><01| element, rad/ns
constexpr double kPlant1011 = 0.004;   // |10><11| element, rad/ns
constexpr double kRecoveryLr = 3e-6;
constexpr double kRecoveryMomentum = 0.9;
constexpr int kRecoveryIters = 8000;
constexpr double kRecoveryThreshold = 0.004; // summed loss over 20 points
constexpr double kPairBudgetSeconds = 1200.0;

struct Outcome {
  bool ok = false;
  std::string detail;
};

DeviceParams scaled_device() {
  DeviceParams dp;
  dp.omega1 = kTwoPi * 0.010;
  dp.omega2 = kTwoPi * 0.008;
  dp.delta1 = -kTwoPi * 0.003;
  dp.delta2 = -kTwoPi * 0.003;
  dp.j12 = kTwoPi * 0.0003;
  dp.drive_strength1 = kTwoPi * 0.002;
  dp.drive_strength2 = kTwoPi * 0.002;
  dp.levels = 3;
  dp.dt_ns = 0.22222222;
  return dp;
}

DeviceParams random_device(std::mt19937& eng) {
  auto U = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng);
  };
  DeviceParams dp;
  dp.omega1 = kTwoPi * U(0.006, 0.020);
  dp.omega2 = kTwoPi * U(0.006, 0.020);
  dp.delta1 = -kTwoPi * U(0.001, 0.005);
  dp.delta2 = -kTwoPi * U(0.001, 0.005);
  dp.j12 = kTwoPi * U(0.0001, 0.0006);
  dp.drive_strength1 = kTwoPi * U(0.001, 0.004);
  dp.drive_strength2 = kTwoPi * U(0.001, 0.004);
  dp.levels = 3;
  dp.dt_ns = 0.22222222;
  return dp;
}

CorrectionSet planted_d2(const DeviceParams& dp) {
  CorrectionSet corr = CorrectionSet::zero(dp.dim(), dp.omega2);
  corr.active_d2 = true;
  corr.d2(0, 1) = corr.d2(1, 0) = kPlant0001;
  corr.d2(3, 4) = corr.d2(4, 3) = kPlant1011;
  return corr;
}

std::string fmt(const char* f, ...) {
  char buf[768];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return std::string(buf);
}

// --------------------------------------------------------------------------
// 1. Norm conservation on random devices, schedules and preparations.

Outcome c1_norm_conservation() {
  std::mt19937 eng(20260822);
  auto U = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng);
  };
  for (int k = 0; k < 50; ++k) {
    const DeviceParams dp = random_device(eng);
    PulseSchedule s;
    s.dt_ns = dp.dt_ns;
    s.drive_freq_q1 = dp.omega1;
    s.drive_freq_q2 = dp.omega1;
    const int dur = std::uniform_int_distribution<int>(64, 384)(eng);
    s.pulse_q1 = {U(0.0, 0.6), dur, 16, 8.0};
    s.pulse_q2 = {U(0.0, 0.6), dur, 16, 8.0};
    const auto st =
        InitialState(std::uniform_int_distribution<int>(0, 3)(eng));
    const Frame frame = k < 40 ? Frame::rotating : Frame::lab;
    const SimContext ctx = prepare_context(dp, frame);
    const StateVector psi =
        evolve(ctx, nullptr, s, make_initial_state(st, dp.levels));
    const double err = std::abs(psi.norm() - 1.0);
    if (!(err < 1e-8))
      return {false, fmt("draw %d: |norm-1| = %.3g", k, err)};
  }
  return {true, "50 random drives, max |norm-1| < 1e-8"};
}

// --------------------------------------------------------------------------
// 2. Step integrator against the eigendecomposition propagator on
//    piecewise-constant drives (flat envelopes, zero carriers).

Outcome c2_exact_propagator() {
  std::mt19937 eng(777);
  auto U = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng);
  };
  double worst = 1.0;
  for (int k = 0; k < 20; ++k) {
    const DeviceParams dp = random_device(eng);
    const Frame frame = (k % 4 == 0) ? Frame::rotating : Frame::lab;
    const SimContext ctx = prepare_context(dp, frame);

    CorrectionSet corr = CorrectionSet::zero(dp.dim(), 0.0);
    const bool with_corr = (k % 2) == 1;
    if (with_corr) {
      corr.active_m = corr.active_d2 = true;
      auto herm = [&](ComplexMatrix& m, int r, int c) {
        const std::complex<double> v(U(-0.01, 0.01), U(-0.01, 0.01));
        m(r, c) = v;
        m(c, r) = std::conj(v);
      };
      herm(corr.m, 0, 1);
      herm(corr.m, 3, 4);
      herm(corr.m, 2, 6);
      herm(corr.d2, 0, 1);
      herm(corr.d2, 1, 4);
    }

    const auto st =
        InitialState(std::uniform_int_distribution<int>(0, 3)(eng));
    StateVector psi = make_initial_state(st, dp.levels);
    std::vector<std::pair<ComplexMatrix, double>> segments;
    const int nseg = 1 + (k % 3);
    for (int seg = 0; seg < nseg; ++seg) {
      PulseSchedule s;
      s.dt_ns = dp.dt_ns;
      s.drive_freq_q1 = 0.0; // zero carrier: the Hamiltonian is constant
      s.drive_freq_q2 = 0.0;
      const int dur = std::uniform_int_distribution<int>(32, 128)(eng);
      s.pulse_q1 = {U(0.0, 0.5), dur, 0, 8.0};
      s.pulse_q2 = {U(0.0, 0.5), dur, 0, 8.0};
      psi = evolve(ctx, with_corr ? &corr : nullptr, s, psi);
      segments.emplace_back(
          total_hamiltonian(dp, corr, s, 0.5 * s.duration_ns()),
          s.duration_ns());
    }
    const StateVector ref = propagate_exact(
        segments, make_initial_state(st, dp.levels));
    const double f = fidelity(psi, ref);
    worst = std::min(worst, f);
    if (!(f >= 1.0 - 1e-8))
      return {false, fmt("schedule %d: fidelity %.12f", k, f)};
  }
  return {true, fmt("20 schedules, worst fidelity %.12f", worst)};
}

// --------------------------------------------------------------------------
// 3. Undriven exchange oscillation against the two-state closed form.

Outcome c3_exchange_oscillation() {
  DeviceParams dp;
  dp.omega1 = kTwoPi * 0.010;
  dp.omega2 = kTwoPi * 0.008;
  dp.delta1 = -kTwoPi * 0.003;
  dp.delta2 = -kTwoPi * 0.003;
  dp.j12 = kTwoPi * 0.0003;
  dp.drive_strength1 = kTwoPi * 0.002;
  dp.drive_strength2 = kTwoPi * 0.002;
  dp.levels = 2;
  dp.dt_ns = 0.22222222;

  const double delta = dp.omega1 - dp.omega2;
  const double rabi = std::sqrt(0.25 * delta * delta + dp.j12 * dp.j12);
  const SimContext ctx = prepare_context(dp, Frame::rotating);

  double worst = 0.0;
  for (int k = 1; k <= 25; ++k) {
    const int dur = 90 * k; // spans a full oscillation period (~2155 ticks)
    PulseSchedule s;
    s.dt_ns = dp.dt_ns;
    s.drive_freq_q1 = dp.omega1;
    s.drive_freq_q2 = dp.omega1;
    s.pulse_q1 = {0.0, dur, 16, 8.0};
    s.pulse_q2 = {0.0, dur, 16, 8.0};
    const StateVector psi =
        evolve(ctx, nullptr, s, make_initial_state(InitialState::s10, 2));
    const ProbabilityVector p = computational_probs(psi, 2);
    const double T = s.duration_ns();
    const double sn = std::sin(rabi * T);
    const double transfer =
        (dp.j12 * dp.j12) / (rabi * rabi) * sn * sn;
    worst = std::max({worst, std::abs(p.p10 - (1.0 - transfer)),
                      std::abs(p.p01 - transfer)});
  }
  if (!(worst < 1e-6))
    return {false, fmt("max deviation from closed form %.3g", worst)};
  return {true, fmt("25 durations, max deviation %.3g", worst)};
}

// --------------------------------------------------------------------------
// 4. Adjoint gradients against central finite differences.

Outcome c4_adjoint_vs_fd() {
  const DeviceParams dp = scaled_device();
  FitModel model;
  model.sim = prepare_context(dp, Frame::rotating);
  model.drive_freq_q1 = dp.omega1;
  model.drive_freq_q2 = dp.omega1;
  model.risefall_dt = 16;
  model.sigma_dt = 8.0;
  model.active.m = model.active.d1 = model.active.d2 = true;
  model.modulation_freq = dp.omega2;
  model.rel_tol = 1e-11;
  model.abs_tol = 1e-13;

  std::mt19937 eng(4242);
  auto U = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng);
  };
  const InitialState states[3] = {InitialState::s00, InitialState::s10,
                                  InitialState::s01};
  double worst_rel = 0.0;
  for (int point = 0; point < 3; ++point) {
    DataPoint pt;
    pt.a1 = U(0.01, 0.04);
    pt.a2 = U(0.2, 0.6);
    pt.duration_dt = 64 + 32 * point;
    pt.initial_state = states[point];
    // Targets far from anything the model produces: every L1 term stays
    // away from its kink, so no coordinates need excluding.
    pt.probs = {0.7, 0.1, 0.15, 0.05};

    ParamVector p = ParamVector::Zero(model.n_params());
    for (int j = 0; j < p.size(); ++j) p(j) = U(-0.004, 0.004);
    zero_diagonal_params(p, model.dim(), model.complex_params);

    const PointGradient pg = loss_gradient(p, pt, model);
    const double gmax = pg.grad.cwiseAbs().maxCoeff();

    std::set<int> coords;
    while (int(coords.size()) < 20) {
      const int b = std::uniform_int_distribution<int>(0, 2)(eng);
      const int r = std::uniform_int_distribution<int>(0, 8)(eng);
      const int c = std::uniform_int_distribution<int>(0, 8)(eng);
      if (r == c) continue;
      coords.insert(block_re_offset(b, 9, false) + r * 9 + c);
    }
    const std::vector<int> coord_list(coords.begin(), coords.end());
    const Eigen::VectorXd fd =
        finite_difference_gradient(p, pt, model, 1e-6, coord_list);
    for (int kcoord : coord_list) {
      const double denom =
          std::max({std::abs(pg.grad(kcoord)), std::abs(fd(kcoord)),
                    1e-3 * gmax});
      const double rel = std::abs(pg.grad(kcoord) - fd(kcoord)) / denom;
      worst_rel = std::max(worst_rel, rel);
      if (!(rel < 1e-4))
        return {false, fmt("point %d coordinate %d: adjoint %.6e vs fd %.6e "
                           "(rel %.3g)",
                           point, kcoord, pg.grad(kcoord), fd(kcoord), rel)};
    }
  }
  return {true, fmt("3 points x 20 coordinates, worst relative error %.3g",
                    worst_rel)};
}

// --------------------------------------------------------------------------
// 5. Diagonal invariance and exact Hermiticity after a 500-iteration fit.

Outcome c5_diagonal_invariance() {
  const DeviceParams dp = scaled_device();
  const CorrectionSet planted = planted_d2(dp);

  FitModel model;
  model.sim = prepare_context(dp, Frame::rotating);
  model.drive_freq_q1 = dp.omega1;
  model.drive_freq_q2 = dp.omega1;
  model.risefall_dt = 16;
  model.sigma_dt = 8.0;
  model.active.m = model.active.d1 = model.active.d2 = true;
  model.modulation_freq = dp.omega2;

  std::vector<DataPoint> train;
  const int durations[4] = {48, 64, 80, 96};
  const InitialState states[4] = {InitialState::s00, InitialState::s10,
                                  InitialState::s00, InitialState::s10};
  for (int k = 0; k < 4; ++k) {
    DataPoint pt;
    pt.a1 = 0.03;
    pt.a2 = 0.40;
    pt.duration_dt = durations[k];
    pt.initial_state = states[k];
    const PulseSchedule sched = model.schedule_for(pt);
    const StateVector psi =
        evolve(model.sim, &planted, sched,
               make_initial_state(pt.initial_state, dp.levels), model.rel_tol,
               model.abs_tol);
    pt.probs = computational_probs(psi, dp.levels);
    train.push_back(pt);
  }

  FitConfig cfg;
  cfg.learning_rate = 2e-5;
  cfg.momentum = 0.9;
  cfg.max_iterations = 500;
  const FitResult res = fit(train, cfg, model);

  const double diag_max =
      std::max({res.corrections.m.diagonal().cwiseAbs().maxCoeff(),
                res.corrections.d1.diagonal().cwiseAbs().maxCoeff(),
                res.corrections.d2.diagonal().cwiseAbs().maxCoeff()});
  const double herm = std::max({hermiticity_residual(res.corrections.m),
                                hermiticity_residual(res.corrections.d1),
                                hermiticity_residual(res.corrections.d2)});
  if (diag_max != 0.0)
    return {false, fmt("diagonal magnitude %.3g after 500 iterations",
                       diag_max)};
  if (!(herm < 1e-14))
    return {false, fmt("Hermiticity residual %.3g", herm)};
  return {true,
          fmt("500 iterations: diagonals exactly 0, Hermiticity residual "
              "%.3g, loss %.4g -> %.4g",
              herm, res.loss_history.front(), res.final_loss)};
}

// --------------------------------------------------------------------------
// 6 + 7. Synthetic recovery of a planted sparse D2 on the standard grid,
// plus generalization to the held-out preparations.

struct PairReport {
  double a1 = 0.0, a2 = 0.0;
  double e01 = 0.0, e34 = 0.0;      // recovered dominant elements
  double crosstalk = 0.0;           // largest non-planted off-diagonal
  double val_unc = 0.0, val_cor = 0.0;
  double heldout = 0.0;             // corrected loss on 01/11 preparations
  double seconds = 0.0;
  int iterations = 0;
  double loss0 = 0.0, loss1 = 0.0;
};

struct Recovery {
  Outcome six;
  Outcome seven;
  std::vector<PairReport> reports;
};

Recovery run_recovery() {
  Recovery out;
  const DeviceParams dp = scaled_device();
  const CorrectionSet planted = planted_d2(dp);

  SynthOptions so;
  so.rel_tol = 1e-8;
  so.abs_tol = 1e-10;
  so.risefall_dt = 32;
  so.sigma_dt = 8.0;
  const Dataset ds = generate_synthetic(dp, planted, standard_grid(),
                                        dp.omega1, dp.omega1, so);

  FitModelOptions mo;
  mo.active.d2 = true;
  const FitModel model = make_fit_model(ds, mo);

  const std::pair<double, double> pairs[3] = {
      {0.0, 0.6}, {0.02, 0.3}, {0.04, 0.6}};

  std::string detail6, detail7;
  bool ok6 = true, ok7 = true;
  for (const auto& [a1, a2] : pairs) {
    const auto t0 = std::chrono::steady_clock::now();
    const TrainValSplit sp = split_pair(ds, a1, a2);

    FitConfig cfg;
    cfg.learning_rate = kRecoveryLr;
    cfg.momentum = kRecoveryMomentum;
    cfg.max_iterations = kRecoveryIters;
    cfg.loss_threshold = kRecoveryThreshold;
    const FitResult res = fit(sp.train, cfg, model);

    PairReport rep;
    rep.a1 = a1;
    rep.a2 = a2;
    rep.iterations = res.iterations_used;
    rep.loss0 = res.loss_history.front();
    rep.loss1 = res.final_loss;

    const ComplexMatrix& d2 = res.corrections.d2;
    rep.e01 = d2(0, 1).real();
    rep.e34 = d2(3, 4).real();
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 9; ++c) {
        if (r == c) continue;
        const bool plant_slot = (r == 0 && c == 1) || (r == 1 && c == 0) ||
                                (r == 3 && c == 4) || (r == 4 && c == 3);
        if (!plant_slot)
          rep.crosstalk = std::max(rep.crosstalk, std::abs(d2(r, c)));
      }

    const PairEvaluation ev =
        evaluate_pair(ds, model, res.params, a1, a2);
    rep.val_unc = ev.val_loss_uncorrected;
    rep.val_cor = ev.val_loss_corrected;

    std::vector<DataPoint> heldout;
    for (const DataPoint& p : sp.validation)
      if (p.initial_state == InitialState::s01 ||
          p.initial_state == InitialState::s11)
        heldout.push_back(p);
    rep.heldout = average_loss(res.params, heldout, model);

    rep.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    out.reports.push_back(rep);

    const double r01 =
        std::abs(d2(0, 1) - std::complex<double>(kPlant0001, 0.0)) /
        kPlant0001;
    const double r34 =
        std::abs(d2(3, 4) - std::complex<double>(kPlant1011, 0.0)) /
        kPlant1011;
    const std::string tag = fmt("pair (%.2f, %.1f)", a1, a2);
    if (!(r01 < 0.05 && r34 < 0.05)) {
      ok6 = false;
      detail6 += fmt("%s: recovered (%.6f, %.6f) vs planted (%g, %g), "
                     "rel (%.2g, %.2g); loss %.4g->%.4g in %d iters; ",
                     tag.c_str(), rep.e01, rep.e34, kPlant0001, kPlant1011,
                     r01, r34, rep.loss0, rep.loss1, rep.iterations);
    }
    if (!(rep.crosstalk < 0.1 * kPlant0001)) {
      ok6 = false;
      detail6 += fmt("%s: crosstalk %.4g >= %.3g; ", tag.c_str(),
                     rep.crosstalk, 0.1 * kPlant0001);
    }
    if (!(rep.val_cor < 0.05) || !(rep.val_unc > rep.val_cor)) {
      ok6 = false;
      detail6 += fmt("%s: validation loss %.4g -> %.4g; ", tag.c_str(),
                     rep.val_unc, rep.val_cor);
    }
    if (!(rep.seconds <= kPairBudgetSeconds)) {
      ok6 = false;
      detail6 += fmt("%s: %.0f s over budget; ", tag.c_str(), rep.seconds);
    }
    if (!(rep.heldout < 0.05)) {
      ok7 = false;
      detail7 += fmt("%s: held-out loss %.4g; ", tag.c_str(), rep.heldout);
    }
  }

  if (ok6) {
    detail6 = "3 pairs:";
    for (const PairReport& r : out.reports)
      detail6 += fmt(" (%.2f,%.1f) rel err (%.2g, %.2g), crosstalk %.2g, "
                     "val %.3g->%.3g, %d iters, %.0fs;",
                     r.a1, r.a2, std::abs(r.e01 - kPlant0001) / kPlant0001,
                     std::abs(r.e34 - kPlant1011) / kPlant1011, r.crosstalk,
                     r.val_unc, r.val_cor, r.iterations, r.seconds);
  }
  if (ok7) {
    detail7 = "held-out 01/11 losses:";
    for (const PairReport& r : out.reports)
      detail7 += fmt(" %.4g", r.heldout);
  }
  out.six = {ok6, detail6};
  out.seven = {ok7, detail7};
  return out;
}

// --------------------------------------------------------------------------
// 8. Effective cross-resonance coefficients against an independent
//    evaluation.

Outcome c8_cr_coefficients() {
  std::mt19937 eng(88);
  auto U = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng);
  };
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double delta = (k == 0) ? 0.0 : U(-0.5, 0.5);
    const double omega = (k == 1) ? 0.0 : U(-0.8, 0.8);
    const double j12 = U(-0.05, 0.05);
    const CrCoefficients got = effective_cr_coefficients(delta, omega, j12);
    // Independent arrangement of the same closed form.
    const double root = std::hypot(delta, omega);
    const double zi = delta - root;
    const double zx = (root == 0.0) ? 0.0 : -j12 * omega / root;
    const double err =
        std::max(std::abs(got.zi_rate - zi) / std::max(1.0, std::abs(zi)),
                 std::abs(got.zx_rate - zx) / std::max(1.0, std::abs(zx)));
    worst = std::max(worst, err);
    if (!(err < 1e-12))
      return {false, fmt("triple %d (%.3g, %.3g, %.3g): error %.3g", k, delta,
                         omega, j12, err)};
  }
  return {true, fmt("100 triples incl. edges, worst error %.3g", worst)};
}

// --------------------------------------------------------------------------
// 9. Workflow determinism through the CLI.

int run_cmd(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -2;
}

std::string strip_timing(const std::string& text) {
  std::istringstream is(text);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line))
    if (line.find("wall_time_s") == std::string::npos) os << line << "\n";
  return os.str();
}

Outcome c9_cli_determinism(const std::string& cli) {
  if (cli.empty())
    return {false, "no CLI binary path passed as argv[1]"};

  const fs::path tmp = "acceptance_tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  const std::string dev = (tmp / "device.json").string();
  const std::string dsp = (tmp / "dataset.json").string();
  const std::string fit1 = (tmp / "fit1.json").string();
  const std::string fit2 = (tmp / "fit2.json").string();
  const std::string log = (tmp / "cli_log.txt").string();

  DeviceFile df;
  df.device = scaled_device();
  df.drive_freq_q1 = df.device.omega1;
  df.drive_freq_q2 = df.device.omega1;
  save_device_file(df, dev);

  const std::string gen =
      cli + " gen-data --device " + dev + " --out " + dsp +
      " --pair 0.03,0.4 --plant \"d2:1,2=0.0025;d2:4,5=0.004\""
      " --shots 2000 --seed 11 >> " + log + " 2>&1";
  if (run_cmd(gen) != 0) return {false, "gen-data failed, see " + log};

  const std::string fit_args =
      " fit --dataset " + dsp +
      " --pair 0.03,0.4 --terms d2 --lr 5e-5 --momentum 0.9 --iters 25"
      " --out ";
  if (run_cmd(cli + fit_args + fit1 + " >> " + log + " 2>&1") != 0)
    return {false, "first fit run failed, see " + log};
  if (run_cmd(cli + fit_args + fit2 + " >> " + log + " 2>&1") != 0)
    return {false, "second fit run failed, see " + log};

  const std::string t1 = detail::read_file(fit1);
  const std::string t2 = detail::read_file(fit2);
  nlohmann::json j1 = nlohmann::json::parse(t1);
  nlohmann::json j2 = nlohmann::json::parse(t2);

  if (j1.at("loss_history") != j2.at("loss_history"))
    return {false, "loss histories differ between identical runs"};
  if (j1.at("param_vector") != j2.at("param_vector"))
    return {false, "parameter vectors differ between identical runs"};
  if (strip_timing(t1) != strip_timing(t2))
    return {false, "fit records differ beyond the timing block"};

  const std::size_t iters = j1.at("loss_history").size();
  return {true, fmt("two CLI fits bit-identical (%zu-entry loss history)",
                    iters)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  int failures = 0;

  const auto run = [&](int idx, const char* label, auto&& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d (%s): %s%s%s\n", idx, label,
                o.ok ? "PASS" : "FAIL", o.detail.empty() ? "" : " - ",
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.ok) ++failures;
  };

  std::optional<Recovery> recovery;
  const auto ensure_recovery = [&]() -> Recovery& {
    if (!recovery) {
      try {
        recovery = run_recovery();
      } catch (const std::exception& e) {
        Recovery r;
        r.six = {false, std::string("exception: ") + e.what()};
        r.seven = {false, std::string("exception: ") + e.what()};
        recovery = std::move(r);
      }
    }
    return *recovery;
  };

  run(1, "norm conservation on random drives", c1_norm_conservation);
  run(2, "integrator matches the exact propagator", c2_exact_propagator);
  run(3, "undriven exchange matches the closed form", c3_exchange_oscillation);
  run(4, "adjoint gradient matches finite differences", c4_adjoint_vs_fd);
  run(5, "fits keep diagonals zero and matrices Hermitian",
      c5_diagonal_invariance);
  run(6, "planted corrections are recovered from synthetic data",
      [&] { return ensure_recovery().six; });
  run(7, "fits generalize to held-out preparations",
      [&] { return ensure_recovery().seven; });
  run(8, "effective cross-resonance coefficients", c8_cr_coefficients);
  run(9, "CLI fitting workflow is deterministic",
      [&] { return c9_cli_determinism(cli); });

  std::printf("%d of 9 criteria passed\n", 9 - failures);
  return failures;
}
