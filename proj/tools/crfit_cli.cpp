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

// Command-line front end: simulate two-transmon drive schedules, generate
// synthetic datasets, fit correction matrices, evaluate them against data
// and export CSV summaries.
//
// Exit codes: 0 success, 1 unexpected failure, 2 data or usage errors,
// 3 dimension mismatches, 4 numerical failures.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "crfit/crfit.hpp"

namespace {

using namespace crfit;

Frame parse_frame(const std::string& s) {
  if (s == "rotating") return Frame::rotating;
  if (s == "lab") return Frame::lab;
  throw DataError("unknown frame '" + s + "' (expected rotating or lab)");
}

std::string frame_name(Frame f) {
  return f == Frame::rotating ? "rotating" : "lab";
}

ActiveTerms parse_terms(const std::string& text) {
  ActiveTerms t;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, ',')) {
    if (token == "all") {
      t.m = t.d1 = t.d2 = true;
    } else if (token == "m") {
      t.m = true;
    } else if (token == "d1") {
      t.d1 = true;
    } else if (token == "d2") {
      t.d2 = true;
    } else {
      throw DataError("unknown term '" + token +
                      "' (expected m, d1, d2 or all)");
    }
  }
  if (!t.m && !t.d1 && !t.d2)
    throw DataError("no correction terms selected");
  return t;
}

std::pair<double, double> parse_pair(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos)
    throw DataError("bad amplitude pair '" + s + "' (expected a1,a2)");
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw DataError("bad amplitude pair '" + s + "' (expected a1,a2)");
  }
}

std::complex<double> parse_complex_value(const std::string& s) {
  try {
    std::size_t idx = 0;
    const double re = std::stod(s, &idx);
    if (idx >= s.size()) return {re, 0.0};
    const std::string rest = s.substr(idx);
    std::size_t idx2 = 0;
    const double im = std::stod(rest, &idx2);
    if (idx2 + 1 == rest.size() && (rest[idx2] == 'i' || rest[idx2] == 'j'))
      return {re, im};
  } catch (const std::exception&) {
  }
  throw DataError("bad matrix value '" + s +
                  "' (expected e.g. 0.012 or 0.012+0.003i)");
}

/// Parse "--plant" specifications like "d2:1,2=0.012;d2:4,5=0.016". Indices
/// are 1-based; entries are written Hermitianly into the named matrix.
CorrectionSet parse_plant(std::string text, int dim, double modulation_freq) {
  text.erase(std::remove_if(text.begin(), text.end(),
                            [](unsigned char c) { return std::isspace(c); }),
             text.end());
  CorrectionSet corr = CorrectionSet::zero(dim, modulation_freq);
  std::stringstream ss(text);
  std::string entry;
  while (std::getline(ss, entry, ';')) {
    if (entry.empty()) continue;
    const auto colon = entry.find(':');
    const auto eq = entry.find('=');
    if (colon == std::string::npos || eq == std::string::npos || eq < colon)
      throw DataError("bad plant entry '" + entry +
                      "' (expected matrix:row,col=value)");
    const std::string mat = entry.substr(0, colon);
    const std::string rc = entry.substr(colon + 1, eq - colon - 1);
    const std::string val = entry.substr(eq + 1);
    const auto comma = rc.find(',');
    if (comma == std::string::npos)
      throw DataError("bad plant entry '" + entry +
                      "' (expected matrix:row,col=value)");
    int r = 0, c = 0;
    try {
      r = std::stoi(rc.substr(0, comma));
      c = std::stoi(rc.substr(comma + 1));
    } catch (const std::exception&) {
      throw DataError("bad plant indices in '" + entry + "'");
    }
    if (r < 1 || c < 1 || r > dim || c > dim)
      throw DataError("plant indices out of range in '" + entry +
                      "' (1-based, dimension " + std::to_string(dim) + ")");
    if (r == c)
      throw DataError("plant entry '" + entry +
                      "': diagonal entries must stay zero");
    const std::complex<double> v = parse_complex_value(val);
    ComplexMatrix* target = nullptr;
    if (mat == "m") {
      target = &corr.m;
      corr.active_m = true;
    } else if (mat == "d1") {
      target = &corr.d1;
      corr.active_d1 = true;
    } else if (mat == "d2") {
      target = &corr.d2;
      corr.active_d2 = true;
    } else {
      throw DataError("unknown matrix '" + mat + "' in plant entry '" + entry +
                      "' (expected m, d1 or d2)");
    }
    (*target)(r - 1, c - 1) = v;
    (*target)(c - 1, r - 1) = std::conj(v);
  }
  corr.validate();
  return corr;
}

void write_json(const nlohmann::json& j, const std::string& out_path) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    detail::atomic_write(out_path, text);
}

nlohmann::json probs_to_json(const ProbabilityVector& p) {
  return {{"p00", p.p00}, {"p01", p.p01}, {"p10", p.p10}, {"p11", p.p11}};
}

FitModelOptions options_from_record(const FitRecord& rec) {
  FitModelOptions o;
  o.frame = rec.frame;
  o.active = rec.active;
  o.modulation_freq = rec.modulation_freq;
  o.complex_params = rec.complex_params;
  o.rel_tol = rec.rel_tol;
  o.abs_tol = rec.abs_tol;
  return o;
}

// --------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string device_path;
  std::string fit_path;
  std::string out_path;
  std::string state = "00";
  std::string frame = "rotating";
  double a1 = 0.0;
  double a2 = 0.0;
  int duration_dt = 0;
  int risefall_dt = 32;
  double sigma_dt = 8.0;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double drive_q1 = std::numeric_limits<double>::quiet_NaN();
  double drive_q2 = std::numeric_limits<double>::quiet_NaN();
};

int run_simulate(const SimulateArgs& a) {
  const DeviceFile df = load_device_file(a.device_path);
  const DeviceParams& dp = df.device;

  PulseSchedule sched;
  sched.dt_ns = dp.dt_ns;
  sched.drive_freq_q1 =
      std::isnan(a.drive_q1) ? df.drive_freq_q1.value_or(dp.omega1) : a.drive_q1;
  sched.drive_freq_q2 = std::isnan(a.drive_q2)
                            ? df.drive_freq_q2.value_or(sched.drive_freq_q1)
                            : a.drive_q2;
  sched.pulse_q1 = {a.a1, a.duration_dt, a.risefall_dt, a.sigma_dt};
  sched.pulse_q2 = {a.a2, a.duration_dt, a.risefall_dt, a.sigma_dt};
  sched.validate();

  const SimContext ctx = prepare_context(dp, parse_frame(a.frame));
  CorrectionSet corr;
  bool have_corr = false;
  if (!a.fit_path.empty()) {
    corr = load_fit_record(a.fit_path).result.corrections;
    have_corr = true;
  }
  const StateVector psi0 =
      make_initial_state(initial_state_from_string(a.state), dp.levels);
  const StateVector psi = evolve(ctx, have_corr ? &corr : nullptr, sched, psi0,
                                 a.rel_tol, a.abs_tol);
  const ProbabilityVector p = computational_probs(psi, dp.levels);

  nlohmann::json j;
  j["schema"] = "crfit.sim.v1";
  j["a1"] = a.a1;
  j["a2"] = a.a2;
  j["duration_dt"] = a.duration_dt;
  j["duration_ns"] = a.duration_dt * dp.dt_ns;
  j["initial_state"] = a.state;
  j["frame"] = a.frame;
  j["probs"] = probs_to_json(p);
  j["leakage"] = std::max(0.0, 1.0 - p.sum());
  j["state_norm"] = psi.norm();
  write_json(j, a.out_path);
  return 0;
}

// --------------------------------------------------------------------------
// gen-data

struct GenDataArgs {
  std::string device_path;
  std::string out_path;
  std::string plant;
  std::string note;
  std::string frame = "rotating";
  std::vector<std::string> pairs;
  bool standard_grid_flag = false;
  bool normalized = false;
  long long shots = 0; // 0: exact probabilities
  std::uint64_t seed = 0;
  int workers = 1;
  int risefall_dt = 32;
  double sigma_dt = 8.0;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double modulation = std::numeric_limits<double>::quiet_NaN();
  double drive_q1 = std::numeric_limits<double>::quiet_NaN();
  double drive_q2 = std::numeric_limits<double>::quiet_NaN();
};

int run_gen_data(const GenDataArgs& a) {
  const DeviceFile df = load_device_file(a.device_path);
  const DeviceParams& dp = df.device;

  std::vector<GridBlock> grid;
  if (a.standard_grid_flag) {
    grid = standard_grid();
  } else if (!a.pairs.empty()) {
    for (const std::string& ps : a.pairs) {
      const auto [a1, a2] = parse_pair(ps);
      GridBlock b;
      b.a1 = a1;
      b.a2 = a2;
      b.durations_dt = duration_ladder(20, 320, 128, 64);
      b.states_all = {InitialState::s00, InitialState::s10};
      b.states_longest = {InitialState::s01, InitialState::s11};
      b.longest_count = 5;
      grid.push_back(std::move(b));
    }
  } else {
    throw DataError("gen-data: pass --standard-grid or at least one --pair");
  }

  const double modulation =
      std::isnan(a.modulation) ? dp.omega2 : a.modulation;
  const CorrectionSet planted = parse_plant(a.plant, dp.dim(), modulation);

  SynthOptions opt;
  if (a.shots > 0) opt.shots = a.shots;
  opt.seed = a.seed;
  opt.normalized = a.normalized;
  opt.frame = parse_frame(a.frame);
  opt.workers = a.workers;
  opt.rel_tol = a.rel_tol;
  opt.abs_tol = a.abs_tol;
  opt.risefall_dt = a.risefall_dt;
  opt.sigma_dt = a.sigma_dt;

  const double q1c =
      std::isnan(a.drive_q1) ? df.drive_freq_q1.value_or(dp.omega1) : a.drive_q1;
  const double q2c = std::isnan(a.drive_q2)
                         ? df.drive_freq_q2.value_or(q1c)
                         : a.drive_q2;

  Dataset ds = generate_synthetic(dp, planted, grid, q1c, q2c, opt);
  ds.provenance.note = a.note;
  save_dataset(ds, a.out_path);
  std::printf("wrote %zu points to %s (planted digest %s)\n",
              ds.points.size(), a.out_path.c_str(),
              ds.provenance.planted_digest.c_str());
  return 0;
}

// --------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string dataset_path;
  std::string out_path;
  std::string pair;
  std::string terms = "d2";
  std::string frame = "rotating";
  double lr = 1e-3;
  double momentum = 0.9;
  int iters = 5000;
  double tol = -1.0;
  int workers = 1;
  bool complex_params = false;
  double modulation = std::numeric_limits<double>::quiet_NaN();
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
};

int run_fit(const FitArgs& a) {
  const Dataset ds = load_dataset(a.dataset_path);
  const auto [a1, a2] = parse_pair(a.pair);
  const TrainValSplit sp = split_pair(ds, a1, a2);

  FitModelOptions mo;
  mo.frame = parse_frame(a.frame);
  mo.active = parse_terms(a.terms);
  if (!std::isnan(a.modulation)) mo.modulation_freq = a.modulation;
  mo.complex_params = a.complex_params;
  mo.rel_tol = a.rel_tol;
  mo.abs_tol = a.abs_tol;
  const FitModel model = make_fit_model(ds, mo);

  FitConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.momentum = a.momentum;
  cfg.max_iterations = a.iters;
  cfg.loss_threshold = a.tol;
  cfg.workers = a.workers;

  const FitResult res = fit(sp.train, cfg, model);

  FitRecord rec;
  rec.a1 = a1;
  rec.a2 = a2;
  rec.config = cfg;
  rec.frame = mo.frame;
  rec.rel_tol = a.rel_tol;
  rec.abs_tol = a.abs_tol;
  rec.complex_params = a.complex_params;
  rec.modulation_freq = model.modulation_freq;
  rec.active = mo.active;
  rec.dim = model.dim();
  rec.result = res;
  save_fit_record(rec, a.out_path);

  std::printf(
      "pair (%g, %g): %zu training points, %d iterations, loss %.12g -> "
      "%.12g\nwrote %s\n",
      a1, a2, sp.train.size(), res.iterations_used,
      res.loss_history.empty() ? 0.0 : res.loss_history.front(),
      res.final_loss, a.out_path.c_str());
  return 0;
}

// --------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string dataset_path;
  std::string fit_path;
  std::string pair;
  std::string out_path;
  int workers = 1;
};

int run_eval(const EvalArgs& a) {
  const Dataset ds = load_dataset(a.dataset_path);
  const FitRecord rec = load_fit_record(a.fit_path);
  double a1 = rec.a1, a2 = rec.a2;
  if (!a.pair.empty()) std::tie(a1, a2) = parse_pair(a.pair);

  const FitModel model = make_fit_model(ds, options_from_record(rec));
  const PairEvaluation ev =
      evaluate_pair(ds, model, rec.result.params, a1, a2, a.workers);

  nlohmann::json j;
  j["schema"] = "crfit.eval.v1";
  j["pair"] = {{"a1", ev.a1}, {"a2", ev.a2}};
  j["n_points"] = ev.n_points;
  j["n_validation"] = ev.n_validation;
  j["loss_uncorrected"] = ev.loss_uncorrected;
  j["loss_corrected"] = ev.loss_corrected;
  j["val_loss_uncorrected"] = ev.val_loss_uncorrected;
  j["val_loss_corrected"] = ev.val_loss_corrected;
  write_json(j, a.out_path);
  return 0;
}

// --------------------------------------------------------------------------
// export

struct ExportArgs {
  std::string fit_path;
  std::string dataset_path;
  std::string heatmap_path;
  std::string series_path;
  std::string table_path;
  std::string matrix = "d2";
  std::string pair;
  std::string state = "00";
  std::vector<std::string> fits;
  std::vector<std::string> omit;
  int workers = 1;
};

int run_export(const ExportArgs& a) {
  const int modes = int(!a.heatmap_path.empty()) +
                    int(!a.series_path.empty()) + int(!a.table_path.empty());
  if (modes != 1)
    throw DataError(
        "export: pass exactly one of --heatmap, --series or --loss-table");

  if (!a.heatmap_path.empty()) {
    if (a.fit_path.empty()) throw DataError("export --heatmap needs --fit");
    const FitRecord rec = load_fit_record(a.fit_path);
    const ComplexMatrix* m = nullptr;
    if (a.matrix == "m")
      m = &rec.result.corrections.m;
    else if (a.matrix == "d1")
      m = &rec.result.corrections.d1;
    else if (a.matrix == "d2")
      m = &rec.result.corrections.d2;
    else
      throw DataError("unknown matrix '" + a.matrix +
                      "' (expected m, d1 or d2)");
    export_heatmap(*m, a.heatmap_path);
    std::printf("wrote %s\n", a.heatmap_path.c_str());
    return 0;
  }

  if (!a.series_path.empty()) {
    if (a.fit_path.empty() || a.dataset_path.empty())
      throw DataError("export --series needs --fit and --dataset");
    const Dataset ds = load_dataset(a.dataset_path);
    const FitRecord rec = load_fit_record(a.fit_path);
    double a1 = rec.a1, a2 = rec.a2;
    if (!a.pair.empty()) std::tie(a1, a2) = parse_pair(a.pair);
    const FitModel model = make_fit_model(ds, options_from_record(rec));
    const std::vector<SeriesRow> rows =
        survival_series(ds, model, rec.result.params, a1, a2,
                        initial_state_from_string(a.state), a.workers);
    export_survival_series(rows, a.series_path);
    std::printf("wrote %s (%zu rows)\n", a.series_path.c_str(), rows.size());
    return 0;
  }

  if (a.fits.empty() || a.dataset_path.empty())
    throw DataError("export --loss-table needs --dataset and --fits");
  const Dataset ds = load_dataset(a.dataset_path);
  std::vector<LossTableRow> rows;
  for (const std::string& path : a.fits) {
    const FitRecord rec = load_fit_record(path);
    const FitModel model = make_fit_model(ds, options_from_record(rec));
    const PairEvaluation ev =
        evaluate_pair(ds, model, rec.result.params, rec.a1, rec.a2, a.workers);
    LossTableRow row;
    row.a1 = rec.a1;
    row.a2 = rec.a2;
    row.loss_uncorrected = ev.loss_uncorrected;
    row.loss_corrected = ev.loss_corrected;
    const int levels = ds.device.levels;
    row.d2_elem_00_01 = rec.result.corrections.d2(0, 1);
    row.d2_elem_10_11 = rec.result.corrections.d2(levels, levels + 1);
    rows.push_back(row);
  }
  std::vector<std::pair<double, double>> omit;
  for (const std::string& s : a.omit) omit.push_back(parse_pair(s));
  export_loss_table(rows, a.table_path, omit);
  std::printf("wrote %s (%zu rows)\n", a.table_path.c_str(), rows.size());
  return 0;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "crfit: two-transmon drive simulation and data-driven Hamiltonian "
      "correction fitting"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "Simulate one drive schedule and print outcome probabilities");
  c_sim->add_option("--device", sim.device_path, "Device JSON file")
      ->required();
  c_sim->add_option("--a1", sim.a1, "Qubit-1 drive amplitude");
  c_sim->add_option("--a2", sim.a2, "Qubit-2 drive amplitude");
  c_sim->add_option("--duration", sim.duration_dt, "Pulse duration in ticks")
      ->required();
  c_sim->add_option("--state", sim.state, "Initial state (00, 01, 10, 11)");
  c_sim->add_option("--frame", sim.frame, "Integration frame (rotating, lab)");
  c_sim->add_option("--risefall", sim.risefall_dt, "Edge length in ticks");
  c_sim->add_option("--sigma", sim.sigma_dt, "Edge Gaussian sigma in ticks");
  c_sim->add_option("--rtol", sim.rel_tol, "Relative integration tolerance");
  c_sim->add_option("--atol", sim.abs_tol, "Absolute integration tolerance");
  c_sim->add_option("--drive-freq-q1", sim.drive_q1,
                    "Qubit-1 carrier (rad/ns), default from device file");
  c_sim->add_option("--drive-freq-q2", sim.drive_q2,
                    "Qubit-2 carrier (rad/ns), default: qubit-1 carrier");
  c_sim->add_option("--fit", sim.fit_path,
                    "Fit record whose corrections are applied");
  c_sim->add_option("--out", sim.out_path, "Write JSON here (default stdout)");

  GenDataArgs gen;
  CLI::App* c_gen = app.add_subcommand(
      "gen-data", "Generate a synthetic dataset from a device description");
  c_gen->add_option("--device", gen.device_path, "Device JSON file")
      ->required();
  c_gen->add_option("--out", gen.out_path, "Dataset output path")->required();
  c_gen->add_flag("--standard-grid", gen.standard_grid_flag,
                  "Use the full 30-pair amplitude grid");
  c_gen->add_option("--pair", gen.pairs,
                    "Amplitude pair a1,a2 (repeatable; alternative to "
                    "--standard-grid)");
  c_gen->add_option("--plant", gen.plant,
                    "Planted corrections, e.g. 'd2:1,2=0.012;d2:4,5=0.016' "
                    "(1-based indices)");
  c_gen->add_option("--shots", gen.shots,
                    "Sample this many shots per point (default: exact)");
  c_gen->add_option("--seed", gen.seed, "Sampling seed");
  c_gen->add_flag("--normalized", gen.normalized,
                  "Renormalize over the computational subspace");
  c_gen->add_option("--workers", gen.workers, "Worker threads");
  c_gen->add_option("--frame", gen.frame, "Integration frame");
  c_gen->add_option("--risefall", gen.risefall_dt, "Edge length in ticks");
  c_gen->add_option("--sigma", gen.sigma_dt, "Edge Gaussian sigma in ticks");
  c_gen->add_option("--rtol", gen.rel_tol, "Relative integration tolerance");
  c_gen->add_option("--atol", gen.abs_tol, "Absolute integration tolerance");
  c_gen->add_option("--modulation", gen.modulation,
                    "Modulation carrier of planted D terms (rad/ns), default "
                    "qubit-2 frequency");
  c_gen->add_option("--drive-freq-q1", gen.drive_q1, "Qubit-1 carrier (rad/ns)");
  c_gen->add_option("--drive-freq-q2", gen.drive_q2, "Qubit-2 carrier (rad/ns)");
  c_gen->add_option("--note", gen.note, "Free-form provenance note");

  FitArgs fita;
  CLI::App* c_fit = app.add_subcommand(
      "fit", "Fit correction matrices to one amplitude pair of a dataset");
  c_fit->add_option("--dataset", fita.dataset_path, "Dataset JSON file")
      ->required();
  c_fit->add_option("--pair", fita.pair, "Amplitude pair a1,a2")->required();
  c_fit->add_option("--out", fita.out_path, "Fit record output path")
      ->required();
  c_fit->add_option("--terms", fita.terms,
                    "Correction terms to fit: m, d1, d2, all or a comma list");
  c_fit->add_option("--lr", fita.lr, "Learning rate");
  c_fit->add_option("--momentum", fita.momentum, "Momentum coefficient");
  c_fit->add_option("--iters", fita.iters, "Maximum iterations");
  c_fit->add_option("--tol", fita.tol,
                    "Stop when the summed training loss falls to this value");
  c_fit->add_option("--workers", fita.workers, "Worker threads");
  c_fit->add_option("--frame", fita.frame, "Integration frame");
  c_fit->add_flag("--complex-params", fita.complex_params,
                  "Optimize complex (Hermitian) off-diagonal entries");
  c_fit->add_option("--modulation", fita.modulation,
                    "Modulation carrier of the D terms (rad/ns), default "
                    "qubit-2 frequency");
  c_fit->add_option("--rtol", fita.rel_tol, "Relative integration tolerance");
  c_fit->add_option("--atol", fita.abs_tol, "Absolute integration tolerance");

  EvalArgs eva;
  CLI::App* c_eval = app.add_subcommand(
      "eval", "Evaluate a fit record against a dataset pair");
  c_eval->add_option("--dataset", eva.dataset_path, "Dataset JSON file")
      ->required();
  c_eval->add_option("--fit", eva.fit_path, "Fit record")->required();
  c_eval->add_option("--pair", eva.pair,
                     "Amplitude pair a1,a2 (default: the record's pair)");
  c_eval->add_option("--workers", eva.workers, "Worker threads");
  c_eval->add_option("--out", eva.out_path, "Write JSON here (default stdout)");

  ExportArgs exp;
  CLI::App* c_exp = app.add_subcommand(
      "export", "Export CSV views of fits and datasets");
  c_exp->add_option("--fit", exp.fit_path, "Fit record (heatmap, series)");
  c_exp->add_option("--dataset", exp.dataset_path,
                    "Dataset JSON file (series, loss-table)");
  c_exp->add_option("--heatmap", exp.heatmap_path,
                    "Write a matrix heatmap CSV here");
  c_exp->add_option("--matrix", exp.matrix,
                    "Which matrix to export: m, d1 or d2");
  c_exp->add_option("--series", exp.series_path,
                    "Write an observed-vs-simulated survival series here");
  c_exp->add_option("--pair", exp.pair,
                    "Amplitude pair a1,a2 (default: the record's pair)");
  c_exp->add_option("--state", exp.state, "Prepared state for --series");
  c_exp->add_option("--loss-table", exp.table_path,
                    "Write a per-pair loss summary here");
  c_exp->add_option("--fits", exp.fits,
                    "Fit records for --loss-table (repeatable or "
                    "comma-separated)")
      ->delimiter(',');
  c_exp->add_option("--omit", exp.omit,
                    "Omit the loss-table row for this amplitude pair "
                    "a1,a2 (repeatable)");
  c_exp->add_option("--workers", exp.workers, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (app.got_subcommand(c_sim)) return guarded([&] { return run_simulate(sim); });
  if (app.got_subcommand(c_gen)) return guarded([&] { return run_gen_data(gen); });
  if (app.got_subcommand(c_fit)) return guarded([&] { return run_fit(fita); });
  if (app.got_subcommand(c_eval)) return guarded([&] { return run_eval(eva); });
  if (app.got_subcommand(c_exp)) return guarded([&] { return run_export(exp); });
  return 2;
}
