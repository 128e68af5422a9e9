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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "crfit/dynamics.hpp"
#include "crfit/parallel.hpp"

namespace crfit {

enum class InitialState { s00, s01, s10, s11 };

inline std::string to_string(InitialState s) {
  switch (s) {
    case InitialState::s00: return "00";
    case InitialState::s01: return "01";
    case InitialState::s10: return "10";
    default: return "11";
  }
}

inline InitialState initial_state_from_string(const std::string& s) {
  if (s == "00") return InitialState::s00;
  if (s == "01") return InitialState::s01;
  if (s == "10") return InitialState::s10;
  if (s == "11") return InitialState::s11;
  throw DataError("unknown initial state '" + s + "'");
}

inline StateVector make_initial_state(InitialState s, int levels) {
  switch (s) {
    case InitialState::s00: return basis_state(levels, 0, 0);
    case InitialState::s01: return basis_state(levels, 0, 1);
    case InitialState::s10: return basis_state(levels, 1, 0);
    default: return basis_state(levels, 1, 1);
  }
}

/// One measured (or simulated) point: both drive amplitudes, the shared
/// pulse duration, the prepared computational state and the four outcome
/// probabilities. `shots` absent means exact (noise-free) probabilities;
/// `normalized` marks vectors renormalized over the computational subspace.
struct DataPoint {
  double a1 = 0.0; // target-qubit drive amplitude, dimensionless
  double a2 = 0.0; // control-qubit drive amplitude, dimensionless
  int duration_dt = 0;
  InitialState initial_state = InitialState::s00;
  ProbabilityVector probs;
  std::optional<long long> shots;
  bool normalized = false;
};

struct Provenance {
  enum class Kind { hardware, synthetic };
  Kind kind = Kind::synthetic;
  std::uint64_t seed = 0;
  std::string planted_digest; // synthetic only, digest of the true corrections
  std::string note;
};

/// A full experiment: device, drive carriers, pulse shape convention, and
/// the list of points. Drive frequencies are stored in rad/ns internally.
struct Dataset {
  DeviceParams device;
  double drive_freq_q1 = 0.0;
  double drive_freq_q2 = 0.0;
  std::string edge_convention = "lifted_gaussian";
  int risefall_dt = 32;
  double sigma_dt = 8.0;
  Provenance provenance;
  std::vector<DataPoint> points;
};

/// Schedule played for one datapoint: simultaneous pulses of the same
/// duration on both qubits, amplitudes (a1, a2).
inline PulseSchedule schedule_for_point(const Dataset& ds, double a1,
                                        double a2, int duration_dt) {
  PulseSchedule s;
  s.dt_ns = ds.device.dt_ns;
  s.drive_freq_q1 = ds.drive_freq_q1;
  s.drive_freq_q2 = ds.drive_freq_q2;
  s.pulse_q1 = {a1, duration_dt, ds.risefall_dt, ds.sigma_dt};
  s.pulse_q2 = {a2, duration_dt, ds.risefall_dt, ds.sigma_dt};
  return s;
}

/// One amplitude pair of the measurement grid with its duration ladder.
/// states_all are prepared at every duration; states_longest only at the
/// longest `longest_count` ones.
struct GridBlock {
  double a1 = 0.0;
  double a2 = 0.0;
  std::vector<int> durations_dt;
  std::vector<InitialState> states_all;
  std::vector<InitialState> states_longest;
  int longest_count = 5;
};

/// The sweep used throughout: target amplitudes 0 to 0.04 in steps of 0.01,
/// control amplitudes 0.1 to 0.6 in steps of 0.1, twenty durations per pair
/// (thirty for the smallest pair), 00- and 10-preparations everywhere plus
/// 01- and 11-preparations at the five longest durations.
inline std::vector<GridBlock> standard_grid() {
  // Exact decimal literals so downstream amplitude lookups match what a
  // user would type on the command line.
  static constexpr double kA1[] = {0.0, 0.01, 0.02, 0.03, 0.04};
  static constexpr double kA2[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  std::vector<GridBlock> blocks;
  for (int i1 = 0; i1 <= 4; ++i1)
    for (int i2 = 0; i2 <= 5; ++i2) {
      GridBlock b;
      b.a1 = kA1[i1];
      b.a2 = kA2[i2];
      const bool special = (i1 == 0 && i2 == 0);
      b.durations_dt = duration_ladder(special ? 30 : 20, 320, 128, 64);
      b.states_all = {InitialState::s00, InitialState::s10};
      b.states_longest = {InitialState::s01, InitialState::s11};
      b.longest_count = 5;
      blocks.push_back(std::move(b));
    }
  return blocks;
}

/// Deterministic point order: per block, each states_all series over the
/// full ladder, then each states_longest series over the tail.
inline std::vector<DataPoint> expand_grid(const std::vector<GridBlock>& grid) {
  std::vector<DataPoint> pts;
  for (const GridBlock& b : grid) {
    for (InitialState st : b.states_all)
      for (int d : b.durations_dt) {
        DataPoint p;
        p.a1 = b.a1;
        p.a2 = b.a2;
        p.duration_dt = d;
        p.initial_state = st;
        pts.push_back(p);
      }
    const int tail =
        std::min<int>(b.longest_count, int(b.durations_dt.size()));
    for (InitialState st : b.states_longest)
      for (std::size_t k = b.durations_dt.size() - tail;
           k < b.durations_dt.size(); ++k) {
        DataPoint p;
        p.a1 = b.a1;
        p.a2 = b.a2;
        p.duration_dt = b.durations_dt[k];
        p.initial_state = st;
        pts.push_back(p);
      }
  }
  return pts;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream of per-point seeds independent of evaluation order.
inline std::uint64_t point_seed(std::uint64_t base, std::size_t index) {
  return splitmix64(base + 0x9e3779b97f4a7c15ULL * (std::uint64_t(index) + 1));
}

/// Uniform double in [0, 1) from the top 53 bits of the engine output, the
/// same construction on every platform.
inline double uniform01(std::mt19937_64& eng) {
  return double(eng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
  return std::string(buf);
}

}  // namespace detail

/// Digest of a correction set: hashes a canonical decimal rendering of all
/// entries plus the active flags and modulation frequency, so any change to
/// the planted truth changes the digest on every platform alike.
inline std::string correction_digest(const CorrectionSet& corr) {
  std::string repr;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g;", v);
    repr += buf;
  };
  for (const ComplexMatrix* m : {&corr.m, &corr.d1, &corr.d2})
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) {
        put((*m)(r, c).real());
        put((*m)(r, c).imag());
      }
  repr += corr.active_m ? "M" : "-";
  repr += corr.active_d1 ? "1" : "-";
  repr += corr.active_d2 ? "2" : "-";
  put(corr.modulation_freq);
  return detail::hex64(detail::fnv1a(repr));
}

struct SynthOptions {
  std::optional<long long> shots;  // absent: exact probabilities
  std::uint64_t seed = 0;
  bool normalized = false;
  Frame frame = Frame::rotating;
  int workers = 1;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  int risefall_dt = 32;
  double sigma_dt = 8.0;
};

/// Simulate every grid point under device + planted corrections and package
/// the outcome probabilities as a dataset. With shots set, outcomes are
/// drawn from a five-way multinomial (four computational outcomes plus
/// leakage) with a per-point RNG stream, so results do not depend on worker
/// count or evaluation order.
inline Dataset generate_synthetic(const DeviceParams& dp,
                                  const CorrectionSet& planted,
                                  const std::vector<GridBlock>& grid,
                                  double drive_freq_q1, double drive_freq_q2,
                                  const SynthOptions& opt = {}) {
  dp.validate();
  planted.validate();
  if (planted.dim() != dp.dim())
    throw DimensionError("generate_synthetic: correction dimension mismatch");
  if (opt.shots && *opt.shots <= 0)
    throw DataError("generate_synthetic: shots must be positive");

  Dataset ds;
  ds.device = dp;
  ds.drive_freq_q1 = drive_freq_q1;
  ds.drive_freq_q2 = drive_freq_q2;
  ds.risefall_dt = opt.risefall_dt;
  ds.sigma_dt = opt.sigma_dt;
  ds.provenance.kind = Provenance::Kind::synthetic;
  ds.provenance.seed = opt.seed;
  ds.provenance.planted_digest = correction_digest(planted);
  ds.points = expand_grid(grid);

  const SimContext ctx = prepare_context(dp, opt.frame);
  parallel_for(ds.points.size(), opt.workers, [&](std::size_t i) {
    DataPoint& pt = ds.points[i];
    const PulseSchedule sched =
        schedule_for_point(ds, pt.a1, pt.a2, pt.duration_dt);
    const StateVector psi0 = make_initial_state(pt.initial_state, dp.levels);
    const StateVector psi =
        evolve(ctx, &planted, sched, psi0, opt.rel_tol, opt.abs_tol);
    ProbabilityVector p = computational_probs(psi, dp.levels);

    if (opt.shots) {
      std::mt19937_64 eng(detail::point_seed(opt.seed, i));
      const double leak = std::max(0.0, 1.0 - p.sum());
      const double cell[5] = {p.p00, p.p01, p.p10, p.p11, leak};
      long long counts[5] = {0, 0, 0, 0, 0};
      const double total = cell[0] + cell[1] + cell[2] + cell[3] + cell[4];
      for (long long s = 0; s < *opt.shots; ++s) {
        const double u = detail::uniform01(eng) * total;
        double acc = 0.0;
        int outcome = 4;
        for (int m = 0; m < 5; ++m) {
          acc += cell[m];
          if (u < acc) {
            outcome = m;
            break;
          }
        }
        ++counts[outcome];
      }
      const double denom =
          opt.normalized
              ? double(counts[0] + counts[1] + counts[2] + counts[3])
              : double(*opt.shots);
      const double inv = denom > 0.0 ? 1.0 / denom : 0.0;
      p.p00 = counts[0] * inv;
      p.p01 = counts[1] * inv;
      p.p10 = counts[2] * inv;
      p.p11 = counts[3] * inv;
      pt.shots = *opt.shots;
    } else if (opt.normalized) {
      const double s = p.sum();
      const double inv = s > 0.0 ? 1.0 / s : 0.0;
      p.p00 *= inv;
      p.p01 *= inv;
      p.p10 *= inv;
      p.p11 *= inv;
    }
    pt.probs = p;
    pt.normalized = opt.normalized;
  });
  return ds;
}

inline bool same_amplitude(double a, double b) { return std::abs(a - b) <= 1e-12; }

/// Unique amplitude pairs, sorted by (a1, a2).
inline std::vector<std::pair<double, double>> amplitude_pairs(
    const Dataset& ds) {
  std::vector<std::pair<double, double>> pairs;
  for (const DataPoint& p : ds.points) {
    bool seen = false;
    for (const auto& q : pairs)
      if (same_amplitude(q.first, p.a1) && same_amplitude(q.second, p.a2)) {
        seen = true;
        break;
      }
    if (!seen) pairs.emplace_back(p.a1, p.a2);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

inline std::vector<DataPoint> points_for_pair(const Dataset& ds, double a1,
                                              double a2) {
  std::vector<DataPoint> out;
  for (const DataPoint& p : ds.points)
    if (same_amplitude(p.a1, a1) && same_amplitude(p.a2, a2)) out.push_back(p);
  if (out.empty()) {
    std::ostringstream os;
    os << "no points for amplitude pair (" << a1 << ", " << a2 << ")";
    throw NotFoundError(os.str());
  }
  return out;
}

struct TrainValSplit {
  std::vector<DataPoint> train;
  std::vector<DataPoint> validation;
};

/// Training set = the shortest ten durations of the 00- and 10-series of the
/// pair; everything else of the pair is validation (longer 00/10 points and
/// all 01/11 points). Series shorter than eleven durations contribute their
/// shorter half to training.
inline TrainValSplit split_pair(const Dataset& ds, double a1, double a2) {
  const std::vector<DataPoint> pts = points_for_pair(ds, a1, a2);
  TrainValSplit out;
  for (InitialState st : {InitialState::s00, InitialState::s10}) {
    std::vector<int> durations;
    for (const DataPoint& p : pts)
      if (p.initial_state == st) durations.push_back(p.duration_dt);
    std::sort(durations.begin(), durations.end());
    durations.erase(std::unique(durations.begin(), durations.end()),
                    durations.end());
    const std::size_t keep =
        std::min<std::size_t>(10, (durations.size() + 1) / 2);
    std::vector<int> cutoff(durations.begin(), durations.begin() + keep);
    for (const DataPoint& p : pts)
      if (p.initial_state == st &&
          std::find(cutoff.begin(), cutoff.end(), p.duration_dt) !=
              cutoff.end())
        out.train.push_back(p);
  }
  for (const DataPoint& p : pts) {
    const bool in_train =
        std::any_of(out.train.begin(), out.train.end(), [&](const DataPoint& q) {
          return q.initial_state == p.initial_state &&
                 q.duration_dt == p.duration_dt;
        });
    if (!in_train) out.validation.push_back(p);
  }
  if (out.train.empty())
    throw DataError("split: pair has no 00/10 series to train on");
  return out;
}

// ---------------------------------------------------------------------------
// Files. All writers go through a temp-file-plus-rename so readers never see
// a partially written file.

namespace detail {

inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open '" + tmp.string() + "' for writing");
    os << content;
    if (!os) throw DataError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw DataError("rename failed for '" + path + "': " + ec.message());
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

/// rad/ns per unit of the declared frequency unit.
inline double unit_scale(const std::string& units) {
  if (units == "rad/ns") return 1.0;
  if (units == "GHz") return 2.0 * std::numbers::pi;
  if (units == "Hz") return 2.0 * std::numbers::pi * 1e-9;
  throw DataError("unknown frequency units '" + units +
                  "' (expected rad/ns, GHz or Hz)");
}

template <class T>
T require(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key))
    throw DataError(where + ": missing required field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": bad field '" + key + "': " + e.what());
  }
}

inline nlohmann::json device_to_json(const DeviceParams& dp) {
  nlohmann::json j;
  j["units"] = "rad/ns";
  j["omega1"] = dp.omega1;
  j["omega2"] = dp.omega2;
  j["delta1"] = dp.delta1;
  j["delta2"] = dp.delta2;
  j["j12"] = dp.j12;
  j["drive_strength1"] = dp.drive_strength1;
  j["drive_strength2"] = dp.drive_strength2;
  j["levels"] = dp.levels;
  j["dt_ns"] = dp.dt_ns;
  return j;
}

/// Returns the device plus the declared-to-internal frequency scale, which
/// callers need for sibling fields quoted in the same units.
inline std::pair<DeviceParams, double> device_from_json(
    const nlohmann::json& j, const std::string& where) {
  const std::string units =
      j.contains("units") ? j.at("units").get<std::string>() : "rad/ns";
  const double scale = unit_scale(units);
  DeviceParams dp;
  dp.omega1 = scale * require<double>(j, "omega1", where);
  dp.omega2 = scale * require<double>(j, "omega2", where);
  dp.delta1 = scale * require<double>(j, "delta1", where);
  dp.delta2 = scale * require<double>(j, "delta2", where);
  dp.j12 = scale * require<double>(j, "j12", where);
  dp.drive_strength1 = scale * require<double>(j, "drive_strength1", where);
  dp.drive_strength2 = scale * require<double>(j, "drive_strength2", where);
  dp.levels = require<int>(j, "levels", where);
  dp.dt_ns = require<double>(j, "dt_ns", where);
  dp.validate();
  return {dp, scale};
}

}  // namespace detail

inline void save_dataset(const Dataset& ds, const std::string& path) {
  nlohmann::json j;
  j["schema"] = "crfit.dataset.v1";
  j["device_params"] = detail::device_to_json(ds.device);
  j["drive_freqs"] = {{"q1", ds.drive_freq_q1}, {"q2", ds.drive_freq_q2}};
  j["edge_convention"] = ds.edge_convention;
  j["risefall_dt"] = ds.risefall_dt;
  j["sigma_dt"] = ds.sigma_dt;
  nlohmann::json prov;
  prov["kind"] =
      ds.provenance.kind == Provenance::Kind::synthetic ? "synthetic" : "hardware";
  if (ds.provenance.kind == Provenance::Kind::synthetic) {
    prov["seed"] = ds.provenance.seed;
    prov["planted_digest"] = ds.provenance.planted_digest;
  }
  if (!ds.provenance.note.empty()) prov["note"] = ds.provenance.note;
  j["provenance"] = prov;
  nlohmann::json pts = nlohmann::json::array();
  for (const DataPoint& p : ds.points) {
    nlohmann::json jp;
    jp["a1"] = p.a1;
    jp["a2"] = p.a2;
    jp["duration_dt"] = p.duration_dt;
    jp["initial_state"] = to_string(p.initial_state);
    jp["probs"] = {p.probs.p00, p.probs.p01, p.probs.p10, p.probs.p11};
    if (p.shots) jp["shots"] = *p.shots;
    if (p.normalized) jp["normalized"] = true;
    pts.push_back(std::move(jp));
  }
  j["points"] = std::move(pts);
  detail::atomic_write(path, j.dump(2) + "\n");
}

inline Dataset load_dataset(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("dataset '" + path + "': " + e.what());
  }
  const std::string where = "dataset '" + path + "'";
  Dataset ds;
  if (!j.contains("device_params"))
    throw DataError(where + ": missing device_params");
  const auto [dp, scale] =
      detail::device_from_json(j.at("device_params"), where);
  ds.device = dp;
  if (!j.contains("drive_freqs"))
    throw DataError(where + ": missing drive_freqs");
  ds.drive_freq_q1 =
      scale * detail::require<double>(j.at("drive_freqs"), "q1", where);
  ds.drive_freq_q2 =
      scale * detail::require<double>(j.at("drive_freqs"), "q2", where);
  if (j.contains("edge_convention"))
    ds.edge_convention = j.at("edge_convention").get<std::string>();
  if (ds.edge_convention != "lifted_gaussian")
    std::fprintf(stderr,
                 "warning: %s: unknown edge_convention '%s', simulating with "
                 "lifted Gaussian edges\n",
                 where.c_str(), ds.edge_convention.c_str());
  if (j.contains("risefall_dt")) ds.risefall_dt = j.at("risefall_dt").get<int>();
  if (j.contains("sigma_dt")) ds.sigma_dt = j.at("sigma_dt").get<double>();
  if (j.contains("provenance")) {
    const auto& pv = j.at("provenance");
    const std::string kind =
        pv.contains("kind") ? pv.at("kind").get<std::string>() : "hardware";
    if (kind == "synthetic")
      ds.provenance.kind = Provenance::Kind::synthetic;
    else if (kind == "hardware")
      ds.provenance.kind = Provenance::Kind::hardware;
    else
      throw DataError(where + ": unknown provenance kind '" + kind + "'");
    if (pv.contains("seed"))
      ds.provenance.seed = pv.at("seed").get<std::uint64_t>();
    if (pv.contains("planted_digest"))
      ds.provenance.planted_digest = pv.at("planted_digest").get<std::string>();
    if (pv.contains("note")) ds.provenance.note = pv.at("note").get<std::string>();
  }
  if (!j.contains("points") || !j.at("points").is_array())
    throw DataError(where + ": missing points array");
  std::size_t idx = 0;
  for (const auto& jp : j.at("points")) {
    const std::string pwhere = where + ", point " + std::to_string(idx);
    DataPoint p;
    p.a1 = detail::require<double>(jp, "a1", pwhere);
    p.a2 = detail::require<double>(jp, "a2", pwhere);
    p.duration_dt = detail::require<int>(jp, "duration_dt", pwhere);
    p.initial_state = initial_state_from_string(
        detail::require<std::string>(jp, "initial_state", pwhere));
    const auto probs = detail::require<std::vector<double>>(jp, "probs", pwhere);
    if (probs.size() != 4)
      throw DataError(pwhere + ": probs must have four entries");
    for (double v : probs)
      if (!(v >= -1e-9 && v <= 1.0 + 1e-9))
        throw DataError(pwhere + ": probability outside [0, 1]");
    p.probs = {probs[0], probs[1], probs[2], probs[3]};
    if (jp.contains("shots") && !jp.at("shots").is_null()) {
      p.shots = jp.at("shots").get<long long>();
      if (*p.shots <= 0) throw DataError(pwhere + ": shots must be positive");
    }
    if (jp.contains("normalized")) p.normalized = jp.at("normalized").get<bool>();
    if (p.duration_dt <= 0)
      throw DataError(pwhere + ": duration_dt must be positive");
    ds.points.push_back(std::move(p));
    ++idx;
  }
  return ds;
}

/// Standalone device description, optionally carrying default drive
/// carriers (in the same units as the device entries).
struct DeviceFile {
  DeviceParams device;
  std::optional<double> drive_freq_q1;
  std::optional<double> drive_freq_q2;
};

inline DeviceFile load_device_file(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("device file '" + path + "': " + e.what());
  }
  const std::string where = "device file '" + path + "'";
  DeviceFile df;
  const auto [dp, scale] = detail::device_from_json(j, where);
  df.device = dp;
  if (j.contains("drive_freq_q1"))
    df.drive_freq_q1 = scale * j.at("drive_freq_q1").get<double>();
  if (j.contains("drive_freq_q2"))
    df.drive_freq_q2 = scale * j.at("drive_freq_q2").get<double>();
  return df;
}

inline void save_device_file(const DeviceFile& df, const std::string& path) {
  nlohmann::json j = detail::device_to_json(df.device);
  j["schema"] = "crfit.device.v1";
  if (df.drive_freq_q1) j["drive_freq_q1"] = *df.drive_freq_q1;
  if (df.drive_freq_q2) j["drive_freq_q2"] = *df.drive_freq_q2;
  detail::atomic_write(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// CSV exports.

namespace detail {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::string(buf);
}

inline std::string with_suffix(const std::string& path,
                               const std::string& suffix) {
  namespace fs = std::filesystem;
  fs::path p(path);
  const std::string ext = p.extension().string();
  fs::path stem = p;
  stem.replace_extension();
  return stem.string() + suffix + ext;
}

}  // namespace detail

/// Matrix heatmap as CSV with 1-based row/column headers. Writes the real
/// part to `path`; if any entry has a nonzero imaginary part, a companion
/// file with suffix `_imag` receives it.
inline void export_heatmap(const ComplexMatrix& m, const std::string& path) {
  const Eigen::Index d = m.rows();
  auto render = [&](bool imag) {
    std::ostringstream os;
    for (Eigen::Index c = 0; c < d; ++c) os << "," << (c + 1);
    os << "\n";
    for (Eigen::Index r = 0; r < d; ++r) {
      os << (r + 1);
      for (Eigen::Index c = 0; c < d; ++c)
        os << ","
           << detail::csv_num(imag ? m(r, c).imag() : m(r, c).real());
      os << "\n";
    }
    return os.str();
  };
  detail::atomic_write(path, render(false));
  if (m.imag().cwiseAbs().maxCoeff() > 0.0)
    detail::atomic_write(detail::with_suffix(path, "_imag"), render(true));
}

/// One row of the per-pair summary: average point losses with and without
/// the fitted correction plus the two leading fitted matrix elements.
struct LossTableRow {
  double a1 = 0.0;
  double a2 = 0.0;
  double loss_uncorrected = 0.0;
  double loss_corrected = 0.0;
  std::complex<double> d2_elem_00_01{0.0, 0.0};
  std::complex<double> d2_elem_10_11{0.0, 0.0};
};

/// Summary table across amplitude pairs, sorted by (T_amp, C_amp). Rows whose
/// amplitude pair matches an entry of `omit` (within the same_amplitude
/// tolerance) are left out. A companion `_trends` file carries the fitted
/// element series.
inline void export_loss_table(
    std::vector<LossTableRow> rows, const std::string& path,
    const std::vector<std::pair<double, double>>& omit = {}) {
  std::sort(rows.begin(), rows.end(), [](const LossTableRow& x,
                                         const LossTableRow& y) {
    if (x.a1 != y.a1) return x.a1 < y.a1;
    return x.a2 < y.a2;
  });
  if (!omit.empty()) {
    rows.erase(std::remove_if(rows.begin(), rows.end(),
                              [&](const LossTableRow& r) {
                                for (const auto& [a1, a2] : omit)
                                  if (same_amplitude(r.a1, a1) &&
                                      same_amplitude(r.a2, a2))
                                    return true;
                                return false;
                              }),
               rows.end());
  }
  std::ostringstream os;
  os << "T_amp,C_amp,loss_uncorrected,loss_corrected\n";
  for (const LossTableRow& r : rows)
    os << detail::csv_num(r.a1) << "," << detail::csv_num(r.a2) << ","
       << detail::csv_num(r.loss_uncorrected) << ","
       << detail::csv_num(r.loss_corrected) << "\n";
  detail::atomic_write(path, os.str());

  std::ostringstream ts;
  ts << "T_amp,C_amp,d2_00_01_re,d2_00_01_im,d2_10_11_re,d2_10_11_im\n";
  for (const LossTableRow& r : rows)
    ts << detail::csv_num(r.a1) << "," << detail::csv_num(r.a2) << ","
       << detail::csv_num(r.d2_elem_00_01.real()) << ","
       << detail::csv_num(r.d2_elem_00_01.imag()) << ","
       << detail::csv_num(r.d2_elem_10_11.real()) << ","
       << detail::csv_num(r.d2_elem_10_11.imag()) << "\n";
  detail::atomic_write(detail::with_suffix(path, "_trends"), ts.str());
}

}  // namespace crfit
