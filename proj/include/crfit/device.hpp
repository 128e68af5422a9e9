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

#include <cmath>

#include "crfit/errors.hpp"

namespace crfit {

/// Physical parameters of a fixed-coupling two-transmon device. All angular
/// frequencies are in rad/ns; hbar = 1 throughout, so energies and angular
/// frequencies coincide.
struct DeviceParams {
  double omega1 = 0.0;          // qubit 1 frequency
  double omega2 = 0.0;          // qubit 2 frequency
  double delta1 = 0.0;          // qubit 1 anharmonicity
  double delta2 = 0.0;          // qubit 2 anharmonicity
  double j12 = 0.0;             // exchange coupling
  double drive_strength1 = 0.0; // full-scale drive rate on qubit 1
  double drive_strength2 = 0.0; // full-scale drive rate on qubit 2
  int levels = 3;               // states kept per transmon
  double dt_ns = 0.22222222;    // sampler tick, ns

  int dim() const { return levels * levels; }

  void validate() const {
    if (levels < 2) throw DimensionError("device: levels must be >= 2");
    if (!(dt_ns > 0.0)) throw DataError("device: dt_ns must be positive");
    for (double v : {omega1, omega2, delta1, delta2, j12, drive_strength1,
                     drive_strength2, dt_ns})
      if (!std::isfinite(v)) throw DataError("device: non-finite parameter");
  }
};

}  // namespace crfit
