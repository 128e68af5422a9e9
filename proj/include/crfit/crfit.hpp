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

#include "crfit/adjoint.hpp"
#include "crfit/dataio.hpp"
#include "crfit/device.hpp"
#include "crfit/dynamics.hpp"
#include "crfit/errors.hpp"
#include "crfit/eval.hpp"
#include "crfit/hamiltonian.hpp"
#include "crfit/integrate.hpp"
#include "crfit/operators.hpp"
#include "crfit/parallel.hpp"
#include "crfit/params.hpp"
#include "crfit/pulses.hpp"
#include "crfit/training.hpp"
