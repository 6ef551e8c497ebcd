// Copyright 2026 The CampusTrace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Compartmental outbreak model in population fractions:
//
//   ds/dt = -(1 - mu) beta s i
//   de/dt =  (1 - mu) beta s i - alpha e
//   di/dt =  alpha e - gamma i
//   dr/dt =  gamma i
//
// mu is the mobility-restriction control (0 = none, 1 = full isolation). The
// SIR variant routes new infections straight into i and keeps e at zero.
// Rates are per day.

#ifndef CAMPUSTRACE_EPIDEMIC_H_
#define CAMPUSTRACE_EPIDEMIC_H_

#include <span>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace campustrace {

enum class ModelKind { kSIR, kSEIR };

absl::StatusOr<ModelKind> ParseModelKind(absl::string_view name);
absl::string_view ModelKindName(ModelKind kind);

// Illustrative defaults, not fitted to any data.
struct EpidemicParams {
  double beta = 0.5;
  double alpha = 0.2;
  double gamma = 0.1;
  double mu = 0.0;
  int population_n = 50;
  ModelKind model_kind = ModelKind::kSEIR;
};

absl::Status Validate(const EpidemicParams& params);

struct EpidemicState {
  double s = 1.0;
  double e = 0.0;
  double i = 0.0;
  double r = 0.0;
  double t = 0.0;

  double Total() const { return s + e + i + r; }
};

inline constexpr double kStateSumTolerance = 1e-9;

// Each compartment in [0, 1] and |s + e + i + r - 1| <= 1e-9.
absl::Status Validate(const EpidemicState& state);

struct Derivatives {
  double ds = 0.0;
  double de = 0.0;
  double di = 0.0;
  double dr = 0.0;
};

Derivatives ComputeDerivatives(const EpidemicState& state,
                               const EpidemicParams& params);

struct EpidemicSummary {
  double mu = 0.0;
  double peak_i = 0.0;
  double peak_time = 0.0;
  double final_r = 0.0;
};

struct EpidemicSeries {
  // Equally spaced by output_stride steps of dt.
  std::vector<EpidemicState> states;
  // Over every integration step, not just the recorded ones.
  EpidemicSummary summary;
};

struct SimulationOptions {
  double t_end_days = 180.0;
  double dt_days = 0.1;
  // Record every N-th step (the initial state is always recorded).
  int output_stride = 10;
};

// Fixed-step classical Runge-Kutta.
absl::StatusOr<EpidemicSeries> Simulate(const EpidemicParams& params,
                                        const EpidemicState& initial,
                                        const SimulationOptions& options = {});

// One Simulate() per mu with params.mu overridden. Results keep the input
// order and do not depend on evaluation order.
absl::StatusOr<std::vector<EpidemicSeries>> MuSweep(
    const EpidemicParams& params, const EpidemicState& initial,
    std::span<const double> mu_values, const SimulationOptions& options = {});

}  // namespace campustrace

#endif  // CAMPUSTRACE_EPIDEMIC_H_
