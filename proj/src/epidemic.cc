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

#include "campustrace/epidemic.h"

#include <cmath>
#include <future>
#include <utility>

#include "absl/strings/str_cat.h"
#include "campustrace/status_macros.h"

namespace campustrace {

absl::StatusOr<ModelKind> ParseModelKind(absl::string_view name) {
  if (name == "SIR" || name == "sir") return ModelKind::kSIR;
  if (name == "SEIR" || name == "seir") return ModelKind::kSEIR;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown model_kind '", name, "' (expected SIR or SEIR)"));
}

absl::string_view ModelKindName(ModelKind kind) {
  return kind == ModelKind::kSIR ? "SIR" : "SEIR";
}

absl::Status Validate(const EpidemicParams& params) {
  if (!(params.beta > 0.0)) {
    return absl::InvalidArgumentError("beta must be positive");
  }
  if (!(params.alpha > 0.0)) {
    return absl::InvalidArgumentError("alpha must be positive");
  }
  if (!(params.gamma > 0.0)) {
    return absl::InvalidArgumentError("gamma must be positive");
  }
  if (!(params.mu >= 0.0 && params.mu <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("mu must lie in [0, 1], got ", params.mu));
  }
  if (params.population_n < 1) {
    return absl::InvalidArgumentError("population_n must be at least 1");
  }
  return absl::OkStatus();
}

absl::Status Validate(const EpidemicState& state) {
  for (const auto& [name, v] : {std::pair{"s", state.s}, std::pair{"e", state.e},
                                std::pair{"i", state.i}, std::pair{"r", state.r}}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("compartment ", name, " = ", v, " is outside [0, 1]"));
    }
  }
  if (std::fabs(state.Total() - 1.0) > kStateSumTolerance) {
    return absl::InvalidArgumentError(absl::StrCat(
        "s + e + i + r = ", state.Total(), " differs from 1 by more than 1e-9"));
  }
  return absl::OkStatus();
}

Derivatives ComputeDerivatives(const EpidemicState& state,
                               const EpidemicParams& params) {
  const double infection = (1.0 - params.mu) * params.beta * state.s * state.i;
  const double recovery = params.gamma * state.i;
  Derivatives d;
  d.ds = -infection;
  d.dr = recovery;
  if (params.model_kind == ModelKind::kSIR) {
    d.de = 0.0;
    d.di = infection - recovery;
  } else {
    const double progression = params.alpha * state.e;
    d.de = infection - progression;
    d.di = progression - recovery;
  }
  return d;
}

namespace {

EpidemicState Advance(const EpidemicState& x, const Derivatives& d, double h) {
  return EpidemicState{x.s + h * d.ds, x.e + h * d.de, x.i + h * d.di,
                       x.r + h * d.dr, x.t + h};
}

EpidemicState Rk4Step(const EpidemicState& x, const EpidemicParams& p,
                      double dt) {
  const Derivatives k1 = ComputeDerivatives(x, p);
  const Derivatives k2 = ComputeDerivatives(Advance(x, k1, dt / 2.0), p);
  const Derivatives k3 = ComputeDerivatives(Advance(x, k2, dt / 2.0), p);
  const Derivatives k4 = ComputeDerivatives(Advance(x, k3, dt), p);
  const auto combine = [dt](double a, double b, double c, double d) {
    return dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
  };
  EpidemicState next;
  next.s = x.s + combine(k1.ds, k2.ds, k3.ds, k4.ds);
  next.e = x.e + combine(k1.de, k2.de, k3.de, k4.de);
  next.i = x.i + combine(k1.di, k2.di, k3.di, k4.di);
  next.r = x.r + combine(k1.dr, k2.dr, k3.dr, k4.dr);
  return next;
}

}  // namespace

absl::StatusOr<EpidemicSeries> Simulate(const EpidemicParams& params,
                                        const EpidemicState& initial,
                                        const SimulationOptions& options) {
  RETURN_IF_ERROR(Validate(params));
  RETURN_IF_ERROR(Validate(initial));
  if (!(options.dt_days > 0.0)) {
    return absl::InvalidArgumentError("dt_days must be positive");
  }
  if (!(options.t_end_days >= 0.0)) {
    return absl::InvalidArgumentError("t_end_days must be non-negative");
  }
  if (options.output_stride < 1) {
    return absl::InvalidArgumentError("output_stride must be at least 1");
  }
  if (params.model_kind == ModelKind::kSIR && initial.e != 0.0) {
    return absl::InvalidArgumentError("SIR model requires e = 0");
  }

  const auto steps =
      static_cast<int64_t>(std::llround(options.t_end_days / options.dt_days));
  EpidemicSeries series;
  series.states.reserve(static_cast<std::size_t>(steps / options.output_stride + 2));

  EpidemicState x = initial;
  x.t = 0.0;
  series.states.push_back(x);
  series.summary.mu = params.mu;
  series.summary.peak_i = x.i;
  series.summary.peak_time = 0.0;
  for (int64_t n = 1; n <= steps; ++n) {
    x = Rk4Step(x, params, options.dt_days);
    // Recompute time from the step count to avoid drift.
    x.t = static_cast<double>(n) * options.dt_days;
    if (x.i > series.summary.peak_i) {
      series.summary.peak_i = x.i;
      series.summary.peak_time = x.t;
    }
    if (n % options.output_stride == 0) series.states.push_back(x);
  }
  series.summary.final_r = x.r;
  return series;
}

absl::StatusOr<std::vector<EpidemicSeries>> MuSweep(
    const EpidemicParams& params, const EpidemicState& initial,
    std::span<const double> mu_values, const SimulationOptions& options) {
  for (double mu : mu_values) {
    if (!(mu >= 0.0 && mu <= 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("mu value ", mu, " is outside [0, 1]"));
    }
  }
  std::vector<std::future<absl::StatusOr<EpidemicSeries>>> runs;
  runs.reserve(mu_values.size());
  for (double mu : mu_values) {
    EpidemicParams p = params;
    p.mu = mu;
    runs.push_back(std::async(std::launch::async, [p, initial, options]() {
      return Simulate(p, initial, options);
    }));
  }
  std::vector<EpidemicSeries> out;
  out.reserve(runs.size());
  for (auto& run : runs) {
    ASSIGN_OR_RETURN(EpidemicSeries s, run.get());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace campustrace
