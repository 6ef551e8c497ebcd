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
#include <vector>

#include "gtest/gtest.h"
#include "oracles.h"

namespace campustrace {
namespace {

EpidemicParams Params(ModelKind kind, double mu = 0.0) {
  EpidemicParams p;
  p.beta = 0.5;
  p.alpha = 0.2;
  p.gamma = 0.1;
  p.mu = mu;
  p.model_kind = kind;
  return p;
}

EpidemicState Initial(double e0, double i0) { return {1.0 - e0 - i0, e0, i0, 0.0, 0.0}; }

TEST(DerivativesTest, WorkedExample) {
  const Derivatives d = ComputeDerivatives({0.9, 0.05, 0.05, 0.0}, Params(ModelKind::kSEIR));
  EXPECT_NEAR(d.ds, -0.0225, 1e-15);
  EXPECT_NEAR(d.de, 0.0125, 1e-15);
  EXPECT_NEAR(d.di, 0.005, 1e-15);
  EXPECT_NEAR(d.dr, 0.005, 1e-15);
  EXPECT_EQ(d.ds + d.de + d.di + d.dr, 0.0);
}

TEST(DerivativesTest, EquilibriumControlAndSir) {
  const Derivatives free = ComputeDerivatives({1.0, 0, 0, 0}, Params(ModelKind::kSEIR));
  EXPECT_EQ(free.ds, 0.0);
  EXPECT_EQ(free.de, 0.0);
  EXPECT_EQ(free.di, 0.0);
  EXPECT_EQ(free.dr, 0.0);
  EXPECT_EQ(ComputeDerivatives({0.7, 0.1, 0.2, 0.0}, Params(ModelKind::kSEIR, 1.0)).ds, 0.0);
  const Derivatives sir = ComputeDerivatives({0.9, 0.0, 0.1, 0.0}, Params(ModelKind::kSIR));
  EXPECT_EQ(sir.de, 0.0);
  EXPECT_NEAR(sir.di, 0.5 * 0.9 * 0.1 - 0.1 * 0.1, 1e-15);
  const Derivatives half = ComputeDerivatives({0.9, 0.05, 0.05, 0.0}, Params(ModelKind::kSEIR, 0.5));
  EXPECT_NEAR(half.ds, -0.01125, 1e-15);
}

TEST(ValidateTest, ParamsAndState) {
  EXPECT_TRUE(Validate(Params(ModelKind::kSEIR)).ok());
  for (auto mutate : std::vector<void (*)(EpidemicParams&)>{
           [](EpidemicParams& p) { p.beta = 0; }, [](EpidemicParams& p) { p.alpha = -1; },
           [](EpidemicParams& p) { p.gamma = 0; }, [](EpidemicParams& p) { p.mu = 1.01; },
           [](EpidemicParams& p) { p.mu = -0.1; }, [](EpidemicParams& p) { p.population_n = 0; }}) {
    EpidemicParams p = Params(ModelKind::kSEIR);
    mutate(p);
    EXPECT_FALSE(Validate(p).ok());
  }
  EXPECT_TRUE(Validate(Initial(0.01, 0.01)).ok());
  EXPECT_FALSE(Validate(EpidemicState{0.9, 0.0, 0.0, 0.0}).ok());
  EXPECT_FALSE(Validate(EpidemicState{1.1, -0.1, 0.0, 0.0}).ok());
  EXPECT_FALSE(Simulate(Params(ModelKind::kSEIR), {0.5, 0.1, 0.1, 0.1}).ok());
  EXPECT_FALSE(Simulate(Params(ModelKind::kSIR), Initial(0.01, 0.01)).ok());
  SimulationOptions bad;
  bad.dt_days = 0;
  EXPECT_FALSE(Simulate(Params(ModelKind::kSEIR), Initial(0, 0.01), bad).ok());
  EXPECT_EQ(*ParseModelKind("SIR"), ModelKind::kSIR);
  EXPECT_EQ(ModelKindName(ModelKind::kSEIR), "SEIR");
  EXPECT_FALSE(ParseModelKind("SIS").ok());
}

TEST(SimulateTest, ConservationAndNonNegativity) {
  for (ModelKind kind : {ModelKind::kSIR, ModelKind::kSEIR}) {
    for (double mu : {0.0, 0.3, 1.0}) {
      const auto series = Simulate(Params(kind, mu), Initial(0.0, 0.02));
      ASSERT_TRUE(series.ok()) << series.status();
      EXPECT_EQ(series->states.size(), 181u);
      for (std::size_t k = 0; k < series->states.size(); ++k) {
        const EpidemicState& s = series->states[k];
        EXPECT_LE(std::fabs(s.Total() - 1.0), 1e-9);
        EXPECT_GE(std::min({s.s, s.e, s.i, s.r}), -1e-12);
        EXPECT_NEAR(s.t, static_cast<double>(k), 1e-12);
      }
    }
  }
}

TEST(SimulateTest, HalvingTheStepConverges) {
  SimulationOptions coarse;
  SimulationOptions fine;
  fine.dt_days = 0.05;
  fine.output_stride = 20;
  const auto a = Simulate(Params(ModelKind::kSEIR), Initial(0.0, 0.02), coarse);
  const auto b = Simulate(Params(ModelKind::kSEIR), Initial(0.0, 0.02), fine);
  ASSERT_TRUE(a.ok() && b.ok());
  ASSERT_EQ(a->states.size(), b->states.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < a->states.size(); ++k) {
    worst = std::max({worst, std::fabs(a->states[k].s - b->states[k].s),
                      std::fabs(a->states[k].e - b->states[k].e),
                      std::fabs(a->states[k].i - b->states[k].i),
                      std::fabs(a->states[k].r - b->states[k].r)});
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(SimulateTest, SirFinalSizeMatchesIntegral) {
  SimulationOptions long_run;
  long_run.t_end_days = 400;
  const double s0 = 0.98;
  const auto series = Simulate(Params(ModelKind::kSIR), {s0, 0.0, 0.02, 0.0}, long_run);
  ASSERT_TRUE(series.ok());
  const double s_inf = series->states.back().s;
  // With i0 > 0 the exact relation uses r_inf = 1 - s_inf.
  const double r0 = 0.5 / 0.1;
  const double oracle_s = oracle::Bisect(
      [&](double s) { return std::log(s / s0) - r0 * (s - 1.0); }, 1e-12, s0 - 1e-12);
  EXPECT_NEAR(s_inf, oracle_s, 1e-6);
  EXPECT_NEAR(series->summary.final_r, 1.0 - oracle_s, 1e-6);
  EXPECT_NEAR(std::log(s_inf / s0), r0 * (s_inf - 1.0), 1e-4);
}

TEST(SimulateTest, TinySeedFinalSize) {
  SimulationOptions long_run;
  long_run.t_end_days = 600;
  const double i0 = 1e-6;
  const double s0 = 1.0 - i0;
  const auto series = Simulate(Params(ModelKind::kSIR), {s0, 0.0, i0, 0.0}, long_run);
  ASSERT_TRUE(series.ok());
  const double s_inf = series->states.back().s;
  EXPECT_NEAR(std::log(s_inf / s0), 5.0 * (s_inf - s0), 1e-4);
}

TEST(SimulateTest, ConstantWithoutInfection) {
  const auto series = Simulate(Params(ModelKind::kSEIR), Initial(0.0, 0.0));
  ASSERT_TRUE(series.ok());
  for (const EpidemicState& s : series->states) {
    EXPECT_EQ(s.s, 1.0);
    EXPECT_EQ(s.i, 0.0);
  }
}

TEST(SimulateTest, FullControlFreezesSusceptibles) {
  SimulationOptions long_run;
  long_run.t_end_days = 400;
  const auto series = Simulate(Params(ModelKind::kSEIR, 1.0), {0.98, 0.02, 0.0, 0.0}, long_run);
  ASSERT_TRUE(series.ok());
  for (const EpidemicState& s : series->states) EXPECT_EQ(s.s, 0.98);
  EXPECT_NEAR(series->summary.final_r, 0.02, 1e-9);
  EXPECT_LE(series->summary.peak_i, 0.02);
}

TEST(SimulateTest, StrideAndSummary) {
  SimulationOptions opt;
  opt.t_end_days = 10;
  opt.output_stride = 3;
  const auto series = Simulate(Params(ModelKind::kSEIR), Initial(0.0, 0.1), opt);
  ASSERT_TRUE(series.ok());
  // 100 steps, recorded at 0, 3, ..., 99.
  ASSERT_EQ(series->states.size(), 34u);
  EXPECT_NEAR(series->states[1].t, 0.3, 1e-12);
  double peak = 0.0;
  for (const EpidemicState& s : series->states) peak = std::max(peak, s.i);
  EXPECT_GE(series->summary.peak_i, peak);
}

TEST(MuSweepTest, MonotoneInControl) {
  const std::vector<double> mus = {0.0, 0.25, 0.5, 0.75, 1.0};
  const auto sweep = MuSweep(Params(ModelKind::kSEIR), Initial(0.0, 0.02), mus);
  ASSERT_TRUE(sweep.ok());
  ASSERT_EQ(sweep->size(), mus.size());
  for (std::size_t k = 1; k < mus.size(); ++k) {
    EXPECT_LT((*sweep)[k].summary.peak_i, (*sweep)[k - 1].summary.peak_i) << mus[k];
    EXPECT_LE((*sweep)[k].summary.final_r, (*sweep)[k - 1].summary.final_r) << mus[k];
    EXPECT_EQ((*sweep)[k].summary.mu, mus[k]);
  }
  const auto plain = Simulate(Params(ModelKind::kSEIR), Initial(0.0, 0.02));
  EXPECT_EQ((*sweep)[0].summary.final_r, plain->summary.final_r);
  const std::vector<double> reversed(mus.rbegin(), mus.rend());
  const auto back = MuSweep(Params(ModelKind::kSEIR), Initial(0.0, 0.02), reversed);
  ASSERT_TRUE(back.ok());
  for (std::size_t k = 0; k < mus.size(); ++k) {
    EXPECT_EQ((*back)[mus.size() - 1 - k].summary.peak_i, (*sweep)[k].summary.peak_i);
  }
  const std::vector<double> bad = {0.5, 1.5};
  EXPECT_FALSE(MuSweep(Params(ModelKind::kSEIR), Initial(0.0, 0.02), bad).ok());
}

TEST(CompareModelsTest, ExposedStageDelaysButKeepsFinalSize) {
  SimulationOptions opt;
  opt.t_end_days = 365;
  const auto sir = Simulate(Params(ModelKind::kSIR), Initial(0.0, 0.02), opt);
  const auto seir = Simulate(Params(ModelKind::kSEIR), Initial(0.0, 0.02), opt);
  ASSERT_TRUE(sir.ok() && seir.ok());
  EXPECT_GT(seir->summary.peak_time, sir->summary.peak_time);
  EXPECT_LT(seir->summary.peak_i, sir->summary.peak_i);
  EXPECT_LT(std::fabs(seir->summary.final_r - sir->summary.final_r), 0.01);
}

}  // namespace
}  // namespace campustrace
