#include "support.hpp"

using namespace distillery;

namespace {

const std::array<double, 4> kWerner09{0.9, 1.0 / 30, 1.0 / 30, 1.0 / 30};

/// Bit-by-bit parity.
bool naive_parity(const std::string& s, const std::string& x) {
  int acc = 0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += (s[i] - '0') * (x[i] - '0');
  return acc % 2 == 1;
}

/// Membership in the closed window, computed from the product of probabilities.
bool typical_oracle(const std::vector<std::uint8_t>& x, const std::array<double, 4>& p, double eps) {
  double prob = 1.0;
  for (auto e : x) prob *= p[e];
  if (prob == 0.0) return false;
  double h = 0.0;
  for (double v : p)
    if (v > 0) h -= v * std::log2(v);
  const double n = static_cast<double>(x.size());
  return std::abs(-std::log2(prob) / n - h) <= eps + 1e-12;
}

BellIndexVector from_index(std::uint64_t idx, std::size_t n) {
  std::vector<std::uint8_t> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = static_cast<std::uint8_t>(idx & 3U);
    idx >>= 2;
  }
  return BellIndexVector(std::move(e));
}

BitString bits_from_index(std::uint64_t idx, std::size_t bits) {
  BitString s(bits);
  for (std::size_t i = 0; i < bits; ++i) s.set(i, (idx >> i) & 1U);
  return s;
}

}  // namespace

TEST(BitString, Basics) {
  const auto s = BitString::from_string("1101");
  EXPECT_EQ(s.to_string(), "1101");
  EXPECT_TRUE(s.get(0));
  EXPECT_FALSE(s.get(2));
  EXPECT_EQ((s ^ BitString::from_string("0111")).to_string(), "1010");
  EXPECT_THROW_CODE(BitString::from_string("10x"), invalid_argument);
  EXPECT_THROW_CODE(s.dot(BitString(5)), dimension_mismatch);
  Rng rng(1);
  for (int k = 0; k < 200; ++k) EXPECT_FALSE(BitString::random_nonzero(rng, 1 + k % 130).is_zero());
  // Length 1: the only non-zero string.
  EXPECT_EQ(BitString::random_nonzero(rng, 1).to_string(), "1");
}

TEST(BellIndexVector, BitEncodingRoundTrips) {
  Rng rng(2);
  const SourceDist uniform({0.25, 0.25, 0.25, 0.25});
  for (int k = 0; k < 50; ++k) {
    const auto x = BellIndexVector::sample(uniform, 1 + static_cast<std::size_t>(k), rng);
    EXPECT_EQ(BellIndexVector::from_bits(x.to_bits()), x);
  }
  // Psi+ (label 1) sets only the amplitude bit, Phi- (label 2) only the phase bit.
  EXPECT_EQ(BellIndexVector({1, 2, 3, 0}).to_bits().to_string(), "01101100");
  EXPECT_THROW_CODE(BellIndexVector({4}), invalid_argument);
}

TEST(ShannonEntropy, Examples) {
  EXPECT_DOUBLE_EQ(shannon_entropy({1, 0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(shannon_entropy({0.25, 0.25, 0.25, 0.25}), 2.0);
  EXPECT_NEAR(shannon_entropy(kWerner09), oracle::entropy_of({0.9, 1.0 / 30, 1.0 / 30, 1.0 / 30}), 1e-12);
  EXPECT_NEAR(shannon_entropy(kWerner09), 0.6275, 5e-5);
  EXPECT_THROW_CODE(shannon_entropy({0.5, 0.4, 0, 0}), invalid_distribution);
  EXPECT_THROW_CODE(shannon_entropy({1.5, -0.5, 0, 0}), invalid_distribution);
}

TEST(IsTypical, Examples) {
  const SourceDist uniform({0.25, 0.25, 0.25, 0.25});
  Rng rng(3);
  for (int k = 0; k < 20; ++k) EXPECT_TRUE(is_typical(BellIndexVector::sample(uniform, 12, rng), uniform, 1e-6));
  const SourceDist det({1, 0, 0, 0});
  EXPECT_TRUE(is_typical(BellIndexVector({0, 0, 0, 0, 0}), det, 0.1));
  EXPECT_FALSE(is_typical(BellIndexVector({0, 0, 1, 0, 0}), det, 0.1));
  EXPECT_THROW_CODE(is_typical(BellIndexVector({0}), det, 0.0), invalid_argument);
}

TEST(IsTypical, ExhaustiveAgainstOracleAtTen) {
  const SourceDist src(kWerner09);
  const std::size_t n = 10;
  std::size_t count = 0;
  for (std::uint64_t idx = 0; idx < (1ULL << (2 * n)); ++idx) {
    const auto x = from_index(idx, n);
    const bool t = is_typical(x, src, 0.1);
    ASSERT_EQ(t, typical_oracle(x.entries(), kWerner09, 0.1)) << x.to_string();
    count += t;
  }
  EXPECT_LE(static_cast<double>(count), std::exp2(10.0 * (src.entropy() + 0.1)));
  EXPECT_GT(count, 0u);
}

TEST(IsTypical, SetSizeBoundForSmallN) {
  const std::vector<std::array<double, 4>> sources{kWerner09, {0.7, 0.1, 0.1, 0.1}, {0.5, 0.3, 0.2, 0.0}};
  for (const auto& p : sources) {
    const SourceDist src(p);
    for (std::size_t n = 1; n <= 10; ++n) {
      std::size_t count = 0;
      for (std::uint64_t idx = 0; idx < (1ULL << (2 * n)); ++idx) count += is_typical(from_index(idx, n), src, 0.1);
      EXPECT_LE(static_cast<double>(count), std::exp2(static_cast<double>(n) * (src.entropy() + 0.1))) << n;
    }
  }
}

TEST(Parity, Examples) {
  EXPECT_FALSE(parity(BitString::from_string("1101"), BitString::from_string("0111")));
  EXPECT_FALSE(parity(BitString(8), BitString::from_string("11010111")));
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const std::size_t len = 1 + static_cast<std::size_t>(k);
    const auto s = BitString::random_nonzero(rng, len);
    const auto x = BitString::random_nonzero(rng, len);
    EXPECT_EQ(parity(s, x), naive_parity(s.to_string(), x.to_string()));
  }
  EXPECT_THROW_CODE(parity(BitString(3), BitString(4)), dimension_mismatch);
}

TEST(RoundUpdate, Examples) {
  // Selecting the amplitude bit of a single Psi+ pair reads 1.
  const auto r = round_update(BitString::from_string("01"), BellIndexVector({1}));
  EXPECT_TRUE(r.t);
  EXPECT_EQ(r.x_next.size(), 0u);
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const std::size_t m = 1 + static_cast<std::size_t>(k) % 9;
    const auto zero = round_update(BitString::random_nonzero(rng, 2 * m), BellIndexVector(std::vector<std::uint8_t>(m, 0)));
    EXPECT_FALSE(zero.t);
    EXPECT_TRUE(zero.x_next.all_phi_plus());
    EXPECT_EQ(zero.x_next.size(), m - 1);
  }
  EXPECT_THROW_CODE(round_update(BitString(4), BellIndexVector({1, 2})), invalid_argument);
  EXPECT_THROW_CODE(round_update(BitString::from_string("01"), BellIndexVector({1, 2})), dimension_mismatch);
}

TEST(RoundUpdate, LinearAndParityExhaustive) {
  for (std::size_t m = 1; m <= 3; ++m) {
    const std::uint64_t nx = 1ULL << (2 * m);
    for (std::uint64_t si = 1; si < nx; ++si) {
      const auto s = bits_from_index(si, 2 * m);
      for (std::uint64_t xi = 0; xi < nx; ++xi) {
        const auto x = bits_from_index(xi, 2 * m);
        const auto rx = round_update(s, BellIndexVector::from_bits(x));
        ASSERT_EQ(rx.t, naive_parity(s.to_string(), x.to_string()));
        for (std::uint64_t yi = 0; yi < nx; ++yi) {
          const auto y = bits_from_index(yi, 2 * m);
          const auto ry = round_update(s, BellIndexVector::from_bits(y));
          const auto rxy = round_update(s, BellIndexVector::from_bits(x ^ y));
          ASSERT_EQ(rxy.t, rx.t != ry.t);
          ASSERT_EQ(rxy.x_next.to_bits(), rx.x_next.to_bits() ^ ry.x_next.to_bits());
        }
      }
    }
  }
}

TEST(RoundUpdate, LinearOnRandomLargeInputs) {
  Rng rng(6);
  for (int k = 0; k < 500; ++k) {
    const std::size_t m = 4 + static_cast<std::size_t>(k) % 30;
    const auto s = BitString::random_nonzero(rng, 2 * m);
    const auto x = BitString::random_nonzero(rng, 2 * m);
    const auto y = BitString::random_nonzero(rng, 2 * m);
    const auto rx = round_update(s, BellIndexVector::from_bits(x));
    const auto ry = round_update(s, BellIndexVector::from_bits(y));
    const auto rxy = round_update(s, BellIndexVector::from_bits(x ^ y));
    EXPECT_EQ(rxy.t, rx.t != ry.t);
    EXPECT_EQ(rxy.x_next.to_bits(), rx.x_next.to_bits() ^ ry.x_next.to_bits());
    EXPECT_EQ(rx.t, parity(s, x));
  }
}

TEST(RoundUpdate, DistinctInputsAgreeAboutHalfTheTime) {
  Rng rng(7);
  const std::size_t trials = 10000, m = 6;
  std::size_t equal = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    const auto s = BitString::random_nonzero(rng, 2 * m);
    const auto x = BitString::random_nonzero(rng, 2 * m);
    auto y = BitString::random_nonzero(rng, 2 * m);
    while (y == x) y = BitString::random_nonzero(rng, 2 * m);
    equal += round_update(s, BellIndexVector::from_bits(x)).t == round_update(s, BellIndexVector::from_bits(y)).t;
  }
  const double rate = static_cast<double>(equal) / static_cast<double>(trials);
  EXPECT_NEAR(rate, 0.5, 3.0 * std::sqrt(0.25 / static_cast<double>(trials)));
}

TEST(CollisionBound, DistinctVectorsRarelyShareAllParities) {
  for (auto [n, r] : std::vector<std::pair<std::size_t, std::size_t>>{{6, 3}, {8, 5}, {10, 7}}) {
    Rng pick(100 + n);
    const SourceDist uniform({0.25, 0.25, 0.25, 0.25});
    const auto x = BellIndexVector::sample(uniform, n, pick);
    auto y = BellIndexVector::sample(uniform, n, pick);
    while (y == x) y = BellIndexVector::sample(uniform, n, pick);
    const std::size_t reps = 10000;
    std::size_t bad = 0;
    for (std::size_t k = 0; k < reps; ++k) {
      Rng rng = make_rng(n, k);
      const auto sel = draw_selectors(rng, n, r);
      const auto ox = apply_rounds(sel, x);
      const auto oy = apply_rounds(sel, y);
      bad += ox.parities == oy.parities && ox.final_vector != oy.final_vector;
    }
    const double bound = std::exp2(-static_cast<double>(r));
    const double sigma = std::sqrt(bound * (1 - bound) / static_cast<double>(reps));
    EXPECT_LE(static_cast<double>(bad) / static_cast<double>(reps), bound + 3 * sigma) << n;
  }
}

TEST(PlanYield, Examples) {
  const auto p0 = plan_yield(SourceDist({1, 0, 0, 0}), 10);
  EXPECT_EQ(p0.r, 5u);
  EXPECT_EQ(p0.m, 5u);
  EXPECT_DOUBLE_EQ(p0.rate_guarantee(), 0.5);
  const SourceDist w(kWerner09);
  const auto p100 = plan_yield(w, 100);
  EXPECT_EQ(p100.r, 81u);
  EXPECT_EQ(p100.m, 19u);
  EXPECT_GE(p100.rate_guarantee(), (1 - w.entropy()) / 2);
  EXPECT_NEAR(p100.delta, (1 - w.entropy()) / 4, 1e-15);
  const auto p16 = plan_yield(w, 16);
  EXPECT_EQ(p16.r, 13u);
  EXPECT_NEAR(p16.epsilon, 0.0931, 5e-5);
  EXPECT_THROW_CODE(plan_yield(SourceDist({0.25, 0.25, 0.25, 0.25}), 10), invalid_argument);
  EXPECT_THROW_CODE(plan_yield(w, 3), invalid_argument);
  // Entropy exactly 1.
  EXPECT_THROW_CODE(plan_yield(SourceDist({0.5, 0.5, 0, 0}), 10), invalid_argument);
}

TEST(FailureBound, Examples) {
  const SourceDist w(kWerner09);
  const auto plan = plan_yield(w, 16);
  const auto b = failure_bound(w, plan, 0.1);
  EXPECT_NEAR(std::log2(b.collision_term), 16 * (w.entropy() + plan.epsilon) - 13, 1e-12);
  EXPECT_NEAR(std::log2(b.collision_term), -1.47, 0.01);
  EXPECT_GE(failure_bound(w, plan, 1.0).bound, 1.0);
  const auto huge = make_plan(w, 2000, plan.epsilon, 1999);
  EXPECT_NEAR(failure_bound(w, huge, 0.3).bound, 0.3, 1e-12);
  EXPECT_THROW_CODE(failure_bound(w, plan, 1.5), invalid_argument);
}

TEST(SingleToRate, Examples) {
  EXPECT_NEAR(single_to_rate(1, 1e-9), 0.5, 1e-9);
  EXPECT_NEAR(single_to_rate(3, 0.6275), 0.0621, 5e-5);
  EXPECT_THROW_CODE(single_to_rate(1, 1.0), invalid_argument);
  EXPECT_THROW_CODE(single_to_rate(0, 0.5), invalid_argument);
}

TEST(TypicalityMiss, Examples) {
  EXPECT_EQ(typicality_miss_estimate(SourceDist({0.25, 0.25, 0.25, 0.25}), 12, 0.01, 500, 1).hits, 0u);
  EXPECT_EQ(typicality_miss_estimate(SourceDist({1, 0, 0, 0}), 12, 0.01, 500, 1).hits, 0u);
  EXPECT_THROW_CODE(typicality_miss_estimate(SourceDist(kWerner09), 8, 0.1, 99, 1), invalid_argument);
}

TEST(TypicalityMiss, DecreasesWithN) {
  const SourceDist w(kWerner09);
  const double eps = 0.25 * (1 - w.entropy());
  std::vector<ProportionEstimate> q;
  for (std::size_t n : {8u, 16u, 32u, 64u}) q.push_back(typicality_miss_estimate(w, n, eps, 4000, 3));
  for (std::size_t k = 1; k < q.size(); ++k) EXPECT_LE(q[k].lower, q[k - 1].upper) << k;
  EXPECT_LT(q.back().estimate, q.front().estimate);
}

TEST(WilsonInterval, ContainsEstimate) {
  const auto w = wilson_interval(30, 100);
  EXPECT_DOUBLE_EQ(w.estimate, 0.3);
  EXPECT_LT(w.lower, 0.3);
  EXPECT_GT(w.upper, 0.3);
  EXPECT_NEAR(w.lower, 0.2189, 1e-3);
  EXPECT_NEAR(w.upper, 0.3958, 1e-3);
  EXPECT_EQ(wilson_interval(0, 100).lower, 0.0);
}

TEST(HashingTrial, DeterministicSourceAlwaysSucceeds) {
  const SourceDist det({1, 0, 0, 0});
  const auto plan = plan_yield(det, 12);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto r = run_hashing_trial(det, plan, s);
    EXPECT_TRUE(r.success);
    EXPECT_TRUE(r.decoded_vector.all_phi_plus());
    EXPECT_EQ(r.decoded_vector.size(), plan.m);
  }
}

TEST(HashingTrial, PlanMustMatchSource) {
  const auto plan = plan_yield(SourceDist({1, 0, 0, 0}), 12);
  EXPECT_THROW_CODE(run_hashing_trial(SourceDist(kWerner09), plan, 0), invalid_argument);
}

TEST(HashingTrial, BudgetOverrunCountsAsFailure) {
  const SourceDist w(kWerner09);
  const auto plan = make_plan(w, 20, 0.5, 10);
  const auto r = run_hashing_trial(w, plan, 1, DecoderOptions{50});
  EXPECT_TRUE(r.budget_exceeded);
  EXPECT_FALSE(r.success);
}

TEST(HashingTrial, SuccessMeansCorrectionsGiveFidelityOne) {
  const SourceDist src({0.97, 0.01, 0.01, 0.01});
  const auto plan = make_plan(src, 20, 0.6, 19);
  std::size_t successes = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto r = run_hashing_trial(src, plan, s);
    if (r.success) {
      ++successes;
      EXPECT_EQ(r.decoded_vector, r.true_final);
      EXPECT_DOUBLE_EQ(corrected_fidelity(r.decoded_vector, r.true_final), 1.0);
      EXPECT_TRUE(apply_corrections(r.decoded_vector, r.true_final).all_phi_plus());
    }
  }
  EXPECT_GT(successes, 40u);
}

TEST(HashingTrial, DecoderFindsTypicalTruth) {
  // Whenever the truth is typical it is among the consistent candidates.
  const SourceDist w(kWerner09);
  const auto plan = make_plan(w, 20, 0.25 * (1 - w.entropy()), 16);
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto r = run_hashing_trial(w, plan, s);
    if (r.typicality_of_truth) {
      EXPECT_GE(r.parities_matched, 1u);
    }
    if (r.parities_matched == 1 && r.typicality_of_truth) {
      EXPECT_TRUE(r.success);
    }
  }
}

TEST(SimulateHashing, EmpiricalFailureWithinBound) {
  const SourceDist src({0.97, 0.01, 0.01, 0.01});
  const auto plan = make_plan(src, 20, 0.6, 19);
  const auto run = simulate_hashing(src, plan, 400, 11, 4000);
  const auto& s = run.summary;
  EXPECT_LT(s.bound.bound, 0.5);
  EXPECT_LE(s.failure_rate, s.bound.bound + 3 * s.failure_sigma);
  EXPECT_EQ(s.budget_exceeded, 0u);
}

TEST(SimulateHashing, DefaultPlanScenarioWithinBound) {
  const SourceDist w(kWerner09);
  for (std::size_t n : {16u, 20u}) {
    const auto plan = plan_yield(w, n);
    const auto s = simulate_hashing(w, plan, 200, 5, 2000).summary;
    EXPECT_LE(s.failure_rate, s.bound.bound + 3 * s.failure_sigma) << n;
    EXPECT_GE(s.rate, (1 - w.entropy()) / 2);
  }
}

TEST(SimulateHashing, IndependentOfWorkerCount) {
  const SourceDist w(kWerner09);
  const auto plan = plan_yield(w, 20);
  const auto a = simulate_hashing(w, plan, 24, 99, 200, 1);
  const auto b = simulate_hashing(w, plan, 24, 99, 200, 3);
  ASSERT_EQ(a.trials.size(), b.trials.size());
  for (std::size_t t = 0; t < a.trials.size(); ++t) {
    EXPECT_EQ(a.trials[t].true_vector, b.trials[t].true_vector);
    EXPECT_EQ(a.trials[t].success, b.trials[t].success);
    EXPECT_EQ(a.trials[t].candidates_visited, b.trials[t].candidates_visited);
  }
  EXPECT_EQ(a.summary.failures, b.summary.failures);
  EXPECT_EQ(a.summary.q_hat.hits, b.summary.q_hat.hits);
}
