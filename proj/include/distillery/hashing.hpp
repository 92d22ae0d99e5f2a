#pragma once

// Classical simulation of the hashing protocol on Bell-diagonal sources.
//
// A Bell-diagonal pair is fully described by its Bell label, so n copies are
// a random string over {0,1,2,3} and the protocol acts on that string
// exactly. Label x = 2*b + a, where a is the amplitude bit (set for Psi+/-)
// and b the phase bit (set for Phi-/Psi-). In the flat 2m-bit encoding pair i
// occupies bits 2i (= b_i) and 2i+1 (= a_i).

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>
#include <vector>

#include "distillery/bitstring.hpp"
#include "distillery/error.hpp"
#include "distillery/random.hpp"

namespace distillery {

inline double shannon_entropy(const std::array<double, 4>& p) {
  double sum = 0.0;
  for (double v : p) {
    require(v >= 0.0 && std::isfinite(v), ErrorCode::invalid_distribution, "probabilities must be non-negative");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= 1e-12, ErrorCode::invalid_distribution, "probabilities must sum to 1");
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return std::max(0.0, h);
}

/// I.i.d. source of Bell labels.
class SourceDist {
 public:
  explicit SourceDist(std::array<double, 4> p) : p_(p), h_(shannon_entropy(p)) {
    for (std::size_t x = 0; x < 4; ++x)
      cost_[x] = p_[x] > 0.0 ? -std::log2(p_[x]) : std::numeric_limits<double>::infinity();
  }

  const std::array<double, 4>& p() const noexcept { return p_; }
  double entropy() const noexcept { return h_; }
  /// -log2 P(x); infinite for impossible symbols.
  double cost(std::size_t x) const { return cost_.at(x); }

  std::uint8_t sample(Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    for (std::uint8_t x = 0; x < 3; ++x) {
      acc += p_[x];
      if (u < acc) return x;
    }
    for (std::uint8_t x = 4; x-- > 0;)
      if (p_[x] > 0.0) return x;
    return 0;
  }

 private:
  std::array<double, 4> p_;
  double h_;
  std::array<double, 4> cost_{};
};

/// String of Bell labels.
class BellIndexVector {
 public:
  BellIndexVector() = default;
  explicit BellIndexVector(std::vector<std::uint8_t> entries) : entries_(std::move(entries)) {
    for (auto e : entries_) require(e < 4, ErrorCode::invalid_argument, "Bell label must be 0..3");
  }

  static BellIndexVector from_bits(const BitString& bits) {
    require(bits.size() % 2 == 0, ErrorCode::invalid_argument, "bit encoding needs an even length");
    std::vector<std::uint8_t> e(bits.size() / 2);
    for (std::size_t i = 0; i < e.size(); ++i)
      e[i] = static_cast<std::uint8_t>((bits.get(2 * i) ? 2 : 0) | (bits.get(2 * i + 1) ? 1 : 0));
    return BellIndexVector(std::move(e));
  }

  static BellIndexVector sample(const SourceDist& src, std::size_t n, Rng& rng) {
    std::vector<std::uint8_t> e(n);
    for (auto& x : e) x = src.sample(rng);
    return BellIndexVector(std::move(e));
  }

  BitString to_bits() const {
    BitString bits(2 * entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      bits.set(2 * i, (entries_[i] & 2U) != 0);
      bits.set(2 * i + 1, (entries_[i] & 1U) != 0);
    }
    return bits;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<std::uint8_t>& entries() const noexcept { return entries_; }
  std::uint8_t operator[](std::size_t i) const { return entries_.at(i); }

  bool all_phi_plus() const {
    return std::all_of(entries_.begin(), entries_.end(), [](std::uint8_t e) { return e == 0; });
  }

  std::string to_string() const {
    std::string s;
    for (auto e : entries_) s.push_back(static_cast<char>('0' + e));
    return s;
  }

  friend bool operator==(const BellIndexVector&, const BellIndexVector&) = default;

 private:
  std::vector<std::uint8_t> entries_;
};

/// Sum of -log2 P(x_j); infinite if some symbol is impossible.
inline double sequence_cost(const BellIndexVector& x, const SourceDist& src) {
  double c = 0.0;
  for (auto e : x.entries()) c += src.cost(e);
  return c;
}

inline constexpr double kTypicalityGuard = 1e-12;

/// Closed window |-(1/n) sum log2 P(x_j) - H| <= epsilon.
inline bool is_typical(const BellIndexVector& x, const SourceDist& src, double epsilon) {
  require(epsilon > 0.0, ErrorCode::invalid_argument, "epsilon must be positive");
  require(x.size() >= 1, ErrorCode::invalid_argument, "typicality needs a non-empty string");
  const double c = sequence_cost(x, src);
  if (!std::isfinite(c)) return false;
  return std::abs(c / static_cast<double>(x.size()) - src.entropy()) <= epsilon + kTypicalityGuard;
}

inline bool parity(const BitString& s, const BitString& x) {
  require(s.size() == x.size(), ErrorCode::dimension_mismatch, "parity needs equal lengths");
  return s.dot(x);
}

struct RoundResult {
  bool t;
  BellIndexVector x_next;
};

/// One hashing round for selector s over m pairs. Every pair with a
/// non-zero selector is first rotated so the selected combination of its
/// bits sits in the amplitude slot (b only: swap a and b; both: a ^= b).
/// Bilateral XOR then folds every selected pair into the lowest selected
/// pair i0 (a_i0 ^= a_i, b_i ^= b_i0); pair i0 is measured, giving
/// t = a_i0 = s.x, and removed. Linear over GF(2) in x.
inline RoundResult round_update(const BitString& s, const BellIndexVector& x) {
  const std::size_t m = x.size();
  require(s.size() == 2 * m, ErrorCode::dimension_mismatch, "selector must have 2m bits");
  require(!s.is_zero(), ErrorCode::invalid_argument, "selector must be non-zero");

  std::vector<std::uint8_t> a(m), b(m);
  for (std::size_t i = 0; i < m; ++i) {
    b[i] = (x[i] >> 1) & 1U;
    a[i] = x[i] & 1U;
  }
  std::size_t i0 = m;
  for (std::size_t i = 0; i < m; ++i) {
    const bool sel_b = s.get(2 * i);
    const bool sel_a = s.get(2 * i + 1);
    if (!sel_a && !sel_b) continue;
    if (sel_b && !sel_a) std::swap(a[i], b[i]);
    if (sel_b && sel_a) a[i] ^= b[i];
    if (i0 == m) {
      i0 = i;
    } else {
      a[i0] ^= a[i];
      b[i] ^= b[i0];
    }
  }
  std::vector<std::uint8_t> next;
  next.reserve(m - 1);
  for (std::size_t i = 0; i < m; ++i)
    if (i != i0) next.push_back(static_cast<std::uint8_t>((b[i] << 1) | a[i]));
  return {a[i0] != 0, BellIndexVector(std::move(next))};
}

struct RoundsOutcome {
  BitString parities;
  BellIndexVector final_vector;
};

/// Runs the selectors in order; selector k must have 2(n-k) bits.
inline RoundsOutcome apply_rounds(const std::vector<BitString>& selectors, BellIndexVector x) {
  RoundsOutcome out{BitString(selectors.size()), {}};
  for (std::size_t k = 0; k < selectors.size(); ++k) {
    auto r = round_update(selectors[k], x);
    out.parities.set(k, r.t);
    x = std::move(r.x_next);
  }
  out.final_vector = std::move(x);
  return out;
}

/// Independent uniform non-zero selectors of lengths 2n, 2(n-1), ...
inline std::vector<BitString> draw_selectors(Rng& rng, std::size_t n, std::size_t rounds) {
  require(rounds < n, ErrorCode::invalid_argument, "need fewer rounds than pairs");
  std::vector<BitString> s;
  s.reserve(rounds);
  for (std::size_t k = 0; k < rounds; ++k) s.push_back(BitString::random_nonzero(rng, 2 * (n - k)));
  return s;
}

// ---------------------------------------------------------------------------
// Plans and bounds

struct YieldPlan {
  std::size_t n;
  double epsilon;
  std::size_t r;
  std::size_t m;
  double h;
  double rate;   ///< design rate R
  double delta;  ///< 1 - h - R - epsilon
  double rate_guarantee() const noexcept { return static_cast<double>(m) / static_cast<double>(n); }
};

/// R = (1-h)/2, epsilon = (1-h)/4, r = floor(n(1+h)/2).
inline YieldPlan plan_yield(const SourceDist& src, std::size_t n) {
  const double h = src.entropy();
  require(h < 1.0, ErrorCode::invalid_argument, "hashing needs source entropy < 1 (got " + std::to_string(h) + ")");
  require(n >= 4, ErrorCode::invalid_argument, "hashing needs n >= 4");
  const double rate = 0.5 * (1.0 - h);
  const double eps = 0.25 * (1.0 - h);
  const auto r = static_cast<std::size_t>(std::floor(0.5 * static_cast<double>(n) * (1.0 + h)));
  return {n, eps, r, n - r, h, rate, 1.0 - h - rate - eps};
}

/// Plan with explicit epsilon and round count.
inline YieldPlan make_plan(const SourceDist& src, std::size_t n, double epsilon, std::size_t r) {
  const double h = src.entropy();
  require(h < 1.0, ErrorCode::invalid_argument, "hashing needs source entropy < 1");
  require(n >= 2 && r >= 1 && r < n, ErrorCode::invalid_argument, "need 1 <= r < n");
  require(epsilon > 0.0, ErrorCode::invalid_argument, "epsilon must be positive");
  const double rate = static_cast<double>(n - r) / static_cast<double>(n);
  return {n, epsilon, r, n - r, h, rate, 1.0 - h - rate - epsilon};
}

struct FailureBound {
  double bound;           ///< q + 2^{nH + n eps - r}
  double collision_term;  ///< 2^{nH + n eps - r}
};

inline FailureBound failure_bound(const SourceDist& src, const YieldPlan& plan, double q_estimate) {
  require(q_estimate >= 0.0 && q_estimate <= 1.0, ErrorCode::invalid_argument, "q estimate must lie in [0, 1]");
  const double n = static_cast<double>(plan.n);
  const double collision = std::exp2(n * src.entropy() + n * plan.epsilon - static_cast<double>(plan.r));
  return {q_estimate + collision, collision};
}

/// Rate (1-h)/(2N) from N copies per single-distillation run followed by
/// hashing at entropy h.
inline double single_to_rate(std::size_t copies, double h) {
  require(copies >= 1, ErrorCode::invalid_argument, "N must be >= 1");
  require(h > 0.0 && h < 1.0, ErrorCode::invalid_argument, "h must lie in (0, 1)");
  return (1.0 - h) / (2.0 * static_cast<double>(copies));
}

// ---------------------------------------------------------------------------
// Monte Carlo estimates

struct ProportionEstimate {
  std::size_t trials = 0;
  std::size_t hits = 0;
  double estimate = 0.0;
  double lower = 0.0;  ///< Wilson 95% interval
  double upper = 0.0;
  double radius() const noexcept { return 0.5 * (upper - lower); }
};

inline ProportionEstimate wilson_interval(std::size_t hits, std::size_t trials) {
  require(trials >= 1 && hits <= trials, ErrorCode::invalid_argument, "need 0 <= hits <= trials, trials >= 1");
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(hits) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (phat + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
  const double lower = hits == 0 ? 0.0 : std::max(0.0, centre - half);
  const double upper = hits == trials ? 1.0 : std::min(1.0, centre + half);
  return {trials, hits, phat, lower, upper};
}

/// Monte Carlo estimate of q = P[X not in A_{n,eps}].
inline ProportionEstimate typicality_miss_estimate(const SourceDist& src, std::size_t n, double epsilon,
                                                   std::size_t trials, std::uint64_t seed) {
  require(trials >= 100, ErrorCode::invalid_argument, "need at least 100 trials");
  require(n >= 1, ErrorCode::invalid_argument, "n must be >= 1");
  std::size_t misses = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, t);
    if (!is_typical(BellIndexVector::sample(src, n, rng), src, epsilon)) ++misses;
  }
  return wilson_interval(misses, trials);
}

// ---------------------------------------------------------------------------
// Trials

struct DecoderOptions {
  std::size_t max_visits = 1'000'000;
};

struct HashingTrialResult {
  BellIndexVector true_vector;     ///< initial labels
  BellIndexVector true_final;      ///< labels of the surviving m pairs
  BellIndexVector decoded_vector;  ///< decoder's guess of true_final
  BitString parity_bits;
  bool success = false;
  bool typicality_of_truth = false;
  std::size_t parities_matched = 0;  ///< typical candidates consistent with all parities
  std::size_t candidates_visited = 0;
  bool budget_exceeded = false;
};

namespace detail {

/// Depth-first enumeration of A_{n,eps}, pruned on the cumulative cost
/// window, filtering by the parity vector through the linear round map.
class TypicalDecoder {
 public:
  TypicalDecoder(const SourceDist& src, const YieldPlan& plan, const std::vector<BitString>& selectors,
                 const BitString& target, const DecoderOptions& opts)
      : src_(src), n_(plan.n), entropy_(src.entropy()), epsilon_(plan.epsilon), selectors_(selectors),
        target_(target), opts_(opts) {
    lower_ = static_cast<double>(n_) * (src.entropy() - plan.epsilon) - 1e-9;
    upper_ = static_cast<double>(n_) * (src.entropy() + plan.epsilon) + 1e-9;
    for (std::uint8_t x = 0; x < 4; ++x)
      if (src.p()[x] > 0.0) symbols_.push_back(x);
    std::sort(symbols_.begin(), symbols_.end(), [&](auto a, auto b) { return src.cost(a) < src.cost(b); });
    min_cost_ = src.cost(symbols_.front());
    max_cost_ = src.cost(symbols_.back());

    // Parity contribution of symbol x at position i: rounds are linear, so
    // it is the XOR of the responses to the two unit bit vectors.
    std::vector<BitString> unit_response(2 * n_);
    for (std::size_t bit = 0; bit < 2 * n_; ++bit) {
      BitString e(2 * n_);
      e.set(bit, true);
      unit_response[bit] = apply_rounds(selectors_, BellIndexVector::from_bits(e)).parities;
    }
    contribution_.assign(n_, std::array<BitString, 4>{});
    for (std::size_t i = 0; i < n_; ++i)
      for (std::uint8_t x = 0; x < 4; ++x) {
        BitString c(selectors_.size());
        if (x & 2U) c ^= unit_response[2 * i];
        if (x & 1U) c ^= unit_response[2 * i + 1];
        contribution_[i][x] = std::move(c);
      }
    current_.assign(n_, 0);
  }

  void run() {
    BitString acc(selectors_.size());
    descend(0, 0.0, acc);
  }

  std::size_t visits() const noexcept { return visits_; }
  bool budget_exceeded() const noexcept { return exceeded_; }
  const std::vector<BellIndexVector>& matches() const noexcept { return matches_; }

 private:
  void descend(std::size_t pos, double cost, const BitString& acc) {
    if (exceeded_) return;
    if (++visits_ > opts_.max_visits) {
      exceeded_ = true;
      return;
    }
    const auto remaining = static_cast<double>(n_ - pos);
    if (cost + remaining * min_cost_ > upper_ || cost + remaining * max_cost_ < lower_) return;
    if (pos == n_) {
      const bool typical = std::abs(cost / static_cast<double>(n_) - entropy_) <= epsilon_ + kTypicalityGuard;
      if (typical && acc == target_) matches_.emplace_back(current_);
      return;
    }
    for (auto x : symbols_) {
      current_[pos] = x;
      descend(pos + 1, cost + src_.cost(x), acc ^ contribution_[pos][x]);
      if (exceeded_) return;
    }
  }

  const SourceDist& src_;
  std::size_t n_;
  double entropy_;
  double epsilon_;
  const std::vector<BitString>& selectors_;
  const BitString& target_;
  DecoderOptions opts_;
  double lower_ = 0.0;
  double upper_ = 0.0;
  double min_cost_ = 0.0;
  double max_cost_ = 0.0;
  std::vector<std::uint8_t> symbols_;
  std::vector<std::array<BitString, 4>> contribution_;
  std::vector<std::uint8_t> current_;
  std::vector<BellIndexVector> matches_;
  std::size_t visits_ = 0;
  bool exceeded_ = false;
};

}  // namespace detail

/// One protocol run: sample the labels, measure r parities, decode by
/// searching the typical set for consistent candidates. Success requires at
/// least one consistent candidate and every consistent candidate to predict
/// the true final labels. With no consistent candidate the decoder falls
/// back to the most likely sequence.
inline HashingTrialResult run_hashing_trial(const SourceDist& src, const YieldPlan& plan, std::uint64_t seed,
                                            const DecoderOptions& opts = {}) {
  require(std::abs(plan.h - src.entropy()) <= 1e-12, ErrorCode::invalid_argument, "plan was built for another source");
  Rng rng(seed);
  HashingTrialResult res;
  res.true_vector = BellIndexVector::sample(src, plan.n, rng);
  const auto selectors = draw_selectors(rng, plan.n, plan.r);
  auto truth = apply_rounds(selectors, res.true_vector);
  res.true_final = truth.final_vector;
  res.parity_bits = truth.parities;
  res.typicality_of_truth = is_typical(res.true_vector, src, plan.epsilon);

  detail::TypicalDecoder decoder(src, plan, selectors, res.parity_bits, opts);
  decoder.run();
  res.candidates_visited = decoder.visits();
  res.budget_exceeded = decoder.budget_exceeded();
  res.parities_matched = decoder.matches().size();

  if (!res.budget_exceeded && !decoder.matches().empty()) {
    bool all_agree = true;
    for (std::size_t k = 0; k < decoder.matches().size(); ++k) {
      auto final_k = apply_rounds(selectors, decoder.matches()[k]).final_vector;
      if (k == 0) res.decoded_vector = final_k;
      if (final_k != res.true_final) all_agree = false;
    }
    res.success = all_agree;
  } else {
    const auto best = static_cast<std::uint8_t>(std::max_element(src.p().begin(), src.p().end()) - src.p().begin());
    res.decoded_vector = apply_rounds(selectors, BellIndexVector(std::vector<std::uint8_t>(plan.n, best))).final_vector;
    res.success = !res.budget_exceeded && res.decoded_vector == res.true_final;
  }
  return res;
}

/// Labels left after the Pauli corrections for `decoded` are applied to the
/// pairs whose true labels are `truth`. Bell labels compose by XOR under
/// local Paulis, so a correct decode leaves every pair in Phi+.
inline BellIndexVector apply_corrections(const BellIndexVector& decoded, const BellIndexVector& truth) {
  require(decoded.size() == truth.size(), ErrorCode::dimension_mismatch, "vectors differ in length");
  std::vector<std::uint8_t> out(truth.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(truth[i] ^ decoded[i]);
  return BellIndexVector(std::move(out));
}

/// Fidelity of the corrected pure Bell product with Phi+^{(x)m}.
inline double corrected_fidelity(const BellIndexVector& decoded, const BellIndexVector& truth) {
  return apply_corrections(decoded, truth).all_phi_plus() ? 1.0 : 0.0;
}

struct HashingSummary {
  std::size_t trials = 0;
  std::size_t failures = 0;
  std::size_t budget_exceeded = 0;
  double failure_rate = 0.0;
  double failure_sigma = 0.0;  ///< binomial standard error of failure_rate
  ProportionEstimate q_hat;
  FailureBound bound;  ///< evaluated at the upper end of q_hat's interval
  double rate = 0.0;   ///< m/n
};

struct HashingRun {
  std::vector<HashingTrialResult> trials;
  HashingSummary summary;
};

/// Runs `trials` independent trials (trial t uses sub-seed (seed, t)) on
/// `workers` threads and estimates q from `q_trials` extra samples.
inline HashingRun simulate_hashing(const SourceDist& src, const YieldPlan& plan, std::size_t trials,
                                   std::uint64_t seed, std::size_t q_trials = 10000, std::size_t workers = 1,
                                   const DecoderOptions& opts = {}) {
  require(trials >= 1, ErrorCode::invalid_argument, "need at least one trial");
  HashingRun run;
  run.trials.resize(trials);
  workers = std::clamp<std::size_t>(workers, 1, trials);
  auto work = [&](std::size_t first) {
    for (std::size_t t = first; t < trials; t += workers) run.trials[t] = run_hashing_trial(src, plan, sub_seed(seed, t), opts);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::exception_ptr> failures(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          try {
            work(w);
          } catch (...) {
            failures[w] = std::current_exception();
          }
        });
    }
    for (const auto& f : failures)
      if (f) std::rethrow_exception(f);
  }

  auto& s = run.summary;
  s.trials = trials;
  for (const auto& r : run.trials) {
    if (!r.success) ++s.failures;
    if (r.budget_exceeded) ++s.budget_exceeded;
  }
  s.failure_rate = static_cast<double>(s.failures) / static_cast<double>(trials);
  s.failure_sigma = std::sqrt(s.failure_rate * (1.0 - s.failure_rate) / static_cast<double>(trials));
  s.q_hat = typicality_miss_estimate(src, plan.n, plan.epsilon, std::max<std::size_t>(q_trials, 100),
                                     splitmix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL));
  s.bound = failure_bound(src, plan, s.q_hat.upper);
  s.rate = plan.rate_guarantee();
  return run;
}

}  // namespace distillery
