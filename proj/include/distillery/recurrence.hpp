#pragma once

// Two-copy recurrence purification of Werner states and its iteration.

#include <cmath>
#include <vector>

#include "distillery/bell.hpp"
#include "distillery/locc.hpp"

namespace distillery {

inline void require_unit_interval(double f, const char* what) {
  require(f >= 0.0 && f <= 1.0, ErrorCode::invalid_argument, std::string(what) + " must lie in [0, 1]");
}

/// Output fidelity of one recurrence step on W_F (x) W_F:
/// (10F^2 - 2F + 1) / (8F^2 - 4F + 5).
inline double g_map(double f) {
  require_unit_interval(f, "fidelity");
  return (10.0 * f * f - 2.0 * f + 1.0) / (8.0 * f * f - 4.0 * f + 5.0);
}

/// Success probability (8F^2 - 4F + 5) / 18 of the single-outcome step.
inline double step_success_prob(double f) {
  require_unit_interval(f, "fidelity");
  return (8.0 * f * f - 4.0 * f + 5.0) / 18.0;
}

inline constexpr double kMinStepProb = 5.0 / 18.0;

/// K = |0><00| + |1><11| on one party's two qubits.
inline Matrix recurrence_kraus() {
  Matrix k = Matrix::Zero(2, 4);
  k(0, 0) = 1.0;
  k(1, 3) = 1.0;
  return k;
}

struct RecurrenceStep {
  BellProbs probs;
  double success_prob;
};

/// One exact step on a two-pair state (local dimension 4 per side, pairs in
/// copy order): filter with K (x) K, normalize, twirl.
inline RecurrenceStep recurrence_step_exact(const DensityOperator& two_pairs) {
  require(two_pairs.dim_a() == 4 && two_pairs.dim_b() == 4, ErrorCode::dimension_mismatch,
          "recurrence step needs two qubit pairs (local dimension 4 per side)");
  const LocalFilter filter(recurrence_kraus(), recurrence_kraus());
  const auto outcome = apply_selective(filter, two_pairs);
  const auto twirled = twirl(outcome.normalized(), TwirlMode::exact);
  return {bell_probs_from_density(twirled), outcome.probability};
}

struct RecurrenceTrace {
  std::vector<double> fidelities;  ///< F_0 .. F_N
  std::vector<double> step_probs;  ///< p_1 .. p_N
  std::size_t pairs_consumed_exponent = 0;  ///< N: 2^N input pairs per output pair
  double total_success_prob_lower_bound = 1.0;  ///< product of step_probs

  std::size_t steps() const noexcept { return step_probs.size(); }
  double final_fidelity() const { return fidelities.back(); }
  /// (5/18)^N, the per-step worst case.
  double worst_case_bound() const { return std::pow(kMinStepProb, static_cast<double>(steps())); }
};

/// Thrown when max_steps runs out; carries the partial trace.
class StepsExhausted : public Error {
 public:
  explicit StepsExhausted(RecurrenceTrace trace)
      : Error(ErrorCode::steps_exhausted, "max_steps exhausted at F_N = " + std::to_string(trace.final_fidelity())),
        trace_(std::move(trace)) {}
  const RecurrenceTrace& trace() const noexcept { return trace_; }

 private:
  RecurrenceTrace trace_;
};

/// Iterates F -> g(F) from a Werner fidelity until F_N >= f_target.
inline RecurrenceTrace iterate_to_target(double f0, double f_target, std::size_t max_steps) {
  require(f0 > 0.5 && f0 <= 1.0, ErrorCode::invalid_argument, "F0 must lie in (1/2, 1]");
  require(f_target < 1.0 || f0 >= f_target, ErrorCode::unreachable_target,
          "target fidelity 1 is unreachable: g(F) < 1 for every F < 1");
  RecurrenceTrace trace;
  trace.fidelities.push_back(f0);
  double f = f0;
  while (f < f_target) {
    if (trace.steps() >= max_steps) throw StepsExhausted(std::move(trace));
    const double p = step_success_prob(f);
    f = g_map(f);
    trace.fidelities.push_back(f);
    trace.step_probs.push_back(p);
    trace.total_success_prob_lower_bound *= p;
    trace.pairs_consumed_exponent = trace.steps();
  }
  return trace;
}

/// Local basis change to the optimal maximally entangled state, twirl, then
/// iterate the recurrence map.
inline RecurrenceTrace distill_two_qubit(const DensityOperator& rho, double f_target, std::size_t max_steps) {
  require_two_qubit(rho);
  const auto fef = fully_entangled_fraction_with_state(rho);
  require(fef.value > 0.5 + tol::eigen, ErrorCode::not_distillable,
          "fully entangled fraction " + std::to_string(fef.value) + " <= 1/2: not recurrence-distillable");
  const auto [u, v] = aligning_unitaries(fef.optimal_state);
  const auto twirled = twirl(local_rotate(rho, u, v), TwirlMode::exact);
  return iterate_to_target(bell_probs_from_density(twirled).fidelity(), f_target, max_steps);
}

}  // namespace distillery
