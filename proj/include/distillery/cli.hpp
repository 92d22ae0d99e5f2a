#pragma once

// Command-line front end. run_cli() is the whole program; tools/distillery.cpp
// only forwards argv and the standard streams.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "distillery/bell.hpp"
#include "distillery/hashing.hpp"
#include "distillery/json_io.hpp"
#include "distillery/locc.hpp"
#include "distillery/qstate.hpp"
#include "distillery/recurrence.hpp"

namespace distillery::cli {

inline std::string csv_real(double v) { return format_real(v, 12); }

/// Parsed options, one block per subcommand. seed defaults to 0 everywhere.
struct RunConfig {
  std::string out_path;
  std::string in_path;
  std::uint64_t seed = 0;

  double fidelity = 0.0;
  std::array<double, 4> bell_p{1.0, 0.0, 0.0, 0.0};
  std::size_t d = 2;

  std::string twirl_mode = "exact";

  double f0 = 0.0;
  double f_target = 0.0;
  std::size_t max_steps = 1000;

  std::size_t n = 0;
  std::optional<double> epsilon;
  std::optional<std::size_t> rounds;
  std::size_t trials = 0;
  std::string format = "csv";
  std::string summary_path;
  std::size_t q_trials = 10000;
  std::size_t workers = 1;
  std::size_t max_visits = 1'000'000;

  double omega = 0.0;
  std::size_t search_trials = 0;
};

inline void require_readable(const std::string& path) {
  require(!path.empty(), ErrorCode::invalid_argument, "missing --in path");
  require(std::filesystem::is_regular_file(path), ErrorCode::io_error, "input file not found: " + path);
}

inline void require_writable_parent(const std::string& path) {
  if (path.empty()) return;
  const auto parent = std::filesystem::absolute(path).parent_path();
  require(std::filesystem::is_directory(parent), ErrorCode::io_error, "output directory does not exist: " + parent.string());
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty())
    out << text;
  else
    write_text_file(path, text);
}

// ---------------------------------------------------------------------------
// Commands

inline std::string cmd_state(const std::string& kind, const RunConfig& cfg) {
  if (kind == "werner") return dump_json(to_json(werner(cfg.fidelity))) + "\n";
  if (kind == "bell") return dump_json(to_json(density_from_bell_probs(BellProbs(cfg.bell_p)))) + "\n";
  if (kind == "psiplus") return dump_json(to_json(max_entangled(cfg.d).projector())) + "\n";
  require_readable(cfg.in_path);
  return dump_json(to_json(read_state_file(cfg.in_path))) + "\n";
}

inline std::string cmd_check(const RunConfig& cfg) {
  require_readable(cfg.in_path);
  const auto rho = read_state_file(cfg.in_path);
  Json j;
  j["dim_a"] = rho.dim_a();
  j["dim_b"] = rho.dim_b();
  const bool two_qubit = rho.dim_a() == 2 && rho.dim_b() == 2;
  j["two_qubit"] = two_qubit;
  if (two_qubit) {
    const auto diag = two_qubit_diagnostics(rho);
    j["ppt_min_eigenvalue"] = diag.ppt_min_eigenvalue;
    j["fully_entangled_fraction"] = diag.fully_entangled_fraction;
    j["fidelity_phi_plus"] = fidelity_pure(bell_state(0), rho);
    j["entangled"] = diag.entangled;
  } else {
    const RealVector spectrum = hermitian_eigenvalues(partial_transpose(rho));
    j["ppt_min_eigenvalue"] = spectrum.minCoeff();
    Json s = Json::array();
    for (Eigen::Index i = 0; i < spectrum.size(); ++i) s.push_back(spectrum(i));
    j["ppt_spectrum"] = std::move(s);
    // A negative partial transpose certifies entanglement; PPT is inconclusive here.
    if (spectrum.minCoeff() < -tol::eigen)
      j["entangled"] = true;
    else
      j["entangled"] = nullptr;
  }
  j["entropy"] = von_neumann_entropy(rho);
  return dump_json(j) + "\n";
}

inline std::string cmd_twirl(const RunConfig& cfg) {
  require_readable(cfg.in_path);
  require(cfg.twirl_mode == "exact" || cfg.twirl_mode == "sampled", ErrorCode::invalid_argument,
          "--mode must be exact or sampled");
  const auto mode = cfg.twirl_mode == "exact" ? TwirlMode::exact : TwirlMode::sampled;
  return dump_json(to_json(twirl(read_state_file(cfg.in_path), mode, cfg.seed))) + "\n";
}

inline std::string recurrence_csv(const RecurrenceTrace& trace) {
  std::ostringstream os;
  os << "step,F,p_step,p_cum_lower_bound\n";
  double cum = 1.0;
  for (std::size_t k = 0; k < trace.fidelities.size(); ++k) {
    const double p = k == 0 ? 1.0 : trace.step_probs[k - 1];
    cum *= p;
    os << k << ',' << csv_real(trace.fidelities[k]) << ',' << csv_real(p) << ',' << csv_real(cum) << '\n';
  }
  return os.str();
}

inline std::string cmd_recurrence(const RunConfig& cfg) {
  return recurrence_csv(iterate_to_target(cfg.f0, cfg.f_target, cfg.max_steps));
}

inline std::string hashing_csv(const HashingRun& run) {
  std::ostringstream os;
  os << "trial,success,typical,parities_matched,candidates_visited\n";
  for (std::size_t t = 0; t < run.trials.size(); ++t) {
    const auto& r = run.trials[t];
    os << t << ',' << (r.success ? 1 : 0) << ',' << (r.typicality_of_truth ? 1 : 0) << ',' << r.parities_matched << ','
       << r.candidates_visited << '\n';
  }
  return os.str();
}

inline Json hashing_summary_json(const YieldPlan& plan, const HashingSummary& s) {
  Json j;
  j["n"] = plan.n;
  j["r"] = plan.r;
  j["m"] = plan.m;
  j["epsilon"] = plan.epsilon;
  j["h"] = plan.h;
  j["trials"] = s.trials;
  j["failures"] = s.failures;
  j["budget_exceeded"] = s.budget_exceeded;
  j["failure_rate"] = s.failure_rate;
  j["failure_sigma"] = s.failure_sigma;
  j["q_hat"] = s.q_hat.estimate;
  j["q_hat_lower"] = s.q_hat.lower;
  j["q_hat_upper"] = s.q_hat.upper;
  j["collision_term"] = s.bound.collision_term;
  j["failure_bound"] = s.bound.bound;
  j["rate"] = s.rate;
  return j;
}

inline std::pair<std::string, std::string> cmd_hashing(const RunConfig& cfg) {
  require(cfg.format == "csv" || cfg.format == "json", ErrorCode::invalid_argument, "--out must be csv or json");
  require(cfg.trials >= 1, ErrorCode::invalid_argument, "--trials must be >= 1");
  const SourceDist src(cfg.bell_p);
  YieldPlan plan = plan_yield(src, cfg.n);
  if (cfg.epsilon || cfg.rounds) plan = make_plan(src, cfg.n, cfg.epsilon.value_or(plan.epsilon), cfg.rounds.value_or(plan.r));
  const auto run = simulate_hashing(src, plan, cfg.trials, cfg.seed, cfg.q_trials, cfg.workers,
                                    DecoderOptions{cfg.max_visits});
  const std::string summary = dump_json(hashing_summary_json(plan, run.summary)) + "\n";
  if (cfg.format == "json") return {summary, {}};
  return {hashing_csv(run), summary};
}

inline std::string cmd_carve(const RunConfig& cfg) {
  const auto report = carve_pairs(cfg.d, cfg.omega);
  const auto psi = max_entangled(cfg.d).projector();
  const auto outcome = apply_selective(report.channel, psi);
  const auto target = max_entangled(std::size_t{1} << report.m_d).projector();
  Json j;
  j["d"] = report.d;
  j["omega"] = report.omega;
  j["m_d"] = report.m_d;
  j["kappa"] = report.kappa;
  j["success_prob"] = report.success_prob;
  j["failure_prob"] = 1.0 - report.success_prob;
  j["simulated_success_prob"] = outcome.probability;
  j["simulated_failure_weight"] = detail::kraus_sum(report.failure_channel().kraus_ops(), psi.matrix()).trace().real();
  j["distance_to_target"] = trace_norm_distance(outcome.normalized(), target);
  return dump_json(j) + "\n";
}

inline std::string cmd_search_projection(const RunConfig& cfg) {
  require_readable(cfg.in_path);
  require(cfg.search_trials >= 1, ErrorCode::invalid_argument, "--trials must be >= 1");
  const auto rho = read_state_file(cfg.in_path);
  const auto best = search_projection_witness(rho, cfg.search_trials, cfg.seed, cfg.workers);
  Json j;
  j["found"] = best.found;
  if (best.found) {
    j["trial"] = best.trial;
    j["ppt_min_eigenvalue"] = best.ppt_min_eigenvalue;
    j["probability"] = best.probability;
    j["entangled"] = best.ppt_min_eigenvalue < -tol::eigen;
    j["pi_a"] = matrix_to_json(best.pi_a);
    j["pi_b"] = matrix_to_json(best.pi_b);
  }
  return dump_json(j) + "\n";
}

// ---------------------------------------------------------------------------

inline void print_error(std::ostream& err, std::string_view code, const std::string& message) {
  Json j;
  j["error_code"] = code;
  j["message"] = message;
  err << dump_json(j) << '\n';
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Exact desk-scale simulator for bipartite entanglement distillation", "distillery"};
  app.require_subcommand(1);

  auto* state = app.add_subcommand("state", "Build or re-serialize a state (JSON)");
  state->require_subcommand(1);
  auto* st_werner = state->add_subcommand("werner", "Werner-type state W_F");
  st_werner->add_option("--F", cfg.fidelity, "Fidelity with Phi+")->required()->check(CLI::Range(0.0, 1.0));
  auto* st_bell = state->add_subcommand("bell", "Bell-diagonal state from label probabilities");
  st_bell->add_option("--p0", cfg.bell_p[0], "P(Phi+)");
  st_bell->add_option("--p1", cfg.bell_p[1], "P(Psi+)");
  st_bell->add_option("--p2", cfg.bell_p[2], "P(Phi-)");
  st_bell->add_option("--p3", cfg.bell_p[3], "P(Psi-)");
  auto* st_psi = state->add_subcommand("psiplus", "Maximally entangled |psi_d^+>");
  st_psi->add_option("--d", cfg.d, "Local dimension")->required();
  auto* st_file = state->add_subcommand("file", "Read and re-serialize a state file");
  st_file->add_option("--in", cfg.in_path, "Input JSON")->required();
  for (auto* s : {st_werner, st_bell, st_psi, st_file}) s->add_option("--out", cfg.out_path, "Output path (default stdout)");

  auto* check = app.add_subcommand("check", "Entanglement diagnostics of a state");
  check->add_option("--in", cfg.in_path, "Input JSON")->required();

  auto* tw = app.add_subcommand("twirl", "Twirl a two-qubit state into Werner form");
  tw->add_option("--in", cfg.in_path, "Input JSON")->required();
  tw->add_option("--mode", cfg.twirl_mode, "exact or sampled");
  tw->add_option("--seed", cfg.seed, "Seed for sampled mode");
  tw->add_option("--out", cfg.out_path, "Output path (default stdout)");

  auto* rec = app.add_subcommand("recurrence", "Iterate the recurrence map to a target fidelity (CSV)");
  rec->add_option("--F0", cfg.f0, "Initial Werner fidelity")->required();
  rec->add_option("--F-target", cfg.f_target, "Target fidelity")->required();
  rec->add_option("--max-steps", cfg.max_steps, "Step limit");
  rec->add_option("--out", cfg.out_path, "Output path (default stdout)");

  auto* hashing = app.add_subcommand("hashing", "Hashing protocol");
  hashing->require_subcommand(1);
  auto* sim = hashing->add_subcommand("simulate", "Monte Carlo hashing trials");
  sim->add_option("--n", cfg.n, "Input pairs")->required();
  sim->add_option("--p0", cfg.bell_p[0], "P(Phi+)")->required();
  sim->add_option("--p1", cfg.bell_p[1], "P(Psi+)")->required();
  sim->add_option("--p2", cfg.bell_p[2], "P(Phi-)")->required();
  sim->add_option("--p3", cfg.bell_p[3], "P(Psi-)")->required();
  sim->add_option("--epsilon", cfg.epsilon, "Typicality slack (default (1-h)/4)");
  sim->add_option("--r", cfg.rounds, "Parity rounds (default floor(n(1+h)/2))");
  sim->add_option("--trials", cfg.trials, "Number of trials")->required();
  sim->add_option("--seed", cfg.seed, "Master seed");
  sim->add_option("--out", cfg.format, "csv (per-trial rows) or json (summary)");
  sim->add_option("--summary", cfg.summary_path, "Also write the summary JSON here (csv mode)");
  sim->add_option("--q-trials", cfg.q_trials, "Samples for the typicality-miss estimate");
  sim->add_option("--workers", cfg.workers, "Worker threads");
  sim->add_option("--max-visits", cfg.max_visits, "Decoder search budget per trial");

  auto* carve = app.add_subcommand("carve", "Carve |psi_d^+> into qubit pairs (JSON)");
  carve->add_option("--d", cfg.d, "Local dimension")->required();
  carve->add_option("--omega", cfg.omega, "Qubit ratio in (0,1)")->required();

  auto* search = app.add_subcommand("search-projection", "Random search for an entangled qubit projection");
  search->add_option("--in", cfg.in_path, "Input JSON")->required();
  search->add_option("--trials", cfg.search_trials, "Number of projector pairs")->required();
  search->add_option("--seed", cfg.seed, "Master seed");
  search->add_option("--workers", cfg.workers, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    print_error(err, "usage", e.what());
    return 2;
  }

  try {
    require_writable_parent(cfg.out_path);
    require_writable_parent(cfg.summary_path);
    if (state->parsed()) {
      std::string kind = st_werner->parsed() ? "werner" : st_bell->parsed() ? "bell" : st_psi->parsed() ? "psiplus" : "file";
      emit(cmd_state(kind, cfg), cfg.out_path, out);
    } else if (check->parsed()) {
      out << cmd_check(cfg);
    } else if (tw->parsed()) {
      emit(cmd_twirl(cfg), cfg.out_path, out);
    } else if (rec->parsed()) {
      emit(cmd_recurrence(cfg), cfg.out_path, out);
    } else if (sim->parsed()) {
      const auto [primary, summary] = cmd_hashing(cfg);
      out << primary;
      if (!summary.empty() && !cfg.summary_path.empty()) write_text_file(cfg.summary_path, summary);
    } else if (carve->parsed()) {
      out << cmd_carve(cfg);
    } else if (search->parsed()) {
      out << cmd_search_projection(cfg);
    }
  } catch (const Error& e) {
    print_error(err, to_string(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
  return 0;
}

}  // namespace distillery::cli
