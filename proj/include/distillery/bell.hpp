#pragma once

// Bell-diagonal states, twirling and two-qubit entanglement diagnostics.
//
// Bell labels: 0 = Phi+, 1 = Psi+, 2 = Phi-, 3 = Psi-.

#include <array>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "distillery/locc.hpp"
#include "distillery/qstate.hpp"
#include "distillery/random.hpp"
#include "distillery/sampling.hpp"

namespace distillery {

namespace pauli {

inline Matrix identity() { return Matrix::Identity(2, 2); }
inline Matrix x() {
  Matrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}
inline Matrix y() {
  Matrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}
inline Matrix z() {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}
inline Matrix hadamard() {
  Matrix m(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  m << s, s, s, -s;
  return m;
}
inline Matrix phase() {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, Complex(0.0, 1.0);
  return m;
}

}  // namespace pauli

inline PureState bell_state(std::size_t label) {
  require(label < 4, ErrorCode::invalid_argument, "Bell label must be 0..3");
  const double s = 1.0 / std::sqrt(2.0);
  Vector v = Vector::Zero(4);
  switch (label) {
    case 0: v << s, 0.0, 0.0, s; break;
    case 1: v << 0.0, s, s, 0.0; break;
    case 2: v << s, 0.0, 0.0, -s; break;
    default: v << 0.0, s, -s, 0.0; break;
  }
  return PureState(2, 2, std::move(v));
}

/// Columns are the Bell states in label order.
inline Matrix bell_basis() {
  Matrix b(4, 4);
  for (std::size_t k = 0; k < 4; ++k) b.col(static_cast<Eigen::Index>(k)) = bell_state(k).amplitudes();
  return b;
}

/// Hill-Wootters magic basis {Phi+, i Phi-, i Psi+, Psi-}. Maximally
/// entangled states are exactly the real unit vectors in it, up to a phase.
inline Matrix magic_basis() {
  const Complex i(0.0, 1.0);
  Matrix m(4, 4);
  m.col(0) = bell_state(0).amplitudes();
  m.col(1) = i * bell_state(2).amplitudes();
  m.col(2) = i * bell_state(1).amplitudes();
  m.col(3) = bell_state(3).amplitudes();
  return m;
}

struct BellProbs {
  std::array<double, 4> p{1.0, 0.0, 0.0, 0.0};

  BellProbs() = default;
  explicit BellProbs(std::array<double, 4> probs) : p(probs) {
    double sum = 0.0;
    for (double v : p) {
      require(v >= -1e-12, ErrorCode::invalid_distribution, "Bell probabilities must be non-negative");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::invalid_distribution, "Bell probabilities must sum to 1");
  }

  double fidelity() const noexcept { return p[0]; }
  double operator[](std::size_t i) const { return p.at(i); }
  double max() const noexcept { return *std::max_element(p.begin(), p.end()); }
};

inline BellProbs werner_probs(double fidelity) {
  require(fidelity >= 0.0 && fidelity <= 1.0, ErrorCode::invalid_argument, "Werner fidelity must lie in [0, 1]");
  const double rest = (1.0 - fidelity) / 3.0;
  return BellProbs({fidelity, rest, rest, rest});
}

inline DensityOperator density_from_bell_probs(const BellProbs& bp) {
  const Matrix b = bell_basis();
  RealVector d(4);
  for (Eigen::Index k = 0; k < 4; ++k) d(k) = bp.p[static_cast<std::size_t>(k)];
  Matrix m = b * d.cast<Complex>().asDiagonal() * b.adjoint();
  return DensityOperator(2, 2, 0.5 * (m + m.adjoint()));
}

/// F |Phi+><Phi+| + (1-F)/3 (|Psi+><Psi+| + |Phi-><Phi-| + |Psi-><Psi-|).
inline DensityOperator werner(double fidelity) { return density_from_bell_probs(werner_probs(fidelity)); }

inline void require_two_qubit(const DensityOperator& rho) {
  require(rho.dim_a() == 2 && rho.dim_b() == 2, ErrorCode::dimension_mismatch,
          "expected a two-qubit state, got dimensions (" + std::to_string(rho.dim_a()) + "," +
              std::to_string(rho.dim_b()) + ")");
}

/// The state written in the Bell basis.
inline Matrix bell_basis_matrix(const DensityOperator& rho) {
  require_two_qubit(rho);
  const Matrix b = bell_basis();
  return b.adjoint() * rho.matrix() * b;
}

/// Bell-basis diagonal. Without `project` the input must already be
/// Bell-diagonal (off-diagonal entries <= 1e-8).
inline BellProbs bell_probs_from_density(const DensityOperator& rho, bool project = false) {
  const Matrix m = bell_basis_matrix(rho);
  if (!project) {
    Matrix off = m;
    off.diagonal().setZero();
    require(off.cwiseAbs().maxCoeff() <= tol::bell_diagonal, ErrorCode::invalid_state,
            "state is not Bell-diagonal (pass project to keep only the diagonal)");
  }
  std::array<double, 4> p{};
  for (std::size_t k = 0; k < 4; ++k) p[k] = m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)).real();
  return BellProbs(p);
}

// ---------------------------------------------------------------------------
// Twirling

enum class TwirlMode { exact, sampled };

inline constexpr std::size_t kTwirlTerms = 12;

/// Unitary of twirl term (nu, mu): C (eta_nu (x) eta_nu)(sigma_mu (x) sigma_mu) C
/// with C = sigma_x (x) sigma_z and eta = {I, S H, sigma_z H S}. C sandwiches
/// the U (x) U average, whose invariant state is Psi-, so that Phi+ is the
/// preserved component.
inline Matrix twirl_unitary(std::size_t nu, std::size_t mu) {
  require(nu < 3 && mu < 4, ErrorCode::invalid_argument, "twirl term index out of range");
  static const std::array<Matrix, 4> sigma{pauli::identity(), pauli::x(), pauli::y(), pauli::z()};
  static const std::array<Matrix, 3> eta{pauli::identity(), pauli::phase() * pauli::hadamard(),
                                         pauli::z() * pauli::hadamard() * pauli::phase()};
  static const Matrix c = detail::kron(pauli::x(), pauli::z());
  return c * detail::kron(eta[nu], eta[nu]) * detail::kron(sigma[mu], sigma[mu]) * c;
}

/// Maps a two-qubit state to the Werner state with the same Phi+ fidelity.
/// Exact mode averages all 12 terms; sampled mode applies one term drawn
/// uniformly with `seed`.
inline DensityOperator twirl(const DensityOperator& rho, TwirlMode mode = TwirlMode::exact, std::uint64_t seed = 0) {
  require_two_qubit(rho);
  Matrix out = Matrix::Zero(4, 4);
  if (mode == TwirlMode::exact) {
    for (std::size_t nu = 0; nu < 3; ++nu)
      for (std::size_t mu = 0; mu < 4; ++mu) {
        const Matrix u = twirl_unitary(nu, mu);
        out += u * rho.matrix() * u.adjoint();
      }
    out /= static_cast<double>(kTwirlTerms);
  } else {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, kTwirlTerms - 1);
    const std::size_t term = pick(rng);
    const Matrix u = twirl_unitary(term / 4, term % 4);
    out = u * rho.matrix() * u.adjoint();
  }
  return DensityOperator(rho.layout(), 0.5 * (out + out.adjoint()));
}

// ---------------------------------------------------------------------------
// Diagnostics

struct FullyEntangledFraction {
  double value;
  PureState optimal_state;  ///< maximally entangled state attaining the value
};

/// max over maximally entangled |psi> of <psi|rho|psi>: the largest
/// eigenvalue of Re(M^dagger rho M) in the magic basis M.
inline FullyEntangledFraction fully_entangled_fraction_with_state(const DensityOperator& rho) {
  require_two_qubit(rho);
  const Matrix m = magic_basis();
  const Eigen::MatrixXd re = (m.adjoint() * rho.matrix() * m).real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (re + re.transpose()));
  const Eigen::VectorXd v = es.eigenvectors().col(3);
  return {std::clamp(es.eigenvalues()(3), 0.0, 1.0), PureState::normalized(2, 2, m * v.cast<Complex>())};
}

inline double fully_entangled_fraction(const DensityOperator& rho) {
  return fully_entangled_fraction_with_state(rho).value;
}

/// Local unitaries (U, V) with (U (x) V)|psi> = |Phi+> up to a global phase,
/// for a maximally entangled two-qubit |psi>. Uses the polar factor of the
/// coefficient matrix, so U is always the identity.
inline std::pair<Matrix, Matrix> aligning_unitaries(const PureState& psi) {
  require(psi.dim_a() == 2 && psi.dim_b() == 2, ErrorCode::dimension_mismatch, "expected a two-qubit state");
  Matrix c(2, 2);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) c(i, j) = psi.amplitudes()(2 * i + j);
  Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix w = svd.matrixU() * svd.matrixV().adjoint();
  return {Matrix::Identity(2, 2), w.conjugate()};
}

inline DensityOperator local_rotate(const DensityOperator& rho, const Matrix& u, const Matrix& v) {
  const Matrix uv = detail::kron(u, v);
  Matrix m = uv * rho.matrix() * uv.adjoint();
  return DensityOperator(rho.layout(), 0.5 * (m + m.adjoint()));
}

struct TwoQubitDiagnostics {
  double ppt_min_eigenvalue;
  double fully_entangled_fraction;
  bool entangled;
};

/// For two qubits the PPT test is necessary and sufficient.
inline TwoQubitDiagnostics two_qubit_diagnostics(const DensityOperator& rho) {
  require_two_qubit(rho);
  const double lam = ppt_min_eigenvalue(rho);
  return {lam, fully_entangled_fraction(rho), lam < -tol::eigen};
}

// ---------------------------------------------------------------------------
// Projection onto local qubit subspaces

struct ProjectionResult {
  SelectiveOutcome outcome;  ///< compressed two-qubit branch, unnormalized
  DensityOperator state;     ///< normalized compressed state
  TwoQubitDiagnostics diagnostics;
};

namespace detail {

/// Orthonormal basis (columns) of a rank-2 projector's range.
inline Matrix rank2_range(const Matrix& pi, std::size_t dim, const char* side) {
  require(pi.rows() == static_cast<Eigen::Index>(dim) && pi.cols() == pi.rows(), ErrorCode::dimension_mismatch,
          std::string(side) + " projector does not match the local dimension");
  require(max_hermitian_defect(pi) <= 1e-9 && (pi * pi - pi).cwiseAbs().maxCoeff() <= 1e-9,
          ErrorCode::invalid_argument, std::string(side) + " operator is not an orthogonal projector");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (pi + pi.adjoint()));
  const auto n = es.eigenvalues().size();
  require(n >= 2 && es.eigenvalues()(n - 2) > 0.5 && (n < 3 || es.eigenvalues()(n - 3) < 0.5),
          ErrorCode::invalid_argument, std::string(side) + " projector must have rank 2");
  return es.eigenvectors().rightCols(2);
}

}  // namespace detail

/// Compresses (Pi_A (x) Pi_B) rho (Pi_A (x) Pi_B) onto the projectors'
/// ranges, normalizes, and runs the two-qubit diagnostics.
inline ProjectionResult project_to_qubits(const DensityOperator& rho, const Matrix& pi_a, const Matrix& pi_b) {
  const Matrix qa = detail::rank2_range(pi_a, rho.dim_a(), "Alice's");
  const Matrix qb = detail::rank2_range(pi_b, rho.dim_b(), "Bob's");
  const Matrix q = detail::kron(qa, qb);
  Matrix m = q.adjoint() * rho.matrix() * q;
  auto outcome = detail::make_outcome(Layout(2, 2), 0.5 * (m + m.adjoint()));
  auto state = outcome.normalized();
  const auto diag = two_qubit_diagnostics(state);
  return {std::move(outcome), std::move(state), diag};
}

inline Matrix random_rank2_projector(Rng& rng, std::size_t dim) {
  require(dim >= 2, ErrorCode::invalid_argument, "local dimension must be at least 2");
  const auto d = static_cast<Eigen::Index>(dim);
  if (dim == 2) return Matrix::Identity(d, d);
  const Matrix u = haar_unitary(rng, dim).leftCols(2);
  return u * u.adjoint();
}

struct WitnessResult {
  bool found = false;  ///< false when no trial had a nonzero-probability projection
  Matrix pi_a;
  Matrix pi_b;
  double ppt_min_eigenvalue = std::numeric_limits<double>::infinity();
  double probability = 0.0;
  std::size_t trial = 0;
};

/// Random search over rank-2 local projector pairs for the projection that
/// minimizes the PPT eigenvalue. Trial t draws from sub-seed (seed, t), and
/// ties go to the lowest trial index, so the result is independent of
/// `workers`.
inline WitnessResult search_projection_witness(const DensityOperator& rho, std::size_t trials, std::uint64_t seed,
                                               std::size_t workers = 1) {
  require(trials >= 1, ErrorCode::invalid_argument, "need at least one trial");
  require(rho.dim_a() >= 2 && rho.dim_b() >= 2, ErrorCode::dimension_mismatch, "both local dimensions must be >= 2");
  workers = std::clamp<std::size_t>(workers, 1, trials);

  auto better = [](const WitnessResult& a, const WitnessResult& b) {
    if (a.found != b.found) return a.found;
    if (a.ppt_min_eigenvalue != b.ppt_min_eigenvalue) return a.ppt_min_eigenvalue < b.ppt_min_eigenvalue;
    return a.trial < b.trial;
  };
  auto run = [&](std::size_t first) {
    WitnessResult best;
    for (std::size_t t = first; t < trials; t += workers) {
      Rng rng = make_rng(seed, t);
      Matrix pa = random_rank2_projector(rng, rho.dim_a());
      Matrix pb = random_rank2_projector(rng, rho.dim_b());
      try {
        const auto res = project_to_qubits(rho, pa, pb);
        WitnessResult cand{true, std::move(pa), std::move(pb), res.diagnostics.ppt_min_eigenvalue,
                           res.outcome.probability, t};
        if (better(cand, best)) best = std::move(cand);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::zero_probability) throw;
      }
    }
    return best;
  };

  std::vector<WitnessResult> partial(workers);
  if (workers == 1) {
    partial[0] = run(0);
  } else {
    std::vector<std::exception_ptr> failures(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          try {
            partial[w] = run(w);
          } catch (...) {
            failures[w] = std::current_exception();
          }
        });
    }
    for (const auto& f : failures)
      if (f) std::rethrow_exception(f);
  }
  WitnessResult best;
  for (auto& p : partial)
    if (better(p, best)) best = std::move(p);
  return best;
}

}  // namespace distillery
