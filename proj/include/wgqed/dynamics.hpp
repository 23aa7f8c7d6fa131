#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "wgqed/model.hpp"
#include "wgqed/spectral.hpp"

namespace wgqed {

// Finite-box image of the continuum model: momenta k_j = 2 pi j / L on a ring
// of circumference L = 2 d cells, couplings g_j = g(k_j) sqrt(2 pi / L).
// When resonance data is present the grid contains +-kbar exactly
// (j* = n * cells by construction).
struct DiscretizedModel {
    double box_length = 0.0;
    int cells = 0;
    int modes_per_unit = 0;
    int j_max = 0;    // modes j in [-j_max, j_max]
    int n_modes = 0;  // 2 j_max + 1
    double dk = 0.0;

    std::vector<double> k;        // grid momenta, ascending
    std::vector<double> omega_k;  // omega(k_j)
    std::vector<double> g_k;      // g(k_j) sqrt(dk)
    std::vector<std::complex<double>> phase;  // e^{i k_j d}

    double omega0 = 0.0;
    double distance = 0.0;
    double kbar = 0.0;
    int resonance_n = 0;
    int j_star = 0;  // j value of +kbar on the grid

    double group_velocity = 0.0;  // omega'(kbar)
    double revival_time = 0.0;    // L / v_g
    double coupling_sum_rel_error = 0.0;
};

DiscretizedModel discretize(const WaveguideModel& model, const EmitterConfig& emitters,
                            int cells, int modes_per_unit, int n);

// N = 1 Hamiltonian over basis [A, B, k_0 .. k_{N_modes-1}], Hermitian by
// construction.
Eigen::MatrixXcd build_hamiltonian_N1(const DiscretizedModel& dm);

// ||(H - E) v|| for the sampled analytic mode v = (phi_A, phi_B, phi(k_j) sqrt(dk)).
double ladder_residual(const DiscretizedModel& dm, const SingleExcitationMode& mode);

Eigen::VectorXcd sample_mode_vector(const DiscretizedModel& dm,
                                    const SingleExcitationMode& mode);

struct DenseEig {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;  // column i pairs with values[i]
};

// Full diagonalization of a dense Hermitian matrix (LAPACK zheevd when
// available, Eigen otherwise).
DenseEig dense_hermitian_eig(const Eigen::MatrixXcd& H, bool with_vectors = true);

struct BicCandidate {
    double eigenvalue = 0.0;
    double eigenvalue_error = 0.0;  // |eigenvalue - mode.energy|
    double overlap_sq = 0.0;        // |<v_num | v_mode>|^2
    int index = -1;
};

// Diagonalizes the N = 1 Hamiltonian and returns the eigenpair of maximum
// overlap with the sampled analytic mode.
BicCandidate bic_candidate_N1(const DiscretizedModel& dm, const SingleExcitationMode& mode);

// Bosonic occupation basis of the sector with total excitation number N.
// Orbitals are ordered [A, B, modes ascending]; N = 2 states are multisets
// {a <= b} in lexicographic order.
struct SectorBasis {
    int sector = 1;
    int n_orbitals = 0;
    long long dimension = 0;

    long long index(int a, int b = -1) const;
    std::pair<int, int> occupation(long long idx) const;  // (a, b), b = -1 for N = 1
};

SectorBasis build_sector_basis(const DiscretizedModel& dm, int sector);

struct SectorState {
    int sector = 1;
    double time = 0.0;  // absolute time since preparation
    bool wrap_flagged = false;
    Eigen::VectorXcd amp;
};

enum class InitialKind { psi_n, single_a, bell_minus };

SectorState make_initial_state(const SectorBasis& basis, InitialKind kind, int n_parity);
SectorState make_custom_state(const SectorBasis& basis,
                              const std::vector<std::pair<long long, std::complex<double>>>& amps);

// Matrix-free action of H restricted to the sector.
class SectorHamiltonian {
public:
    SectorHamiltonian(const DiscretizedModel& dm, const SectorBasis& basis);
    Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
    double expectation(const Eigen::VectorXcd& x) const;
    const SectorBasis& basis() const { return basis_; }

private:
    SectorBasis basis_;
    Eigen::VectorXcd diag_;                       // N = 1 diagonal
    Eigen::SparseMatrix<std::complex<double>> h1_;  // single-particle matrix
};

// Krylov (Lanczos) propagation of exp(-i H t); per-step error control keeps
// the accumulated estimate below tol. Flags the state once past 0.8 of the
// box revival time.
SectorState evolve(const DiscretizedModel& dm, const SectorState& state, double t,
                   double tol = 1e-10);

struct TrajectoryPoint {
    double t = 0.0;
    double p_atomic = 0.0;     // <n_A + n_B>
    double overlap_psi_n = 0.0;  // |<psi^(N) x vac | v(t)>|^2
    double norm = 0.0;
    double energy = 0.0;
    bool flagged = false;
};

struct RelaxationResult {
    std::vector<TrajectoryPoint> table;
    double asymptote_p_atomic = 0.0;   // mean over last quarter of unflagged horizon
    double asymptote_overlap = 0.0;
    double horizon = 0.0;
    double revival_time = 0.0;
    double max_norm_drift = 0.0;
    double max_energy_drift = 0.0;  // relative
};

RelaxationResult relaxation_experiment(const DiscretizedModel& dm, const SectorState& initial,
                                       double horizon, int samples, double tol = 1e-10);

struct SweepPoint {
    double offset = 0.0;
    double asymptote = 0.0;
    std::string status = "ok";
};

// Asymptotic atomic population of psi^(1) (x) vac versus emitter detuning.
std::vector<SweepPoint> detuning_sweep(const WaveguideModel& model,
                                       const EmitterConfig& emitters, int n,
                                       const std::vector<double>& offsets, int cells,
                                       int modes_per_unit, double horizon_factor = 0.7,
                                       int samples = 120, double tol = 1e-10);

std::string trajectory_to_csv(const RelaxationResult& result);
std::string sweep_to_csv(const std::vector<SweepPoint>& sweep);

}  // namespace wgqed
