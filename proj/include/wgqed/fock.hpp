#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wgqed/errors.hpp"

namespace wgqed {

// Pure state of the two emitters inside the fixed sector N_at = n_at,
// amplitudes over |l_A, (n_at - l)_B>, l = 0..n_at.
struct SectorPureState {
    int n_at = 0;
    std::vector<std::complex<double>> amplitudes;

    double norm_sq() const;
};

// General two-mode pure state truncated at `trunc` quanta per mode;
// amp(l, m) multiplies |l_A, m_B>.
struct TwoModeState {
    int trunc = 0;
    Eigen::MatrixXcd amp;
};

// Density matrix over the two-mode basis truncated at `trunc` per mode,
// index (l, m) -> l*(trunc+1) + m.
struct TwoModeDensity {
    int trunc = 0;
    Eigen::MatrixXcd rho;

    struct Diagnostics {
        double trace_deviation;
        double hermiticity_deviation;
        double min_eigenvalue;
    };
    Diagnostics diagnostics() const;
};

// |N> expanded over atomic-excitation number m: weight(m) =
// binom(N,m)^(1/2) p^(m/2) (1-p)^((N-m)/2), emitter component psi^(m),
// photon components carried as opaque orthonormal labels.
struct BoundStateExpansion {
    int total = 0;       // N
    double p_at = 1.0;
    int n_parity = 1;
    std::vector<double> weights;              // index m = 0..N
    std::vector<SectorPureState> components;  // psi^(m)
};

// psi^(m): amplitude(l) = 2^(-m/2) binom(m,l)^(1/2) (-1)^(l(n+1)).
SectorPureState emitter_state(int m, int n_parity);

BoundStateExpansion bound_state_expansion(int total, double p_at, int n_parity);

// Diagonal of the single-emitter reduced state:
//   C_l^(N)(p) = sum_m 2^-m binom(N,m) binom(m,l) p^m (1-p)^(N-m).
std::vector<double> reduced_density_A(int total, double p_at);

// pi_A = sum_l C_l^2; equals binom(2N,N)/4^N = Gamma(N+1/2)/(sqrt(pi) N!)
// at p_at = 1.
double purity_A(int total, double p_at);
double purity_closed_form(int total);

struct ThermalPurity {
    double purity = 0.0;
    double n_thermal = 0.0;  // q/(1-q)
};

// Purity of the Gibbs-weighted mixture over |N> at weight (1-q)q^N,
// q = exp(-beta_E), truncated at n_max (geometric tail must be < 1e-12).
ThermalPurity thermal_purity(double beta_E, double p_at, int n_max);

// Two-mode coherent product state selected by the bound mode: per-mode
// amplitudes alpha/sqrt(2) and (-1)^(n+1) alpha/sqrt(2). Its reduced
// single-mode states are coherent, so purity of A is 1 up to truncation.
TwoModeState coherent_atomic_state(std::complex<double> alpha, int n_parity, int trunc);

// Tr(rho_A^2)/Tr(rho_A)^2 with rho_A the partial trace over B.
double purity_of_A(const TwoModeState& state);

// p_in = p_at^(2N) <psi^(N)| rho_in |psi^(N)>; rho_in must be supported on
// the N_at = N sector.
double relaxation_probability(const TwoModeDensity& rho_in, int total, double p_at,
                              int n_parity);

struct TruncationReport {
    bool ok = false;
    double max_deviation = 0.0;
    // First amplitude of |N> that a per-mode cap N_bar cannot represent.
    std::optional<std::pair<int, int>> violation;  // (m, l)
    double violation_amplitude = 0.0;
    std::string violation_label;
};

// True (deviation 0) iff every amplitude of |N> survives a per-mode
// occupation cap of N_bar, i.e. iff N_bar >= N for generic p_at.
TruncationReport truncation_check(int total, int n_bar, double p_at, int n_parity);

// Explicit rho_AB^(N) as the mixture over m of |psi^(m)><psi^(m)| with the
// binomial weights, over the two-mode basis truncated at `total` per mode.
TwoModeDensity rho_AB_mixture(int total, double p_at, int n_parity);

}  // namespace wgqed
