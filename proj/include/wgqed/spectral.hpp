#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wgqed/model.hpp"

namespace wgqed {

enum class ModeKind { below_threshold, bic };
enum class ModeParity { symmetric, antisymmetric };

// One bound collective mode of the two-emitter + field system.
// Normalization: |phi_A|^2 + |phi_B|^2 + integral |phi(k)|^2 dk = 1.
// For BIC modes phi_B = (-1)^(n+1) phi_A exactly and energy = omega(kbar).
struct SingleExcitationMode {
    std::complex<double> phi_A{};
    std::complex<double> phi_B{};
    std::vector<double> k_grid;
    std::vector<std::complex<double>> phi_k;
    std::function<std::complex<double>(double)> phi;  // closed-form generator

    double energy = 0.0;
    double kbar = 0.0;   // BIC only
    int n = 0;           // BIC only
    double p_at = 0.0;
    ModeKind kind = ModeKind::bic;
    ModeParity parity = ModeParity::symmetric;

    // Emitter context the mode solves (omega0 is the resonance value for BIC).
    double omega0 = 0.0;
    double distance = 0.0;

    std::vector<std::string> warnings;
};

struct SpectralOptions {
    double quad_tol = 1e-12;          // absolute quadrature tolerance
    double root_tol = 1e-12;          // |f| tolerance for root finding
    double patch_delta_factor = 1e-3; // singularity patch half-width, times kbar
    double tail_eps = 1e-16;          // g^2 tail cutoff for the domain
    int grid_points = 401;            // default sampling grid for phi(k)
    double resonance_tol = 1e-9;      // |kbar*d - n*pi| precondition tolerance
    int bracket_scan_points = 64;
    double kmax_override = 0.0;       // > 0: fixed integration cutoff (domain checks)
};

// Level shift at the resonance kbar*d = n*pi:
//   Sigma = integral g^2(k) [1 - (-1)^n cos(k d)] / (omega(kbar) - omega(k)) dk.
// The integrand's zeros/poles at k = +-kbar cancel; inside |k -+ kbar| < delta
// the ratio is replaced by its Taylor expansion about the singular point.
double level_shift(const WaveguideModel& model, double kbar, double d, int n,
                   const SpectralOptions& opts = {});

// p_at = (1 + integral g^2 [1-cos((kbar-k)d)] / (omega(kbar)-omega(k))^2 dk)^-1.
double atomic_weight(const WaveguideModel& model, double kbar, double d,
                     const SpectralOptions& opts = {});

// Populates a BIC mode at E = omega(kbar) with phi_A fixed by normalization
// (computed by quadrature of |phi|^2, independently of atomic_weight) and
// phi(k) evaluated with the removable singularities patched.
SingleExcitationMode mode_amplitudes(const WaveguideModel& model, double E, double kbar,
                                     int n, double d, std::vector<double> k_grid = {},
                                     const SpectralOptions& opts = {});

// Forward direction: given d and n, sets kbar = n*pi/d, E = omega(kbar) and
// returns the omega0 that makes the BIC exist, plus the populated mode.
std::pair<double, SingleExcitationMode> required_omega0_for_bic(
    const WaveguideModel& model, double d, int n, const SpectralOptions& opts = {});

struct BicByFrequency {
    double d = 0.0;
    SingleExcitationMode mode;
    std::vector<double> other_roots;  // further zeros of F(d) in the bracket
};

// Inverse direction: given omega0, finds d in the bracket solving
// omega(n*pi/d) - omega0 - Sigma = 0. Multiple roots: returns the one nearest
// the decoupled prediction n*pi/omega^-1(omega0), lists the rest.
BicByFrequency solve_bic_fixed_frequency(const WaveguideModel& model, double omega0,
                                         int n, std::pair<double, double> d_bracket,
                                         const SpectralOptions& opts = {});

// Bound states below threshold: roots E < M of
//   E = omega0 + integral g^2 (1 +- cos kd) / (E - omega(k)) dk.
// The list is empty when no self-consistent solution exists.
std::vector<SingleExcitationMode> solve_below_threshold(const WaveguideModel& model,
                                                        double omega0, double d,
                                                        ModeParity parity,
                                                        const SpectralOptions& opts = {});

struct Residuals {
    double emitter_A = 0.0;  // |E phi_A - omega0 phi_A - integral g phi dk|
    double emitter_B = 0.0;  // |E phi_B - omega0 phi_B - integral g phi e^{ikd} dk|
    double field_sup = 0.0;  // sup_k |phi(k)(E-omega(k)) - g(k)(phi_A + phi_B e^{-ikd})|
};

Residuals residuals(const WaveguideModel& model, const SingleExcitationMode& mode,
                    const SpectralOptions& opts = {});

enum class ScanObservable { p_at, energy, omega0_required, detuning };

struct ScanSpec {
    enum class Axis { distance, omega0, lambda } axis = Axis::distance;
    std::vector<double> values;       // nonempty, monotone
    int n = 1;
    std::optional<double> fixed_omega0;  // empty = auto (solver determines it)
    std::optional<double> fixed_d;       // required for the lambda axis
    ScanObservable observable = ScanObservable::p_at;
};

struct ScanRow {
    std::string param;
    double value = 0.0;
    std::optional<double> energy, kbar, p_at, omega0, observable_value;
    std::string status;  // "ok" | "no_solution"
};

std::vector<ScanRow> scan(const WaveguideModel& model, const ScanSpec& spec,
                          const SpectralOptions& opts = {});

// CSV with header "param,value,E,kbar,p_at,omega0,status"; 17-significant-digit
// round-trip floats; no-solution rows keep empty numeric cells.
std::string scan_to_csv(const std::vector<ScanRow>& rows);

}  // namespace wgqed
