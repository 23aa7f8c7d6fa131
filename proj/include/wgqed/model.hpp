#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wgqed/errors.hpp"
#include "wgqed/quadrature.hpp"

namespace wgqed {

enum class CouplingProfile { inv_sqrt_gauss, flat_gauss };

// Waveguide dispersion omega(k) and emitter-field coupling g(k), hbar = 1.
// Assumptions the solvers rely on (checked by validate_assumptions):
//   omega(-k) = omega(k) >= cutoff_M, increasing in |k|;
//   g real with g(-k)^2 = g(k)^2;
//   integral of g^2/(1+omega) finite.
// Instances are immutable after construction and safe to share across threads.
struct WaveguideModel {
    double cutoff_M = 1.0;            // min_k omega(k)
    double coupling_scale = 0.0;      // lambda, multiplicative prefactor of g
    double regulator_scale = 1.0;     // k_c, high-frequency falloff of g
    std::string profile = "inv_sqrt_gauss";

    std::function<double(double)> dispersion;   // omega(k)
    std::function<double(double)> coupling;     // g(k)

    // Signed derivatives of omega; filled analytically by the factories,
    // otherwise evaluated by central differences.
    std::function<double(double)> dispersion_d1;
    std::function<double(double)> dispersion_d2;
    std::function<double(double)> dispersion_d3;

    double omega(double k) const { return dispersion(k); }
    double g(double k) const { return coupling(k); }
    double omega_prime(double k) const;
    double omega_second(double k) const;
    double omega_third(double k) const;

    // Inverts omega on k >= 0 by bisection (uses monotonicity in |k|).
    double omega_inverse(double w) const;
};

struct EmitterConfig {
    double omega0 = 0.0;   // shared level spacing
    double distance = 0.0; // emitter separation d > 0
    std::optional<int> levels;  // N-bar; empty = full oscillator

    void validate(const WaveguideModel& model) const;
};

// omega(k) = sqrt(k^2 + M^2); g(k) = lambda * sqrt(M/omega(k)) * exp(-(k/k_c)^2)
// for the default profile, or lambda * exp(-(k/k_c)^2) for flat_gauss.
WaveguideModel make_rectangular_model(double M, double k_c, double lambda,
                                      CouplingProfile profile = CouplingProfile::inv_sqrt_gauss);

struct CheckResult {
    std::string name;
    bool pass = false;
    double violation = 0.0;
    std::string detail;
};

// Report-only verification of the model assumptions on a probe grid.
std::vector<CheckResult> validate_assumptions(const WaveguideModel& model,
                                              std::span<const double> probe_grid);

// Diagnostic: integral of g(k)^2 over the real line (truncated where the
// regulator has decayed below 1e-16).
double coupling_norm_sq(const WaveguideModel& model, double abs_tol = 1e-10);

// Integration cutoff such that g(k)^2 < tail_eps beyond it (plus margin
// around k_ref for shifted features).
double integration_cutoff(const WaveguideModel& model, double k_ref, double tail_eps = 1e-16);

}  // namespace wgqed
