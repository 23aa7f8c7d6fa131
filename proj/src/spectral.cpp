#include "wgqed/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wgqed/io_util.hpp"
#include "wgqed/quadrature.hpp"

namespace wgqed {

namespace {

using std::complex;
constexpr double kPi = std::numbers::pi;
constexpr complex<double> kI{0.0, 1.0};

/* Geometry of the two removable singularities of the BIC integrands.

   With kbar*d = n*pi every integrand below reduces, near a singular point
   s in {+kbar, -kbar}, to a ratio N(u)/D(u) in u = k - s with
       D(u) = omega(kbar) - omega(s+u) = a1 u + a2 u^2 + a3 u^3 + ...
       a1 = -omega'(s),  a2 = -omega''(s)/2,  a3 = -omega'''(s)/6,
   and a numerator whose Taylor series at u = 0 starts at order >= 1:
       1 - cos((kbar-k)d)      = (d^2/2) u^2 - (d^4/24) u^4 + ...
       1 - (-1)^n e^{-ikd}     = (i d) u + (d^2/2) u^2 - (i d^3/6) u^3 + ...
   (both identities use kbar*d = n*pi). Inside |u| < delta the ratio is
   evaluated from the series quotient; outside, from the closed form with the
   cancellation-free numerator 2 sin^2((kbar-k)d/2). */
struct PatchCoeffs {
    double center = 0.0;
    // (1-cos)/D = q0 u + q1 u^2 + q2 u^3   (level-shift family)
    double q0 = 0, q1 = 0, q2 = 0;
    // (1-cos)/D^2 = e0 + e1 u + e2 u^2     (p_at family)
    double e0 = 0, e1 = 0, e2 = 0;
    // (1-e^{-iud})/D = C0 + C1 u + C2 u^2  (phi family)
    complex<double> C0, C1, C2;
};

struct BicGeometry {
    double kbar = 0, d = 0;
    int n = 0;
    double delta = 0;  // patch half-width
    double kmax = 0;   // integration cutoff
    PatchCoeffs patch[2];  // at +kbar, -kbar

    // Strictly inside the patch; the guard band keeps points constructed as
    // "center +- delta" on the closed-form branch even when the subtraction
    // rounds a fraction of an ulp inward.
    bool in_patch(double k, int& which) const {
        const double inner = delta * (1.0 - 1e-9);
        if (std::abs(k - kbar) < inner) {
            which = 0;
            return true;
        }
        if (std::abs(k + kbar) < inner) {
            which = 1;
            return true;
        }
        return false;
    }

    std::vector<double> breakpoints() const {
        std::vector<double> b = {-kmax, -kbar - delta, -kbar + delta,
                                 kbar - delta, kbar + delta, kmax};
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        std::erase_if(b, [this](double x) { return x < -kmax || x > kmax; });
        return b;
    }
};

PatchCoeffs make_patch(const WaveguideModel& model, double d, double s) {
    PatchCoeffs p;
    p.center = s;
    const double a1 = -model.omega_prime(s);
    const double a2 = -0.5 * model.omega_second(s);
    const double a3 = -model.omega_third(s) / 6.0;
    if (a1 == 0.0)
        throw PreconditionError("singularity patch: omega'(kbar) vanishes (band edge)");

    // series quotient (n0 + n1 u + n2 u^2) / (a1 + a2 u + a3 u^2)
    auto divide = [&](complex<double> n0, complex<double> n1, complex<double> n2,
                      complex<double>& r0, complex<double>& r1, complex<double>& r2) {
        r0 = n0 / a1;
        r1 = (n1 - r0 * a2) / a1;
        r2 = (n2 - r0 * a3 - r1 * a2) / a1;
    };

    const double b2 = 0.5 * d * d;
    const double b4 = -d * d * d * d / 24.0;
    {
        complex<double> r0, r1, r2;
        divide(b2, 0.0, b4, r0, r1, r2);
        p.q0 = r0.real();
        p.q1 = r1.real();
        p.q2 = r2.real();
    }
    {
        // D^2 = d0 u^2 + d1 u^3 + d2 u^4
        const double d0 = a1 * a1, d1 = 2 * a1 * a2, d2 = a2 * a2 + 2 * a1 * a3;
        p.e0 = b2 / d0;
        p.e1 = -p.e0 * d1 / d0;
        p.e2 = (b4 - p.e0 * d2 - p.e1 * d1) / d0;
    }
    divide(kI * d, b2, -kI * d * d * d / 6.0, p.C0, p.C1, p.C2);
    return p;
}

BicGeometry make_geometry(const WaveguideModel& model, double kbar, double d, int n,
                          const SpectralOptions& opts) {
    if (n < 1) throw ParameterError("BIC resonance index n must be >= 1");
    if (!(d > 0.0)) throw ParameterError("emitter distance d must be positive");
    if (!(kbar > 0.0)) throw ParameterError("kbar must be positive");
    if (std::abs(kbar * d - n * kPi) > opts.resonance_tol * (1.0 + n * kPi))
        throw PreconditionError("kbar*d = n*pi violated beyond tolerance; the imaginary "
                                "part of the level-shift integral would not cancel");
    BicGeometry geo;
    geo.kbar = kbar;
    geo.d = d;
    geo.n = n;
    geo.delta = opts.patch_delta_factor * kbar;
    geo.kmax = opts.kmax_override > 0.0 ? opts.kmax_override
                                        : integration_cutoff(model, kbar, opts.tail_eps);
    geo.patch[0] = make_patch(model, d, kbar);
    geo.patch[1] = make_patch(model, d, -kbar);
    return geo;
}

// 1 - cos((kbar-k)d), free of cancellation.
inline double one_minus_cos(double kbar, double k, double d) {
    const double s = std::sin(0.5 * (kbar - k) * d);
    return 2.0 * s * s;
}

double level_shift_integrand(const WaveguideModel& model, const BicGeometry& geo, double k) {
    const double gk = model.g(k);
    if (gk == 0.0) return 0.0;
    int w;
    if (geo.in_patch(k, w)) {
        const double u = k - geo.patch[w].center;
        return gk * gk * ((geo.patch[w].q0 + (geo.patch[w].q1 + geo.patch[w].q2 * u) * u) * u);
    }
    return gk * gk * one_minus_cos(geo.kbar, k, geo.d) /
           (model.omega(geo.kbar) - model.omega(k));
}

double p_at_integrand(const WaveguideModel& model, const BicGeometry& geo, double k) {
    const double gk = model.g(k);
    if (gk == 0.0) return 0.0;
    int w;
    if (geo.in_patch(k, w)) {
        const double u = k - geo.patch[w].center;
        return gk * gk * (geo.patch[w].e0 + (geo.patch[w].e1 + geo.patch[w].e2 * u) * u);
    }
    const double dw = model.omega(geo.kbar) - model.omega(k);
    return gk * gk * one_minus_cos(geo.kbar, k, geo.d) / (dw * dw);
}

// phi(k) / phi_A: the mode profile with unit emitter amplitude.
complex<double> phi_profile(const WaveguideModel& model, const BicGeometry& geo, double k) {
    const double gk = model.g(k);
    if (gk == 0.0) return {};
    int w;
    if (geo.in_patch(k, w)) {
        const double u = k - geo.patch[w].center;
        return gk * (geo.patch[w].C0 + (geo.patch[w].C1 + geo.patch[w].C2 * u) * u);
    }
    const double sign_n = (geo.n % 2 == 0) ? 1.0 : -1.0;  // (-1)^n
    const complex<double> numerator = 1.0 - sign_n * std::exp(-kI * k * geo.d);
    return gk * numerator / (model.omega(geo.kbar) - model.omega(k));
}

double bisect_secant(const std::function<double(double)>& f, double a, double b,
                     double fa, double fb, double f_tol, int max_iter = 200) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0))
        throw NoSolutionError("root bracket does not contain a sign change");
    double x = a, fx = fa;
    double x_prev = b, f_prev = fb;
    for (int it = 0; it < max_iter; ++it) {
        double cand;
        const double df = fx - f_prev;
        if (df != 0.0) {
            cand = x - fx * (x - x_prev) / df;  // secant
            if (!(cand > std::min(a, b) && cand < std::max(a, b))) cand = 0.5 * (a + b);
        } else {
            cand = 0.5 * (a + b);
        }
        // Keep strictly inside the bracket.
        const double lo = std::min(a, b), hi = std::max(a, b);
        if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
        const double fc = f(cand);
        x_prev = x;
        f_prev = fx;
        x = cand;
        fx = fc;
        if (std::abs(fc) <= f_tol) return cand;
        if ((fc > 0) == (fa > 0)) {
            a = cand;
            fa = fc;
        } else {
            b = cand;
            fb = fc;
        }
        if (std::abs(b - a) <= 4.0 * std::abs(a) * 1e-16 + 1e-300) break;
    }
    const double best = std::abs(fa) < std::abs(fb) ? a : b;
    if (std::abs(f(best)) > 100.0 * f_tol)
        throw NumericalError("root refinement stalled: |f| = " + format_double(f(best)) +
                             " above tolerance " + format_double(f_tol));
    return best;
}

void maybe_warn_near_threshold(const WaveguideModel& model, double kbar,
                               const SpectralOptions& opts, std::vector<std::string>& warnings) {
    const double margin = model.omega(kbar) - model.cutoff_M;
    if (margin < 10.0 * std::sqrt(opts.quad_tol)) {
        warnings.push_back("omega(kbar) - M = " + format_double(margin) +
                           " is near threshold; p_at and level-shift error bars are inflated");
    }
}

}  // namespace

double level_shift(const WaveguideModel& model, double kbar, double d, int n,
                   const SpectralOptions& opts) {
    if (model.coupling_scale == 0.0) {
        // Still enforce the resonance precondition in the decoupled limit.
        if (std::abs(kbar * d - n * kPi) > opts.resonance_tol * (1.0 + n * kPi))
            throw PreconditionError("kbar*d = n*pi violated beyond tolerance");
        return 0.0;
    }
    const auto geo = make_geometry(model, kbar, d, n, opts);
    const auto bp = geo.breakpoints();
    QuadOptions q{opts.quad_tol, 30000};
    return integrate_segments<double>(
        [&](double k) { return level_shift_integrand(model, geo, k); }, bp, q);
}

double atomic_weight(const WaveguideModel& model, double kbar, double d,
                     const SpectralOptions& opts) {
    const int n = static_cast<int>(std::lround(kbar * d / kPi));
    if (n < 1 || std::abs(kbar * d - n * kPi) > opts.resonance_tol * (1.0 + n * kPi))
        throw PreconditionError("atomic_weight requires kbar*d = n*pi");
    if (model.coupling_scale == 0.0) return 1.0;
    const auto geo = make_geometry(model, kbar, d, n, opts);
    const auto bp = geo.breakpoints();
    QuadOptions q{opts.quad_tol, 30000};
    const double I = integrate_segments<double>(
        [&](double k) { return p_at_integrand(model, geo, k); }, bp, q);
    return 1.0 / (1.0 + I);
}

SingleExcitationMode mode_amplitudes(const WaveguideModel& model, double E, double kbar,
                                     int n, double d, std::vector<double> k_grid,
                                     const SpectralOptions& opts) {
    const auto geo = make_geometry(model, kbar, d, n, opts);
    if (std::abs(E - model.omega(kbar)) > 1e-9 * std::max(1.0, std::abs(E)))
        throw PreconditionError("BIC energy must equal omega(kbar)");
    if (!(model.omega(kbar) > model.cutoff_M))
        throw PreconditionError("omega(kbar) must exceed the threshold M");

    SingleExcitationMode mode;
    mode.kind = ModeKind::bic;
    mode.kbar = kbar;
    mode.n = n;
    mode.distance = d;
    mode.energy = model.omega(kbar);
    mode.parity = (n % 2 == 1) ? ModeParity::symmetric : ModeParity::antisymmetric;
    maybe_warn_near_threshold(model, kbar, opts, mode.warnings);

    // Normalization by quadrature of |phi/phi_A|^2 (independent of the
    // atomic_weight integral form).
    QuadOptions q{opts.quad_tol, 30000};
    const auto bp = geo.breakpoints();
    const double norm_field = integrate_segments<double>(
        [&](double k) { return std::norm(phi_profile(model, geo, k)); }, bp, q);
    const double phiA = 1.0 / std::sqrt(2.0 + norm_field);
    const double sign_parity = (n % 2 == 1) ? 1.0 : -1.0;  // (-1)^(n+1)
    mode.phi_A = phiA;
    mode.phi_B = sign_parity * phiA;
    mode.p_at = 2.0 / (2.0 + norm_field);  // exactly 1 in the decoupled limit
    mode.omega0 = mode.energy - level_shift(model, kbar, d, n, opts);

    mode.phi = [model, geo, phiA](double k) -> complex<double> {
        return phiA * phi_profile(model, geo, k);
    };

    if (k_grid.empty()) {
        // Uniform grid plus the exact singular points and patch edges; interior
        // points of a patch are snapped to its nearer edge so that sampled values
        // come from the closed form, not the local Taylor branch.
        const int npts = std::max(9, opts.grid_points);
        k_grid.reserve(npts + 6);
        for (int i = 0; i < npts; ++i) {
            double k = -geo.kmax + 2.0 * geo.kmax * i / (npts - 1);
            int w;
            if (geo.in_patch(k, w)) {
                const double c = geo.patch[w].center;
                k = (k < c) ? c - geo.delta : c + geo.delta;
            }
            k_grid.push_back(k);
        }
        for (double s : {kbar, -kbar}) {
            k_grid.push_back(s);
            k_grid.push_back(s - geo.delta);
            k_grid.push_back(s + geo.delta);
        }
        std::sort(k_grid.begin(), k_grid.end());
        k_grid.erase(std::unique(k_grid.begin(), k_grid.end()), k_grid.end());
    }
    mode.k_grid = std::move(k_grid);
    mode.phi_k.reserve(mode.k_grid.size());
    for (double k : mode.k_grid) mode.phi_k.push_back(mode.phi(k));
    return mode;
}

std::pair<double, SingleExcitationMode> required_omega0_for_bic(
    const WaveguideModel& model, double d, int n, const SpectralOptions& opts) {
    if (n < 1) throw ParameterError("required_omega0_for_bic: n must be >= 1");
    if (!(d > 0.0)) throw ParameterError("required_omega0_for_bic: d must be positive");
    const double kbar = n * kPi / d;
    auto mode = mode_amplitudes(model, model.omega(kbar), kbar, n, d, {}, opts);
    return {mode.omega0, std::move(mode)};
}

BicByFrequency solve_bic_fixed_frequency(const WaveguideModel& model, double omega0,
                                         int n, std::pair<double, double> d_bracket,
                                         const SpectralOptions& opts) {
    if (!(omega0 > model.cutoff_M))
        throw ParameterError("solve_bic_fixed_frequency: omega0 must exceed M");
    if (n < 1) throw ParameterError("solve_bic_fixed_frequency: n must be >= 1");
    const double lo = d_bracket.first, hi = d_bracket.second;
    if (!(lo > 0.0 && hi > lo))
        throw ParameterError("solve_bic_fixed_frequency: invalid d bracket");

    auto F = [&](double d) {
        const double kbar = n * kPi / d;
        return model.omega(kbar) - omega0 - level_shift(model, kbar, d, n, opts);
    };

    // Locate every sign change on a coarse scan, refine each.
    const int np = std::max(8, opts.bracket_scan_points);
    std::vector<double> xs(np), fs(np);
    for (int i = 0; i < np; ++i) {
        xs[i] = lo + (hi - lo) * i / (np - 1);
        fs[i] = F(xs[i]);
    }
    std::vector<double> roots;
    for (int i = 0; i + 1 < np; ++i) {
        if (fs[i] == 0.0) {
            roots.push_back(xs[i]);
            continue;
        }
        if ((fs[i] > 0) != (fs[i + 1] > 0)) {
            roots.push_back(
                bisect_secant(F, xs[i], xs[i + 1], fs[i], fs[i + 1], opts.root_tol));
        }
    }
    if (fs[np - 1] == 0.0) roots.push_back(xs[np - 1]);
    if (roots.empty())
        throw NoSolutionError("no sign change of F(d) in the bracket [" +
                              format_double(lo) + ", " + format_double(hi) + "]");

    // Tie break toward the decoupled prediction n*pi/k0.
    const double k0 = model.omega_inverse(omega0);
    const double d_free = k0 > 0.0 ? n * kPi / k0 : roots.front();
    std::sort(roots.begin(), roots.end(), [&](double a, double b) {
        return std::abs(a - d_free) < std::abs(b - d_free);
    });

    BicByFrequency out;
    out.d = roots.front();
    out.other_roots.assign(roots.begin() + 1, roots.end());
    const double kbar = n * kPi / out.d;
    out.mode = mode_amplitudes(model, model.omega(kbar), kbar, n, out.d, {}, opts);
    return out;
}

std::vector<SingleExcitationMode> solve_below_threshold(const WaveguideModel& model,
                                                        double omega0, double d,
                                                        ModeParity parity,
                                                        const SpectralOptions& opts) {
    if (!(omega0 > model.cutoff_M))
        throw ParameterError("solve_below_threshold: omega0 must exceed M");
    if (!(d > 0.0)) throw ParameterError("solve_below_threshold: d must be positive");

    const double M = model.cutoff_M;
    const double sign = parity == ModeParity::symmetric ? 1.0 : -1.0;
    const double kmax = integration_cutoff(model, 0.0, opts.tail_eps);
    QuadOptions q{opts.quad_tol, 30000};

    auto shift = [&](double E) {
        if (model.coupling_scale == 0.0) return 0.0;
        return integrate([&](double k) {
            const double gk = model.g(k);
            return gk * gk * (1.0 + sign * std::cos(k * d)) / (E - model.omega(k));
        }, -kmax, kmax, q);
    };
    auto G = [&](double E) { return E - omega0 - shift(E); };

    // G is strictly increasing; there is at most one root below M. Probe an
    // epsilon ladder toward the threshold (the symmetric branch diverges there).
    double e_hi = 0.0, g_hi = 0.0;
    bool found_hi = false;
    for (double eps : {1e-3, 1e-6, 1e-9}) {
        e_hi = M - eps * std::max(1.0, M);
        g_hi = G(e_hi);
        if (g_hi > 0.0) {
            found_hi = true;
            break;
        }
    }
    if (!found_hi) return {};

    double e_lo = M - 0.5 * std::max(1.0, M);
    double g_lo = G(e_lo);
    int guard = 0;
    while (g_lo > 0.0 && guard++ < 60) {
        e_lo = M - 2.0 * (M - e_lo);
        g_lo = G(e_lo);
    }
    if (g_lo > 0.0) return {};

    const double E = bisect_secant(G, e_lo, e_hi, g_lo, g_hi, opts.root_tol);

    SingleExcitationMode mode;
    mode.kind = ModeKind::below_threshold;
    mode.parity = parity;
    mode.energy = E;
    mode.omega0 = omega0;
    mode.distance = d;
    mode.kbar = 0.0;
    mode.n = 0;

    const double norm_field = integrate([&](double k) {
        const double gk = model.g(k);
        const double dw = E - model.omega(k);
        return gk * gk * 2.0 * (1.0 + sign * std::cos(k * d)) / (dw * dw);
    }, -kmax, kmax, q);
    const double phiA = 1.0 / std::sqrt(2.0 + norm_field);
    mode.phi_A = phiA;
    mode.phi_B = sign * phiA;
    mode.p_at = 2.0 / (2.0 + norm_field);
    mode.phi = [model, E, d, sign, phiA](double k) -> complex<double> {
        const double gk = model.g(k);
        if (gk == 0.0) return {};
        return gk * phiA * (1.0 + sign * std::exp(-kI * k * d)) / (E - model.omega(k));
    };
    const int npts = std::max(9, opts.grid_points);
    mode.k_grid.resize(npts);
    mode.phi_k.resize(npts);
    for (int i = 0; i < npts; ++i) {
        mode.k_grid[i] = -kmax + 2.0 * kmax * i / (npts - 1);
        mode.phi_k[i] = mode.phi(mode.k_grid[i]);
    }
    return {std::move(mode)};
}

Residuals residuals(const WaveguideModel& model, const SingleExcitationMode& mode,
                    const SpectralOptions& opts) {
    if (!mode.phi) throw PreconditionError("residuals: mode is not populated");
    Residuals r;
    QuadOptions q{opts.quad_tol, 30000};
    std::vector<double> bp;
    if (mode.kind == ModeKind::bic) {
        const auto geo = make_geometry(model, mode.kbar, mode.distance, mode.n, opts);
        bp = geo.breakpoints();
    } else {
        const double kmax = integration_cutoff(model, 0.0, opts.tail_eps);
        bp = {-kmax, 0.0, kmax};
    }

    const complex<double> int_g_phi = integrate_segments<complex<double>>(
        [&](double k) { return model.g(k) * mode.phi(k); }, bp, q);
    const complex<double> int_g_phi_eikd = integrate_segments<complex<double>>(
        [&](double k) {
            return model.g(k) * mode.phi(k) * std::exp(kI * k * mode.distance);
        }, bp, q);

    r.emitter_A = std::abs(mode.energy * mode.phi_A - mode.omega0 * mode.phi_A - int_g_phi);
    r.emitter_B =
        std::abs(mode.energy * mode.phi_B - mode.omega0 * mode.phi_B - int_g_phi_eikd);

    double sup = 0.0;
    for (size_t i = 0; i < mode.k_grid.size(); ++i) {
        const double k = mode.k_grid[i];
        const complex<double> lhs = mode.phi_k[i] * (mode.energy - model.omega(k));
        const complex<double> rhs =
            model.g(k) * (mode.phi_A + mode.phi_B * std::exp(-kI * k * mode.distance));
        sup = std::max(sup, std::abs(lhs - rhs));
    }
    r.field_sup = sup;
    return r;
}

std::vector<ScanRow> scan(const WaveguideModel& model, const ScanSpec& spec,
                          const SpectralOptions& opts) {
    if (spec.values.empty()) throw ParameterError("scan: empty value range");
    for (size_t i = 0; i + 1 < spec.values.size(); ++i)
        if (!(spec.values[i + 1] > spec.values[i]) && !(spec.values[i + 1] < spec.values[i]))
            throw ParameterError("scan: range must be strictly monotone");

    std::vector<ScanRow> rows;
    rows.reserve(spec.values.size());

    auto fill_from_mode = [&](ScanRow& row, const SingleExcitationMode& mode) {
        row.energy = mode.energy;
        row.kbar = mode.kbar;
        row.p_at = mode.p_at;
        row.omega0 = mode.omega0;
        switch (spec.observable) {
            case ScanObservable::p_at: row.observable_value = mode.p_at; break;
            case ScanObservable::energy: row.observable_value = mode.energy; break;
            case ScanObservable::omega0_required: row.observable_value = mode.omega0; break;
            case ScanObservable::detuning:
                row.observable_value =
                    spec.fixed_omega0 ? mode.omega0 - *spec.fixed_omega0 : 0.0;
                break;
        }
    };

    for (double v : spec.values) {
        ScanRow row;
        row.value = v;
        row.status = "ok";
        try {
            switch (spec.axis) {
                case ScanSpec::Axis::distance: {
                    row.param = "d";
                    auto [w0, mode] = required_omega0_for_bic(model, v, spec.n, opts);
                    fill_from_mode(row, mode);
                    if (spec.fixed_omega0 &&
                        std::abs(w0 - *spec.fixed_omega0) > opts.resonance_tol)
                        row.status = "no_solution";  // resonance condition not met at this d
                    break;
                }
                case ScanSpec::Axis::omega0: {
                    row.param = "omega0";
                    if (!(v > model.cutoff_M))
                        throw NoSolutionError("omega0 at or below the threshold M");
                    const double k0 = model.omega_inverse(v);
                    if (!(k0 > 0.0)) throw NoSolutionError("omega0 at threshold");
                    const double d_free = spec.n * kPi / k0;
                    auto sol = solve_bic_fixed_frequency(model, v, spec.n,
                                                         {0.7 * d_free, 1.4 * d_free}, opts);
                    fill_from_mode(row, sol.mode);
                    break;
                }
                case ScanSpec::Axis::lambda: {
                    row.param = "lambda";
                    if (!spec.fixed_d)
                        throw ParameterError("lambda scan requires a fixed distance d");
                    auto scaled = make_rectangular_model(
                        model.cutoff_M, model.regulator_scale, v,
                        model.profile == "flat_gauss" ? CouplingProfile::flat_gauss
                                                      : CouplingProfile::inv_sqrt_gauss);
                    auto [w0, mode] = required_omega0_for_bic(scaled, *spec.fixed_d, spec.n, opts);
                    fill_from_mode(row, mode);
                    break;
                }
            }
        } catch (const NoSolutionError&) {
            row.status = "no_solution";
            row.energy = row.kbar = row.p_at = row.omega0 = row.observable_value = std::nullopt;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string scan_to_csv(const std::vector<ScanRow>& rows) {
    CsvWriter csv;
    csv.header({"param", "value", "E", "kbar", "p_at", "omega0", "status"});
    auto cell = [](const std::optional<double>& x) {
        return x ? format_double(*x) : std::string();
    };
    for (const auto& r : rows) {
        csv.row({r.param, format_double(r.value), cell(r.energy), cell(r.kbar),
                 cell(r.p_at), cell(r.omega0), r.status});
    }
    return csv.str();
}

}  // namespace wgqed
