#include "wgqed/model.hpp"

#include <algorithm>
#include <cmath>

namespace wgqed {

namespace {

double central_diff(const std::function<double(double)>& f, double k, int order) {
    const double h = 1e-4 * std::max(1.0, std::abs(k));
    switch (order) {
        case 1:
            return (f(k + h) - f(k - h)) / (2 * h);
        case 2:
            return (f(k + h) - 2 * f(k) + f(k - h)) / (h * h);
        case 3:
            return (f(k + 2 * h) - 2 * f(k + h) + 2 * f(k - h) - f(k - 2 * h)) / (2 * h * h * h);
        default:
            throw ParameterError("central_diff: unsupported order");
    }
}

}  // namespace

double WaveguideModel::omega_prime(double k) const {
    return dispersion_d1 ? dispersion_d1(k) : central_diff(dispersion, k, 1);
}

double WaveguideModel::omega_second(double k) const {
    return dispersion_d2 ? dispersion_d2(k) : central_diff(dispersion, k, 2);
}

double WaveguideModel::omega_third(double k) const {
    return dispersion_d3 ? dispersion_d3(k) : central_diff(dispersion, k, 3);
}

double WaveguideModel::omega_inverse(double w) const {
    if (w < cutoff_M) throw ParameterError("omega_inverse: frequency below cutoff M");
    if (w == cutoff_M) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (dispersion(hi) < w) {
        hi *= 2.0;
        if (hi > 1e30) throw NumericalError("omega_inverse: no k with omega(k) >= w");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (dispersion(mid) < w)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

void EmitterConfig::validate(const WaveguideModel& model) const {
    if (!(omega0 > model.cutoff_M))
        throw ParameterError("emitter omega0 must exceed the cutoff M for propagation");
    if (!(distance > 0.0)) throw ParameterError("emitter distance d must be positive");
    if (levels && *levels < 0) throw ParameterError("emitter level count must be nonnegative");
}

WaveguideModel make_rectangular_model(double M, double k_c, double lambda,
                                      CouplingProfile profile) {
    if (!(M > 0.0)) throw ParameterError("make_rectangular_model: M must be positive");
    if (!(k_c > 0.0)) throw ParameterError("make_rectangular_model: k_c must be positive");
    if (lambda < 0.0) throw ParameterError("make_rectangular_model: lambda must be nonnegative");

    WaveguideModel m;
    m.cutoff_M = M;
    m.coupling_scale = lambda;
    m.regulator_scale = k_c;
    m.profile = profile == CouplingProfile::inv_sqrt_gauss ? "inv_sqrt_gauss" : "flat_gauss";
    m.dispersion = [M](double k) { return std::sqrt(k * k + M * M); };
    m.dispersion_d1 = [M](double k) { return k / std::sqrt(k * k + M * M); };
    m.dispersion_d2 = [M](double k) {
        const double w = std::sqrt(k * k + M * M);
        return M * M / (w * w * w);
    };
    m.dispersion_d3 = [M](double k) {
        const double w = std::sqrt(k * k + M * M);
        return -3.0 * M * M * k / (w * w * w * w * w);
    };
    if (profile == CouplingProfile::inv_sqrt_gauss) {
        m.coupling = [M, k_c, lambda](double k) {
            const double w = std::sqrt(k * k + M * M);
            const double x = k / k_c;
            return lambda * std::sqrt(M / w) * std::exp(-x * x);
        };
    } else {
        m.coupling = [k_c, lambda](double k) {
            const double x = k / k_c;
            return lambda * std::exp(-x * x);
        };
    }
    return m;
}

double integration_cutoff(const WaveguideModel& model, double k_ref, double tail_eps) {
    const double lam = model.coupling_scale;
    const double kc = model.regulator_scale;
    double reach = kc;
    if (lam > 0.0 && lam * lam > tail_eps) {
        reach = kc * std::sqrt(std::log(lam * lam / tail_eps));
    }
    return std::abs(k_ref) + std::max(reach, kc);
}

double coupling_norm_sq(const WaveguideModel& model, double abs_tol) {
    if (model.coupling_scale == 0.0) return 0.0;
    const double kmax = integration_cutoff(model, 0.0);
    QuadOptions opt;
    opt.abs_tol = abs_tol;
    return integrate([&](double k) {
        const double gk = model.g(k);
        return gk * gk;
    }, -kmax, kmax, opt);
}

std::vector<CheckResult> validate_assumptions(const WaveguideModel& model,
                                              std::span<const double> probe_grid) {
    if (probe_grid.empty())
        throw PreconditionError("validate_assumptions: probe grid must be nonempty");

    std::vector<CheckResult> out;

    // Symmetry of omega and g^2.
    double viol_w = 0.0, viol_g = 0.0;
    for (double k : probe_grid) {
        viol_w = std::max(viol_w, std::abs(model.omega(k) - model.omega(-k)));
        const double gp = model.g(k), gm = model.g(-k);
        viol_g = std::max(viol_g, std::abs(gp * gp - gm * gm));
    }
    out.push_back({"omega_even", viol_w <= 1e-12, viol_w, "max |omega(k)-omega(-k)|"});
    out.push_back({"g_squared_even", viol_g <= 1e-12, viol_g, "max |g(k)^2-g(-k)^2|"});

    // omega increasing in |k| and bounded below by M.
    std::vector<double> absk(probe_grid.begin(), probe_grid.end());
    for (double& k : absk) k = std::abs(k);
    std::sort(absk.begin(), absk.end());
    double viol_mono = 0.0, viol_floor = 0.0;
    for (size_t i = 0; i + 1 < absk.size(); ++i) {
        if (absk[i + 1] - absk[i] < 1e-12) continue;
        const double dw = model.omega(absk[i + 1]) - model.omega(absk[i]);
        if (dw < 0.0) viol_mono = std::max(viol_mono, -dw);
    }
    for (double k : absk)
        viol_floor = std::max(viol_floor, model.cutoff_M - model.omega(k));
    out.push_back({"omega_monotone_in_abs_k", viol_mono == 0.0, viol_mono,
                   "max decrease of omega along |k|"});
    out.push_back({"omega_above_cutoff", viol_floor <= 1e-12, viol_floor,
                   "max of M - omega(k)"});

    // Low-pass condition: integral of g^2/(1+omega) converges under range
    // doubling. A flat (unregulated) coupling grows logarithmically and fails.
    {
        double kmaxp = 0.0;
        for (double k : probe_grid) kmaxp = std::max(kmaxp, std::abs(k));
        double R = std::max(10.0, 2.0 * kmaxp);
        QuadOptions opt;
        opt.abs_tol = 1e-10;
        auto lowpass = [&](double a, double b) {
            auto r = integrate_adaptive<double>([&](double k) {
                const double gk = model.g(k);
                return gk * gk / (1.0 + model.omega(k));
            }, a, b, opt);
            return r.value;
        };
        double total = lowpass(-R, R);
        double increment = 0.0;
        bool converged = false;
        for (int round = 0; round < 8; ++round) {
            increment = lowpass(-2 * R, -R) + lowpass(R, 2 * R);
            total += increment;
            R *= 2.0;
            if (std::abs(increment) < 1e-8 * std::max(1.0, std::abs(total))) {
                converged = true;
                break;
            }
        }
        out.push_back({"low_pass_integral_converges", converged, std::abs(increment),
                       "last range-doubling increment"});
    }

    return out;
}

}  // namespace wgqed
