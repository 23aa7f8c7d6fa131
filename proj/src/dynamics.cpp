#include "wgqed/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wgqed/io_util.hpp"
#include "wgqed/quadrature.hpp"

#ifdef WGQED_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace wgqed {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr std::complex<double> kI{0.0, 1.0};
}  // namespace

DiscretizedModel discretize(const WaveguideModel& model, const EmitterConfig& emitters,
                            int cells, int modes_per_unit, int n) {
    emitters.validate(model);
    if (cells < 10) throw ParameterError("discretize: cells must be >= 10");
    if (modes_per_unit < 1) throw ParameterError("discretize: modes_per_unit must be >= 1");
    if (n < 1) throw ParameterError("discretize: resonance index n must be >= 1");
    if (modes_per_unit <= n)
        throw ParameterError("discretize: modes_per_unit must exceed n so that the grid "
                             "reaches kbar = n*pi/d (suggested modes_per_unit >= " +
                             std::to_string(n + 1) + ")");

    DiscretizedModel dm;
    dm.cells = cells;
    dm.modes_per_unit = modes_per_unit;
    dm.distance = emitters.distance;
    dm.omega0 = emitters.omega0;
    dm.resonance_n = n;
    dm.box_length = 2.0 * emitters.distance * cells;
    dm.dk = 2.0 * kPi / dm.box_length;
    dm.j_max = modes_per_unit * cells;
    dm.n_modes = 2 * dm.j_max + 1;
    dm.kbar = n * kPi / emitters.distance;

    // j* = kbar / dk = n * cells, integral for every integer cell count with
    // L = 2 d cells; the check guards alternative box conventions.
    const double j_star_real = dm.kbar / dm.dk;
    dm.j_star = static_cast<int>(std::lround(j_star_real));
    if (std::abs(j_star_real - dm.j_star) > 1e-6)
        throw ParameterError("discretize: kbar does not fall on the momentum grid; "
                             "choose cells so that n*cells is an integer");
    if (dm.j_star > dm.j_max)
        throw ParameterError("discretize: grid does not reach kbar; increase modes_per_unit");

    dm.k.resize(dm.n_modes);
    dm.omega_k.resize(dm.n_modes);
    dm.g_k.resize(dm.n_modes);
    dm.phase.resize(dm.n_modes);
    const double root_dk = std::sqrt(dm.dk);
    for (int j = -dm.j_max; j <= dm.j_max; ++j) {
        const int i = j + dm.j_max;
        double kj = j * dm.dk;
        // Pin the resonant momenta to the exact analytic expression so the
        // sampled mode and the grid share bit-identical kbar.
        if (j == dm.j_star) kj = dm.kbar;
        if (j == -dm.j_star) kj = -dm.kbar;
        dm.k[i] = kj;
        dm.omega_k[i] = model.omega(kj);
        dm.g_k[i] = model.g(kj) * root_dk;
        dm.phase[i] = std::exp(kI * kj * dm.distance);
    }

    dm.group_velocity = model.omega_prime(dm.kbar);
    dm.revival_time = dm.group_velocity > 0.0 ? dm.box_length / dm.group_velocity : 0.0;

    // Convergence diagnostic: sum_j g_j^2 against the integral over the
    // covered momentum window.
    double gsum = 0.0;
    for (double g : dm.g_k) gsum += g * g;
    if (model.coupling_scale > 0.0) {
        QuadOptions q{1e-12, 30000};
        const double cover = dm.j_max * dm.dk + 0.5 * dm.dk;
        const double gint = integrate([&](double k) {
            const double gk = model.g(k);
            return gk * gk;
        }, -cover, cover, q);
        dm.coupling_sum_rel_error = gint != 0.0 ? std::abs(gsum - gint) / gint : 0.0;
    }
    return dm;
}

Eigen::MatrixXcd build_hamiltonian_N1(const DiscretizedModel& dm) {
    const int nm = dm.n_modes;
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(nm + 2, nm + 2);
    H(0, 0) = dm.omega0;
    H(1, 1) = dm.omega0;
    for (int i = 0; i < nm; ++i) {
        H(2 + i, 2 + i) = dm.omega_k[i];
        H(0, 2 + i) = dm.g_k[i];
        H(2 + i, 0) = dm.g_k[i];
        H(1, 2 + i) = dm.g_k[i] * dm.phase[i];
        H(2 + i, 1) = dm.g_k[i] * std::conj(dm.phase[i]);
    }
    return H;
}

Eigen::VectorXcd sample_mode_vector(const DiscretizedModel& dm,
                                    const SingleExcitationMode& mode) {
    Eigen::VectorXcd v(dm.n_modes + 2);
    v(0) = mode.phi_A;
    v(1) = mode.phi_B;
    const double root_dk = std::sqrt(dm.dk);
    for (int i = 0; i < dm.n_modes; ++i) v(2 + i) = mode.phi(dm.k[i]) * root_dk;
    return v;
}

double ladder_residual(const DiscretizedModel& dm, const SingleExcitationMode& mode) {
    const SectorBasis basis = build_sector_basis(dm, 1);
    const SectorHamiltonian H(dm, basis);
    const Eigen::VectorXcd v = sample_mode_vector(dm, mode);
    return (H.apply(v) - mode.energy * v).norm();
}

DenseEig dense_hermitian_eig(const Eigen::MatrixXcd& H, bool with_vectors) {
    const int n = static_cast<int>(H.rows());
    DenseEig out;
    out.values.resize(n);
#ifdef WGQED_HAVE_LAPACKE
    out.vectors = H;
    const int info = LAPACKE_zheevd(
        LAPACK_COL_MAJOR, with_vectors ? 'V' : 'N', 'L', n,
        reinterpret_cast<lapack_complex_double*>(out.vectors.data()), n, out.values.data());
    if (info != 0)
        throw NumericalError("zheevd failed with info = " + std::to_string(info));
    if (!with_vectors) out.vectors.resize(0, 0);
#else
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        H, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("SelfAdjointEigenSolver failed");
    out.values = es.eigenvalues();
    if (with_vectors) out.vectors = es.eigenvectors();
#endif
    return out;
}

BicCandidate bic_candidate_N1(const DiscretizedModel& dm, const SingleExcitationMode& mode) {
    const auto eig = dense_hermitian_eig(build_hamiltonian_N1(dm), true);
    Eigen::VectorXcd v = sample_mode_vector(dm, mode);
    v.normalize();
    BicCandidate best;
    for (int i = 0; i < eig.values.size(); ++i) {
        const double ov = std::norm(eig.vectors.col(i).dot(v));
        if (ov > best.overlap_sq) {
            best.overlap_sq = ov;
            best.index = i;
            best.eigenvalue = eig.values(i);
        }
    }
    best.eigenvalue_error = std::abs(best.eigenvalue - mode.energy);
    return best;
}

long long SectorBasis::index(int a, int b) const {
    if (sector == 1) return a;
    if (a > b) std::swap(a, b);
    // Upper-triangle (a <= b) row-major offset.
    const long long n = n_orbitals;
    return a * n - static_cast<long long>(a) * (a - 1) / 2 + (b - a);
}

std::pair<int, int> SectorBasis::occupation(long long idx) const {
    if (sector == 1) return {static_cast<int>(idx), -1};
    const long long n = n_orbitals;
    int a = 0;
    long long row_start = 0;
    while (row_start + (n - a) <= idx) {
        row_start += n - a;
        ++a;
    }
    const int b = a + static_cast<int>(idx - row_start);
    return {a, b};
}

SectorBasis build_sector_basis(const DiscretizedModel& dm, int sector) {
    if (sector != 1 && sector != 2)
        throw ParameterError("build_sector_basis: only sectors N = 1, 2 are supported "
                             "(exact state-vector evolution beyond N = 2 is out of scope)");
    if (sector == 2 && dm.n_modes > 601)
        throw ParameterError("build_sector_basis: N = 2 capped at N_modes <= 601");
    SectorBasis basis;
    basis.sector = sector;
    basis.n_orbitals = dm.n_modes + 2;
    basis.dimension = sector == 1
                          ? basis.n_orbitals
                          : static_cast<long long>(basis.n_orbitals) * (basis.n_orbitals + 1) / 2;
    return basis;
}

SectorHamiltonian::SectorHamiltonian(const DiscretizedModel& dm, const SectorBasis& basis)
    : basis_(basis) {
    const int n = basis.n_orbitals;
    std::vector<Eigen::Triplet<std::complex<double>>> trip;
    trip.reserve(4 * n);
    trip.emplace_back(0, 0, dm.omega0);
    trip.emplace_back(1, 1, dm.omega0);
    for (int i = 0; i < dm.n_modes; ++i) {
        trip.emplace_back(2 + i, 2 + i, dm.omega_k[i]);
        if (dm.g_k[i] != 0.0) {
            trip.emplace_back(0, 2 + i, dm.g_k[i]);
            trip.emplace_back(2 + i, 0, dm.g_k[i]);
            trip.emplace_back(1, 2 + i, dm.g_k[i] * dm.phase[i]);
            trip.emplace_back(2 + i, 1, dm.g_k[i] * std::conj(dm.phase[i]));
        }
    }
    h1_.resize(n, n);
    h1_.setFromTriplets(trip.begin(), trip.end());
}

Eigen::VectorXcd SectorHamiltonian::apply(const Eigen::VectorXcd& x) const {
    const int n = basis_.n_orbitals;
    if (basis_.sector == 1) return h1_ * x;

    // Two-boson action through the symmetric coefficient matrix Psi:
    // |s> = sum_pq Psi_pq p+ q+ |0> with c_{a<b} = 2 Psi_ab, c_aa = sqrt(2) Psi_aa.
    // A one-body H maps Psi -> Phi = h Psi + (h Psi)^T.
    static const double kRoot2 = std::sqrt(2.0);
    Eigen::MatrixXcd Psi(n, n);
    long long idx = 0;
    for (int a = 0; a < n; ++a) {
        Psi(a, a) = x(idx++) / kRoot2;
        for (int b = a + 1; b < n; ++b) {
            const std::complex<double> half = 0.5 * x(idx++);
            Psi(a, b) = half;
            Psi(b, a) = half;
        }
    }
    const Eigen::MatrixXcd hPsi = h1_ * Psi;
    Eigen::VectorXcd y(basis_.dimension);
    idx = 0;
    for (int a = 0; a < n; ++a) {
        y(idx++) = kRoot2 * 2.0 * hPsi(a, a);  // Phi_aa = 2 hPsi_aa
        for (int b = a + 1; b < n; ++b) y(idx++) = 2.0 * (hPsi(a, b) + hPsi(b, a));
    }
    return y;
}

double SectorHamiltonian::expectation(const Eigen::VectorXcd& x) const {
    const double n2 = x.squaredNorm();
    if (n2 == 0.0) return 0.0;
    return x.dot(apply(x)).real() / n2;
}

SectorState make_initial_state(const SectorBasis& basis, InitialKind kind, int n_parity) {
    const double s = (n_parity % 2 == 1) ? 1.0 : -1.0;  // (-1)^(n+1)
    SectorState st;
    st.sector = basis.sector;
    st.amp = Eigen::VectorXcd::Zero(basis.dimension);
    const double r2 = std::sqrt(2.0);
    if (basis.sector == 1) {
        switch (kind) {
            case InitialKind::psi_n:
                st.amp(0) = 1.0 / r2;
                st.amp(1) = s / r2;
                break;
            case InitialKind::single_a:
                st.amp(0) = 1.0;
                break;
            case InitialKind::bell_minus:
                st.amp(0) = -s / r2;
                st.amp(1) = 1.0 / r2;
                break;
        }
        return st;
    }
    if (kind != InitialKind::psi_n)
        throw ParameterError("initial state kind is defined for N = 1 only");
    // psi^(2) x vac: Psi = u u^T / sqrt(2) with u = (1, s, 0, ...)/sqrt(2).
    st.amp(basis.index(0, 0)) = r2 * (0.5 / r2);
    st.amp(basis.index(1, 1)) = r2 * (0.5 / r2);
    st.amp(basis.index(0, 1)) = 2.0 * (0.5 * s / r2);
    return st;
}

SectorState make_custom_state(const SectorBasis& basis,
                              const std::vector<std::pair<long long, std::complex<double>>>& amps) {
    SectorState st;
    st.sector = basis.sector;
    st.amp = Eigen::VectorXcd::Zero(basis.dimension);
    for (const auto& [idx, a] : amps) {
        if (idx < 0 || idx >= basis.dimension)
            throw ParameterError("custom state index out of range");
        st.amp(idx) = a;
    }
    const double n = st.amp.norm();
    if (!(n > 0.0)) throw ParameterError("custom state has zero norm");
    st.amp /= n;
    return st;
}

namespace {

// One Krylov step: builds a Lanczos basis of size up to m_max with full
// reorthogonalization, projects H onto it (Rayleigh-Ritz), then takes the
// largest dt <= dt_request whose local error estimate stays within
// tol_rate * dt. The basis is dt-independent, so shrinking dt is free.
struct LanczosStepper {
    const SectorHamiltonian& H;
    int m_max;

    std::pair<Eigen::VectorXcd, double> step(const Eigen::VectorXcd& v, double dt_request,
                                             double tol_rate) const {
        const double beta0 = v.norm();
        if (beta0 == 0.0) return {v, dt_request};
        const long long dim = v.size();
        const int m = static_cast<int>(std::min<long long>(m_max, dim));

        Eigen::MatrixXcd V(dim, m);
        Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(m, m);
        V.col(0) = v / beta0;
        int m_used = m;
        double beta_last = 0.0;
        bool invariant = false;
        Eigen::VectorXcd w, coeffs;
        for (int j = 0; j < m; ++j) {
            w = H.apply(V.col(j));
            // Two-pass Gram-Schmidt in BLAS-2 form; the second pass only
            // mops up rounding and stays out of the projection T.
            auto Vj = V.leftCols(j + 1);
            coeffs.noalias() = Vj.adjoint() * w;
            w.noalias() -= Vj * coeffs;
            for (int i = 0; i <= j; ++i) {
                T(i, j) = coeffs(i);
                T(j, i) = std::conj(coeffs(i));
            }
            coeffs.noalias() = Vj.adjoint() * w;
            w.noalias() -= Vj * coeffs;
            beta_last = w.norm();
            if (j + 1 < m) {
                if (beta_last < 1e-13) {  // happy breakdown: invariant subspace
                    m_used = j + 1;
                    invariant = true;
                    break;
                }
                V.col(j + 1) = w / beta_last;
            }
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(T.topLeftCorner(m_used, m_used));
        const Eigen::MatrixXcd& Z = es.eigenvectors();
        const Eigen::VectorXd& theta = es.eigenvalues();

        auto small_exp = [&](double dt) {
            // y = exp(-i T dt) e_1 = Z exp(-i Theta dt) Z^H e_1
            Eigen::VectorXcd phases(m_used);
            for (int r = 0; r < m_used; ++r) phases(r) = std::exp(-kI * theta(r) * dt);
            return (Z * (phases.array() * Z.row(0).adjoint().array()).matrix()).eval();
        };

        double dt = dt_request;
        Eigen::VectorXcd y;
        for (int halvings = 0; halvings < 60; ++halvings) {
            y = small_exp(dt);
            const double err = invariant ? 0.0 : beta_last * std::abs(y(m_used - 1));
            if (err <= tol_rate * dt || dt <= 1e-12) break;
            dt *= 0.5;
        }
        return {beta0 * (V.leftCols(m_used) * y), dt};
    }
};

}  // namespace

SectorState evolve(const DiscretizedModel& dm, const SectorState& state, double t,
                   double tol) {
    if (t < 0.0) throw ParameterError("evolve: t must be nonnegative");
    SectorState out = state;
    if (t == 0.0) {
        out.wrap_flagged = out.time > 0.8 * dm.revival_time;
        return out;
    }
    const SectorBasis basis = build_sector_basis(dm, state.sector);
    if (state.amp.size() != basis.dimension)
        throw ParameterError("evolve: state dimension does not match the sector basis");
    const SectorHamiltonian H(dm, basis);
    const LanczosStepper stepper{H, 48};
    const double tol_rate = tol / t;

    double remaining = t;
    while (remaining > 1e-14 * t) {
        auto [next, taken] = stepper.step(out.amp, remaining, tol_rate);
        out.amp = std::move(next);
        remaining -= taken;
    }
    out.time = state.time + t;
    out.wrap_flagged = out.time > 0.8 * dm.revival_time;
    return out;
}

namespace {

double atomic_population(const SectorBasis& basis, const Eigen::VectorXcd& amp) {
    double p = 0.0;
    if (basis.sector == 1) {
        p = std::norm(amp(0)) + std::norm(amp(1));
    } else {
        for (long long i = 0; i < basis.dimension; ++i) {
            const auto [a, b] = basis.occupation(i);
            const int count = (a < 2 ? 1 : 0) + (b < 2 ? 1 : 0);
            if (count) p += count * std::norm(amp(i));
        }
    }
    return p;
}

Eigen::VectorXcd psi_n_vector(const SectorBasis& basis, int n_parity) {
    return make_initial_state(basis, InitialKind::psi_n, n_parity).amp;
}

}  // namespace

RelaxationResult relaxation_experiment(const DiscretizedModel& dm, const SectorState& initial,
                                       double horizon, int samples, double tol) {
    if (samples < 1) throw ParameterError("relaxation_experiment: need at least one sample");
    if (horizon < 0.0) throw ParameterError("relaxation_experiment: negative horizon");
    const SectorBasis basis = build_sector_basis(dm, initial.sector);
    const SectorHamiltonian H(dm, basis);
    const Eigen::VectorXcd psi_ref = psi_n_vector(basis, dm.resonance_n);

    RelaxationResult res;
    res.horizon = horizon;
    res.revival_time = dm.revival_time;
    res.table.reserve(samples);

    const double e0 = H.expectation(initial.amp);
    const double e_scale = std::max(1.0, std::abs(e0));

    SectorState st = initial;
    const double step_tol = tol / std::max(1, samples);
    for (int i = 0; i < samples; ++i) {
        const double ti = samples == 1 ? 0.0 : horizon * i / (samples - 1);
        st = evolve(dm, st, ti - st.time, step_tol);
        TrajectoryPoint pt;
        pt.t = ti;
        pt.norm = st.amp.norm();
        pt.p_atomic = atomic_population(basis, st.amp);
        pt.overlap_psi_n = std::norm(psi_ref.dot(st.amp));
        pt.energy = H.expectation(st.amp);
        pt.flagged = ti > 0.8 * dm.revival_time;
        res.table.push_back(pt);
        res.max_norm_drift = std::max(res.max_norm_drift, std::abs(pt.norm - 1.0));
        res.max_energy_drift =
            std::max(res.max_energy_drift, std::abs(pt.energy - e0) / e_scale);
    }

    // Asymptote: mean over the final quarter of the unflagged horizon.
    const double t_eff = std::min(horizon, 0.8 * dm.revival_time);
    const double t_from = 0.75 * t_eff;
    double sum_p = 0.0, sum_ov = 0.0;
    int count = 0;
    for (const auto& pt : res.table) {
        if (pt.flagged || pt.t < t_from || pt.t > t_eff) continue;
        sum_p += pt.p_atomic;
        sum_ov += pt.overlap_psi_n;
        ++count;
    }
    if (count > 0) {
        res.asymptote_p_atomic = sum_p / count;
        res.asymptote_overlap = sum_ov / count;
    } else if (!res.table.empty()) {
        res.asymptote_p_atomic = res.table.back().p_atomic;
        res.asymptote_overlap = res.table.back().overlap_psi_n;
    }
    return res;
}

std::vector<SweepPoint> detuning_sweep(const WaveguideModel& model,
                                       const EmitterConfig& emitters, int n,
                                       const std::vector<double>& offsets, int cells,
                                       int modes_per_unit, double horizon_factor,
                                       int samples, double tol) {
    std::vector<SweepPoint> out;
    out.reserve(offsets.size());
    for (double off : offsets) {
        SweepPoint pt;
        pt.offset = off;
        try {
            EmitterConfig shifted = emitters;
            shifted.omega0 += off;
            const auto dm = discretize(model, shifted, cells, modes_per_unit, n);
            const auto basis = build_sector_basis(dm, 1);
            const auto init = make_initial_state(basis, InitialKind::psi_n, n);
            const double horizon = horizon_factor * dm.revival_time;
            const auto res = relaxation_experiment(dm, init, horizon, samples, tol);
            pt.asymptote = res.asymptote_p_atomic;
        } catch (const Error& e) {
            pt.status = std::string("error: ") + e.what();
        }
        out.push_back(std::move(pt));
    }
    return out;
}

std::string trajectory_to_csv(const RelaxationResult& result) {
    CsvWriter csv;
    csv.header({"t", "P_at", "overlap_psiN", "norm", "flag"});
    for (const auto& pt : result.table) {
        csv.row({format_double(pt.t), format_double(pt.p_atomic),
                 format_double(pt.overlap_psi_n), format_double(pt.norm),
                 pt.flagged ? "1" : "0"});
    }
    return csv.str();
}

std::string sweep_to_csv(const std::vector<SweepPoint>& sweep) {
    CsvWriter csv;
    csv.header({"param", "value", "asymptote", "status"});
    for (const auto& pt : sweep)
        csv.row({"detuning", format_double(pt.offset), format_double(pt.asymptote),
                 pt.status});
    return csv.str();
}

}  // namespace wgqed
