#pragma once

// Time evolution of a particle pair under the open-system two-particle NLSE
//
//   i dPsi/dt = [theta(t - t1) H1(rho1) (x) I + theta(t - t2) I (x) H2(rho2)] Psi,
//
// where theta(x) = 1 for x < 0 and 0 otherwise, so the k-th Hamiltonian is
// switched off from the detection time t_k onwards. t_k = +inf gives the
// closed-system equation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nlqm/hamfun.hpp"
#include "nlqm/qstate.hpp"

namespace nlqm {

inline constexpr double kNever = std::numeric_limits<double>::infinity();
inline constexpr double kMaxStep = 0.01;
inline constexpr double kNormDriftLimit = 1e-6;
inline constexpr double kUnitarityDriftLimit = 1e-6;

/// Detection times (t1, t2). +inf means "never detected".
struct DetectionSchedule {
    double t1 = kNever;
    double t2 = kNever;

    static DetectionSchedule closed() { return {}; }

    void validate() const {
        if (std::isnan(t1) || t1 < 0.0) throw ValidationError("DetectionSchedule: t1 must be >= 0");
        if (std::isnan(t2) || t2 < 0.0) throw ValidationError("DetectionSchedule: t2 must be >= 0");
    }

    double last() const { return std::max(t1, t2); }
    bool finite() const { return std::isfinite(t1) && std::isfinite(t2); }
};

/// theta(x): 1 for x < 0, 0 otherwise.
constexpr double step_theta(double x) { return x < 0.0 ? 1.0 : 0.0; }

/// kappa(t, t_k) = int_0^t theta(tau - t_k) dtau = min(t, t_k).
constexpr double kappa(double t, double tk) { return std::min(t, tk); }

struct EvolutionResult {
    double time = 0.0;
    StateVector state;
    DensityMatrix rho1;
    DensityMatrix rho2;
};

/// Effective one-particle unitaries with Psi(t) = (V1 (x) V2) Psi0.
struct Propagators {
    Matrix first;
    Matrix second;
};

enum class Engine { automatic, closed_form, integrator };

struct EvolveOptions {
    Engine engine = Engine::automatic;
    double dt = 1e-3;
};

namespace detail {

inline Dims pair_dims(const StateVector& psi0, const HamiltonianFunctional& f1, const HamiltonianFunctional& f2) {
    const Dims dims{f1.dim(), f2.dim()};
    if (psi0.dim() != dims.total())
        throw ValidationError("evolution: state dimension " + std::to_string(psi0.dim()) +
                              " does not match functional dimensions " + std::to_string(dims.first) + "x" +
                              std::to_string(dims.second));
    return dims;
}

inline void check_time(double t) {
    if (!std::isfinite(t) || t < 0.0) throw ValidationError("evolution: query time must be finite and >= 0");
}

inline void check_step(double dt) {
    if (!(dt > 0.0 && dt <= kMaxStep)) throw ValidationError("evolution: dt must lie in (0, 0.01]");
}

inline EvolutionResult make_result(double t, Vector amps, Dims dims, double tol) {
    StateVector s(std::move(amps), tol);
    DensityMatrix r1 = reduce(s, Subsystem::first, dims);
    DensityMatrix r2 = reduce(s, Subsystem::second, dims);
    return {t, std::move(s), std::move(r1), std::move(r2)};
}

/// Fixed-step classical RK4 for the pair, split at the detection times so no
/// step straddles a discontinuity of theta.
///
/// The pair equation is integrated in its factorized form: with M0 the
/// coefficient matrix of Psi0, Psi(t) = V1 M0 V2^T where
///
///   i dV_k/dt = theta(t - t_k) H_k(V_k rho_k(0) V_k^dagger) V_k,   V_k(0) = I.
///
/// This is the same equation (rho_k(t) = V_k rho_k(0) V_k^dagger exactly,
/// since the other factor is unitary), but RK4 never mixes the two
/// generators, so particle 1's discrete flow does not depend on anything
/// belonging to particle 2.
class OpenIntegrator {
public:
    OpenIntegrator(const StateVector& psi0, const HamiltonianFunctional& f1, const HamiltonianFunctional& f2,
                   DetectionSchedule sched, double dt, bool with_propagators)
        : f1_(f1), f2_(f2), sched_(sched), dims_(pair_dims(psi0, f1, f2)), dt_(dt),
          with_propagators_(with_propagators), m0_(coefficient_matrix(psi0.amplitudes(), dims_)) {
        sched_.validate();
        check_step(dt);
        rho1_0_ = m0_ * m0_.adjoint();
        rho2_0_ = m0_.transpose() * m0_.conjugate();
        v1_ = Matrix::Identity(m0_.rows(), m0_.rows());
        v2_ = Matrix::Identity(m0_.cols(), m0_.cols());
    }

    double time() const { return t_; }
    Dims dims() const { return dims_; }
    Vector state() const { return flatten(coefficients()); }
    const Matrix& v1() const { return v1_; }
    const Matrix& v2() const { return v2_; }

    void advance_to(double target) {
        check_time(target);
        if (target < t_) throw ValidationError("evolution: cannot integrate backwards in time");
        while (t_ < target) {
            double end = target;
            for (double tk : {sched_.t1, sched_.t2})
                if (tk > t_ && tk < end) end = tk;
            integrate_segment(end);
        }
    }

private:
    Matrix coefficients() const { return v1_ * m0_ * v2_.transpose(); }

    static Matrix rate(const HamiltonianFunctional& f, const Matrix& rho0, const Matrix& v) {
        const Matrix g = f.gradient_matrix(v * rho0 * v.adjoint());
        return cplx(0.0, -1.0) * (g * v);
    }

    static void rk4(Matrix& v, const HamiltonianFunctional& f, const Matrix& rho0, double h) {
        const Matrix k1 = rate(f, rho0, v);
        const Matrix k2 = rate(f, rho0, v + 0.5 * h * k1);
        const Matrix k3 = rate(f, rho0, v + 0.5 * h * k2);
        const Matrix k4 = rate(f, rho0, v + h * k3);
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    void integrate_segment(double end) {
        const double mid = t_ + 0.5 * (end - t_);
        const bool on1 = mid < sched_.t1;
        const bool on2 = mid < sched_.t2;
        if (!on1 && !on2) {  // both detected: the state is frozen
            t_ = end;
            return;
        }
        const double span = end - t_;
        const auto n = std::max<long long>(1, static_cast<long long>(std::ceil(span / dt_ - 1e-9)));
        const double h = span / static_cast<double>(n);
        const double start = t_;
        for (long long i = 0; i < n; ++i) {
            if (on1) rk4(v1_, f1_, rho1_0_, h);
            if (on2) rk4(v2_, f2_, rho2_0_, h);
            t_ = start + static_cast<double>(i + 1) * h;
            const double drift = std::abs(coefficients().norm() - 1.0);
            if (drift > kNormDriftLimit)
                throw NumericalError("evolution: norm drift " + detail::num(drift) + " at t = " + detail::num(t_) +
                                     " exceeds 1e-6; reduce dt");
        }
        t_ = end;
        if (with_propagators_) check_unitary();
    }

    void check_unitary() const {
        for (const Matrix* v : {&v1_, &v2_}) {
            const Matrix d = v->adjoint() * (*v) - Matrix::Identity(v->cols(), v->cols());
            const double drift = d.cwiseAbs().maxCoeff();
            if (drift > kUnitarityDriftLimit)
                throw NumericalError("effective_propagators: unitarity drift " + detail::num(drift) +
                                     " exceeds 1e-6; reduce dt");
        }
    }

    const HamiltonianFunctional& f1_;
    const HamiltonianFunctional& f2_;
    DetectionSchedule sched_;
    Dims dims_;
    double dt_;
    bool with_propagators_;
    Matrix m0_;
    Matrix rho1_0_;
    Matrix rho2_0_;
    Matrix v1_;
    Matrix v2_;
    double t_ = 0.0;
};

inline void check_sorted(const std::vector<double>& times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        check_time(times[i]);
        if (i > 0 && times[i] < times[i - 1]) throw ValidationError("evolution: sample times must be non-decreasing");
    }
}

}  // namespace detail

/// RK4 solution of the open-system pair equation at time t.
inline EvolutionResult evolve_open(const StateVector& psi0, const HamiltonianFunctional& f1,
                                   const HamiltonianFunctional& f2, DetectionSchedule sched, double t, double dt) {
    detail::check_time(t);
    detail::OpenIntegrator integ(psi0, f1, f2, sched, dt, false);
    integ.advance_to(t);
    return detail::make_result(t, integ.state(), integ.dims(), kNormDriftLimit);
}

/// Closed-system pair equation: evolve_open with both detection times at +inf.
inline EvolutionResult evolve_closed(const StateVector& psi0, const HamiltonianFunctional& f1,
                                     const HamiltonianFunctional& f2, double t, double dt) {
    return evolve_open(psi0, f1, f2, DetectionSchedule::closed(), t, dt);
}

/// One integration pass, returning the state at each of the non-decreasing `times`.
inline std::vector<EvolutionResult> evolve_open_at(const StateVector& psi0, const HamiltonianFunctional& f1,
                                                   const HamiltonianFunctional& f2, DetectionSchedule sched,
                                                   const std::vector<double>& times, double dt) {
    detail::check_sorted(times);
    detail::OpenIntegrator integ(psi0, f1, f2, sched, dt, false);
    std::vector<EvolutionResult> out;
    out.reserve(times.size());
    for (double t : times) {
        integ.advance_to(t);
        out.push_back(detail::make_result(t, integ.state(), integ.dims(), kNormDriftLimit));
    }
    return out;
}

/// Exact solution for the Curie-Weiss pair,
///   exp(-i A <sz(0)>_1 sz kappa(t,t1)) (x) exp(-i B <sz(0)>_2 sz kappa(t,t2)) |Psi0>,
/// using the conservation of <sz>_1 and <sz>_2.
inline EvolutionResult curie_weiss_closed_form(const StateVector& psi0, double a, double b, DetectionSchedule sched,
                                               double t) {
    if (psi0.dim() != 4) throw ValidationError("curie_weiss_closed_form: expected a two-qubit state");
    sched.validate();
    detail::check_time(t);
    const Dims dims{2, 2};
    const Observable sz = pauli::z();
    const double m1 = expect(reduce(psi0, Subsystem::first, dims), sz);
    const double m2 = expect(reduce(psi0, Subsystem::second, dims), sz);
    const double phase1 = a * m1 * kappa(t, sched.t1);
    const double phase2 = b * m2 * kappa(t, sched.t2);
    Matrix v1 = Matrix::Zero(2, 2);
    v1(0, 0) = std::polar(1.0, -phase1);
    v1(1, 1) = std::polar(1.0, phase1);
    Matrix v2 = Matrix::Zero(2, 2);
    v2(0, 0) = std::polar(1.0, -phase2);
    v2(1, 1) = std::polar(1.0, phase2);
    Vector amps = kron(v1, v2) * psi0.amplitudes();
    return detail::make_result(t, std::move(amps), dims, 10 * kNormTolerance);
}

/// Effective propagators V1, V2 at each of the non-decreasing `times`,
/// integrated through the same RK4 stages as the pair state.
inline std::vector<Propagators> effective_propagators_at(const StateVector& psi0, const HamiltonianFunctional& f1,
                                                         const HamiltonianFunctional& f2, DetectionSchedule sched,
                                                         const std::vector<double>& times, double dt) {
    detail::check_sorted(times);
    detail::OpenIntegrator integ(psi0, f1, f2, sched, dt, true);
    std::vector<Propagators> out;
    out.reserve(times.size());
    for (double t : times) {
        integ.advance_to(t);
        out.push_back({integ.v1(), integ.v2()});
    }
    return out;
}

inline Propagators effective_propagators(const StateVector& psi0, const HamiltonianFunctional& f1,
                                         const HamiltonianFunctional& f2, DetectionSchedule sched, double t,
                                         double dt) {
    return effective_propagators_at(psi0, f1, f2, sched, {t}, dt).front();
}

/// Whether the closed-form propagator applies to this pair of functionals.
inline bool closed_form_available(const HamiltonianFunctional& f1, const HamiltonianFunctional& f2) {
    return f1.curie_weiss_coefficient().has_value() && f2.curie_weiss_coefficient().has_value();
}

inline Engine resolve_engine(Engine engine, const HamiltonianFunctional& f1, const HamiltonianFunctional& f2) {
    if (engine == Engine::automatic) return closed_form_available(f1, f2) ? Engine::closed_form : Engine::integrator;
    if (engine == Engine::closed_form && !closed_form_available(f1, f2))
        throw ValidationError("closed-form engine requires Curie-Weiss functionals on both particles");
    return engine;
}

/// Open-system evolution through the selected engine.
inline std::vector<EvolutionResult> evolve_at(const StateVector& psi0, const HamiltonianFunctional& f1,
                                              const HamiltonianFunctional& f2, DetectionSchedule sched,
                                              const std::vector<double>& times, const EvolveOptions& opts = {}) {
    if (resolve_engine(opts.engine, f1, f2) == Engine::integrator)
        return evolve_open_at(psi0, f1, f2, sched, times, opts.dt);
    detail::check_sorted(times);
    const double a = *f1.curie_weiss_coefficient();
    const double b = *f2.curie_weiss_coefficient();
    std::vector<EvolutionResult> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(curie_weiss_closed_form(psi0, a, b, sched, t));
    return out;
}

inline EvolutionResult evolve(const StateVector& psi0, const HamiltonianFunctional& f1,
                              const HamiltonianFunctional& f2, DetectionSchedule sched, double t,
                              const EvolveOptions& opts = {}) {
    return evolve_at(psi0, f1, f2, sched, {t}, opts).front();
}

}  // namespace nlqm
