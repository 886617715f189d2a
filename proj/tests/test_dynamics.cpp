#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nlqm/dynamics.hpp"
#include "nlqm/random.hpp"
#include "nlqm/scenario.hpp"
#include "oracles.hpp"

using namespace nlqm;

namespace {

const DetectionSchedule kViC{kViCT1, kViCT2};

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

double dist(const StateVector& a, const StateVector& b) { return (a.amplitudes() - b.amplitudes()).norm(); }

// Piecewise 4x4 matrix exponential for linear functionals with detection times.
Vector linear_oracle(const Vector& psi0, const Matrix& h1, const Matrix& h2, DetectionSchedule s, double t) {
    std::vector<double> cuts{0.0};
    for (double c : {s.t1, s.t2})
        if (c < t) cuts.push_back(c);
    cuts.push_back(t);
    std::sort(cuts.begin(), cuts.end());
    Vector psi = psi0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        Matrix h = Matrix::Zero(4, 4);
        if (mid < s.t1) h += oracle::kron(h1, oracle::id2());
        if (mid < s.t2) h += oracle::kron(oracle::id2(), h2);
        psi = oracle::propagator(h, cuts[i + 1] - cuts[i]) * psi;
    }
    return psi;
}

std::vector<double> grid(double step, double end) {
    std::vector<double> t;
    for (int k = 0; k * step <= end + 1e-12; ++k) t.push_back(k * step);
    return t;
}

}  // namespace

TEST(Schedule, StepAndKappa) {
    EXPECT_EQ(step_theta(-1e-300), 1.0);
    EXPECT_EQ(step_theta(0.0), 0.0);
    EXPECT_EQ(step_theta(2.0), 0.0);
    EXPECT_EQ(kappa(2.0, 3.5), 2.0);
    EXPECT_EQ(kappa(5.0, 3.5), 3.5);
    EXPECT_EQ(kappa(1.0, kNever), 1.0);
}

TEST(Schedule, Validation) {
    EXPECT_THROW((DetectionSchedule{-1.0, 2.0}.validate()), ValidationError);
    EXPECT_THROW((DetectionSchedule{std::nan(""), 2.0}.validate()), ValidationError);
    EXPECT_NO_THROW(DetectionSchedule::closed().validate());
}

TEST(EvolveOpen, ZeroFunctionalLeavesStateUnchanged) {
    const auto r = evolve_open(vi_c_state(), zero_functional(), zero_functional(), kViC, 10.0, 1e-3);
    EXPECT_LT(dist(r.state, vi_c_state()), 1e-15);
}

TEST(EvolveOpen, ReferenceScenarioMatchesClosedForm) {
    const auto r = evolve_open(vi_c_state(), curie_weiss(kViCA), curie_weiss(kViCB), kViC, 10.0, 1e-3);
    const auto c = curie_weiss_closed_form(vi_c_state(), kViCA, kViCB, kViC, 10.0);
    EXPECT_LT(dist(r.state, c.state), 1e-6);
}

TEST(EvolveOpen, ClosedFormMatchesExplicitPhases) {
    const Vector psi0 = oracle::vi_c();
    const double m1 = oracle::kViCSz1;
    const double m2 = -oracle::kViCSz1;
    for (double t : {0.0, 1.0, 3.5, 5.0, 8.0, 10.0}) {
        const Matrix u1 = oracle::propagator(kViCA * m1 * oracle::sz(), std::min(t, kViCT1));
        const Matrix u2 = oracle::propagator(kViCB * m2 * oracle::sz(), std::min(t, kViCT2));
        const Vector ref = oracle::kron(u1, u2) * psi0;
        const auto c = curie_weiss_closed_form(vi_c_state(), kViCA, kViCB, kViC, t);
        EXPECT_LT((c.state.amplitudes() - ref).norm(), 1e-13) << "t=" << t;
    }
}

TEST(EvolveOpen, LinearMatchesMatrixExponential) {
    Sampler rng(31);
    for (int i = 0; i < 5; ++i) {
        const Observable h1 = rng.hermitian(2);
        const Observable h2 = rng.hermitian(2);
        const StateVector psi0 = rng.state(4);
        const DetectionSchedule s = rng.schedule(3.0);
        const auto r = evolve_open(psi0, linear_functional(h1), linear_functional(h2), s, 3.0, 1e-3);
        const Vector ref = linear_oracle(psi0.amplitudes(), h1.entries(), h2.entries(), s, 3.0);
        EXPECT_LT((r.state.amplitudes() - ref).norm(), 1e-8);
    }
}

TEST(EvolveOpen, SigmaZSigmaXOneUnit) {
    const auto f1 = linear_functional(pauli::z());
    const auto f2 = linear_functional(pauli::x());
    const auto r = evolve_open(singlet_state(), f1, f2, DetectionSchedule::closed(), 1.0, 1e-3);
    const Matrix h = oracle::kron(oracle::sz(), oracle::id2()) + oracle::kron(oracle::id2(), oracle::sx());
    const Vector ref = oracle::propagator(h, 1.0) * singlet_state().amplitudes();
    EXPECT_LT((r.state.amplitudes() - ref).norm(), 1e-8);
}

TEST(EvolveOpen, InitialTimeIsIdentity) {
    const auto c = curie_weiss_closed_form(vi_c_state(), kViCA, kViCB, kViC, 0.0);
    EXPECT_EQ(c.state.amplitudes(), vi_c_state().amplitudes());
    const auto r = evolve_open(vi_c_state(), curie_weiss(kViCA), curie_weiss(kViCB), kViC, 0.0, 1e-3);
    EXPECT_EQ(r.state.amplitudes(), vi_c_state().amplitudes());
}

TEST(EvolveOpen, ConservedSigmaZ) {
    const Observable z1 = tensor(pauli::z(), pauli::identity());
    const Observable z2 = tensor(pauli::identity(), pauli::z());
    const auto f1 = curie_weiss(kViCA);
    const auto f2 = curie_weiss(kViCB);
    const auto times = grid(0.1, 10.0);
    const auto rk = evolve_open_at(vi_c_state(), f1, f2, kViC, times, 1e-3);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto cf = curie_weiss_closed_form(vi_c_state(), kViCA, kViCB, kViC, times[i]);
        EXPECT_NEAR(expect(cf.state, z1), oracle::kViCSz1, 1e-12);
        EXPECT_NEAR(expect(cf.state, z2), -oracle::kViCSz1, 1e-12);
        EXPECT_NEAR(expect(rk[i].state, z1), oracle::kViCSz1, 1e-8);
        EXPECT_NEAR(expect(rk[i].state, z2), -oracle::kViCSz1, 1e-8);
    }
}

TEST(EvolveOpen, SecondParticleSigmaXFreezesAfterLastDetection) {
    const Observable x2 = tensor(pauli::identity(), pauli::x());
    const auto at = [&](double t) {
        return expect(curie_weiss_closed_form(vi_c_state(), kViCA, kViCB, kViC, t).state, x2);
    };
    EXPECT_GT(std::abs(at(7.9) - at(8.0)), 1e-6);
    EXPECT_NEAR(at(8.0), at(9.0), 1e-14);
    EXPECT_NEAR(at(8.0), at(10.0), 1e-14);
}

TEST(EvolveOpen, StateFrozenAfterLastDetection) {
    const auto f1 = curie_weiss(kViCA);
    const auto f2 = curie_weiss(kViCB);
    const auto rk = evolve_open_at(vi_c_state(), f1, f2, kViC, {8.0, 9.0, 12.0}, 1e-3);
    EXPECT_LT(dist(rk[0].state, rk[1].state), 1e-10);
    EXPECT_LT(dist(rk[0].state, rk[2].state), 1e-10);
}

TEST(EvolveOpen, NormPreserved) {
    Sampler rng(32);
    for (int i = 0; i < 5; ++i) {
        const auto r = evolve_open(rng.state(4), curie_weiss(rng.uniform(-10, 10)), curie_weiss(rng.uniform(-10, 10)),
                                   rng.schedule(10), 10.0, 1e-3);
        EXPECT_NEAR(r.state.norm(), 1.0, 1e-8);
    }
}

TEST(EvolveOpen, QueryPointsMatchSingleCalls) {
    const auto f1 = curie_weiss(kViCA);
    const auto f2 = curie_weiss(kViCB);
    const std::vector<double> times{0.0, 1.234, 3.5, 6.0, 10.0};
    const auto many = evolve_open_at(vi_c_state(), f1, f2, kViC, times, 1e-3);
    for (std::size_t i = 0; i < times.size(); ++i)
        EXPECT_LT(dist(many[i].state, evolve_open(vi_c_state(), f1, f2, kViC, times[i], 1e-3).state), 1e-12);
}

TEST(EvolveOpen, FourthOrderConvergence) {
    const auto f1 = curie_weiss(kViCA);
    const auto f2 = curie_weiss(kViCB);
    const auto exact = curie_weiss_closed_form(vi_c_state(), kViCA, kViCB, kViC, 10.0);
    std::vector<double> err;
    for (double dt : {1e-2, 5e-3, 2.5e-3})
        err.push_back(dist(evolve_open(vi_c_state(), f1, f2, kViC, 10.0, dt).state, exact.state));
    EXPECT_GE(err[0] / err[1], 10.0);
    EXPECT_GE(err[1] / err[2], 10.0);
}

TEST(EvolveOpen, InvalidArguments) {
    const auto f = curie_weiss(1);
    EXPECT_THROW(evolve_open(vi_c_state(), f, f, kViC, 1.0, 0.02), ValidationError);
    EXPECT_THROW(evolve_open(vi_c_state(), f, f, kViC, 1.0, 0.0), ValidationError);
    EXPECT_THROW(evolve_open(vi_c_state(), f, f, kViC, -1.0, 1e-3), ValidationError);
    EXPECT_THROW(evolve_open(vi_c_state(), f, linear_functional(Observable::identity(3)), kViC, 1.0, 1e-3),
                 ValidationError);
    EXPECT_THROW(evolve_open_at(vi_c_state(), f, f, kViC, {2.0, 1.0}, 1e-3), ValidationError);
}

TEST(EvolveOpen, StiffProblemAbortsOnNormDrift) {
    const auto f = curie_weiss(5000);
    EXPECT_THROW(evolve_open(vi_c_state(), f, f, DetectionSchedule::closed(), 1.0, 1e-2), NumericalError);
}

TEST(EvolveOpen, FirstParticleIgnoresSecondParticleChanges) {
    const StateVector psi0 = vi_c_state();
    const auto f1 = curie_weiss(kViCA);
    const auto times = grid(0.5, 10.0);
    auto rho1 = [&](const HamiltonianFunctional& f2, DetectionSchedule s) {
        std::vector<Matrix> out;
        for (const auto& r : evolve_at(psi0, f1, f2, s, times, {})) out.push_back(r.rho1.entries());
        return out;
    };
    const auto base = rho1(curie_weiss(kViCB), kViC);
    for (const auto& alt : {rho1(curie_weiss(5), kViC), rho1(curie_weiss(kViCB), {kViCT1, 2.0}),
                            rho1(curie_weiss(-3), {kViCT1, 9.5})})
        for (std::size_t i = 0; i < times.size(); ++i) EXPECT_LT(max_abs(alt[i] - base[i]), 1e-9);
}

TEST(EvolveOpen, FirstParticleIgnoresSecondParticleChangesUnderIntegrator) {
    const StateVector psi0 = vi_c_state();
    const auto f1 = curie_weiss(kViCA);
    const auto times = grid(0.5, 10.0);
    const auto base = evolve_open_at(psi0, f1, curie_weiss(kViCB), kViC, times, 1e-3);
    for (const auto& f2 : {zero_functional(), linear_functional(pauli::x()), curie_weiss(5)}) {
        const auto alt = evolve_open_at(psi0, f1, f2, kViC, times, 1e-3);
        for (std::size_t i = 0; i < times.size(); ++i)
            EXPECT_LT(max_abs(alt[i].rho1.entries() - base[i].rho1.entries()), 1e-9) << "t=" << times[i];
    }
}

TEST(EvolveOpen, FirstParticleIgnoresLocalRotationOfSecond) {
    Sampler rng(33);
    const Matrix u = oracle::propagator(rng.hermitian(2).entries(), 1.0);
    const StateVector psi0 = vi_c_state();
    const StateVector rotated(oracle::kron(oracle::id2(), u) * psi0.amplitudes(), 1e-12);
    const auto f1 = curie_weiss(kViCA);
    const auto f2 = linear_functional(pauli::z());
    for (double t : {1.0, 3.5, 6.0, 10.0}) {
        const auto a = evolve_open(psi0, f1, f2, kViC, t, 1e-3);
        const auto b = evolve_open(rotated, f1, f2, kViC, t, 1e-3);
        EXPECT_LT(max_abs(a.rho1.entries() - b.rho1.entries()), 1e-9) << "t=" << t;
    }
}

TEST(EffectivePropagators, ZeroFunctionalGivesIdentity) {
    const auto p = effective_propagators(vi_c_state(), zero_functional(), zero_functional(), kViC, 5.0, 1e-3);
    EXPECT_LT(max_abs(p.first - Matrix::Identity(2, 2)), 1e-15);
    EXPECT_LT(max_abs(p.second - Matrix::Identity(2, 2)), 1e-15);
}

TEST(EffectivePropagators, ReferenceScenarioDiagonalPhases) {
    const auto p = effective_propagators(vi_c_state(), curie_weiss(kViCA), curie_weiss(kViCB), kViC, 10.0, 1e-3);
    const Matrix v1 = oracle::propagator(kViCA * oracle::kViCSz1 * oracle::sz(), kViCT1);
    const Matrix v2 = oracle::propagator(-kViCB * oracle::kViCSz1 * oracle::sz(), kViCT2);
    EXPECT_LT(max_abs(p.first - v1), 1e-6);
    EXPECT_LT(max_abs(p.second - v2), 1e-6);
}

TEST(EffectivePropagators, LinearMatchesMatrixExponential) {
    const auto p = effective_propagators(singlet_state(), linear_functional(pauli::z()), linear_functional(pauli::x()),
                                         DetectionSchedule::closed(), 2.0, 1e-3);
    EXPECT_LT(max_abs(p.first - oracle::propagator(oracle::sz(), 2.0)), 1e-8);
    EXPECT_LT(max_abs(p.second - oracle::propagator(oracle::sx(), 2.0)), 1e-8);
}

TEST(EffectivePropagators, FactorizeTheEvolvedState) {
    Sampler rng(34);
    for (int i = 0; i < 5; ++i) {
        const StateVector psi0 = rng.state(4);
        const auto f1 = curie_weiss(rng.uniform(-10, 10));
        const auto f2 = curie_weiss(rng.uniform(-10, 10));
        const DetectionSchedule s = rng.schedule(10);
        const auto p = effective_propagators(psi0, f1, f2, s, 10.0, 1e-3);
        const Vector fact = kron(p.first, p.second) * psi0.amplitudes();
        EXPECT_LT((fact - evolve_open(psi0, f1, f2, s, 10.0, 1e-3).state.amplitudes()).norm(), 1e-9);
        EXPECT_LT(max_abs(p.first * p.first.adjoint() - Matrix::Identity(2, 2)), 1e-9);
    }
}

TEST(EffectivePropagators, FirstIndependentOfSecondFunctional) {
    const auto a = effective_propagators(vi_c_state(), curie_weiss(kViCA), curie_weiss(kViCB), kViC, 10.0, 1e-3);
    const auto b = effective_propagators(vi_c_state(), curie_weiss(kViCA), curie_weiss(-7), {kViCT1, 1.0}, 10.0, 1e-3);
    EXPECT_LT(max_abs(a.first - b.first), 1e-9);
}

TEST(EvolveClosed, AgreesWithOpenBeforeFirstDetection) {
    const auto f1 = curie_weiss(kViCA);
    const auto f2 = curie_weiss(kViCB);
    for (double t : {0.5, 2.0, 3.5}) {
        const auto c = evolve_closed(vi_c_state(), f1, f2, t, 1e-3);
        const auto o = evolve_open(vi_c_state(), f1, f2, kViC, t, 1e-3);
        EXPECT_LT(dist(c.state, o.state), 1e-9);
    }
}

TEST(EvolveClosed, NormAndSigmaZConserved) {
    const auto c = evolve_closed(vi_c_state(), curie_weiss(kViCA), curie_weiss(kViCB), 10.0, 1e-3);
    EXPECT_NEAR(c.state.norm(), 1.0, 1e-8);
    EXPECT_NEAR(expect(c.state, tensor(pauli::z(), pauli::identity())), oracle::kViCSz1, 1e-8);
}

TEST(EvolveClosed, KeepsEvolvingPastDetectionTimes) {
    const auto f1 = curie_weiss(kViCA);
    const auto f2 = curie_weiss(kViCB);
    const auto c = evolve_closed(vi_c_state(), f1, f2, 10.0, 1e-3);
    const auto ref = curie_weiss_closed_form(vi_c_state(), kViCA, kViCB, DetectionSchedule::closed(), 10.0);
    EXPECT_LT(dist(c.state, ref.state), 1e-6);
}

TEST(Engine, AutomaticSelection) {
    EXPECT_EQ(resolve_engine(Engine::automatic, curie_weiss(1), curie_weiss(2)), Engine::closed_form);
    EXPECT_EQ(resolve_engine(Engine::automatic, curie_weiss(1), linear_functional(pauli::x())), Engine::integrator);
    EXPECT_THROW(resolve_engine(Engine::closed_form, curie_weiss(1), linear_functional(pauli::x())), ValidationError);
}
