#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nlqm/qstate.hpp"
#include "nlqm/random.hpp"
#include "nlqm/scenario.hpp"
#include "oracles.hpp"

using namespace nlqm;

namespace {

StateVector qubit(double a, double b) {
    Vector v(2);
    v << a, b;
    return StateVector(v);
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Tensor, BasisProduct) {
    const StateVector s = tensor(qubit(1, 0), qubit(0, 1));
    Vector expected(4);
    expected << 0, 1, 0, 0;
    EXPECT_EQ(s.amplitudes(), expected);
}

TEST(Tensor, RotatedBasisProduct) {
    const StateVector s = tensor(StateVector(oracle::one()), StateVector(oracle::two()));
    EXPECT_NEAR(s[0].real(), -std::cos(std::numbers::pi / 8) * std::sin(std::numbers::pi / 8), 1e-15);
    EXPECT_NEAR(s[0].real(), -0.35355339, 1e-8);
}

TEST(Tensor, ReferenceState) {
    EXPECT_LT((vi_c_state().amplitudes() - oracle::vi_c()).norm(), 1e-15);
}

TEST(Tensor, ObservableMatchesLoopKron) {
    Sampler rng(7);
    for (int i = 0; i < 10; ++i) {
        const Observable a = rng.hermitian(2);
        const Observable b = rng.hermitian(3);
        EXPECT_EQ(tensor(a, b).entries(), oracle::kron(a.entries(), b.entries()));
    }
}

TEST(Tensor, DimensionOverflowRejected) {
    const StateVector a = StateVector::basis(std::size_t{1} << 11, 0);
    const StateVector b = StateVector::basis(std::size_t{1} << 10, 0);
    EXPECT_THROW(tensor(a, b), ValidationError);
}

TEST(StateVectorTest, NormalizationEnforced) {
    Vector v(2);
    v << 1, 1;
    EXPECT_THROW(StateVector{v}, ValidationError);
    EXPECT_NEAR(StateVector::normalized(v).norm(), 1.0, 1e-15);
    Vector nan(2);
    nan << std::nan(""), 0;
    EXPECT_THROW(StateVector{nan}, ValidationError);
}

TEST(Reduce, ProductState) {
    const StateVector s = tensor(qubit(1, 0), qubit(0, 1));
    Matrix e(2, 2);
    e << 1, 0, 0, 0;
    EXPECT_LT(max_abs(reduce(s, Subsystem::first, {2, 2}).entries() - e), 1e-15);
}

TEST(Reduce, ReferenceStateSpectralForm) {
    const Vector one = oracle::one();
    const Vector two = oracle::two();
    const Matrix p1 = one * one.adjoint();
    const Matrix p2 = two * two.adjoint();
    const StateVector s = vi_c_state();
    EXPECT_LT(max_abs(reduce(s, Subsystem::first, {2, 2}).entries() - (p1 / 9.0 + 8.0 * p2 / 9.0)), 1e-12);
    EXPECT_LT(max_abs(reduce(s, Subsystem::second, {2, 2}).entries() - (8.0 * p1 / 9.0 + p2 / 9.0)), 1e-12);
}

TEST(Reduce, MatchesLoopPartialTraceOnRandomStates) {
    Sampler rng(11);
    for (int i = 0; i < 50; ++i) {
        const std::size_t d1 = 2 + i % 3;
        const std::size_t d2 = 2 + (i / 3) % 3;
        const StateVector psi = rng.state(d1 * d2);
        for (int keep : {1, 2}) {
            const Matrix lib = reduce(psi, static_cast<Subsystem>(keep), {d1, d2}).entries();
            const Matrix ref = oracle::partial_trace(psi.amplitudes(), keep, static_cast<int>(d1), static_cast<int>(d2));
            EXPECT_LT(max_abs(lib - ref), 1e-14);
            EXPECT_NEAR(lib.trace().real(), 1.0, 1e-12);
        }
    }
}

TEST(Reduce, ProductOfRandomFactors) {
    Sampler rng(12);
    for (int i = 0; i < 20; ++i) {
        const StateVector a = rng.state(2);
        const StateVector b = rng.state(3);
        const Matrix rho = reduce(tensor(a, b), Subsystem::first, {2, 3}).entries();
        EXPECT_LT(max_abs(rho - a.amplitudes() * a.amplitudes().adjoint()), 1e-14);
    }
}

TEST(Reduce, DimensionMismatchRejected) {
    EXPECT_THROW(reduce(vi_c_state(), Subsystem::first, {2, 3}), ValidationError);
}

TEST(Expect, BasisSz) { EXPECT_DOUBLE_EQ(expect(qubit(1, 0), pauli::z()), 1.0); }

TEST(Expect, ReferenceStateValues) {
    const StateVector s = vi_c_state();
    EXPECT_NEAR(expect(reduce(s, Subsystem::first, {2, 2}), pauli::z()), oracle::kViCSz1, 1e-12);
    EXPECT_NEAR(oracle::kViCSz1, -0.549972, 1e-6);
    EXPECT_NEAR(expect(s, tensor(pauli::x(), pauli::x())), oracle::kViCSxSx, 1e-12);
    EXPECT_NEAR(oracle::kViCSxSx, -0.814270, 1e-6);
}

TEST(Expect, RealOnRandomStates) {
    Sampler rng(13);
    for (int i = 0; i < 50; ++i) {
        const StateVector psi = rng.state(4);
        const Observable o = rng.hermitian(4);
        const double v = expect(psi, o);
        const double ref = psi.amplitudes().dot(o.entries() * psi.amplitudes()).real();
        EXPECT_NEAR(v, ref, 1e-13);
        EXPECT_NEAR(expect(DensityMatrix::pure(psi), o), v, 1e-12);
    }
}

TEST(Expect, ImaginaryResidueIsNumericalError) {
    EXPECT_THROW(detail::real_part_checked(cplx(0.3, 1e-6)), NumericalError);
    EXPECT_DOUBLE_EQ(detail::real_part_checked(cplx(0.3, 1e-12)), 0.3);
}

TEST(Expect, DimensionMismatchRejected) {
    EXPECT_THROW(expect(vi_c_state(), pauli::z()), ValidationError);
}

TEST(ObservableTest, RejectsNonHermitian) {
    Matrix m(2, 2);
    m << 0, 1, 0, 0;
    EXPECT_THROW(Observable{m}, ValidationError);
}

TEST(DensityMatrixTest, Validation) {
    Matrix neg(2, 2);
    neg << 1.5, 0, 0, -0.5;
    EXPECT_THROW(DensityMatrix{neg}, ValidationError);
    Matrix trace2 = Matrix::Identity(2, 2);
    EXPECT_THROW(DensityMatrix{trace2}, ValidationError);
    EXPECT_NO_THROW(DensityMatrix::maximally_mixed(3));
}

TEST(Projector, ZAxis) {
    Matrix up(2, 2);
    up << 1, 0, 0, 0;
    EXPECT_LT(max_abs(spin_projector(BlochAxis::z(), Sign::plus).entries() - up), 1e-15);
}

TEST(Projector, XAxis) {
    Matrix ex(2, 2);
    ex << 0.5, 0.5, 0.5, 0.5;
    EXPECT_LT(max_abs(spin_projector(BlochAxis::x(), Sign::plus).entries() - ex), 1e-15);
}

TEST(Projector, ExactCompletenessAndOrthogonality) {
    Sampler rng(14);
    for (int i = 0; i < 100; ++i) {
        const BlochAxis a = rng.axis();
        const Matrix ep = spin_projector(a, Sign::plus).entries();
        const Matrix em = spin_projector(a, Sign::minus).entries();
        EXPECT_EQ(ep + em, Matrix(Matrix::Identity(2, 2)));
        EXPECT_LT(max_abs(ep * em), 1e-15);
        EXPECT_LT(max_abs(ep * ep - ep), 1e-15);
        const Matrix n = a.components()[0] * oracle::sx() + a.components()[1] * pauli::y().entries() + a.components()[2] * oracle::sz();
        EXPECT_LT(max_abs(ep - em - n), 1e-15);
    }
}

TEST(Projector, NonUnitAxisRejected) {
    EXPECT_THROW(BlochAxis(1, 1, 0), ValidationError);
    EXPECT_NO_THROW(BlochAxis::normalized(1, 1, 0));
    EXPECT_THROW(BlochAxis::normalized(0, 0, 0), ValidationError);
}
