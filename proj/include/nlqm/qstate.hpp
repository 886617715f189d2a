#pragma once

// Complex linear-algebra substrate for one- and two-particle spin systems:
// state vectors, density matrices, observables, Kronecker products, partial
// traces and spin projectors.
//
// Composite index convention is row-major with particle 1 as the slow index:
// k = k1 * d2 + k2.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <string>

#include "nlqm/errors.hpp"

namespace nlqm {

using cplx = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr std::size_t kMaxDim = std::size_t{1} << 20;
inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kPositivityFloor = -1e-10;
inline constexpr double kImaginaryResidue = 1e-10;

enum class Subsystem : int { first = 1, second = 2 };

enum class Sign { plus, minus };

inline constexpr std::array<Sign, 2> kSigns{Sign::plus, Sign::minus};

constexpr int sign_value(Sign s) { return s == Sign::plus ? 1 : -1; }
constexpr std::size_t sign_index(Sign s) { return s == Sign::plus ? 0 : 1; }
constexpr char sign_char(Sign s) { return s == Sign::plus ? '+' : '-'; }

struct Dims {
    std::size_t first = 2;
    std::size_t second = 2;

    std::size_t total() const { return first * second; }
};

namespace detail {

inline double hermitian_defect(const Matrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline void check_dim(std::size_t dim, const char* what) {
    if (dim == 0) throw ValidationError(std::string(what) + ": dimension must be positive");
    if (dim > kMaxDim) throw ValidationError(std::string(what) + ": dimension exceeds 2^20");
}

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

}  // namespace detail

/// Normalized amplitude vector in the computational basis.
class StateVector {
public:
    /// Throws ValidationError unless |norm - 1| <= tolerance.
    explicit StateVector(Vector amplitudes, double tolerance = kNormTolerance)
        : amps_(std::move(amplitudes)) {
        detail::check_dim(static_cast<std::size_t>(amps_.size()), "StateVector");
        if (!amps_.allFinite()) throw ValidationError("StateVector: non-finite amplitude");
        const double n = amps_.norm();
        if (std::abs(n - 1.0) > tolerance)
            throw ValidationError("StateVector: norm " + detail::num(n) + " deviates from 1");
    }

    /// Explicit normalization; rejects the zero vector.
    static StateVector normalized(Vector amplitudes) {
        const double n = amplitudes.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("StateVector: cannot normalize zero vector");
        amplitudes /= n;
        return StateVector(std::move(amplitudes));
    }

    static StateVector basis(std::size_t dim, std::size_t index) {
        if (index >= dim) throw ValidationError("StateVector: basis index out of range");
        Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
        v(static_cast<Eigen::Index>(index)) = 1.0;
        return StateVector(std::move(v));
    }

    std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
    const Vector& amplitudes() const { return amps_; }
    cplx operator[](std::size_t i) const { return amps_(static_cast<Eigen::Index>(i)); }
    double norm() const { return amps_.norm(); }

private:
    Vector amps_;
};

/// Hermitian, positive semi-definite, unit-trace matrix.
class DensityMatrix {
public:
    explicit DensityMatrix(Matrix entries, double tolerance = kHermitianTolerance)
        : m_(std::move(entries)) {
        if (m_.rows() != m_.cols()) throw ValidationError("DensityMatrix: matrix must be square");
        detail::check_dim(static_cast<std::size_t>(m_.rows()), "DensityMatrix");
        if (!m_.allFinite()) throw ValidationError("DensityMatrix: non-finite entry");
        if (detail::hermitian_defect(m_) > tolerance) throw ValidationError("DensityMatrix: not Hermitian");
        const double tr = m_.trace().real();
        if (std::abs(tr - 1.0) > tolerance || std::abs(m_.trace().imag()) > tolerance)
            throw ValidationError("DensityMatrix: trace " + detail::num(tr) + " deviates from 1");
        const Matrix h = 0.5 * (m_ + m_.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < kPositivityFloor)
            throw ValidationError("DensityMatrix: negative eigenvalue " + detail::num(es.eigenvalues().minCoeff()));
    }

    static DensityMatrix pure(const StateVector& psi) {
        const Vector& a = psi.amplitudes();
        return DensityMatrix(a * a.adjoint());
    }

    static DensityMatrix maximally_mixed(std::size_t dim) {
        const auto n = static_cast<Eigen::Index>(dim);
        return DensityMatrix(Matrix::Identity(n, n) / static_cast<double>(dim));
    }

    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    const Matrix& entries() const { return m_; }

private:
    Matrix m_;
};

/// Hermitian operator.
class Observable {
public:
    explicit Observable(Matrix entries, double tolerance = kHermitianTolerance)
        : m_(std::move(entries)) {
        if (m_.rows() != m_.cols()) throw ValidationError("Observable: matrix must be square");
        detail::check_dim(static_cast<std::size_t>(m_.rows()), "Observable");
        if (!m_.allFinite()) throw ValidationError("Observable: non-finite entry");
        if (detail::hermitian_defect(m_) > tolerance) throw ValidationError("Observable: not Hermitian");
    }

    static Observable identity(std::size_t dim) {
        const auto n = static_cast<Eigen::Index>(dim);
        return Observable(Matrix::Identity(n, n));
    }

    static Observable zero(std::size_t dim) {
        const auto n = static_cast<Eigen::Index>(dim);
        return Observable(Matrix::Zero(n, n));
    }

    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    const Matrix& entries() const { return m_; }

    Observable scaled(double c) const { return Observable(c * m_); }

private:
    Matrix m_;
};

/// Unit vector on the Bloch sphere.
class BlochAxis {
public:
    BlochAxis(double x, double y, double z) : c_{x, y, z} {
        const double n = std::sqrt(x * x + y * y + z * z);
        if (!std::isfinite(n) || std::abs(n - 1.0) > kNormTolerance)
            throw ValidationError("BlochAxis: axis must have unit norm (got " + detail::num(n) + ")");
    }

    static BlochAxis normalized(double x, double y, double z) {
        const double n = std::sqrt(x * x + y * y + z * z);
        if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("BlochAxis: zero axis");
        return {x / n, y / n, z / n};
    }

    static BlochAxis x() { return {1.0, 0.0, 0.0}; }
    static BlochAxis y() { return {0.0, 1.0, 0.0}; }
    static BlochAxis z() { return {0.0, 0.0, 1.0}; }

    const std::array<double, 3>& components() const { return c_; }

    friend bool operator==(const BlochAxis&, const BlochAxis&) = default;

private:
    std::array<double, 3> c_;
};

namespace pauli {

inline Observable x() {
    Matrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return Observable(std::move(m));
}

inline Observable y() {
    Matrix m(2, 2);
    m << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
    return Observable(std::move(m));
}

inline Observable z() {
    Matrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return Observable(std::move(m));
}

inline Observable identity() { return Observable::identity(2); }

}  // namespace pauli

/// Kronecker product of two matrices, row-major composite index.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    const std::size_t rows = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows());
    const std::size_t cols = static_cast<std::size_t>(a.cols()) * static_cast<std::size_t>(b.cols());
    detail::check_dim(rows, "tensor");
    detail::check_dim(cols, "tensor");
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline StateVector tensor(const StateVector& a, const StateVector& b) {
    const Matrix k = kron(a.amplitudes(), b.amplitudes());
    return StateVector(Vector(k.col(0)), 4 * kNormTolerance);
}

inline Observable tensor(const Observable& a, const Observable& b) {
    return Observable(kron(a.entries(), b.entries()));
}

/// Amplitudes reshaped as the d1 x d2 coefficient matrix Psi_{k1 k2}.
inline Matrix coefficient_matrix(const Vector& amps, Dims dims) {
    if (static_cast<std::size_t>(amps.size()) != dims.total())
        throw ValidationError("coefficient_matrix: state dimension does not match d1*d2");
    const auto d1 = static_cast<Eigen::Index>(dims.first);
    const auto d2 = static_cast<Eigen::Index>(dims.second);
    Matrix m(d1, d2);
    for (Eigen::Index i = 0; i < d1; ++i)
        for (Eigen::Index j = 0; j < d2; ++j) m(i, j) = amps(i * d2 + j);
    return m;
}

inline Vector flatten(const Matrix& m) {
    Vector v(m.rows() * m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
    return v;
}

/// Partial-trace matrices of a (not necessarily normalized) amplitude vector.
inline Matrix reduced_matrix(const Vector& amps, Subsystem keep, Dims dims) {
    const Matrix m = coefficient_matrix(amps, dims);
    if (keep == Subsystem::first) return m * m.adjoint();
    return m.transpose() * m.conjugate();
}

/// Reduced density matrix of `keep`, tracing out the complementary particle.
inline DensityMatrix reduce(const StateVector& psi, Subsystem keep, Dims dims) {
    if (psi.dim() != dims.total())
        throw ValidationError("reduce: state dimension " + std::to_string(psi.dim()) +
                              " does not match d1*d2 = " + std::to_string(dims.total()));
    const double n = psi.norm();
    const double tol = kHermitianTolerance + std::abs(n * n - 1.0);
    return DensityMatrix(reduced_matrix(psi.amplitudes(), keep, dims), tol);
}

namespace detail {

inline double real_part_checked(cplx v) {
    if (std::abs(v.imag()) >= kImaginaryResidue)
        throw NumericalError("expect: imaginary residue " + num(v.imag()) +
                             " (non-Hermitian observable or corrupted state)");
    return v.real();
}

}  // namespace detail

inline double expect(const StateVector& psi, const Observable& obs) {
    if (psi.dim() != obs.dim()) throw ValidationError("expect: dimension mismatch");
    const Vector& a = psi.amplitudes();
    return detail::real_part_checked(a.dot(obs.entries() * a));
}

inline double expect(const DensityMatrix& rho, const Observable& obs) {
    if (rho.dim() != obs.dim()) throw ValidationError("expect: dimension mismatch");
    return detail::real_part_checked((rho.entries() * obs.entries()).trace());
}

/// E^{+-} = (I +- a.sigma) / 2.
inline Observable spin_projector(const BlochAxis& axis, Sign sign) {
    const auto& a = axis.components();
    const Matrix as = a[0] * pauli::x().entries() + a[1] * pauli::y().entries() + a[2] * pauli::z().entries();
    const Matrix plus = 0.5 * (Matrix::Identity(2, 2) + as);
    // E- = I - E+ keeps E+ + E- == I exact in floating point.
    if (sign == Sign::plus) return Observable(plus);
    return Observable(Matrix(Matrix::Identity(2, 2) - plus));
}

/// a.sigma for a Bloch axis.
inline Observable spin_observable(const BlochAxis& axis) {
    const auto& a = axis.components();
    return Observable(a[0] * pauli::x().entries() + a[1] * pauli::y().entries() + a[2] * pauli::z().entries());
}

}  // namespace nlqm
