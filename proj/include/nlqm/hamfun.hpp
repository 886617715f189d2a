#pragma once

// Hamiltonian functionals H(rho) on one-particle density matrices and the
// Hermitian gradient operators they induce, H(rho)_{ba} = dH/drho_{ab}.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <variant>

#include "nlqm/qstate.hpp"

namespace nlqm {

/// H(rho) = Tr(rho h0).
struct LinearFunctional {
    Observable h0;
};

/// H(rho) = c [Tr(rho sigma_z)]^2 / 2 on a spin-1/2.
struct CurieWeissFunctional {
    double coeff = 0.0;
};

class HamiltonianFunctional {
public:
    using Form = std::variant<LinearFunctional, CurieWeissFunctional>;

    explicit HamiltonianFunctional(Form form) : form_(std::move(form)) {}

    std::size_t dim() const {
        return std::visit(
            [](const auto& f) -> std::size_t {
                if constexpr (std::is_same_v<std::decay_t<decltype(f)>, LinearFunctional>)
                    return f.h0.dim();
                else
                    return 2;
            },
            form_);
    }

    /// Value on an arbitrary Hermitian matrix (not necessarily unit trace).
    double evaluate(const Matrix& rho) const {
        check(rho);
        return std::visit(
            [&](const auto& f) -> double {
                if constexpr (std::is_same_v<std::decay_t<decltype(f)>, LinearFunctional>) {
                    return (rho * f.h0.entries()).trace().real();
                } else {
                    const double m = (rho * pauli::z().entries()).trace().real();
                    return f.coeff * m * m / 2.0;
                }
            },
            form_);
    }

    double operator()(const DensityMatrix& rho) const { return evaluate(rho.entries()); }

    /// Analytic gradient operator at an arbitrary Hermitian matrix.
    Matrix gradient_matrix(const Matrix& rho) const {
        check(rho);
        return std::visit(
            [&](const auto& f) -> Matrix {
                if constexpr (std::is_same_v<std::decay_t<decltype(f)>, LinearFunctional>) {
                    return f.h0.entries();
                } else {
                    const Matrix z = pauli::z().entries();
                    const double m = (rho * z).trace().real();
                    return (f.coeff * m) * z;
                }
            },
            form_);
    }

    Observable gradient(const DensityMatrix& rho) const {
        return Observable(gradient_matrix(rho.entries()), 1e-10);
    }

    const Form& form() const { return form_; }

    bool is_linear() const { return std::holds_alternative<LinearFunctional>(form_); }

    /// Coefficient when the functional is of Curie-Weiss type. A 2x2 zero
    /// linear functional reports 0.
    std::optional<double> curie_weiss_coefficient() const {
        if (const auto* cw = std::get_if<CurieWeissFunctional>(&form_)) return cw->coeff;
        const auto& lin = std::get<LinearFunctional>(form_);
        if (lin.h0.dim() == 2 && lin.h0.entries().isZero(0.0)) return 0.0;
        return std::nullopt;
    }

    std::string describe() const {
        if (const auto* cw = std::get_if<CurieWeissFunctional>(&form_))
            return "curie_weiss(" + std::to_string(cw->coeff) + ")";
        return "linear(dim=" + std::to_string(dim()) + ")";
    }

private:
    void check(const Matrix& rho) const {
        if (static_cast<std::size_t>(rho.rows()) != dim() || rho.rows() != rho.cols())
            throw ValidationError("HamiltonianFunctional: expected a " + std::to_string(dim()) + "x" +
                                  std::to_string(dim()) + " density matrix");
    }

    Form form_;
};

inline HamiltonianFunctional linear_functional(const Observable& h0) {
    return HamiltonianFunctional(LinearFunctional{h0});
}

inline HamiltonianFunctional zero_functional(std::size_t dim = 2) {
    return linear_functional(Observable::zero(dim));
}

inline HamiltonianFunctional curie_weiss(double coeff) {
    if (!std::isfinite(coeff)) throw ValidationError("curie_weiss: coefficient must be finite");
    return HamiltonianFunctional(CurieWeissFunctional{coeff});
}

/// Central finite-difference estimate of the gradient operator.
///
/// Each conjugate pair (rho_ab, rho_ba) is perturbed jointly, by (h, h) for
/// the real direction and (ih, -ih) for the imaginary one, so the perturbed
/// matrix stays Hermitian. With D_re, D_im the two directional derivatives,
/// G_ba = (D_re - i D_im) / 2 and G_ab = conj(G_ba).
inline Matrix numeric_grad(const HamiltonianFunctional& f, const Matrix& rho, double h) {
    if (!(h >= 1e-8 && h <= 1e-3)) throw ValidationError("numeric_grad: step must lie in [1e-8, 1e-3]");
    const auto n = static_cast<Eigen::Index>(f.dim());
    if (rho.rows() != n || rho.cols() != n) throw ValidationError("numeric_grad: dimension mismatch");

    auto directional = [&](const Matrix& dir) {
        return (f.evaluate(rho + h * dir) - f.evaluate(rho - h * dir)) / (2.0 * h);
    };

    Matrix g = Matrix::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        Matrix e = Matrix::Zero(n, n);
        e(a, a) = 1.0;
        g(a, a) = directional(e);
        for (Eigen::Index b = a + 1; b < n; ++b) {
            Matrix re = Matrix::Zero(n, n);
            re(a, b) = 1.0;
            re(b, a) = 1.0;
            Matrix im = Matrix::Zero(n, n);
            im(a, b) = cplx(0.0, 1.0);
            im(b, a) = cplx(0.0, -1.0);
            const double d_re = directional(re);
            const double d_im = directional(im);
            g(b, a) = cplx(d_re, -d_im) / 2.0;
            g(a, b) = std::conj(g(b, a));
        }
    }
    return g;
}

inline Observable numeric_grad(const HamiltonianFunctional& f, const DensityMatrix& rho, double h) {
    return Observable(numeric_grad(f, rho.entries(), h), 1e-10);
}

/// Real functional of a state vector, H(psi, conj(psi)).
struct PsiFunctional {
    std::size_t dim = 2;
    std::function<double(const Vector&)> eval;

    double operator()(const Vector& psi) const { return eval(psi); }
    double operator()(const StateVector& psi) const { return eval(psi.amplitudes()); }
};

/// psi -> H(|psi><psi|).
inline PsiFunctional psi_form(const HamiltonianFunctional& f) {
    return {f.dim(), [f](const Vector& psi) { return f.evaluate(psi * psi.adjoint()); }};
}

/// Seeded check that f(e^{i alpha} psi) == f(psi) within 1e-10 on `samples`
/// random (psi, alpha) pairs. A necessary condition only.
inline bool verify_phase_invariance(const PsiFunctional& f, std::size_t samples, std::uint64_t seed) {
    if (samples < 10) throw ValidationError("verify_phase_invariance: need at least 10 samples");
    if (f.dim == 0 || !f.eval) throw ValidationError("verify_phase_invariance: empty functional");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    const auto n = static_cast<Eigen::Index>(f.dim);
    for (std::size_t s = 0; s < samples; ++s) {
        Vector psi(n);
        for (Eigen::Index i = 0; i < n; ++i) psi(i) = cplx(gauss(rng), gauss(rng));
        psi.normalize();
        const cplx phase = std::polar(1.0, angle(rng));
        const double a = f(psi);
        const double b = f(Vector(phase * psi));
        if (!std::isfinite(a) || !std::isfinite(b) || std::abs(a - b) >= 1e-10) return false;
    }
    return true;
}

}  // namespace nlqm
