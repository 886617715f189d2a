#pragma once

// Seeded generators for states, density matrices, axes and Curie-Weiss
// scenarios. Used by the self-check suite and the tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "nlqm/dynamics.hpp"
#include "nlqm/qstate.hpp"

namespace nlqm {

class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double gauss() { return normal_(rng_); }

    /// Haar-distributed pure state.
    StateVector state(std::size_t dim) {
        Vector v(static_cast<Eigen::Index>(dim));
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx(gauss(), gauss());
        return StateVector::normalized(std::move(v));
    }

    /// Random full-rank density matrix G G^dagger / Tr(G G^dagger).
    DensityMatrix density(std::size_t dim) {
        const auto n = static_cast<Eigen::Index>(dim);
        Matrix g(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) g(i, j) = cplx(gauss(), gauss());
        Matrix rho = g * g.adjoint();
        rho /= rho.trace().real();
        rho = 0.5 * (rho + rho.adjoint()).eval();
        return DensityMatrix(std::move(rho));
    }

    BlochAxis axis() {
        const double z = uniform(-1.0, 1.0);
        const double phi = uniform(0.0, 2.0 * std::numbers::pi);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return BlochAxis::normalized(r * std::cos(phi), r * std::sin(phi), z);
    }

    Observable hermitian(std::size_t dim, double scale = 1.0) {
        const auto n = static_cast<Eigen::Index>(dim);
        Matrix g(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) g(i, j) = cplx(gauss(), gauss());
        return Observable(Matrix(0.5 * scale * (g + g.adjoint())));
    }

    DetectionSchedule schedule(double t_max) { return {uniform(0.0, t_max), uniform(0.0, t_max)}; }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace nlqm
