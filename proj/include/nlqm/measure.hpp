#pragma once

// Joint, marginal and conditional probabilities for spin measurements on
// particle 1 at t1 and particle 2 at t2, computed three ways:
//
//  - open system: read directly off the detection-time-parameterized state,
//  - standard projection at a distance: collapse at t1, then re-evolve
//    particle 2 with the nonlinear frequency of the projected state,
//  - generalized projection: collapse at t1, then propagate particle 2 with
//    the effective unitary built from the initial condition.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nlqm/dynamics.hpp"
#include "nlqm/hamfun.hpp"
#include "nlqm/qstate.hpp"

namespace nlqm {

inline constexpr double kDegenerateBranch = 1e-12;
inline constexpr double kProbabilitySlack = 1e-10;
inline constexpr double kCompletenessTolerance = 1e-9;

struct JointSpec {
    BlochAxis axis1 = BlochAxis::x();
    BlochAxis axis2 = BlochAxis::x();
    DetectionSchedule sched{0.0, 0.0};
};

class ProbabilityTable {
public:
    /// Validates the raw entries, then clamps them to [0, 1].
    ProbabilityTable(std::array<double, 4> joint_entries, std::array<double, 2> marg1, std::array<double, 2> marg2)
        : joint_(joint_entries), marg1_(marg1), marg2_(marg2) {
        double total = 0.0;
        for (double p : joint_) total += p;
        if (std::abs(total - 1.0) > kCompletenessTolerance)
            throw NumericalError("ProbabilityTable: joint entries sum to " + detail::num(total));
        for (Sign s : kSigns) {
            const double row = joint(s, Sign::plus) + joint(s, Sign::minus);
            const double col = joint(Sign::plus, s) + joint(Sign::minus, s);
            if (std::abs(row - marginal1(s)) > kCompletenessTolerance ||
                std::abs(col - marginal2(s)) > kCompletenessTolerance)
                throw NumericalError("ProbabilityTable: marginals inconsistent with joint entries");
        }
        auto clamp = [](double& p) {
            if (!std::isfinite(p) || p < -kProbabilitySlack || p > 1.0 + kProbabilitySlack)
                throw NumericalError("ProbabilityTable: probability " + detail::num(p) + " outside [0, 1]");
            p = std::clamp(p, 0.0, 1.0);
        };
        for (double& p : joint_) clamp(p);
        for (double& p : marg1_) clamp(p);
        for (double& p : marg2_) clamp(p);
    }

    double joint(Sign s1, Sign s2) const { return joint_[2 * sign_index(s1) + sign_index(s2)]; }
    double marginal1(Sign s) const { return marg1_[sign_index(s)]; }
    double marginal2(Sign s) const { return marg2_[sign_index(s)]; }
    double marginal(Subsystem k, Sign s) const { return k == Subsystem::first ? marginal1(s) : marginal2(s); }

    /// E[s1 s2] = sum over outcomes of s1 * s2 * p(s1, s2).
    double correlation() const {
        double c = 0.0;
        for (Sign a : kSigns)
            for (Sign b : kSigns) c += sign_value(a) * sign_value(b) * joint(a, b);
        return c;
    }

    /// Outcome branches of particle 1 discarded for having probability < 1e-12.
    const std::array<bool, 2>& degenerate_branches() const { return degenerate_; }
    void mark_degenerate(Sign s) { degenerate_[sign_index(s)] = true; }

    ProbabilityTable swapped() const {
        ProbabilityTable t = *this;
        t.joint_ = {joint_[0], joint_[2], joint_[1], joint_[3]};
        t.marg1_ = marg2_;
        t.marg2_ = marg1_;
        return t;
    }

private:
    std::array<double, 4> joint_;
    std::array<double, 2> marg1_;
    std::array<double, 2> marg2_;
    std::array<bool, 2> degenerate_{false, false};
};

namespace detail {

inline void check_joint_spec(const JointSpec& spec) {
    spec.sched.validate();
    if (!spec.sched.finite()) throw ValidationError("JointSpec: detection times must be finite");
}

inline Matrix on_first(const Observable& e, std::size_t d2) {
    return kron(e.entries(), Matrix::Identity(static_cast<Eigen::Index>(d2), static_cast<Eigen::Index>(d2)));
}

inline Matrix on_second(const Observable& e, std::size_t d1) {
    return kron(Matrix::Identity(static_cast<Eigen::Index>(d1), static_cast<Eigen::Index>(d1)), e.entries());
}

inline double expect_raw(const Vector& psi, const Matrix& op) {
    return real_part_checked(psi.dot(op * psi));
}

inline void require_qubits(const HamiltonianFunctional& f1, const HamiltonianFunctional& f2) {
    if (f1.dim() != 2 || f2.dim() != 2) throw ValidationError("spin measurements require two spin-1/2 particles");
}

/// Amplitudes with particle labels exchanged.
inline StateVector swap_particles(const StateVector& psi, Dims dims) {
    return StateVector(flatten(coefficient_matrix(psi.amplitudes(), dims).transpose()), 1e-6);
}

enum class Collapse { standard, generalized };

/// Projection-at-a-distance table for t1 <= t2.
inline ProbabilityTable projection_table(const StateVector& psi0, const HamiltonianFunctional& f1,
                                         const HamiltonianFunctional& f2, const JointSpec& spec,
                                         const EvolveOptions& opts, Collapse mode) {
    const DetectionSchedule sched = spec.sched;
    const double t1 = sched.t1;
    const double t2 = sched.t2;
    const Vector pre = evolve(psi0, f1, f2, sched, t1, opts).state.amplitudes();

    Matrix u2 = Matrix::Identity(2, 2);
    if (mode == Collapse::generalized) {
        const auto props = effective_propagators_at(psi0, f1, f2, sched, {t1, t2}, opts.dt);
        u2 = props[1].second * props[0].second.adjoint();
    }

    std::array<double, 4> joint{};
    std::array<double, 2> marg1{};
    std::array<bool, 2> degenerate{false, false};
    for (Sign s1 : kSigns) {
        const Vector q = on_first(spin_projector(spec.axis1, s1), 2) * pre;
        const double p = q.squaredNorm();
        marg1[sign_index(s1)] = p;
        if (p < kDegenerateBranch) {
            degenerate[sign_index(s1)] = true;
            continue;
        }
        Vector post;
        if (mode == Collapse::standard) {
            // Particle 1 is switched off; particle 2 re-evolves from the
            // projected state, so its nonlinear frequency is recomputed there.
            const StateVector branch(q / std::sqrt(p), 1e-9);
            const DetectionSchedule after{0.0, t2 - t1};
            post = evolve(branch, f1, f2, after, t2 - t1, opts).state.amplitudes();
        }
        for (Sign s2 : kSigns) {
            const Observable e2 = spin_projector(spec.axis2, s2);
            double value = 0.0;
            if (mode == Collapse::standard) {
                value = p * expect_raw(post, on_second(e2, 2));
            } else {
                const Matrix heis = u2.adjoint() * e2.entries() * u2;
                value = expect_raw(q, kron(Matrix::Identity(2, 2), heis));
            }
            joint[2 * sign_index(s1) + sign_index(s2)] = value;
        }
    }
    std::array<double, 2> marg2{joint[0] + joint[2], joint[1] + joint[3]};
    ProbabilityTable table(joint, marg1, marg2);
    for (Sign s : kSigns)
        if (degenerate[sign_index(s)]) table.mark_degenerate(s);
    return table;
}

inline ProbabilityTable projection_ordered(const StateVector& psi0, const HamiltonianFunctional& f1,
                                           const HamiltonianFunctional& f2, const JointSpec& spec,
                                           const EvolveOptions& opts, Collapse mode) {
    check_joint_spec(spec);
    require_qubits(f1, f2);
    if (spec.sched.t1 <= spec.sched.t2) return projection_table(psi0, f1, f2, spec, opts, mode);
    const JointSpec mirrored{spec.axis2, spec.axis1, {spec.sched.t2, spec.sched.t1}};
    return projection_table(swap_particles(psi0, {2, 2}), f2, f1, mirrored, opts, mode).swapped();
}

}  // namespace detail

/// Open-system joint probabilities <Psi_{t1,t2}(t)| E1 (x) E2 |Psi_{t1,t2}(t)>, t = max(t1, t2).
inline ProbabilityTable joint_open(const StateVector& psi0, const HamiltonianFunctional& f1,
                                   const HamiltonianFunctional& f2, const JointSpec& spec,
                                   const EvolveOptions& opts = {}) {
    detail::check_joint_spec(spec);
    detail::require_qubits(f1, f2);
    const Vector psi = evolve(psi0, f1, f2, spec.sched, spec.sched.last(), opts).state.amplitudes();
    std::array<double, 4> joint{};
    std::array<double, 2> marg1{};
    std::array<double, 2> marg2{};
    for (Sign s1 : kSigns) {
        const Observable e1 = spin_projector(spec.axis1, s1);
        marg1[sign_index(s1)] = detail::expect_raw(psi, detail::on_first(e1, 2));
        for (Sign s2 : kSigns) {
            const Observable e2 = spin_projector(spec.axis2, s2);
            joint[2 * sign_index(s1) + sign_index(s2)] = detail::expect_raw(psi, kron(e1.entries(), e2.entries()));
        }
    }
    for (Sign s2 : kSigns)
        marg2[sign_index(s2)] = detail::expect_raw(psi, detail::on_second(spin_projector(spec.axis2, s2), 2));
    return ProbabilityTable(joint, marg1, marg2);
}

/// Textbook projection at a distance. Measurements are ordered by time; if
/// t2 < t1 the particles swap roles.
inline ProbabilityTable joint_projection_standard(const StateVector& psi0, const HamiltonianFunctional& f1,
                                                  const HamiltonianFunctional& f2, const JointSpec& spec,
                                                  const EvolveOptions& opts = {}) {
    return detail::projection_ordered(psi0, f1, f2, spec, opts, detail::Collapse::standard);
}

/// Projection at a distance with the post-collapse propagator of the later
/// particle taken from the initial-condition effective unitaries.
inline ProbabilityTable joint_projection_generalized(const StateVector& psi0, const HamiltonianFunctional& f1,
                                                     const HamiltonianFunctional& f2, const JointSpec& spec,
                                                     const EvolveOptions& opts = {}) {
    return detail::projection_ordered(psi0, f1, f2, spec, opts, detail::Collapse::generalized);
}

/// P[other particle's outcome | given particle's outcome], indexed by sign.
inline std::array<double, 2> conditional(const ProbabilityTable& table, Subsystem given, Sign sign) {
    const double p = table.marginal(given, sign);
    if (p <= kDegenerateBranch)
        throw UndefinedConditional("conditional: condition has probability " + detail::num(p));
    std::array<double, 2> out{};
    for (Sign other : kSigns) {
        const double j = given == Subsystem::first ? table.joint(sign, other) : table.joint(other, sign);
        out[sign_index(other)] = j / p;
    }
    if (std::abs(out[0] + out[1] - 1.0) > kCompletenessTolerance)
        throw NumericalError("conditional: entries do not sum to 1");
    return out;
}

// ---------------------------------------------------------------------------
// Ensembles after the measurement on particle 1

enum class Algorithm { open, projection_standard, projection_generalized };

/// Which one-sided limit to take at a detection time.
enum class Side { left, right };

struct SamplePoint {
    double t = 0.0;
    Side side = Side::right;
};

struct Branch {
    std::optional<Sign> outcome;  // empty for the unmeasured ensemble
    double weight = 1.0;
    StateVector state;
};

using Ensemble = std::vector<Branch>;

/// Ensembles at each of the (time-ordered) sample points. Before t1, or under
/// the open algorithm, the ensemble is the single evolved state. From t1 on,
/// projection algorithms yield the outcome branches of a measurement of
/// axis1 . sigma on particle 1, weighted by their probabilities; particle 1 is
/// frozen afterwards. Branches with probability < 1e-12 are dropped.
inline std::vector<Ensemble> ensembles_after_measurement(const StateVector& psi0, const HamiltonianFunctional& f1,
                                                         const HamiltonianFunctional& f2, DetectionSchedule sched,
                                                         const BlochAxis& axis1,
                                                         const std::vector<SamplePoint>& points, Algorithm algorithm,
                                                         const EvolveOptions& opts = {}) {
    sched.validate();
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].t < points[i - 1].t ||
            (points[i].t == points[i - 1].t && points[i].side == Side::left && points[i - 1].side == Side::right))
            throw ValidationError("ensembles_after_measurement: sample points must be time ordered");

    const double t1 = sched.t1;
    auto measured = [&](const SamplePoint& p) {
        if (algorithm == Algorithm::open) return false;
        return p.t > t1 || (p.t == t1 && p.side == Side::right);
    };

    std::vector<Ensemble> out(points.size());
    std::vector<double> pre_times;
    std::vector<std::size_t> pre_index;
    std::vector<double> post_times;
    std::vector<std::size_t> post_index;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (measured(points[i])) {
            post_times.push_back(points[i].t);
            post_index.push_back(i);
        } else {
            pre_times.push_back(points[i].t);
            pre_index.push_back(i);
        }
    }

    if (!pre_times.empty()) {
        auto states = evolve_at(psi0, f1, f2, sched, pre_times, opts);
        for (std::size_t j = 0; j < states.size(); ++j)
            out[pre_index[j]].push_back({std::nullopt, 1.0, std::move(states[j].state)});
    }
    if (post_times.empty()) return out;

    detail::require_qubits(f1, f2);
    const Vector pre = evolve(psi0, f1, f2, sched, t1, opts).state.amplitudes();
    std::vector<Matrix> u2;
    if (algorithm == Algorithm::projection_generalized) {
        std::vector<double> times{t1};
        times.insert(times.end(), post_times.begin(), post_times.end());
        const auto props = effective_propagators_at(psi0, f1, f2, sched, times, opts.dt);
        for (std::size_t j = 1; j < props.size(); ++j) u2.push_back(props[j].second * props[0].second.adjoint());
    }

    for (Sign s1 : kSigns) {
        const Vector q = detail::on_first(spin_projector(axis1, s1), 2) * pre;
        const double p = q.squaredNorm();
        if (p < kDegenerateBranch) continue;
        const StateVector branch(q / std::sqrt(p), 1e-9);
        if (algorithm == Algorithm::projection_standard) {
            std::vector<double> rel;
            rel.reserve(post_times.size());
            for (double t : post_times) rel.push_back(t - t1);
            const DetectionSchedule after{0.0, std::max(sched.t2 - t1, 0.0)};
            auto states = evolve_at(branch, f1, f2, after, rel, opts);
            for (std::size_t j = 0; j < states.size(); ++j)
                out[post_index[j]].push_back({s1, p, std::move(states[j].state)});
        } else {
            for (std::size_t j = 0; j < post_times.size(); ++j) {
                Vector moved = kron(Matrix::Identity(2, 2), u2[j]) * branch.amplitudes();
                out[post_index[j]].push_back({s1, p, StateVector(std::move(moved), kUnitarityDriftLimit)});
            }
        }
    }
    return out;
}

/// Outcome-weighted average of obs over the ensemble, summed in outcome order.
inline double ensemble_average(const Ensemble& ensemble, const Observable& obs) {
    double v = 0.0;
    for (const Branch& b : ensemble) v += b.weight * expect(b.state, obs);
    return v;
}

/// Outcome-weighted mixture of reduced density matrices.
inline Matrix ensemble_reduced(const Ensemble& ensemble, Subsystem keep, Dims dims = {}) {
    const auto d = static_cast<Eigen::Index>(keep == Subsystem::first ? dims.first : dims.second);
    Matrix rho = Matrix::Zero(d, d);
    for (const Branch& b : ensemble) rho += b.weight * reduced_matrix(b.state.amplitudes(), keep, dims);
    return rho;
}

inline double ensemble_average_after_measurement(const StateVector& psi0, const HamiltonianFunctional& f1,
                                                 const HamiltonianFunctional& f2, DetectionSchedule sched,
                                                 const BlochAxis& axis1, const Observable& obs, double t,
                                                 Algorithm algorithm, const EvolveOptions& opts = {},
                                                 Side side = Side::right) {
    const auto ens = ensembles_after_measurement(psi0, f1, f2, sched, axis1, {{t, side}}, algorithm, opts);
    return ensemble_average(ens.front(), obs);
}

}  // namespace nlqm
