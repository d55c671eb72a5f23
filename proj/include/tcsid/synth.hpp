#pragma once

/**
 * @file synth.hpp
 * @brief Seeded synthetic datasets with their ground truth.
 *
 * Every generator is a pure function of (spec, seed). Noise comes from
 * tcsid::Rng (MT19937-64 + Box-Muller), see random.hpp for the exact stream.
 * Parameter defaults are chosen stable and observable; none of them are
 * published values.
 */

#include "tcsid/error.hpp"
#include "tcsid/linalg.hpp"
#include "tcsid/state_space.hpp"
#include "tcsid/sysid.hpp"
#include "tcsid/timeseries.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace tcsid {

struct SynthOutput {
    TimeSeries series;
    std::optional<Matrix> true_states;  ///< n x T
    std::optional<TimeSeries> inputs;
    std::optional<Eigen::Index> split_index;
    nlohmann::json spec;                ///< generator name, parameters and seed
};

namespace detail {

inline nlohmann::json matrix_rows(const Matrix& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix rotation2(double theta) {
    Matrix r(2, 2);
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
}

/// Smallest integer period p <= 10000 with p*f integral, if any.
inline std::optional<Eigen::Index> integer_period(double f) {
    for (Eigen::Index p = 1; p <= 10000; ++p) {
        const double cycles = static_cast<double>(p) * f;
        if (std::abs(cycles - std::round(cycles)) < 1e-9) {
            return p;
        }
    }
    return std::nullopt;
}

} // namespace detail

// ---------------------------------------------------------------------------
// AR(2)
// ---------------------------------------------------------------------------

struct Ar2Spec {
    double phi1 = 1.5;
    double phi2 = -0.9;
    double noise_sd = 1.0;
    Eigen::Index length = 2000;
    double y0 = 1.0;       ///< y_0
    double y_prev = 0.0;   ///< y_{-1}
};

inline bool ar2_stationary(double phi1, double phi2) {
    return std::abs(phi2) < 1.0 && phi1 + phi2 < 1.0 && phi2 - phi1 < 1.0;
}

/// y_t = phi1 y_{t-1} + phi2 y_{t-2} + e_t; true states are the companion vectors [y_t, y_{t-1}].
inline SynthOutput gen_ar2(const Ar2Spec& spec, std::uint64_t seed) {
    if (!ar2_stationary(spec.phi1, spec.phi2)) {
        throw InvalidArgument("AR(2) coefficients lie outside the stationarity triangle");
    }
    detail::require(spec.length >= 10, "AR(2) generator needs T >= 10");
    detail::require(spec.noise_sd >= 0.0, "noise_sd must be non-negative");
    Matrix a(2, 2);
    a << spec.phi1, spec.phi2, 1.0, 0.0;
    Matrix c(1, 2);
    c << 1.0, 0.0;
    Matrix q = Matrix::Zero(2, 2);
    q(0, 0) = spec.noise_sd * spec.noise_sd;
    const auto model = StateSpaceModel::output_only(a, c, q, Matrix::Zero(1, 1));
    Vector x0(2);
    x0 << spec.y0, spec.y_prev;
    auto sim = simulate_states(model, x0, nullptr, spec.length, spec.noise_sd > 0.0, seed);

    SynthOutput out{TimeSeries(std::move(sim.outputs)), std::move(sim.states), std::nullopt, std::nullopt, {}};
    out.spec = {{"generator", "ar2"},      {"phi1", spec.phi1}, {"phi2", spec.phi2}, {"noise_sd", spec.noise_sd},
                {"T", spec.length},        {"y0", spec.y0},     {"y_prev", spec.y_prev}, {"seed", seed}};
    return out;
}

// ---------------------------------------------------------------------------
// Two superimposed sinusoids
// ---------------------------------------------------------------------------

struct DoublePeriodicSpec {
    Eigen::Index length = 300;
    double f1 = 1.0 / 3.0;
    double f2 = 1.0 / 5.0;
    double amplitude1 = 1.0;
    double amplitude2 = 0.6;
    double phase1 = 0.0;
    double phase2 = 0.0;
    double noise_sd = 0.0;
};

/// Length of the shortest window containing whole periods of both sinusoids.
inline Eigen::Index joint_period(double f1, double f2) {
    const auto p1 = detail::integer_period(f1);
    const auto p2 = detail::integer_period(f2);
    if (p1 && p2) {
        return std::lcm(*p1, *p2);
    }
    return static_cast<Eigen::Index>(std::ceil(std::max(1.0 / f1, 1.0 / f2)));
}

/**
 * y_t = a1 cos(2 pi f1 t + p1) + a2 cos(2 pi f2 t + p2) + noise. The true
 * state is the stack of the two rotation-block states
 * [a1 cos, a1 sin, a2 cos, a2 sin] of each phase.
 */
inline SynthOutput gen_double_periodic(const DoublePeriodicSpec& spec, std::uint64_t seed) {
    for (double f : {spec.f1, spec.f2}) {
        if (!(f > 0.0 && f <= 0.5)) {
            throw InvalidArgument("frequencies must lie in (0, 0.5]");
        }
    }
    const Eigen::Index period = joint_period(spec.f1, spec.f2);
    if (spec.length < 2 * period) {
        throw InvalidArgument("T must cover at least two joint periods (" + std::to_string(2 * period) + " samples)");
    }
    detail::require(spec.noise_sd >= 0.0, "noise_sd must be non-negative");
    Rng rng(seed);
    Matrix values(spec.length, 1);
    Matrix states(4, spec.length);
    for (Eigen::Index t = 0; t < spec.length; ++t) {
        const double th1 = 2.0 * std::numbers::pi * spec.f1 * static_cast<double>(t) + spec.phase1;
        const double th2 = 2.0 * std::numbers::pi * spec.f2 * static_cast<double>(t) + spec.phase2;
        states.col(t) << spec.amplitude1 * std::cos(th1), spec.amplitude1 * std::sin(th1),
            spec.amplitude2 * std::cos(th2), spec.amplitude2 * std::sin(th2);
        const double noise = spec.noise_sd > 0.0 ? spec.noise_sd * rng.normal() : 0.0;
        values(t, 0) = states(0, t) + states(2, t) + noise;
    }
    SynthOutput out{TimeSeries(std::move(values)), std::move(states), std::nullopt, std::nullopt, {}};
    out.spec = {{"generator", "double_periodic"}, {"T", spec.length},        {"f1", spec.f1},
                {"f2", spec.f2},                  {"amplitude1", spec.amplitude1}, {"amplitude2", spec.amplitude2},
                {"phase1", spec.phase1},          {"phase2", spec.phase2},   {"noise_sd", spec.noise_sd},
                {"seed", seed}};
    return out;
}

// ---------------------------------------------------------------------------
// Noisy rotation state-space model
// ---------------------------------------------------------------------------

struct PeriodicSsmSpec {
    double theta = 2.0 * std::numbers::pi / 30.0;
    Matrix C = (Matrix(1, 2) << 1.0, 0.0).finished();
    double q_sd = 0.0;
    double r_sd = 0.0;
    Eigen::Index length = 500;
    Vector x0 = (Vector(2) << 1.0, 0.0).finished();
};

/// x_{t+1} = Rot(theta) x_t + w_t, y_t = C x_t + v_t with w ~ N(0, q_sd^2 I), v ~ N(0, r_sd^2 I).
inline SynthOutput gen_periodic_ssm(const PeriodicSsmSpec& spec, std::uint64_t seed) {
    if (!(spec.theta > 0.0 && spec.theta < std::numbers::pi)) {
        throw InvalidArgument("theta must lie in (0, pi)");
    }
    detail::require(spec.C.cols() == 2 && spec.C.rows() >= 1, "C must be D x 2");
    detail::require(spec.x0.size() == 2, "x0 must have 2 entries");
    detail::require(spec.q_sd >= 0.0 && spec.r_sd >= 0.0, "noise levels must be non-negative");
    const auto d = spec.C.rows();
    const auto model =
        StateSpaceModel::output_only(detail::rotation2(spec.theta), spec.C, spec.q_sd * spec.q_sd * Matrix::Identity(2, 2),
                                     spec.r_sd * spec.r_sd * Matrix::Identity(d, d));
    const bool noisy = spec.q_sd > 0.0 || spec.r_sd > 0.0;
    auto sim = simulate_states(model, spec.x0, nullptr, spec.length, noisy, seed);
    SynthOutput out{TimeSeries(std::move(sim.outputs)), std::move(sim.states), std::nullopt, std::nullopt, {}};
    out.spec = {{"generator", "periodic_ssm"}, {"theta", spec.theta}, {"C", detail::matrix_rows(spec.C)},
                {"q_sd", spec.q_sd},           {"r_sd", spec.r_sd},   {"T", spec.length},
                {"x0", std::vector<double>(spec.x0.data(), spec.x0.data() + spec.x0.size())},
                {"seed", seed}};
    return out;
}

/// The rotation model behind gen_periodic_ssm.
inline StateSpaceModel periodic_ssm_model(const PeriodicSsmSpec& spec) {
    const auto d = spec.C.rows();
    return StateSpaceModel::output_only(detail::rotation2(spec.theta), spec.C,
                                        spec.q_sd * spec.q_sd * Matrix::Identity(2, 2),
                                        spec.r_sd * spec.r_sd * Matrix::Identity(d, d));
}

// ---------------------------------------------------------------------------
// Stepped exogenous input
// ---------------------------------------------------------------------------

/// Input held at `level` over samples [begin, end).
struct StepSegment {
    Eigen::Index begin = 0;
    Eigen::Index end = 0;
    Vector level;
};

/// Segments of `segment_length` samples cycling through `levels` (scalar input).
inline std::vector<StepSegment> alternating_schedule(Eigen::Index length, Eigen::Index segment_length,
                                                     const std::vector<double>& levels) {
    detail::require(segment_length >= 1 && !levels.empty(), "schedule needs a positive segment length and levels");
    std::vector<StepSegment> out;
    std::size_t k = 0;
    for (Eigen::Index begin = 0; begin < length; begin += segment_length) {
        Vector level(1);
        level(0) = levels[k++ % levels.size()];
        out.push_back({begin, std::min(length, begin + segment_length), level});
    }
    return out;
}

struct ExogenousSpec {
    StateSpaceModel system = default_system();
    std::vector<StepSegment> schedule;  ///< empty: alternating 0 / 1 steps every T/8 samples
    double noise_sd = 0.0;              ///< observation noise
    Eigen::Index length = 2000;
    double train_fraction = 0.8;

    /// Stable, observable and controllable n = 2 system (eigenvalues 0.9 +- 0.2i).
    static StateSpaceModel default_system() {
        StateSpaceModel m;
        m.A = (Matrix(2, 2) << 0.9, 0.2, -0.2, 0.9).finished();
        m.B = (Matrix(2, 1) << 1.0, 0.0).finished();
        m.C = (Matrix(1, 2) << 1.0, 0.5).finished();
        m.D_mat = Matrix::Zero(1, 1);
        m.Q = Matrix::Zero(2, 2);
        m.R = Matrix::Zero(1, 1);
        return m;
    }
};

/// Expand a schedule into a T x m input matrix; the segments must tile [0, T) in order.
inline Matrix expand_schedule(const std::vector<StepSegment>& schedule, Eigen::Index length, Eigen::Index m) {
    if (schedule.empty()) {
        throw InvalidArgument("step schedule is empty");
    }
    Matrix u(length, m);
    Eigen::Index covered = 0;
    for (const auto& seg : schedule) {
        if (seg.begin != covered) {
            throw InvalidArgument("step schedule has a gap or overlap at sample " + std::to_string(covered));
        }
        detail::require(seg.end > seg.begin, "step segment must be non-empty");
        detail::require(seg.level.size() == m, "step level has the wrong input dimension");
        const Eigen::Index end = std::min(seg.end, length);
        for (Eigen::Index t = seg.begin; t < end; ++t) {
            u.row(t) = seg.level.transpose();
        }
        covered = seg.end;
        if (covered >= length) {
            break;
        }
    }
    if (covered < length) {
        throw InvalidArgument("step schedule ends at " + std::to_string(covered) + ", before T");
    }
    return u;
}

inline SynthOutput gen_exogenous_stepped(const ExogenousSpec& spec, std::uint64_t seed) {
    detail::require(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0, "train fraction must lie in (0, 1]");
    detail::require(spec.noise_sd >= 0.0, "noise_sd must be non-negative");
    StateSpaceModel model = spec.system;
    model.validate();
    detail::require(model.m() >= 1, "exogenous system needs at least one input");
    model.Q = Matrix::Zero(model.n(), model.n());
    model.R = spec.noise_sd * spec.noise_sd * Matrix::Identity(model.outputs(), model.outputs());
    const auto schedule = spec.schedule.empty() && model.m() == 1
                              ? alternating_schedule(spec.length, std::max<Eigen::Index>(1, spec.length / 8), {0.0, 1.0})
                              : spec.schedule;
    const Matrix u = expand_schedule(schedule, spec.length, model.m());
    auto sim = simulate_states(model, Vector::Zero(model.n()), &u, spec.length, spec.noise_sd > 0.0, seed);

    SynthOutput out{TimeSeries(std::move(sim.outputs)), std::move(sim.states), TimeSeries(u),
                    static_cast<Eigen::Index>(std::floor(spec.train_fraction * static_cast<double>(spec.length))), {}};
    auto segments = nlohmann::json::array();
    for (const auto& seg : schedule) {
        segments.push_back({{"begin", seg.begin},
                            {"end", seg.end},
                            {"level", std::vector<double>(seg.level.data(), seg.level.data() + seg.level.size())}});
    }
    out.spec = {{"generator", "exogenous_stepped"},
                {"A", detail::matrix_rows(model.A)},
                {"B", detail::matrix_rows(model.B)},
                {"C", detail::matrix_rows(model.C)},
                {"D", detail::matrix_rows(model.D_mat)},
                {"schedule", segments},
                {"noise_sd", spec.noise_sd},
                {"T", spec.length},
                {"train_fraction", spec.train_fraction},
                {"split_index", *out.split_index},
                {"seed", seed},
                {"note", "synthetic analog; system matrices and schedule are generator defaults"}};
    return out;
}

} // namespace tcsid
