#pragma once

/**
 * @file kalman.hpp
 * @brief Kalman filter, RTS smoother, h-step forecasts and region-entry queries.
 *
 * The filter runs the five recursions
 *
 *     x(t|t-1) = A x(t-1|t-1)
 *     P(t|t-1) = A P(t-1|t-1) A^T + Q
 *     K_t      = P(t|t-1) C^T (C P(t|t-1) C^T + R)^-1
 *     x(t|t)   = x(t|t-1) + K_t (y_t - C x(t|t-1))
 *     P(t|t)   = (I - K_t C) P(t|t-1)
 *
 * with the prior (x0, P0) playing the role of x(0|0) for the first
 * observation. Covariances are symmetrised after every update. The filter
 * state is a plain value: each step is a pure function of the previous
 * state and the new observation.
 */

#include "tcsid/error.hpp"
#include "tcsid/linalg.hpp"
#include "tcsid/spectral.hpp"
#include "tcsid/state_space.hpp"
#include "tcsid/sysid.hpp"
#include "tcsid/timeseries.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace tcsid {

struct KalmanState {
    Vector x_pred;       ///< x(t|t-1)
    Vector x_filt;       ///< x(t|t)
    Matrix P_pred;       ///< P(t|t-1)
    Matrix P_filt;       ///< P(t|t)
    Matrix gain;         ///< K_t, n x D
    Vector innovation;   ///< y_t - C x(t|t-1)
    bool pseudo_inverse = false;  ///< innovation covariance was singular; gain used its pseudoinverse
};

struct ForecastResult {
    Eigen::Index horizon = 0;
    Matrix predicted_states;   ///< h x n
    Matrix predicted_outputs;  ///< h x D
    std::vector<Matrix> output_covariances;
    std::vector<Matrix> state_covariances;
};

namespace detail {

/// K = P C^T S^-1 via a solve; falls back to the pseudoinverse when S is singular but PSD.
/// C P C^T is PSD by construction, so S is only treated as indefinite when R is.
inline Matrix kalman_gain(const Matrix& p_pred, const Matrix& c, const Matrix& r, const Matrix& s, bool& used_pinv) {
    used_pinv = false;
    if (!s.allFinite()) {
        throw NumericalError("innovation covariance is not finite; check the model or regularise R");
    }
    // Rounding in C P C^T is relative to |C|^2 |P|, not to S itself, so that sets the tolerance.
    const double magnitude = std::max(s.cwiseAbs().maxCoeff(), c.squaredNorm() * p_pred.norm());
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    const Vector& ev = es.eigenvalues();
    if (ev.minCoeff() < -1e-10 * magnitude &&
        linalg::min_eigenvalue(r) < -linalg::kPinvCutoff * std::max(r.cwiseAbs().maxCoeff(), magnitude)) {
        throw NumericalError("innovation covariance C P C^T + R is indefinite; regularise R (add a small multiple of I)");
    }
    const Matrix pct = p_pred * c.transpose();
    const double cutoff = linalg::kPinvCutoff * magnitude;
    if (ev.minCoeff() > cutoff) {
        // K S = P C^T  <=>  S K^T = C P^T  (S symmetric)
        return s.ldlt().solve(pct.transpose()).transpose();
    }
    used_pinv = true;
    Vector inv = Vector::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > cutoff) {
            inv(i) = 1.0 / ev(i);
        }
    }
    return pct * (es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose());
}

} // namespace detail

/// One filter step. `u_prev` drives the transition into time t, `u_now` the feedthrough at t.
inline KalmanState kalman_step(const StateSpaceModel& model, const Vector& x_prev, const Matrix& p_prev,
                               const Vector& y, const Vector* u_prev = nullptr, const Vector* u_now = nullptr) {
    KalmanState s;
    s.x_pred = model.A * x_prev;
    if (u_prev != nullptr && model.m() > 0) {
        s.x_pred += model.B * *u_prev;
    }
    s.P_pred = linalg::symmetrize(model.A * p_prev * model.A.transpose() + model.Q);
    Vector y_pred = model.C * s.x_pred;
    if (u_now != nullptr && model.m() > 0) {
        y_pred += model.D_mat * *u_now;
    }
    const Matrix innovation_cov = linalg::symmetrize(model.C * s.P_pred * model.C.transpose() + model.R);
    s.gain = detail::kalman_gain(s.P_pred, model.C, model.R, innovation_cov, s.pseudo_inverse);
    s.innovation = y - y_pred;
    s.x_filt = s.x_pred + s.gain * s.innovation;
    const Matrix ikc = Matrix::Identity(model.n(), model.n()) - s.gain * model.C;
    s.P_filt = linalg::symmetrize(ikc * s.P_pred);
    return s;
}

/**
 * Filter every row of `y`. Defaults: x0 = 0, P0 = I. `inputs`, when given,
 * is a T x m matrix aligned with `y`.
 */
inline std::vector<KalmanState> kalman_filter(const StateSpaceModel& model, const Matrix& y,
                                              const std::optional<Vector>& x0 = std::nullopt,
                                              const std::optional<Matrix>& p0 = std::nullopt,
                                              const Matrix* inputs = nullptr) {
    const auto n = model.n();
    detail::require(y.cols() == model.outputs(), "observation dimension does not match C");
    if (inputs != nullptr) {
        detail::require(inputs->rows() == y.rows() && inputs->cols() == model.m(), "inputs must be T x m");
    }
    Vector x = x0.value_or(Vector::Zero(n));
    Matrix p = p0.value_or(Matrix::Identity(n, n));
    detail::require(x.size() == n, "x0 has the wrong dimension");
    detail::require(p.rows() == n && p.cols() == n, "P0 has the wrong shape");

    std::vector<KalmanState> out;
    out.reserve(static_cast<std::size_t>(y.rows()));
    for (Eigen::Index t = 0; t < y.rows(); ++t) {
        const Vector yt = y.row(t).transpose();
        if (inputs != nullptr) {
            const Vector u_now = inputs->row(t).transpose();
            const Vector u_prev = t > 0 ? Vector(inputs->row(t - 1).transpose()) : Vector::Zero(model.m());
            out.push_back(kalman_step(model, x, p, yt, &u_prev, &u_now));
        } else {
            out.push_back(kalman_step(model, x, p, yt));
        }
        x = out.back().x_filt;
        p = out.back().P_filt;
    }
    return out;
}

inline std::vector<KalmanState> kalman_filter(const StateSpaceModel& model, const TimeSeries& y,
                                              const std::optional<Vector>& x0 = std::nullopt,
                                              const std::optional<Matrix>& p0 = std::nullopt) {
    return kalman_filter(model, y.values(), x0, p0);
}

/// Filtered means as an n x T matrix.
inline Matrix filtered_states(const std::vector<KalmanState>& filtered) {
    detail::require(!filtered.empty(), "no filtered states");
    Matrix out(filtered.front().x_filt.size(), static_cast<Eigen::Index>(filtered.size()));
    for (std::size_t t = 0; t < filtered.size(); ++t) {
        out.col(static_cast<Eigen::Index>(t)) = filtered[t].x_filt;
    }
    return out;
}

struct SmoothedTrajectory {
    StateTrajectory trajectory;  ///< x(t|T), n x T
    std::vector<Matrix> covariances;
    bool pseudo_inverse = false; ///< some P(t+1|t) was singular
};

/// Rauch-Tung-Striebel backward pass over a completed filter run.
inline SmoothedTrajectory rts_smooth(const StateSpaceModel& model, const std::vector<KalmanState>& filtered,
                                     Eigen::Index window_length = 0) {
    if (filtered.empty()) {
        throw InvalidArgument("rts_smooth needs a non-empty filtered sequence");
    }
    const auto len = static_cast<Eigen::Index>(filtered.size());
    SmoothedTrajectory out;
    out.trajectory = {Matrix(model.n(), len), window_length};
    out.covariances.resize(filtered.size());
    // P_pred can collapse to rounding noise (Q = 0 after the state is pinned down), so the
    // pseudoinverse cutoff is taken relative to the largest predicted covariance in the run.
    double reference = 0.0;
    for (const auto& s : filtered) {
        reference = std::max(reference, s.P_pred.norm());
    }
    const double cutoff = linalg::kPinvCutoff * reference;
    Vector xs = filtered.back().x_filt;
    Matrix ps = filtered.back().P_filt;
    out.trajectory.states.col(len - 1) = xs;
    out.covariances.back() = ps;
    for (Eigen::Index t = len - 2; t >= 0; --t) {
        const auto& cur = filtered[static_cast<std::size_t>(t)];
        const auto& next = filtered[static_cast<std::size_t>(t + 1)];
        Eigen::SelfAdjointEigenSolver<Matrix> es(next.P_pred);
        Vector inv_ev = Vector::Zero(model.n());
        for (Eigen::Index i = 0; i < model.n(); ++i) {
            if (es.eigenvalues()(i) > cutoff) {
                inv_ev(i) = 1.0 / es.eigenvalues()(i);
            } else {
                out.pseudo_inverse = true;
            }
        }
        const Matrix inv = es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
        const Matrix g = cur.P_filt * model.A.transpose() * inv;
        xs = cur.x_filt + g * (xs - next.x_pred);
        ps = linalg::symmetrize(cur.P_filt + g * (ps - next.P_pred) * g.transpose());
        out.trajectory.states.col(t) = xs;
        out.covariances[static_cast<std::size_t>(t)] = ps;
    }
    return out;
}

/// Deterministic h-step propagation from the latest filtered state.
inline ForecastResult forecast(const StateSpaceModel& model, const KalmanState& last, Eigen::Index horizon) {
    if (horizon < 1) {
        throw InvalidArgument("forecast horizon must be at least 1");
    }
    ForecastResult out;
    out.horizon = horizon;
    out.predicted_states.resize(horizon, model.n());
    out.predicted_outputs.resize(horizon, model.outputs());
    Vector x = last.x_filt;
    Matrix p = last.P_filt;
    for (Eigen::Index k = 0; k < horizon; ++k) {
        x = model.A * x;
        p = linalg::symmetrize(model.A * p * model.A.transpose() + model.Q);
        out.predicted_states.row(k) = x.transpose();
        out.predicted_outputs.row(k) = (model.C * x).transpose();
        out.state_covariances.push_back(p);
        out.output_covariances.push_back(linalg::symmetrize(model.C * p * model.C.transpose() + model.R));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Online evaluation
// ---------------------------------------------------------------------------

struct OnlineConfig {
    Eigen::Index window_length = 0;
    RankChoice rank = RankChoice::automatic();
    Eigen::Index refit_every = 1;  ///< re-identify after this many new observations
};

struct OnlineEvaluation {
    Eigen::Index start = 0;
    Matrix predictions;            ///< one-step-ahead y(t|t-1) for t = start .. T-1
    double rmse = 0.0;
    double persistence_rmse = 0.0; ///< baseline y(t|t-1) = y_{t-1}
    std::vector<Eigen::Index> model_orders;
};

/**
 * Walk forward from `start`: before seeing y_t emit C A x(t-1|t-1), then
 * filter-update with y_t. The model is re-identified from y_0..y_{t-1}
 * every `refit_every` steps; the filter state is carried into the new
 * state basis through U_new^T U_old (states are window coordinates in the
 * basis U), with unit prior variance on directions the old basis lacked.
 */
inline OnlineEvaluation online_forecast_eval(const OnlineConfig& config, const TimeSeries& y, Eigen::Index start) {
    const Eigen::Index len = y.length();
    const Eigen::Index l = config.window_length;
    detail::require(l >= 1, "window length must be at least 1");
    detail::require(config.refit_every >= 1, "refit cadence must be at least 1");
    if (start < l + 2 || start >= len) {
        throw InvalidArgument("start index " + std::to_string(start) + " must lie in [L+2, T-1]");
    }

    auto fit = [&](Eigen::Index upto) {
        auto id = identify_output_only(y.slice(0, upto), l, config.rank);
        if (upto - l + 1 < id.model.n() + 2) {
            throw InvalidArgument("too few observations before the start index for a model of order " +
                                  std::to_string(id.model.n()));
        }
        return id;
    };

    auto id = fit(start);
    Matrix basis = id.decomposition.U.leftCols(id.model.n());
    auto warmup = kalman_filter(id.model, y.values().topRows(start));
    Vector x = warmup.back().x_filt;
    Matrix p = warmup.back().P_filt;

    OnlineEvaluation out;
    out.start = start;
    out.predictions.resize(len - start, y.channels());
    double sq = 0.0;
    double sq_persist = 0.0;
    for (Eigen::Index t = start; t < len; ++t) {
        if (t > start && (t - start) % config.refit_every == 0) {
            id = fit(t);
            Matrix new_basis = id.decomposition.U.leftCols(id.model.n());
            const Matrix map = new_basis.transpose() * basis;
            x = map * x;
            p = linalg::symmetrize(map * p * map.transpose() +
                                   (Matrix::Identity(map.rows(), map.rows()) - map * map.transpose()));
            basis = std::move(new_basis);
        }
        out.model_orders.push_back(id.model.n());
        const Vector yt = y.at(t);
        const Vector pred = id.model.C * (id.model.A * x);
        out.predictions.row(t - start) = pred.transpose();
        sq += (yt - pred).squaredNorm();
        sq_persist += (yt - y.at(t - 1)).squaredNorm();
        const KalmanState s = kalman_step(id.model, x, p, yt);
        x = s.x_filt;
        p = s.P_filt;
    }
    const double count = static_cast<double>((len - start) * y.channels());
    out.rmse = std::sqrt(sq / count);
    out.persistence_rmse = std::sqrt(sq_persist / count);
    return out;
}

// ---------------------------------------------------------------------------
// Region queries
// ---------------------------------------------------------------------------

/// Axis-aligned box or Euclidean ball in state/embedding coordinates.
struct Region {
    enum class Kind { ball, box };
    Kind kind = Kind::ball;
    Vector center;
    double radius = 0.0;
    Vector lower;
    Vector upper;

    static Region ball(Vector center, double radius) {
        detail::require(radius >= 0.0, "region radius must be non-negative");
        Region r;
        r.kind = Kind::ball;
        r.center = std::move(center);
        r.radius = radius;
        return r;
    }

    static Region box(Vector lower, Vector upper) {
        detail::require(lower.size() == upper.size(), "box bounds differ in dimension");
        detail::require((lower.array() <= upper.array()).all(), "box lower bound exceeds upper bound");
        Region r;
        r.kind = Kind::box;
        r.lower = std::move(lower);
        r.upper = std::move(upper);
        return r;
    }

    [[nodiscard]] Eigen::Index dims() const { return kind == Kind::ball ? center.size() : lower.size(); }

    [[nodiscard]] bool contains(const Vector& x) const {
        if (kind == Kind::ball) {
            return (x - center).norm() <= radius;
        }
        return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
    }
};

/// Smallest k in [1, cap] whose mean forecast A^k x(t|t) lies inside the region.
inline std::optional<Eigen::Index> next_region_entry(const StateSpaceModel& model, const KalmanState& last,
                                                     const Region& region, Eigen::Index cap) {
    if (cap < 1) {
        throw InvalidArgument("horizon cap must be at least 1");
    }
    if (region.dims() != model.n()) {
        throw InvalidArgument("region has " + std::to_string(region.dims()) + " dimensions, state has " +
                              std::to_string(model.n()));
    }
    Vector x = last.x_filt;
    for (Eigen::Index k = 1; k <= cap; ++k) {
        x = model.A * x;
        if (region.contains(x)) {
            return k;
        }
    }
    return std::nullopt;
}

} // namespace tcsid
