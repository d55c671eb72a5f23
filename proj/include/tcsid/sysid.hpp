#pragma once

/**
 * @file sysid.hpp
 * @brief Subspace identification of state-space models from Hankel SVD states.
 *
 * Output-only route: H = block_hankel(y, L), H = U S V^T, states X = S_n V_n^T,
 * then A, C by least squares on the state sequence and Q, R from residual
 * second moments.
 *
 * Input-output route: the output Hankel matrix is projected onto the
 * orthogonal complement of the input Hankel row space, which removes the
 * input contribution and leaves the column space of the extended
 * observability matrix. A and C follow from its shift structure; B, D and
 * the initial state from a linear regression on the outputs.
 */

#include "tcsid/error.hpp"
#include "tcsid/linalg.hpp"
#include "tcsid/random.hpp"
#include "tcsid/spectral.hpp"
#include "tcsid/state_space.hpp"
#include "tcsid/timeseries.hpp"
#include "tcsid/trajectory.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

namespace tcsid {

struct ACEstimate {
    Matrix A;
    Matrix C;
    Matrix process_residuals;      ///< w_t = x_{t+1} - A x_t, n x (W-1)
    Matrix observation_residuals;  ///< v_t = y_t - C x_t, D x W
    bool rank_deficient = false;   ///< state matrix was rank deficient; minimum-norm solution returned
};

/**
 * A = X_{1:W} X_{0:W-1}^+ and C = Y X^+, where column t of `outputs` is the
 * observation at the start of window t.
 */
inline ACEstimate estimate_AC(const StateTrajectory& x, const Matrix& outputs) {
    const Matrix& states = x.states;
    const auto n = states.rows();
    const auto w = states.cols();
    detail::require(n >= 1, "state trajectory is empty");
    detail::require(outputs.cols() == w, "outputs must have one column per state");
    if (w < n + 1) {
        throw InvalidArgument("need at least n+1 = " + std::to_string(n + 1) + " states, got " + std::to_string(w));
    }
    const Matrix past = states.leftCols(w - 1);
    const Matrix future = states.rightCols(w - 1);
    const auto past_pinv = linalg::pinv(past);
    const auto all_pinv = linalg::pinv(states);

    ACEstimate est;
    est.A = future * past_pinv.value;
    est.C = outputs * all_pinv.value;
    est.process_residuals = future - est.A * past;
    est.observation_residuals = outputs - est.C * states;
    est.rank_deficient = past_pinv.rank_deficient || all_pinv.rank_deficient;
    return est;
}

/**
 * Empirical noise covariances Q = 1/(T-1) sum w w^T and R = 1/T sum v v^T,
 * where T - 1 is the number of process residuals and T the number of
 * observation residuals. Both are symmetrised.
 */
inline std::pair<Matrix, Matrix> estimate_QR(const Matrix& process_residuals, const Matrix& observation_residuals) {
    if (process_residuals.cols() < 2) {
        throw InvalidArgument("estimate_QR needs at least 2 process residuals");
    }
    if (observation_residuals.cols() < 1) {
        throw InvalidArgument("estimate_QR needs at least 1 observation residual");
    }
    const Matrix q = process_residuals * process_residuals.transpose() / static_cast<double>(process_residuals.cols());
    const Matrix r =
        observation_residuals * observation_residuals.transpose() / static_cast<double>(observation_residuals.cols());
    return {linalg::symmetrize(q), linalg::symmetrize(r)};
}

struct Identification {
    StateSpaceModel model;
    StateTrajectory states;               ///< one column per window start
    SpectralDecomposition decomposition;  ///< of H (output-only) or of the projected H (with inputs)
    bool rank_deficient = false;
    std::string notice;                   ///< non-empty when a fallback path was taken
};

inline Identification identify_output_only(const TimeSeries& ts, Eigen::Index window_length,
                                           const RankChoice& choice = RankChoice::automatic()) {
    const BlockHankel h = block_hankel(ts, window_length);
    Identification out;
    out.decomposition = decompose(h, choice);
    if (out.decomposition.rank < 1) {
        throw NumericalError("no singular value above the threshold; the series carries no signal");
    }
    out.states = hankel_states(out.decomposition);
    const Matrix outputs = ts.values().topRows(h.windows()).transpose();
    const ACEstimate ac = estimate_AC(out.states, outputs);
    auto [q, r] = estimate_QR(ac.process_residuals, ac.observation_residuals);
    out.model = StateSpaceModel::output_only(ac.A, ac.C, std::move(q), std::move(r));
    out.rank_deficient = ac.rank_deficient;
    return out;
}

/// H_y (I - H_u^T (H_u H_u^T)^+ H_u): rows of the result are orthogonal to the rows of H_u.
inline Matrix project_out_inputs(const Matrix& output_hankel, const Matrix& input_hankel) {
    detail::require(output_hankel.cols() == input_hankel.cols(), "Hankel matrices must have the same column count");
    Eigen::BDCSVD<Matrix> svd(input_hankel, Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > linalg::kPinvCutoff * s(0) && s(rank) > 0.0) {
        ++rank;
    }
    const Matrix basis = svd.matrixV().leftCols(rank);
    return output_hankel - (output_hankel * basis) * basis.transpose();
}

struct SimulationResult {
    Matrix outputs;  ///< steps x D
    Matrix states;   ///< n x steps
};

/**
 * Iterate the state equation for `steps` samples starting from x0.
 * With noise on, every step draws n process then D observation normals
 * (scaled by psd_sqrt(Q), psd_sqrt(R)) regardless of whether Q or R is zero,
 * so streams line up between models that share a seed.
 */
inline SimulationResult simulate_states(const StateSpaceModel& model, const Vector& x0, const Matrix* inputs,
                                        Eigen::Index steps, bool noise = false, std::uint64_t seed = 0) {
    model.validate();
    detail::require(x0.size() == model.n(), "x0 has the wrong dimension");
    detail::require(steps >= 1, "simulation needs at least one step");
    if (inputs != nullptr) {
        detail::require(inputs->cols() == model.m(), "inputs must have m columns");
        detail::require(inputs->rows() >= steps, "inputs shorter than the simulation horizon");
    }
    const Matrix q_sqrt = linalg::psd_sqrt(model.Q);
    const Matrix r_sqrt = linalg::psd_sqrt(model.R);
    Rng rng(seed);
    SimulationResult out{Matrix(steps, model.outputs()), Matrix(model.n(), steps)};
    Vector x = x0;
    for (Eigen::Index t = 0; t < steps; ++t) {
        Vector w;
        Vector v;
        if (noise) {
            w = q_sqrt * rng.normal_vector(model.n());
            v = r_sqrt * rng.normal_vector(model.outputs());
        }
        Vector y = model.C * x;
        Vector next = model.A * x;
        if (inputs != nullptr && model.m() > 0) {
            const Vector u = inputs->row(t).transpose();
            y += model.D_mat * u;
            next += model.B * u;
        }
        if (noise) {
            y += v;
            next += w;
        }
        out.states.col(t) = x;
        out.outputs.row(t) = y.transpose();
        x = std::move(next);
    }
    return out;
}

inline TimeSeries simulate(const StateSpaceModel& model, const Vector& x0, const std::optional<Matrix>& inputs,
                           Eigen::Index steps, bool noise = false, std::uint64_t seed = 0) {
    return TimeSeries(simulate_states(model, x0, inputs ? &*inputs : nullptr, steps, noise, seed).outputs);
}

inline Identification identify_with_inputs(const TimeSeries& y, const TimeSeries& u, Eigen::Index window_length,
                                           const RankChoice& choice = RankChoice::automatic()) {
    if (y.length() != u.length()) {
        throw InvalidArgument("outputs and inputs must have the same length");
    }
    if (u.values().cwiseAbs().maxCoeff() == 0.0) {
        auto out = identify_output_only(y, window_length, choice);
        out.notice = "inputs are identically zero; used output-only identification";
        return out;
    }
    const Eigen::Index d = y.channels();
    const Eigen::Index m = u.channels();
    const Eigen::Index len = y.length();
    if (window_length < 2) {
        throw InvalidArgument("input-output identification needs L >= 2");
    }

    const BlockHankel hy = block_hankel(y, window_length);
    const BlockHankel hu = block_hankel(u, window_length);
    Identification out;
    out.decomposition = decompose(project_out_inputs(hy.data, hu.data), choice);
    out.decomposition.window_length = window_length;
    const Eigen::Index n = out.decomposition.rank;
    if (n < 1) {
        throw NumericalError("projected output Hankel matrix has no singular value above the threshold");
    }
    if ((window_length - 1) * d < n) {
        throw InvalidArgument("window length too short for state dimension " + std::to_string(n));
    }

    // Shift structure of the observability subspace.
    const Matrix obs = out.decomposition.U.leftCols(n);
    const Matrix c_hat = obs.topRows(d);
    const auto upper_pinv = linalg::pinv(obs.topRows((window_length - 1) * d));
    const Matrix a_hat = upper_pinv.value * obs.bottomRows((window_length - 1) * d);

    // y_t = C A^t x0 + C G_t vec(B) + (u_t^T (x) I_D) vec(D), with G_{t+1} = A G_t + (u_t^T (x) I_n).
    const Eigen::Index unknowns = n + n * m + d * m;
    Matrix regressors(len * d, unknowns);
    Matrix power = Matrix::Identity(n, n);
    Matrix g = Matrix::Zero(n, n * m);
    for (Eigen::Index t = 0; t < len; ++t) {
        const Vector ut = u.at(t);
        auto block = regressors.middleRows(t * d, d);
        block.leftCols(n) = c_hat * power;
        block.middleCols(n, n * m) = c_hat * g;
        for (Eigen::Index j = 0; j < m; ++j) {
            block.middleCols(n + n * m + j * d, d) = ut(j) * Matrix::Identity(d, d);
        }
        Matrix next_g = a_hat * g;
        for (Eigen::Index j = 0; j < m; ++j) {
            next_g.middleCols(j * n, n) += ut(j) * Matrix::Identity(n, n);
        }
        g = std::move(next_g);
        power = a_hat * power;
    }
    const Vector targets = y.values().transpose().reshaped();
    const Vector theta = regressors.colPivHouseholderQr().solve(targets);
    const Vector x0 = theta.head(n);
    const Matrix b_hat = theta.segment(n, n * m).reshaped(n, m);

    // State sequence from the deterministic part, then Theta = [A B; C D] by least squares.
    Matrix states(n, len);
    states.col(0) = x0;
    for (Eigen::Index t = 0; t + 1 < len; ++t) {
        states.col(t + 1) = a_hat * states.col(t) + b_hat * u.at(t);
    }
    const Matrix inputs = u.values().transpose();
    Matrix regress_state(n + m, len);
    regress_state << states, inputs;
    const auto transition_pinv = linalg::pinv(regress_state.leftCols(len - 1));
    const auto output_pinv = linalg::pinv(regress_state);
    const Matrix ab = states.rightCols(len - 1) * transition_pinv.value;
    const Matrix cd = y.values().transpose() * output_pinv.value;

    StateSpaceModel model;
    model.A = ab.leftCols(n);
    model.B = ab.rightCols(m);
    model.C = cd.leftCols(n);
    model.D_mat = cd.rightCols(m);
    const Matrix w = states.rightCols(len - 1) - ab * regress_state.leftCols(len - 1);
    const Matrix v = y.values().transpose() - cd * regress_state;
    auto [q, r] = estimate_QR(w, v);
    model.Q = std::move(q);
    model.R = std::move(r);
    model.validate();

    out.model = std::move(model);
    out.states = {states.leftCols(hy.windows()), window_length};
    out.rank_deficient = upper_pinv.rank_deficient || transition_pinv.rank_deficient || output_pinv.rank_deficient;
    return out;
}

} // namespace tcsid
