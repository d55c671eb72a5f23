#pragma once

#include "tcsid/error.hpp"
#include "tcsid/linalg.hpp"

#include <string>

namespace tcsid {

/**
 * Discrete LTI state-space model
 *
 *     x_{t+1} = A x_t + B u_t + w_t,   w_t ~ N(0, Q)
 *     y_t     = C x_t + D u_t + v_t,   v_t ~ N(0, R)
 *
 * Output-only models carry m = 0 and empty B / D_mat.
 */
struct StateSpaceModel {
    Matrix A;      ///< n x n
    Matrix B;      ///< n x m
    Matrix C;      ///< D x n
    Matrix D_mat;  ///< D x m
    Matrix Q;      ///< n x n
    Matrix R;      ///< D x D

    [[nodiscard]] Eigen::Index n() const noexcept { return A.rows(); }
    [[nodiscard]] Eigen::Index m() const noexcept { return B.cols(); }
    [[nodiscard]] Eigen::Index outputs() const noexcept { return C.rows(); }

    static StateSpaceModel output_only(Matrix a, Matrix c, Matrix q, Matrix r) {
        StateSpaceModel model;
        const auto n = a.rows();
        const auto d = c.rows();
        model.A = std::move(a);
        model.B = Matrix::Zero(n, 0);
        model.C = std::move(c);
        model.D_mat = Matrix::Zero(d, 0);
        model.Q = std::move(q);
        model.R = std::move(r);
        model.validate();
        return model;
    }

    /// Throws InvalidArgument when dimensions disagree or a noise covariance is not symmetric PSD.
    void validate() const {
        const auto n = A.rows();
        const auto d = C.rows();
        const auto m = B.cols();
        detail::require(A.cols() == n, "A must be square");
        detail::require(B.rows() == n, "B must have n rows");
        detail::require(C.cols() == n, "C must have n columns");
        detail::require(D_mat.rows() == d && D_mat.cols() == m, "D must be outputs x inputs");
        detail::require(Q.rows() == n && Q.cols() == n, "Q must be n x n");
        detail::require(R.rows() == d && R.cols() == d, "R must be outputs x outputs");
        for (const Matrix* cov : {&Q, &R}) {
            if (cov->size() == 0) {
                continue;
            }
            const double scale = std::max(1.0, cov->cwiseAbs().maxCoeff());
            detail::require((*cov - cov->transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale,
                            "noise covariance must be symmetric");
            detail::require(linalg::min_eigenvalue(*cov) >= -1e-10 * scale,
                            "noise covariance must be positive semidefinite");
        }
    }
};

/// Estimated hidden-state sequence, one column per time index.
struct StateTrajectory {
    Matrix states;                  ///< n x W
    Eigen::Index window_length = 0; ///< window length of the Hankel source, 0 when not Hankel-derived
};

/// Extended observability matrix [C; CA; ...; CA^{L-1}].
inline Matrix observability_matrix(const Matrix& a, const Matrix& c, Eigen::Index window_length) {
    detail::require(window_length >= 1, "observability matrix needs L >= 1");
    detail::require(a.rows() == a.cols(), "A must be square");
    detail::require(c.cols() == a.rows(), "C must have as many columns as A has rows");
    const auto d = c.rows();
    Matrix obs(window_length * d, a.rows());
    Matrix block = c;
    for (Eigen::Index i = 0; i < window_length; ++i) {
        obs.middleRows(i * d, d) = block;
        block = block * a;
    }
    return obs;
}

} // namespace tcsid
