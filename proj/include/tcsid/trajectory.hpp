#pragma once

/**
 * @file trajectory.hpp
 * @brief Sliding-window trajectory matrix Z and block-Hankel matrix H.
 *
 * For a T x D series and window length L the trajectory matrix has one row
 * per window, each row being the window flattened time-major with channels
 * inner:  [y(w,0) .. y(w,D-1), y(w+1,0) .. y(w+L-1,D-1)].  The block-Hankel
 * matrix holds the same windows as columns, so with stride 1 H == Z^T
 * exactly. All indices are 0-based.
 */

#include "tcsid/error.hpp"
#include "tcsid/linalg.hpp"
#include "tcsid/timeseries.hpp"

#include <string>

namespace tcsid {

struct TrajectoryMatrix {
    Matrix data;                ///< W x (L*D)
    Eigen::Index window_length = 0;
    Eigen::Index stride = 1;
    Eigen::Index channels = 0;

    [[nodiscard]] Eigen::Index windows() const noexcept { return data.rows(); }
};

struct BlockHankel {
    Matrix data;                ///< (L*D) x (T-L+1)
    Eigen::Index window_length = 0;
    Eigen::Index channels = 0;

    [[nodiscard]] Eigen::Index windows() const noexcept { return data.cols(); }
};

/// Number of windows of length L taken every `stride` samples from T samples.
inline Eigen::Index window_count(Eigen::Index length, Eigen::Index window_length, Eigen::Index stride = 1) {
    return (length - window_length) / stride + 1;
}

inline TrajectoryMatrix trajectory_matrix(const TimeSeries& ts, Eigen::Index window_length, Eigen::Index stride = 1) {
    if (window_length < 1 || window_length > ts.length()) {
        throw InvalidArgument("window length L=" + std::to_string(window_length) + " must lie in [1, T=" +
                              std::to_string(ts.length()) + "]");
    }
    if (stride < 1) {
        throw InvalidArgument("stride must be at least 1");
    }
    const Eigen::Index d = ts.channels();
    const Eigen::Index w = window_count(ts.length(), window_length, stride);
    TrajectoryMatrix z{Matrix(w, window_length * d), window_length, stride, d};
    for (Eigen::Index row = 0; row < w; ++row) {
        for (Eigen::Index lag = 0; lag < window_length; ++lag) {
            z.data.row(row).segment(lag * d, d) = ts.values().row(row * stride + lag);
        }
    }
    return z;
}

inline BlockHankel block_hankel(const TimeSeries& ts, Eigen::Index window_length) {
    if (window_length < 1 || window_length > ts.length()) {
        throw InvalidArgument("window length L=" + std::to_string(window_length) + " must lie in [1, T=" +
                              std::to_string(ts.length()) + "]");
    }
    const Eigen::Index d = ts.channels();
    const Eigen::Index w = window_count(ts.length(), window_length);
    BlockHankel h{Matrix(window_length * d, w), window_length, d};
    for (Eigen::Index col = 0; col < w; ++col) {
        for (Eigen::Index lag = 0; lag < window_length; ++lag) {
            h.data.col(col).segment(lag * d, d) = ts.values().row(col + lag).transpose();
        }
    }
    return h;
}

/// Reinterpret a stride-1 trajectory matrix as a block-Hankel matrix (a pure transpose).
inline BlockHankel hankel_from_trajectory(const TrajectoryMatrix& z) {
    if (z.stride != 1) {
        throw InvalidArgument("a trajectory matrix with stride " + std::to_string(z.stride) +
                              " is not a Hankel matrix; identification requires stride 1");
    }
    return BlockHankel{z.data.transpose(), z.window_length, z.channels};
}

/// Window w covers samples [w*stride, w*stride + L - 1].
struct TimeRange {
    Eigen::Index first = 0;
    Eigen::Index last = 0;
};

inline TimeRange window_time_range(Eigen::Index window, Eigen::Index window_length, Eigen::Index stride = 1) {
    return {window * stride, window * stride + window_length - 1};
}

} // namespace tcsid
