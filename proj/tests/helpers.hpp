#pragma once

#include "tcsid/tcsid.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testing_support {

using tcsid::Matrix;
using tcsid::Vector;

/// The two-channel, four-step series used as the running example.
inline tcsid::TimeSeries example_series() {
    Matrix y(4, 2);
    y << 1, 10, 2, 20, 3, 30, 4, 40;
    return tcsid::TimeSeries(y);
}

inline const char* example_csv() { return "1,10\n2,20\n3,30\n4,40\n"; }

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    tcsid::Rng rng(seed);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = rng.normal();
        }
    }
    return m;
}

inline tcsid::StateSpaceModel rotation_model(double theta, double q = 0.0, double r = 0.0) {
    Matrix a(2, 2);
    a << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    Matrix c(1, 2);
    c << 1.0, 0.0;
    return tcsid::StateSpaceModel::output_only(a, c, q * Matrix::Identity(2, 2), r * Matrix::Identity(1, 1));
}

/// Mean squared error of `estimate` (k x T) after the best affine map onto `truth` (n x T).
inline double aligned_mse(const Matrix& estimate, const Matrix& truth) {
    Matrix design(estimate.cols(), estimate.rows() + 1);
    design << estimate.transpose(), Matrix::Ones(estimate.cols(), 1);
    const Matrix coef = design.colPivHouseholderQr().solve(truth.transpose());
    return (design * coef - truth.transpose()).squaredNorm() / static_cast<double>(truth.size());
}

inline double relative_rmse(const Matrix& estimate, const Matrix& truth) {
    return (estimate - truth).norm() / truth.norm();
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("tcsid_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing_support
