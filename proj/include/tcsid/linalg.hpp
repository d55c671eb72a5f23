#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace tcsid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Relative singular-value cutoff used by every pseudoinverse in the library.
inline constexpr double kPinvCutoff = 1e-12;

struct Pseudoinverse {
    Matrix value;
    Eigen::Index rank = 0;
    bool rank_deficient = false;
};

/**
 * Moore-Penrose pseudoinverse through an SVD. Singular values at or below
 * cutoff * sigma_max are treated as zero, so rank handling does not depend on
 * the backend's internal threshold.
 */
inline Pseudoinverse pinv(const Matrix& a, double cutoff = kPinvCutoff) {
    Pseudoinverse out;
    out.value = Matrix::Zero(a.cols(), a.rows());
    if (a.size() == 0) {
        out.rank_deficient = a.rows() != a.cols() || a.rows() != 0;
        return out;
    }
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    const double tol = cutoff * smax;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > tol && s(i) > 0.0) {
            out.value.noalias() += svd.matrixV().col(i) * (1.0 / s(i)) * svd.matrixU().col(i).transpose();
            ++out.rank;
        }
    }
    out.rank_deficient = out.rank < std::min(a.rows(), a.cols());
    return out;
}

inline Matrix symmetrize(const Matrix& m) {
    return 0.5 * (m + m.transpose());
}

inline double min_eigenvalue(const Matrix& symmetric) {
    if (symmetric.size() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(symmetric), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Factor S with S * S^T == cov for a symmetric PSD covariance (negative eigenvalues clipped).
inline Matrix psd_sqrt(const Matrix& cov) {
    if (cov.size() == 0) {
        return cov;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
    Vector roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * roots.asDiagonal();
}

/// Index of the entry with the largest magnitude; the first one wins ties.
inline Eigen::Index argmax_abs(const Eigen::Ref<const Vector>& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (std::abs(v(i)) > std::abs(v(best))) {
            best = i;
        }
    }
    return best;
}

inline Matrix matrix_power(const Matrix& a, int k) {
    Matrix result = Matrix::Identity(a.rows(), a.cols());
    for (int i = 0; i < k; ++i) {
        result = a * result;
    }
    return result;
}

} // namespace linalg
} // namespace tcsid
