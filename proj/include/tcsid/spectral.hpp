#pragma once

/**
 * @file spectral.hpp
 * @brief Truncated SVD of block-Hankel / trajectory matrices and the embeddings built from it.
 *
 * Both routes to a low-dimensional picture of the windows live here:
 *  - pca_embed:     SVD of the trajectory matrix Z, coordinates Z * V_r (TimeCluster-style PCA);
 *  - hankel_states: SVD of H = Z^T, states Sigma_r * V_r^T (subspace identification).
 * With the shared sign convention the two agree to rounding error.
 */

#include "tcsid/error.hpp"
#include "tcsid/linalg.hpp"
#include "tcsid/state_space.hpp"
#include "tcsid/trajectory.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tcsid {

/// Relative singular-value threshold used when neither a rank nor a threshold is requested.
inline constexpr double kDefaultEpsilon = 1e-2;

struct RankChoice {
    std::optional<Eigen::Index> rank;
    std::optional<double> epsilon;

    static RankChoice fixed(Eigen::Index r) { return {r, std::nullopt}; }
    static RankChoice threshold(double eps) { return {std::nullopt, eps}; }
    static RankChoice automatic() { return {}; }
};

struct SpectralDecomposition {
    Matrix U;                       ///< rows x k, orthonormal columns
    Vector singular_values;         ///< length k, non-increasing
    Matrix V;                       ///< cols x k, orthonormal columns
    Eigen::Index rank = 0;          ///< selected rank r <= k
    std::optional<double> epsilon;  ///< threshold used to select r, if any
    Eigen::Index window_length = 0;

    [[nodiscard]] Eigen::Index full_rank() const noexcept { return singular_values.size(); }

    /// Rank-r truncation U_r Sigma_r V_r^T.
    [[nodiscard]] Matrix reconstruct(Eigen::Index r) const {
        return U.leftCols(r) * singular_values.head(r).asDiagonal() * V.leftCols(r).transpose();
    }
};

enum class EmbeddingSource { timecluster_pca, hankel_svd, smoothed, true_states };

inline std::string_view to_string(EmbeddingSource s) {
    switch (s) {
    case EmbeddingSource::timecluster_pca: return "timecluster_pca";
    case EmbeddingSource::hankel_svd: return "hankel_svd";
    case EmbeddingSource::smoothed: return "smoothed";
    case EmbeddingSource::true_states: return "true_states";
    }
    return "unknown";
}

inline EmbeddingSource embedding_source_from_string(std::string_view s) {
    for (auto e : {EmbeddingSource::timecluster_pca, EmbeddingSource::hankel_svd, EmbeddingSource::smoothed,
                   EmbeddingSource::true_states}) {
        if (to_string(e) == s) {
            return e;
        }
    }
    throw InvalidArgument("unknown embedding source '" + std::string(s) + "'");
}

/// Window coordinates; row w belongs to the window starting at sample w * stride.
struct Embedding {
    Matrix coords;  ///< W x r
    EmbeddingSource source = EmbeddingSource::timecluster_pca;
    Eigen::Index window_length = 0;
    Eigen::Index stride = 1;

    [[nodiscard]] Eigen::Index dims() const noexcept { return coords.cols(); }
    [[nodiscard]] Eigen::Index windows() const noexcept { return coords.rows(); }
};

struct AlignmentReport {
    Matrix rotation;     ///< r x r orthogonal (reflections allowed)
    Vector translation;  ///< length r
    double residual = 0.0;
};

/// Number of singular values whose ratio to the largest exceeds epsilon.
inline Eigen::Index select_rank(const Eigen::Ref<const Vector>& singular_values, double epsilon) {
    detail::require(epsilon > 0.0 && epsilon < 1.0, "rank threshold epsilon must lie in (0, 1)");
    if (singular_values.size() == 0 || !(singular_values(0) > 0.0)) {
        return 0;
    }
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
        if (singular_values(i) / singular_values(0) > epsilon) {
            ++count;
        }
    }
    return count;
}

namespace detail {

/// Thin SVD with each left singular vector flipped so its largest-magnitude entry is positive.
inline void signed_svd(const Matrix& m, Matrix& u, Vector& s, Matrix& v) {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    s = svd.singularValues();
    v = svd.matrixV();
    for (Eigen::Index i = 0; i < u.cols(); ++i) {
        if (u(linalg::argmax_abs(u.col(i)), i) < 0.0) {
            u.col(i) *= -1.0;
            v.col(i) *= -1.0;
        }
    }
}

} // namespace detail

inline SpectralDecomposition decompose(const Matrix& m, const RankChoice& choice = RankChoice::automatic()) {
    detail::require(m.size() > 0, "cannot decompose an empty matrix");
    detail::require(!(choice.rank && choice.epsilon), "give either a rank or a threshold, not both");
    SpectralDecomposition dec;
    detail::signed_svd(m, dec.U, dec.singular_values, dec.V);
    if (choice.rank) {
        if (*choice.rank < 0 || *choice.rank > dec.full_rank()) {
            throw InvalidArgument("rank " + std::to_string(*choice.rank) + " exceeds min(rows, cols) = " +
                                  std::to_string(dec.full_rank()));
        }
        dec.rank = *choice.rank;
    } else {
        dec.epsilon = choice.epsilon.value_or(kDefaultEpsilon);
        dec.rank = select_rank(dec.singular_values, *dec.epsilon);
    }
    return dec;
}

inline SpectralDecomposition decompose(const BlockHankel& h, const RankChoice& choice = RankChoice::automatic()) {
    auto dec = decompose(h.data, choice);
    dec.window_length = h.window_length;
    return dec;
}

/// State estimates Sigma_r V_r^T, one column per window.
inline StateTrajectory hankel_states(const SpectralDecomposition& dec) {
    detail::require(dec.rank >= 1, "hankel_states needs a selected rank of at least 1");
    const auto r = dec.rank;
    return {dec.singular_values.head(r).asDiagonal() * dec.V.leftCols(r).transpose(), dec.window_length};
}

inline Embedding hankel_embed(const SpectralDecomposition& dec) {
    return {hankel_states(dec).states.transpose(), EmbeddingSource::hankel_svd, dec.window_length, 1};
}

/**
 * TimeCluster PCA: project the rows of Z on its top-r right singular vectors.
 * Uncentered by default; `center` subtracts the column means first.
 */
inline Embedding pca_embed(const TrajectoryMatrix& z, Eigen::Index r, bool center = false) {
    const Eigen::Index max_rank = std::min(z.data.rows(), z.data.cols());
    if (r < 1 || r > max_rank) {
        throw InvalidArgument("PCA rank " + std::to_string(r) + " must lie in [1, " + std::to_string(max_rank) + "]");
    }
    Matrix data = z.data;
    if (center) {
        data.rowwise() -= data.colwise().mean();
    }
    Eigen::BDCSVD<Matrix> svd(data, Eigen::ComputeThinV);
    Matrix axes = svd.matrixV().leftCols(r);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (axes(linalg::argmax_abs(axes.col(i)), i) < 0.0) {
            axes.col(i) *= -1.0;
        }
    }
    return {data * axes, EmbeddingSource::timecluster_pca, z.window_length, z.stride};
}

/**
 * Orthogonal Procrustes with translation, no scaling: find orthogonal R and t
 * minimising ||A - (B R + 1 t^T)||_F. The residual is relative to the spread
 * of A about its mean (absolute when A is a single point).
 */
inline AlignmentReport align_embeddings(const Embedding& a, const Embedding& b) {
    if (a.coords.rows() != b.coords.rows() || a.coords.cols() != b.coords.cols()) {
        throw InvalidArgument("cannot align embeddings of shape " + std::to_string(a.coords.rows()) + "x" +
                              std::to_string(a.coords.cols()) + " and " + std::to_string(b.coords.rows()) + "x" +
                              std::to_string(b.coords.cols()));
    }
    detail::require(a.coords.size() > 0, "cannot align empty embeddings");
    const Eigen::RowVectorXd mean_a = a.coords.colwise().mean();
    const Eigen::RowVectorXd mean_b = b.coords.colwise().mean();
    const Matrix ca = a.coords.rowwise() - mean_a;
    const Matrix cb = b.coords.rowwise() - mean_b;

    Eigen::JacobiSVD<Matrix> svd(cb.transpose() * ca, Eigen::ComputeFullU | Eigen::ComputeFullV);
    AlignmentReport report;
    report.rotation = svd.matrixU() * svd.matrixV().transpose();
    report.translation = (mean_a - mean_b * report.rotation).transpose();

    const Matrix fitted = (b.coords * report.rotation).rowwise() + report.translation.transpose();
    const double err = (a.coords - fitted).norm();
    const double spread = ca.norm();
    report.residual = spread > 0.0 ? err / spread : err;
    return report;
}

struct SplitComponents {
    std::vector<Embedding> pairs;
    bool dropped_last = false;  ///< odd rank: the final coordinate had no partner
};

/// Consecutive coordinate pairs (0,1), (2,3), ... as separate 2-D embeddings.
inline SplitComponents split_components(const Embedding& e) {
    if (e.dims() < 2) {
        throw InvalidArgument("splitting needs at least 2 embedding dimensions");
    }
    SplitComponents out;
    for (Eigen::Index k = 0; k + 1 < e.dims(); k += 2) {
        out.pairs.push_back({e.coords.middleCols(k, 2), e.source, e.window_length, e.stride});
    }
    out.dropped_last = e.dims() % 2 == 1;
    return out;
}

} // namespace tcsid
