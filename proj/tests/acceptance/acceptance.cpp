// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "tcsid/tcsid.hpp"

#include <chrono>
#include <complex>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace tcsid;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

/// MSE of `estimate` (k x N) after the best affine map onto `truth` (n x N).
double aligned_mse(const Matrix& estimate, const Matrix& truth) {
    Matrix design(estimate.cols(), estimate.rows() + 1);
    design << estimate.transpose(), Matrix::Ones(estimate.cols(), 1);
    const Matrix coef = design.colPivHouseholderQr().solve(truth.transpose());
    return (design * coef - truth.transpose()).squaredNorm() / static_cast<double>(truth.size());
}

std::vector<double> eigen_angles(const Matrix& a) {
    Eigen::EigenSolver<Matrix> es(a, false);
    std::vector<double> out;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        out.push_back(std::abs(std::arg(es.eigenvalues()(i))));
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------

Outcome equivalence() {
    const auto start = Clock::now();
    const auto ar = gen_ar2(Ar2Spec{}, 2024);  // T = 2000
    const auto z = trajectory_matrix(ar.series, 2);
    const auto dec = decompose(block_hankel(ar.series, 2), RankChoice::fixed(2));
    const Embedding subspace = hankel_embed(dec);
    const double plain = align_embeddings(pca_embed(z, 2, false), subspace).residual;
    const double centered = align_embeddings(pca_embed(z, 2, true), subspace).residual;
    const double elapsed = seconds_since(start);
    return {plain < 1e-8 && centered < 1e-8 && elapsed < 5.0,
            "residual uncentered=" + fmt(plain) + " centered=" + fmt(centered) + " in " + fmt(elapsed) + " s"};
}

Outcome goldens() {
    Matrix y(4, 2);
    y << 1, 10, 2, 20, 3, 30, 4, 40;
    const TimeSeries ts(y);
    Matrix z(3, 4);
    z << 1, 10, 2, 20, 2, 20, 3, 30, 3, 30, 4, 40;
    Matrix h(4, 3);
    h << 1, 2, 3, 10, 20, 30, 2, 3, 4, 20, 30, 40;
    const bool z_ok = trajectory_matrix(ts, 2).data == z;
    const bool h_ok = block_hankel(ts, 2).data == h;
    const bool t_ok = hankel_from_trajectory(trajectory_matrix(ts, 2)).data == h;
    return {z_ok && h_ok && t_ok, std::string("Z ") + (z_ok ? "exact" : "MISMATCH") + ", H " + (h_ok ? "exact" : "MISMATCH") +
                                      ", Z^T " + (t_ok ? "exact" : "MISMATCH")};
}

Outcome rank_law() {
    struct Case {
        std::string name;
        TimeSeries series;
        Eigen::Index n;
    };
    Ar2Spec ar;
    ar.noise_sd = 0.0;
    ar.length = 400;
    PeriodicSsmSpec rot;
    DoublePeriodicSpec dp;
    DoublePeriodicSpec dp2;
    dp2.f1 = 1.0 / 7.0;
    dp2.f2 = 1.0 / 11.0;
    dp2.phase1 = 0.4;
    dp2.length = 400;
    std::vector<Case> cases{{"ar2", gen_ar2(ar, 0).series, 2},
                            {"rotation", gen_periodic_ssm(rot, 0).series, 2},
                            {"two-tone 1/3,1/5", gen_double_periodic(dp, 0).series, 4},
                            {"two-tone 1/7,1/11", gen_double_periodic(dp2, 0).series, 4}};
    double worst = 0.0;
    bool ok = true;
    std::string where;
    for (const auto& c : cases) {
        for (Eigen::Index l = c.n; l <= 4 * c.n; ++l) {
            const auto dec = decompose(block_hankel(c.series, l), RankChoice::fixed(1));
            const Vector& s = dec.singular_values;
            const double ratio = s.size() > c.n ? s(c.n) / s(0) : 0.0;
            const bool has_n = s(c.n - 1) / s(0) > 1e-8;
            if (ratio > worst) {
                worst = ratio;
                where = c.name + " L=" + std::to_string(l);
            }
            ok = ok && ratio < 1e-8 && has_n;
        }
    }
    return {ok, "worst sigma_{n+1}/sigma_1=" + fmt(worst) + (where.empty() ? "" : " (" + where + ")")};
}

Outcome identification() {
    PeriodicSsmSpec spec;  // theta = 2 pi / 30, noise-free
    const auto out = gen_periodic_ssm(spec, 0);
    double worst_angle = 0.0;
    double worst_rmse = 0.0;
    bool ok = true;
    for (Eigen::Index l : {3, 5, 10, 20}) {
        const auto id = identify_output_only(out.series, l);
        ok = ok && id.model.n() == 2;
        for (double a : eigen_angles(id.model.A)) {
            worst_angle = std::max(worst_angle, std::abs(a - spec.theta));
        }
        const Matrix yhat = simulate_states(id.model, id.states.states.col(0), nullptr, spec.length).outputs;
        worst_rmse = std::max(worst_rmse, (yhat - out.series.values()).norm() / out.series.values().norm());
    }
    ok = ok && worst_angle < 1e-6 && worst_rmse < 1e-6;
    return {ok, "max angle error=" + fmt(worst_angle) + " rad, simulate-identify relative RMSE=" + fmt(worst_rmse)};
}

Outcome forecasting() {
    const auto start = Clock::now();
    // Periodic proxy with a linear trend, detrended before evaluation.
    PeriodicSsmSpec spec;
    spec.q_sd = 0.02;
    spec.r_sd = 0.2;
    spec.length = 3000;
    const auto out = gen_periodic_ssm(spec, 17);
    Matrix trended = out.series.values();
    for (Eigen::Index t = 0; t < trended.rows(); ++t) {
        trended(t, 0) += 0.002 * static_cast<double>(t) + 3.0;
    }
    const TimeSeries proxy = detrend(TimeSeries(trended));
    const auto noisy = online_forecast_eval(OnlineConfig{8, RankChoice::fixed(2), 1}, proxy, 1500);
    const double noisy_seconds = seconds_since(start);

    Matrix sine(3000, 1);
    for (Eigen::Index t = 0; t < 3000; ++t) {
        sine(t, 0) = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 37.0 + 0.5) +
                     0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / 11.0);
    }
    const auto clean_start = Clock::now();
    const auto clean = online_forecast_eval(OnlineConfig{12, RankChoice::automatic(), 1}, TimeSeries(sine), 1500);
    const double clean_seconds = seconds_since(clean_start);

    const bool ok = noisy.rmse < noisy.persistence_rmse && clean.rmse < 1e-6 && noisy_seconds < 30.0 && clean_seconds < 30.0;
    return {ok, "proxy RMSE=" + fmt(noisy.rmse) + " vs persistence " + fmt(noisy.persistence_rmse) + " (" +
                    fmt(noisy_seconds) + " s, T=3000); sinusoids RMSE=" + fmt(clean.rmse) + " (" + fmt(clean_seconds) + " s)"};
}

Outcome smoothing() {
    const Eigen::Index l = 8;
    double smoothed = 0.0, filtered = 0.0, raw = 0.0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        PeriodicSsmSpec spec;
        spec.q_sd = 0.05;
        spec.r_sd = 0.5;
        spec.length = 500;
        const auto out = gen_periodic_ssm(spec, static_cast<std::uint64_t>(seed));
        const auto id = identify_output_only(out.series, l, RankChoice::fixed(2));
        const auto f = kalman_filter(id.model, out.series);
        const auto s = rts_smooth(id.model, f, l);
        const Eigen::Index w = id.states.states.cols();
        const Matrix truth = out.true_states->leftCols(w);
        raw += aligned_mse(id.states.states, truth) / seeds;
        filtered += aligned_mse(filtered_states(f).leftCols(w), truth) / seeds;
        smoothed += aligned_mse(s.trajectory.states.leftCols(w), truth) / seeds;
    }
    return {smoothed <= filtered && filtered <= raw,
            "mean MSE smoothed=" + fmt(smoothed) + " <= filtered=" + fmt(filtered) + " <= raw Hankel=" + fmt(raw)};
}

/// Share of embedding variance left within the input regimes (0 = regimes collapse to points).
double within_regime_share(const Matrix& coords, const Matrix& inputs) {
    std::map<double, std::vector<Eigen::Index>> groups;
    for (Eigen::Index w = 0; w < coords.rows(); ++w) {
        groups[inputs(w, 0)].push_back(w);
    }
    const Eigen::RowVectorXd mean = coords.colwise().mean();
    const double total = (coords.rowwise() - mean).squaredNorm();
    double within = 0.0;
    for (const auto& [level, rows] : groups) {
        Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(coords.cols());
        for (auto r : rows) {
            m += coords.row(r);
        }
        m /= static_cast<double>(rows.size());
        for (auto r : rows) {
            within += (coords.row(r) - m).squaredNorm();
        }
    }
    return within / total;
}

Outcome exogenous() {
    const Eigen::Index l = 6;
    ExogenousSpec clean_spec;  // T = 2000, alternating steps
    const auto clean = gen_exogenous_stepped(clean_spec, 0);
    const Matrix hy = block_hankel(clean.series, l).data;
    const Matrix hu = block_hankel(*clean.inputs, l).data;
    const double ortho = (project_out_inputs(hy, hu) * hu.transpose()).cwiseAbs().maxCoeff();

    const auto id = identify_with_inputs(clean.series, *clean.inputs, l);
    const Matrix u = clean.inputs->values();
    const Matrix yhat = simulate_states(id.model, id.states.states.col(0), &u, clean_spec.length).outputs;
    const double rmse = (yhat - clean.series.values()).norm() / clean.series.values().norm();

    ExogenousSpec noisy_spec;
    noisy_spec.noise_sd = 0.1;
    const auto noisy = gen_exogenous_stepped(noisy_spec, 7);
    const auto nid = identify_with_inputs(noisy.series, *noisy.inputs, l, RankChoice::fixed(2));
    const Matrix window_inputs = noisy.inputs->values().topRows(nid.states.states.cols());
    const double share_subspace = within_regime_share(nid.states.states.transpose(), window_inputs);
    const double share_pca =
        within_regime_share(pca_embed(trajectory_matrix(noisy.series, l), 2).coords, window_inputs);

    const bool ok = ortho < 1e-8 && id.model.n() == 2 && rmse < 1e-6 && share_subspace < share_pca;
    return {ok, "orthogonality=" + fmt(ortho) + ", n=" + std::to_string(id.model.n()) + ", output RMSE=" + fmt(rmse) +
                    ", within-regime share subspace=" + fmt(share_subspace) + " < raw PCA=" + fmt(share_pca)};
}

Outcome double_periodicity() {
    DoublePeriodicSpec spec;  // f = 1/3, 1/5
    // L and the window count are both multiples of 15, so the two tones are orthogonal on both sides of H.
    spec.length = 299;
    const auto out = gen_double_periodic(spec, 0);
    const Eigen::Index l = 15;
    const auto dec = decompose(block_hankel(out.series, l));
    if (dec.rank != 4) {
        return {false, "selected rank " + std::to_string(dec.rank)};
    }
    const auto split = split_components(hankel_embed(dec));
    bool ok = true;
    std::ostringstream detail;
    detail << "rank 4";
    for (std::size_t k = 0; k < split.pairs.size(); ++k) {
        const Matrix& c = split.pairs[k].coords;
        double diameter = 0.0;
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            for (Eigen::Index j = i + 1; j < c.rows(); ++j) {
                diameter = std::max(diameter, (c.row(i) - c.row(j)).norm());
            }
        }
        double best = 1e300;
        Eigen::Index best_period = 0;
        for (Eigen::Index p : {3, 5}) {
            double worst = 0.0;
            for (Eigen::Index w = 0; w + p < c.rows(); ++w) {
                worst = std::max(worst, (c.row(w) - c.row(w + p)).norm());
            }
            if (worst < best) {
                best = worst;
                best_period = p;
            }
        }
        const double rel = best / diameter;
        ok = ok && rel < 0.05;
        detail << "; pair " << k + 1 << " recurs at period " << best_period << " (distance " << fmt(100.0 * rel)
               << "% of diameter)";
    }
    return {ok, detail.str()};
}

Outcome kalman_invariants() {
    double min_eig = 1e300;
    bool causal = true;
    std::size_t steps = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        PeriodicSsmSpec spec;
        spec.q_sd = 0.05 * static_cast<double>(seed);
        spec.r_sd = 0.3;
        spec.length = 400;
        const auto out = gen_periodic_ssm(spec, seed);
        for (Eigen::Index l : {2, 6}) {
            const auto id = identify_output_only(out.series, l);
            const auto full = kalman_filter(id.model, out.series);
            for (const auto& s : full) {
                min_eig = std::min({min_eig, linalg::min_eigenvalue(s.P_pred), linalg::min_eigenvalue(s.P_filt)});
                ++steps;
            }
            for (Eigen::Index t : {1, 37, 200, 399}) {
                const auto prefix = kalman_filter(id.model, Matrix(out.series.values().topRows(t)));
                for (Eigen::Index k = 0; k < t; ++k) {
                    const auto& a = prefix[static_cast<std::size_t>(k)];
                    const auto& b = full[static_cast<std::size_t>(k)];
                    causal = causal && a.x_filt == b.x_filt && a.P_filt == b.P_filt && a.x_pred == b.x_pred &&
                             a.P_pred == b.P_pred;
                }
            }
        }
    }
    // A noiseless model (R = 0) exercises the pseudoinverse path.
    const auto model = StateSpaceModel::output_only((Matrix(2, 2) << 0.9, -0.3, 0.3, 0.9).finished(),
                                                    (Matrix(1, 2) << 1.0, 0.0).finished(), Matrix::Zero(2, 2),
                                                    Matrix::Zero(1, 1));
    const TimeSeries y = simulate(model, Vector::Ones(2), std::nullopt, 50);
    for (const auto& s : kalman_filter(model, y)) {
        min_eig = std::min({min_eig, linalg::min_eigenvalue(s.P_pred), linalg::min_eigenvalue(s.P_filt)});
        ++steps;
    }
    return {min_eig >= -1e-10 && causal, "min covariance eigenvalue=" + fmt(min_eig) + " over " + std::to_string(steps) +
                                             " steps; prefix reruns " + (causal ? "bitwise identical" : "DIFFER")};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"equivalence", equivalence},
        {"worked-example goldens", goldens},
        {"rank law", rank_law},
        {"identification consistency", identification},
        {"forecasting", forecasting},
        {"smoothing", smoothing},
        {"exogenous", exogenous},
        {"double periodicity", double_periodicity},
        {"kalman invariants", kalman_invariants},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
