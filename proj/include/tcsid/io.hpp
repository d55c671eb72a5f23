#pragma once

/**
 * @file io.hpp
 * @brief CSV and JSON encodings shared by the CLI and the HTTP service.
 *
 * Numbers are written in the shortest form that round-trips to the same
 * double. Matrices in JSON are arrays of rows unless stated otherwise.
 */

#include "tcsid/error.hpp"
#include "tcsid/kalman.hpp"
#include "tcsid/linalg.hpp"
#include "tcsid/spectral.hpp"
#include "tcsid/state_space.hpp"
#include "tcsid/timeseries.hpp"
#include "tcsid/trajectory.hpp"

#include <json.hpp>

#include <charconv>
#include <string>
#include <vector>

namespace tcsid::io {

using nlohmann::json;

inline std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

inline json matrix_to_json(const Matrix& m) {
    auto rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Inverse of matrix_to_json; `cols` fixes the width when there are no rows to infer it from.
inline Matrix matrix_from_json(const json& j, Eigen::Index cols = -1) {
    if (!j.is_array()) {
        throw ParseError("matrix must be a JSON array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) {
        return Matrix(0, std::max<Eigen::Index>(cols, 0));
    }
    const auto width = static_cast<Eigen::Index>(j.front().size());
    if (cols >= 0 && width != cols) {
        throw ParseError("matrix row has " + std::to_string(width) + " entries, expected " + std::to_string(cols));
    }
    Matrix m(rows, width);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != width) {
            throw ParseError("ragged matrix at row " + std::to_string(i));
        }
        for (Eigen::Index k = 0; k < width; ++k) {
            m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
        }
    }
    return m;
}

inline json vector_to_json(const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vector vector_from_json(const json& j) {
    if (!j.is_array()) {
        throw ParseError("expected a JSON array of numbers");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

// --- models -----------------------------------------------------------------

inline json model_to_json(const StateSpaceModel& m) {
    return {{"n", m.n()},
            {"m", m.m()},
            {"A", matrix_to_json(m.A)},
            {"B", matrix_to_json(m.B)},
            {"C", matrix_to_json(m.C)},
            {"D", matrix_to_json(m.D_mat)},
            {"Q", matrix_to_json(m.Q)},
            {"R", matrix_to_json(m.R)}};
}

inline StateSpaceModel model_from_json(const json& j) {
    try {
        const auto n = j.at("n").get<Eigen::Index>();
        const auto m = j.at("m").get<Eigen::Index>();
        StateSpaceModel model;
        model.A = matrix_from_json(j.at("A"), n);
        model.B = matrix_from_json(j.at("B"), m);
        if (model.B.rows() == 0) {
            model.B = Matrix::Zero(n, m);
        }
        model.C = matrix_from_json(j.at("C"), n);
        model.D_mat = matrix_from_json(j.at("D"), m);
        if (model.D_mat.rows() == 0) {
            model.D_mat = Matrix::Zero(model.C.rows(), m);
        }
        model.Q = matrix_from_json(j.at("Q"), n);
        model.R = matrix_from_json(j.at("R"));
        model.validate();
        return model;
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid model JSON: ") + e.what());
    }
}

// --- matrices and series as CSV ----------------------------------------------

inline std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& header = {}) {
    std::string out;
    if (!header.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            out += (i ? "," : "") + header[i];
        }
        out += '\n';
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            if (k) {
                out += ',';
            }
            out += format_number(m(i, k));
        }
        out += '\n';
    }
    return out;
}

inline std::string timeseries_to_csv(const TimeSeries& ts) {
    std::vector<std::string> header = ts.channel_names();
    if (header.empty()) {
        for (Eigen::Index d = 0; d < ts.channels(); ++d) {
            header.push_back("y" + std::to_string(d + 1));
        }
    }
    return matrix_to_csv(ts.values(), header);
}

/// Envelope {rows, cols, L, s, D, data} with `data` flattened row-major.
inline json trajectory_to_json(const TrajectoryMatrix& z) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(z.data.size()));
    for (Eigen::Index i = 0; i < z.data.rows(); ++i) {
        for (Eigen::Index k = 0; k < z.data.cols(); ++k) {
            data.push_back(z.data(i, k));
        }
    }
    return {{"rows", z.data.rows()}, {"cols", z.data.cols()}, {"L", z.window_length},
            {"s", z.stride},         {"D", z.channels},       {"data", data}};
}

inline json hankel_to_json(const BlockHankel& h) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(h.data.size()));
    for (Eigen::Index i = 0; i < h.data.rows(); ++i) {
        for (Eigen::Index k = 0; k < h.data.cols(); ++k) {
            data.push_back(h.data(i, k));
        }
    }
    return {{"rows", h.data.rows()}, {"cols", h.data.cols()}, {"L", h.window_length},
            {"s", 1},                {"D", h.channels},       {"data", data}};
}

// --- embeddings ----------------------------------------------------------------

inline std::vector<Eigen::Index> window_starts(const Embedding& e) {
    std::vector<Eigen::Index> starts(static_cast<std::size_t>(e.windows()));
    for (Eigen::Index w = 0; w < e.windows(); ++w) {
        starts[static_cast<std::size_t>(w)] = w * e.stride;
    }
    return starts;
}

inline json embedding_to_json(const Embedding& e) {
    return {{"L", e.window_length},
            {"r", e.dims()},
            {"s", e.stride},
            {"source", std::string(to_string(e.source))},
            {"window_starts", window_starts(e)},
            {"coords", matrix_to_json(e.coords)}};
}

inline Embedding embedding_from_json(const json& j) {
    try {
        Embedding e;
        e.window_length = j.at("L").get<Eigen::Index>();
        e.stride = j.value("s", Eigen::Index{1});
        e.source = embedding_source_from_string(j.at("source").get<std::string>());
        e.coords = matrix_from_json(j.at("coords"), j.at("r").get<Eigen::Index>());
        return e;
    } catch (const json::exception& ex) {
        throw ParseError(std::string("invalid embedding JSON: ") + ex.what());
    }
}

/// Columns: window_start, c1 .. cr.
inline std::string embedding_to_csv(const Embedding& e) {
    Matrix table(e.windows(), e.dims() + 1);
    const auto starts = window_starts(e);
    for (Eigen::Index w = 0; w < e.windows(); ++w) {
        table(w, 0) = static_cast<double>(starts[static_cast<std::size_t>(w)]);
    }
    table.rightCols(e.dims()) = e.coords;
    std::vector<std::string> header{"window_start"};
    for (Eigen::Index k = 0; k < e.dims(); ++k) {
        header.push_back("c" + std::to_string(k + 1));
    }
    return matrix_to_csv(table, header);
}

/// Reads the CSV written by embedding_to_csv; stride is recovered from the start column.
inline Embedding embedding_from_csv(std::string_view text, EmbeddingSource source, Eigen::Index window_length) {
    CsvOptions opts;
    opts.has_header = true;
    opts.timestamp_column = 0;
    const TimeSeries table = load_csv_string(text, opts);
    Embedding e;
    e.coords = table.values();
    e.source = source;
    e.window_length = window_length;
    const auto& starts = *table.timestamps();
    e.stride = starts.size() > 1 ? static_cast<Eigen::Index>(starts[1] - starts[0]) : 1;
    return e;
}

inline json alignment_to_json(const AlignmentReport& a) {
    return {{"rotation", matrix_to_json(a.rotation)},
            {"translation", vector_to_json(a.translation)},
            {"residual", a.residual}};
}

inline json spectrum_to_json(const SpectralDecomposition& dec) {
    json j = {{"singular_values", vector_to_json(dec.singular_values)}, {"rank", dec.rank}};
    j["epsilon"] = dec.epsilon ? json(*dec.epsilon) : json(nullptr);
    return j;
}

// --- forecasts and regions ----------------------------------------------------

inline json forecast_to_json(const ForecastResult& f) {
    auto covs = json::array();
    for (const auto& c : f.output_covariances) {
        covs.push_back(matrix_to_json(c));
    }
    return {{"horizon", f.horizon},
            {"predicted_states", matrix_to_json(f.predicted_states)},
            {"predicted_outputs", matrix_to_json(f.predicted_outputs)},
            {"output_covariances", covs}};
}

/// Columns: step, y_hat_1 .. y_hat_D, var_1 .. var_D (steps are 1-based offsets from the last observation).
inline std::string forecast_to_csv(const ForecastResult& f) {
    const auto d = f.predicted_outputs.cols();
    Matrix table(f.horizon, 1 + 2 * d);
    for (Eigen::Index k = 0; k < f.horizon; ++k) {
        table(k, 0) = static_cast<double>(k + 1);
        table.row(k).segment(1, d) = f.predicted_outputs.row(k);
        table.row(k).segment(1 + d, d) = f.output_covariances[static_cast<std::size_t>(k)].diagonal().transpose();
    }
    std::vector<std::string> header{"step"};
    for (Eigen::Index i = 0; i < d; ++i) {
        header.push_back("y_hat_" + std::to_string(i + 1));
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        header.push_back("var_" + std::to_string(i + 1));
    }
    return matrix_to_csv(table, header);
}

/// Accepts {"center": [...], "radius": r} or {"min": [...], "max": [...]}.
inline Region region_from_json(const json& j) {
    try {
        if (j.contains("center")) {
            return Region::ball(vector_from_json(j.at("center")), j.at("radius").get<double>());
        }
        if (j.contains("min")) {
            return Region::box(vector_from_json(j.at("min")), vector_from_json(j.at("max")));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid region: ") + e.what());
    }
    throw ParseError("region needs either {center, radius} or {min, max}");
}

inline json scaling_to_json(const ScalingParams& p) {
    auto arr = json::array();
    for (const auto& c : p.channels) {
        arr.push_back({{"min", c.min}, {"max", c.max}});
    }
    return arr;
}

} // namespace tcsid::io
