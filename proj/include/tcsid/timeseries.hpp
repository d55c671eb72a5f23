#pragma once

/**
 * @file timeseries.hpp
 * @brief Multivariate time series container, CSV ingestion, min-max scaling and detrending.
 *
 * A series is a T x D matrix of observations; row t is the observation y_t.
 * Timestamps are metadata only: every algorithm in the library works on the
 * integer sample index.
 */

#include "tcsid/error.hpp"
#include "tcsid/linalg.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tcsid {

class TimeSeries {
public:
    TimeSeries() = default;

    explicit TimeSeries(Matrix values,
                        std::optional<std::vector<double>> timestamps = std::nullopt,
                        std::vector<std::string> channel_names = {})
        : values_(std::move(values)),
          timestamps_(std::move(timestamps)),
          channel_names_(std::move(channel_names)) {
        detail::require(values_.rows() >= 1 && values_.cols() >= 1,
                        "time series needs at least one row and one channel");
        detail::require(values_.allFinite(), "time series values must be finite");
        if (timestamps_) {
            detail::require(static_cast<Eigen::Index>(timestamps_->size()) == values_.rows(),
                            "timestamp count does not match row count");
            for (std::size_t i = 1; i < timestamps_->size(); ++i) {
                detail::require((*timestamps_)[i] > (*timestamps_)[i - 1],
                                "timestamps must be strictly increasing (row " + std::to_string(i) + ")");
            }
        }
        if (!channel_names_.empty()) {
            detail::require(static_cast<Eigen::Index>(channel_names_.size()) == values_.cols(),
                            "channel name count does not match channel count");
        }
    }

    [[nodiscard]] const Matrix& values() const noexcept { return values_; }
    [[nodiscard]] Eigen::Index length() const noexcept { return values_.rows(); }
    [[nodiscard]] Eigen::Index channels() const noexcept { return values_.cols(); }
    [[nodiscard]] const std::optional<std::vector<double>>& timestamps() const noexcept { return timestamps_; }
    [[nodiscard]] const std::vector<std::string>& channel_names() const noexcept { return channel_names_; }

    /// Observation y_t as a column vector.
    [[nodiscard]] Vector at(Eigen::Index t) const { return values_.row(t).transpose(); }

    /// Rows [begin, begin + count), metadata sliced along.
    [[nodiscard]] TimeSeries slice(Eigen::Index begin, Eigen::Index count) const {
        detail::require(begin >= 0 && count >= 1 && begin + count <= length(), "slice out of range");
        std::optional<std::vector<double>> ts;
        if (timestamps_) {
            ts.emplace(timestamps_->begin() + begin, timestamps_->begin() + begin + count);
        }
        return TimeSeries(values_.middleRows(begin, count), std::move(ts), channel_names_);
    }

    /// Same metadata, new values (row count may differ only if timestamps are absent).
    [[nodiscard]] TimeSeries with_values(Matrix values) const {
        auto ts = values.rows() == length() ? timestamps_ : std::nullopt;
        auto names = values.cols() == channels() ? channel_names_ : std::vector<std::string>{};
        return TimeSeries(std::move(values), std::move(ts), std::move(names));
    }

private:
    Matrix values_;
    std::optional<std::vector<double>> timestamps_;
    std::vector<std::string> channel_names_;
};

struct ChannelRange {
    double min = 0.0;
    double max = 1.0;
};

/// Per-channel (min, max) recorded by minmax_scale.
struct ScalingParams {
    std::vector<ChannelRange> channels;
};

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

struct CsvOptions {
    /// nullopt: treat the first record as a header when any of its cells is non-numeric.
    std::optional<bool> has_header = std::nullopt;
    /// 0-based column holding timestamps (ISO-8601 or numeric); excluded from the values.
    std::optional<int> timestamp_column = std::nullopt;
    char delimiter = ',';
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::optional<double> parse_number(std::string_view cell) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    if (cell.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

/// ISO-8601 date or date-time ("YYYY-MM", "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS[.frac]][Z]") as seconds since epoch.
inline std::optional<double> parse_iso8601(std::string_view cell) {
    cell = trim(cell);
    int year = 0;
    unsigned month = 1;
    unsigned day = 1;
    int hour = 0;
    int minute = 0;
    double second = 0.0;
    auto digits = [&](std::size_t pos, std::size_t count, auto& out) {
        if (pos + count > cell.size()) {
            return false;
        }
        auto [p, ec] = std::from_chars(cell.data() + pos, cell.data() + pos + count, out);
        return ec == std::errc{} && p == cell.data() + pos + count;
    };
    if (cell.size() < 7 || cell[4] != '-' || !digits(0, 4, year) || !digits(5, 2, month)) {
        return std::nullopt;
    }
    std::size_t pos = 7;
    if (cell.size() > pos) {
        if (cell[pos] != '-' || !digits(pos + 1, 2, day)) {
            return std::nullopt;
        }
        pos += 3;
    }
    if (cell.size() > pos && (cell[pos] == 'T' || cell[pos] == ' ')) {
        if (!digits(pos + 1, 2, hour) || cell.size() < pos + 6 || cell[pos + 3] != ':' ||
            !digits(pos + 4, 2, minute)) {
            return std::nullopt;
        }
        pos += 6;
        if (cell.size() > pos && cell[pos] == ':') {
            std::size_t end = pos + 1;
            while (end < cell.size() && (std::isdigit(static_cast<unsigned char>(cell[end])) || cell[end] == '.')) {
                ++end;
            }
            auto [p, ec] = std::from_chars(cell.data() + pos + 1, cell.data() + end, second);
            if (ec != std::errc{} || p != cell.data() + end) {
                return std::nullopt;
            }
            pos = end;
        }
        if (cell.size() > pos && cell[pos] == 'Z') {
            ++pos;
        }
    }
    if (pos != cell.size()) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok() || hour > 23 || minute > 59 || second >= 61.0) {
        return std::nullopt;
    }
    const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days) * 86400.0 + hour * 3600.0 + minute * 60.0 + second;
}

/// RFC-4180 record splitter: quoted fields, doubled quotes, embedded delimiters and newlines.
inline std::vector<std::vector<std::string>> split_csv(std::string_view text, char delimiter) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') {
                    ++line;
                }
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && trim(field).empty()) {
            in_quotes = true;
            field_started = true;
            field.clear();
        } else if (c == delimiter) {
            record.push_back(std::move(field));
            field.clear();
            field_started = true;
        } else if (c == '\n') {
            record.push_back(std::move(field));
            field.clear();
            const bool blank = record.size() == 1 && trim(record.front()).empty() && !field_started;
            if (!blank) {
                records.push_back(std::move(record));
            }
            record.clear();
            field_started = false;
            ++line;
        } else {
            field.push_back(c);
            if (c != '\r') {
                field_started = true;
            }
        }
    }
    if (in_quotes) {
        throw ParseError("unterminated quoted field at line " + std::to_string(line));
    }
    if (field_started || !field.empty() || !record.empty()) {
        record.push_back(std::move(field));
        if (!(record.size() == 1 && trim(record.front()).empty())) {
            records.push_back(std::move(record));
        }
    }
    return records;
}

} // namespace detail

/**
 * Parse a CSV document into a TimeSeries.
 *
 * Error messages cite 1-based row numbers counted over the records of the
 * document (header included) and 1-based column numbers, as a spreadsheet
 * would show them.
 */
inline TimeSeries load_csv_string(std::string_view text, const CsvOptions& options = {}) {
    const auto records = detail::split_csv(text, options.delimiter);
    if (records.empty()) {
        throw ParseError("empty CSV input");
    }
    const std::size_t width = records.front().size();
    for (std::size_t r = 0; r < records.size(); ++r) {
        if (records[r].size() != width) {
            throw ParseError("ragged CSV: row " + std::to_string(r + 1) + " has " +
                             std::to_string(records[r].size()) + " columns, expected " + std::to_string(width));
        }
    }
    const int ts_col = options.timestamp_column.value_or(-1);
    if (ts_col >= static_cast<int>(width)) {
        throw InvalidArgument("timestamp column " + std::to_string(ts_col) + " out of range");
    }
    bool header = false;
    if (options.has_header) {
        header = *options.has_header;
    } else {
        for (std::size_t c = 0; c < width; ++c) {
            const auto& cell = records.front()[c];
            const bool numeric = static_cast<int>(c) == ts_col ? (detail::parse_number(cell) || detail::parse_iso8601(cell))
                                                               : detail::parse_number(cell).has_value();
            if (!numeric) {
                header = true;
                break;
            }
        }
    }
    const std::size_t first = header ? 1 : 0;
    const auto rows = static_cast<Eigen::Index>(records.size() - first);
    const auto cols = static_cast<Eigen::Index>(width) - (ts_col >= 0 ? 1 : 0);
    if (rows < 1) {
        throw ParseError("CSV contains a header but no data rows");
    }
    if (cols < 1) {
        throw ParseError("CSV has no value columns");
    }

    Matrix values(rows, cols);
    std::optional<std::vector<double>> timestamps;
    if (ts_col >= 0) {
        timestamps.emplace();
        timestamps->reserve(static_cast<std::size_t>(rows));
    }
    for (std::size_t r = first; r < records.size(); ++r) {
        Eigen::Index out_col = 0;
        for (std::size_t c = 0; c < width; ++c) {
            const auto& cell = records[r][c];
            if (static_cast<int>(c) == ts_col) {
                auto t = detail::parse_number(cell);
                if (!t) {
                    t = detail::parse_iso8601(cell);
                }
                if (!t) {
                    throw ParseError("cannot parse timestamp '" + cell + "' at row " + std::to_string(r + 1) +
                                     ", column " + std::to_string(c + 1));
                }
                timestamps->push_back(*t);
                continue;
            }
            const auto v = detail::parse_number(cell);
            if (!v) {
                throw ParseError("cannot parse number '" + cell + "' at row " + std::to_string(r + 1) + ", column " +
                                 std::to_string(c + 1));
            }
            values(static_cast<Eigen::Index>(r - first), out_col++) = *v;
        }
    }
    if (timestamps) {
        for (std::size_t i = 1; i < timestamps->size(); ++i) {
            if (!((*timestamps)[i] > (*timestamps)[i - 1])) {
                throw ParseError("timestamps not strictly increasing at row " + std::to_string(i + first + 1));
            }
        }
    }

    std::vector<std::string> names;
    if (header) {
        for (std::size_t c = 0; c < width; ++c) {
            if (static_cast<int>(c) != ts_col) {
                names.emplace_back(detail::trim(records.front()[c]));
            }
        }
    }
    return TimeSeries(std::move(values), std::move(timestamps), std::move(names));
}

inline TimeSeries load_csv(std::istream& source, const CsvOptions& options = {}) {
    std::string text{std::istreambuf_iterator<char>(source), std::istreambuf_iterator<char>()};
    return load_csv_string(text, options);
}

inline TimeSeries load_csv_file(const std::string& path, const CsvOptions& options = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidArgument("cannot open input file: " + path);
    }
    return load_csv(in, options);
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

/// Map every channel affinely onto [0, 1]. Constant channels map to zeros.
inline std::pair<TimeSeries, ScalingParams> minmax_scale(const TimeSeries& ts) {
    ScalingParams params;
    Matrix scaled(ts.length(), ts.channels());
    for (Eigen::Index d = 0; d < ts.channels(); ++d) {
        const auto col = ts.values().col(d);
        const double lo = col.minCoeff();
        const double hi = col.maxCoeff();
        params.channels.push_back({lo, hi});
        const double span = hi - lo;
        if (span > 0.0) {
            scaled.col(d) = (col.array() - lo) / span;
        } else {
            scaled.col(d).setZero();
        }
    }
    return {ts.with_values(std::move(scaled)), std::move(params)};
}

inline TimeSeries inverse_scale(const TimeSeries& ts, const ScalingParams& params) {
    detail::require(static_cast<Eigen::Index>(params.channels.size()) == ts.channels(),
                    "scaling parameters have " + std::to_string(params.channels.size()) +
                        " channels, series has " + std::to_string(ts.channels()));
    Matrix out(ts.length(), ts.channels());
    for (Eigen::Index d = 0; d < ts.channels(); ++d) {
        const auto& [lo, hi] = params.channels[static_cast<std::size_t>(d)];
        out.col(d) = ts.values().col(d).array() * (hi - lo) + lo;
    }
    return ts.with_values(std::move(out));
}

// ---------------------------------------------------------------------------
// Detrending
// ---------------------------------------------------------------------------

struct Detrend {
    enum class Kind { polynomial, difference };
    Kind kind = Kind::polynomial;
    int degree = 1;

    static Detrend linear() { return {Kind::polynomial, 1}; }
    static Detrend polynomial(int degree) { return {Kind::polynomial, degree}; }
    static Detrend difference() { return {Kind::difference, 0}; }
};

/// Least-squares polynomial in the sample index, evaluated at every index. Columns fitted independently.
inline Matrix polynomial_trend(const Matrix& values, int degree) {
    const Eigen::Index n = values.rows();
    // Index rescaled to [-1, 1] keeps the Vandermonde matrix well conditioned.
    Matrix basis(n, degree + 1);
    for (Eigen::Index t = 0; t < n; ++t) {
        const double x = n > 1 ? 2.0 * static_cast<double>(t) / static_cast<double>(n - 1) - 1.0 : 0.0;
        double p = 1.0;
        for (int k = 0; k <= degree; ++k) {
            basis(t, k) = p;
            p *= x;
        }
    }
    const Matrix coeffs = basis.colPivHouseholderQr().solve(values);
    return basis * coeffs;
}

inline TimeSeries detrend(const TimeSeries& ts, const Detrend& method = Detrend::linear()) {
    const Eigen::Index n = ts.length();
    if (method.kind == Detrend::Kind::difference) {
        if (n < 2) {
            throw InvalidArgument("difference detrending needs at least 2 samples");
        }
        Matrix diff = ts.values().bottomRows(n - 1) - ts.values().topRows(n - 1);
        std::optional<std::vector<double>> stamps;
        if (ts.timestamps()) {
            stamps.emplace(ts.timestamps()->begin() + 1, ts.timestamps()->end());
        }
        return TimeSeries(std::move(diff), std::move(stamps), ts.channel_names());
    }
    detail::require(method.degree >= 0, "polynomial degree must be non-negative");
    if (n < method.degree + 2) {
        throw InvalidArgument("polynomial detrending of degree " + std::to_string(method.degree) + " needs at least " +
                              std::to_string(method.degree + 2) + " samples");
    }
    return ts.with_values(ts.values() - polynomial_trend(ts.values(), method.degree));
}

} // namespace tcsid
