#pragma once

/**
 * @file service.hpp
 * @brief JSON-over-HTTP backend for the linked-view explorer.
 *
 * Every endpoint is a method returning {status, body} so it can be exercised
 * without sockets; mount() binds the methods to an httplib::Server.
 *
 * Datasets are immutable once uploaded. Derived results (embeddings, fitted
 * models) are cached per parameter set with compute-once semantics:
 * concurrent identical requests wait on a single shared computation.
 */

#include "tcsid/error.hpp"
#include "tcsid/io.hpp"
#include "tcsid/kalman.hpp"
#include "tcsid/spectral.hpp"
#include "tcsid/sysid.hpp"
#include "tcsid/timeseries.hpp"
#include "tcsid/trajectory.hpp"
#include "tcsid/version.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

namespace tcsid::service {

using nlohmann::json;
using Params = std::map<std::string, std::string>;

struct ApiResponse {
    int status = 200;
    json body;
};

struct Dataset {
    std::string id;
    TimeSeries raw;
    TimeSeries scaled;
    ScalingParams scaling;
};

/// Identified model and the filter state after the last observation.
struct FittedModel {
    Identification identification;
    KalmanState last;
};

namespace detail {

/// Request-level error carrying the HTTP status it maps to.
struct HttpError : Error {
    int status;
    HttpError(int code, const std::string& message) : Error(message), status(code) {}
};

inline ApiResponse error_response(int status, const std::string& message) {
    return {status, json{{"error", message}, {"status", status}}};
}

inline std::optional<std::string> param(const Params& p, const std::string& key) {
    auto it = p.find(key);
    if (it == p.end() || it->second.empty()) {
        return std::nullopt;
    }
    return it->second;
}

inline long long parse_int(const std::string& key, const std::string& value) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw HttpError(422, "parameter '" + key + "' must be an integer");
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& value) {
    auto v = tcsid::detail::parse_number(value);
    if (!v) {
        throw HttpError(422, "parameter '" + key + "' must be a number");
    }
    return *v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "off") {
        return false;
    }
    throw HttpError(422, "parameter '" + key + "' must be true or false");
}

/// Flatten a JSON body into the same string map the query-string endpoints use.
inline Params params_from_json(const json& body) {
    Params p;
    for (const auto& [k, v] : body.items()) {
        if (v.is_string()) {
            p[k] = v.get<std::string>();
        } else if (v.is_boolean()) {
            p[k] = v.get<bool>() ? "true" : "false";
        } else if (v.is_number_integer()) {
            p[k] = std::to_string(v.get<long long>());
        } else if (v.is_number()) {
            p[k] = io::format_number(v.get<double>());
        }
    }
    return p;
}

} // namespace detail

struct ModelParams {
    Eigen::Index window_length = 0;
    RankChoice rank;
    bool scale = true;

    [[nodiscard]] std::string key() const {
        std::ostringstream k;
        k << "L=" << window_length << ";rank=" << (rank.rank ? std::to_string(*rank.rank) : "-")
          << ";eps=" << (rank.epsilon ? io::format_number(*rank.epsilon) : "-") << ";scale=" << scale;
        return k.str();
    }
};

class Service {
public:
    explicit Service(std::optional<std::filesystem::path> data_dir = std::nullopt) : data_dir_(std::move(data_dir)) {
        if (data_dir_) {
            std::filesystem::create_directories(*data_dir_);
            restore();
        }
    }

    // --- POST /datasets ----------------------------------------------------

    ApiResponse upload(std::string_view csv, const Params& query = {}) {
        return guarded([&] {
            if (tcsid::detail::trim(csv).empty()) {
                throw detail::HttpError(400, "empty dataset body");
            }
            CsvOptions opts = csv_options(query);
            TimeSeries raw;
            try {
                raw = load_csv_string(csv, opts);
            } catch (const Error& e) {
                throw detail::HttpError(400, e.what());
            }
            const std::string id = "ds" + std::to_string(++counter_);
            auto ds = make_dataset(id, std::move(raw));
            if (data_dir_) {
                std::ofstream(*data_dir_ / (id + ".csv"), std::ios::binary) << csv;
                std::ofstream(*data_dir_ / (id + ".options.json")) << json{{"has_header", opts.has_header ? json(*opts.has_header) : json(nullptr)},
                                                                           {"timestamp_column", opts.timestamp_column ? json(*opts.timestamp_column) : json(nullptr)}};
            }
            json body = describe(*ds);
            {
                std::lock_guard lock(mutex_);
                datasets_[id] = std::move(ds);
            }
            return ApiResponse{201, body};
        });
    }

    ApiResponse get_dataset(const std::string& id) {
        return guarded([&] { return ApiResponse{200, describe(*dataset(id))}; });
    }

    // --- GET /datasets/{id}/embedding --------------------------------------

    ApiResponse embedding(const std::string& id, const Params& query) {
        return guarded([&] {
            auto ds = dataset(id);
            const ModelParams mp = model_params(query, *ds);
            const std::string method = detail::param(query, "method").value_or("timecluster");
            if (method != "timecluster" && method != "subspace") {
                throw detail::HttpError(422, "method must be 'timecluster' or 'subspace'");
            }
            const bool center = detail::param(query, "center") ? detail::parse_bool("center", *detail::param(query, "center")) : false;
            const std::string key = id + "|" + mp.key() + ";center=" + std::to_string(center) + ";method=" + method;
            return cached(embedding_cache_, key, [&] {
                const TimeSeries& ts = mp.scale ? ds->scaled : ds->raw;
                const auto dec = decompose(block_hankel(ts, mp.window_length), mp.rank);
                if (dec.rank < 1) {
                    throw detail::HttpError(422, "no singular value above the threshold");
                }
                const Embedding pca = pca_embed(trajectory_matrix(ts, mp.window_length, 1), dec.rank, center);
                const Embedding sub = hankel_embed(dec);
                const AlignmentReport align = align_embeddings(pca, sub);
                json body = io::embedding_to_json(method == "timecluster" ? pca : sub);
                body["id"] = id;
                body["method"] = method;
                body["center"] = center;
                body["scaled"] = mp.scale;
                body["singular_values"] = io::vector_to_json(dec.singular_values);
                body["align_residual"] = align.residual;
                return std::make_shared<const ApiResponse>(ApiResponse{200, std::move(body)});
            });
        });
    }

    // --- POST /datasets/{id}/selection -------------------------------------

    ApiResponse selection(const std::string& id, const json& body) {
        return guarded([&] {
            auto ds = dataset(id);
            const auto len = ds->raw.length();
            if (!body.contains("L")) {
                throw detail::HttpError(422, "selection needs the window length L");
            }
            const Eigen::Index l = body.at("L").get<Eigen::Index>();
            if (l < 1 || l > len) {
                throw detail::HttpError(422, "L must lie in [1, T]");
            }
            const Eigen::Index windows = window_count(len, l);
            if (body.contains("time_range")) {
                const auto& tr = body.at("time_range");
                if (!tr.is_array() || tr.size() != 2) {
                    throw detail::HttpError(422, "time_range must be [first, last]");
                }
                const auto first = tr[0].get<Eigen::Index>();
                const auto last = tr[1].get<Eigen::Index>();
                if (first < 0 || last >= len || first > last) {
                    throw detail::HttpError(422, "time_range outside [0, T-1]");
                }
                auto out = json::array();
                for (Eigen::Index w = std::max<Eigen::Index>(0, first - l + 1); w <= std::min(windows - 1, last); ++w) {
                    out.push_back(w);
                }
                return ApiResponse{200, json{{"window_indices", out}}};
            }
            const json indices = body.value("window_indices", json::array());
            if (!indices.is_array()) {
                throw detail::HttpError(422, "window_indices must be an array");
            }
            auto ranges = json::array();
            std::vector<std::pair<Eigen::Index, Eigen::Index>> spans;
            for (const auto& v : indices) {
                const auto w = v.get<Eigen::Index>();
                if (w < 0 || w >= windows) {
                    throw detail::HttpError(422, "window index " + std::to_string(w) + " outside [0, " +
                                                     std::to_string(windows - 1) + "]");
                }
                const TimeRange r = window_time_range(w, l);
                ranges.push_back({r.first, r.last});
                spans.emplace_back(r.first, r.last);
            }
            std::sort(spans.begin(), spans.end());
            auto merged = json::array();
            for (std::size_t i = 0; i < spans.size();) {
                auto [lo, hi] = spans[i];
                std::size_t k = i + 1;
                while (k < spans.size() && spans[k].first <= hi + 1) {
                    hi = std::max(hi, spans[k].second);
                    ++k;
                }
                merged.push_back({lo, hi});
                i = k;
            }
            return ApiResponse{200, json{{"time_ranges", ranges}, {"merged", merged}}};
        });
    }

    // --- POST /datasets/{id}/forecast --------------------------------------

    ApiResponse forecast(const std::string& id, const json& body) {
        return guarded([&] {
            auto ds = dataset(id);
            const Params p = detail::params_from_json(body);
            const ModelParams mp = model_params(p, *ds);
            const auto h = detail::param(p, "h");
            if (!h) {
                throw detail::HttpError(422, "forecast needs a horizon h");
            }
            const auto horizon = detail::parse_int("h", *h);
            if (horizon < 1) {
                throw detail::HttpError(422, "horizon h must be at least 1");
            }
            auto fitted = fit(*ds, mp);
            ForecastResult f = tcsid::forecast(fitted->identification.model, fitted->last, horizon);
            if (mp.scale) {
                for (Eigen::Index d = 0; d < f.predicted_outputs.cols(); ++d) {
                    const auto& range = ds->scaling.channels[static_cast<std::size_t>(d)];
                    f.predicted_outputs.col(d) = f.predicted_outputs.col(d).array() * (range.max - range.min) + range.min;
                }
                Vector span(f.predicted_outputs.cols());
                for (Eigen::Index d = 0; d < span.size(); ++d) {
                    const auto& range = ds->scaling.channels[static_cast<std::size_t>(d)];
                    span(d) = range.max - range.min;
                }
                for (auto& c : f.output_covariances) {
                    c = span.asDiagonal() * c * span.asDiagonal();
                }
            }
            json out = io::forecast_to_json(f);
            out["id"] = id;
            out["n"] = fitted->identification.model.n();
            out["units"] = "original";
            return ApiResponse{200, std::move(out)};
        });
    }

    // --- POST /datasets/{id}/region-query ----------------------------------

    ApiResponse region_query(const std::string& id, const json& body) {
        return guarded([&] {
            auto ds = dataset(id);
            const Params p = detail::params_from_json(body);
            const ModelParams mp = model_params(p, *ds);
            if (!body.contains("region")) {
                throw detail::HttpError(422, "region-query needs a region");
            }
            if (!body.contains("horizon") || !body.at("horizon").is_number_integer()) {
                throw detail::HttpError(422, "region-query needs an integer horizon");
            }
            const auto horizon = body.at("horizon").get<Eigen::Index>();
            if (horizon < 1) {
                throw detail::HttpError(422, "horizon must be at least 1");
            }
            Region region;
            try {
                region = io::region_from_json(body.at("region"));
            } catch (const Error& e) {
                throw detail::HttpError(422, e.what());
            }
            auto fitted = fit(*ds, mp);
            const auto k = next_region_entry(fitted->identification.model, fitted->last, region, horizon);
            json out{{"id", id}, {"n", fitted->identification.model.n()}, {"horizon", horizon}};
            out["steps_until_entry"] = k ? json(*k) : json(nullptr);
            return ApiResponse{200, std::move(out)};
        });
    }

    [[nodiscard]] json openapi() const {
        auto op = [](const std::string& summary) { return json{{"summary", summary}, {"responses", {{"200", {{"description", "OK"}}}}}}; };
        auto id_param = json{{"name", "id"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}};
        json paths;
        paths["/datasets"]["post"] = op("Upload a CSV time series; returns {id, T, D, channel_names}");
        paths["/datasets/{id}"]["get"] = op("Describe an uploaded dataset");
        paths["/datasets/{id}"]["get"]["parameters"] = json::array({id_param});
        paths["/datasets/{id}/embedding"]["get"] = op("Window embedding (timecluster PCA or subspace states) with singular values and the alignment residual between both methods");
        paths["/datasets/{id}/embedding"]["get"]["parameters"] = json::array({id_param,
            {{"name", "L"}, {"in", "query"}, {"required", true}, {"schema", {{"type", "integer"}}}},
            {{"name", "rank"}, {"in", "query"}, {"schema", {{"type", "integer"}}}},
            {{"name", "epsilon"}, {"in", "query"}, {"schema", {{"type", "number"}}}},
            {{"name", "method"}, {"in", "query"}, {"schema", {{"type", "string"}, {"enum", {"timecluster", "subspace"}}}}},
            {{"name", "center"}, {"in", "query"}, {"schema", {{"type", "boolean"}}}},
            {{"name", "scale"}, {"in", "query"}, {"schema", {{"type", "boolean"}}}}});
        paths["/datasets/{id}/selection"]["post"] = op("Map {L, window_indices} to time ranges, or {L, time_range} to intersecting windows");
        paths["/datasets/{id}/forecast"]["post"] = op("Kalman forecast {L, rank|epsilon, h} in original units");
        paths["/datasets/{id}/region-query"]["post"] = op("First step k in [1, horizon] whose forecast state enters {center, radius} or {min, max}");
        for (const char* p : {"/datasets/{id}/selection", "/datasets/{id}/forecast", "/datasets/{id}/region-query"}) {
            paths[p]["post"]["parameters"] = json::array({id_param});
        }
        paths["/spec"]["get"] = op("This document");
        return json{{"openapi", "3.0.3"},
                    {"info", {{"title", "tcsid explorer API"}, {"version", kVersion}}},
                    {"paths", paths}};
    }

    /// Bind every endpoint (plus CORS handling and /spec) to `server`.
    void mount(httplib::Server& server, const std::string& cors_origin = "*") {
        server.set_default_headers({{"Access-Control-Allow-Origin", cors_origin},
                                    {"Access-Control-Allow-Headers", "Content-Type"},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        auto reply = [](httplib::Response& res, const ApiResponse& r) {
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
        };
        auto query = [](const httplib::Request& req) {
            Params p;
            for (const auto& [k, v] : req.params) {
                p[k] = v;
            }
            return p;
        };
        auto parse_body = [](const httplib::Request& req) -> std::optional<json> {
            try {
                return req.body.empty() ? json::object() : json::parse(req.body);
            } catch (const json::exception&) {
                return std::nullopt;
            }
        };

        server.Get("/spec", [this, reply](const httplib::Request&, httplib::Response& res) {
            reply(res, {200, openapi()});
        });
        server.Post("/datasets", [this, reply, query](const httplib::Request& req, httplib::Response& res) {
            if (req.is_multipart_form_data()) {
                if (req.files.empty()) {
                    reply(res, detail::error_response(400, "multipart upload without a file part"));
                    return;
                }
                reply(res, upload(req.files.begin()->second.content, query(req)));
                return;
            }
            reply(res, upload(req.body, query(req)));
        });
        server.Get(R"(/datasets/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, get_dataset(req.matches[1]));
        });
        server.Get(R"(/datasets/([^/]+)/embedding)", [this, reply, query](const httplib::Request& req, httplib::Response& res) {
            reply(res, embedding(req.matches[1], query(req)));
        });
        using Handler = ApiResponse (Service::*)(const std::string&, const json&);
        auto post_json = [this, reply, parse_body](Handler handler) {
            return [this, reply, parse_body, handler](const httplib::Request& req, httplib::Response& res) {
                auto body = parse_body(req);
                if (!body || !body->is_object()) {
                    reply(res, detail::error_response(400, "request body must be a JSON object"));
                    return;
                }
                reply(res, (this->*handler)(req.matches[1], *body));
            };
        };
        server.Post(R"(/datasets/([^/]+)/selection)", post_json(&Service::selection));
        server.Post(R"(/datasets/([^/]+)/forecast)", post_json(&Service::forecast));
        server.Post(R"(/datasets/([^/]+)/region-query)", post_json(&Service::region_query));
    }

    /// Number of model fits actually computed (cache misses); exposed for tests.
    [[nodiscard]] std::size_t fits_computed() const noexcept { return fits_computed_.load(); }

private:
    template <typename F>
    ApiResponse guarded(F&& body) {
        try {
            return body();
        } catch (const detail::HttpError& e) {
            return detail::error_response(e.status, e.what());
        } catch (const ParseError& e) {
            return detail::error_response(400, e.what());
        } catch (const Error& e) {
            return detail::error_response(422, e.what());
        } catch (const json::exception& e) {
            return detail::error_response(422, std::string("malformed request: ") + e.what());
        }
    }

    template <typename T, typename F>
    T cached_value(std::map<std::string, std::shared_future<T>>& cache, const std::string& key, F&& compute) {
        std::promise<T> promise;
        std::shared_future<T> future;
        bool owner = false;
        {
            std::lock_guard lock(mutex_);
            auto it = cache.find(key);
            if (it == cache.end()) {
                future = promise.get_future().share();
                cache.emplace(key, future);
                owner = true;
            } else {
                future = it->second;
            }
        }
        if (owner) {
            try {
                promise.set_value(compute());
            } catch (...) {
                promise.set_exception(std::current_exception());
                std::lock_guard lock(mutex_);
                cache.erase(key);
            }
        }
        return future.get();
    }

    template <typename F>
    ApiResponse cached(std::map<std::string, std::shared_future<std::shared_ptr<const ApiResponse>>>& cache,
                       const std::string& key, F&& compute) {
        return *cached_value(cache, key, std::forward<F>(compute));
    }

    std::shared_ptr<const FittedModel> fit(const Dataset& ds, const ModelParams& mp) {
        return cached_value(model_cache_, ds.id + "|" + mp.key(), [&] {
            ++fits_computed_;
            const TimeSeries& ts = mp.scale ? ds.scaled : ds.raw;
            auto fitted = std::make_shared<FittedModel>();
            fitted->identification = identify_output_only(ts, mp.window_length, mp.rank);
            fitted->last = kalman_filter(fitted->identification.model, ts).back();
            if (data_dir_) {
                std::ofstream(*data_dir_ / (ds.id + ".model." + std::to_string(std::hash<std::string>{}(mp.key())) + ".json"))
                    << json{{"params", mp.key()}, {"model", io::model_to_json(fitted->identification.model)}}.dump(2);
            }
            return std::shared_ptr<const FittedModel>(std::move(fitted));
        });
    }

    std::shared_ptr<const Dataset> dataset(const std::string& id) {
        std::lock_guard lock(mutex_);
        auto it = datasets_.find(id);
        if (it == datasets_.end()) {
            throw detail::HttpError(404, "unknown dataset '" + id + "'");
        }
        return it->second;
    }

    static CsvOptions csv_options(const Params& query) {
        CsvOptions opts;
        if (auto h = detail::param(query, "has_header"); h && *h != "auto") {
            opts.has_header = detail::parse_bool("has_header", *h);
        }
        if (auto tc = detail::param(query, "timestamp_column")) {
            opts.timestamp_column = static_cast<int>(detail::parse_int("timestamp_column", *tc));
        }
        return opts;
    }

    static std::shared_ptr<const Dataset> make_dataset(const std::string& id, TimeSeries raw) {
        auto [scaled, params] = minmax_scale(raw);
        return std::make_shared<const Dataset>(Dataset{id, std::move(raw), std::move(scaled), std::move(params)});
    }

    static json describe(const Dataset& ds) {
        return json{{"id", ds.id},
                    {"T", ds.raw.length()},
                    {"D", ds.raw.channels()},
                    {"channel_names", ds.raw.channel_names()},
                    {"scaling", io::scaling_to_json(ds.scaling)}};
    }

    static ModelParams model_params(const Params& p, const Dataset& ds) {
        ModelParams mp;
        const auto l = detail::param(p, "L");
        if (!l) {
            throw detail::HttpError(422, "window length L is required");
        }
        mp.window_length = detail::parse_int("L", *l);
        if (mp.window_length < 1 || mp.window_length > ds.raw.length()) {
            throw detail::HttpError(422, "L=" + *l + " must lie in [1, T=" + std::to_string(ds.raw.length()) + "]");
        }
        const auto rank = detail::param(p, "rank");
        const auto eps = detail::param(p, "epsilon");
        if (rank && eps) {
            throw detail::HttpError(422, "give either rank or epsilon, not both");
        }
        if (rank) {
            mp.rank = RankChoice::fixed(detail::parse_int("rank", *rank));
            const auto max_rank = std::min(mp.window_length * ds.raw.channels(), window_count(ds.raw.length(), mp.window_length));
            if (*mp.rank.rank < 1 || *mp.rank.rank > max_rank) {
                throw detail::HttpError(422, "rank must lie in [1, " + std::to_string(max_rank) + "]");
            }
        } else if (eps) {
            const double e = detail::parse_double("epsilon", *eps);
            if (!(e > 0.0 && e < 1.0)) {
                throw detail::HttpError(422, "epsilon must lie in (0, 1)");
            }
            mp.rank = RankChoice::threshold(e);
        }
        if (auto s = detail::param(p, "scale")) {
            mp.scale = detail::parse_bool("scale", *s);
        }
        return mp;
    }

    void restore() {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(*data_dir_)) {
            const auto name = entry.path().filename().string();
            if (entry.path().extension() == ".csv" && name.rfind("ds", 0) == 0) {
                files.push_back(entry.path());
            }
        }
        for (const auto& path : files) {
            const std::string id = path.stem().string();
            CsvOptions opts;
            if (std::ifstream meta(path.parent_path() / (id + ".options.json")); meta) {
                const json m = json::parse(meta, nullptr, false);
                if (m.is_object()) {
                    if (m.value("has_header", json(nullptr)).is_boolean()) {
                        opts.has_header = m["has_header"].get<bool>();
                    }
                    if (m.value("timestamp_column", json(nullptr)).is_number_integer()) {
                        opts.timestamp_column = m["timestamp_column"].get<int>();
                    }
                }
            }
            try {
                datasets_[id] = make_dataset(id, load_csv_file(path.string(), opts));
                const auto num = detail::parse_int("id", id.substr(2));
                counter_ = std::max<long long>(counter_, num);
            } catch (const Error&) {
                // Unreadable leftovers are skipped rather than blocking startup.
            }
        }
    }

    std::optional<std::filesystem::path> data_dir_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
    std::map<std::string, std::shared_future<std::shared_ptr<const ApiResponse>>> embedding_cache_;
    std::map<std::string, std::shared_future<std::shared_ptr<const FittedModel>>> model_cache_;
    std::atomic<long long> counter_{0};
    std::atomic<std::size_t> fits_computed_{0};
};

} // namespace tcsid::service
