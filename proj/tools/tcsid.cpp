// tcsid command-line front end: generate | embed | identify | smooth | forecast | compare | serve.
//
// Every subcommand writes its results into --output-dir together with a
// manifest.json holding the fully resolved configuration, so two runs with
// identical manifests produce identical bytes.
//
// Exit codes: 0 success, 2 invalid configuration or input data, 1 numerical failure.

#include "tcsid/service.hpp"
#include "tcsid/tcsid.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string input;
    std::string output_dir = ".";
    Eigen::Index window = 0;
    Eigen::Index stride = 1;
    std::optional<Eigen::Index> rank;
    std::optional<double> epsilon;
    bool center = false;
    std::string format = "csv";
    bool scale = false;
    std::string detrend = "none";
    std::string order = "detrend-first";
    std::string has_header = "auto";
    std::optional<int> timestamp_column;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void add_input_options(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--input,-i", o.input, "Input CSV")->required();
    cmd->add_option("--has-header", o.has_header, "Header row: auto | true | false")
        ->check(CLI::IsMember({"auto", "true", "false"}));
    cmd->add_option("--timestamp-column", o.timestamp_column, "0-based column holding timestamps");
    cmd->add_flag("--scale", o.scale, "Min-max scale every channel to [0, 1]");
    cmd->add_option("--detrend", o.detrend, "none | linear | poly:<degree> | difference");
    cmd->add_option("--order", o.order, "Preprocessing order: detrend-first | scale-first")
        ->check(CLI::IsMember({"detrend-first", "scale-first"}));
}

void add_model_options(CLI::App* cmd, CommonOptions& o, bool with_stride) {
    cmd->add_option("--window,-L", o.window, "Window length L")->required();
    if (with_stride) {
        cmd->add_option("--stride", o.stride, "Window stride (embedding only)");
    }
    auto* r = cmd->add_option("--rank", o.rank, "Fixed rank r");
    auto* e = cmd->add_option("--epsilon", o.epsilon, "Relative singular-value threshold");
    r->excludes(e);
    cmd->add_option("--output-dir,-o", o.output_dir, "Directory for results");
    cmd->add_option("--format", o.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
}

json common_json(const CommonOptions& o) {
    json j{{"input", o.input},   {"output_dir", o.output_dir}, {"window", o.window}, {"stride", o.stride},
           {"center", o.center}, {"format", o.format},         {"scale", o.scale},   {"detrend", o.detrend},
           {"order", o.order},   {"has_header", o.has_header}};
    j["rank"] = o.rank ? json(*o.rank) : json(nullptr);
    j["epsilon"] = o.epsilon ? json(*o.epsilon) : json(nullptr);
    j["timestamp_column"] = o.timestamp_column ? json(*o.timestamp_column) : json(nullptr);
    return j;
}

tcsid::RankChoice rank_choice(const CommonOptions& o) {
    if (o.rank) {
        return tcsid::RankChoice::fixed(*o.rank);
    }
    if (o.epsilon) {
        return tcsid::RankChoice::threshold(*o.epsilon);
    }
    return tcsid::RankChoice::automatic();
}

tcsid::Detrend parse_detrend(const std::string& spec) {
    if (spec == "linear") {
        return tcsid::Detrend::linear();
    }
    if (spec == "difference") {
        return tcsid::Detrend::difference();
    }
    if (spec.rfind("poly:", 0) == 0) {
        const auto degree = tcsid::detail::parse_number(spec.substr(5));
        if (!degree || *degree < 0 || *degree != std::floor(*degree)) {
            throw ConfigError("bad polynomial degree in --detrend " + spec);
        }
        return tcsid::Detrend::polynomial(static_cast<int>(*degree));
    }
    throw ConfigError("unknown --detrend method '" + spec + "'");
}

struct Prepared {
    tcsid::TimeSeries series;
    std::optional<tcsid::ScalingParams> scaling;
};

tcsid::TimeSeries load_input(const std::string& path, const CommonOptions& o) {
    if (!fs::exists(path)) {
        throw ConfigError("input file not found: " + path);
    }
    tcsid::CsvOptions csv;
    if (o.has_header != "auto") {
        csv.has_header = o.has_header == "true";
    }
    csv.timestamp_column = o.timestamp_column;
    return tcsid::load_csv_file(path, csv);
}

Prepared prepare(const CommonOptions& o) {
    Prepared p{load_input(o.input, o), std::nullopt};
    auto apply_scale = [&] {
        if (o.scale) {
            auto [scaled, params] = tcsid::minmax_scale(p.series);
            p.series = std::move(scaled);
            p.scaling = std::move(params);
        }
    };
    auto apply_detrend = [&] {
        if (o.detrend != "none") {
            p.series = tcsid::detrend(p.series, parse_detrend(o.detrend));
        }
    };
    if (o.order == "scale-first") {
        apply_scale();
        apply_detrend();
    } else {
        apply_detrend();
        apply_scale();
    }
    return p;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << content;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config, const json& extra = {}) {
    json m{{"tool", "tcsid"}, {"version", tcsid::kVersion}, {"command", command}, {"config", config}};
    if (!extra.is_null()) {
        m["result"] = extra;
    }
    write_file(dir / "manifest.json", m.dump(2) + "\n");
}

fs::path output_dir(const std::string& dir) {
    fs::create_directories(dir);
    return fs::path(dir);
}

void write_embedding(const fs::path& dir, const std::string& stem, const tcsid::Embedding& e, const std::string& format) {
    if (format == "json") {
        write_file(dir / (stem + ".json"), tcsid::io::embedding_to_json(e).dump(2) + "\n");
    } else {
        write_file(dir / (stem + ".csv"), tcsid::io::embedding_to_csv(e));
    }
}

std::string states_csv(const tcsid::Matrix& states_by_column) {
    std::vector<std::string> header{"t"};
    for (Eigen::Index k = 0; k < states_by_column.rows(); ++k) {
        header.push_back("x" + std::to_string(k + 1));
    }
    tcsid::Matrix table(states_by_column.cols(), states_by_column.rows() + 1);
    for (Eigen::Index t = 0; t < states_by_column.cols(); ++t) {
        table(t, 0) = static_cast<double>(t);
    }
    table.rightCols(states_by_column.rows()) = states_by_column.transpose();
    return tcsid::io::matrix_to_csv(table, header);
}

std::string spectrum_csv(const tcsid::Vector& s) {
    tcsid::Matrix table(s.size(), 2);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        table(i, 0) = static_cast<double>(i + 1);
        table(i, 1) = s(i);
    }
    return tcsid::io::matrix_to_csv(table, {"index", "singular_value"});
}

// --- generate -----------------------------------------------------------------

struct GenerateOptions {
    std::string kind = "ar2";
    Eigen::Index length = 0;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    double noise = -1.0;
    double phi1 = 1.5;
    double phi2 = -0.9;
    double f1 = 1.0 / 3.0;
    double f2 = 1.0 / 5.0;
    double a1 = 1.0;
    double a2 = 0.6;
    double theta = 2.0 * std::numbers::pi / 30.0;
    double q_sd = 0.0;
    double r_sd = 0.0;
    Eigen::Index segment = 0;
};

int run_generate(const GenerateOptions& g) {
    tcsid::SynthOutput out;
    if (g.kind == "ar2") {
        tcsid::Ar2Spec s;
        s.phi1 = g.phi1;
        s.phi2 = g.phi2;
        if (g.noise >= 0.0) s.noise_sd = g.noise;
        if (g.length > 0) s.length = g.length;
        out = tcsid::gen_ar2(s, g.seed);
    } else if (g.kind == "double-periodic") {
        tcsid::DoublePeriodicSpec s;
        s.f1 = g.f1;
        s.f2 = g.f2;
        s.amplitude1 = g.a1;
        s.amplitude2 = g.a2;
        if (g.noise >= 0.0) s.noise_sd = g.noise;
        if (g.length > 0) s.length = g.length;
        out = tcsid::gen_double_periodic(s, g.seed);
    } else if (g.kind == "periodic-ssm") {
        tcsid::PeriodicSsmSpec s;
        s.theta = g.theta;
        s.q_sd = g.q_sd;
        s.r_sd = g.noise >= 0.0 ? g.noise : g.r_sd;
        if (g.length > 0) s.length = g.length;
        out = tcsid::gen_periodic_ssm(s, g.seed);
    } else if (g.kind == "exogenous") {
        tcsid::ExogenousSpec s;
        if (g.noise >= 0.0) s.noise_sd = g.noise;
        if (g.length > 0) s.length = g.length;
        if (g.segment > 0) s.schedule = tcsid::alternating_schedule(s.length, g.segment, {0.0, 1.0});
        out = tcsid::gen_exogenous_stepped(s, g.seed);
    } else {
        throw ConfigError("unknown generator kind '" + g.kind + "'");
    }
    const auto dir = output_dir(g.output_dir);
    write_file(dir / "series.csv", tcsid::io::timeseries_to_csv(out.series));
    if (out.true_states) {
        write_file(dir / "states.csv", states_csv(*out.true_states));
    }
    if (out.inputs) {
        write_file(dir / "inputs.csv", tcsid::io::matrix_to_csv(out.inputs->values(), {"u1"}));
    }
    write_file(dir / "spec.json", out.spec.dump(2) + "\n");
    write_manifest(dir, "generate",
                   {{"kind", g.kind}, {"length", g.length}, {"seed", g.seed}, {"noise", g.noise}, {"output_dir", g.output_dir}},
                   out.spec);
    return 0;
}

// --- embed ----------------------------------------------------------------------

std::string method_arg = "timecluster";

int run_embed(const CommonOptions& o, const std::string& method) {
    const auto prep = prepare(o);
    const auto dir = output_dir(o.output_dir);
    const auto z = tcsid::trajectory_matrix(prep.series, o.window, o.stride);
    write_file(dir / "trajectory.csv", tcsid::io::matrix_to_csv(z.data));
    write_file(dir / "trajectory.json", tcsid::io::trajectory_to_json(z).dump() + "\n");

    // Rank selection always looks at the stride-1 Hankel spectrum.
    const auto dec = tcsid::decompose(tcsid::block_hankel(prep.series, o.window), rank_choice(o));
    write_file(dir / "singular_values.csv", spectrum_csv(dec.singular_values));
    if (dec.rank < 1) {
        throw tcsid::NumericalError("no singular value above the threshold");
    }
    json result{{"rank", dec.rank}, {"windows", z.windows()}};
    if (method == "timecluster" || method == "both") {
        write_embedding(dir, "embedding_timecluster", tcsid::pca_embed(z, dec.rank, o.center), o.format);
    }
    if (method == "subspace" || method == "both") {
        if (o.stride != 1) {
            throw ConfigError("the subspace method needs stride 1 (a strided window matrix is not Hankel)");
        }
        write_embedding(dir, "embedding_subspace", tcsid::hankel_embed(dec), o.format);
    }
    if (method == "both") {
        const auto report = tcsid::align_embeddings(tcsid::pca_embed(z, dec.rank, o.center), tcsid::hankel_embed(dec));
        write_file(dir / "comparison.json", tcsid::io::alignment_to_json(report).dump(2) + "\n");
        result["align_residual"] = report.residual;
    }
    auto config = common_json(o);
    config["method"] = method;
    write_manifest(dir, "embed", config, result);
    return 0;
}

// --- identify -------------------------------------------------------------------

int run_identify(const CommonOptions& o, const std::string& inputs_path) {
    const auto prep = prepare(o);
    const auto dir = output_dir(o.output_dir);
    tcsid::Identification id;
    if (!inputs_path.empty()) {
        CommonOptions raw = o;
        raw.scale = false;
        raw.detrend = "none";
        const auto u = load_input(inputs_path, raw);
        id = tcsid::identify_with_inputs(prep.series, u, o.window, rank_choice(o));
    } else {
        id = tcsid::identify_output_only(prep.series, o.window, rank_choice(o));
    }
    write_file(dir / "model.json", tcsid::io::model_to_json(id.model).dump(2) + "\n");
    write_file(dir / "states.csv", states_csv(id.states.states));
    write_file(dir / "singular_values.csv", spectrum_csv(id.decomposition.singular_values));
    if (!id.notice.empty()) {
        std::cerr << "notice: " << id.notice << "\n";
    }
    auto config = common_json(o);
    config["inputs"] = inputs_path;
    write_manifest(dir, "identify", config,
                   {{"n", id.model.n()}, {"m", id.model.m()}, {"rank_deficient", id.rank_deficient}, {"notice", id.notice}});
    return 0;
}

// --- smooth ---------------------------------------------------------------------

int run_smooth(const CommonOptions& o, const std::string& model_path) {
    const auto prep = prepare(o);
    const auto dir = output_dir(o.output_dir);
    tcsid::StateSpaceModel model;
    std::optional<tcsid::Identification> id;
    if (!model_path.empty()) {
        std::ifstream in(model_path);
        if (!in) {
            throw ConfigError("model file not found: " + model_path);
        }
        model = tcsid::io::model_from_json(json::parse(in));
    } else {
        id = tcsid::identify_output_only(prep.series, o.window, rank_choice(o));
        model = id->model;
        write_file(dir / "states.csv", states_csv(id->states.states));
    }
    const auto filtered = tcsid::kalman_filter(model, prep.series);
    const auto smoothed = tcsid::rts_smooth(model, filtered, o.window);
    const tcsid::Embedding smooth_emb{smoothed.trajectory.states.transpose(), tcsid::EmbeddingSource::smoothed, o.window, 1};
    const tcsid::Embedding filt_emb{tcsid::filtered_states(filtered).transpose(), tcsid::EmbeddingSource::smoothed, o.window, 1};
    write_embedding(dir, "smoothed", smooth_emb, o.format);
    write_embedding(dir, "filtered", filt_emb, o.format);
    auto config = common_json(o);
    config["model"] = model_path;
    write_manifest(dir, "smooth", config, {{"n", model.n()}, {"pseudo_inverse", smoothed.pseudo_inverse}});
    return 0;
}

// --- forecast -------------------------------------------------------------------

int run_forecast(const CommonOptions& o, Eigen::Index horizon, bool eval, Eigen::Index start, Eigen::Index refit) {
    if (horizon < 1) {
        throw ConfigError("--horizon must be at least 1");
    }
    const auto prep = prepare(o);
    const auto dir = output_dir(o.output_dir);
    const auto id = tcsid::identify_output_only(prep.series, o.window, rank_choice(o));
    const auto filtered = tcsid::kalman_filter(id.model, prep.series);
    auto f = tcsid::forecast(id.model, filtered.back(), horizon);
    if (prep.scaling) {
        const auto& ch = prep.scaling->channels;
        for (Eigen::Index d = 0; d < f.predicted_outputs.cols(); ++d) {
            const double span = ch[static_cast<std::size_t>(d)].max - ch[static_cast<std::size_t>(d)].min;
            f.predicted_outputs.col(d) = f.predicted_outputs.col(d).array() * span + ch[static_cast<std::size_t>(d)].min;
            for (auto& c : f.output_covariances) {
                c.row(d) *= span;
                c.col(d) *= span;
            }
        }
    }
    if (o.format == "json") {
        write_file(dir / "forecast.json", tcsid::io::forecast_to_json(f).dump(2) + "\n");
    } else {
        write_file(dir / "forecast.csv", tcsid::io::forecast_to_csv(f));
    }
    json metrics{{"n", id.model.n()}, {"horizon", horizon}};
    if (eval) {
        tcsid::OnlineConfig cfg{o.window, rank_choice(o), refit};
        const Eigen::Index s = start > 0 ? start : prep.series.length() / 2;
        const auto ev = tcsid::online_forecast_eval(cfg, prep.series, s);
        metrics["eval"] = {{"start", ev.start},
                           {"rmse", ev.rmse},
                           {"persistence_rmse", ev.persistence_rmse},
                           {"refit_every", refit},
                           {"units", prep.scaling ? "scaled" : "input"}};
    }
    write_file(dir / "metrics.json", metrics.dump(2) + "\n");
    auto config = common_json(o);
    config["horizon"] = horizon;
    config["eval"] = eval;
    config["start"] = start;
    config["refit_every"] = refit;
    write_manifest(dir, "forecast", config, metrics);
    return 0;
}

// --- compare --------------------------------------------------------------------

int run_compare(const CommonOptions& o, const std::string& a_path, const std::string& b_path) {
    const auto dir = output_dir(o.output_dir);
    tcsid::AlignmentReport report;
    if (!a_path.empty() || !b_path.empty()) {
        if (a_path.empty() || b_path.empty()) {
            throw ConfigError("compare needs both --a and --b");
        }
        auto read = [&](const std::string& path) {
            std::ifstream in(path, std::ios::binary);
            if (!in) {
                throw ConfigError("embedding file not found: " + path);
            }
            std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
            if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
                return tcsid::io::embedding_from_json(json::parse(text));
            }
            return tcsid::io::embedding_from_csv(text, tcsid::EmbeddingSource::timecluster_pca, o.window);
        };
        report = tcsid::align_embeddings(read(a_path), read(b_path));
    } else {
        if (o.input.empty() || o.window < 1) {
            throw ConfigError("compare needs either --a/--b or --input with --window");
        }
        const auto prep = prepare(o);
        const auto dec = tcsid::decompose(tcsid::block_hankel(prep.series, o.window), rank_choice(o));
        if (dec.rank < 1) {
            throw tcsid::NumericalError("no singular value above the threshold");
        }
        report = tcsid::align_embeddings(tcsid::pca_embed(tcsid::trajectory_matrix(prep.series, o.window, 1), dec.rank, o.center),
                                         tcsid::hankel_embed(dec));
    }
    write_file(dir / "alignment.json", tcsid::io::alignment_to_json(report).dump(2) + "\n");
    auto config = common_json(o);
    config["a"] = a_path;
    config["b"] = b_path;
    write_manifest(dir, "compare", config, {{"residual", report.residual}});
    std::cout << "residual " << tcsid::io::format_number(report.residual) << "\n";
    return 0;
}

// --- serve ----------------------------------------------------------------------

int run_serve(const std::string& host, int port, const std::string& data_dir, const std::string& static_dir,
              const std::string& cors) {
    tcsid::service::Service service(data_dir.empty() ? std::nullopt : std::optional<fs::path>(data_dir));
    httplib::Server server;
    service.mount(server, cors);
    if (!static_dir.empty() && !server.set_mount_point("/", static_dir)) {
        throw ConfigError("static directory not found: " + static_dir);
    }
    std::cerr << "listening on " << host << ":" << port << "\n";
    if (!server.listen(host, port)) {
        throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tcsid: sliding-window embeddings, subspace identification and Kalman tools for time series"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tcsid::kVersion));

    GenerateOptions gen;
    auto* generate = app.add_subcommand("generate", "Write a seeded synthetic dataset");
    generate->add_option("--kind", gen.kind, "ar2 | double-periodic | periodic-ssm | exogenous")
        ->check(CLI::IsMember({"ar2", "double-periodic", "periodic-ssm", "exogenous"}));
    generate->add_option("--length,-T", gen.length, "Number of samples (generator default when omitted)");
    generate->add_option("--seed", gen.seed, "Random seed");
    generate->add_option("--output-dir,-o", gen.output_dir, "Directory for results");
    generate->add_option("--noise", gen.noise, "Noise standard deviation (observation noise for periodic-ssm)");
    generate->add_option("--phi1", gen.phi1, "AR(2) coefficient phi1");
    generate->add_option("--phi2", gen.phi2, "AR(2) coefficient phi2");
    generate->add_option("--f1", gen.f1, "First frequency (cycles/sample)");
    generate->add_option("--f2", gen.f2, "Second frequency (cycles/sample)");
    generate->add_option("--a1", gen.a1, "First amplitude");
    generate->add_option("--a2", gen.a2, "Second amplitude");
    generate->add_option("--theta", gen.theta, "Rotation angle per sample for periodic-ssm");
    generate->add_option("--q-sd", gen.q_sd, "Process noise standard deviation for periodic-ssm");
    generate->add_option("--r-sd", gen.r_sd, "Observation noise standard deviation for periodic-ssm");
    generate->add_option("--segment", gen.segment, "Step length for the exogenous input schedule");

    CommonOptions embed_opts;
    std::string embed_method = "timecluster";
    auto* embed = app.add_subcommand("embed", "Trajectory matrix, window embedding and singular spectrum");
    add_input_options(embed, embed_opts);
    add_model_options(embed, embed_opts, true);
    embed->add_flag("--center", embed_opts.center, "Mean-center the trajectory matrix before PCA");
    embed->add_option("--method", embed_method, "timecluster | subspace | both")
        ->check(CLI::IsMember({"timecluster", "subspace", "both"}));

    CommonOptions ident_opts;
    std::string inputs_path;
    auto* identify = app.add_subcommand("identify", "Identify a state-space model");
    add_input_options(identify, ident_opts);
    add_model_options(identify, ident_opts, false);
    identify->add_option("--inputs", inputs_path, "CSV of exogenous inputs aligned with --input");

    CommonOptions smooth_opts;
    std::string model_path;
    auto* smooth = app.add_subcommand("smooth", "Kalman-filter and RTS-smooth the state trajectory");
    add_input_options(smooth, smooth_opts);
    add_model_options(smooth, smooth_opts, false);
    smooth->add_option("--model", model_path, "Use this model JSON instead of identifying one");

    CommonOptions fc_opts;
    Eigen::Index horizon = 1;
    bool eval = false;
    Eigen::Index start = 0;
    Eigen::Index refit = 1;
    auto* fc = app.add_subcommand("forecast", "h-step Kalman forecast, optional one-step-ahead evaluation");
    add_input_options(fc, fc_opts);
    add_model_options(fc, fc_opts, false);
    fc->add_option("--horizon,-H", horizon, "Forecast horizon h")->required();
    fc->add_flag("--eval", eval, "Walk-forward one-step-ahead evaluation against the persistence baseline");
    fc->add_option("--start", start, "First evaluated index (default T/2)");
    fc->add_option("--refit-every", refit, "Re-identify the model every k steps during --eval");

    CommonOptions cmp_opts;
    std::string a_path;
    std::string b_path;
    auto* compare = app.add_subcommand("compare", "Procrustes alignment of two embeddings");
    compare->add_option("--a", a_path, "First embedding (CSV or JSON)");
    compare->add_option("--b", b_path, "Second embedding (CSV or JSON)");
    compare->add_option("--input,-i", cmp_opts.input, "Input CSV: compare both methods on it");
    compare->add_option("--has-header", cmp_opts.has_header, "Header row: auto | true | false");
    compare->add_option("--timestamp-column", cmp_opts.timestamp_column, "0-based timestamp column");
    compare->add_flag("--scale", cmp_opts.scale, "Min-max scale before embedding");
    compare->add_option("--detrend", cmp_opts.detrend, "none | linear | poly:<degree> | difference");
    compare->add_flag("--center", cmp_opts.center, "Mean-center before PCA");
    compare->add_option("--window,-L", cmp_opts.window, "Window length L");
    auto* cr = compare->add_option("--rank", cmp_opts.rank, "Fixed rank r");
    compare->add_option("--epsilon", cmp_opts.epsilon, "Relative singular-value threshold")->excludes(cr);
    compare->add_option("--output-dir,-o", cmp_opts.output_dir, "Directory for results");

    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir;
    std::string static_dir;
    std::string cors = "*";
    auto* serve = app.add_subcommand("serve", "Run the HTTP API for the explorer UI");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port");
    serve->add_option("--data-dir", data_dir, "Persist uploads and fitted models here");
    serve->add_option("--static-dir", static_dir, "Serve explorer assets from this directory");
    serve->add_option("--cors-origin", cors, "Access-Control-Allow-Origin value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*generate) return run_generate(gen);
        if (*embed) return run_embed(embed_opts, embed_method);
        if (*identify) return run_identify(ident_opts, inputs_path);
        if (*smooth) return run_smooth(smooth_opts, model_path);
        if (*fc) return run_forecast(fc_opts, horizon, eval, start, refit);
        if (*compare) return run_compare(cmp_opts, a_path, b_path);
        if (*serve) return run_serve(host, port, data_dir, static_dir, cors);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tcsid::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tcsid::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tcsid::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
