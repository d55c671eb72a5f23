#include "helpers.hpp"

#include "tcsid/service.hpp"

#include <catch_amalgamated.hpp>

#include <thread>

using namespace tcsid;
using namespace testing_support;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using nlohmann::json;

// ---------------------------------------------------------------------------
// io
// ---------------------------------------------------------------------------

TEST_CASE("numbers round-trip through text", "[io]") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
        CHECK(std::stod(io::format_number(v)) == v);
    }
}

TEST_CASE("model JSON round trip", "[io]") {
    auto m = ExogenousSpec::default_system();
    m.Q = 0.1 * Matrix::Identity(2, 2);
    m.R = 0.2 * Matrix::Identity(1, 1);
    const json j = io::model_to_json(m);
    CHECK(j.at("n") == 2);
    CHECK(j.at("m") == 1);
    const auto back = io::model_from_json(json::parse(j.dump()));
    CHECK(back.A == m.A);
    CHECK(back.B == m.B);
    CHECK(back.C == m.C);
    CHECK(back.D_mat == m.D_mat);
    CHECK(back.Q == m.Q);
    CHECK(back.R == m.R);

    const auto oo = rotation_model(0.3, 0.01, 0.1);
    const auto oo_back = io::model_from_json(io::model_to_json(oo));
    CHECK(oo_back.m() == 0);
    CHECK(oo_back.A == oo.A);
    REQUIRE_THROWS_AS(io::model_from_json(json{{"n", 2}}), ParseError);
}

TEST_CASE("trajectory JSON envelope", "[io]") {
    const json j = io::trajectory_to_json(trajectory_matrix(example_series(), 2));
    CHECK(j.at("rows") == 3);
    CHECK(j.at("cols") == 4);
    CHECK(j.at("L") == 2);
    CHECK(j.at("s") == 1);
    CHECK(j.at("D") == 2);
    CHECK(j.at("data") == std::vector<double>{1, 10, 2, 20, 2, 20, 3, 30, 3, 30, 4, 40});
    const json h = io::hankel_to_json(block_hankel(example_series(), 2));
    CHECK(h.at("data") == std::vector<double>{1, 2, 3, 10, 20, 30, 2, 3, 4, 20, 30, 40});
    CHECK(io::matrix_to_csv(trajectory_matrix(example_series(), 2).data) == "1,10,2,20\n2,20,3,30\n3,30,4,40\n");
}

TEST_CASE("embedding CSV and JSON round trips", "[io]") {
    const auto z = trajectory_matrix(TimeSeries(random_matrix(30, 2, 1)), 4, 3);
    const Embedding e = pca_embed(z, 3);
    const auto from_json = io::embedding_from_json(json::parse(io::embedding_to_json(e).dump()));
    CHECK(from_json.coords == e.coords);
    CHECK(from_json.stride == 3);
    CHECK(from_json.window_length == 4);
    CHECK(from_json.source == EmbeddingSource::timecluster_pca);
    const std::string csv = io::embedding_to_csv(e);
    CHECK(csv.rfind("window_start,c1,c2,c3\n0,", 0) == 0);
    const auto from_csv = io::embedding_from_csv(csv, EmbeddingSource::timecluster_pca, 4);
    CHECK(from_csv.coords == e.coords);
    CHECK(from_csv.stride == 3);
}

TEST_CASE("forecast CSV layout and region JSON", "[io]") {
    KalmanState last;
    last.x_filt = Vector::Ones(2);
    last.P_filt = Matrix::Identity(2, 2);
    const auto f = forecast(rotation_model(0.2, 0.1, 0.1), last, 3);
    const std::string csv = io::forecast_to_csv(f);
    CHECK(csv.rfind("step,y_hat_1,var_1\n1,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    const auto ball = io::region_from_json(json{{"center", {1.0, 2.0}}, {"radius", 0.5}});
    CHECK(ball.kind == Region::Kind::ball);
    CHECK(ball.contains((Vector(2) << 1.2, 2.1).finished()));
    const auto box = io::region_from_json(json{{"min", {0.0, 0.0}}, {"max", {1.0, 1.0}}});
    CHECK(box.contains((Vector(2) << 0.5, 1.0).finished()));
    CHECK_FALSE(box.contains((Vector(2) << 0.5, 1.1).finished()));
    REQUIRE_THROWS_AS(io::region_from_json(json{{"radius", 1}}), ParseError);
}

// ---------------------------------------------------------------------------
// service, direct calls
// ---------------------------------------------------------------------------

namespace {

std::string sinusoid_csv(Eigen::Index length, double period, double offset = 0.0) {
    std::string out = "y\n";
    for (Eigen::Index t = 0; t < length; ++t) {
        out += io::format_number(offset + std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / period)) + "\n";
    }
    return out;
}

} // namespace

TEST_CASE("upload and describe", "[service]") {
    service::Service svc;
    const auto r = svc.upload(example_csv());
    REQUIRE(r.status == 201);
    CHECK(r.body.at("T") == 4);
    CHECK(r.body.at("D") == 2);
    const std::string id = r.body.at("id");
    CHECK(svc.get_dataset(id).status == 200);
    const auto again = svc.upload(example_csv());
    CHECK(again.body.at("id") != r.body.at("id"));
    CHECK(svc.upload("").status == 400);
    CHECK(svc.upload("  \n").status == 400);
    const auto bad = svc.upload("1,2\n3,x\n");
    CHECK(bad.status == 400);
    CHECK_THAT(bad.body.at("error").get<std::string>(), ContainsSubstring("row 2"));
    CHECK(svc.get_dataset("nope").status == 404);
}

TEST_CASE("embedding endpoint", "[service]") {
    service::Service svc;
    const std::string id = svc.upload(example_csv()).body.at("id");
    SECTION("rank 2 on the example gives three window rows") {
        const auto r = svc.embedding(id, {{"L", "2"}, {"rank", "2"}});
        REQUIRE(r.status == 200);
        CHECK(r.body.at("coords").size() == 3);
        CHECK(r.body.at("window_starts") == std::vector<int>{0, 1, 2});
        CHECK(r.body.at("singular_values").size() == 3);
    }
    SECTION("both methods agree up to alignment") {
        const std::string ar = svc.upload(io::timeseries_to_csv(gen_ar2(Ar2Spec{1.5, -0.9, 1.0, 500}, 2).series)).body.at("id");
        const auto a = svc.embedding(ar, {{"L", "2"}, {"rank", "2"}, {"method", "timecluster"}, {"scale", "false"}});
        const auto b = svc.embedding(ar, {{"L", "2"}, {"rank", "2"}, {"method", "subspace"}, {"scale", "false"}});
        REQUIRE(a.status == 200);
        REQUIRE(b.status == 200);
        CHECK(a.body.at("align_residual").get<double>() < 1e-8);
        CHECK(b.body.at("align_residual").get<double>() < 1e-8);
        const auto e1 = io::embedding_from_json(a.body);
        const auto e2 = io::embedding_from_json(b.body);
        CHECK(align_embeddings(e1, e2).residual < 1e-8);
    }
    SECTION("repeat requests are byte-identical") {
        const auto a = svc.embedding(id, {{"L", "2"}, {"epsilon", "0.001"}});
        const auto b = svc.embedding(id, {{"L", "2"}, {"epsilon", "0.001"}});
        CHECK(a.body.dump() == b.body.dump());
    }
    SECTION("invalid parameters") {
        CHECK(svc.embedding(id, {{"L", "5"}}).status == 422);
        CHECK(svc.embedding(id, {{"L", "0"}}).status == 422);
        CHECK(svc.embedding(id, {}).status == 422);
        CHECK(svc.embedding(id, {{"L", "2"}, {"rank", "9"}}).status == 422);
        CHECK(svc.embedding(id, {{"L", "2"}, {"rank", "1"}, {"epsilon", "0.1"}}).status == 422);
        CHECK(svc.embedding(id, {{"L", "2"}, {"method", "tsne"}}).status == 422);
        CHECK(svc.embedding(id, {{"L", "abc"}}).status == 422);
        CHECK(svc.embedding("missing", {{"L", "2"}}).status == 404);
    }
}

TEST_CASE("selection endpoint", "[service]") {
    service::Service svc;
    const std::string id = svc.upload(example_csv()).body.at("id");
    auto sel = [&](json body) { return svc.selection(id, body); };
    CHECK(sel({{"L", 2}, {"window_indices", {0}}}).body.at("time_ranges") == json::array({json::array({0, 1})}));
    const auto both = sel({{"L", 2}, {"window_indices", {0, 1}}});
    CHECK(both.body.at("merged") == json::array({json::array({0, 2})}));
    CHECK(sel({{"L", 2}, {"time_range", {1, 1}}}).body.at("window_indices") == json::array({0, 1}));
    CHECK(sel({{"L", 2}, {"window_indices", json::array()}}).body.at("time_ranges").empty());
    CHECK(sel({{"L", 2}, {"window_indices", {3}}}).status == 422);
    CHECK(sel({{"L", 2}, {"time_range", {0, 4}}}).status == 422);
    CHECK(sel({{"window_indices", {0}}}).status == 422);
    CHECK(svc.selection("zz", {{"L", 2}}).status == 404);

    // windows -> ranges -> windows returns a superset
    const std::string big = svc.upload(sinusoid_csv(50, 7)).body.at("id");
    const std::vector<int> picked{3, 4, 10, 31};
    const auto ranges = svc.selection(big, {{"L", 5}, {"window_indices", picked}}).body.at("time_ranges");
    std::set<int> recovered;
    for (const auto& r : ranges) {
        const auto back = svc.selection(big, {{"L", 5}, {"time_range", r}});
        for (int w : back.body.at("window_indices")) {
            recovered.insert(w);
        }
    }
    for (int w : picked) {
        CHECK(recovered.count(w) == 1);
    }
}

TEST_CASE("forecast endpoint", "[service]") {
    service::Service svc;
    const std::string id = svc.upload(sinusoid_csv(200, 20.0, 5.0)).body.at("id");
    SECTION("h equal to the period returns to the last value, in original units") {
        const auto r = svc.forecast(id, {{"L", 6}, {"rank", 3}, {"h", 20}});
        REQUIRE(r.status == 200);
        const auto out = r.body.at("predicted_outputs");
        REQUIRE(out.size() == 20);
        const double last = 5.0 + std::cos(2.0 * std::numbers::pi * 199.0 / 20.0);
        CHECK_THAT(out[19][0].get<double>(), WithinAbs(last, 1e-6));
        CHECK(r.body.at("units") == "original");
    }
    SECTION("cached fits are reused") {
        const auto before = svc.fits_computed();
        svc.forecast(id, {{"L", 6}, {"rank", 3}, {"h", 2}});
        svc.forecast(id, {{"L", 6}, {"rank", 3}, {"h", 5}});
        CHECK(svc.fits_computed() == before + 1);
        const auto a = svc.forecast(id, {{"L", 6}, {"rank", 3}, {"h", 5}});
        const auto b = svc.forecast(id, {{"L", 6}, {"rank", 3}, {"h", 5}});
        CHECK(a.body.dump() == b.body.dump());
    }
    SECTION("errors") {
        CHECK(svc.forecast(id, {{"L", 6}, {"rank", 3}, {"h", 0}}).status == 422);
        CHECK(svc.forecast(id, {{"L", 6}, {"rank", 3}}).status == 422);
        CHECK(svc.forecast("nope", {{"L", 6}, {"h", 2}}).status == 404);
    }
}

TEST_CASE("region-query endpoint", "[service]") {
    service::Service svc;
    const std::string id = svc.upload(sinusoid_csv(400, 40.0)).body.at("id");
    const json base{{"L", 8}, {"rank", 2}, {"scale", false}};
    SECTION("antipodal region is reached after about half a period") {
        json body = base;
        body["horizon"] = 100;
        // the service fits the same data, so an identical local fit gives the current state
        const TimeSeries ts = load_csv_string(sinusoid_csv(400, 40.0));
        const auto id_model = identify_output_only(ts, 8, RankChoice::fixed(2));
        const auto last = kalman_filter(id_model.model, ts).back();
        const Vector anti = -last.x_filt;
        body["region"] = {{"center", {anti(0), anti(1)}}, {"radius", 0.05 * last.x_filt.norm()}};
        const auto r = svc.region_query(id, body);
        REQUIRE(r.status == 200);
        REQUIRE(r.body.at("steps_until_entry").is_number_integer());
        CHECK(std::abs(r.body.at("steps_until_entry").get<int>() - 20) <= 1);
    }
    SECTION("unreachable region gives null") {
        json body = base;
        body["horizon"] = 500;
        body["region"] = {{"center", {1e3, 1e3}}, {"radius", 1.0}};
        const auto r = svc.region_query(id, body);
        REQUIRE(r.status == 200);
        CHECK(r.body.at("steps_until_entry").is_null());
    }
    SECTION("bad horizon or region") {
        json body = base;
        body["region"] = {{"center", {0.0, 0.0}}, {"radius", 1.0}};
        body["horizon"] = 0;
        CHECK(svc.region_query(id, body).status == 422);
        body["horizon"] = "ten";
        CHECK(svc.region_query(id, body).status == 422);
        body["horizon"] = 5;
        body["region"] = {{"center", {0.0, 0.0, 0.0}}, {"radius", 1.0}};
        CHECK(svc.region_query(id, body).status == 422);
        body.erase("region");
        CHECK(svc.region_query(id, body).status == 422);
    }
}

TEST_CASE("persistence directory restores datasets", "[service]") {
    const auto dir = scratch_dir("service_persist");
    std::string id;
    {
        service::Service svc(dir);
        id = svc.upload(example_csv()).body.at("id");
        REQUIRE(svc.forecast(id, {{"L", 2}, {"rank", 1}, {"h", 1}}).status == 200);
    }
    service::Service restored(dir);
    const auto r = restored.get_dataset(id);
    REQUIRE(r.status == 200);
    CHECK(r.body.at("T") == 4);
    const std::string next = restored.upload(example_csv()).body.at("id");
    CHECK(next != id);
    bool has_model = false;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        has_model = has_model || e.path().filename().string().find(".model.") != std::string::npos;
    }
    CHECK(has_model);
}

TEST_CASE("concurrent identical requests compute once", "[service]") {
    service::Service svc;
    const std::string id = svc.upload(sinusoid_csv(300, 15.0)).body.at("id");
    std::vector<std::thread> threads;
    std::vector<std::string> bodies(8);
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&, i] { bodies[static_cast<std::size_t>(i)] = svc.forecast(id, {{"L", 5}, {"rank", 2}, {"h", 3}}).body.dump(); });
    }
    for (auto& t : threads) {
        t.join();
    }
    CHECK(svc.fits_computed() == 1);
    for (const auto& b : bodies) {
        CHECK(b == bodies.front());
    }
}

// ---------------------------------------------------------------------------
// service over HTTP
// ---------------------------------------------------------------------------

TEST_CASE("HTTP round trip on loopback", "[service][http]") {
    service::Service svc;
    httplib::Server server;
    svc.mount(server, "http://localhost:5173");
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto up = client.Post("/datasets", example_csv(), "text/csv");
    REQUIRE(up);
    CHECK(up->status == 201);
    CHECK(up->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");
    const json created = json::parse(up->body);
    const std::string id = created.at("id");
    CHECK(created.at("T") == 4);

    auto emb = client.Get("/datasets/" + id + "/embedding?L=2&rank=2&method=subspace");
    REQUIRE(emb);
    CHECK(emb->status == 200);
    CHECK(json::parse(emb->body).at("coords").size() == 3);

    auto sel = client.Post("/datasets/" + id + "/selection", R"({"L":2,"window_indices":[0,1]})", "application/json");
    REQUIRE(sel);
    CHECK(json::parse(sel->body).at("merged") == json::array({json::array({0, 2})}));

    auto fc = client.Post("/datasets/" + id + "/forecast", R"({"L":2,"rank":1,"h":0})", "application/json");
    REQUIRE(fc);
    CHECK(fc->status == 422);

    auto missing = client.Post("/datasets/none/forecast", R"({"L":2,"h":1})", "application/json");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    auto garbage = client.Post("/datasets/" + id + "/forecast", "{not json", "application/json");
    REQUIRE(garbage);
    CHECK(garbage->status == 400);

    auto empty = client.Post("/datasets", "", "text/csv");
    REQUIRE(empty);
    CHECK(empty->status == 400);

    httplib::MultipartFormDataItems items{{"file", example_csv(), "example.csv", "text/csv"}};
    auto multi = client.Post("/datasets", items);
    REQUIRE(multi);
    CHECK(multi->status == 201);

    auto spec = client.Get("/spec");
    REQUIRE(spec);
    CHECK(json::parse(spec->body).at("paths").contains("/datasets/{id}/region-query"));

    auto options = client.Options("/datasets");
    REQUIRE(options);
    CHECK(options->status == 204);

    server.stop();
    worker.join();
}
