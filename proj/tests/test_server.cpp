#include <doctest.h>

#include <chrono>
#include <sstream>
#include <thread>

#include "qgraph/commands.hpp"
#include "qgraph/config.hpp"
#include "qgraph/server.hpp"
#include "support.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that breaks Eigen headers.
#include <httplib.h>

using namespace qgraph;
using namespace qgraph::testing;
using nlohmann::json;

namespace {

// Session plus a listening server on an ephemeral port.
class Harness {
 public:
  explicit Harness(MetricGraph g) : session_(std::move(g)) {
    session_.install(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~Harness() {
    server_.stop();
    thread_.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(120, 0);
    return c;
  }

 private:
  Session session_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

json body(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

json run_config(int steps, const Goal& goal = MaximizeLambda1{}) {
  RunConfig c;
  c.name = "api";
  c.initial = normalize(families::path(3));
  c.goal = goal;
  c.steps = steps;
  return config_to_json(c);
}

json wait_done(httplib::Client& c) {
  for (int i = 0; i < 600; ++i) {
    json s = body(c.Get("/api/run/state"));
    if (s["state"] != "running") return s;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  FAIL("run did not finish");
  return {};
}

}  // namespace

TEST_CASE("graph endpoints") {
  Harness h(load_fixture("triangle"));
  auto c = h.client();
  CHECK(body(c.Get("/api/graph")) == graph_to_json(load_fixture("triangle")));

  const json split = {{"vertices", 4},
                      {"edges", {{{"u", 0}, {"v", 1}, {"len", 1}}, {{"u", 2}, {"v", 3}, {"len", 1}}}}};
  auto r = c.Put("/api/graph", split.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);
  const json err = json::parse(r->body);
  CHECK(err["violations"][0]["kind"] == "Disconnected");
  CHECK(err.contains("error"));

  r = c.Put("/api/graph", "{not json", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);

  const MetricGraph star = load_fixture("star3");
  r = c.Put("/api/graph", graph_to_json(star).dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(body(c.Get("/api/graph")) == graph_to_json(star));
}

TEST_CASE("plot and spectrum endpoints match the shared core") {
  Harness h(load_fixture("triangle"));
  auto c = h.client();

  auto r = c.Get("/api/dk?k0=0&k1=4pi&n=1000&format=csv");
  REQUIRE(r);
  CHECK(r->status == 200);
  const MetricGraph tri = prepare_graph(load_fixture("triangle"), {});
  CHECK(r->body == secular_csv(plot_dk(tri, parse_k_range("0:4pi:1000"))));

  const json dk = body(c.Get("/api/dk?k0=0&k1=4pi&n=200"));
  CHECK(dk == dk_to_json(plot_dk(tri, {0, 4 * pi, 200})));
  CHECK(dk["k"].size() == 200);

  r = c.Post("/api/spectrum", json{{"k_max", "13"}}.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  json expected = spectrum_to_json(spectrum_of(tri, 13, ModeRequest::Auto).spectrum);
  expected["warnings"] = json::array();
  CHECK(json::parse(r->body) == expected);

  // Symbolic graph: contraction through a zero binding yields the triangle.
  r = c.Put("/api/graph", graph_to_json(load_fixture("tadpole")).dump(), "application/json");
  REQUIRE(r->status == 200);
  r = c.Get("/api/dk?bind=c1=pi,c2=0&k0=0&k1=4pi&n=1000&format=csv");
  REQUIRE(r);
  CHECK(r->body == secular_csv(plot_dk(tri, parse_k_range("0:4pi:1000"))));

  r = c.Get("/api/dk?bind=c1=pi&k1=4pi");
  REQUIRE(r);
  CHECK(r->status == 400);
  CHECK(json::parse(r->body)["error"].get<std::string>().find("unbound parameter c2") != std::string::npos);

  r = c.Post("/api/spectrum", json{{"mode", "magic"}}.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);
}

TEST_CASE("run lifecycle and goal replacement") {
  Harness h(load_fixture("triangle"));
  auto c = h.client();

  json cfg = run_config(0);
  auto r = c.Post("/api/run", cfg.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);

  CHECK(c.Post("/api/run/step")->status == 409);
  CHECK(c.Post("/api/run/stop")->status == 409);

  cfg = run_config(4);
  cfg["paused"] = true;
  r = c.Post("/api/run", cfg.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 201);
  CHECK(json::parse(r->body)["state"] == "paused");
  CHECK(c.Post("/api/run", cfg.dump(), "application/json")->status == 409);
  CHECK(c.Post("/api/run/pause")->status == 409);

  r = c.Post("/api/run/step");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body)["goal"] == "max_lambda1");

  const json target = goal_to_json(MinimizeDistance{{{0, pi * pi, 4 * pi * pi}, DistanceSpace::Lambda}});
  r = c.Put("/api/run/goal", json{{"goal", target}}.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body)["phase"] == 1);

  const json second = body(c.Post("/api/run/step"));
  CHECK(second["phase_start"] == "goal_replaced");
  CHECK(second["phase"] == 1);
  const auto lambdas = second["lambda"].get<std::vector<double>>();
  CHECK(second["score"].get<double>() ==
        doctest::Approx(spectral_distance(lambdas, {{0, pi * pi, 4 * pi * pi}, DistanceSpace::Lambda})));

  // Cursor polling returns only new steps.
  const json s = body(c.Get("/api/run/state?since=1"));
  CHECK(s["cursor"] == 2);
  CHECK(s["steps"].size() == 1);
  CHECK(s["steps"][0]["step"] == 1);
  CHECK(s["steps_total"] == 4);

  CHECK(c.Post("/api/run/resume")->status == 200);
  const json done = wait_done(c);
  CHECK(done["state"] == "done");
  CHECK(done["cursor"] == 4);
  CHECK(c.Post("/api/run/step")->status == 409);
  CHECK(c.Put("/api/run/goal", target.dump(), "application/json")->status == 409);

  r = c.Get("/api/run/log");
  REQUIRE(r);
  std::istringstream in(r->body);
  int n = 0;
  for (std::string line; std::getline(in, line);) {
    const json j = json::parse(line);
    CHECK(j["type"] == (n == 0 ? "run" : "step"));
    ++n;
  }
  CHECK(n == 5);

  // A finished session accepts a new run.
  CHECK(c.Post("/api/run", run_config(1).dump(), "application/json")->status == 201);
  CHECK(wait_done(c)["state"] == "done");
}

TEST_CASE("stopping a running run") {
  Harness h(load_fixture("triangle"));
  auto c = h.client();
  REQUIRE(c.Post("/api/run", run_config(50, MaximizeRatio{}).dump(), "application/json")->status == 201);
  auto r = c.Post("/api/run/pause");
  REQUIRE(r);
  if (r->status == 200) {
    CHECK(json::parse(r->body)["state"] == "paused");
    CHECK(c.Post("/api/run/resume")->status == 200);
  }
  r = c.Post("/api/run/stop");
  REQUIRE(r);
  CHECK(r->status == 200);
  const json s = body(c.Get("/api/run/state"));
  CHECK(s["state"] == "done");
  CHECK(s["cursor"].get<int>() < 50);
}

TEST_CASE("HTTP and CLI runs produce the same steps") {
  Harness h(load_fixture("triangle"));
  auto c = h.client();
  const json cfg = run_config(3);
  REQUIRE(c.Post("/api/run", cfg.dump(), "application/json")->status == 201);
  const json s = wait_done(c);
  const RunLog log = run(config_from_json(cfg));
  REQUIRE(s["steps"].size() == log.steps.size());
  for (std::size_t i = 0; i < log.steps.size(); ++i) CHECK(s["steps"][i] == step_to_json(log.steps[i]));
}
