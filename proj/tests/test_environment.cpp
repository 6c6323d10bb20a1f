#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace discussnav;
using namespace testing;

TEST_CASE("sector_of") {
  CHECK(sector_of(0.0) == 0);
  CHECK(sector_of(95.0) == 3);
  CHECK(sector_of(29.999) == 0);
  CHECK(sector_of(30.0) == 1);
  CHECK(sector_of(359.9) == 11);
  CHECK_THROWS_AS(sector_of(360.0), std::invalid_argument);
  CHECK_THROWS_AS(sector_of(-0.5), std::invalid_argument);
}

TEST_CASE("sectors partition the circle") {
  for (int i = 0; i < 36000; ++i) {
    const double h = i / 100.0;
    int hits = 0;
    for (int k = 0; k < kSectorCount; ++k)
      if (h >= 30.0 * k && h < 30.0 * (k + 1)) ++hits;
    REQUIRE(hits == 1);
    REQUIRE(h >= 30.0 * sector_of(h));
    REQUIRE(h < 30.0 * (sector_of(h) + 1));
  }
}

TEST_CASE("heading is clockwise from +y") {
  CHECK(heading_between({0, 0, 0}, {0, 1, 0}) == doctest::Approx(0.0));
  CHECK(heading_between({0, 0, 0}, {1, 0, 0}) == doctest::Approx(90.0));
  CHECK(heading_between({0, 0, 0}, {0, -1, 0}) == doctest::Approx(180.0));
  CHECK(heading_between({0, 0, 0}, {-1, 0, 0}) == doctest::Approx(270.0));
}

namespace {

EnvGraph fan_world() {
  // Two edges in sector 3 (95 and 100 degrees) and one in sector 4.
  EnvGraph g;
  g.add_viewpoint("o", {0, 0, 0});
  auto at = [](double heading, double dist) {
    const double r = heading * 3.14159265358979323846 / 180.0;
    return Position{dist * std::sin(r), dist * std::cos(r), 0};
  };
  g.add_viewpoint("near", at(95, 2));
  g.add_viewpoint("far", at(100, 4));
  g.add_viewpoint("side", at(125, 3));
  for (const char* v : {"near", "far", "side"})
    g.add_edge({"o", v, heading_between(g.position("o"), g.position(v)), euclidean(g.position("o"), g.position(v))});
  for (const char* v : {"near", "far", "side"})
    g.add_edge({v, "o", heading_between(g.position(v), g.position("o")), euclidean(g.position(v), g.position("o"))});
  return g;
}

}  // namespace

TEST_CASE("candidates_in_sector") {
  const EnvGraph g = fan_world();
  CHECK(candidates_in_sector(g, "o", 3) == std::vector<ViewpointId>{"near", "far"});
  CHECK(candidates_in_sector(g, "o", 4) == std::vector<ViewpointId>{"side"});
  CHECK(candidates_in_sector(g, "o", 0).empty());

  EnvGraph lone;
  lone.add_viewpoint("x", {0, 0, 0});
  CHECK(candidates_in_sector(lone, "x", 3).empty());

  // exhaustive check against the definition
  for (int s = 0; s < kSectorCount; ++s) {
    std::vector<const Edge*> in;
    for (const Edge& e : g.edges())
      if (e.from == "o" && sector_of(e.heading) == s) in.push_back(&e);
    std::sort(in.begin(), in.end(), [](const Edge* a, const Edge* b) {
      return a->distance != b->distance ? a->distance < b->distance : a->to < b->to;
    });
    const auto got = candidates_in_sector(g, "o", s);
    REQUIRE(got.size() == in.size());
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(got[i] == in[i]->to);
  }
}

TEST_CASE("candidate ties break by id") {
  EnvGraph g;
  g.add_viewpoint("o", {0, 0, 0});
  g.add_viewpoint("z", {0.5, 2, 0});
  g.add_viewpoint("m", {0.5, 2, 1e-9});
  g.add_edge({"o", "z", heading_between({0, 0, 0}, {0.5, 2, 0}), euclidean({0, 0, 0}, {0.5, 2, 0})});
  g.add_edge({"o", "m", heading_between({0, 0, 0}, {0.5, 2, 0}), euclidean({0, 0, 0}, {0.5, 2, 0})});
  CHECK(candidates_in_sector(g, "o", 0) == std::vector<ViewpointId>{"m", "z"});
}

TEST_CASE("geodesic") {
  const EnvGraph g = line_world();
  CHECK(geodesic(g, "a", "a") == 0.0);
  CHECK(geodesic(g, "a", "c") == doctest::Approx(4.0));
  CHECK(geodesic(g, "a", "d") == doctest::Approx(4.0));

  EnvGraph split;
  split.add_viewpoint("p", {0, 0, 0});
  split.add_viewpoint("q", {5, 5, 0});
  CHECK(geodesic(split, "p", "q") == kUnreachable);
  CHECK_FALSE(shortest_path(split, "p", "q").has_value());
}

TEST_CASE("geodesic matches brute force on generated graphs") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto w = generate_synthetic_world(seed, 3 + static_cast<int>(seed % 10), 1);
    for (const auto& [a, pa] : w.graph.viewpoints())
      for (const auto& [b, pb] : w.graph.viewpoints())
        REQUIRE(std::abs(geodesic(w.graph, a, b) - brute_geodesic(w.graph, a, b)) <= 1e-9);
  }
}

TEST_CASE("compute_metrics examples") {
  SUBCASE("perfect episode on a 10 m path") {
    EnvGraph g;
    for (int i = 0; i <= 5; ++i) g.add_viewpoint("p" + std::to_string(i), {0, 2.0 * i, 0});
    for (int i = 0; i < 5; ++i) {
      const auto a = "p" + std::to_string(i), b = "p" + std::to_string(i + 1);
      g.add_edge({a, b, 0.0, 2.0});
      g.add_edge({b, a, 180.0, 2.0});
    }
    Episode e{"e", "x", "p0", "p5", {"p0", "p1", "p2", "p3", "p4", "p5"}, 0};
    bind_episode(g, e);
    const auto m = compute_metrics(g, e, e.reference_path);
    CHECK(m.trajectory_length == doctest::Approx(10.0));
    CHECK(m.navigation_error == 0.0);
    CHECK(m.success == 1.0);
    CHECK(m.oracle_success == 1.0);
    CHECK(m.spl == 1.0);
  }
  SUBCASE("one hop past the goal") {
    EnvGraph g;
    for (int i = 0; i <= 4; ++i) g.add_viewpoint("p" + std::to_string(i), {0, 2.0 * i, 0});
    for (int i = 0; i < 4; ++i) {
      const auto a = "p" + std::to_string(i), b = "p" + std::to_string(i + 1);
      g.add_edge({a, b, 0.0, 2.0});
      g.add_edge({b, a, 180.0, 2.0});
    }
    Episode e{"e", "x", "p0", "p3", {"p0", "p1", "p2", "p3"}, 0};
    bind_episode(g, e);
    const auto m = compute_metrics(g, e, {"p0", "p1", "p2", "p3", "p4"});
    CHECK(m.navigation_error == doctest::Approx(2.0));
    CHECK(m.success == 1.0);
    CHECK(m.trajectory_length == doctest::Approx(8.0));
    CHECK(m.spl == doctest::Approx(0.75));
    const auto b = brute_metrics(g, e, {"p0", "p1", "p2", "p3", "p4"});
    CHECK(b.spl == doctest::Approx(m.spl));
  }
  SUBCASE("disconnected step") {
    const EnvGraph g = line_world();
    const Episode e = line_episode(g);
    CHECK_THROWS_AS(compute_metrics(g, e, {"a", "c"}), InvalidTrajectory);
    CHECK_THROWS_AS(compute_metrics(g, e, {"b", "c"}), InvalidTrajectory);
  }
  SUBCASE("zero-length episode") {
    const EnvGraph g = line_world();
    Episode e{"e", "x", "a", "a", {"a"}, 0};
    bind_episode(g, e);
    const auto m = compute_metrics(g, e, {"a"});
    CHECK(m.spl == 1.0);
    CHECK(m.success == 1.0);
  }
}

TEST_CASE("success boundary") {
  auto report_for = [](double ne) {
    EnvGraph g;
    g.add_viewpoint("s", {0, 0, 0});
    g.add_viewpoint("t", {0, ne, 0});
    g.add_edge({"s", "t", 0.0, ne});
    g.add_edge({"t", "s", 180.0, ne});
    Episode e{"e", "x", "s", "t", {"s", "t"}, 0};
    bind_episode(g, e);
    return compute_metrics(g, e, {"s"});
  };
  CHECK(report_for(2.999).success == 1.0);
  CHECK(report_for(3.0).success == 0.0);
  CHECK(report_for(3.0).oracle_success == 0.0);
}

TEST_CASE("metric ordering holds on random walks") {
  std::mt19937_64 rng(99);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto w = generate_synthetic_world(seed, 8, 3);
    for (const auto& e : w.episodes) {
      const auto walk = random_walk(w.graph, e.start, static_cast<int>(rng() % 6), rng);
      const auto m = compute_metrics(w.graph, e, walk);
      CHECK(m.spl <= m.success);
      CHECK(m.success <= m.oracle_success);
      CHECK(m.trajectory_length >= 0);
      CHECK(m.navigation_error >= 0);
    }
  }
}

TEST_CASE("reference paths score SPL 1 exactly") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto w = generate_synthetic_world(seed, 12, 4);
    for (const auto& e : w.episodes) {
      REQUIRE(compute_metrics(w.graph, e, e.reference_path).spl == 1.0);
      CHECK(std::abs(e.shortest_length - brute_geodesic(w.graph, e.start, e.goal)) <= 1e-9);
    }
  }
}

TEST_CASE("generator") {
  const auto a = generate_synthetic_world(1, 10, 5);
  const auto b = generate_synthetic_world(1, 10, 5);
  CHECK(serialize_world(a.graph) == serialize_world(b.graph));
  CHECK(serialize_episodes(a.episodes) == serialize_episodes(b.episodes));
  CHECK(serialize_world(a.graph) != serialize_world(generate_synthetic_world(2, 10, 5).graph));
  for (const auto& e : a.episodes) {
    CHECK(geodesic(a.graph, e.start, e.goal) < kUnreachable);
    CHECK(e.reference_path.front() == e.start);
    CHECK(e.reference_path.back() == e.goal);
  }
  // one outgoing edge per sector at most
  for (const auto& [v, p] : a.graph.viewpoints())
    for (int s = 0; s < kSectorCount; ++s) CHECK(candidates_in_sector(a.graph, v, s).size() <= 1);
  CHECK_NOTHROW(generate_synthetic_world(5, 2, 1));
}

TEST_CASE("world files") {
  const EnvGraph g = line_world();
  const EnvGraph back = parse_world(serialize_world(g));
  CHECK(serialize_world(back) == serialize_world(g));

  SUBCASE("minimal world") {
    const EnvGraph m = parse_world(R"({"viewpoints": {"a": [0,0,0], "b": [0,2,0]},
      "edges": [{"from": "a", "to": "b", "heading": 0.0, "distance": 2.0}], "observations": []})");
    REQUIRE(m.edges().size() == 1);
    CHECK(sector_of(m.edges()[0].heading) == 0);
  }
  SUBCASE("heading 360 rejected") {
    CHECK_THROWS_AS(parse_world(R"({"viewpoints": {"a": [0,0,0], "b": [0,2,0]},
      "edges": [{"from": "a", "to": "b", "heading": 360.0, "distance": 2.0}], "observations": []})"),
                    LoadError);
  }
  SUBCASE("dangling endpoint named") {
    try {
      parse_world(R"({"viewpoints": {"a": [0,0,0]},
        "edges": [{"from": "a", "to": "ghost", "heading": 0.0, "distance": 2.0}], "observations": []})");
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
  }
  SUBCASE("distance mismatch rejected") {
    CHECK_THROWS_AS(parse_world(R"({"viewpoints": {"a": [0,0,0], "b": [0,2,0]},
      "edges": [{"from": "a", "to": "b", "heading": 0.0, "distance": 2.5}], "observations": []})"),
                    LoadError);
  }
  SUBCASE("not json") { CHECK_THROWS_AS(parse_world("{nope"), LoadError); }
  SUBCASE("episode with unreachable goal") {
    const EnvGraph w = parse_world(R"({"viewpoints": {"a": [0,0,0], "b": [0,2,0]},
      "edges": [{"from": "a", "to": "b", "heading": 0.0, "distance": 2.0}], "observations": []})");
    CHECK_THROWS_AS(parse_episodes(R"({"id":"e","instruction":"x","start":"b","goal":"a","reference_path":["b","a"]})",
                                   w),
                    LoadError);
  }
  SUBCASE("episode round trip") {
    const std::vector<Episode> eps{line_episode(g)};
    const auto back_eps = parse_episodes(serialize_episodes(eps), g);
    REQUIRE(back_eps.size() == 1);
    CHECK(back_eps[0].reference_path == eps[0].reference_path);
    CHECK(back_eps[0].shortest_length == doctest::Approx(4.0));
  }
}
