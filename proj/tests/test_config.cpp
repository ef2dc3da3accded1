#include <doctest.h>

#include "netobs/config.hpp"

using namespace netobs;

TEST_CASE("config round trip is bit-exact") {
    RunConfig c;
    c.plant = Plant(Matrix{{-2.5, 0.1}, {0.04, -3.0}}, Matrix{{1.0, 2.0}});
    c.graph = Digraph::all_to_all(2);
    GainSchedule k(2, 2, 1);
    k.set(1, 1, Matrix{{1.0 / 3.0}, {-0.16}});
    k.set(1, 2, Matrix{{0.1 + 0.2}, {1e-17}});
    k.set(2, 1, Matrix{{-8.0142}, {3.5198}});
    k.set(2, 2, Matrix{{2.0}, {0.2883}});
    c.gains = k;
    c.K_L = Matrix{{1.5}, {-0.16}};
    c.task.sigma = 2.5;
    c.task.noise = NoiseSpec::white(0.3, 0xFFFFFFFFFFFFFFFFull, NoiseSharing::independent);
    c.task.N_set = std::vector<std::size_t>{1, 2, 3};
    c.output.directory = "out";

    auto back = parse_config(dump_config(c));
    auto a = assemble(*c.plant, *c.graph, *c.gains);
    auto b = assemble(*back.plant, *back.graph, *back.gains);
    CHECK(a.A == b.A);
    CHECK(a.B == b.B);
    CHECK(a.C == b.C);
    CHECK(*back.K_L == *c.K_L);
    CHECK(back.task.noise->seed == 0xFFFFFFFFFFFFFFFFull);
    CHECK(dump_config(back) == dump_config(c));
}

TEST_CASE("schema violations") {
    CHECK_THROWS_AS(parse_config(R"({"plant": {"A": [[1]], "C": [[1]]}, "extra": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"plant": {"A": [[1]], "C": [[1]], "B": [[1]]}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"plant": {"A": [[1, 2], [3]], "C": [[1]]}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"plant": {"A": [[1]], "C": [[1]]}, "task": {"sigma": "big"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"task": {"method": "magic"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"graph": {"adjacency": [[0, 1], [1, 1]]}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"plant": {"A": [[1]], "C": [[1]]}, "luenberger": {"K_L": [[1, 2]]}})"),
                    ConfigError);
}

TEST_CASE("noise shorthand") {
    auto c = parse_config(R"({"task": {"noise": {"kind": "sinusoid", "offset": 0.3, "amplitude": 0.3, "omega": 20}}})");
    REQUIRE(c.task.noise);
    CHECK(c.task.noise->kind == NoiseKind::sinusoid);
    CHECK(c.task.noise->agents.size() == 1);
    CHECK(c.task.noise->agents[0].omega == 20);
}

TEST_CASE("design file keeps the certificate") {
    Plant p(Matrix{{-0.5}}, Matrix{{1.0}});
    auto d = design_common_P(p, Digraph::all_to_all(2), 2.5);
    auto back = parse_config(dump_config(design_file(p, d)));
    REQUIRE(back.certificate);
    CHECK(back.certificate->gamma == d.gamma);
    CHECK(back.certificate->method == d.method);
    CHECK(back.certificate->matrices.size() == d.certificate.size());
    CHECK(back.gains->stacked() == d.gains.stacked());
}
