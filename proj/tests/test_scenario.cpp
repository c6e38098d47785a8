#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "netwls/analysis.hpp"
#include "netwls/assembly.hpp"
#include "netwls/dwls.hpp"
#include "netwls/errors.hpp"
#include "netwls/oracle.hpp"
#include "netwls/scenario.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace netwls;
using testutil::contains;
using testutil::thrown;

TEST_CASE("topology names round-trip") {
    for (Topology t : {Topology::chain, Topology::star, Topology::ring, Topology::tree,
                       Topology::random_connected, Topology::loopy13, Topology::explicit_graph})
        CHECK(topology_from_name(topology_name(t)) == t);
    CHECK_THROWS_AS(topology_from_name("moebius"), InputError);
}

TEST_CASE("spec validation rejects impossible requests") {
    ScenarioSpec s;

    s.topology = Topology::explicit_graph;
    CHECK_THROWS_AS(generate(s), InputError);

    s = ScenarioSpec{};
    s.n = 0;
    CHECK_THROWS_AS(generate(s), InputError);

    s = ScenarioSpec{};
    s.topology = Topology::loopy13;
    s.n = 12;
    CHECK(contains(thrown<InputError>([&] { generate(s); }), "13"));

    s = ScenarioSpec{};
    s.topology = Topology::ring;
    s.n = 2;
    CHECK_THROWS_AS(generate(s), InputError);

    s = ScenarioSpec{};
    s.topology = Topology::star;
    s.n = 1;
    CHECK_THROWS_AS(generate(s), InputError);

    s = ScenarioSpec{};
    s.dim_min = 0;
    CHECK_THROWS_AS(generate(s), InputError);

    s = ScenarioSpec{};
    s.dim_min = 3;
    s.dim_max = 2;
    CHECK_THROWS_AS(generate(s), InputError);

    s = ScenarioSpec{};
    s.self_density = 0.0;
    CHECK_THROWS_AS(generate(s), InputError);

    s = ScenarioSpec{};
    s.self_density = 1.5;
    CHECK_THROWS_AS(generate(s), InputError);

    s = ScenarioSpec{};
    s.topology = Topology::chain;
    s.n = 1;
    s.self_density = 0.4;  // rounds to zero self measurements
    CHECK(contains(thrown<InputError>([&] { generate(s); }), "at least one node"));

    s = ScenarioSpec{};
    s.noise_scale_self = 0.0;
    CHECK_THROWS_AS(generate(s), InputError);

    s = ScenarioSpec{};
    s.extra_edges = -2;
    CHECK_THROWS_AS(generate(s), InputError);

    s = ScenarioSpec{};
    s.topology = Topology::random_connected;
    s.n = 4;
    s.extra_edges = 10;  // only 3 non-tree pairs exist on 4 nodes
    CHECK(contains(thrown<InputError>([&] { generate(s); }), "extra edges"));
}

TEST_CASE("fixed topologies have their textbook shapes") {
    ScenarioSpec s;
    s.topology = Topology::chain;
    s.n = 5;
    CHECK(generate(s).graph.diameter() == 4);

    s.topology = Topology::star;
    s.n = 6;
    CHECK(generate(s).graph.diameter() == 2);

    s.topology = Topology::ring;
    s.n = 6;
    Scenario ring = generate(s);
    CHECK(ring.graph.diameter() == 3);
    CHECK_FALSE(ring.graph.is_acyclic());

    s.topology = Topology::tree;
    s.n = 9;
    Scenario tree = generate(s);
    CHECK(tree.graph.is_acyclic());
    CHECK(tree.graph.is_connected());
    CHECK(tree.graph.edge_count() == 8);

    s.topology = Topology::random_connected;
    s.n = 10;
    s.extra_edges = 3;
    Scenario rc = generate(s);
    CHECK(rc.graph.is_connected());
    CHECK(rc.graph.edge_count() == 12);  // spanning tree plus three chords
}

TEST_CASE("the loopy13 benchmark has its fixed structure") {
    ScenarioSpec s;
    s.topology = Topology::loopy13;
    s.n = 13;
    s.seed = 99;
    Scenario sc = generate(s);

    CHECK(sc.graph.node_count() == 13);
    CHECK(sc.graph.edge_count() == 16);  // 12-ring plus four spokes
    CHECK_FALSE(sc.graph.is_acyclic());
    CHECK(sc.graph.is_connected());
    CHECK(sc.graph.neighbors(13) == std::set<int>{1, 4, 7, 10});
    for (int id = 1; id <= 13; ++id) {
        if (id == 2 || id == 5)
            CHECK_FALSE(sc.graph.has_self(id));
        else
            CHECK(sc.graph.has_self(id));
    }
    CHECK(contains(sc.provenance, "loopy13"));
}

TEST_CASE("generated scenarios satisfy the documented invariants") {
    for (int k = 0; k < 60; ++k) {
        ScenarioSpec spec = refimpl::mixed_spec(k);
        Scenario sc = generate(spec);
        const auto& g = sc.graph;

        REQUIRE(g.node_count() == spec.n);
        REQUIRE(g.is_connected());

        int selfs = 0;
        for (int id = 1; id <= g.node_count(); ++id) {
            CHECK(g.dim(id) >= spec.dim_min);
            CHECK(g.dim(id) <= spec.dim_max);
            if (g.has_self(id)) ++selfs;
        }
        CHECK(selfs == static_cast<int>(std::llround(spec.self_density * spec.n)));

        // The stored measurement values are exactly the ones the drawn state
        // and noise imply.
        for (int id = 1; id <= g.node_count(); ++id) {
            if (!g.has_self(id)) {
                CHECK(sc.truth.self_noise[id - 1].size() == 0);
                continue;
            }
            const auto& s = g.self(id);
            const Eigen::VectorXd expect =
                s.A * sc.truth.x_true[id - 1] + sc.truth.self_noise[id - 1];
            CHECK((s.z - expect).cwiseAbs().maxCoeff() == 0.0);
        }
        REQUIRE(sc.truth.edge_noise.size() == static_cast<std::size_t>(g.edge_count()));
        for (int e = 0; e < g.edge_count(); ++e) {
            const auto& m = g.edges()[e];
            const Eigen::VectorXd expect = m.Bi * sc.truth.x_true[m.i - 1] +
                                           m.Bj * sc.truth.x_true[m.j - 1] +
                                           sc.truth.edge_noise[e];
            CHECK((m.z - expect).cwiseAbs().maxCoeff() == 0.0);
            CHECK(m.z.size() == std::max(g.dim(m.i), g.dim(m.j)));
        }
    }
}

TEST_CASE("generation is a pure function of the spec") {
    ScenarioSpec spec = refimpl::mixed_spec(9);
    Scenario a = generate(spec);
    Scenario b = generate(spec);
    CHECK(a.graph == b.graph);
    CHECK(a.provenance == b.provenance);

    spec.seed += 1;
    Scenario c = generate(spec);
    CHECK_FALSE(a.graph == c.graph);
}

TEST_CASE("saved files are byte-identical across runs") {
    testutil::TempDir dir;
    ScenarioSpec spec = refimpl::mixed_spec(2);
    Scenario sc = generate(spec);

    save_scenario(sc.graph, sc.provenance, dir.file("a.scn"));
    save_scenario(sc.graph, sc.provenance, dir.file("b.scn"));
    CHECK(testutil::read_file(dir.file("a.scn")) == testutil::read_file(dir.file("b.scn")));
    CHECK(contains(testutil::read_file(dir.file("a.scn")), "netwls-scenario v1"));

    save_truth(sc.truth, dir.file("a.truth"));
    save_truth(sc.truth, dir.file("b.truth"));
    CHECK(testutil::read_file(dir.file("a.truth")) == testutil::read_file(dir.file("b.truth")));
}

TEST_CASE("a scenario file round-trips losslessly") {
    testutil::TempDir dir;
    for (int k : {1, 2, 5}) {  // scalar and vector corpora
        Scenario sc = generate(refimpl::mixed_spec(k));
        const std::string path = dir.file("roundtrip.scn");
        save_scenario(sc.graph, sc.provenance, path);
        MeasurementGraph loaded = load_scenario(path);
        CHECK(loaded == sc.graph);

        // Same bits in, same bits out of the engine.
        InformationSystem orig = assemble_information(sc.graph);
        InformationSystem redo = assemble_information(loaded);
        CHECK(orig.fingerprint == redo.fingerprint);
        RunTrace a = run_dwls(orig, 12, 1e-12);
        RunTrace b = run_dwls(redo, 12, 1e-12);
        REQUIRE(a.snapshots() == b.snapshots());
        for (int s = 0; s < a.snapshots(); ++s)
            for (int i = 0; i < orig.n; ++i)
                CHECK((a.estimates[s][i].array() == b.estimates[s][i].array()).all());
    }
}

TEST_CASE("a truth file round-trips losslessly") {
    testutil::TempDir dir;
    Scenario sc = generate(refimpl::mixed_spec(3));
    const std::string path = dir.file("t.truth");
    save_truth(sc.truth, path);
    GroundTruth loaded = load_truth(path);

    REQUIRE(loaded.x_true.size() == sc.truth.x_true.size());
    for (std::size_t k = 0; k < loaded.x_true.size(); ++k) {
        CHECK((loaded.x_true[k].array() == sc.truth.x_true[k].array()).all());
        REQUIRE(loaded.self_noise[k].size() == sc.truth.self_noise[k].size());
        if (loaded.self_noise[k].size() > 0)
            CHECK((loaded.self_noise[k].array() == sc.truth.self_noise[k].array()).all());
    }
    REQUIRE(loaded.edge_noise.size() == sc.truth.edge_noise.size());
    for (std::size_t k = 0; k < loaded.edge_noise.size(); ++k)
        CHECK((loaded.edge_noise[k].array() == sc.truth.edge_noise[k].array()).all());
}

TEST_CASE("parse failures carry file and line context") {
    testutil::TempDir dir;
    const std::string path = dir.file("bad.scn");

    testutil::write_file(path, "not-a-scenario\n");
    CHECK(contains(thrown<ParseError>([&] { load_scenario(path); }), "netwls-scenario"));

    testutil::write_file(path, "netwls-scenario v9\n");
    CHECK(contains(thrown<ParseError>([&] { load_scenario(path); }), "version"));

    testutil::write_file(path, "netwls-scenario v1\nnodes two\n");
    try {
        load_scenario(path);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(contains(e.what(), path));
        CHECK(contains(e.what(), ":2:"));
    }

    // Fewer measurement values than the declared row count.
    testutil::write_file(path,
                         "netwls-scenario v1\n"
                         "nodes 1\n"
                         "node 1 1\n"
                         "selfs 1\n"
                         "self 1 2\n"
                         "A 2 1\n1\n1\n"
                         "R 2 2\n1 0\n0 1\n"
                         "z 1\n0.5\n"
                         "edges 0\n"
                         "end\n");
    CHECK(contains(thrown<ParseError>([&] { load_scenario(path); }), "declares 2 rows"));

    // Truncation: comments are fine, missing sections are not.
    testutil::write_file(path, "netwls-scenario v1\n# comment\nnodes 1\nnode 1 1\n");
    CHECK(contains(thrown<ParseError>([&] { load_scenario(path); }), "end of file"));

    CHECK_THROWS_AS(load_scenario(dir.file("missing.scn")), InputError);
}

TEST_CASE("structural problems in a well-formed file are validation errors") {
    testutil::TempDir dir;
    const std::string path = dir.file("invalid.scn");

    // Edge references a node the file never declares.
    testutil::write_file(path,
                         "netwls-scenario v1\n"
                         "nodes 2\nnode 1 1\nnode 2 1\n"
                         "selfs 1\n"
                         "self 1 1\nA 1 1\n1\nR 1 1\n1\nz 1\n0\n"
                         "edges 1\n"
                         "edge 1 5 1\nBi 1 1\n1\nBj 1 1\n1\nR 1 1\n1\nz 1\n0\n"
                         "end\n");
    CHECK(contains(thrown<InputError>([&] { load_scenario(path); }), "edge (1,5)"));

    // Zero covariance on an edge measurement.
    testutil::write_file(path,
                         "netwls-scenario v1\n"
                         "nodes 2\nnode 1 1\nnode 2 1\n"
                         "selfs 1\n"
                         "self 1 1\nA 1 1\n1\nR 1 1\n1\nz 1\n0\n"
                         "edges 1\n"
                         "edge 1 2 1\nBi 1 1\n1\nBj 1 1\n1\nR 1 1\n0\nz 1\n0\n"
                         "end\n");
    CHECK(contains(thrown<InputError>([&] { load_scenario(path); }),
                   "edge (1,2): R is not symmetric positive definite"));
}

TEST_CASE("the trace CSV is rectangular and round-major") {
    testutil::TempDir dir;
    InformationSystem sys = assemble_information(testutil::two_node_graph());
    GlobalSolution sol = solve_global(sys);
    RunTrace trace = run_dwls(sys, 5, 1e-12);
    ErrorTrace err = error_trace(trace, sol, 1e-9);

    const std::string path = dir.file("trace.csv");
    export_trace_csv(trace, err, nullptr, path);
    const std::string text = testutil::read_file(path);

    std::istringstream lines(text);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "round,node_id,est_0,abs_error,y1,bound_envelope");
    int rows = 0;
    int round = -1, prev_round = -1;
    while (std::getline(lines, line)) {
        ++rows;
        std::istringstream cells(line);
        std::string cell;
        int commas = 0;
        for (char c : line)
            if (c == ',') ++commas;
        CHECK(commas == 5);
        std::getline(cells, cell, ',');
        round = std::stoi(cell);
        CHECK(round >= prev_round);  // round-major ordering
        prev_round = round;
    }
    // Rounds 0..2 (the tree converges at round 2), two nodes each.
    CHECK(rows == 2 * trace.snapshots());
    CHECK(rows == 6);
}

TEST_CASE("mixed dimensions pad the estimate columns") {
    testutil::TempDir dir;
    InformationSystem sys = assemble_information(testutil::vector_pair_graph());
    GlobalSolution sol = solve_global(sys);
    RunTrace trace = run_dwls(sys, 4, 1e-12);
    ErrorTrace err = error_trace(trace, sol, 1e-9);

    const std::string path = dir.file("trace.csv");
    export_trace_csv(trace, err, nullptr, path);
    std::istringstream lines(testutil::read_file(path));
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "round,node_id,est_0,est_1,abs_error,y1,bound_envelope");
    while (std::getline(lines, line)) {
        int commas = 0;
        for (char c : line)
            if (c == ',') ++commas;
        CHECK(commas == 6);  // same width for the scalar node's rows
    }
}

TEST_CASE("the envelope column tracks C rho^round") {
    testutil::TempDir dir;
    ScenarioSpec spec;
    spec.topology = Topology::loopy13;
    spec.n = 13;
    spec.seed = 3;
    Scenario sc = generate(spec);
    InformationSystem sys = assemble_information(sc.graph);
    GlobalSolution sol = solve_global(sys);
    RateBound bound = rate_bound(sys);
    RunTrace trace = run_dwls(sys, 60, 1e-10);
    ErrorTrace err = error_trace(trace, sol, 1e-9);
    EnvelopeReport env = rate_envelope(err, bound, 0.05);
    REQUIRE(env.applicable);

    const std::string path = dir.file("trace.csv");
    export_trace_csv(trace, err, &env, path);
    std::istringstream lines(testutil::read_file(path));
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
        const auto last = line.find_last_of(',');
        const std::string bound_cell = line.substr(last + 1);
        REQUIRE_FALSE(bound_cell.empty());
        const int round = std::stoi(line.substr(0, line.find(',')));
        const double expect = env.envelope_constant * std::pow(env.rho, round);
        CHECK(std::stod(bound_cell) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("mismatched trace and summary are rejected") {
    InformationSystem sys = assemble_information(testutil::two_node_graph());
    GlobalSolution sol = solve_global(sys);
    RunTrace trace = run_dwls(sys, 5, 1e-12);
    ErrorTrace err = error_trace(trace, sol, 1e-9);
    err.round_index.push_back(99);
    testutil::TempDir dir;
    CHECK_THROWS_AS(export_trace_csv(trace, err, nullptr, dir.file("x.csv")), InputError);
}

TEST_CASE("an empty trace still yields a valid header") {
    testutil::TempDir dir;
    RunTrace trace;
    trace.algorithm = "dwls";
    ErrorTrace err;
    const std::string path = dir.file("empty.csv");
    export_trace_csv(trace, err, nullptr, path);
    const std::string text = testutil::read_file(path);
    CHECK(testutil::line_count(text) == 1);
    CHECK(contains(text, "round,node_id"));
}

TEST_CASE("figure data files carry one point per round") {
    testutil::TempDir dir;
    InformationSystem sys = assemble_information(testutil::anchored_chain3());
    GlobalSolution sol = solve_global(sys);
    RunTrace trace = run_dwls(sys, 6, 1e-13);
    ErrorTrace err = error_trace(trace, sol, 1e-9);

    const std::string y1 = dir.file("y1.dat");
    const std::string bd = dir.file("bound.dat");
    export_fig_data(err, nullptr, y1, bd);
    CHECK(testutil::line_count(testutil::read_file(y1)) == trace.snapshots() + 1);
    CHECK(testutil::line_count(testutil::read_file(bd)) == 1);  // comment only, no envelope

    // With an applicable envelope the bound file gains the matching points on
    // the same log10 mean-squared-error scale.
    EnvelopeReport env;
    env.applicable = true;
    env.rho = 0.5;
    env.envelope_constant = 2.0;
    export_fig_data(err, &env, y1, bd);
    std::istringstream lines(testutil::read_file(bd));
    std::string line;
    std::getline(lines, line);  // comment
    int points = 0;
    while (std::getline(lines, line)) {
        std::istringstream cells(line);
        int round = 0;
        double value = 0.0;
        REQUIRE(static_cast<bool>(cells >> round >> value));
        CHECK(value ==
              doctest::Approx(2.0 * std::log10(2.0 * std::pow(0.5, round))).epsilon(1e-12));
        ++points;
    }
    CHECK(points == trace.snapshots());
}
