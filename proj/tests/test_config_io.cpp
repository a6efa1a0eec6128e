// Config parsing/serialization, initial-state construction, field-file IO,
// and the run layer (byte-stable outputs, audit pass/fail).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qtflow/config.hpp"
#include "qtflow/diagnostics.hpp"
#include "qtflow/errors.hpp"
#include "qtflow/field_io.hpp"
#include "qtflow/kernels.hpp"
#include "qtflow/rng.hpp"
#include "qtflow/run.hpp"

using namespace qtflow;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test; stale contents from earlier runs are
// discarded so the assertions only ever see files written here.
std::string scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("qtflow_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string read_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(static_cast<bool>(is));
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

bool same_values(const QTensorField& a, const QTensorField& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a.v[i] == b.v[i])) return false;
    return true;
}

}  // namespace

TEST_CASE("empty config text yields the documented defaults") {
    const RunConfig cfg = parse_config("");
    CHECK(cfg.grid.dim == 1);
    CHECK(cfg.grid.cells[0] == 64);
    CHECK(cfg.grid.extent[0] == 1.0);
    CHECK(cfg.grid.bc == Bc::DirichletZero);
    CHECK(cfg.params.a == -0.3);
    CHECK(cfg.params.b == 1.0);
    CHECK(cfg.params.c == 1.0);
    CHECK(cfg.params.L == 0.01);
    CHECK(cfg.params.M == 1.0);
    CHECK(cfg.a0_auto);
    CHECK(cfg.dt == 1e-3);
    CHECK(cfg.T == 0.5);
    CHECK(cfg.initial.kind == InitialKind::Zero);
    CHECK(cfg.initial.center[0] == 0.5);
    CHECK(cfg.initial.width[0] == 0.25);
    CHECK(cfg.cg_tol == 1e-12);
    CHECK(cfg.cg_max_iter == 0);
    CHECK(cfg.snapshot_stride == 1);
    CHECK(cfg.output_dir == "out");
    CHECK(!cfg.abort_on_r_loss);
}

TEST_CASE("nontrivial config parses, round-trips and serializes idempotently") {
    const std::string text =
        "# tweaked desk problem\n"
        "[grid]\n"
        "dim = 2\n"
        "n = 12, 10\n"
        "extent = 1.5, 1\n"
        "bc = neumann\n"
        "[model]\n"
        "a = -0.2\n"
        "b = 0.5\n"
        "c = 1.25\n"
        "L = 0.02\n"
        "M = 2\n"
        "A0 = 3.5\n"
        "[time]\n"
        "dt = 0.002\n"
        "T = 0.02\n"
        "[initial]\n"
        "kind = uniaxial_bump   # underscore alias\n"
        "s = 1.5\n"
        "center = 0.75, 0.5\n"
        "width = 0.3\n"
        "axis = 1\n"
        "[solver]\n"
        "cg_tol = 1e-10\n"
        "cg_max_iter = 500\n"
        "abort_on_r_loss = yes\n"
        "[output]\n"
        "snapshot_stride = 5\n"
        "dir = runs/demo\n";
    const RunConfig cfg = parse_config(text);

    CHECK(cfg.grid.dim == 2);
    CHECK(cfg.grid.cells[0] == 12);
    CHECK(cfg.grid.cells[1] == 10);
    CHECK(cfg.grid.extent[0] == 1.5);
    CHECK(cfg.grid.extent[1] == 1.0);
    CHECK(cfg.grid.bc == Bc::NeumannZero);
    CHECK(cfg.params.a == -0.2);
    CHECK(cfg.params.b == 0.5);
    CHECK(cfg.params.c == 1.25);
    CHECK(cfg.params.L == 0.02);
    CHECK(cfg.params.M == 2.0);
    CHECK(!cfg.a0_auto);
    CHECK(cfg.params.A0 == 3.5);
    CHECK(cfg.dt == 0.002);
    CHECK(cfg.T == 0.02);
    CHECK(cfg.initial.kind == InitialKind::UniaxialBump);
    CHECK(cfg.initial.s == 1.5);
    CHECK(cfg.initial.center[0] == 0.75);
    CHECK(cfg.initial.center[1] == 0.5);
    CHECK(cfg.initial.width[0] == 0.3);  // single value broadcast per axis
    CHECK(cfg.initial.width[1] == 0.3);
    CHECK(cfg.initial.axis == 1);
    CHECK(cfg.cg_tol == 1e-10);
    CHECK(cfg.cg_max_iter == 500);
    CHECK(cfg.abort_on_r_loss);
    CHECK(cfg.snapshot_stride == 5);
    CHECK(cfg.output_dir == "runs/demo");

    const std::string canon = serialize_config(cfg);
    const RunConfig again = parse_config(canon);
    CHECK(again == cfg);
    CHECK(serialize_config(again) == canon);

    // Canonical form spells the kind with a hyphen and keeps A0 literal.
    CHECK(canon.find("kind = uniaxial-bump\n") != std::string::npos);
    CHECK(canon.find("A0 = 3.5\n") != std::string::npos);
    CHECK(canon.find("bc = neumann\n") != std::string::npos);
}

TEST_CASE("initial kind accepts short aliases and A0 accepts auto") {
    const RunConfig rnd = parse_config("[initial]\nkind = random\n");
    CHECK(rnd.initial.kind == InitialKind::RandomSeeded);
    CHECK(rnd.initial.seed == 1);
    CHECK(rnd.initial.amplitude == 0.1);

    const RunConfig bump = parse_config("[initial]\nkind = bump\n");
    CHECK(bump.initial.kind == InitialKind::UniaxialBump);

    const RunConfig autoA0 = parse_config("[model]\nA0 = auto\n");
    CHECK(autoA0.a0_auto);
    CHECK(autoA0.params.A0 == 0.0);
    CHECK(serialize_config(autoA0).find("A0 = auto\n") != std::string::npos);

    const RunConfig fixedA0 = parse_config("[model]\nA0 = 2.5\n");
    CHECK(!fixedA0.a0_auto);
    CHECK(fixedA0.params.A0 == 2.5);
}

TEST_CASE("parse errors carry the line number and offending key") {
    const auto expect_parse_error = [](const std::string& text, long line,
                                       const std::string& field) {
        try {
            parse_config(text);
            FAIL_CHECK("expected ParseError for: " << text);
        } catch (const ParseError& e) {
            CHECK(e.line() == line);
            CHECK(e.field() == field);
        }
    };

    expect_parse_error("[grid]\nfoo = 3\n", 2, "grid.foo");
    expect_parse_error("[bogus]\n", 1, "bogus");
    expect_parse_error("dt = 1\n", 1, "dt");
    expect_parse_error("[time]\ndt = fast\n", 2, "time.dt");
    expect_parse_error("[grid\n", 1, "");
    expect_parse_error("[grid]\nno equals sign here\n", 2, "");
    expect_parse_error("[grid]\nbc = periodic\n", 2, "bc");
    expect_parse_error("[model]\nA0 = sometimes\n", 2, "A0");
    expect_parse_error("[initial]\nkind = vortex\n", 2, "kind");
    expect_parse_error("[solver]\nabort_on_r_loss = maybe\n", 2,
                       "solver.abort_on_r_loss");

    // The message embeds "line N (key):" so logs are greppable.
    try {
        parse_config("[grid]\nfoo = 3\n");
    } catch (const ParseError& e) {
        const std::string what = e.what();
        CHECK(what.find("line 2") != std::string::npos);
        CHECK(what.find("grid.foo") != std::string::npos);
    }
}

TEST_CASE("validation reports every violated invariant at once") {
    const std::string text =
        "[grid]\n"
        "n = 1\n"
        "[model]\n"
        "c = 0\n"
        "[time]\n"
        "dt = -1\n";
    try {
        parse_config(text);
        FAIL_CHECK("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.violations().size() >= 3);
        const std::string what = e.what();
        CHECK(what.find("n:") != std::string::npos);
        CHECK(what.find("c:") != std::string::npos);
        CHECK(what.find("dt:") != std::string::npos);
        // dt = -1 also breaks T >= dt? No: T = 0.5 >= -1 holds, so the dt
        // violation must stand on its own line.
        CHECK(what.find("invalid configuration:") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_config("[initial]\nkind = file\n"),
                    ValidationError);  // file kind requires a path
    CHECK_THROWS_AS(parse_config("[grid]\ndim = 4\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("[time]\nT = 1e-9\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("[output]\nsnapshot_stride = 0\n"),
                    ValidationError);
}

TEST_CASE("default problem matches its documentation") {
    const RunConfig cfg = default_config();
    CHECK(cfg.grid.dim == 1);
    CHECK(cfg.grid.cells[0] == 64);
    CHECK(cfg.grid.extent[0] == 1.0);
    CHECK(cfg.grid.bc == Bc::DirichletZero);
    CHECK(cfg.params.a == -0.3);
    CHECK(cfg.params.L == 0.01);
    CHECK(cfg.a0_auto);
    CHECK(cfg.dt == 1e-3);
    CHECK(cfg.T == 0.5);
    CHECK(cfg.initial.kind == InitialKind::UniaxialBump);
    CHECK(cfg.initial.s == 2.0);
    CHECK(cfg.initial.center[0] == 0.5);
    CHECK(cfg.initial.width[0] == 0.25);
    CHECK(cfg.initial.axis == 0);

    // It must satisfy its own validation and round-trip canonically.
    const RunConfig again = parse_config(serialize_config(cfg));
    CHECK(again == cfg);
}

TEST_CASE("solve_options copies the solver knobs verbatim") {
    RunConfig cfg = default_config();
    cfg.cg_tol = 1e-10;
    cfg.cg_max_iter = 77;
    cfg.abort_on_r_loss = true;
    const StepOptions opt = solve_options(cfg);
    CHECK(opt.cg_tol == 1e-10);
    CHECK(opt.cg_max_iter == 77);
    CHECK(opt.abort_on_r_loss);
}

TEST_CASE("make_initial: zero data gives a uniform auxiliary field") {
    RunConfig cfg = parse_config("");  // zero initial, auto shift
    const SchemeState s = make_initial(cfg);
    CHECK(s.step_index == 0);
    CHECK(s.time == 0.0);
    CHECK(s.dt == cfg.dt);
    for (const QTensor& q : s.q.v) CHECK(q == QTensor::zero());

    // The automatic shift samples a fixed ball, so it exceeds 1 strictly
    // for a < 0 (the bulk minimum is negative) and r = sqrt(A0) everywhere.
    CHECK(s.params.A0 > 1.0);
    CHECK(s.params.A0 < 2.0);
    const double r0 = s.r.v[0];
    CHECK(r0 == std::sqrt(s.params.A0));
    for (double r : s.r.v) CHECK(r == r0);

    // Re-deriving the state is bit-identical: the shift is deterministic.
    const SchemeState t = make_initial(cfg);
    CHECK(t.params.A0 == s.params.A0);
    CHECK(same_values(t.q, s.q));
    for (std::size_t i = 0; i < s.r.size(); ++i) CHECK(t.r.v[i] == s.r.v[i]);
}

TEST_CASE("make_initial: bump hits the uniaxial tensor at the center") {
    const RunConfig cfg = default_config();
    const SchemeState s = make_initial(cfg);

    // Node 32 of 64 cells sits exactly at x = 0.5, the bump center, where
    // the profile is exactly 1; the edges are outside the support.
    CHECK(s.q.at(32) == QTensor::uniaxial(2.0, 0));
    CHECK(s.q.at(0) == QTensor::zero());
    CHECK(s.q.at(64) == QTensor::zero());
    CHECK(s.q.at(8) == QTensor::zero());  // |x-0.5| = 0.375 > width

    for (double r : s.r.v) CHECK(r > 0.0);
    // Boundary nodes carry zero data, so r there is exactly sqrt(A0).
    CHECK(s.r.at(0) == std::sqrt(s.params.A0));
}

TEST_CASE("make_initial: file kind round-trips onto the configured grid") {
    const std::string dir = scratch_dir("file_initial");
    Grid g;
    g.dim = 1;
    g.cells = {16, 1, 1};
    g.extent = {1.0, 1.0, 1.0};
    g.bc = Bc::DirichletZero;
    QTensorField q0(g);
    Rng rng(99);
    for (QTensor& q : q0.v) q = rng.tensor(0.2);
    project_bc(q0);
    const std::string path = dir + "/q0.field";
    save_field(path, q0);

    RunConfig cfg = parse_config(
        "[grid]\nn = 16\n[model]\nA0 = 3\n[initial]\nkind = file\npath = " +
        path + "\n");
    const SchemeState s = make_initial(cfg);
    CHECK(s.q.grid == cfg.grid);  // adopted exactly, not the file's round-off
    CHECK(same_values(s.q, q0));

    RunConfig wrong = cfg;
    wrong.grid.cells[0] = 24;
    CHECK_THROWS_AS(make_initial(wrong), GridMismatchError);
}

TEST_CASE("make_initial: nonpositive radicand names a node and a fix") {
    // a = -1, b = 0, c = 1 puts the bulk minimum well below zero; with a
    // hard A0 = 0 the radicand 2 F_B + A0 is nonpositive at the boundary
    // (where Q = 0) already.
    RunConfig cfg = default_config();
    cfg.params.a = -1.0;
    cfg.params.b = 0.0;
    cfg.a0_auto = false;
    cfg.params.A0 = 0.0;
    try {
        make_initial(cfg);
        FAIL_CHECK("expected NonpositiveRadicandError");
    } catch (const NonpositiveRadicandError& e) {
        CHECK(e.node() >= 0);
        CHECK(e.radicand() <= 0.0);
        const std::string what = e.what();
        CHECK(what.find("suggested A0 >=") != std::string::npos);
        CHECK(what.find("increase A0") != std::string::npos);
    }
}

TEST_CASE("field files: exact header and bit-exact value round trip") {
    Grid g;
    g.dim = 2;
    g.cells = {5, 4, 1};
    g.extent = {1.0, 0.5, 1.0};
    g.bc = Bc::NeumannZero;
    QTensorField f(g);
    Rng rng(7);
    for (QTensor& q : f.v) q = rng.tensor(1.3);

    std::ostringstream os;
    write_field(os, f);
    const std::string text = os.str();
    const std::string expected_header =
        "qfield v1 dim=2 n=5,4 h=" + format_g17(g.h(0)) + "," +
        format_g17(g.h(1)) + " bc=neumann";
    CHECK(text.substr(0, text.find('\n')) == expected_header);

    std::istringstream is(text);
    const QTensorField back = read_qtensor_field(is);
    CHECK(grids_compatible(back.grid, g));
    CHECK(back.grid.cells == g.cells);
    CHECK(back.grid.bc == g.bc);
    CHECK(same_values(back, f));

    // Re-serializing the parsed field reproduces the bytes: the format is
    // a fixed point after one hop.
    std::ostringstream os2;
    write_field(os2, back);
    CHECK(os2.str() == text);

    // Scalar fields share the header and the exactness guarantee.
    ScalarField sf(g);
    for (std::size_t i = 0; i < sf.size(); ++i)
        sf.v[i] = std::sin(0.1 * static_cast<double>(i)) * 1e-3;
    std::ostringstream os3;
    write_field(os3, sf);
    std::istringstream is3(os3.str());
    const ScalarField sback = read_scalar_field(is3);
    for (std::size_t i = 0; i < sf.size(); ++i) CHECK(sback.v[i] == sf.v[i]);
}

TEST_CASE("field files: save/load through the filesystem is bit-exact") {
    const std::string dir = scratch_dir("field_roundtrip");
    Grid g;
    g.dim = 3;
    g.cells = {4, 3, 5};
    g.extent = {1.0, 1.5, 0.75};
    g.bc = Bc::DirichletZero;
    QTensorField f(g);
    Rng rng(21);
    for (QTensor& q : f.v) q = rng.tensor(0.8);
    project_bc(f);

    const std::string path = dir + "/f.field";
    save_field(path, f);
    const QTensorField back = load_qtensor_field(path);
    CHECK(same_values(back, f));

    save_field(dir + "/f2.field", back);
    CHECK(read_bytes(dir + "/f2.field") == read_bytes(path));
}

TEST_CASE("field files: malformed inputs raise targeted parse errors") {
    const auto expect_error = [](const std::string& text,
                                 const std::string& field) {
        std::istringstream is(text);
        try {
            read_scalar_field(is);
            FAIL_CHECK("expected ParseError for: " << text);
        } catch (const ParseError& e) {
            CHECK(e.field() == field);
        }
    };

    expect_error("qfield v2 dim=1 n=4 h=0.25 bc=dirichlet\n", "");
    expect_error("notafield\n", "");
    expect_error("qfield v1 dim=4 n=4,4,4,4 h=1,1,1,1 bc=dirichlet\n", "dim");
    expect_error("qfield v1 dim=1 n=0 h=0.25 bc=dirichlet\n", "n");
    expect_error("qfield v1 dim=1 n=4 h=0 bc=dirichlet\n", "h");
    expect_error("qfield v1 dim=2 n=4 h=0.25,0.25 bc=dirichlet\n", "n");
    expect_error("qfield v1 dim=1 n=4 h=0.25 bc=floating\n", "bc");
    expect_error("qfield v1 dim=1 n=4 h=0.25\n", "");  // bc missing
    expect_error("qfield v1 dim=1 n=4 h=0.25 bc=dirichlet junk\n", "junk");
    expect_error("qfield v1 dim=1 n=four h=0.25 bc=dirichlet\n", "n");

    // Too few values: 5 nodes expected, 4 provided; the error names the
    // first node that could not be read and its line.
    std::istringstream is(
        "qfield v1 dim=1 n=4 h=0.25 bc=dirichlet\n1\n2\n3\n4\n");
    try {
        read_scalar_field(is);
        FAIL_CHECK("expected ParseError for short file");
    } catch (const ParseError& e) {
        CHECK(e.field() == "node 4");
        CHECK(e.line() == 6);
    }

    // Non-numeric value mid-file.
    expect_error("qfield v1 dim=1 n=4 h=0.25 bc=dirichlet\n1\n2\nxx\n4\n5\n",
                 "node 2");
    // Trailing data after the last node.
    expect_error(
        "qfield v1 dim=1 n=4 h=0.25 bc=dirichlet\n1\n2\n3\n4\n5\n6\n", "");
}

TEST_CASE("repeated seeded runs produce byte-identical outputs") {
    const std::string dir_a = scratch_dir("run_a");
    const std::string dir_b = scratch_dir("run_b");

    RunConfig cfg = parse_config(
        "[grid]\n"
        "n = 32\n"
        "[time]\n"
        "dt = 1e-3\n"
        "T = 0.01\n"
        "[initial]\n"
        "kind = random-seeded\n"
        "seed = 7\n"
        "amplitude = 0.2\n");
    cfg.output_dir = dir_a;
    REQUIRE(run_simulation(cfg) == kExitOk);
    cfg.output_dir = dir_b;
    REQUIRE(run_simulation(cfg) == kExitOk);

    CHECK(read_bytes(dir_a + "/diagnostics.csv") ==
          read_bytes(dir_b + "/diagnostics.csv"));
    for (const char* name :
         {"/q_000000.field", "/q_000005.field", "/q_000010.field",
          "/r_000000.field", "/r_000010.field"}) {
        CHECK(read_bytes(dir_a + name) == read_bytes(dir_b + name));
    }

    // The stored config is the canonical rendering of what actually ran
    // (cfg still points at dir_b here).
    CHECK(read_bytes(dir_b + "/config.txt") == serialize_config(cfg));

    // The CSV starts with the pinned header and has one row per step plus
    // the initial record.
    const std::string csv = read_bytes(dir_a + "/diagnostics.csv");
    CHECK(csv.rfind(kDiagnosticsCsvHeader, 0) == 0);
    long rows = 0;
    for (char ch : csv)
        if (ch == '\n') ++rows;
    CHECK(rows == 1 + 11);  // header + steps 0..10
}

TEST_CASE("default problem regression values stay frozen") {
    // Values frozen from a verified run (energy monotone, identity residual
    // at round-off, audit clean). Any drift here means the numerics
    // changed, deliberately or not.
    const RunConfig cfg = default_config();
    SchemeState s = make_initial(cfg);
    CHECK(s.params.A0 == doctest::Approx(1.1266693464291362).epsilon(1e-12));
    CHECK(energy(s) == doctest::Approx(0.76997012195814485).epsilon(1e-12));
    CHECK(s.r.v[0] == doctest::Approx(1.0614468175227321).epsilon(1e-12));

    DiagnosticsTracker tracker(s);
    DiagnosticsRecord rec = tracker.initial_record();
    for (long n = 1; n <= 50; ++n) {
        const QTensorField pn = aux_gradient_field(s.q, s.params);
        auto [next, rep] = step(s, pn, solve_options(cfg));
        rec = tracker.after_step(s, next, pn, rep);
        s = std::move(next);
    }
    CHECK(rec.E == doctest::Approx(0.69728044305844827).epsilon(1e-12));
    CHECK(rec.H_sum ==
          doctest::Approx(0.072564930681781561).epsilon(1e-12));
    CHECK(rec.Vn_max ==
          doctest::Approx(0.00062699455283965477).epsilon(1e-12));
    CHECK(tracker.sup_w() ==
          doctest::Approx(20.018696733295059).epsilon(1e-12));
}

TEST_CASE("audit accepts a clean run and rejects a corrupted snapshot") {
    const std::string dir = scratch_dir("audit");
    RunConfig cfg = parse_config(
        "[grid]\n"
        "n = 32\n"
        "[time]\n"
        "dt = 1e-3\n"
        "T = 0.008\n"
        "[initial]\n"
        "kind = bump\n"
        "s = 1.5\n");
    cfg.output_dir = dir;
    REQUIRE(run_simulation(cfg) == kExitOk);
    CHECK(run_audit(dir) == kExitOk);

    // Scaling one interior snapshot breaks monotonicity and the per-step
    // update equation; the audit must notice.
    QTensorField q4 = load_qtensor_field(dir + "/q_000004.field");
    for (QTensor& q : q4.v) q = 3.0 * q;
    save_field(dir + "/q_000004.field", q4);
    CHECK(run_audit(dir) == kExitAuditFailed);
}
