#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "qtflow/diagnostics.hpp"
#include "qtflow/errors.hpp"
#include "qtflow/kernels.hpp"
#include "qtflow/rng.hpp"
#include "qtflow/serial_ref.hpp"
#include "qtflow/stepper.hpp"

using namespace qtflow;

namespace {

Grid grid_1d(int cells, Bc bc = Bc::DirichletZero) {
    Grid g;
    g.dim = 1;
    g.cells = {cells, 1, 1};
    g.bc = bc;
    return g;
}

SchemeState bump_state(int cells, double dt, double amplitude = 2.0) {
    const Grid g = grid_1d(cells);
    const double pi = std::acos(-1.0);
    QTensorField q0(g);
    for (int i = 0; i <= cells; ++i) {
        const double u = (i * g.h(0) - 0.5) / 0.25;
        if (std::fabs(u) < 1.0) {
            const double c = std::cos(0.5 * pi * u);
            q0.at(i) = QTensor::uniaxial(amplitude * c * c, 0);
        }
    }
    project_bc(q0);
    return make_state(std::move(q0), ModelParams{}, dt);
}

/// Minimal state wrapper for history tests: contents only need to be
/// distinguishable, not physical.
SchemeState tagged_state(const Grid& g, long n, double dt, double fill) {
    SchemeState s;
    s.q = QTensorField(g);
    for (QTensor& q : s.q.v) q.q12 = fill;
    s.r = ScalarField(g, fill);
    s.step_index = n;
    s.time = static_cast<double>(n) * dt;
    s.dt = dt;
    return s;
}

}  // namespace

TEST_CASE("energy of the zero state is half the shifted volume") {
    const Grid g = grid_1d(64);
    const SchemeState s = make_state(QTensorField(g), ModelParams{}, 1e-3);
    // r = sqrt(A0) = 1 everywhere, so E = |domain|/2; the elastic part is 0.
    CHECK(energy(s) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("energy agrees with an independent quadrature") {
    SchemeState s = bump_state(48, 1e-3);
    const double expect = 0.5 * s.params.L * serial_ref::gradient_norm_sq(s.q) +
                          0.5 * serial_ref::l2_inner(s.r, s.r);
    CHECK(energy(s) == doctest::Approx(expect).epsilon(1e-14));

    // The elastic share scales linearly in L.
    const double elastic = 0.5 * s.params.L * gradient_norm_sq(s.q);
    SchemeState s2 = s;
    s2.params.L *= 2.0;
    CHECK(energy(s2) - energy(s) == doctest::Approx(elastic).epsilon(1e-12));
}

TEST_CASE("drift fields vanish identically on a fresh state") {
    const SchemeState s = bump_state(32, 1e-3);
    const auto [v, d] = drift_fields(s);
    for (double x : v.v) CHECK(x == 0.0);
    for (double x : d.v) CHECK(x == 0.0);
}

TEST_CASE("drift fields see an injected offset") {
    SchemeState s = bump_state(32, 1e-3);
    for (double& r : s.r.v) r += 0.3;
    const auto [v, d] = drift_fields(s);
    for (double x : v.v) CHECK(x == doctest::Approx(0.3).epsilon(1e-13));
    // the offset is (numerically almost) constant, so its gradient is tiny
    for (double x : d.v) CHECK(x <= 1e-10);
}

TEST_CASE("gradient norm of the auxiliary source field") {
    const Grid g = grid_1d(16, Bc::NeumannZero);
    Rng rng(4);
    const QTensor u = rng.tensor(1.0);
    const QTensorField pn(g, u);

    const ScalarField uniform(g, 0.7);
    CHECK(grad_rp_norm(uniform, pn) == 0.0);

    ScalarField linear(g);
    for (int i = 0; i <= 16; ++i) linear.at(i) = i * g.h(0);
    // |grad(x u)| in L2 over the unit interval is just |u|.
    CHECK(grad_rp_norm(linear, pn) == doctest::Approx(norm(u)).epsilon(1e-13));
}

TEST_CASE("initial tracker record starts clean") {
    const SchemeState s = bump_state(64, 1e-3);
    const DiagnosticsTracker tracker(s);
    const DiagnosticsRecord& r0 = tracker.initial_record();

    CHECK(r0.n == 0);
    CHECK(r0.t == 0.0);
    CHECK(r0.E == energy(s));
    CHECK(r0.Vn_max == 0.0);  // r was evaluated from Q, drift is exactly zero
    CHECK(r0.Vn_l2 == 0.0);
    CHECK(r0.Dn_l2 == 0.0);
    CHECK(r0.H_sum == 0.0);
    CHECK(r0.dE_identity == 0.0);
    CHECK(r0.cg_iters == 0);
    CHECK(r0.laplQ_l2 ==
          doctest::Approx(l2_norm(laplacian(s.q))).epsilon(1e-15));
    CHECK(r0.Wn ==
          doctest::Approx(0.5 * s.params.L * l2_norm_sq(laplacian(s.q)))
              .epsilon(1e-15));
    CHECK(r0.r_min == min_value(s.r));
    CHECK(tracker.w_advisory_count() == 0);
    CHECK(tracker.sup_w() == r0.Wn);
}

TEST_CASE("per-step records satisfy the energy identity and running sums") {
    SchemeState s = bump_state(64, 1e-3);
    DiagnosticsTracker tracker(s);
    const double e0 = tracker.initial_energy();
    StepOptions opt;  // cg_tol 1e-12

    double e_prev = e0;
    double h_sum_manual = 0.0;
    double lap_manual = 0.0;
    std::vector<DiagnosticsRecord> recs;
    for (int n = 1; n <= 20; ++n) {
        const QTensorField pn = aux_gradient_field(s.q, s.params);
        auto [next, rep] = step(s, pn, opt);
        const DiagnosticsRecord rec = tracker.after_step(s, next, pn, rep);

        CHECK(rec.n == n);
        CHECK(rec.E <= e_prev);
        CHECK(std::fabs(rec.dE_identity) <= 1e-9 * e0);
        h_sum_manual += rec.H_norm_sq * next.dt;
        CHECK(rec.H_sum == doctest::Approx(h_sum_manual).epsilon(1e-15));
        lap_manual += rec.laplQ_l2 * rec.laplQ_l2 * next.dt;
        CHECK(rec.cg_iters == rep.iterations);
        CHECK(rec.cg_iters > 0);
        CHECK(rec.Vn_max >= 0.0);
        CHECK(rec.Wn >= 0.5 * s.params.L * rec.laplQ_l2 * rec.laplQ_l2 *
                            (1.0 - 1e-12));
        CHECK(tracker.sup_w() >= rec.Wn);

        e_prev = rec.E;
        recs.push_back(rec);
        s = std::move(next);
    }
    CHECK(tracker.h_sum() == recs.back().H_sum);
    CHECK(tracker.lap_sq_time_sum() ==
          doctest::Approx(lap_manual).epsilon(1e-12));
    // The dissipation sum is bounded by twice the initial energy.
    CHECK(s.params.M * tracker.h_sum() <= 2.0 * e0 * (1.0 + 1e-8));
}

TEST_CASE("advisory counter flags steps whose W_n dt exceeds one") {
    // Sharp initial data on a long step: the initial W_0 dt already crosses
    // the threshold where the drift bound's constant degrades.
    const SchemeState s = bump_state(64, 0.1);
    const DiagnosticsTracker tracker(s);
    CHECK(tracker.initial_record().Wn * s.dt > 1.0);
    CHECK(tracker.w_advisory_count() == 1);
}

TEST_CASE("csv writers emit the pinned header and full-precision rows") {
    std::ostringstream os;
    write_csv_header(os);
    CHECK(os.str() ==
          "n,t,E,dE_identity,H_norm_sq,H_sum,Vn_max,Vn_l2,Dn_l2,Wn,laplQ_l2,"
          "grad_rP_l2,r_min,cg_iters\n");

    DiagnosticsRecord rec;
    rec.n = 7;
    rec.t = 7e-3;
    rec.E = 1.0 / 3.0;
    rec.dE_identity = -1.25e-13;
    rec.H_norm_sq = std::sqrt(2.0);
    rec.H_sum = 0.1;
    rec.Vn_max = 5e-5;
    rec.Vn_l2 = 4e-5;
    rec.Dn_l2 = 3e-5;
    rec.Wn = 2.5;
    rec.laplQ_l2 = 11.0;
    rec.grad_rP_l2 = 0.25;
    rec.r_min = 0.9;
    rec.cg_iters = 12;

    std::ostringstream row;
    write_csv_row(row, rec);
    std::istringstream in(row.str());
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 14);
    CHECK(std::stol(cells[0]) == rec.n);
    CHECK(std::stod(cells[1]) == rec.t);  // 17 significant digits round-trip
    CHECK(std::stod(cells[2]) == rec.E);
    CHECK(std::stod(cells[3]) == rec.dE_identity);
    CHECK(std::stod(cells[4]) == rec.H_norm_sq);
    CHECK(std::stod(cells[13]) == rec.cg_iters);
}

TEST_CASE("history keeps snapshots on the stride and deduplicates") {
    const Grid g = grid_1d(4);
    const double dt = 0.5;
    TrajectoryHistory hist(dt, 2);
    for (long n = 0; n <= 5; ++n) hist.add(tagged_state(g, n, dt, n * 1.0));
    CHECK(hist.steps() == std::vector<long>{0, 2, 4});

    hist.add(tagged_state(g, 4, dt, 99.0));  // duplicate step index: ignored
    CHECK(hist.steps().size() == 3);
    CHECK(hist.q_at_step(4).v[0].q12 == 4.0);

    hist.add(tagged_state(g, 5, dt, 5.0), true);  // forced despite stride
    CHECK(hist.steps() == std::vector<long>{0, 2, 4, 5});

    CHECK(hist.r_at_step(2).v[0] == 2.0);
    CHECK_THROWS_AS(hist.q_at_step(3), StrideTooCoarseError);
}

TEST_CASE("interpolation reproduces nodes exactly and averages midpoints") {
    const Grid g = grid_1d(4);
    const double dt = 0.125;  // dyadic: interpolation weights come out exact
    TrajectoryHistory hist(dt, 1);
    // values with non-trivial binary representations
    const std::vector<double> vals = {1.0 / 3.0, std::sqrt(2.0), 0.7, 1.9};
    for (long n = 0; n < 4; ++n)
        hist.add(tagged_state(g, n, dt, vals[static_cast<std::size_t>(n)]));

    // Node hits are returned without arithmetic, bit for bit.
    for (long n = 0; n < 4; ++n) {
        const auto [q, r] = hist.interpolant_eval(static_cast<double>(n) * dt);
        CHECK(q.v[0].q12 == vals[static_cast<std::size_t>(n)]);
        CHECK(r.v[0] == vals[static_cast<std::size_t>(n)]);
    }
    // Round-off-level misses snap to the node.
    const auto [qs, rs] = hist.interpolant_eval(dt * (1.0 - 1e-13));
    CHECK(qs.v[0].q12 == vals[1]);
    CHECK(rs.v[0] == vals[1]);

    // Midpoints are exact averages of the bracketing snapshots (the dyadic
    // dt makes theta exactly 0.5, so even the bits must match).
    const auto [qm, rm] = hist.interpolant_eval(1.5 * dt);
    CHECK(qm.v[0].q12 == 0.5 * vals[1] + 0.5 * vals[2]);
    CHECK(rm.v[0] == 0.5 * vals[1] + 0.5 * vals[2]);

    // General convex combination, theta = 0.25 exactly.
    const auto [qg, rg] = hist.interpolant_eval(0.25 * dt);
    CHECK(rg.v[0] == 0.75 * vals[0] + 0.25 * vals[1]);
    CHECK(qg.v[0].q12 == rg.v[0]);

    CHECK_THROWS_AS(hist.interpolant_eval(-0.05), std::out_of_range);
    CHECK_THROWS_AS(hist.interpolant_eval(3.0 * dt * 1.001),
                    std::out_of_range);
}

TEST_CASE("interpolation between unsaved snapshots is refused") {
    const Grid g = grid_1d(4);
    const double dt = 0.1;
    TrajectoryHistory hist(dt, 2);
    for (long n = 0; n <= 4; ++n) hist.add(tagged_state(g, n, dt, n * 1.0));
    // steps kept: 0, 2, 4; t = 0.25 dt needs steps 0 and 1.
    CHECK_THROWS_AS(hist.interpolant_eval(0.25 * dt), StrideTooCoarseError);
    // stored nodes still evaluate exactly
    CHECK(hist.interpolant_eval(2.0 * dt).second.v[0] == 2.0);
}
