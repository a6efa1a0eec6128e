#include "qtflow/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "qtflow/diagnostics.hpp"
#include "qtflow/errors.hpp"
#include "qtflow/field_io.hpp"
#include "qtflow/oracle.hpp"
#include "qtflow/rng.hpp"

namespace qtflow {

namespace fs = std::filesystem;

namespace {

std::string snap_name(char prefix, long n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c_%06ld.field", prefix, n);
    return buf;
}

void save_snapshot(const fs::path& dir, const SchemeState& s) {
    save_field((dir / snap_name('q', s.step_index)).string(), s.q);
    save_field((dir / snap_name('r', s.step_index)).string(), s.r);
}

}  // namespace

int run_simulation(const RunConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        std::cerr << "error: cannot create output directory " << dir << ": "
                  << ec.message() << "\n";
        return kExitIo;
    }
    {
        std::ofstream cf(dir / "config.txt");
        cf << serialize_config(cfg);
    }

    SchemeState state;
    try {
        state = make_initial(cfg);
    } catch (const NonpositiveRadicandError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRadicand;
    }
    const StepOptions opt = solve_options(cfg);
    const long n_steps = step_count(cfg.T, cfg.dt);

    std::ofstream csv(dir / "diagnostics.csv");
    if (!csv) {
        std::cerr << "error: cannot write diagnostics.csv in " << dir << "\n";
        return kExitIo;
    }
    DiagnosticsTracker tracker(state);
    write_csv_header(csv);
    write_csv_row(csv, tracker.initial_record());
    csv.flush();
    save_snapshot(dir, state);

    long r_loss_steps = 0;
    bool r_loss_announced = false;
    int exit_code = kExitOk;
    std::string abort_reason;

    for (long n = 1; n <= n_steps; ++n) {
        try {
            const QTensorField pn = aux_gradient_field(state.q, state.params);
            auto [next, rep] = step(state, pn, opt);
            const DiagnosticsRecord rec =
                tracker.after_step(state, next, pn, rep);
            write_csv_row(csv, rec);
            csv.flush();
            if (rec.r_min <= 0.0) {
                ++r_loss_steps;
                if (!r_loss_announced) {
                    std::cerr << "warning: auxiliary variable lost "
                                 "positivity at step "
                              << n << " (min r = " << format_g17(rec.r_min)
                              << "); continuing\n";
                    r_loss_announced = true;
                }
            }
            state = std::move(next);
            if (n % cfg.snapshot_stride == 0 || n == n_steps) {
                save_snapshot(dir, state);
            }
        } catch (const NotConvergedError& e) {
            abort_reason = e.what();
            exit_code = kExitNotConverged;
            break;
        } catch (const RPositivityLostError& e) {
            abort_reason = e.what();
            exit_code = kExitRLoss;
            break;
        } catch (const NonpositiveRadicandError& e) {
            abort_reason = e.what();
            exit_code = kExitRadicand;
            break;
        }
    }
    csv.flush();

    if (exit_code != kExitOk) {
        std::cerr << "error: " << abort_reason
                  << " (partial outputs in " << dir << ")\n";
        return exit_code;
    }

    const auto t_end = std::chrono::steady_clock::now();
    const double wall =
        std::chrono::duration<double>(t_end - t_start).count();
    const double e0 = tracker.initial_energy();
    const double e_final = energy(state);
    std::cout << "run: " << n_steps << " steps of dt=" << format_g17(cfg.dt)
              << " on " << state.q.grid.node_count() << " nodes\n";
    std::cout << "  E: " << format_g17(e0) << " -> " << format_g17(e_final)
              << " (drop "
              << format_g17(e0 > 0.0 ? 100.0 * (e0 - e_final) / e0 : 0.0)
              << "%)\n";
    std::cout << "  H_sum: " << format_g17(tracker.h_sum())
              << "  sup W_n: " << format_g17(tracker.sup_w()) << "\n";
    if (tracker.w_advisory_count() > 0) {
        std::cout << "  advisory: W_n*dt > 1 at "
                  << tracker.w_advisory_count()
                  << " step(s); drift-bound constants are not meaningful "
                     "at this step size\n";
    }
    if (r_loss_steps > 0) {
        std::cout << "  warning: r_min <= 0 at " << r_loss_steps
                  << " step(s)\n";
    }
    std::cout << "  wall time: " << format_g17(wall) << " s\n";
    std::cout << "  outputs in " << dir.string() << "\n";
    return kExitOk;
}

int run_study(const RunConfig& cfg, int levels, const std::string& out_dir) {
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        std::cerr << "error: cannot create output directory " << dir << ": "
                  << ec.message() << "\n";
        return kExitIo;
    }
    try {
        Problem problem{make_initial(cfg), cfg.T, solve_options(cfg)};
        const ConvergenceStudy study = run_convergence_study(problem, levels);
        std::ofstream os(dir / "study.csv");
        write_study_csv(os, study);
        write_study_csv(std::cout, study);
        std::cout << "reference: dt_ref=" << format_g17(study.dt_ref)
                  << " self-consistency gap="
                  << format_g17(study.ref_self_diff) << "\n";
        return kExitOk;
    } catch (const ReferenceUnconvergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitReference;
    } catch (const NonpositiveRadicandError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRadicand;
    } catch (const NotConvergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNotConverged;
    }
}

namespace {

struct AuditState {
    int checks = 0;
    int failures = 0;

    void record(const std::string& name, bool ok, const std::string& qoi) {
        ++checks;
        if (!ok) ++failures;
        std::cout << "  [" << (ok ? "ok" : "FAIL") << "] " << name;
        if (!qoi.empty()) std::cout << "  (" << qoi << ")";
        std::cout << "\n";
    }
};

}  // namespace

int run_audit(const std::string& dir_str) {
    const fs::path dir(dir_str);
    if (!fs::is_directory(dir)) {
        std::cerr << "error: " << dir << " is not a directory\n";
        return kExitIo;
    }
    RunConfig cfg;
    try {
        cfg = load_config((dir / "config.txt").string());
    } catch (const std::exception& e) {
        std::cerr << "error: cannot load " << (dir / "config.txt") << ": "
                  << e.what() << "\n";
        return kExitIo;
    }

    // Collect snapshot step indices from the q_NNNNNN.field names.
    std::vector<long> steps;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() == 14 && name.rfind("q_", 0) == 0 &&
            name.substr(8) == ".field") {
            steps.push_back(std::stol(name.substr(2, 6)));
        }
    }
    std::sort(steps.begin(), steps.end());
    if (steps.empty()) {
        std::cerr << "error: no q_*.field snapshots in " << dir << "\n";
        return kExitIo;
    }

    std::cout << "audit of " << dir.string() << " (" << steps.size()
              << " snapshots, steps " << steps.front() << ".."
              << steps.back() << ")\n";
    AuditState audit;

    std::vector<SchemeState> snaps;
    bool load_ok = true;
    std::string load_msg;
    try {
        for (long n : steps) {
            SchemeState s;
            s.q = load_qtensor_field((dir / snap_name('q', n)).string());
            s.r = load_scalar_field((dir / snap_name('r', n)).string());
            s.step_index = n;
            s.dt = cfg.dt;
            s.time = static_cast<double>(n) * cfg.dt;
            s.params = cfg.params;
            if (!grids_compatible(s.q.grid, cfg.grid) ||
                !grids_compatible(s.r.grid, cfg.grid)) {
                load_ok = false;
                load_msg = "snapshot " + std::to_string(n) +
                           " grid differs from config";
                break;
            }
            snaps.push_back(std::move(s));
        }
    } catch (const std::exception& e) {
        load_ok = false;
        load_msg = e.what();
    }
    audit.record("snapshots load and match the configured grid", load_ok,
                 load_msg);
    if (!load_ok) {
        std::cout << "AUDIT FAILED\n";
        return kExitAuditFailed;
    }

    // The config was normalized by the run, so A0 in it is only meaningful
    // for manual edits; with a0_auto the shift must be recovered the same
    // deterministic way the run did it.
    if (cfg.a0_auto) {
        try {
            const SchemeState fresh = make_initial(cfg);
            for (SchemeState& s : snaps) s.params = fresh.params;
        } catch (const std::exception& e) {
            audit.record("recover auto A0", false, e.what());
            std::cout << "AUDIT FAILED\n";
            return kExitAuditFailed;
        }
    }

    std::vector<double> energies;
    for (const SchemeState& s : snaps) energies.push_back(energy(s));
    const double e0 = energies.front();
    const double eps_solver = 100.0 * cfg.cg_tol * e0;

    bool monotone = true;
    double worst_rise = 0.0;
    for (std::size_t i = 1; i < energies.size(); ++i) {
        const long gap = snaps[i].step_index - snaps[i - 1].step_index;
        const double rise = energies[i] - energies[i - 1];
        worst_rise = std::max(worst_rise, rise);
        if (rise > eps_solver * static_cast<double>(std::max(1L, gap))) {
            monotone = false;
        }
    }
    audit.record("energy nonincreasing across snapshots", monotone,
                 "worst rise " + format_g17(worst_rise));

    if (snaps.front().step_index == 0) {
        const SchemeState& s0 = snaps.front();
        const ScalarField v0 = lin_comb(
            1.0, s0.r, -1.0, aux_value_field(s0.q, s0.params));
        const double v0_max = max_abs(v0);
        audit.record("initial auxiliary drift is exactly zero", v0_max == 0.0,
                     "max |r0 - r(Q0)| = " + format_g17(v0_max));
    }

    double r_min_all = min_value(snaps.front().r);
    for (const SchemeState& s : snaps)
        r_min_all = std::min(r_min_all, min_value(s.r));
    if (r_min_all <= 0.0) {
        std::cout << "  note: r_min <= 0 somewhere (min "
                  << format_g17(r_min_all)
                  << "); allowed, reported for information\n";
    }

    bool consecutive = true;
    for (std::size_t i = 1; i < snaps.size(); ++i) {
        if (snaps[i].step_index != snaps[i - 1].step_index + 1) {
            consecutive = false;
            break;
        }
    }
    if (!consecutive) {
        std::cout << "  note: snapshot stride > 1; per-step identity and "
                     "auxiliary-update checks are skipped (rerun with "
                     "snapshot_stride = 1 for a full audit)\n";
    } else if (snaps.size() >= 2) {
        bool identity_ok = true, r_update_ok = true, update_eq_ok = true;
        double worst_identity = 0.0, worst_r = 0.0, worst_eq = 0.0;
        for (std::size_t i = 1; i < snaps.size(); ++i) {
            const SchemeState& prev = snaps[i - 1];
            const SchemeState& next = snaps[i];
            const QTensorField pn = aux_gradient_field(prev.q, prev.params);
            const QTensorField h = h_field(next, pn);
            const QTensorField dq = lin_comb(1.0, next.q, -1.0, prev.q);
            const ScalarField dr = lin_comb(1.0, next.r, -1.0, prev.r);

            const double identity =
                energies[i] - energies[i - 1] +
                0.5 * cfg.params.L * gradient_norm_sq(dq) +
                0.5 * l2_norm_sq(dr) +
                cfg.params.M * l2_norm_sq(h) * cfg.dt;
            worst_identity = std::max(worst_identity, std::fabs(identity));
            if (std::fabs(identity) > eps_solver) identity_ok = false;

            const ScalarField r_resid = lin_comb(
                1.0, dr, -1.0, frobenius_field(pn, dq));
            const double r_err = max_abs(r_resid);
            worst_r = std::max(worst_r, r_err);
            if (r_err > 1e-12 * (1.0 + max_abs(next.r))) r_update_ok = false;

            const QTensorField eq_resid =
                lin_comb(1.0, dq, -cfg.params.M * cfg.dt, h);
            const double eq_err = l2_norm(eq_resid);
            worst_eq = std::max(worst_eq, eq_err);
            if (eq_err > 100.0 * cfg.cg_tol * (1.0 + l2_norm(prev.q))) {
                update_eq_ok = false;
            }
        }
        audit.record("per-step energy identity within solver tolerance",
                     identity_ok,
                     "worst |residual| " + format_g17(worst_identity) +
                         " vs " + format_g17(eps_solver));
        audit.record("auxiliary update r^{n+1} = r^n + P:(dQ) reproduced",
                     r_update_ok, "worst " + format_g17(worst_r));
        audit.record("update equation dQ = M dt H satisfied", update_eq_ok,
                     "worst " + format_g17(worst_eq));
    }

    // Cross-check the recomputed energies against the diagnostics CSV when
    // present (they were computed from bit-identical fields).
    const fs::path csv_path = dir / "diagnostics.csv";
    if (fs::exists(csv_path)) {
        std::ifstream is(csv_path);
        std::string line;
        std::getline(is, line);
        std::map<long, double> csv_e;
        while (std::getline(is, line)) {
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            const auto c3 = line.find(',', c2 + 1);
            if (c1 == std::string::npos || c2 == std::string::npos) continue;
            csv_e[std::stol(line.substr(0, c1))] =
                std::stod(line.substr(c2 + 1, c3 - c2 - 1));
        }
        bool csv_ok = true;
        double worst = 0.0;
        for (std::size_t i = 0; i < snaps.size(); ++i) {
            const auto it = csv_e.find(snaps[i].step_index);
            if (it == csv_e.end()) continue;
            const double diff = std::fabs(it->second - energies[i]);
            worst = std::max(worst, diff);
            if (diff > 1e-13 * std::max(1.0, std::fabs(energies[i]))) {
                csv_ok = false;
            }
        }
        audit.record("CSV energy column matches snapshot recomputation",
                     csv_ok, "worst gap " + format_g17(worst));
    }

    std::cout << (audit.failures == 0 ? "AUDIT PASSED" : "AUDIT FAILED")
              << " (" << audit.checks << " checks, " << audit.failures
              << " failures)\n";
    return audit.failures == 0 ? kExitOk : kExitAuditFailed;
}

namespace {

struct SelftestState {
    int checks = 0;
    int failures = 0;

    void record(const std::string& name, bool ok, const std::string& qoi) {
        ++checks;
        if (!ok) ++failures;
        std::cout << "  [" << (ok ? "ok" : "FAIL") << "] " << name;
        if (!qoi.empty()) std::cout << "  (" << qoi << ")";
        std::cout << "\n";
    }
};

QTensorField random_field(const Grid& g, Rng& rng, double amp) {
    QTensorField f(g);
    for (QTensor& q : f.v) q = rng.tensor(amp);
    project_bc(f);
    return f;
}

}  // namespace

int run_selftest() {
    std::cout << "selftest\n";
    SelftestState st;
    Rng rng(20260815);

    // Pointwise algebra identities on random tensors.
    {
        ModelParams p;
        p.a = 0.7;
        p.b = 1.3;
        p.c = 2.0;
        p.A0 = 3.0;
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const QTensor q = rng.tensor(1.0);
            const double r = aux_value(q, p);
            worst = std::max(worst, std::fabs(r * r -
                                              (2.0 * bulk_potential(q, p) +
                                               p.A0)));
            const QTensor gap =
                r * aux_gradient(q, p) - bulk_gradient(q, p);
            worst = std::max(worst, max_abs_coeff(gap));
            const auto m = q.matrix();
            worst = std::max(worst, std::fabs(m[0][0] + m[1][1] + m[2][2]));
        }
        st.record("tensor algebra identities (r^2, P r = S, trace)",
                  worst <= 1e-13, "worst " + format_g17(worst));
    }

    // Discrete duality of gradient and Laplacian under both BCs.
    for (const Bc bc : {Bc::DirichletZero, Bc::NeumannZero}) {
        Grid g;
        g.dim = 2;
        g.cells = {9, 7, 1};
        g.extent = {1.0, 1.3, 1.0};
        g.bc = bc;
        double worst = 0.0;
        for (int i = 0; i < 10; ++i) {
            const QTensorField f = random_field(g, rng, 1.0);
            const QTensorField g2 = random_field(g, rng, 1.0);
            const double sbp =
                std::fabs(l2_inner(laplacian(f), f) + gradient_norm_sq(f));
            worst = std::max(worst, sbp / std::max(1.0, gradient_norm_sq(f)));
            const double adj = std::fabs(l2_inner(laplacian(f), g2) -
                                         l2_inner(f, laplacian(g2)));
            worst = std::max(
                worst, adj / std::max(1.0, l2_norm(f) * l2_norm(g2)));
        }
        st.record(std::string("summation-by-parts and self-adjointness (") +
                      (bc == Bc::DirichletZero ? "dirichlet" : "neumann") +
                      ")",
                  worst <= 1e-12, "worst rel " + format_g17(worst));
    }

    // Update operator is SPD.
    {
        Grid g;
        g.dim = 1;
        g.cells = {32, 1, 1};
        g.bc = Bc::DirichletZero;
        ModelParams p;
        double worst_sym = 0.0;
        bool positive = true;
        Rng prng(7);
        const QTensorField pn = random_field(g, prng, 1.0);
        for (int i = 0; i < 10; ++i) {
            const QTensorField x = random_field(g, prng, 1.0);
            const QTensorField y = random_field(g, prng, 1.0);
            const QTensorField ax = apply_update_operator(x, pn, p, 1e-3);
            const QTensorField ay = apply_update_operator(y, pn, p, 1e-3);
            const double sym = std::fabs(l2_inner(ax, y) - l2_inner(x, ay));
            worst_sym = std::max(
                worst_sym, sym / std::max(1.0, l2_norm(x) * l2_norm(y)));
            if (l2_inner(ax, x) < l2_norm_sq(x) * (1.0 - 1e-12))
                positive = false;
        }
        st.record("update operator symmetric and positive definite",
                  worst_sym <= 1e-12 && positive,
                  "worst asym " + format_g17(worst_sym));
    }

    // Stationary zero problem: exact fixed point.
    {
        RunConfig cfg = default_config();
        cfg.initial.kind = InitialKind::Zero;
        cfg.a0_auto = false;
        cfg.params.A0 = 1.0;
        SchemeState s = make_initial(cfg);
        const double e0 = energy(s);
        bool fixed = true;
        for (int i = 0; i < 10; ++i) {
            auto [next, rep] = step(s, solve_options(cfg));
            fixed = fixed && rep.iterations == 0 &&
                    l2_norm(next.q) == 0.0 && energy(next) == e0;
            s = std::move(next);
        }
        st.record("zero state is an exact fixed point", fixed,
                  "E = " + format_g17(e0));
    }

    // Short default-problem run: energy law and drift bookkeeping.
    {
        const RunConfig cfg = default_config();
        SchemeState s = make_initial(cfg);
        DiagnosticsTracker tracker(s);
        const double e0 = tracker.initial_energy();
        bool monotone = true, identity_ok = true, hsum_ok = true;
        double e_prev = e0;
        for (int n = 1; n <= 50; ++n) {
            const QTensorField pn = aux_gradient_field(s.q, s.params);
            auto [next, rep] = step(s, pn, solve_options(cfg));
            const DiagnosticsRecord rec =
                tracker.after_step(s, next, pn, rep);
            if (rec.E > e_prev) monotone = false;
            if (std::fabs(rec.dE_identity) > 1e-9 * e0) identity_ok = false;
            if (rec.H_sum > 2.0 * e0 * (1.0 + 1e-8)) hsum_ok = false;
            e_prev = rec.E;
            s = std::move(next);
        }
        st.record("default problem: energy nonincreasing", monotone, "");
        st.record("default problem: per-step energy identity", identity_ok,
                  "tol " + format_g17(1e-9 * e0));
        st.record("default problem: dissipation sum bounded by 2 E0",
                  hsum_ok, "");
        st.record("initial drift V_0 exactly zero",
                  tracker.initial_record().Vn_max == 0.0, "");
    }

    // dt = 0 degenerate step is the identity.
    {
        RunConfig cfg = default_config();
        SchemeState s = make_initial(cfg);
        s.dt = 0.0;
        auto [next, rep] = step(s, solve_options(cfg));
        bool identical = rep.iterations == 0;
        for (std::size_t i = 0; i < s.q.size() && identical; ++i)
            identical = next.q.v[i] == s.q.v[i] && next.r.v[i] == s.r.v[i];
        st.record("dt = 0 step is the identity", identical, "");
    }

    std::cout << (st.failures == 0 ? "SELFTEST PASSED" : "SELFTEST FAILED")
              << " (" << st.checks << " checks, " << st.failures
              << " failures)\n";
    return st.failures == 0 ? kExitOk : 1;
}

}  // namespace qtflow
