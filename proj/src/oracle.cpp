#include "qtflow/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "qtflow/errors.hpp"

namespace qtflow {

long step_count(double T, double dt) {
    return static_cast<long>(std::floor(T / dt + 1e-9));
}

namespace {

std::string g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

TrajectoryHistory fine_reference(const Problem& problem, double dt_ref) {
    const double dt0 = problem.initial.dt;
    const long n0 = step_count(problem.T, dt0);
    const double ratio = dt0 / dt_ref;
    const long m = std::lround(ratio);
    if (m < 1 || std::fabs(ratio - static_cast<double>(m)) > 1e-9 * ratio) {
        throw std::invalid_argument(
            "reference step must divide the coarse step (dt0/dt_ref = " +
            std::to_string(ratio) + ")");
    }

    SchemeState s = problem.initial;
    s.dt = dt_ref;
    s.step_index = 0;
    s.time = 0.0;

    TrajectoryHistory hist(dt_ref, 1);
    hist.add(s, /*force=*/true);
    const long total = n0 * m;
    for (long k = 1; k <= total; ++k) {
        auto [next, rep] = step(s, problem.solve);
        s = std::move(next);
        if (k % m == 0) hist.add(s, /*force=*/true);
    }
    return hist;
}

SchemeState baseline_step(const SchemeState& s, const StepOptions& opt) {
    const long max_iter = opt.cg_max_iter > 0
                              ? opt.cg_max_iter
                              : 10 * static_cast<long>(s.q.grid.node_count());
    const double mdt = s.params.M * s.dt;
    const QTensorField rhs =
        lin_comb(1.0, s.q, -mdt, bulk_gradient_field(s.q, s.params));
    auto apply = [&](const QTensorField& x) {
        return lin_comb(1.0, x, -s.params.L * mdt, laplacian(x));
    };
    auto [q_next, rep] = cg_solve(apply, rhs, opt.cg_tol, max_iter, &s.q);
    if (!rep.converged) {
        throw NotConvergedError(
            rep, "baseline solve stalled at step " +
                     std::to_string(s.step_index + 1) +
                     ": relative residual " +
                     std::to_string(rep.rel_residual));
    }
    SchemeState next;
    next.params = s.params;
    next.dt = s.dt;
    next.step_index = s.step_index + 1;
    next.time = static_cast<double>(next.step_index) * s.dt;
    next.q = std::move(q_next);
    next.r = s.r;  // no auxiliary variable in this scheme
    return next;
}

SchemeState baseline_step(const SchemeState& s, double tol) {
    StepOptions opt;
    opt.cg_tol = tol;
    return baseline_step(s, opt);
}

void check_reference_gate(double ref_self_diff, double min_level_err) {
    if (ref_self_diff == 0.0) return;  // reference is exact (e.g. stationary)
    if (ref_self_diff < 0.25 * min_level_err) return;
    throw ReferenceUnconvergedError(
        "fine reference failed its self-consistency gate: half-step rerun "
        "differs by " +
        std::to_string(ref_self_diff) +
        " which is not small against the smallest level error " +
        std::to_string(min_level_err));
}

ConvergenceStudy run_convergence_study(const Problem& problem, int levels,
                                       double dt_ref) {
    if (levels < 3) {
        throw std::invalid_argument("a convergence study needs >= 3 levels");
    }
    const double dt0 = problem.initial.dt;
    const long n0 = step_count(problem.T, dt0);
    if (n0 < 1) {
        throw std::invalid_argument("final time shorter than one step");
    }
    const double dt_min = dt0 / static_cast<double>(1L << (levels - 1));
    const double dtr = dt_ref > 0.0 ? dt_ref : dt_min / 8.0;
    if (dtr > dt_min / 8.0 * (1.0 + 1e-12)) {
        throw std::invalid_argument(
            "reference step must be at least 8x finer than the finest level");
    }

    const TrajectoryHistory ref = fine_reference(problem, dtr);
    const TrajectoryHistory ref_half = fine_reference(problem, 0.5 * dtr);
    const long m_ref = std::lround(dt0 / dtr);
    ConvergenceStudy study;
    study.dt_ref = dtr;
    study.ref_self_diff = l2_norm(
        lin_comb(1.0, ref.q_at_step(n0 * m_ref), -1.0,
                 ref_half.q_at_step(n0 * 2 * m_ref)));

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int level = 0; level < levels; ++level) {
        const long m = 1L << level;
        const double dt_l = dt0 / static_cast<double>(m);

        SchemeState s = problem.initial;
        s.dt = dt_l;
        s.step_index = 0;
        s.time = 0.0;

        ConvergenceLevel lv;
        lv.level = level;
        lv.dt = dt_l;
        const long total = n0 * m;
        for (long k = 1; k <= total; ++k) {
            auto [next, rep] = step(s, problem.solve);
            s = std::move(next);
            if (k % m == 0) {
                const long j = k / m;  // coarse output index
                const QTensorField diff = lin_comb(
                    1.0, s.q, -1.0, ref.q_at_step(j * m_ref));
                lv.err_h2_sum += l2_norm_sq(laplacian(diff)) * dt0;
                if (j == n0) lv.err_final_l2 = l2_norm(diff);
            }
        }
        lv.order_running =
            study.levels.empty() || lv.err_final_l2 <= 0.0 ||
                    study.levels.back().err_final_l2 <= 0.0
                ? nan
                : std::log2(study.levels.back().err_final_l2 /
                            lv.err_final_l2);
        study.levels.push_back(lv);
    }

    double min_err = std::numeric_limits<double>::infinity();
    std::vector<double> dts, errs;
    for (const ConvergenceLevel& lv : study.levels) {
        min_err = std::min(min_err, lv.err_final_l2);
        if (lv.err_final_l2 > 0.0) {
            dts.push_back(lv.dt);
            errs.push_back(lv.err_final_l2);
        }
    }
    check_reference_gate(study.ref_self_diff, min_err);

    if (dts.size() >= 2) {
        study.fitted_order = fit_power_law(dts, errs, &study.fit_residual);
    } else {
        study.fitted_order = nan;
        study.fit_residual = nan;
    }
    return study;
}

void write_study_csv(std::ostream& os, const ConvergenceStudy& study) {
    os << "level,dt,err_final_l2,err_h2_sum,order_running\n";
    for (const ConvergenceLevel& lv : study.levels) {
        os << lv.level << ',' << g17(lv.dt) << ',' << g17(lv.err_final_l2)
           << ',' << g17(lv.err_h2_sum) << ',' << g17(lv.order_running)
           << '\n';
    }
    os << "fitted_order=" << g17(study.fitted_order)
       << " fit_residual=" << g17(study.fit_residual) << '\n';
}

double fit_power_law(const std::vector<double>& dt,
                     const std::vector<double>& err, double* residual) {
    if (dt.size() != err.size() || dt.size() < 2) {
        throw std::invalid_argument("fit needs >= 2 matching samples");
    }
    const double n = static_cast<double>(dt.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < dt.size(); ++i) {
        const double x = std::log(dt[i]);
        const double y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if (residual) {
        const double intercept = (sy - slope * sx) / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < dt.size(); ++i) {
            const double d =
                std::log(err[i]) - (intercept + slope * std::log(dt[i]));
            ss += d * d;
        }
        *residual = std::sqrt(ss / n);
    }
    return slope;
}

}  // namespace qtflow
