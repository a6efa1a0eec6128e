#include "qtflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "qtflow/errors.hpp"

namespace qtflow {

double energy(const SchemeState& s) {
    return 0.5 * s.params.L * gradient_norm_sq(s.q) + 0.5 * l2_norm_sq(s.r);
}

std::pair<ScalarField, ScalarField> drift_fields(const SchemeState& s) {
    const ScalarField signed_drift =
        lin_comb(1.0, s.r, -1.0, aux_value_field(s.q, s.params));
    ScalarField v(signed_drift.grid);
    for (std::size_t i = 0; i < v.size(); ++i)
        v.v[i] = std::fabs(signed_drift.v[i]);
    return {std::move(v), forward_gradient_magnitude(signed_drift)};
}

double grad_rp_norm(const ScalarField& r_next, const QTensorField& pn) {
    return std::sqrt(gradient_norm_sq(scaled_field(r_next, pn)));
}

DiagnosticsTracker::DiagnosticsTracker(const SchemeState& initial) {
    initial_.n = initial.step_index;
    initial_.t = initial.time;
    initial_.E = energy(initial);
    const ScalarField signed_drift = lin_comb(
        1.0, initial.r, -1.0, aux_value_field(initial.q, initial.params));
    initial_.Vn_max = max_abs(signed_drift);
    initial_.Vn_l2 = l2_norm(signed_drift);
    initial_.Dn_l2 = std::sqrt(gradient_norm_sq(signed_drift));
    const double lap_sq = l2_norm_sq(laplacian(initial.q));
    initial_.laplQ_l2 = std::sqrt(lap_sq);
    initial_.Wn = 0.5 * initial.params.L * lap_sq;
    initial_.r_min = min_value(initial.r);

    e_prev_ = initial_.E;
    sup_w_ = initial_.Wn;
    if (initial_.Wn * initial.dt > 1.0) ++w_advisories_;
}

DiagnosticsRecord DiagnosticsTracker::after_step(const SchemeState& prev,
                                                 const SchemeState& next,
                                                 const QTensorField& pn,
                                                 const SolveReport& rep) {
    const ModelParams& p = next.params;
    const double dt = next.dt;

    DiagnosticsRecord rec;
    rec.n = next.step_index;
    rec.t = next.time;
    rec.E = energy(next);
    rec.cg_iters = rep.iterations;

    const QTensorField dq = lin_comb(1.0, next.q, -1.0, prev.q);
    const ScalarField dr = lin_comb(1.0, next.r, -1.0, prev.r);
    const double grad_dq_sq = gradient_norm_sq(dq);

    rec.H_norm_sq = l2_norm_sq(h_field(next, pn));
    h_sum_ += rec.H_norm_sq * dt;
    rec.H_sum = h_sum_;

    // Exact per-step balance of the scheme: the residual is only the
    // leakage of the inexact linear solve.
    rec.dE_identity = rec.E - e_prev_ + 0.5 * p.L * grad_dq_sq +
                      0.5 * l2_norm_sq(dr) + p.M * rec.H_norm_sq * dt;
    e_prev_ = rec.E;

    const ScalarField signed_drift =
        lin_comb(1.0, next.r, -1.0, aux_value_field(next.q, p));
    rec.Vn_max = max_abs(signed_drift);
    rec.Vn_l2 = l2_norm(signed_drift);
    rec.Dn_l2 = std::sqrt(gradient_norm_sq(signed_drift));

    const double lap_sq = l2_norm_sq(laplacian(next.q));
    rec.laplQ_l2 = std::sqrt(lap_sq);
    lap_sq_time_sum_ += lap_sq * dt;
    w_increment_sum_ += grad_dq_sq / dt;
    rec.Wn = 0.5 * p.L * lap_sq + w_increment_sum_ / (2.0 * p.M);
    sup_w_ = std::max(sup_w_, rec.Wn);
    if (rec.Wn * dt > 1.0) ++w_advisories_;

    rec.grad_rP_l2 = grad_rp_norm(next.r, pn);
    rec.r_min = min_value(next.r);
    return rec;
}

const char kDiagnosticsCsvHeader[] =
    "n,t,E,dE_identity,H_norm_sq,H_sum,Vn_max,Vn_l2,Dn_l2,Wn,laplQ_l2,"
    "grad_rP_l2,r_min,cg_iters";

namespace {

std::string g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

void write_csv_header(std::ostream& os) { os << kDiagnosticsCsvHeader << '\n'; }

void write_csv_row(std::ostream& os, const DiagnosticsRecord& r) {
    os << r.n << ',' << g17(r.t) << ',' << g17(r.E) << ','
       << g17(r.dE_identity) << ',' << g17(r.H_norm_sq) << ','
       << g17(r.H_sum) << ',' << g17(r.Vn_max) << ',' << g17(r.Vn_l2) << ','
       << g17(r.Dn_l2) << ',' << g17(r.Wn) << ',' << g17(r.laplQ_l2) << ','
       << g17(r.grad_rP_l2) << ',' << g17(r.r_min) << ',' << r.cg_iters
       << '\n';
}

void TrajectoryHistory::add(const SchemeState& s, bool force) {
    if (!force && stride_ > 1 && s.step_index % stride_ != 0) return;
    if (!steps_.empty() && steps_.back() == s.step_index) return;
    steps_.push_back(s.step_index);
    qs_.push_back(s.q);
    rs_.push_back(s.r);
}

std::size_t TrajectoryHistory::position_of(long n) const {
    const auto it = std::lower_bound(steps_.begin(), steps_.end(), n);
    if (it == steps_.end() || *it != n) {
        throw StrideTooCoarseError(
            "snapshot at step " + std::to_string(n) +
            " was not kept (stride " + std::to_string(stride_) + ")");
    }
    return static_cast<std::size_t>(it - steps_.begin());
}

const QTensorField& TrajectoryHistory::q_at_step(long n) const {
    return qs_[position_of(n)];
}

const ScalarField& TrajectoryHistory::r_at_step(long n) const {
    return rs_[position_of(n)];
}

std::pair<QTensorField, ScalarField> TrajectoryHistory::interpolant_eval(
    double t) const {
    if (steps_.empty()) throw std::out_of_range("no snapshots stored");
    const double t_last = static_cast<double>(steps_.back()) * dt_;
    if (t < 0.0 || t > t_last * (1.0 + 1e-12) + 1e-300) {
        throw std::out_of_range("interpolation time " + std::to_string(t) +
                                " outside stored range [0, " +
                                std::to_string(t_last) + "]");
    }

    const double kd = t / dt_;
    long k = static_cast<long>(std::floor(kd));
    double theta = kd - static_cast<double>(k);
    // Snap to the nearest node when t sits on a step boundary up to
    // round-off, so stored snapshots are reproduced without arithmetic.
    if (theta > 1.0 - 1e-9) {
        ++k;
        theta = 0.0;
    } else if (theta < 1e-9) {
        theta = 0.0;
    }
    if (k > steps_.back()) k = steps_.back();

    if (theta == 0.0) {
        const std::size_t pos = position_of(k);
        return {qs_[pos], rs_[pos]};
    }
    const std::size_t lo = position_of(k);
    const std::size_t hi = position_of(k + 1);
    return {lin_comb(1.0 - theta, qs_[lo], theta, qs_[hi]),
            lin_comb(1.0 - theta, rs_[lo], theta, rs_[hi])};
}

}  // namespace qtflow
