#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "qtflow/grid.hpp"
#include "qtflow/model.hpp"
#include "qtflow/stepper.hpp"

namespace qtflow {

enum class InitialKind { Zero, UniaxialBump, RandomSeeded, File };

/// Initial-condition description. Bump: uniaxial tensor whose amplitude is
/// s * prod_a cos^2(pi u_a / 2) on |u_a| < 1, u_a = (x_a - center_a)/width_a,
/// exactly zero outside — compactly supported, so Dirichlet boundaries hold
/// zero by construction. Random: i.i.d. coefficients in [-amplitude,
/// amplitude] from the fixed seeded stream, boundary projected afterwards.
struct InitialSpec {
    InitialKind kind = InitialKind::Zero;
    double s = 1.0;
    std::array<double, 3> center = {0.5, 0.5, 0.5};
    std::array<double, 3> width = {0.25, 0.25, 0.25};
    int axis = 0;
    std::uint64_t seed = 1;
    double amplitude = 0.1;
    std::string path;

    friend bool operator==(const InitialSpec&, const InitialSpec&) = default;
};

struct RunConfig {
    Grid grid;
    ModelParams params;    // params.A0 is meaningful only when !a0_auto
    bool a0_auto = true;   // pick the quadratization shift from the data
    double dt = 1e-3;
    double T = 0.5;
    InitialSpec initial;
    double cg_tol = 1e-12;
    long cg_max_iter = 0;  // 0 = 10 * node count
    long snapshot_stride = 1;
    std::string output_dir = "out";
    bool abort_on_r_loss = false;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parse the `[section]` / `key = value` text. ParseError carries the line
/// and key for syntax problems; ValidationError lists every violated
/// invariant at once. Defaults are filled for anything omitted.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical rendering: fixed section order, full-precision numbers,
/// defaults written out. serialize(parse(.)) is idempotent.
std::string serialize_config(const RunConfig& cfg);

/// Build Q0 from the initial spec (honoring the BC), resolve A0 when
/// automatic, and set r0 = r(Q0). NonpositiveRadicandError is reported
/// with the offending node and a suggested A0.
SchemeState make_initial(const RunConfig& cfg);

/// Solver knobs of the config as step options.
StepOptions solve_options(const RunConfig& cfg);

/// The built-in desk-scale problem: 1D, 64 cells on [0,1], Dirichlet,
/// a = -0.3, b = 1, c = 1, L = 0.01, M = 1, uniaxial bump, dt = 1e-3,
/// T = 0.5. Used by selftest and as a documented starting point.
RunConfig default_config();

}  // namespace qtflow
