#include "qtflow/model.hpp"

#include <algorithm>
#include <cmath>

#include "qtflow/rng.hpp"

namespace qtflow {

double suggest_a0(double radius, const ModelParams& p) {
    // For fixed |Q| the bulk potential is minimized on the uniaxial family
    // (it extremizes tr Q^3 at fixed tr Q^2), so a dense amplitude sweep
    // finds the constrained minimum. Frobenius norm R corresponds to
    // uniaxial amplitude |s| = R sqrt(3/2); sweeping past that and adding a
    // fixed-seed random cloud only enlarges the sampled set, which can only
    // raise the suggestion (c > 0 keeps F_B coercive, so no spurious minima
    // appear at large amplitude).
    double f_min = 0.0;  // F_B(0) = 0 is always admissible
    const double s_max = 2.0 * radius;
    constexpr int kSweep = 4096;
    for (int i = -kSweep; i <= kSweep; ++i) {
        const double s = s_max * static_cast<double>(i) / kSweep;
        f_min = std::min(f_min, bulk_potential(QTensor::uniaxial(s, 0), p));
    }
    Rng rng(0x51f0a0);
    for (int i = 0; i < 4096; ++i)
        f_min = std::min(f_min, bulk_potential(rng.tensor(radius), p));
    return 1.0 + std::max(0.0, -2.0 * f_min);
}

}  // namespace qtflow
