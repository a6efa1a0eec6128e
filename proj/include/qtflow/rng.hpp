#pragma once

#include <cstdint>
#include <random>

#include "qtflow/qtensor.hpp"

namespace qtflow {

/// Seeded random source with a platform-independent stream: mt19937_64 has
/// a standardized sequence, and doubles are derived by explicit bit scaling
/// rather than std::uniform_real_distribution (whose output is
/// implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1), 53 random mantissa bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Tensor whose five coefficients are i.i.d. uniform in [-amp, amp].
    QTensor tensor(double amp) {
        QTensor q;
        q.q11 = uniform(-amp, amp);
        q.q12 = uniform(-amp, amp);
        q.q13 = uniform(-amp, amp);
        q.q22 = uniform(-amp, amp);
        q.q23 = uniform(-amp, amp);
        return q;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace qtflow
