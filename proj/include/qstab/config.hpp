#pragma once

#include <cstddef>

namespace qstab {

// Numerical tolerances used across the library. All checks that compare
// against one of these read the global instance, so a caller can tighten or
// relax them once at startup (they are not meant to be flipped mid-run).
struct Tolerances {
    double herm = 1e-10;   // Hermiticity residual on states
    double trace = 1e-10;  // unit-trace residual on states
    double psd = 1e-9;     // most negative admissible eigenvalue
    double orth = 1e-9;    // orthonormality residual of computed bases
    double rank = 1e-9;    // rank truncation in orthonormalization / SVD
    double eig = 1e-9;     // eigenvalue selection window (e.g. |eig-1|)
    double tp = 1e-9;      // trace-preservation residual of channels
    double idem = 1e-9;    // idempotency residual of projection channels
};

struct Config {
    Tolerances tol;
    // Hard cap on the Hilbert space dimension (superoperators scale as the
    // fourth power of this, so the default keeps the vectorized side at 4096).
    std::size_t dim_cap = 64;
    // Kraus lists longer than kraus_cap(d) trigger re-extraction from the
    // Choi matrix when composing channels.
    std::size_t kraus_cap_min = 16;
};

Config& config();

}  // namespace qstab
