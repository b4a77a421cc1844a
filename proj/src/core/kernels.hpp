// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#pragma once

#include "core/autodiff.hpp"

#include <cmath>

namespace radsplat::kernels {

using ad::Array;

// C = A * B (row-major dense, Eigen-backed)
Array matmul(const Array& a, const Array& b);
// C = A^T * B
Array matmul_tn(const Array& a, const Array& b);
// C = A * B^T
Array matmul_nt(const Array& a, const Array& b);

inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x) {
    // log(1 + e^x), overflow-safe
    return x > 30.0 ? x : std::log1p(std::exp(x));
}

// Real spherical harmonics basis (graphics convention), degrees 0..k, at a
// unit direction. out must hold (k+1)^2 values. Supported k: 0..3.
void sh_basis(int k, double x, double y, double z, double* out);
// Jacobian of the basis w.r.t. (x, y, z): jac[b*3 + c]. Same layout as sh_basis.
void sh_basis_jac(int k, double x, double y, double z, double* jac);

// Positional encoding of one scalar coordinate across orders v = 1..V:
// out_sin[v-1] = sin(pi^v d), out_cos[v-1] = cos(pi^v d).
void pos_encode_scalar(double d, int order, double* out_sin, double* out_cos);

} // namespace radsplat::kernels
