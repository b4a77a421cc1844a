// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#include "core/kernels.hpp"

#include <Eigen/Core>

#include <stdexcept>

namespace radsplat::kernels {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

// Real SH constants, graphics convention (matches the usual splatting basis).
constexpr double SH_C0 = 0.28209479177387814;
constexpr double SH_C1 = 0.4886025119029199;
constexpr double SH_C2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                             -1.0925484305920792, 0.5462742152960396};
constexpr double SH_C3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                             0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                             -0.5900435899266435};

} // namespace

Array matmul(const Array& a, const Array& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: inner dimensions differ");
    Array c(a.rows, b.cols);
    MMap(c.v.data(), (Eigen::Index)c.rows, (Eigen::Index)c.cols) =
        CMap(a.v.data(), (Eigen::Index)a.rows, (Eigen::Index)a.cols) *
        CMap(b.v.data(), (Eigen::Index)b.rows, (Eigen::Index)b.cols);
    return c;
}

Array matmul_tn(const Array& a, const Array& b) {
    if (a.rows != b.rows)
        throw std::invalid_argument("matmul_tn: row counts differ");
    Array c(a.cols, b.cols);
    MMap(c.v.data(), (Eigen::Index)c.rows, (Eigen::Index)c.cols) =
        CMap(a.v.data(), (Eigen::Index)a.rows, (Eigen::Index)a.cols).transpose() *
        CMap(b.v.data(), (Eigen::Index)b.rows, (Eigen::Index)b.cols);
    return c;
}

Array matmul_nt(const Array& a, const Array& b) {
    if (a.cols != b.cols)
        throw std::invalid_argument("matmul_nt: column counts differ");
    Array c(a.rows, b.rows);
    MMap(c.v.data(), (Eigen::Index)c.rows, (Eigen::Index)c.cols) =
        CMap(a.v.data(), (Eigen::Index)a.rows, (Eigen::Index)a.cols) *
        CMap(b.v.data(), (Eigen::Index)b.rows, (Eigen::Index)b.cols).transpose();
    return c;
}

void sh_basis(int k, double x, double y, double z, double* out) {
    if (k < 0 || k > 3)
        throw std::invalid_argument("sh_basis: degree must be in [0,3]");
    out[0] = SH_C0;
    if (k < 1)
        return;
    out[1] = -SH_C1 * y;
    out[2] = SH_C1 * z;
    out[3] = -SH_C1 * x;
    if (k < 2)
        return;
    const double xx = x * x, yy = y * y, zz = z * z;
    out[4] = SH_C2[0] * x * y;
    out[5] = SH_C2[1] * y * z;
    out[6] = SH_C2[2] * (2.0 * zz - xx - yy);
    out[7] = SH_C2[3] * x * z;
    out[8] = SH_C2[4] * (xx - yy);
    if (k < 3)
        return;
    out[9] = SH_C3[0] * y * (3.0 * xx - yy);
    out[10] = SH_C3[1] * x * y * z;
    out[11] = SH_C3[2] * y * (4.0 * zz - xx - yy);
    out[12] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    out[13] = SH_C3[4] * x * (4.0 * zz - xx - yy);
    out[14] = SH_C3[5] * z * (xx - yy);
    out[15] = SH_C3[6] * x * (xx - 3.0 * yy);
}

void sh_basis_jac(int k, double x, double y, double z, double* jac) {
    if (k < 0 || k > 3)
        throw std::invalid_argument("sh_basis_jac: degree must be in [0,3]");
    auto set = [jac](int b, double gx, double gy, double gz) {
        jac[b * 3 + 0] = gx;
        jac[b * 3 + 1] = gy;
        jac[b * 3 + 2] = gz;
    };
    set(0, 0.0, 0.0, 0.0);
    if (k < 1)
        return;
    set(1, 0.0, -SH_C1, 0.0);
    set(2, 0.0, 0.0, SH_C1);
    set(3, -SH_C1, 0.0, 0.0);
    if (k < 2)
        return;
    const double xx = x * x, yy = y * y, zz = z * z;
    set(4, SH_C2[0] * y, SH_C2[0] * x, 0.0);
    set(5, 0.0, SH_C2[1] * z, SH_C2[1] * y);
    set(6, SH_C2[2] * (-2.0 * x), SH_C2[2] * (-2.0 * y), SH_C2[2] * 4.0 * z);
    set(7, SH_C2[3] * z, 0.0, SH_C2[3] * x);
    set(8, SH_C2[4] * 2.0 * x, SH_C2[4] * (-2.0 * y), 0.0);
    if (k < 3)
        return;
    set(9, SH_C3[0] * 6.0 * x * y, SH_C3[0] * (3.0 * xx - 3.0 * yy), 0.0);
    set(10, SH_C3[1] * y * z, SH_C3[1] * x * z, SH_C3[1] * x * y);
    set(11, SH_C3[2] * (-2.0 * x * y), SH_C3[2] * (4.0 * zz - xx - 3.0 * yy), SH_C3[2] * 8.0 * y * z);
    set(12, SH_C3[3] * (-6.0 * x * z), SH_C3[3] * (-6.0 * y * z), SH_C3[3] * (6.0 * zz - 3.0 * xx - 3.0 * yy));
    set(13, SH_C3[4] * (4.0 * zz - 3.0 * xx - yy), SH_C3[4] * (-2.0 * x * y), SH_C3[4] * 8.0 * x * z);
    set(14, SH_C3[5] * 2.0 * x * z, SH_C3[5] * (-2.0 * y * z), SH_C3[5] * (xx - yy));
    set(15, SH_C3[6] * (3.0 * xx - 3.0 * yy), SH_C3[6] * (-6.0 * x * y), 0.0);
}

void pos_encode_scalar(double d, int order, double* out_sin, double* out_cos) {
    double f = 1.0;
    for (int v = 0; v < order; ++v) {
        f *= M_PI;
        out_sin[v] = std::sin(f * d);
        out_cos[v] = std::cos(f * d);
    }
}

} // namespace radsplat::kernels
