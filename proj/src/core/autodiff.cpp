// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#include "core/autodiff.hpp"

#include "core/kernels.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

namespace radsplat::ad {

namespace {

void require(bool cond, const char* msg) {
    if (!cond)
        throw std::invalid_argument(std::string("tape: ") + msg);
}

} // namespace

int Tape::push(Array value, std::function<void(Tape&, int)> back) {
    nodes_.push_back(Node{std::move(value), Array{}, std::move(back)});
    grads_ready_ = false;
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::check(Var x) const {
    if (!x.valid() || static_cast<std::size_t>(x.id) >= nodes_.size())
        throw std::invalid_argument("tape: variable does not belong to this tape");
}

Var Tape::input(Array value) { return Var{push(std::move(value), nullptr)}; }

Var Tape::make_node(Array value, std::function<void(Tape&, int)> back) {
    return Var{push(std::move(value), std::move(back))};
}

const Array& Tape::val(Var x) const {
    check(x);
    return nodes_[static_cast<std::size_t>(x.id)].value;
}

const Array& Tape::grad(Var x) const {
    check(x);
    if (!grads_ready_)
        throw std::logic_error("tape: grad() before backward()");
    return nodes_[static_cast<std::size_t>(x.id)].grad;
}

Array& Tape::grad_buf(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }

const Array& Tape::val_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

void Tape::backward(Var root) {
    check(root);
    require(nodes_[static_cast<std::size_t>(root.id)].value.size() == 1,
            "backward root must be scalar");

    for (Node& n : nodes_)
        n.grad = Array(n.value.rows, n.value.cols, 0.0);
    nodes_[static_cast<std::size_t>(root.id)].grad.v[0] = 1.0;

    for (int i = root.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.back)
            n.back(*this, i);
    }
    grads_ready_ = true;
}

// ---------------------------------------------------------------------------
// elementwise binary
// ---------------------------------------------------------------------------

Var Tape::add(Var a, Var b) {
    check(a);
    check(b);
    const Array &va = val(a), &vb = val(b);
    require(va.same_shape(vb), "add: shape mismatch");
    Array out = va;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.v[i] += vb.v[i];
    const int ia = a.id, ib = b.id;
    return make_node(std::move(out), [ia, ib](Tape& t, int self) {
        const Array& g = t.grad_buf(self);
        Array &ga = t.grad_buf(ia), &gb = t.grad_buf(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.v[i] += g.v[i];
            gb.v[i] += g.v[i];
        }
    });
}

Var Tape::sub(Var a, Var b) {
    check(a);
    check(b);
    const Array &va = val(a), &vb = val(b);
    require(va.same_shape(vb), "sub: shape mismatch");
    Array out = va;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.v[i] -= vb.v[i];
    const int ia = a.id, ib = b.id;
    return make_node(std::move(out), [ia, ib](Tape& t, int self) {
        const Array& g = t.grad_buf(self);
        Array &ga = t.grad_buf(ia), &gb = t.grad_buf(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.v[i] += g.v[i];
            gb.v[i] -= g.v[i];
        }
    });
}

Var Tape::mul(Var a, Var b) {
    check(a);
    check(b);
    const Array &va = val(a), &vb = val(b);
    require(va.same_shape(vb), "mul: shape mismatch");
    Array out = va;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.v[i] *= vb.v[i];
    const int ia = a.id, ib = b.id;
    return make_node(std::move(out), [ia, ib](Tape& t, int self) {
        const Array& g = t.grad_buf(self);
        const Array &va2 = t.val_of(ia), &vb2 = t.val_of(ib);
        Array &ga = t.grad_buf(ia), &gb = t.grad_buf(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.v[i] += g.v[i] * vb2.v[i];
            gb.v[i] += g.v[i] * va2.v[i];
        }
    });
}

// ---------------------------------------------------------------------------
// scalar broadcast
// ---------------------------------------------------------------------------

Var Tape::scale(Var a, double s) {
    check(a);
    Array out = val(a);
    for (double& x : out.v)
        x *= s;
    const int ia = a.id;
    return make_node(std::move(out), [ia, s](Tape& t, int self) {
        const Array& g = t.grad_buf(self);
        Array& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
            ga.v[i] += g.v[i] * s;
    });
}

Var Tape::add_scalar(Var a, double s) {
    check(a);
    Array out = val(a);
    for (double& x : out.v)
        x += s;
    const int ia = a.id;
    return make_node(std::move(out), [ia](Tape& t, int self) {
        const Array& g = t.grad_buf(self);
        Array& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
            ga.v[i] += g.v[i];
    });
}

// ---------------------------------------------------------------------------
// row-vector broadcast
// ---------------------------------------------------------------------------

Var Tape::add_rowvec(Var x, Var r) {
    check(x);
    check(r);
    const Array &vx = val(x), &vr = val(r);
    require(vr.rows == 1 && vr.cols == vx.cols, "add_rowvec: row vector shape mismatch");
    Array out = vx;
    for (std::size_t i = 0; i < vx.rows; ++i)
        for (std::size_t j = 0; j < vx.cols; ++j)
            out.at(i, j) += vr.v[j];
    const int ix = x.id, ir = r.id;
    return make_node(std::move(out), [ix, ir](Tape& t, int self) {
        const Array& g = t.grad_buf(self);
        Array &gx = t.grad_buf(ix), &gr = t.grad_buf(ir);
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j) {
                gx.at(i, j) += g.at(i, j);
                gr.v[j] += g.at(i, j);
            }
    });
}

Var Tape::mul_rowvec(Var x, Var r) {
    check(x);
    check(r);
    const Array &vx = val(x), &vr = val(r);
    require(vr.rows == 1 && vr.cols == vx.cols, "mul_rowvec: row vector shape mismatch");
    Array out = vx;
    for (std::size_t i = 0; i < vx.rows; ++i)
        for (std::size_t j = 0; j < vx.cols; ++j)
            out.at(i, j) *= vr.v[j];
    const int ix = x.id, ir = r.id;
    return make_node(std::move(out), [ix, ir](Tape& t, int self) {
        const Array& g = t.grad_buf(self);
        const Array &vx2 = t.val_of(ix), &vr2 = t.val_of(ir);
        Array &gx = t.grad_buf(ix), &gr = t.grad_buf(ir);
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j) {
                gx.at(i, j) += g.at(i, j) * vr2.v[j];
                gr.v[j] += g.at(i, j) * vx2.at(i, j);
            }
    });
}

Var Tape::sub_from_rowvec(Var r, Var x) {
    check(x);
    check(r);
    const Array &vx = val(x), &vr = val(r);
    require(vr.rows == 1 && vr.cols == vx.cols, "sub_from_rowvec: row vector shape mismatch");
    Array out(vx.rows, vx.cols);
    for (std::size_t i = 0; i < vx.rows; ++i)
        for (std::size_t j = 0; j < vx.cols; ++j)
            out.at(i, j) = vr.v[j] - vx.at(i, j);
    const int ix = x.id, ir = r.id;
    return make_node(std::move(out), [ix, ir](Tape& t, int self) {
        const Array& g = t.grad_buf(self);
        Array &gx = t.grad_buf(ix), &gr = t.grad_buf(ir);
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j) {
                gx.at(i, j) -= g.at(i, j);
                gr.v[j] += g.at(i, j);
            }
    });
}

// ---------------------------------------------------------------------------
// unary elementwise
// ---------------------------------------------------------------------------

namespace {

template <typename F, typename DF>
Var unary_op(Tape& t, Var a, F f, DF df_from_xy) {
    const Array& va = t.val(a);
    Array out = va;
    for (double& x : out.v)
        x = f(x);
    const int ia = a.id;
    return t.make_node(std::move(out), [ia, df_from_xy](Tape& tt, int self) {
        const Array& g = tt.grad_buf(self);
        const Array& x = tt.val_of(ia);
        const Array& y = tt.val_of(self);
        Array& ga = tt.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
            ga.v[i] += g.v[i] * df_from_xy(x.v[i], y.v[i]);
    });
}

} // namespace

Var Tape::sin(Var a) {
    check(a);
    return unary_op(
        *this, a, [](double x) { return std::sin(x); },
        [](double x, double) { return std::cos(x); });
}

Var Tape::cos(Var a) {
    check(a);
    return unary_op(
        *this, a, [](double x) { return std::cos(x); },
        [](double x, double) { return -std::sin(x); });
}

Var Tape::exp(Var a) {
    check(a);
    return unary_op(
        *this, a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var Tape::sqrt(Var a) {
    check(a);
    return unary_op(
        *this, a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Var Tape::abs(Var a) {
    check(a);
    return unary_op(
        *this, a, [](double x) { return std::fabs(x); },
        [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var Tape::relu(Var a) {
    check(a);
    return unary_op(
        *this, a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var Tape::sigmoid(Var a) {
    check(a);
    return unary_op(
        *this, a, [](double x) { return kernels::sigmoid(x); },
        [](double, double y) { return y * (1.0 - y); });
}

Var Tape::softplus(Var a) {
    check(a);
    return unary_op(
        *this, a, [](double x) { return kernels::softplus(x); },
        [](double x, double) { return kernels::sigmoid(x); });
}

// ---------------------------------------------------------------------------
// structural
// ---------------------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
    check(a);
    check(b);
    const Array &va = val(a), &vb = val(b);
    require(va.cols == vb.rows, "matmul: inner dimensions differ");
    Array out = kernels::matmul(va, vb);
    const int ia = a.id, ib = b.id;
    return make_node(std::move(out), [ia, ib](Tape& t, int self) {
        const Array& g = t.grad_buf(self);
        const Array &va2 = t.val_of(ia), &vb2 = t.val_of(ib);
        const Array da = kernels::matmul_nt(g, vb2); // dA = G * B^T
        const Array db = kernels::matmul_tn(va2, g); // dB = A^T * G
        Array &ga = t.grad_buf(ia), &gb = t.grad_buf(ib);
        for (std::size_t i = 0; i < da.size(); ++i)
            ga.v[i] += da.v[i];
        for (std::size_t i = 0; i < db.size(); ++i)
            gb.v[i] += db.v[i];
    });
}

Var Tape::softmax_rows(Var a) {
    check(a);
    const Array& va = val(a);
    Array out(va.rows, va.cols);
    for (std::size_t i = 0; i < va.rows; ++i) {
        double mx = va.at(i, 0);
        for (std::size_t j = 1; j < va.cols; ++j)
            mx = std::max(mx, va.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < va.cols; ++j) {
            const double e = std::exp(va.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < va.cols; ++j)
            out.at(i, j) /= sum;
    }
    const int ia = a.id;
    return make_node(std::move(out), [ia](Tape& t, int self) {
        const Array& g = t.grad_buf(self);
        const Array& y = t.val_of(self);
        Array& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < g.cols; ++j)
                dot += g.at(i, j) * y.at(i, j);
            for (std::size_t j = 0; j < g.cols; ++j)
                ga.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
        }
    });
}

Var Tape::sum(Var a) {
    check(a);
    const Array& va = val(a);
    double s = 0.0;
    for (double x : va.v)
        s += x;
    const int ia = a.id;
    return make_node(Array::scalar(s), [ia](Tape& t, int self) {
        const double g = t.grad_buf(self).v[0];
        Array& ga = t.grad_buf(ia);
        for (double& x : ga.v)
            x += g;
    });
}

Var Tape::mean(Var a) {
    check(a);
    const std::size_t n = val(a).size();
    require(n > 0, "mean of empty array");
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var Tape::sum_rows(Var a) {
    check(a);
    const Array& va = val(a);
    Array out(va.rows, 1);
    for (std::size_t i = 0; i < va.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < va.cols; ++j)
            s += va.at(i, j);
        out.v[i] = s;
    }
    const int ia = a.id;
    return make_node(std::move(out), [ia](Tape& t, int self) {
        const Array& g = t.grad_buf(self);
        Array& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < ga.rows; ++i)
            for (std::size_t j = 0; j < ga.cols; ++j)
                ga.at(i, j) += g.v[i];
    });
}

Var Tape::max_rows(Var a) {
    check(a);
    const Array& va = val(a);
    require(va.cols >= 1, "max_rows: empty rows");
    Array out(va.rows, 1);
    auto argmax = std::make_shared<std::vector<std::size_t>>(va.rows);
    for (std::size_t i = 0; i < va.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < va.cols; ++j)
            if (va.at(i, j) > va.at(i, best))
                best = j; // strict >, ties keep lowest index
        (*argmax)[i] = best;
        out.v[i] = va.at(i, best);
    }
    const int ia = a.id;
    return make_node(std::move(out), [ia, argmax](Tape& t, int self) {
        const Array& g = t.grad_buf(self);
        Array& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.rows; ++i)
            ga.at(i, (*argmax)[i]) += g.v[i];
    });
}

Var Tape::norm_l1(Var a) { return sum(abs(a)); }

Var Tape::norm_l2_rows(Var a) { return sqrt(sum_rows(mul(a, a))); }

// ---------------------------------------------------------------------------
// complex pairs
// ---------------------------------------------------------------------------

CVar Tape::complex_mul(CVar a, CVar b) {
    // (ar + j ai)(br + j bi) = (ar br - ai bi) + j(ar bi + ai br)
    Var re = sub(mul(a.re, b.re), mul(a.im, b.im));
    Var im = add(mul(a.re, b.im), mul(a.im, b.re));
    return {re, im};
}

Var Tape::complex_modulus_sq(CVar a) { return add(mul(a.re, a.re), mul(a.im, a.im)); }

} // namespace radsplat::ad
