// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <vector>

namespace radsplat::ad {

// Dense row-major 2D array of doubles. Vectors are 1xC rows unless noted.
struct Array {
    std::size_t rows = 0, cols = 0;
    std::vector<double> v;

    Array() = default;
    Array(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

    static Array scalar(double x) {
        Array a(1, 1);
        a.v[0] = x;
        return a;
    }
    static Array row(std::initializer_list<double> xs) {
        Array a(1, xs.size());
        std::size_t i = 0;
        for (double x : xs)
            a.v[i++] = x;
        return a;
    }

    double& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
    std::size_t size() const { return rows * cols; }
    bool same_shape(const Array& o) const { return rows == o.rows && cols == o.cols; }
};

// Handle into a Tape's node list.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Real/imaginary pair; complex values never exist as a native dtype.
struct CVar {
    Var re, im;
};

// Single-owner reverse-mode tape over Array-valued nodes. Forward values are
// computed eagerly; gradients materialize on backward(). A tape must not be
// shared across concurrent writers; distinct tapes are independent.
class Tape {
public:
    // Leaf node (parameter or input); gradient retrievable after backward().
    Var input(Array value);

    // --- elementwise, same shape ---
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b); // hadamard
    Var hadamard(Var a, Var b) { return mul(a, b); }

    // --- scalar broadcast ---
    Var scale(Var a, double s);
    Var add_scalar(Var a, double s);

    // --- row-vector broadcast over [N,C] ---
    Var add_rowvec(Var x, Var r);
    Var mul_rowvec(Var x, Var r);
    Var sub_from_rowvec(Var r, Var x); // r - x per row

    // --- unary ---
    Var sin(Var a);
    Var cos(Var a);
    Var exp(Var a);
    Var sqrt(Var a); // d/dx at 0 defined as 0 (subgradient)
    Var abs(Var a);  // d/dx at 0 defined as 0
    Var relu(Var a);
    Var sigmoid(Var a);
    Var softplus(Var a);

    // --- structural ---
    Var matmul(Var a, Var b);
    Var softmax_rows(Var a);
    Var sum(Var a);          // -> 1x1
    Var mean(Var a);         // -> 1x1
    Var sum_rows(Var a);     // [N,C] -> [N,1]
    Var max_rows(Var a);     // [N,C] -> [N,1]; ties resolve to lowest index
    Var norm_l1(Var a);      // sum |a| -> 1x1
    Var norm_l2_rows(Var a); // [N,C] -> [N,1] row Euclidean norms

    // --- complex as (re, im) pairs ---
    CVar complex_mul(CVar a, CVar b);
    Var complex_modulus_sq(CVar a);

    // Extension point for fused ops with hand-derived adjoints. The backward
    // callback receives this tape plus the node's own id and must accumulate
    // into grad_buf(input) for every input it depends on.
    Var make_node(Array value, std::function<void(Tape&, int)> back);

    // Runs reverse accumulation from a scalar root. Gradients of all nodes are
    // zeroed first; the pass is deterministic (fixed reverse node order).
    void backward(Var root);

    const Array& val(Var x) const;
    const Array& grad(Var x) const;

    // For op implementations only.
    Array& grad_buf(int id);
    const Array& val_of(int id) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Array value;
        Array grad;
        std::function<void(Tape&, int)> back;
    };
    // deque: value/grad references stay valid while later nodes are pushed
    std::deque<Node> nodes_;
    bool grads_ready_ = false;

    int push(Array value, std::function<void(Tape&, int)> back);
    void check(Var x) const;
};

} // namespace radsplat::ad
