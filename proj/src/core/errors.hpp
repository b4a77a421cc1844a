// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#pragma once

#include <stdexcept>
#include <string>

namespace radsplat {

// Malformed or inconsistent input data (files, datasets, splits).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure during optimization or rendering (NaN loss, divergence).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-fatal conditions counted during long-running operations.
struct WarnCounter {
    std::size_t degenerate_neighborhoods = 0;
    std::size_t coincident_view_targets = 0;
    std::size_t renormalized_directions = 0;

    std::size_t total() const {
        return degenerate_neighborhoods + coincident_view_targets + renormalized_directions;
    }
};

} // namespace radsplat
