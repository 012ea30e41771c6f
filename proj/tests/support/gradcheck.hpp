// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference gradient checking over a set of parameter
// buffers.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "shrinkcast/model.hpp"

namespace shrinkcast::testing {

struct GradBuffer {
    std::string name;
    std::span<double> values;          // perturbed in place
    std::span<const double> analytic;  // claimed gradient, same length
};

struct GradCheckOptions {
    double step = 1e-3;
    int samples = 100;
    std::uint64_t seed = 7;
    // Denominator floor for the relative error: |a - n| / max(|a|, |n|, floor).
    double floor = 1e-6;
};

struct GradCheckReport {
    int checked = 0;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::string worst;  // "<buffer>[<index>] analytic=.. numeric=.."
};

/// Samples `samples` coordinates uniformly over all buffers and compares the
/// analytic value with (f(x+h) - f(x-h)) / 2h.
GradCheckReport check_gradients(const std::vector<GradBuffer>& buffers, const std::function<double()>& loss,
                                const GradCheckOptions& options = {});

/// Pairs every parameter view of `params` with the matching view of `grads`.
std::vector<GradBuffer> parameter_buffers(Parameters& params, Parameters& grads, const std::string& prefix = "");

}  // namespace shrinkcast::testing
