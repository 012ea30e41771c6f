// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "shrinkcast/truncation.hpp"

#include "shrinkcast/error.hpp"

namespace shrinkcast {

Checkpoint truncate(const Checkpoint& teacher, const LayerPlan& plan) {
    if (plan.teacher_layers != static_cast<int>(teacher.config.n_layers)) {
        throw Error(Errc::plan_mismatch, "plan expects a " + std::to_string(plan.teacher_layers) +
                                             "-layer teacher but checkpoint has " +
                                             std::to_string(teacher.config.n_layers) + " layers");
    }
    if (auto violations = validate_plan(plan); !violations.empty()) {
        throw Error(Errc::invalid_argument, "invalid plan: " + violations.front());
    }
    if (auto violations = validate_against_config(teacher); !violations.empty()) {
        throw Error(Errc::invalid_checkpoint, "teacher checkpoint invalid: " + violations.front());
    }

    Checkpoint student;
    student.config = teacher.config;
    student.config.n_layers = static_cast<std::uint32_t>(plan.student_layers);

    for (const auto& [name, tensor] : teacher.tensors) {
        if (!names::parse_layer_tensor(name)) student.add(tensor);
    }
    for (std::size_t i = 0; i < plan.selection.size(); ++i) {
        const auto source = static_cast<std::uint32_t>(plan.selection[i]);
        for (auto suffix : names::layer_suffixes()) {
            Tensor copy = teacher.at(names::layer_tensor(source, suffix));
            copy.name = names::layer_tensor(static_cast<std::uint32_t>(i), suffix);
            student.add(std::move(copy));
        }
    }
    return student;
}

}  // namespace shrinkcast
