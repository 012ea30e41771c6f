// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "shrinkcast/checkpoint.hpp"
#include "shrinkcast/planner.hpp"

namespace shrinkcast {

/// Builds a k-layer student from `teacher`: student layer i is a verbatim
/// copy of teacher layer plan.selection[i]; embeddings, final norm and LM
/// head are copied whole. Throws Errc::plan_mismatch if the plan was made for
/// a different depth, Errc::invalid_checkpoint if the teacher is incomplete.
Checkpoint truncate(const Checkpoint& teacher, const LayerPlan& plan);

}  // namespace shrinkcast
