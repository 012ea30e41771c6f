// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training signals for compressing a student: distillation from a teacher
// (vanilla, annealing, MATE, RAIL) and teacher-free regularisers (label
// smoothing, TF-reg, self-distillation). Teacher outputs never receive
// gradients; only the student, plus a MATE generator in its own step, do.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "shrinkcast/lm.hpp"
#include "shrinkcast/train.hpp"

namespace shrinkcast {

// ---------------------------------------------------------------------------
// Soft labels

enum class SmoothingMode { LabelSmoothing, TfReg };

struct SmoothingSpec {
    double alpha = 0.1;  // weight of the smoothing distribution
    double a = 0.9;      // TF-reg mass on the correct class
    int num_classes = 2;
    SmoothingMode mode = SmoothingMode::LabelSmoothing;

    std::string check() const;
};

/// (1 - alpha) * y + alpha / K. `y` must be one-hot.
std::vector<double> smooth_labels(std::span<const double> y, const SmoothingSpec& spec);

/// (1 - alpha) * y + alpha * p_c, where p_c puts `a` on the correct class and
/// (1 - a)/(K - 1) on every other class. Requires K >= 2.
std::vector<double> tfreg_labels(std::span<const double> y, const SmoothingSpec& spec);

/// Per-row smoothed targets for hard labels, using spec.mode.
Matrix smoothed_targets(std::span<const int> labels, const SmoothingSpec& spec);

// ---------------------------------------------------------------------------
// Logit-level losses

struct DistillConfig {
    double lambda_kd = 0.5;
    double temperature = 2.0;
    int anneal_max = 4;
    double mask_ratio = 0.3;
    double rail_weight = 1.0;
    bool rail_reseed_each_epoch = true;
    double mate_temperature = 1.0;  // Gumbel-softmax temperature of the generator

    std::string check() const;
};

struct DistillLoss {
    double loss = 0.0;
    Matrix d_student;  // d loss / d student logits
    std::vector<double> components;
};

/// (1-l) * CE(y, softmax(z_s)) + l * T^2 * KL(softmax(z_t/T) || softmax(z_s/T)),
/// averaged over rows. components = {ce, kl}.
DistillLoss vanilla_kd_loss(const Matrix& z_s, const Matrix& z_t, std::span<const int> targets,
                            const DistillConfig& cfg);

/// Phase-one annealing objective: mean squared error between z_s and
/// (epoch / anneal_max) * z_t over all logit entries. Valid for
/// 1 <= epoch <= anneal_max; later epochs train on ground truth only.
DistillLoss annealing_loss(const Matrix& z_s, const Matrix& z_t, int epoch, const DistillConfig& cfg);

/// KL(softmax(z_t) || softmax(z_s)) averaged over rows, with gradients for
/// both sides (the teacher side is only consumed by the MATE generator).
struct KlDivergence {
    double value = 0.0;
    Matrix d_teacher;
    Matrix d_student;
};
KlDivergence kl_teacher_student(const Matrix& z_t, const Matrix& z_s);

// ---------------------------------------------------------------------------
// RAIL: random intermediate layer matching

struct LayerPair {
    int teacher_layer;  // block index; uses hidden_states[teacher_layer + 1]
    int student_layer;
};

/// Sequence-mean pooled, L2-normalised hidden states: [batch, d].
Matrix pool_and_normalize(const Matrix& hidden, int batch, int seq);

struct RailLoss {
    double loss = 0.0;
    std::vector<Matrix> d_student_hidden;  // indexed like hidden_states
    std::vector<Matrix> d_projections;
};

/// Mean over pairs and sequences of || n(pool(h_s)) * P_j - n(pool(h_t)) ||^2
/// where P_j is the projection attached to the j-th pair.
RailLoss rail_loss(const ForwardTrace& student, const ForwardTrace& teacher, std::span<const LayerPair> pairing,
                   std::span<const Matrix> projections);

/// Teacher layers for a student of `student_layers` blocks, drawn with
/// random_k and paired in ascending order.
std::vector<LayerPair> rail_pairing(int teacher_layers, int student_layers, std::uint64_t seed);

// ---------------------------------------------------------------------------
// MATE: adversarial masked perturbation

/// Exactly ceil(ratio * seq) positions per sequence, chosen without
/// replacement. Row-major [batch, seq] flags.
std::vector<std::uint8_t> mate_mask(int batch, int seq, double ratio, std::uint64_t seed);

struct MateMaxResult {
    double divergence = 0.0;  // KL(teacher || student) on the soft-perturbed input
    Parameters generator_grads;  // gradient of the generator objective (-divergence)
    TokenBatch perturbed;
    std::vector<std::uint8_t> mask;
};

/// Generator objective on fixed mask and Gumbel noise ([batch*seq, vocab]).
/// Masked positions are fed to the generator as kMaskToken; its logits plus
/// noise, softened at cfg.mate_temperature, replace the masked inputs of
/// both teacher and student.
MateMaxResult mate_generator_objective(const TinyLm& generator, const TinyLm& teacher, const TinyLm& student,
                                       const TokenBatch& tokens, std::span<const std::uint8_t> mask,
                                       const Matrix& gumbel_noise, const DistillConfig& cfg);

/// Draws the mask and noise from `seed` and evaluates the generator objective.
MateMaxResult mate_max_step(const TinyLm& generator, const TinyLm& teacher, const TinyLm& student,
                            const TokenBatch& tokens, const DistillConfig& cfg, std::uint64_t seed);

struct MateMinResult {
    double loss = 0.0;
    Parameters grads;
    std::vector<double> components;  // {ce, kl_original, kl_perturbed}
};

/// CE(y) on the original tokens + mean of KL(teacher || student) on the
/// original and perturbed tokens.
MateMinResult mate_min_step(const TinyLm& student, const TinyLm& teacher, const TokenBatch& tokens,
                            const TokenBatch& perturbed, std::span<const int> targets);

// ---------------------------------------------------------------------------
// Objectives for train()

class SoftLabelObjective final : public Objective {
public:
    explicit SoftLabelObjective(SmoothingSpec spec);
    StepLoss compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                     const StepContext& ctx, Parameters& grads) override;

private:
    SmoothingSpec spec_;
};

class VanillaKdObjective final : public Objective {
public:
    VanillaKdObjective(std::shared_ptr<const TinyLm> teacher, DistillConfig cfg);
    std::vector<std::string> component_names() const override { return {"ce", "kl"}; }
    StepLoss compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                     const StepContext& ctx, Parameters& grads) override;

private:
    std::shared_ptr<const TinyLm> teacher_;
    DistillConfig cfg_;
};

/// Logit MSE against a sharpening teacher for epochs 1..anneal_max, then
/// plain cross-entropy.
class AnnealingObjective final : public Objective {
public:
    AnnealingObjective(std::shared_ptr<const TinyLm> teacher, DistillConfig cfg);
    std::vector<std::string> component_names() const override { return {"phase", "mse", "ce"}; }
    StepLoss compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                     const StepContext& ctx, Parameters& grads) override;

private:
    std::shared_ptr<const TinyLm> teacher_;
    DistillConfig cfg_;
};

/// Vanilla KD + rail_weight * RAIL term. Owns identity-initialised
/// projections, trained with their own optimizer.
class RailObjective final : public Objective {
public:
    RailObjective(std::shared_ptr<const TinyLm> teacher, int student_layers, int d_model, DistillConfig cfg,
                  TrainConfig projection_cfg, std::uint64_t seed);
    std::vector<std::string> component_names() const override { return {"ce", "kl", "rail"}; }
    StepLoss compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                     const StepContext& ctx, Parameters& grads) override;

    const std::vector<LayerPair>& pairing() const { return pairing_; }
    const std::vector<Matrix>& projections() const { return projections_; }

private:
    std::shared_ptr<const TinyLm> teacher_;
    int student_layers_;
    DistillConfig cfg_;
    std::uint64_t seed_;
    int pairing_epoch_ = 0;
    std::vector<LayerPair> pairing_;
    std::vector<Matrix> projections_;
    Optimizer optimizer_;
};

/// Alternates a generator ascent step on KL(teacher || student) with a
/// student descent step on CE + KL over original and perturbed inputs.
class MateObjective final : public Objective {
public:
    MateObjective(std::shared_ptr<const TinyLm> teacher, Parameters generator_init, DistillConfig cfg,
                  TrainConfig generator_cfg);
    std::vector<std::string> component_names() const override {
        return {"ce", "kl_original", "kl_perturbed", "generator_kl"};
    }
    StepLoss compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                     const StepContext& ctx, Parameters& grads) override;

    const TinyLm& generator() const { return generator_; }

private:
    std::shared_ptr<const TinyLm> teacher_;
    TinyLm generator_;
    DistillConfig cfg_;
    Optimizer optimizer_;
};

// ---------------------------------------------------------------------------
// Self-distillation

/// A trained copy of the student, shared read-only.
struct FrozenTeacher {
    std::shared_ptr<const Checkpoint> checkpoint;
    std::vector<LossLogRow> log;
};

/// Fine-tunes a copy of `student_init` with cross-entropy and freezes it.
FrozenTeacher build_self_teacher(const Checkpoint& student_init, std::span<const std::uint16_t> corpus,
                                 const TrainConfig& cfg);

}  // namespace shrinkcast
