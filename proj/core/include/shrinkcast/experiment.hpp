// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0
//
// One experiment = plan -> truncate -> pretrain (with a distillation
// method) -> zero-shot perplexity -> fine-tune -> perplexity.
//
// Experiment files are "key = value" lines; '#' starts a comment. Keys:
//
//   name                      required
//   seed                      u64, default 0; every phase seed derives from it
//   teacher.checkpoint        TCKP path; when absent a teacher is initialised
//   teacher.n_layers ... teacher.max_seq_len   architecture of a fresh teacher
//   teacher.train.<train key> pretraining of a fresh teacher (default 0 steps)
//   student.n_layers          default 2
//   plan.strategy             uniform | uniform-2 | pseudo-uniform |
//                             bottom-half | top-half | random
//   plan.seed                 random-strategy seed, default derived from seed
//   method                    none | vanilla-kd | annealing-kd | mate-kd |
//                             rail-kd | ls | tf-reg | self-kd
//   distill.lambda, distill.temperature, distill.anneal_max,
//   distill.mask_ratio, distill.rail_weight, distill.rail_reseed_each_epoch,
//   distill.mate_temperature
//   smoothing.alpha, smoothing.a
//   selfkd.<train key>        fine-tuning of the self-distillation teacher
//   pretrain.<train key>, finetune.<train key>
//   pretrain_corpus, finetune_corpus, eval_corpus
//
// Train keys: lr, steps, batch_size, seq_len, optimizer (adam|sgd), beta1,
// beta2, epsilon, grad_clip, steps_per_epoch.
//
// Corpus values are u16 token files (relative to the experiment file) or
// "synthetic:<tokens>[:<domain>[:<seed>]]" for the built-in grammar.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "shrinkcast/checkpoint.hpp"
#include "shrinkcast/corpus.hpp"
#include "shrinkcast/distill.hpp"
#include "shrinkcast/planner.hpp"
#include "shrinkcast/report.hpp"
#include "shrinkcast/train.hpp"

namespace shrinkcast {

enum class DistillMethod { None, VanillaKd, AnnealingKd, MateKd, RailKd, LabelSmoothing, TfReg, SelfKd };

std::string_view method_name(DistillMethod method);
DistillMethod parse_method(std::string_view name);

/// Ordered key=value pairs. Duplicate keys are an error.
class KeyValues {
public:
    static KeyValues parse(std::string_view text);

    std::optional<std::string> get(std::string_view key) const;
    bool contains(std::string_view key) const { return values_.find(key) != values_.end(); }
    void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
    const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

private:
    std::map<std::string, std::string, std::less<>> values_;
};

/// Applies "<prefix>lr", "<prefix>steps", ... onto `base`.
TrainConfig read_train_config(const KeyValues& kv, std::string_view prefix, TrainConfig base);

struct MethodSettings {
    DistillMethod method = DistillMethod::None;
    DistillConfig distill;
    SmoothingSpec smoothing;
    TrainConfig self_teacher;
};

/// Builds the training objective for `method`. `teacher` may be null for
/// teacher-free methods. Self-KD trains its own teacher from
/// `student_init` on `corpus` here.
std::unique_ptr<Objective> make_objective(const MethodSettings& settings, const Checkpoint& student_init,
                                          std::shared_ptr<const Checkpoint> teacher,
                                          std::span<const std::uint16_t> corpus, const TrainConfig& train_cfg,
                                          std::uint64_t seed);

struct ExperimentSpec {
    std::string name;
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> teacher_checkpoint;
    ModelConfig teacher_config;
    TrainConfig teacher_train;
    int student_layers = 2;
    Strategy strategy = Strategy::PseudoUniform;
    std::optional<std::uint64_t> plan_seed;
    MethodSettings method;
    TrainConfig pretrain;
    TrainConfig finetune;
    std::string pretrain_corpus;
    std::string finetune_corpus;
    std::string eval_corpus;
    std::filesystem::path base_dir;  // relative corpus/checkpoint paths resolve here

    /// Empty when valid.
    std::string check() const;
};

ExperimentSpec parse_experiment(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment(const std::filesystem::path& path);

/// Resolves a corpus reference (file path or synthetic:...).
TokenStream load_corpus(std::string_view ref, const std::filesystem::path& base_dir, std::uint64_t default_seed);

struct ExperimentResult {
    ResultRow row;
    LayerPlan plan;
    Checkpoint teacher;
    Checkpoint student;
    TrainResult teacher_log;
    TrainResult pretrain_log;
    TrainResult finetune_log;
};

/// Runs every phase. Errors are rethrown with a "phase <name>:" prefix. With
/// `out_dir`, writes result.csv, plan.txt, student.tckp and per-phase loss
/// logs there.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace shrinkcast
