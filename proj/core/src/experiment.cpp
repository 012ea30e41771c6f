// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "shrinkcast/experiment.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "shrinkcast/error.hpp"
#include "shrinkcast/lm.hpp"
#include "shrinkcast/model.hpp"
#include "shrinkcast/rng.hpp"
#include "shrinkcast/truncation.hpp"

namespace shrinkcast {

namespace {

// Salts for per-phase seeds.
enum : std::uint64_t {
    kSaltTeacherInit = 1,
    kSaltTeacherTrain = 2,
    kSaltPlan = 3,
    kSaltPretrain = 4,
    kSaltFinetune = 5,
    kSaltSelfTeacher = 6,
    kSaltGenerator = 7,
    kSaltRail = 8,
    kSaltCorpus = 9,
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T to_number(std::string_view key, const std::string& value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw Error(Errc::spec, "key '" + std::string(key) + "': cannot parse '" + value + "'");
    }
    return out;
}

bool to_bool(std::string_view key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw Error(Errc::spec, "key '" + std::string(key) + "': expected a boolean, got '" + value + "'");
}

template <typename T>
void read_into(const KeyValues& kv, const std::string& key, T& target) {
    auto v = kv.get(key);
    if (!v) return;
    if constexpr (std::is_same_v<T, bool>) {
        target = to_bool(key, *v);
    } else {
        target = to_number<T>(key, *v);
    }
}

constexpr std::string_view kTrainKeys[] = {"lr",      "steps",   "batch_size", "seq_len",   "optimizer",
                                           "beta1",   "beta2",   "epsilon",    "grad_clip", "steps_per_epoch"};

std::set<std::string, std::less<>> known_keys() {
    std::set<std::string, std::less<>> keys = {
        "name",
        "seed",
        "teacher.checkpoint",
        "teacher.n_layers",
        "teacher.n_heads",
        "teacher.d_model",
        "teacher.vocab_size",
        "teacher.max_seq_len",
        "student.n_layers",
        "plan.strategy",
        "plan.seed",
        "method",
        "distill.lambda",
        "distill.temperature",
        "distill.anneal_max",
        "distill.mask_ratio",
        "distill.rail_weight",
        "distill.rail_reseed_each_epoch",
        "distill.mate_temperature",
        "smoothing.alpha",
        "smoothing.a",
        "pretrain_corpus",
        "finetune_corpus",
        "eval_corpus",
    };
    for (std::string_view prefix : {"teacher.train.", "selfkd.", "pretrain.", "finetune."}) {
        for (auto k : kTrainKeys) keys.insert(std::string(prefix) + std::string(k));
    }
    return keys;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
    return p.is_absolute() || base.empty() ? p : base / p;
}

template <typename F>
auto in_phase(std::string_view phase, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.code(), "phase " + std::string(phase) + ": " + e.what());
    }
}

std::string join_selection(const std::vector<int>& sel) {
    std::string out;
    for (std::size_t i = 0; i < sel.size(); ++i) out += (i ? "," : "") + std::to_string(sel[i]);
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write '" + path.string() + "'");
    out << text;
}

}  // namespace

std::string_view method_name(DistillMethod method) {
    switch (method) {
        case DistillMethod::None: return "none";
        case DistillMethod::VanillaKd: return "vanilla-kd";
        case DistillMethod::AnnealingKd: return "annealing-kd";
        case DistillMethod::MateKd: return "mate-kd";
        case DistillMethod::RailKd: return "rail-kd";
        case DistillMethod::LabelSmoothing: return "ls";
        case DistillMethod::TfReg: return "tf-reg";
        case DistillMethod::SelfKd: return "self-kd";
    }
    return "?";
}

DistillMethod parse_method(std::string_view name) {
    for (auto m : {DistillMethod::None, DistillMethod::VanillaKd, DistillMethod::AnnealingKd, DistillMethod::MateKd,
                   DistillMethod::RailKd, DistillMethod::LabelSmoothing, DistillMethod::TfReg,
                   DistillMethod::SelfKd}) {
        if (method_name(m) == name) return m;
    }
    throw Error(Errc::invalid_argument, "unknown distillation method '" + std::string(name) + "'");
}

KeyValues KeyValues::parse(std::string_view text) {
    KeyValues kv;
    int line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(Errc::spec, "line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = std::string(trim(line.substr(0, eq)));
        const auto value = std::string(trim(line.substr(eq + 1)));
        if (key.empty()) throw Error(Errc::spec, "line " + std::to_string(line_no) + ": empty key");
        if (!kv.values_.emplace(key, value).second) {
            throw Error(Errc::spec, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
    }
    return kv;
}

std::optional<std::string> KeyValues::get(std::string_view key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

TrainConfig read_train_config(const KeyValues& kv, std::string_view prefix, TrainConfig cfg) {
    const std::string p(prefix);
    read_into(kv, p + "lr", cfg.learning_rate);
    read_into(kv, p + "steps", cfg.steps);
    read_into(kv, p + "batch_size", cfg.batch_size);
    read_into(kv, p + "seq_len", cfg.seq_len);
    read_into(kv, p + "beta1", cfg.beta1);
    read_into(kv, p + "beta2", cfg.beta2);
    read_into(kv, p + "epsilon", cfg.epsilon);
    read_into(kv, p + "grad_clip", cfg.grad_clip);
    read_into(kv, p + "steps_per_epoch", cfg.steps_per_epoch);
    if (auto opt = kv.get(p + "optimizer")) {
        if (*opt == "adam") {
            cfg.optimizer = OptimizerKind::Adam;
        } else if (*opt == "sgd") {
            cfg.optimizer = OptimizerKind::Sgd;
        } else {
            throw Error(Errc::spec, "key '" + p + "optimizer': expected adam or sgd");
        }
    }
    if (auto problem = cfg.check(); !problem.empty()) throw Error(Errc::spec, p + "*: " + problem);
    return cfg;
}

std::unique_ptr<Objective> make_objective(const MethodSettings& settings, const Checkpoint& student_init,
                                          std::shared_ptr<const Checkpoint> teacher,
                                          std::span<const std::uint16_t> corpus, const TrainConfig& train_cfg,
                                          std::uint64_t seed) {
    auto teacher_model = [&]() {
        if (!teacher) {
            throw Error(Errc::invalid_argument,
                        "method " + std::string(method_name(settings.method)) + " requires a teacher");
        }
        return std::make_shared<const TinyLm>(TinyLm::from_checkpoint(*teacher));
    };
    switch (settings.method) {
        case DistillMethod::None: return std::make_unique<CrossEntropyObjective>();
        case DistillMethod::LabelSmoothing: {
            SmoothingSpec spec = settings.smoothing;
            spec.mode = SmoothingMode::LabelSmoothing;
            return std::make_unique<SoftLabelObjective>(spec);
        }
        case DistillMethod::TfReg: {
            SmoothingSpec spec = settings.smoothing;
            spec.mode = SmoothingMode::TfReg;
            return std::make_unique<SoftLabelObjective>(spec);
        }
        case DistillMethod::VanillaKd: return std::make_unique<VanillaKdObjective>(teacher_model(), settings.distill);
        case DistillMethod::AnnealingKd:
            return std::make_unique<AnnealingObjective>(teacher_model(), settings.distill);
        case DistillMethod::RailKd:
            return std::make_unique<RailObjective>(teacher_model(), static_cast<int>(student_init.config.n_layers),
                                                   static_cast<int>(student_init.config.d_model), settings.distill,
                                                   train_cfg, derive_seed(seed, kSaltRail));
        case DistillMethod::MateKd:
            return std::make_unique<MateObjective>(
                teacher_model(), init_parameters(student_init.config, derive_seed(seed, kSaltGenerator)),
                settings.distill, train_cfg);
        case DistillMethod::SelfKd: {
            TrainConfig cfg = settings.self_teacher;
            cfg.seed = derive_seed(seed, kSaltSelfTeacher);
            FrozenTeacher frozen = build_self_teacher(student_init, corpus, cfg);
            return std::make_unique<VanillaKdObjective>(
                std::make_shared<const TinyLm>(TinyLm::from_checkpoint(*frozen.checkpoint)), settings.distill);
        }
    }
    throw Error(Errc::invalid_argument, "unknown method");
}

std::string ExperimentSpec::check() const {
    if (name.empty()) return "name is required";
    if (eval_corpus.empty()) return "eval_corpus is required";
    if (student_layers < 1) return "student.n_layers must be >= 1";
    if (!teacher_checkpoint) {
        if (auto problem = teacher_config.check(); !problem.empty()) return "teacher.*: " + problem;
        if (student_layers > static_cast<int>(teacher_config.n_layers)) return "student deeper than teacher";
        if (teacher_train.steps > 0 && pretrain_corpus.empty()) return "teacher.train needs pretrain_corpus";
    }
    if (pretrain.steps > 0 && pretrain_corpus.empty()) return "pretrain.steps > 0 needs pretrain_corpus";
    if (finetune.steps > 0 && finetune_corpus.empty()) return "finetune.steps > 0 needs finetune_corpus";
    if (auto problem = method.distill.check(); !problem.empty()) return "distill.*: " + problem;
    SmoothingSpec smoothing = method.smoothing;
    smoothing.num_classes = std::max(2, smoothing.num_classes);
    if (auto problem = smoothing.check(); !problem.empty()) return "smoothing.*: " + problem;
    if (method.method == DistillMethod::SelfKd && method.self_teacher.steps > 0 && pretrain_corpus.empty()) {
        return "self-kd needs pretrain_corpus";
    }
    return {};
}

ExperimentSpec parse_experiment(std::string_view text, const std::filesystem::path& base_dir) {
    const KeyValues kv = KeyValues::parse(text);
    const auto known = known_keys();
    for (const auto& [key, value] : kv.values()) {
        if (!known.contains(key)) throw Error(Errc::spec, "unknown key '" + key + "'");
    }

    ExperimentSpec spec;
    spec.base_dir = base_dir;
    spec.name = kv.get("name").value_or("");
    read_into(kv, "seed", spec.seed);
    if (auto p = kv.get("teacher.checkpoint")) spec.teacher_checkpoint = *p;
    read_into(kv, "teacher.n_layers", spec.teacher_config.n_layers);
    read_into(kv, "teacher.n_heads", spec.teacher_config.n_heads);
    read_into(kv, "teacher.d_model", spec.teacher_config.d_model);
    read_into(kv, "teacher.vocab_size", spec.teacher_config.vocab_size);
    read_into(kv, "teacher.max_seq_len", spec.teacher_config.max_seq_len);
    TrainConfig no_steps;
    no_steps.steps = 0;
    spec.teacher_train = read_train_config(kv, "teacher.train.", no_steps);
    read_into(kv, "student.n_layers", spec.student_layers);
    if (auto s = kv.get("plan.strategy")) spec.strategy = parse_strategy(*s);
    if (kv.contains("plan.seed")) {
        std::uint64_t s = 0;
        read_into(kv, "plan.seed", s);
        spec.plan_seed = s;
    }
    if (auto m = kv.get("method")) spec.method.method = parse_method(*m);
    read_into(kv, "distill.lambda", spec.method.distill.lambda_kd);
    read_into(kv, "distill.temperature", spec.method.distill.temperature);
    read_into(kv, "distill.anneal_max", spec.method.distill.anneal_max);
    read_into(kv, "distill.mask_ratio", spec.method.distill.mask_ratio);
    read_into(kv, "distill.rail_weight", spec.method.distill.rail_weight);
    read_into(kv, "distill.rail_reseed_each_epoch", spec.method.distill.rail_reseed_each_epoch);
    read_into(kv, "distill.mate_temperature", spec.method.distill.mate_temperature);
    read_into(kv, "smoothing.alpha", spec.method.smoothing.alpha);
    read_into(kv, "smoothing.a", spec.method.smoothing.a);
    spec.method.self_teacher = read_train_config(kv, "selfkd.", TrainConfig{});
    spec.pretrain = read_train_config(kv, "pretrain.", TrainConfig{});
    TrainConfig finetune_defaults;
    finetune_defaults.learning_rate = 3e-4;
    spec.finetune = read_train_config(kv, "finetune.", finetune_defaults);
    spec.pretrain_corpus = kv.get("pretrain_corpus").value_or("");
    spec.finetune_corpus = kv.get("finetune_corpus").value_or("");
    spec.eval_corpus = kv.get("eval_corpus").value_or("");
    if (auto problem = spec.check(); !problem.empty()) throw Error(Errc::spec, problem);
    return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open experiment file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment(buf.str(), path.parent_path());
}

TokenStream load_corpus(std::string_view ref, const std::filesystem::path& base_dir, std::uint64_t default_seed) {
    constexpr std::string_view kSynthetic = "synthetic:";
    if (!ref.starts_with(kSynthetic)) {
        const auto path = resolve(base_dir, std::filesystem::path(std::string(ref)));
        if (!std::filesystem::exists(path)) throw Error(Errc::io, "corpus '" + path.string() + "' does not exist");
        return read_tokens(path);
    }
    std::string_view rest = ref.substr(kSynthetic.size());
    std::vector<std::string> parts;
    while (true) {
        const auto colon = rest.find(':');
        parts.emplace_back(rest.substr(0, colon));
        if (colon == std::string_view::npos) break;
        rest.remove_prefix(colon + 1);
    }
    if (parts.empty() || parts.size() > 3) throw Error(Errc::spec, "corpus '" + std::string(ref) + "' malformed");
    const auto tokens = to_number<std::size_t>("corpus", parts[0]);
    const int domain = parts.size() > 1 ? to_number<int>("corpus", parts[1]) : 0;
    const std::uint64_t seed = parts.size() > 2 ? to_number<std::uint64_t>("corpus", parts[2])
                                                : derive_seed(default_seed, kSaltCorpus + static_cast<std::uint64_t>(domain));
    return generate_grammar_corpus(tokens, seed, domain);
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::optional<std::filesystem::path>& out_dir) {
    if (auto problem = spec.check(); !problem.empty()) throw Error(Errc::spec, problem);
    const auto started = std::chrono::steady_clock::now();
    ExperimentResult result;

    auto corpus = [&](const std::string& ref) -> TokenStream {
        if (ref.empty()) return {};
        return load_corpus(ref, spec.base_dir, spec.seed);
    };
    const TokenStream pretrain_tokens = in_phase("load", [&] { return corpus(spec.pretrain_corpus); });
    const TokenStream finetune_tokens = in_phase("load", [&] { return corpus(spec.finetune_corpus); });
    const TokenStream eval_tokens = in_phase("load", [&] { return corpus(spec.eval_corpus); });

    result.teacher = in_phase("teacher", [&]() -> Checkpoint {
        if (spec.teacher_checkpoint) return read_checkpoint(resolve(spec.base_dir, *spec.teacher_checkpoint));
        Checkpoint init = init_checkpoint(spec.teacher_config, derive_seed(spec.seed, kSaltTeacherInit));
        TrainConfig cfg = spec.teacher_train;
        cfg.seed = derive_seed(spec.seed, kSaltTeacherTrain);
        CrossEntropyObjective objective;
        result.teacher_log = train(init, pretrain_tokens, cfg, objective);
        return result.teacher_log.checkpoint;
    });
    const double teacher_ppl = in_phase("eval-teacher", [&] { return perplexity(result.teacher, eval_tokens); });

    result.plan = in_phase("plan", [&] {
        return make_plan(spec.strategy, static_cast<int>(result.teacher.config.n_layers), spec.student_layers,
                         spec.plan_seed.value_or(derive_seed(spec.seed, kSaltPlan)));
    });
    Checkpoint student = in_phase("truncate", [&] { return truncate(result.teacher, result.plan); });

    student = in_phase("pretrain", [&] {
        TrainConfig cfg = spec.pretrain;
        cfg.seed = derive_seed(spec.seed, kSaltPretrain);
        if (cfg.steps == 0) return student;
        auto teacher = std::make_shared<const Checkpoint>(result.teacher);
        auto objective = make_objective(spec.method, student, teacher, pretrain_tokens, cfg, spec.seed);
        result.pretrain_log = train(student, pretrain_tokens, cfg, *objective);
        return result.pretrain_log.checkpoint;
    });
    const double zero_shot = in_phase("eval-zero-shot", [&] { return perplexity(student, eval_tokens); });

    student = in_phase("finetune", [&] {
        TrainConfig cfg = spec.finetune;
        cfg.seed = derive_seed(spec.seed, kSaltFinetune);
        if (cfg.steps == 0) return student;
        CrossEntropyObjective objective;
        result.finetune_log = train(student, finetune_tokens, cfg, objective);
        return result.finetune_log.checkpoint;
    });
    const double finetuned = in_phase("eval-finetuned", [&] { return perplexity(student, eval_tokens); });
    result.student = std::move(student);

    ResultRow& row = result.row;
    row.name = spec.name;
    row.strategy = std::string(strategy_name(result.plan.strategy));
    row.method = std::string(method_name(spec.method.method));
    row.selection = join_selection(result.plan.selection);
    row.seed = spec.seed;
    row.teacher_ppl = teacher_ppl;
    row.zero_shot_ppl = zero_shot;
    row.finetuned_ppl = finetuned;
    row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (out_dir) {
        in_phase("write", [&] {
            std::filesystem::create_directories(*out_dir);
            write_text(*out_dir / "result.csv", format_result_csv({row}));
            write_text(*out_dir / "plan.txt", format_plan(result.plan) + "\n");
            write_checkpoint(result.student, *out_dir / "student.tckp");
            if (!result.teacher_log.log.empty()) write_loss_log(result.teacher_log, *out_dir / "teacher_loss.csv");
            if (!result.pretrain_log.log.empty()) write_loss_log(result.pretrain_log, *out_dir / "pretrain_loss.csv");
            if (!result.finetune_log.log.empty()) write_loss_log(result.finetune_log, *out_dir / "finetune_loss.csv");
        });
    }
    return result;
}

}  // namespace shrinkcast
