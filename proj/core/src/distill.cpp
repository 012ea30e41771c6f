// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "shrinkcast/distill.hpp"

#include <cmath>

#include "shrinkcast/corpus.hpp"
#include "shrinkcast/error.hpp"
#include "shrinkcast/planner.hpp"
#include "shrinkcast/rng.hpp"

namespace shrinkcast {

namespace {

int one_hot_index(std::span<const double> y) {
    int index = -1;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1.0 && index < 0) {
            index = static_cast<int>(i);
        } else if (y[i] != 0.0) {
            throw Error(Errc::invalid_argument, "label vector is not one-hot");
        }
    }
    if (index < 0) throw Error(Errc::invalid_argument, "label vector is not one-hot");
    return index;
}

// Row of the smoothed target for class `correct` out of `k`.
void fill_smoothed(Eigen::Ref<RowVector> row, int correct, const SmoothingSpec& spec) {
    const int k = static_cast<int>(row.size());
    if (spec.mode == SmoothingMode::LabelSmoothing) {
        row.setConstant(spec.alpha / k);
    } else {
        row.setConstant(spec.alpha * (1.0 - spec.a) / (k - 1));
        row(correct) = spec.alpha * spec.a;
    }
    row(correct) += 1.0 - spec.alpha;
}

void check_spec(const SmoothingSpec& spec) {
    if (auto problem = spec.check(); !problem.empty()) throw Error(Errc::invalid_argument, "smoothing: " + problem);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(Errc::shape_mismatch, std::string(what) + ": student and teacher shapes differ");
    }
}

void require_compatible(const TinyLm& teacher, const TinyLm& student) {
    if (teacher.config().vocab_size != student.config().vocab_size) {
        throw Error(Errc::shape_mismatch, "teacher and student vocabularies differ");
    }
}

struct Pooled {
    Matrix normalized;       // [batch, d]
    Eigen::VectorXd norms;   // [batch]
};

Pooled pool(const Matrix& hidden, int batch, int seq) {
    if (hidden.rows() != static_cast<Eigen::Index>(batch) * seq) {
        throw Error(Errc::shape_mismatch, "hidden state rows do not match batch * seq");
    }
    Pooled out{Matrix(batch, hidden.cols()), Eigen::VectorXd(batch)};
    for (int b = 0; b < batch; ++b) {
        RowVector mean = hidden.middleRows(b * seq, seq).colwise().sum() / static_cast<double>(seq);
        const double norm = std::max(mean.norm(), 1e-12);
        out.norms(b) = norm;
        out.normalized.row(b) = mean / norm;
    }
    return out;
}

}  // namespace

std::string SmoothingSpec::check() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) return "alpha must be in [0,1]";
    if (!(a >= 0.0 && a <= 1.0)) return "a must be in [0,1]";
    if (num_classes < 1) return "num_classes must be >= 1";
    if (mode == SmoothingMode::TfReg && num_classes < 2) return "TF-reg needs num_classes >= 2";
    return {};
}

std::vector<double> smooth_labels(std::span<const double> y, const SmoothingSpec& spec) {
    SmoothingSpec ls = spec;
    ls.mode = SmoothingMode::LabelSmoothing;
    check_spec(ls);
    if (static_cast<int>(y.size()) != ls.num_classes) throw Error(Errc::shape_mismatch, "label length != num_classes");
    RowVector row(ls.num_classes);
    fill_smoothed(row, one_hot_index(y), ls);
    return {row.data(), row.data() + row.size()};
}

std::vector<double> tfreg_labels(std::span<const double> y, const SmoothingSpec& spec) {
    SmoothingSpec tf = spec;
    tf.mode = SmoothingMode::TfReg;
    check_spec(tf);
    if (static_cast<int>(y.size()) != tf.num_classes) throw Error(Errc::shape_mismatch, "label length != num_classes");
    RowVector row(tf.num_classes);
    fill_smoothed(row, one_hot_index(y), tf);
    return {row.data(), row.data() + row.size()};
}

Matrix smoothed_targets(std::span<const int> labels, const SmoothingSpec& spec) {
    check_spec(spec);
    Matrix out(static_cast<Eigen::Index>(labels.size()), spec.num_classes);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] < 0 || labels[r] >= spec.num_classes) throw Error(Errc::token_out_of_range, "label out of range");
        fill_smoothed(out.row(static_cast<Eigen::Index>(r)), labels[r], spec);
    }
    return out;
}

std::string DistillConfig::check() const {
    if (!(lambda_kd >= 0.0 && lambda_kd <= 1.0)) return "lambda_kd must be in [0,1]";
    if (!(temperature > 0.0)) return "temperature must be > 0";
    if (anneal_max < 1) return "anneal_max must be >= 1";
    if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) return "mask_ratio must be in (0,1)";
    if (!(rail_weight >= 0.0)) return "rail_weight must be >= 0";
    if (!(mate_temperature > 0.0)) return "mate_temperature must be > 0";
    return {};
}

DistillLoss vanilla_kd_loss(const Matrix& z_s, const Matrix& z_t, std::span<const int> targets,
                            const DistillConfig& cfg) {
    require_same_shape(z_s, z_t, "vanilla KD");
    const double lambda = cfg.lambda_kd;
    const double temp = cfg.temperature;
    const double inv_rows = 1.0 / static_cast<double>(z_s.rows());

    const LogitLoss ce = cross_entropy(z_s, targets);
    const Matrix log_qs = log_softmax_rows(z_s, temp);
    const Matrix log_qt = log_softmax_rows(z_t, temp);
    const Matrix qt = log_qt.array().exp();
    const double kl = (qt.array() * (log_qt - log_qs).array()).sum() * inv_rows;

    DistillLoss out;
    out.loss = (1.0 - lambda) * ce.loss + lambda * temp * temp * kl;
    // d/dz_s of T^2 * KL(q_t || q_s) = T * (q_s - q_t).
    out.d_student = (1.0 - lambda) * ce.d_logits +
                    (lambda * temp * inv_rows) * (Matrix(log_qs.array().exp()) - qt);
    out.components = {ce.loss, kl};
    return out;
}

DistillLoss annealing_loss(const Matrix& z_s, const Matrix& z_t, int epoch, const DistillConfig& cfg) {
    require_same_shape(z_s, z_t, "annealing KD");
    if (epoch < 1) throw Error(Errc::invalid_argument, "annealing epoch must be >= 1");
    if (epoch > cfg.anneal_max) {
        throw Error(Errc::invalid_argument, "annealing epoch " + std::to_string(epoch) +
                                                " is past anneal_max; train on ground truth instead");
    }
    const double phi = static_cast<double>(epoch) / cfg.anneal_max;
    const Matrix diff = z_s - phi * z_t;
    const double n = static_cast<double>(diff.size());
    DistillLoss out;
    out.loss = diff.squaredNorm() / n;
    out.d_student = (2.0 / n) * diff;
    out.components = {out.loss};
    return out;
}

KlDivergence kl_teacher_student(const Matrix& z_t, const Matrix& z_s) {
    require_same_shape(z_s, z_t, "KL");
    const double inv_rows = 1.0 / static_cast<double>(z_s.rows());
    const Matrix log_pt = log_softmax_rows(z_t);
    const Matrix log_ps = log_softmax_rows(z_s);
    const Matrix pt = log_pt.array().exp();
    const Matrix ps = log_ps.array().exp();
    const Matrix gap = log_pt - log_ps;

    KlDivergence out;
    out.d_teacher.resize(z_t.rows(), z_t.cols());
    for (Eigen::Index r = 0; r < z_t.rows(); ++r) {
        const double row_kl = pt.row(r).dot(gap.row(r));
        out.value += row_kl;
        out.d_teacher.row(r) = pt.row(r).array() * (gap.row(r).array() - row_kl);
    }
    out.value *= inv_rows;
    out.d_teacher *= inv_rows;
    out.d_student = (ps - pt) * inv_rows;
    return out;
}

Matrix pool_and_normalize(const Matrix& hidden, int batch, int seq) { return pool(hidden, batch, seq).normalized; }

RailLoss rail_loss(const ForwardTrace& student, const ForwardTrace& teacher, std::span<const LayerPair> pairing,
                   std::span<const Matrix> projections) {
    const int student_layers = static_cast<int>(student.hidden_states.size()) - 1;
    const int teacher_layers = static_cast<int>(teacher.hidden_states.size()) - 1;
    if (static_cast<int>(pairing.size()) != student_layers) {
        throw Error(Errc::shape_mismatch, "RAIL pairing must have one pair per student layer");
    }
    if (projections.size() != pairing.size()) throw Error(Errc::shape_mismatch, "one projection per pair required");
    if (student.batch != teacher.batch || student.seq != teacher.seq) {
        throw Error(Errc::shape_mismatch, "student and teacher traces cover different batches");
    }
    for (std::size_t j = 0; j < pairing.size(); ++j) {
        const auto& pr = pairing[j];
        if (pr.teacher_layer < 0 || pr.teacher_layer >= teacher_layers || pr.student_layer < 0 ||
            pr.student_layer >= student_layers) {
            throw Error(Errc::shape_mismatch, "RAIL pair " + std::to_string(j) + " out of range");
        }
        if (j > 0 && pr.teacher_layer <= pairing[j - 1].teacher_layer) {
            throw Error(Errc::invalid_argument, "RAIL teacher layers must be strictly ascending");
        }
    }

    const int batch = student.batch;
    const int seq = student.seq;
    const double scale = 1.0 / (static_cast<double>(pairing.size()) * batch);

    RailLoss out;
    out.d_student_hidden.reserve(student.hidden_states.size());
    for (const auto& h : student.hidden_states) out.d_student_hidden.push_back(Matrix::Zero(h.rows(), h.cols()));

    for (std::size_t j = 0; j < pairing.size(); ++j) {
        const auto& pr = pairing[j];
        const auto s_index = static_cast<std::size_t>(pr.student_layer + 1);
        const Pooled ps = pool(student.hidden_states[s_index], batch, seq);
        const Pooled pt = pool(teacher.hidden_states[static_cast<std::size_t>(pr.teacher_layer + 1)], batch, seq);
        const Matrix& proj = projections[j];
        if (proj.rows() != ps.normalized.cols() || proj.cols() != pt.normalized.cols()) {
            throw Error(Errc::shape_mismatch, "RAIL projection " + std::to_string(j) + " has wrong shape");
        }
        const Matrix diff = ps.normalized * proj - pt.normalized;
        out.loss += diff.squaredNorm() * scale;
        out.d_projections.push_back((2.0 * scale) * ps.normalized.transpose() * diff);

        const Matrix du = (2.0 * scale) * diff * proj.transpose();
        Matrix& dh = out.d_student_hidden[s_index];
        for (int b = 0; b < batch; ++b) {
            const auto u = ps.normalized.row(b);
            const RowVector dp = (du.row(b) - u * u.dot(du.row(b))) / ps.norms(b);
            dh.middleRows(b * seq, seq).rowwise() += dp / static_cast<double>(seq);
        }
    }
    return out;
}

std::vector<LayerPair> rail_pairing(int teacher_layers, int student_layers, std::uint64_t seed) {
    const auto plan = random_k(teacher_layers, student_layers, seed);
    std::vector<LayerPair> out;
    for (int j = 0; j < student_layers; ++j) out.push_back({plan.selection[static_cast<std::size_t>(j)], j});
    return out;
}

std::vector<std::uint8_t> mate_mask(int batch, int seq, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error(Errc::invalid_argument, "mask_ratio must be in (0,1)");
    if (batch < 1 || seq < 1) throw Error(Errc::invalid_argument, "mask needs a non-empty batch");
    const int count = static_cast<int>(std::ceil(ratio * seq));
    if (count < 1) throw Error(Errc::invalid_argument, "mask selects no positions");
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(batch * seq), 0);
    Rng rng(seed);
    std::vector<int> pool(static_cast<std::size_t>(seq));
    for (int b = 0; b < batch; ++b) {
        for (int t = 0; t < seq; ++t) pool[static_cast<std::size_t>(t)] = t;
        for (int i = 0; i < count; ++i) {
            const auto j = static_cast<std::size_t>(i) + rng.uniform_below(static_cast<std::uint64_t>(seq - i));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
            mask[static_cast<std::size_t>(b * seq + pool[static_cast<std::size_t>(i)])] = 1;
        }
    }
    return mask;
}

MateMaxResult mate_generator_objective(const TinyLm& generator, const TinyLm& teacher, const TinyLm& student,
                                       const TokenBatch& tokens, std::span<const std::uint8_t> mask,
                                       const Matrix& gumbel_noise, const DistillConfig& cfg) {
    require_compatible(teacher, student);
    require_compatible(generator, student);
    const Eigen::Index rows = static_cast<Eigen::Index>(tokens.ids.size());
    const Eigen::Index vocab = student.config().vocab_size;
    if (mask.size() != tokens.ids.size()) throw Error(Errc::shape_mismatch, "mask does not match token batch");
    if (gumbel_noise.rows() != rows || gumbel_noise.cols() != vocab) {
        throw Error(Errc::shape_mismatch, "noise does not match token batch");
    }
    const double tau = cfg.mate_temperature;

    TokenBatch gen_in = tokens;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) gen_in.ids[i] = kMaskToken;
    }
    const ForwardTrace g_trace = generator.forward(gen_in);

    Matrix probs = Matrix::Zero(rows, vocab);
    const Matrix soft = softmax_rows(g_trace.logits + gumbel_noise, tau);
    MateMaxResult out;
    out.mask.assign(mask.begin(), mask.end());
    out.perturbed = tokens;
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (mask[static_cast<std::size_t>(r)]) {
            probs.row(r) = soft.row(r);
            Eigen::Index best = 0;
            soft.row(r).maxCoeff(&best);
            out.perturbed.ids[static_cast<std::size_t>(r)] = static_cast<int>(best);
        } else {
            probs(r, tokens.ids[static_cast<std::size_t>(r)]) = 1.0;
        }
    }

    const ForwardTrace t_trace = teacher.forward_soft(tokens.batch, tokens.seq, probs);
    const ForwardTrace s_trace = student.forward_soft(tokens.batch, tokens.seq, probs);
    const KlDivergence kl = kl_teacher_student(t_trace.logits, s_trace.logits);
    out.divergence = kl.value;

    // Generator minimises -KL.
    const Matrix dz_t = -kl.d_teacher;
    const Matrix dz_s = -kl.d_student;
    BackwardSeeds t_seeds;
    t_seeds.d_logits = &dz_t;
    BackwardSeeds s_seeds;
    s_seeds.d_logits = &dz_s;
    const Matrix d_probs =
        teacher.backward(t_trace, t_seeds).d_input_probs + student.backward(s_trace, s_seeds).d_input_probs;

    Matrix d_gen = Matrix::Zero(rows, vocab);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!mask[static_cast<std::size_t>(r)]) continue;
        const double dot = soft.row(r).dot(d_probs.row(r));
        d_gen.row(r) = soft.row(r).array() * (d_probs.row(r).array() - dot) / tau;
    }
    BackwardSeeds g_seeds;
    g_seeds.d_logits = &d_gen;
    out.generator_grads = generator.backward(g_trace, g_seeds).params;
    return out;
}

MateMaxResult mate_max_step(const TinyLm& generator, const TinyLm& teacher, const TinyLm& student,
                            const TokenBatch& tokens, const DistillConfig& cfg, std::uint64_t seed) {
    const auto mask = mate_mask(tokens.batch, tokens.seq, cfg.mask_ratio, derive_seed(seed, 1));
    Matrix noise(static_cast<Eigen::Index>(tokens.ids.size()), student.config().vocab_size);
    Rng rng(derive_seed(seed, 2));
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.gumbel();
    return mate_generator_objective(generator, teacher, student, tokens, mask, noise, cfg);
}

MateMinResult mate_min_step(const TinyLm& student, const TinyLm& teacher, const TokenBatch& tokens,
                            const TokenBatch& perturbed, std::span<const int> targets) {
    require_compatible(teacher, student);
    if (tokens.batch != perturbed.batch || tokens.seq != perturbed.seq) {
        throw Error(Errc::shape_mismatch, "perturbed batch shape differs from original");
    }
    const ForwardTrace s_orig = student.forward(tokens);
    const ForwardTrace t_orig = teacher.forward(tokens);
    const ForwardTrace s_pert = student.forward(perturbed);
    const ForwardTrace t_pert = teacher.forward(perturbed);

    const LogitLoss ce = cross_entropy(s_orig.logits, targets);
    const KlDivergence kl_o = kl_teacher_student(t_orig.logits, s_orig.logits);
    const KlDivergence kl_p = kl_teacher_student(t_pert.logits, s_pert.logits);

    MateMinResult out;
    out.loss = ce.loss + 0.5 * (kl_o.value + kl_p.value);
    out.components = {ce.loss, kl_o.value, kl_p.value};

    const Matrix d_orig = ce.d_logits + 0.5 * kl_o.d_student;
    const Matrix d_pert = 0.5 * kl_p.d_student;
    BackwardSeeds seeds_o;
    seeds_o.d_logits = &d_orig;
    BackwardSeeds seeds_p;
    seeds_p.d_logits = &d_pert;
    out.grads = student.backward(s_orig, seeds_o).params;
    out.grads.add_scaled(student.backward(s_pert, seeds_p).params, 1.0);
    return out;
}

SoftLabelObjective::SoftLabelObjective(SmoothingSpec spec) : spec_(spec) {
    spec_.num_classes = std::max(spec_.num_classes, 2);
    check_spec(spec_);
}

StepLoss SoftLabelObjective::compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                                     const StepContext&, Parameters& grads) {
    SmoothingSpec spec = spec_;
    spec.num_classes = static_cast<int>(student.config().vocab_size);
    const auto trace = student.forward(inputs);
    const LogitLoss loss = soft_cross_entropy(trace.logits, smoothed_targets(targets, spec));
    BackwardSeeds seeds;
    seeds.d_logits = &loss.d_logits;
    grads = student.backward(trace, seeds).params;
    return {loss.loss, {}};
}

VanillaKdObjective::VanillaKdObjective(std::shared_ptr<const TinyLm> teacher, DistillConfig cfg)
    : teacher_(std::move(teacher)), cfg_(cfg) {
    if (!teacher_) throw Error(Errc::invalid_argument, "vanilla KD needs a teacher");
    if (auto problem = cfg_.check(); !problem.empty()) throw Error(Errc::invalid_argument, "distill: " + problem);
}

StepLoss VanillaKdObjective::compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                                     const StepContext&, Parameters& grads) {
    require_compatible(*teacher_, student);
    const auto t_trace = teacher_->forward(inputs);
    const auto s_trace = student.forward(inputs);
    const DistillLoss loss = vanilla_kd_loss(s_trace.logits, t_trace.logits, targets, cfg_);
    BackwardSeeds seeds;
    seeds.d_logits = &loss.d_student;
    grads = student.backward(s_trace, seeds).params;
    return {loss.loss, loss.components};
}

AnnealingObjective::AnnealingObjective(std::shared_ptr<const TinyLm> teacher, DistillConfig cfg)
    : teacher_(std::move(teacher)), cfg_(cfg) {
    if (!teacher_) throw Error(Errc::invalid_argument, "annealing KD needs a teacher");
    if (auto problem = cfg_.check(); !problem.empty()) throw Error(Errc::invalid_argument, "distill: " + problem);
}

StepLoss AnnealingObjective::compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                                     const StepContext& ctx, Parameters& grads) {
    require_compatible(*teacher_, student);
    const auto s_trace = student.forward(inputs);
    BackwardSeeds seeds;
    if (ctx.epoch <= cfg_.anneal_max) {
        const auto t_trace = teacher_->forward(inputs);
        const DistillLoss loss = annealing_loss(s_trace.logits, t_trace.logits, ctx.epoch, cfg_);
        seeds.d_logits = &loss.d_student;
        grads = student.backward(s_trace, seeds).params;
        return {loss.loss, {1.0, loss.loss, 0.0}};
    }
    const LogitLoss ce = cross_entropy(s_trace.logits, targets);
    seeds.d_logits = &ce.d_logits;
    grads = student.backward(s_trace, seeds).params;
    return {ce.loss, {2.0, 0.0, ce.loss}};
}

RailObjective::RailObjective(std::shared_ptr<const TinyLm> teacher, int student_layers, int d_model,
                             DistillConfig cfg, TrainConfig projection_cfg, std::uint64_t seed)
    : teacher_(std::move(teacher)),
      student_layers_(student_layers),
      cfg_(cfg),
      seed_(seed),
      optimizer_(projection_cfg) {
    if (!teacher_) throw Error(Errc::invalid_argument, "RAIL KD needs a teacher");
    if (auto problem = cfg_.check(); !problem.empty()) throw Error(Errc::invalid_argument, "distill: " + problem);
    if (static_cast<std::uint32_t>(d_model) != teacher_->config().d_model) {
        throw Error(Errc::shape_mismatch, "RAIL projections map student width to teacher width");
    }
    pairing_ = rail_pairing(static_cast<int>(teacher_->config().n_layers), student_layers_, derive_seed(seed_, 1));
    pairing_epoch_ = 1;
    for (int j = 0; j < student_layers_; ++j) projections_.push_back(Matrix::Identity(d_model, d_model));
}

StepLoss RailObjective::compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                                const StepContext& ctx, Parameters& grads) {
    require_compatible(*teacher_, student);
    if (static_cast<int>(student.config().n_layers) != student_layers_) {
        throw Error(Errc::shape_mismatch, "student depth differs from RAIL pairing");
    }
    if (cfg_.rail_reseed_each_epoch && ctx.epoch != pairing_epoch_) {
        pairing_ = rail_pairing(static_cast<int>(teacher_->config().n_layers), student_layers_,
                                derive_seed(seed_, static_cast<std::uint64_t>(ctx.epoch)));
        pairing_epoch_ = ctx.epoch;
    }
    const auto t_trace = teacher_->forward(inputs);
    const auto s_trace = student.forward(inputs);
    const DistillLoss kd = vanilla_kd_loss(s_trace.logits, t_trace.logits, targets, cfg_);
    RailLoss rail = rail_loss(s_trace, t_trace, pairing_, projections_);

    for (auto& dh : rail.d_student_hidden) dh *= cfg_.rail_weight;
    BackwardSeeds seeds;
    seeds.d_logits = &kd.d_student;
    seeds.d_hidden = &rail.d_student_hidden;
    grads = student.backward(s_trace, seeds).params;

    std::vector<std::span<double>> p;
    std::vector<std::span<const double>> g;
    for (std::size_t j = 0; j < projections_.size(); ++j) {
        rail.d_projections[j] *= cfg_.rail_weight;
        p.emplace_back(projections_[j].data(), static_cast<std::size_t>(projections_[j].size()));
        g.emplace_back(rail.d_projections[j].data(), static_cast<std::size_t>(rail.d_projections[j].size()));
    }
    optimizer_.step(p, g);

    return {kd.loss + cfg_.rail_weight * rail.loss, {kd.components[0], kd.components[1], rail.loss}};
}

MateObjective::MateObjective(std::shared_ptr<const TinyLm> teacher, Parameters generator_init, DistillConfig cfg,
                             TrainConfig generator_cfg)
    : teacher_(std::move(teacher)), generator_(std::move(generator_init)), cfg_(cfg), optimizer_(generator_cfg) {
    if (!teacher_) throw Error(Errc::invalid_argument, "MATE KD needs a teacher");
    if (auto problem = cfg_.check(); !problem.empty()) throw Error(Errc::invalid_argument, "distill: " + problem);
}

StepLoss MateObjective::compute(const TinyLm& student, const TokenBatch& inputs, std::span<const int> targets,
                                const StepContext& ctx, Parameters& grads) {
    MateMaxResult max = mate_max_step(generator_, *teacher_, student, inputs, cfg_, ctx.seed);
    optimizer_.step(generator_.parameters(), max.generator_grads);
    MateMinResult min = mate_min_step(student, *teacher_, inputs, max.perturbed, targets);
    grads = std::move(min.grads);
    auto components = std::move(min.components);
    components.push_back(max.divergence);
    return {min.loss, std::move(components)};
}

FrozenTeacher build_self_teacher(const Checkpoint& student_init, std::span<const std::uint16_t> corpus,
                                 const TrainConfig& cfg) {
    CrossEntropyObjective objective;
    TrainResult trained = train(student_init, corpus, cfg, objective);
    return {std::make_shared<const Checkpoint>(std::move(trained.checkpoint)), std::move(trained.log)};
}

}  // namespace shrinkcast
