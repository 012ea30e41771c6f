// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0

#include "shrinkcast/model.hpp"

#include <cmath>
#include <numbers>

#include "shrinkcast/error.hpp"
#include "shrinkcast/rng.hpp"

namespace shrinkcast {

namespace detail {

struct LayerCache {
    Matrix xhat1;
    Eigen::VectorXd rstd1;
    Matrix a1;
    Matrix qkv;
    std::vector<Matrix> probs;  // batch * heads causal attention maps, [seq, seq]
    Matrix attn;
    Matrix xhat2;
    Eigen::VectorXd rstd2;
    Matrix a2;
    Matrix fc;
    Matrix act;
};

struct ForwardCache {
    std::vector<int> ids;  // token input
    Matrix input_probs;    // soft input
    bool soft = false;
    std::vector<LayerCache> layers;
    Matrix xhat_f;
    Eigen::VectorXd rstd_f;
};

}  // namespace detail

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluK = 0.044715;

void layer_norm(const Matrix& x, const RowVector& w, const RowVector& b, Matrix& xhat, Eigen::VectorXd& rstd,
                Matrix& out) {
    const auto rows = x.rows();
    const double d = static_cast<double>(x.cols());
    xhat.resize(rows, x.cols());
    rstd.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double mean = x.row(r).sum() / d;
        const double var = (x.row(r).array() - mean).square().sum() / d;
        const double s = 1.0 / std::sqrt(var + kLayerNormEps);
        rstd(r) = s;
        xhat.row(r) = (x.row(r).array() - mean) * s;
    }
    out = (xhat.array().rowwise() * w.array()).rowwise() + b.array();
}

Matrix layer_norm_backward(const Matrix& dout, const Matrix& xhat, const Eigen::VectorXd& rstd, const RowVector& w,
                           RowVector& dw, RowVector& db) {
    dw += dout.cwiseProduct(xhat).colwise().sum();
    db += dout.colwise().sum();
    Matrix dxhat = dout.array().rowwise() * w.array();
    Matrix dx(dout.rows(), dout.cols());
    const double d = static_cast<double>(dout.cols());
    for (Eigen::Index r = 0; r < dout.rows(); ++r) {
        const double m1 = dxhat.row(r).sum() / d;
        const double m2 = dxhat.row(r).dot(xhat.row(r)) / d;
        dx.row(r) = rstd(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
    }
    return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluK * x * x * x))); }

double gelu_grad(double x) {
    const double t = std::tanh(kGeluC * (x + kGeluK * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluK * x * x);
}

void fill_normal(Matrix& m, Rng& rng, double stddev) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * stddev;
}

template <typename M>
std::span<double> span_of(M& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

Parameters Parameters::zeros(const ModelConfig& c) {
    if (auto problem = c.check(); !problem.empty()) throw Error(Errc::invalid_argument, "model config: " + problem);
    const Eigen::Index d = c.d_model;
    const Eigen::Index ff = c.d_ff();
    Parameters p;
    p.config = c;
    p.tok_emb = Matrix::Zero(c.vocab_size, d);
    p.pos_emb = Matrix::Zero(c.max_seq_len, d);
    p.blocks.resize(c.n_layers);
    for (auto& b : p.blocks) {
        b.ln1_w = RowVector::Zero(d);
        b.ln1_b = RowVector::Zero(d);
        b.qkv_w = Matrix::Zero(d, 3 * d);
        b.qkv_b = RowVector::Zero(3 * d);
        b.attn_proj_w = Matrix::Zero(d, d);
        b.attn_proj_b = RowVector::Zero(d);
        b.ln2_w = RowVector::Zero(d);
        b.ln2_b = RowVector::Zero(d);
        b.fc_w = Matrix::Zero(d, ff);
        b.fc_b = RowVector::Zero(ff);
        b.mlp_proj_w = Matrix::Zero(ff, d);
        b.mlp_proj_b = RowVector::Zero(d);
    }
    p.lnf_w = RowVector::Zero(d);
    p.lnf_b = RowVector::Zero(d);
    p.lm_head = Matrix::Zero(d, c.vocab_size);
    return p;
}

std::vector<ParamView> Parameters::views() {
    std::vector<ParamView> out;
    auto add = [&out](std::string name, auto& m) {
        std::vector<std::uint32_t> shape;
        if constexpr (std::decay_t<decltype(m)>::RowsAtCompileTime == 1) {
            shape = {static_cast<std::uint32_t>(m.cols())};
        } else {
            shape = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
        }
        out.push_back({std::move(name), std::move(shape), span_of(m)});
    };
    add(std::string(names::token_embedding), tok_emb);
    add(std::string(names::position_embedding), pos_emb);
    for (std::uint32_t l = 0; l < blocks.size(); ++l) {
        auto& b = blocks[l];
        add(names::layer_tensor(l, "ln1.weight"), b.ln1_w);
        add(names::layer_tensor(l, "ln1.bias"), b.ln1_b);
        add(names::layer_tensor(l, "attn.qkv.weight"), b.qkv_w);
        add(names::layer_tensor(l, "attn.qkv.bias"), b.qkv_b);
        add(names::layer_tensor(l, "attn.proj.weight"), b.attn_proj_w);
        add(names::layer_tensor(l, "attn.proj.bias"), b.attn_proj_b);
        add(names::layer_tensor(l, "ln2.weight"), b.ln2_w);
        add(names::layer_tensor(l, "ln2.bias"), b.ln2_b);
        add(names::layer_tensor(l, "mlp.fc.weight"), b.fc_w);
        add(names::layer_tensor(l, "mlp.fc.bias"), b.fc_b);
        add(names::layer_tensor(l, "mlp.proj.weight"), b.mlp_proj_w);
        add(names::layer_tensor(l, "mlp.proj.bias"), b.mlp_proj_b);
    }
    add(std::string(names::final_norm_weight), lnf_w);
    add(std::string(names::final_norm_bias), lnf_b);
    add(std::string(names::lm_head), lm_head);
    return out;
}

std::size_t Parameters::size() const {
    std::size_t n = 0;
    for (auto& v : const_cast<Parameters*>(this)->views()) n += v.values.size();
    return n;
}

void Parameters::set_zero() {
    for (auto& v : views()) std::fill(v.values.begin(), v.values.end(), 0.0);
}

void Parameters::add_scaled(const Parameters& other, double scale) {
    auto mine = views();
    auto theirs = const_cast<Parameters&>(other).views();
    if (mine.size() != theirs.size()) throw Error(Errc::invalid_argument, "parameter sets differ in layout");
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (mine[i].values.size() != theirs[i].values.size()) {
            throw Error(Errc::invalid_argument, "parameter sets differ in shape at " + mine[i].name);
        }
        for (std::size_t j = 0; j < mine[i].values.size(); ++j) mine[i].values[j] += scale * theirs[i].values[j];
    }
}

Parameters Parameters::from_checkpoint(const Checkpoint& ckpt) {
    if (auto violations = validate_against_config(ckpt); !violations.empty()) {
        throw Error(Errc::invalid_checkpoint, "checkpoint does not match its config: " + violations.front());
    }
    Parameters p = zeros(ckpt.config);
    for (auto& view : p.views()) {
        const Tensor& t = ckpt.at(view.name);
        std::copy(t.data.begin(), t.data.end(), view.values.begin());
    }
    return p;
}

Checkpoint Parameters::to_checkpoint() const {
    Checkpoint ckpt;
    ckpt.config = config;
    for (auto& view : const_cast<Parameters*>(this)->views()) {
        Tensor t{view.name, view.shape, std::vector<float>(view.values.size())};
        for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<float>(view.values[i]);
        ckpt.add(std::move(t));
    }
    return ckpt;
}

Parameters init_parameters(const ModelConfig& config, std::uint64_t seed) {
    Parameters p = Parameters::zeros(config);
    Rng rng(seed);
    constexpr double kStd = 0.02;
    const double residual_std = kStd / std::sqrt(2.0 * config.n_layers);
    fill_normal(p.tok_emb, rng, kStd);
    fill_normal(p.pos_emb, rng, 0.01);
    for (auto& b : p.blocks) {
        b.ln1_w.setOnes();
        b.ln2_w.setOnes();
        fill_normal(b.qkv_w, rng, kStd);
        fill_normal(b.attn_proj_w, rng, residual_std);
        fill_normal(b.fc_w, rng, kStd);
        fill_normal(b.mlp_proj_w, rng, residual_std);
    }
    p.lnf_w.setOnes();
    fill_normal(p.lm_head, rng, kStd);
    for (auto& view : p.views()) {
        for (double& v : view.values) v = static_cast<float>(v);
    }
    return p;
}

Checkpoint init_checkpoint(const ModelConfig& config, std::uint64_t seed) {
    return init_parameters(config, seed).to_checkpoint();
}

TinyLm::TinyLm(Parameters params) : params_(std::move(params)) {
    if (auto problem = params_.config.check(); !problem.empty()) {
        throw Error(Errc::invalid_argument, "model config: " + problem);
    }
}

TinyLm TinyLm::from_checkpoint(const Checkpoint& ckpt) { return TinyLm(Parameters::from_checkpoint(ckpt)); }

ForwardTrace TinyLm::forward(const TokenBatch& tokens) const {
    const auto& c = params_.config;
    if (tokens.batch < 1 || tokens.seq < 1 ||
        tokens.ids.size() != static_cast<std::size_t>(tokens.batch) * static_cast<std::size_t>(tokens.seq)) {
        throw Error(Errc::invalid_argument, "token batch shape is inconsistent");
    }
    if (static_cast<std::uint32_t>(tokens.seq) > c.max_seq_len) {
        throw Error(Errc::sequence_too_long, "sequence length " + std::to_string(tokens.seq) + " exceeds max_seq_len " +
                                                 std::to_string(c.max_seq_len));
    }
    for (std::size_t i = 0; i < tokens.ids.size(); ++i) {
        const int id = tokens.ids[i];
        if (id < 0 || static_cast<std::uint32_t>(id) >= c.vocab_size) {
            throw Error(Errc::token_out_of_range, "token id " + std::to_string(id) + " at position " +
                                                      std::to_string(i) + " outside vocabulary of size " +
                                                      std::to_string(c.vocab_size));
        }
    }
    auto cache = std::make_shared<detail::ForwardCache>();
    cache->ids = tokens.ids;
    Matrix x0(static_cast<Eigen::Index>(tokens.ids.size()), c.d_model);
    for (int b = 0; b < tokens.batch; ++b) {
        for (int t = 0; t < tokens.seq; ++t) {
            const auto r = b * tokens.seq + t;
            x0.row(r) = params_.tok_emb.row(tokens.ids[static_cast<std::size_t>(r)]) + params_.pos_emb.row(t);
        }
    }
    return run_blocks(tokens.batch, tokens.seq, std::move(x0), std::move(cache));
}

ForwardTrace TinyLm::forward_soft(int batch, int seq, const Matrix& probs) const {
    const auto& c = params_.config;
    if (batch < 1 || seq < 1 || probs.rows() != static_cast<Eigen::Index>(batch) * seq ||
        probs.cols() != static_cast<Eigen::Index>(c.vocab_size)) {
        throw Error(Errc::invalid_argument, "soft input shape is inconsistent");
    }
    if (static_cast<std::uint32_t>(seq) > c.max_seq_len) {
        throw Error(Errc::sequence_too_long, "sequence length exceeds max_seq_len");
    }
    auto cache = std::make_shared<detail::ForwardCache>();
    cache->soft = true;
    cache->input_probs = probs;
    Matrix x0 = probs * params_.tok_emb;
    for (int b = 0; b < batch; ++b) x0.middleRows(b * seq, seq) += params_.pos_emb.topRows(seq);
    return run_blocks(batch, seq, std::move(x0), std::move(cache));
}

ForwardTrace TinyLm::run_blocks(int batch, int seq, Matrix x, std::shared_ptr<detail::ForwardCache> cache) const {
    const auto& c = params_.config;
    const int heads = static_cast<int>(c.n_heads);
    const int hd = static_cast<int>(c.head_dim());
    const int d = static_cast<int>(c.d_model);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    ForwardTrace trace;
    trace.batch = batch;
    trace.seq = seq;
    trace.hidden_states.reserve(c.n_layers + 1);
    cache->layers.resize(c.n_layers);

    for (std::uint32_t l = 0; l < c.n_layers; ++l) {
        const BlockParams& p = params_.blocks[l];
        detail::LayerCache& lc = cache->layers[l];
        trace.hidden_states.push_back(x);

        layer_norm(x, p.ln1_w, p.ln1_b, lc.xhat1, lc.rstd1, lc.a1);
        lc.qkv.noalias() = lc.a1 * p.qkv_w;
        lc.qkv.rowwise() += p.qkv_b;

        lc.attn.resize(x.rows(), d);
        lc.probs.assign(static_cast<std::size_t>(batch * heads), Matrix());
        for (int b = 0; b < batch; ++b) {
            const auto rows = lc.qkv.middleRows(b * seq, seq);
            for (int h = 0; h < heads; ++h) {
                const auto q = rows.middleCols(h * hd, hd);
                const auto k = rows.middleCols(d + h * hd, hd);
                const auto v = rows.middleCols(2 * d + h * hd, hd);
                Matrix& probs = lc.probs[static_cast<std::size_t>(b * heads + h)];
                probs.noalias() = (q * k.transpose()) * scale;
                for (int i = 0; i < seq; ++i) {
                    auto row = probs.row(i);
                    const double m = row.head(i + 1).maxCoeff();
                    double sum = 0.0;
                    for (int j = 0; j <= i; ++j) {
                        row(j) = std::exp(row(j) - m);
                        sum += row(j);
                    }
                    row.head(i + 1) /= sum;
                    for (int j = i + 1; j < seq; ++j) row(j) = 0.0;
                }
                lc.attn.block(b * seq, h * hd, seq, hd).noalias() = probs * v;
            }
        }
        Matrix y = lc.attn * p.attn_proj_w;
        y.rowwise() += p.attn_proj_b;
        x += y;

        layer_norm(x, p.ln2_w, p.ln2_b, lc.xhat2, lc.rstd2, lc.a2);
        lc.fc.noalias() = lc.a2 * p.fc_w;
        lc.fc.rowwise() += p.fc_b;
        lc.act = lc.fc.unaryExpr([](double v) { return gelu(v); });
        Matrix m = lc.act * p.mlp_proj_w;
        m.rowwise() += p.mlp_proj_b;
        x += m;
    }
    trace.hidden_states.push_back(x);
    layer_norm(x, params_.lnf_w, params_.lnf_b, cache->xhat_f, cache->rstd_f, trace.final_hidden);
    trace.logits.noalias() = trace.final_hidden * params_.lm_head;
    trace.cache = std::move(cache);
    return trace;
}

Gradients TinyLm::backward(const ForwardTrace& trace, const BackwardSeeds& seeds) const {
    if (!trace.cache) throw Error(Errc::invalid_argument, "trace has no forward cache");
    const auto& c = params_.config;
    const auto& cache = *trace.cache;
    const int batch = trace.batch;
    const int seq = trace.seq;
    const int heads = static_cast<int>(c.n_heads);
    const int hd = static_cast<int>(c.head_dim());
    const int d = static_cast<int>(c.d_model);
    const Eigen::Index rows = static_cast<Eigen::Index>(batch) * seq;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    if (seeds.d_hidden && seeds.d_hidden->size() != trace.hidden_states.size()) {
        throw Error(Errc::invalid_argument, "hidden-state gradient count mismatch");
    }

    Gradients out{Parameters::zeros(c), Matrix()};
    Parameters& g = out.params;

    Matrix d_final = Matrix::Zero(rows, d);
    if (seeds.d_logits) {
        g.lm_head.noalias() += trace.final_hidden.transpose() * (*seeds.d_logits);
        d_final.noalias() += (*seeds.d_logits) * params_.lm_head.transpose();
    }
    if (seeds.d_final_hidden) d_final += *seeds.d_final_hidden;

    Matrix dx = layer_norm_backward(d_final, cache.xhat_f, cache.rstd_f, params_.lnf_w, g.lnf_w, g.lnf_b);
    if (seeds.d_hidden) dx += (*seeds.d_hidden)[c.n_layers];

    for (int l = static_cast<int>(c.n_layers) - 1; l >= 0; --l) {
        const BlockParams& p = params_.blocks[static_cast<std::size_t>(l)];
        BlockParams& gp = g.blocks[static_cast<std::size_t>(l)];
        const detail::LayerCache& lc = cache.layers[static_cast<std::size_t>(l)];

        // MLP branch.
        gp.mlp_proj_w.noalias() += lc.act.transpose() * dx;
        gp.mlp_proj_b += dx.colwise().sum();
        Matrix dfc = dx * p.mlp_proj_w.transpose();
        dfc.array() *= lc.fc.unaryExpr([](double v) { return gelu_grad(v); }).array();
        gp.fc_w.noalias() += lc.a2.transpose() * dfc;
        gp.fc_b += dfc.colwise().sum();
        Matrix da2 = dfc * p.fc_w.transpose();
        dx += layer_norm_backward(da2, lc.xhat2, lc.rstd2, p.ln2_w, gp.ln2_w, gp.ln2_b);

        // Attention branch.
        gp.attn_proj_w.noalias() += lc.attn.transpose() * dx;
        gp.attn_proj_b += dx.colwise().sum();
        Matrix dattn = dx * p.attn_proj_w.transpose();
        Matrix dqkv(rows, 3 * d);
        for (int b = 0; b < batch; ++b) {
            const auto qkv_rows = lc.qkv.middleRows(b * seq, seq);
            for (int h = 0; h < heads; ++h) {
                const auto q = qkv_rows.middleCols(h * hd, hd);
                const auto k = qkv_rows.middleCols(d + h * hd, hd);
                const auto v = qkv_rows.middleCols(2 * d + h * hd, hd);
                const Matrix& probs = lc.probs[static_cast<std::size_t>(b * heads + h)];
                const auto dout = dattn.block(b * seq, h * hd, seq, hd);

                Matrix dprobs = dout * v.transpose();
                dqkv.block(b * seq, 2 * d + h * hd, seq, hd).noalias() = probs.transpose() * dout;
                // Softmax backward; masked entries have probs == 0 and drop out.
                Matrix dscores(seq, seq);
                for (int i = 0; i < seq; ++i) {
                    const double dot = probs.row(i).dot(dprobs.row(i));
                    dscores.row(i) = probs.row(i).array() * (dprobs.row(i).array() - dot);
                }
                dscores *= scale;
                dqkv.block(b * seq, h * hd, seq, hd).noalias() = dscores * k;
                dqkv.block(b * seq, d + h * hd, seq, hd).noalias() = dscores.transpose() * q;
            }
        }
        gp.qkv_w.noalias() += lc.a1.transpose() * dqkv;
        gp.qkv_b += dqkv.colwise().sum();
        Matrix da1 = dqkv * p.qkv_w.transpose();
        dx += layer_norm_backward(da1, lc.xhat1, lc.rstd1, p.ln1_w, gp.ln1_w, gp.ln1_b);

        if (seeds.d_hidden) dx += (*seeds.d_hidden)[static_cast<std::size_t>(l)];
    }

    // Embedding layer.
    for (int b = 0; b < batch; ++b) g.pos_emb.topRows(seq) += dx.middleRows(b * seq, seq);
    if (cache.soft) {
        g.tok_emb.noalias() += cache.input_probs.transpose() * dx;
        out.d_input_probs.noalias() = dx * params_.tok_emb.transpose();
    } else {
        for (Eigen::Index r = 0; r < rows; ++r) g.tok_emb.row(cache.ids[static_cast<std::size_t>(r)]) += dx.row(r);
    }
    return out;
}

ForwardTrace forward(const Checkpoint& ckpt, const TokenBatch& tokens) {
    return TinyLm::from_checkpoint(ckpt).forward(tokens);
}

}  // namespace shrinkcast
