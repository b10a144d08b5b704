#include "cdfl/scorer.hpp"

#include "cdfl/dataset_io.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

namespace cdfl {

namespace {

Matrix softmax_rows_from_log(const Matrix& log_post) {
    return log_post.array().exp().matrix();
}

void check_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw std::invalid_argument(std::string(what) + ": non-finite values");
    }
}

}  // namespace

ScorerVariant scorer_variant_from_name(const std::string& name) {
    if (name == "linear") {
        return ScorerVariant::linear;
    }
    if (name == "gru") {
        return ScorerVariant::gru;
    }
    throw std::invalid_argument("unknown scorer variant '" + name + "'");
}

std::string scorer_variant_name(ScorerVariant variant) {
    return variant == ScorerVariant::linear ? "linear" : "gru";
}

std::vector<NamedTensor> named_tensors(ScorerParams& params) {
    if (params.variant == ScorerVariant::linear) {
        return {{"w", &params.w}, {"b", &params.b}};
    }
    return {{"w_update", &params.w_update}, {"u_update", &params.u_update},
            {"b_update", &params.b_update}, {"w_reset", &params.w_reset},
            {"u_reset", &params.u_reset},   {"b_reset", &params.b_reset},
            {"w_cand", &params.w_cand},     {"u_cand", &params.u_cand},
            {"b_cand", &params.b_cand},     {"w_out", &params.w_out},
            {"b_out", &params.b_out}};
}

std::vector<NamedTensorView> named_tensors(const ScorerParams& params) {
    std::vector<NamedTensorView> views;
    for (NamedTensor& nt : named_tensors(const_cast<ScorerParams&>(params))) {
        views.push_back({nt.name, nt.tensor});
    }
    return views;
}

ScorerParams init_scorer(ScorerVariant variant, int input_dim, int num_classes, int hidden,
                         std::uint64_t seed) {
    if (input_dim < 1 || num_classes < 1) {
        throw std::invalid_argument("scorer init: D and K must be >= 1");
    }
    if (variant == ScorerVariant::gru && hidden < 1) {
        throw std::invalid_argument("scorer init: gru needs hidden >= 1");
    }

    ScorerParams params;
    params.variant = variant;
    params.input_dim = input_dim;
    params.num_classes = num_classes;
    params.hidden = variant == ScorerVariant::gru ? hidden : 0;

    if (variant == ScorerVariant::linear) {
        params.w.setZero(input_dim, num_classes);
        params.b.setZero(num_classes, 1);
    } else {
        params.w_update.setZero(hidden, input_dim);
        params.w_reset.setZero(hidden, input_dim);
        params.w_cand.setZero(hidden, input_dim);
        params.u_update.setZero(hidden, hidden);
        params.u_reset.setZero(hidden, hidden);
        params.u_cand.setZero(hidden, hidden);
        params.b_update.setZero(hidden, 1);
        params.b_reset.setZero(hidden, 1);
        params.b_cand.setZero(hidden, 1);
        params.w_out.setZero(hidden, num_classes);
        params.b_out.setZero(num_classes, 1);
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for (NamedTensor& nt : named_tensors(params)) {
        Matrix& m = *nt.tensor;
        for (int r = 0; r < m.rows(); ++r) {
            for (int c = 0; c < m.cols(); ++c) {
                m(r, c) = dist(rng);
            }
        }
    }
    return params;
}

ParamGradients zero_gradients_like(const ScorerParams& params) {
    ParamGradients grads = params;
    for (NamedTensor& nt : named_tensors(grads)) {
        nt.tensor->setZero();
    }
    return grads;
}

std::pair<FrameLogPosteriors, ScorerCache> scorer_forward(const ScorerParams& params,
                                                          const FrameSequence& video) {
    if (video.dim() != params.input_dim) {
        throw std::invalid_argument("scorer forward: feature dimension mismatch");
    }
    const int total = video.frames();
    const int k = params.num_classes;

    ScorerCache cache;
    cache.params = params;
    cache.inputs = video.features;

    Matrix logits(total, k);
    if (params.variant == ScorerVariant::linear) {
        logits = video.features * params.w;
        logits.rowwise() += params.b.col(0).transpose();
    } else {
        const int h = params.hidden;
        cache.update_gate.resize(total, h);
        cache.reset_gate.resize(total, h);
        cache.candidate.resize(total, h);
        cache.hidden_state.resize(total, h);

        Vector prev = Vector::Zero(h);
        for (int t = 0; t < total; ++t) {
            const Vector x = video.features.row(t).transpose();
            Vector z = params.w_update * x + params.u_update * prev + params.b_update.col(0);
            Vector r = params.w_reset * x + params.u_reset * prev + params.b_reset.col(0);
            z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
            r = r.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
            Vector cand = params.w_cand * x + params.u_cand * (r.cwiseProduct(prev)) +
                          params.b_cand.col(0);
            cand = cand.array().tanh().matrix();
            Vector state = (Vector::Ones(h) - z).cwiseProduct(prev) + z.cwiseProduct(cand);

            cache.update_gate.row(t) = z.transpose();
            cache.reset_gate.row(t) = r.transpose();
            cache.candidate.row(t) = cand.transpose();
            cache.hidden_state.row(t) = state.transpose();
            logits.row(t) = (params.w_out.transpose() * state + params.b_out.col(0)).transpose();
            prev = state;
        }
    }

    FrameLogPosteriors post = log_softmax_rows(logits);
    cache.log_post = post.values;
    return {std::move(post), std::move(cache)};
}

ParamGradients scorer_backward(const ScorerCache& cache, const Matrix& frame_grad) {
    const ScorerParams& params = cache.params;
    const int total = static_cast<int>(cache.inputs.rows());
    const int k = params.num_classes;
    if (frame_grad.rows() != total || frame_grad.cols() != k) {
        throw std::invalid_argument("scorer backward: gradient shape mismatch");
    }
    if (cache.log_post.rows() != total) {
        throw std::invalid_argument("scorer backward: cache does not match forward");
    }

    // log-softmax backward: d logits = g - p * rowsum(g)
    const Matrix probs = softmax_rows_from_log(cache.log_post);
    Matrix d_logits = frame_grad;
    const Vector row_sums = frame_grad.rowwise().sum();
    for (int t = 0; t < total; ++t) {
        d_logits.row(t) -= row_sums(t) * probs.row(t);
    }

    ParamGradients grads = zero_gradients_like(params);
    if (params.variant == ScorerVariant::linear) {
        grads.w = cache.inputs.transpose() * d_logits;
        grads.b.col(0) = d_logits.colwise().sum().transpose();
        return grads;
    }

    const int h = params.hidden;
    Vector d_prev = Vector::Zero(h);
    for (int t = total - 1; t >= 0; --t) {
        const Vector x = cache.inputs.row(t).transpose();
        const Vector z = cache.update_gate.row(t).transpose();
        const Vector r = cache.reset_gate.row(t).transpose();
        const Vector cand = cache.candidate.row(t).transpose();
        const Vector state = cache.hidden_state.row(t).transpose();
        const Vector prev = t > 0 ? Vector(cache.hidden_state.row(t - 1).transpose())
                                  : Vector(Vector::Zero(h));

        const Vector d_logit = d_logits.row(t).transpose();
        grads.w_out += state * d_logit.transpose();
        grads.b_out.col(0) += d_logit;

        Vector d_state = params.w_out * d_logit + d_prev;

        const Vector d_z = d_state.cwiseProduct(cand - prev);
        const Vector d_cand = d_state.cwiseProduct(z);
        d_prev = d_state.cwiseProduct(Vector::Ones(h) - z);

        const Vector d_cand_pre =
            d_cand.cwiseProduct((Vector::Ones(h) - cand.cwiseProduct(cand)));
        const Vector d_z_pre = d_z.cwiseProduct(z).cwiseProduct(Vector::Ones(h) - z);

        const Vector d_reset_prod = params.u_cand.transpose() * d_cand_pre;
        const Vector d_r = d_reset_prod.cwiseProduct(prev);
        const Vector d_r_pre = d_r.cwiseProduct(r).cwiseProduct(Vector::Ones(h) - r);

        grads.w_cand += d_cand_pre * x.transpose();
        grads.u_cand += d_cand_pre * (r.cwiseProduct(prev)).transpose();
        grads.b_cand.col(0) += d_cand_pre;
        grads.w_update += d_z_pre * x.transpose();
        grads.u_update += d_z_pre * prev.transpose();
        grads.b_update.col(0) += d_z_pre;
        grads.w_reset += d_r_pre * x.transpose();
        grads.u_reset += d_r_pre * prev.transpose();
        grads.b_reset.col(0) += d_r_pre;

        d_prev += d_reset_prod.cwiseProduct(r);
        d_prev += params.u_update.transpose() * d_z_pre;
        d_prev += params.u_reset.transpose() * d_r_pre;
    }
    return grads;
}

void sgd_step(ScorerParams& params, const ParamGradients& grads, double lr) {
    if (!(lr >= 0.0)) {
        throw std::invalid_argument("sgd step: learning rate must be >= 0");
    }
    std::vector<NamedTensor> p = named_tensors(params);
    std::vector<NamedTensorView> g = named_tensors(grads);
    if (p.size() != g.size()) {
        throw std::invalid_argument("sgd step: parameter/gradient mismatch");
    }
    for (size_t i = 0; i < g.size(); ++i) {
        check_finite(*g[i].tensor, "sgd step: gradients");
        if (p[i].tensor->rows() != g[i].tensor->rows() ||
            p[i].tensor->cols() != g[i].tensor->cols()) {
            throw std::invalid_argument("sgd step: shape mismatch for " + p[i].name);
        }
        *p[i].tensor -= lr * *g[i].tensor;
    }
}

void save_scorer(std::ostream& out, const ScorerParams& params) {
    out << "scorer " << scorer_variant_name(params.variant) << '\n';
    out << "input_dim " << params.input_dim << '\n';
    out << "num_classes " << params.num_classes << '\n';
    out << "hidden " << params.hidden << '\n';
    for (const NamedTensorView& nt : named_tensors(params)) {
        const Matrix& m = *nt.tensor;
        out << "tensor " << nt.name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (int r = 0; r < m.rows(); ++r) {
            for (int c = 0; c < m.cols(); ++c) {
                if (c > 0) {
                    out << ' ';
                }
                out << format_double(m(r, c));
            }
            out << '\n';
        }
    }
}

ScorerParams load_scorer(std::istream& in) {
    std::string key, variant_name;
    if (!(in >> key >> variant_name) || key != "scorer") {
        throw std::runtime_error("scorer checkpoint: missing header");
    }
    int input_dim = 0, num_classes = 0, hidden = 0;
    auto read_int = [&in](const char* name, int& value) {
        std::string k;
        if (!(in >> k >> value) || k != name) {
            throw std::runtime_error(std::string("scorer checkpoint: expected ") + name);
        }
    };
    read_int("input_dim", input_dim);
    read_int("num_classes", num_classes);
    read_int("hidden", hidden);

    ScorerParams params = init_scorer(scorer_variant_from_name(variant_name), input_dim,
                                      num_classes, std::max(hidden, 1), 0);
    params.hidden = hidden;
    for (NamedTensor& nt : named_tensors(params)) {
        std::string tensor_key, name;
        int rows = 0, cols = 0;
        if (!(in >> tensor_key >> name >> rows >> cols) || tensor_key != "tensor" ||
            name != nt.name) {
            throw std::runtime_error("scorer checkpoint: expected tensor " + nt.name);
        }
        if (rows != nt.tensor->rows() || cols != nt.tensor->cols()) {
            throw std::runtime_error("scorer checkpoint: shape mismatch for " + nt.name);
        }
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                if (!(in >> (*nt.tensor)(r, c))) {
                    throw std::runtime_error("scorer checkpoint: truncated tensor " + nt.name);
                }
            }
        }
    }
    return params;
}

}  // namespace cdfl
