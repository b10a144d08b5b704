#ifndef CDFL_SCORER_HPP
#define CDFL_SCORER_HPP

#include "cdfl/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cdfl {

enum class ScorerVariant { linear, gru };

ScorerVariant scorer_variant_from_name(const std::string& name);
std::string scorer_variant_name(ScorerVariant variant);

// Parameters of the frame classifier. The linear variant scores each frame
// independently; the gru variant runs a single-layer GRU left to right with
// zero initial hidden state and a linear softmax head.
struct ScorerParams {
    ScorerVariant variant = ScorerVariant::linear;
    int input_dim = 0;
    int num_classes = 0;
    int hidden = 0;  // 0 for linear

    // linear
    Matrix w;  // D x K
    Matrix b;  // K x 1

    // gru gates: pre-activation = w_* x_t + u_* h_{t-1} + b_*
    Matrix w_update, w_reset, w_cand;  // H x D
    Matrix u_update, u_reset, u_cand;  // H x H
    Matrix b_update, b_reset, b_cand;  // H x 1
    Matrix w_out;                      // H x K
    Matrix b_out;                      // K x 1
};

// Same shapes as the parameters they correspond to.
using ParamGradients = ScorerParams;

struct NamedTensor {
    std::string name;
    Matrix* tensor;
};

struct NamedTensorView {
    std::string name;
    const Matrix* tensor;
};

// Every tensor of the active variant, in a fixed order shared by the
// optimizer, the checkpoint format, and finite-difference checks.
std::vector<NamedTensor> named_tensors(ScorerParams& params);
std::vector<NamedTensorView> named_tensors(const ScorerParams& params);

ScorerParams init_scorer(ScorerVariant variant, int input_dim, int num_classes, int hidden,
                         std::uint64_t seed);
ParamGradients zero_gradients_like(const ScorerParams& params);

struct ScorerCache {
    ScorerParams params;  // backward needs the weights that produced the pass
    Matrix inputs;        // T x D
    Matrix log_post;      // T x K
    // gru activations, one row per frame
    Matrix update_gate, reset_gate, candidate, hidden_state;  // T x H
};

std::pair<FrameLogPosteriors, ScorerCache> scorer_forward(const ScorerParams& params,
                                                          const FrameSequence& video);

// Exact gradient of sum_{t,a} frame_grad(t,a) * log p(a|x_t) with respect to
// every parameter; the gru variant backpropagates through time over the full
// sequence.
ParamGradients scorer_backward(const ScorerCache& cache, const Matrix& frame_grad);

// params <- params - lr * grads
void sgd_step(ScorerParams& params, const ParamGradients& grads, double lr);

// Self-describing text checkpoint; round-trips exactly.
void save_scorer(std::ostream& out, const ScorerParams& params);
ScorerParams load_scorer(std::istream& in);

}  // namespace cdfl

#endif
