#include "cdfl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cdfl {

namespace {

constexpr double kPosInf = std::numeric_limits<double>::infinity();

enum class PathFamily { valid, all, hard_invalid };

const int* transcript_labels(const EdgeLattice& lattice, const Transcript& transcript,
                             const char* op) {
    if (transcript.size() != lattice.num_transitions()) {
        throw std::invalid_argument(std::string(op) + ": transcript length does not match lattice");
    }
    for (int a : transcript.labels) {
        if (a < 0 || a >= lattice.num_classes) {
            throw std::invalid_argument(std::string(op) + ": transcript references unknown class");
        }
    }
    return transcript.labels.data();
}

// Continuation cost of crossing `edge` in transition n with class `cls`.
// valid: only the transcript class, at its weight.
// all: any class, at its weight.
// hard_invalid: any class; hard ones (weight strictly below the transcript
// class's weight) keep their weight, the rest continue at zero cost.
inline double continuation_cost(const EdgeLattice& lattice, int transition, int edge, int cls,
                                int gt_cls, PathFamily family) {
    double w = lattice.weight(transition, edge, cls);
    if (family != PathFamily::hard_invalid) {
        return w;
    }
    return w < lattice.weight(transition, edge, gt_cls) ? w : 0.0;
}

std::vector<std::vector<double>> family_forward(const EdgeLattice& lattice, const int* labels,
                                                PathFamily family) {
    std::vector<std::vector<double>> scores(lattice.num_layers());
    scores[0].assign(lattice.positions[0].size(), 0.0);
    for (int n = 0; n < lattice.num_transitions(); ++n) {
        scores[n + 1].assign(lattice.positions[n + 1].size(), kPosInf);
        const int gt = labels ? labels[n] : -1;
        for (size_t e = 0; e < lattice.edges[n].size(); ++e) {
            const EdgeLattice::Edge& edge = lattice.edges[n][e];
            const double from = scores[n][edge.from];
            double& to = scores[n + 1][edge.to];
            if (family == PathFamily::valid) {
                to = logadd(to, from + lattice.weight(n, static_cast<int>(e), gt));
            } else {
                for (int a = 0; a < lattice.num_classes; ++a) {
                    to = logadd(to, from + continuation_cost(lattice, n, static_cast<int>(e), a,
                                                             gt, family));
                }
            }
        }
    }
    return scores;
}

std::vector<std::vector<double>> family_backward(const EdgeLattice& lattice, const int* labels,
                                                 PathFamily family) {
    std::vector<std::vector<double>> scores(lattice.num_layers());
    scores.back().assign(lattice.positions.back().size(), 0.0);
    for (int n = lattice.num_transitions() - 1; n >= 0; --n) {
        scores[n].assign(lattice.positions[n].size(), kPosInf);
        const int gt = labels ? labels[n] : -1;
        for (size_t e = 0; e < lattice.edges[n].size(); ++e) {
            const EdgeLattice::Edge& edge = lattice.edges[n][e];
            const double to = scores[n + 1][edge.to];
            double& from = scores[n][edge.from];
            if (family == PathFamily::valid) {
                from = logadd(from, lattice.weight(n, static_cast<int>(e), gt) + to);
            } else {
                for (int a = 0; a < lattice.num_classes; ++a) {
                    from = logadd(from, continuation_cost(lattice, n, static_cast<int>(e), a,
                                                          gt, family) + to);
                }
            }
        }
    }
    return scores;
}

double family_value(const EdgeLattice& lattice, const int* labels, PathFamily family) {
    std::vector<std::vector<double>> scores = family_forward(lattice, labels, family);
    return logadd(std::span<const double>(scores.back()));
}

// Exact gradient of family_value with respect to every edge weight through a
// forward-backward pass: the coefficient on an edge-class choice is the
// softmin posterior exp(-(l_from + cost + lbar_to - total)). Zero-cost
// fallback branches of the hard-invalid family contribute no gradient.
void family_gradient(const EdgeLattice& lattice, const int* labels, PathFamily family,
                     double coefficient, EdgeGradients& accum) {
    const std::vector<std::vector<double>> fwd = family_forward(lattice, labels, family);
    const std::vector<std::vector<double>> bwd = family_backward(lattice, labels, family);
    const double total = logadd(std::span<const double>(fwd.back()));
    if (!std::isfinite(total)) {
        throw std::runtime_error("loss backward: non-finite total at layer " +
                                 std::to_string(lattice.num_layers() - 1));
    }

    for (int n = 0; n < lattice.num_transitions(); ++n) {
        const int gt = labels ? labels[n] : -1;
        for (size_t e = 0; e < lattice.edges[n].size(); ++e) {
            const EdgeLattice::Edge& edge = lattice.edges[n][e];
            const double from = fwd[n][edge.from];
            const double to = bwd[n + 1][edge.to];
            if (!std::isfinite(from) || !std::isfinite(to)) {
                continue;  // vertex unreachable under this family
            }
            if (family == PathFamily::valid) {
                const double w = lattice.weight(n, static_cast<int>(e), gt);
                accum[n][e * lattice.num_classes + gt] +=
                    coefficient * std::exp(-(from + w + to - total));
            } else {
                for (int a = 0; a < lattice.num_classes; ++a) {
                    const double w = lattice.weight(n, static_cast<int>(e), a);
                    if (family == PathFamily::hard_invalid &&
                        !(w < lattice.weight(n, static_cast<int>(e), gt))) {
                        continue;  // zero-cost fallback: no dependence on w
                    }
                    accum[n][e * lattice.num_classes + a] +=
                        coefficient * std::exp(-(from + w + to - total));
                }
            }
        }
    }
}

EdgeGradients zero_gradients(const EdgeLattice& lattice) {
    EdgeGradients grads(lattice.num_transitions());
    for (int n = 0; n < lattice.num_transitions(); ++n) {
        grads[n].assign(lattice.weights[n].size(), 0.0);
    }
    return grads;
}

}  // namespace

LossKind LossKind::discriminative(double alpha) {
    if (alpha < 0.0) {
        throw std::invalid_argument("loss kind: alpha must be >= 0");
    }
    return {LossVariant::discriminative_forward, alpha};
}

double logadd(double a, double b) {
    if (a == kPosInf) {
        return b;
    }
    if (b == kPosInf) {
        return a;
    }
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    return lo - std::log1p(std::exp(lo - hi));
}

double logadd(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("logadd: empty value list");
    }
    double m = kPosInf;
    for (double v : values) {
        m = std::min(m, v);
    }
    if (m == kPosInf || m == -kPosInf) {
        return m;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += std::exp(m - v);
    }
    return m - std::log(sum);
}

EdgeLattice make_lattice(const SegGraph& graph) {
    EdgeLattice lattice;
    lattice.num_classes = graph.num_classes;
    lattice.positions = graph.layers;
    lattice.edges.resize(graph.num_transitions());
    lattice.weights.resize(graph.num_transitions());
    for (int n = 0; n < graph.num_transitions(); ++n) {
        for (size_t i = 0; i < graph.layers[n].size(); ++i) {
            for (size_t j = 0; j < graph.layers[n + 1].size(); ++j) {
                const int from_pos = graph.layers[n][i];
                const int to_pos = graph.layers[n + 1][j];
                if (from_pos >= to_pos) {
                    continue;
                }
                lattice.edges[n].push_back({static_cast<int>(i), static_cast<int>(j)});
                for (int a = 0; a < graph.num_classes; ++a) {
                    lattice.weights[n].push_back(edge_weight(graph, from_pos, to_pos, a));
                }
            }
        }
    }
    return lattice;
}

double lattice_forward_loss(const EdgeLattice& lattice, const Transcript& transcript) {
    return family_value(lattice, transcript_labels(lattice, transcript, "forward loss"),
                        PathFamily::valid);
}

double lattice_logadd_all_paths(const EdgeLattice& lattice) {
    return family_value(lattice, nullptr, PathFamily::all);
}

double lattice_logadd_hard_invalid(const EdgeLattice& lattice, const Transcript& transcript) {
    return family_value(lattice, transcript_labels(lattice, transcript, "hard invalid"),
                        PathFamily::hard_invalid);
}

double lattice_loss_value(const EdgeLattice& lattice, const Transcript& transcript,
                          const LossKind& kind) {
    switch (kind.variant) {
        case LossVariant::forward:
            return lattice_forward_loss(lattice, transcript);
        case LossVariant::discriminative_forward:
            return lattice_forward_loss(lattice, transcript) -
                   kind.alpha * lattice_logadd_all_paths(lattice);
        case LossVariant::constrained_discriminative:
            return lattice_forward_loss(lattice, transcript) -
                   lattice_logadd_hard_invalid(lattice, transcript);
    }
    throw std::invalid_argument("loss value: unknown variant");
}

EdgeGradients lattice_loss_backward(const EdgeLattice& lattice, const Transcript& transcript,
                                    const LossKind& kind) {
    const int* labels = transcript_labels(lattice, transcript, "loss backward");
    EdgeGradients grads = zero_gradients(lattice);
    family_gradient(lattice, labels, PathFamily::valid, 1.0, grads);
    switch (kind.variant) {
        case LossVariant::forward:
            break;
        case LossVariant::discriminative_forward:
            if (kind.alpha != 0.0) {
                family_gradient(lattice, nullptr, PathFamily::all, -kind.alpha, grads);
            }
            break;
        case LossVariant::constrained_discriminative:
            family_gradient(lattice, labels, PathFamily::hard_invalid, -1.0, grads);
            break;
    }
    return grads;
}

Matrix frame_gradients(const EdgeLattice& lattice, const EdgeGradients& d_edge, int total_frames) {
    if (static_cast<int>(d_edge.size()) != lattice.num_transitions()) {
        throw std::invalid_argument("frame gradients: gradient shape mismatch");
    }
    Matrix out = Matrix::Zero(total_frames, lattice.num_classes);
    for (int n = 0; n < lattice.num_transitions(); ++n) {
        for (size_t e = 0; e < lattice.edges[n].size(); ++e) {
            const EdgeLattice::Edge& edge = lattice.edges[n][e];
            const int from_pos = lattice.positions[n][edge.from];
            const int to_pos = lattice.positions[n + 1][edge.to];
            for (int a = 0; a < lattice.num_classes; ++a) {
                const double g = d_edge[n][e * lattice.num_classes + a];
                if (g == 0.0) {
                    continue;
                }
                for (int t = from_pos + 1; t <= to_pos; ++t) {
                    out(t - 1, a) -= g;
                }
            }
        }
    }
    return out;
}

double forward_loss(const SegGraph& graph, const Transcript& transcript) {
    return lattice_forward_loss(make_lattice(graph), transcript);
}

double logadd_all_paths(const SegGraph& graph) {
    return lattice_logadd_all_paths(make_lattice(graph));
}

double logadd_hard_invalid(const SegGraph& graph, const Transcript& transcript) {
    return lattice_logadd_hard_invalid(make_lattice(graph), transcript);
}

double loss_value(const SegGraph& graph, const Transcript& transcript, const LossKind& kind) {
    return lattice_loss_value(make_lattice(graph), transcript, kind);
}

LossGradients loss_backward(const SegGraph& graph, const Transcript& transcript,
                            const LossKind& kind) {
    const EdgeLattice lattice = make_lattice(graph);
    LossGradients grads;
    grads.d_edge = lattice_loss_backward(lattice, transcript, kind);
    grads.d_frame = frame_gradients(lattice, grads.d_edge, graph.total_frames);
    return grads;
}

}  // namespace cdfl
