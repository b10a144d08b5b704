#ifndef CDFL_LOSSES_HPP
#define CDFL_LOSSES_HPP

#include "cdfl/core.hpp"
#include "cdfl/seggraph.hpp"

#include <span>
#include <vector>

namespace cdfl {

enum class LossVariant { forward, discriminative_forward, constrained_discriminative };

struct LossKind {
    LossVariant variant = LossVariant::forward;
    // Weight of the all-paths term; only discriminative_forward reads it.
    double alpha = 0.1;

    static LossKind forward_kind() { return {LossVariant::forward, 0.0}; }
    static LossKind discriminative(double alpha);
    static LossKind constrained() { return {LossVariant::constrained_discriminative, 0.0}; }
};

// -log sum exp(-v), shifted by the minimum for stability. +inf is the
// identity element.
double logadd(std::span<const double> values);
double logadd(double a, double b);

// Explicit layered lattice with per-edge, per-class energies. The loss
// recursions and their gradients run on this form; it is materialized from a
// SegGraph for training and constructed directly for randomized checks.
struct EdgeLattice {
    struct Edge {
        int from = 0;  // vertex index in layer n
        int to = 0;    // vertex index in layer n+1
    };

    int num_classes = 0;
    std::vector<std::vector<int>> positions;   // frame position per vertex per layer
    std::vector<std::vector<Edge>> edges;      // per transition
    std::vector<std::vector<double>> weights;  // per transition, edge-major length-K blocks

    int num_layers() const { return static_cast<int>(positions.size()); }
    int num_transitions() const { return num_layers() - 1; }
    double weight(int transition, int edge, int cls) const {
        return weights[transition][static_cast<size_t>(edge) * num_classes + cls];
    }
    double& weight(int transition, int edge, int cls) {
        return weights[transition][static_cast<size_t>(edge) * num_classes + cls];
    }
};

EdgeLattice make_lattice(const SegGraph& graph);

// Gradients with respect to every edge weight, mirroring EdgeLattice::weights.
using EdgeGradients = std::vector<std::vector<double>>;

double lattice_forward_loss(const EdgeLattice& lattice, const Transcript& transcript);
double lattice_logadd_all_paths(const EdgeLattice& lattice);
double lattice_logadd_hard_invalid(const EdgeLattice& lattice, const Transcript& transcript);
double lattice_loss_value(const EdgeLattice& lattice, const Transcript& transcript,
                          const LossKind& kind);
EdgeGradients lattice_loss_backward(const EdgeLattice& lattice, const Transcript& transcript,
                                    const LossKind& kind);

// Chain rule from edge-energy gradients to per-frame log-posterior gradients:
// d_frame(t,a) = -sum of d_edge over edges whose segment contains frame t.
Matrix frame_gradients(const EdgeLattice& lattice, const EdgeGradients& d_edge, int total_frames);

struct LossGradients {
    EdgeGradients d_edge;
    Matrix d_frame;  // T x K
};

// logadd of the energies of all transcript-consistent paths.
double forward_loss(const SegGraph& graph, const Transcript& transcript);
// logadd of the energies of every path with every per-edge class choice.
double logadd_all_paths(const SegGraph& graph);
// logadd over per-edge class choices where hard classes (weight strictly
// below the pseudo-ground-truth class) keep their weight and every other
// class continues at zero cost.
double logadd_hard_invalid(const SegGraph& graph, const Transcript& transcript);

double loss_value(const SegGraph& graph, const Transcript& transcript, const LossKind& kind);
LossGradients loss_backward(const SegGraph& graph, const Transcript& transcript,
                            const LossKind& kind);

}  // namespace cdfl

#endif
