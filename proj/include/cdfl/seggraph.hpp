#ifndef CDFL_SEGGRAPH_HPP
#define CDFL_SEGGRAPH_HPP

#include "cdfl/core.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace cdfl {

// Layered lattice of boundary candidates around an anchor segmentation.
// Layer n holds candidate frame positions for cut n; edges connect
// consecutive layers wherever positions strictly increase. The first and
// last layers are pinned to {0} and {T}. Edge weights come from cached
// prefix sums of -log p(a|x_t), so any single weight is O(1).
struct SegGraph {
    int total_frames = 0;
    int num_classes = 0;
    std::vector<std::vector<int>> layers;
    Matrix neg_log_post_prefix;  // (T+1) x K

    int num_layers() const { return static_cast<int>(layers.size()); }
    int num_transitions() const { return num_layers() - 1; }
};

// Window counts total frames centered on the anchor cut: odd windows extend
// (window-1)/2 each side, even windows one more to the left. window of 0 or
// 1 keeps the cut alone. Interior positions are clipped to (0, T); positions
// that cannot reach both ends of the lattice are dropped.
SegGraph build_graph(const Segmentation& anchor, const FrameLogPosteriors& post, int window);

// Energy of labeling the segment (from_pos, to_pos] with class `label`:
// the sum of -log p(label|x_t) over frames from_pos+1 .. to_pos.
double edge_weight(const SegGraph& graph, int from_pos, int to_pos, int label);

// One vertex position per layer plus one class per edge.
struct PathAssignment {
    std::vector<int> vertices;
    std::vector<int> classes;
};

double path_energy(const SegGraph& graph, const PathAssignment& path);

// Test oracle: every vertex chain, with classes fixed to the transcript when
// given, otherwise crossed with all class assignments. Guarded to 1e6 paths.
std::vector<PathAssignment> enumerate_paths(const SegGraph& graph,
                                            const std::optional<Transcript>& transcript = {});

// Minimum-energy path whose classes follow the transcript, by a min-sum pass
// over the lattice; ties break toward earlier boundaries.
PathAssignment min_energy_valid_path(const SegGraph& graph, const Transcript& transcript);

Segmentation segmentation_from_path(const PathAssignment& path);
PathAssignment path_from_segmentation(const Segmentation& seg);

// Plain-text table of layers, edges, and per-class energies for debugging.
void dump_graph(std::ostream& out, const SegGraph& graph);

}  // namespace cdfl

#endif
