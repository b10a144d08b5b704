#include "cdfl/seggraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace cdfl {

namespace {

constexpr double kPosInf = std::numeric_limits<double>::infinity();
// Guard against -inf log posteriors poisoning prefix differences.
constexpr double kMaxNegLog = 1e30;

void check_positions(const SegGraph& graph, int from_pos, int to_pos, int label) {
    if (from_pos < 0 || to_pos > graph.total_frames || from_pos >= to_pos) {
        throw std::invalid_argument("edge weight: positions out of range");
    }
    if (label < 0 || label >= graph.num_classes) {
        throw std::invalid_argument("edge weight: unknown class");
    }
}

}  // namespace

SegGraph build_graph(const Segmentation& anchor, const FrameLogPosteriors& post, int window) {
    const int total = post.frames();
    if (anchor.total_frames() != total) {
        throw std::invalid_argument("build graph: anchor does not partition the video");
    }
    if (window < 0) {
        throw std::invalid_argument("build graph: window must be >= 0");
    }

    const std::vector<int> cuts = segment_cuts(anchor);
    const int n_layers = static_cast<int>(cuts.size());

    SegGraph graph;
    graph.total_frames = total;
    graph.num_classes = post.num_classes();
    graph.layers.resize(n_layers);

    const int left = window >= 1 ? (window - 1 + 1) / 2 : 0;
    const int right = window >= 1 ? (window - 1) / 2 : 0;
    for (int n = 0; n < n_layers; ++n) {
        if (n == 0 || n == n_layers - 1) {
            graph.layers[n] = {cuts[n]};
            continue;
        }
        std::vector<int>& layer = graph.layers[n];
        for (int p = cuts[n] - left; p <= cuts[n] + right; ++p) {
            if (p > 0 && p < total) {
                layer.push_back(p);
            }
        }
        if (layer.empty()) {
            throw std::invalid_argument("build graph: hyper-node " + std::to_string(n) +
                                        " empty after clipping");
        }
    }

    // Drop positions that cannot connect forward and backward; repeat until
    // stable since a removal can expose another.
    bool changed = true;
    while (changed) {
        changed = false;
        for (int n = 1; n + 1 < n_layers; ++n) {
            std::vector<int>& layer = graph.layers[n];
            const int prev_min = graph.layers[n - 1].front();
            const int next_max = graph.layers[n + 1].back();
            std::vector<int> kept;
            for (int p : layer) {
                if (p > prev_min && p < next_max) {
                    kept.push_back(p);
                }
            }
            if (kept.size() != layer.size()) {
                changed = true;
                if (kept.empty()) {
                    throw std::invalid_argument("build graph: hyper-node " + std::to_string(n) +
                                                " empty after monotonicity pruning");
                }
                layer = std::move(kept);
            }
        }
    }

    graph.neg_log_post_prefix = Matrix::Zero(total + 1, graph.num_classes);
    for (int t = 1; t <= total; ++t) {
        for (int a = 0; a < graph.num_classes; ++a) {
            graph.neg_log_post_prefix(t, a) =
                graph.neg_log_post_prefix(t - 1, a) + std::min(-post.values(t - 1, a), kMaxNegLog);
        }
    }
    return graph;
}

double edge_weight(const SegGraph& graph, int from_pos, int to_pos, int label) {
    check_positions(graph, from_pos, to_pos, label);
    return graph.neg_log_post_prefix(to_pos, label) - graph.neg_log_post_prefix(from_pos, label);
}

double path_energy(const SegGraph& graph, const PathAssignment& path) {
    if (path.vertices.size() != graph.layers.size() ||
        path.classes.size() != path.vertices.size() - 1) {
        throw std::invalid_argument("path energy: assignment does not match the graph");
    }
    double energy = 0.0;
    for (size_t n = 0; n + 1 < path.vertices.size(); ++n) {
        energy += edge_weight(graph, path.vertices[n], path.vertices[n + 1], path.classes[n]);
    }
    return energy;
}

std::vector<PathAssignment> enumerate_paths(const SegGraph& graph,
                                            const std::optional<Transcript>& transcript) {
    const int n_transitions = graph.num_transitions();
    if (transcript && transcript->size() != n_transitions) {
        throw std::invalid_argument("enumerate paths: transcript length mismatch");
    }

    // Count monotone vertex chains first so the guard fires before expansion.
    std::vector<double> count(graph.layers[0].size(), 1.0);
    for (int n = 1; n < graph.num_layers(); ++n) {
        std::vector<double> next(graph.layers[n].size(), 0.0);
        for (size_t j = 0; j < graph.layers[n].size(); ++j) {
            for (size_t i = 0; i < graph.layers[n - 1].size(); ++i) {
                if (graph.layers[n - 1][i] < graph.layers[n][j]) {
                    next[j] += count[i];
                }
            }
        }
        count = std::move(next);
    }
    double num_chains = 0.0;
    for (double c : count) {
        num_chains += c;
    }
    double num_paths = num_chains;
    if (!transcript) {
        num_paths *= std::pow(static_cast<double>(graph.num_classes), n_transitions);
    }
    if (num_paths > 1e6) {
        throw std::invalid_argument("enumerate paths: more than 1e6 paths");
    }

    std::vector<std::vector<int>> chains;
    std::vector<int> current;
    auto extend = [&](auto&& self, int layer) -> void {
        if (layer == graph.num_layers()) {
            chains.push_back(current);
            return;
        }
        for (int p : graph.layers[layer]) {
            if (layer == 0 || current.back() < p) {
                current.push_back(p);
                self(self, layer + 1);
                current.pop_back();
            }
        }
    };
    extend(extend, 0);

    std::vector<PathAssignment> paths;
    if (transcript) {
        for (std::vector<int>& chain : chains) {
            paths.push_back(PathAssignment{std::move(chain), transcript->labels});
        }
        return paths;
    }
    std::vector<int> classes(n_transitions, 0);
    for (const std::vector<int>& chain : chains) {
        std::fill(classes.begin(), classes.end(), 0);
        while (true) {
            paths.push_back(PathAssignment{chain, classes});
            int pos = n_transitions - 1;
            while (pos >= 0 && classes[pos] == graph.num_classes - 1) {
                classes[pos--] = 0;
            }
            if (pos < 0) {
                break;
            }
            ++classes[pos];
        }
    }
    return paths;
}

PathAssignment min_energy_valid_path(const SegGraph& graph, const Transcript& transcript) {
    if (transcript.size() != graph.num_transitions()) {
        throw std::invalid_argument("min energy path: transcript length mismatch");
    }
    const int n_layers = graph.num_layers();
    std::vector<std::vector<double>> cost(n_layers);
    std::vector<std::vector<int>> parent(n_layers);
    cost[0].assign(graph.layers[0].size(), 0.0);
    parent[0].assign(graph.layers[0].size(), -1);

    for (int n = 1; n < n_layers; ++n) {
        const int a = transcript.labels[n - 1];
        cost[n].assign(graph.layers[n].size(), kPosInf);
        parent[n].assign(graph.layers[n].size(), -1);
        for (size_t j = 0; j < graph.layers[n].size(); ++j) {
            const int to_pos = graph.layers[n][j];
            for (size_t i = 0; i < graph.layers[n - 1].size(); ++i) {
                const int from_pos = graph.layers[n - 1][i];
                if (from_pos >= to_pos || cost[n - 1][i] == kPosInf) {
                    continue;
                }
                double cand = cost[n - 1][i] + edge_weight(graph, from_pos, to_pos, a);
                // ascending predecessors + strict improvement: earliest boundary wins ties
                if (cand < cost[n][j]) {
                    cost[n][j] = cand;
                    parent[n][j] = static_cast<int>(i);
                }
            }
        }
    }

    PathAssignment path;
    path.classes = transcript.labels;
    path.vertices.assign(n_layers, 0);
    int j = 0;  // single sink vertex
    if (cost[n_layers - 1][j] == kPosInf) {
        throw std::runtime_error("min energy path: lattice is disconnected");
    }
    for (int n = n_layers - 1; n >= 0; --n) {
        path.vertices[n] = graph.layers[n][j];
        j = n > 0 ? parent[n][j] : 0;
    }
    return path;
}

Segmentation segmentation_from_path(const PathAssignment& path) {
    std::vector<int> lengths;
    for (size_t n = 0; n + 1 < path.vertices.size(); ++n) {
        lengths.push_back(path.vertices[n + 1] - path.vertices[n]);
    }
    return make_segmentation(path.classes, std::move(lengths));
}

PathAssignment path_from_segmentation(const Segmentation& seg) {
    return PathAssignment{segment_cuts(seg), seg.labels};
}

void dump_graph(std::ostream& out, const SegGraph& graph) {
    out << "segmentation graph: T=" << graph.total_frames << " K=" << graph.num_classes
        << " layers=" << graph.num_layers() << '\n';
    for (int n = 0; n < graph.num_layers(); ++n) {
        out << "layer " << n << ":";
        for (int p : graph.layers[n]) {
            out << ' ' << p;
        }
        out << '\n';
    }
    for (int n = 0; n + 1 < graph.num_layers(); ++n) {
        for (int from_pos : graph.layers[n]) {
            for (int to_pos : graph.layers[n + 1]) {
                if (from_pos >= to_pos) {
                    continue;
                }
                out << "edge " << from_pos << " -> " << to_pos << ":";
                for (int a = 0; a < graph.num_classes; ++a) {
                    out << ' ' << edge_weight(graph, from_pos, to_pos, a);
                }
                out << '\n';
            }
        }
    }
}

}  // namespace cdfl
