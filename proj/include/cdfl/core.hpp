#ifndef CDFL_CORE_HPP
#define CDFL_CORE_HPP

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace cdfl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Ordered vocabulary of class names. Indices 0..K-1 are the canonical class
// ids everywhere; names matter only for file I/O. Background, when modeled,
// is an ordinary class singled out by background_id.
struct LabelSet {
    std::vector<std::string> names;
    std::optional<int> background_id;

    int size() const { return static_cast<int>(names.size()); }
    // -1 if the name is unknown.
    int index_of(const std::string& name) const;
};

LabelSet make_label_set(std::vector<std::string> names,
                        std::optional<int> background_id = std::nullopt);

// T x D real-valued frame features for one video.
struct FrameSequence {
    std::string video_id;
    Matrix features;

    int frames() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }
};

FrameSequence make_frame_sequence(std::string video_id, Matrix features);

// Ordered action classes of a video without segment extents (the weak label).
// Adjacent labels always differ.
struct Transcript {
    std::vector<int> labels;

    int size() const { return static_cast<int>(labels.size()); }
    bool operator==(const Transcript& other) const { return labels == other.labels; }
    bool operator<(const Transcript& other) const { return labels < other.labels; }
};

Transcript make_transcript(std::vector<int> labels);

// A transcript plus per-segment frame counts partitioning the video.
struct Segmentation {
    std::vector<int> labels;
    std::vector<int> lengths;

    int size() const { return static_cast<int>(labels.size()); }
    int total_frames() const;
};

Segmentation make_segmentation(std::vector<int> labels, std::vector<int> lengths);

// Cut positions b_0..b_N derived from the lengths: b_0 = 0, b_N = T.
std::vector<int> segment_cuts(const Segmentation& seg);
// Per-frame class labels of length total_frames().
std::vector<int> frame_labels(const Segmentation& seg);
// Run-length encode a frame label stream.
Segmentation segmentation_from_frame_labels(const std::vector<int>& labels);

// T x K matrix of log p(a|x_t); every row is a normalized log-distribution.
struct FrameLogPosteriors {
    Matrix values;

    int frames() const { return static_cast<int>(values.rows()); }
    int num_classes() const { return static_cast<int>(values.cols()); }
};

FrameLogPosteriors make_frame_log_posteriors(Matrix values);
// Row-wise log-softmax of arbitrary finite scores.
FrameLogPosteriors log_softmax_rows(const Matrix& scores);

struct VideoSample {
    FrameSequence frames;
    Transcript transcript;
    std::optional<std::vector<int>> ground_truth;
};

struct Dataset {
    LabelSet labels;
    std::vector<VideoSample> videos;

    int num_classes() const { return labels.size(); }
};

// Collects every invariant violation instead of throwing, so malformed data
// loaded from disk can be diagnosed in one pass. Empty result means valid.
std::vector<std::string> validate_dataset(const Dataset& dataset);

}  // namespace cdfl

#endif
