#include "cdfl/core.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cdfl {

namespace {

constexpr double kRowNormTolerance = 1e-6;

double row_logsumexp(const Eigen::RowVectorXd& row) {
    double m = row.maxCoeff();
    if (!std::isfinite(m)) {
        return m;  // all -inf rows propagate -inf
    }
    double s = 0.0;
    for (int i = 0; i < row.size(); ++i) {
        s += std::exp(row(i) - m);
    }
    return m + std::log(s);
}

}  // namespace

int LabelSet::index_of(const std::string& name) const {
    for (int i = 0; i < size(); ++i) {
        if (names[i] == name) {
            return i;
        }
    }
    return -1;
}

LabelSet make_label_set(std::vector<std::string> names, std::optional<int> background_id) {
    if (names.empty()) {
        throw std::invalid_argument("label set: at least one class required");
    }
    std::set<std::string> unique(names.begin(), names.end());
    if (unique.size() != names.size()) {
        throw std::invalid_argument("label set: class names must be unique");
    }
    if (background_id && (*background_id < 0 || *background_id >= static_cast<int>(names.size()))) {
        throw std::invalid_argument("label set: background_id out of range");
    }
    return LabelSet{std::move(names), background_id};
}

FrameSequence make_frame_sequence(std::string video_id, Matrix features) {
    if (features.rows() < 1 || features.cols() < 1) {
        throw std::invalid_argument("frame sequence '" + video_id + "': T and D must be >= 1");
    }
    if (!features.allFinite()) {
        throw std::invalid_argument("frame sequence '" + video_id + "': features must be finite");
    }
    return FrameSequence{std::move(video_id), std::move(features)};
}

Transcript make_transcript(std::vector<int> labels) {
    if (labels.empty()) {
        throw std::invalid_argument("transcript: must contain at least one label");
    }
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) {
            throw std::invalid_argument("transcript: negative class index");
        }
        if (i > 0 && labels[i] == labels[i - 1]) {
            throw std::invalid_argument("transcript: adjacent labels must differ");
        }
    }
    return Transcript{std::move(labels)};
}

int Segmentation::total_frames() const {
    return std::accumulate(lengths.begin(), lengths.end(), 0);
}

Segmentation make_segmentation(std::vector<int> labels, std::vector<int> lengths) {
    if (labels.size() != lengths.size()) {
        throw std::invalid_argument("segmentation: labels and lengths must have equal size");
    }
    if (labels.empty()) {
        throw std::invalid_argument("segmentation: must contain at least one segment");
    }
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) {
            throw std::invalid_argument("segmentation: negative class index");
        }
        if (lengths[i] < 1) {
            throw std::invalid_argument("segmentation: every segment needs >= 1 frame");
        }
        if (i > 0 && labels[i] == labels[i - 1]) {
            throw std::invalid_argument("segmentation: adjacent labels must differ");
        }
    }
    return Segmentation{std::move(labels), std::move(lengths)};
}

std::vector<int> segment_cuts(const Segmentation& seg) {
    std::vector<int> cuts(seg.size() + 1, 0);
    for (int i = 0; i < seg.size(); ++i) {
        cuts[i + 1] = cuts[i] + seg.lengths[i];
    }
    return cuts;
}

std::vector<int> frame_labels(const Segmentation& seg) {
    std::vector<int> out;
    out.reserve(seg.total_frames());
    for (int i = 0; i < seg.size(); ++i) {
        out.insert(out.end(), seg.lengths[i], seg.labels[i]);
    }
    return out;
}

Segmentation segmentation_from_frame_labels(const std::vector<int>& labels) {
    if (labels.empty()) {
        throw std::invalid_argument("segmentation: empty frame label stream");
    }
    std::vector<int> seg_labels;
    std::vector<int> seg_lengths;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (seg_labels.empty() || labels[i] != seg_labels.back()) {
            seg_labels.push_back(labels[i]);
            seg_lengths.push_back(1);
        } else {
            ++seg_lengths.back();
        }
    }
    return make_segmentation(std::move(seg_labels), std::move(seg_lengths));
}

FrameLogPosteriors make_frame_log_posteriors(Matrix values) {
    if (values.rows() < 1 || values.cols() < 1) {
        throw std::invalid_argument("log posteriors: T and K must be >= 1");
    }
    for (int t = 0; t < values.rows(); ++t) {
        for (int k = 0; k < values.cols(); ++k) {
            double v = values(t, k);
            if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
                throw std::invalid_argument("log posteriors: entries must be finite or -inf");
            }
        }
        double lse = row_logsumexp(values.row(t));
        if (!(std::abs(lse) <= kRowNormTolerance)) {
            std::ostringstream msg;
            msg << "log posteriors: row " << t << " logsumexp " << lse << " not 0";
            throw std::invalid_argument(msg.str());
        }
    }
    return FrameLogPosteriors{std::move(values)};
}

FrameLogPosteriors log_softmax_rows(const Matrix& scores) {
    if (!scores.allFinite()) {
        throw std::invalid_argument("log softmax: scores must be finite");
    }
    Matrix out(scores.rows(), scores.cols());
    for (int t = 0; t < scores.rows(); ++t) {
        double m = scores.row(t).maxCoeff();
        double s = 0.0;
        for (int k = 0; k < scores.cols(); ++k) {
            s += std::exp(scores(t, k) - m);
        }
        double lse = m + std::log(s);
        for (int k = 0; k < scores.cols(); ++k) {
            out(t, k) = scores(t, k) - lse;
        }
    }
    return FrameLogPosteriors{std::move(out)};
}

std::vector<std::string> validate_dataset(const Dataset& dataset) {
    std::vector<std::string> violations;
    auto report = [&violations](const std::string& video, const std::string& field,
                                const std::string& what) {
        violations.push_back(video + ": " + field + ": " + what);
    };

    const int k = dataset.labels.size();
    if (k < 1) {
        violations.push_back("<dataset>: label_set: at least one class required");
    }
    {
        std::set<std::string> unique(dataset.labels.names.begin(), dataset.labels.names.end());
        if (unique.size() != dataset.labels.names.size()) {
            violations.push_back("<dataset>: label_set: class names must be unique");
        }
        if (dataset.labels.background_id &&
            (*dataset.labels.background_id < 0 || *dataset.labels.background_id >= k)) {
            violations.push_back("<dataset>: label_set: background_id out of range");
        }
    }

    for (const VideoSample& video : dataset.videos) {
        const std::string& id = video.frames.video_id;
        const int t = video.frames.frames();
        if (t < 1 || video.frames.dim() < 1) {
            report(id, "features", "T and D must be >= 1");
        }
        if (!video.frames.features.allFinite()) {
            report(id, "features", "entries must be finite");
        }
        if (video.transcript.labels.empty()) {
            report(id, "transcript", "must contain at least one label");
        }
        for (size_t i = 0; i < video.transcript.labels.size(); ++i) {
            int a = video.transcript.labels[i];
            if (a < 0 || a >= k) {
                report(id, "transcript", "label " + std::to_string(a) + " outside label set");
            }
            if (i > 0 && a == video.transcript.labels[i - 1]) {
                report(id, "transcript", "adjacent labels must differ");
            }
        }
        if (video.ground_truth) {
            if (static_cast<int>(video.ground_truth->size()) != t) {
                report(id, "ground_truth",
                       "length " + std::to_string(video.ground_truth->size()) +
                           " does not match T=" + std::to_string(t));
            }
            for (int a : *video.ground_truth) {
                if (a < 0 || a >= k) {
                    report(id, "ground_truth", "label " + std::to_string(a) + " outside label set");
                    break;
                }
            }
        }
    }
    return violations;
}

}  // namespace cdfl
