#include "cdfl/metrics.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace cdfl {

namespace {

struct Interval {
    int begin = 0;  // inclusive
    int end = 0;    // exclusive
    int label = 0;

    int length() const { return end - begin; }
};

std::vector<Interval> intervals_of(const Segmentation& seg) {
    std::vector<Interval> out;
    int at = 0;
    for (int i = 0; i < seg.size(); ++i) {
        out.push_back({at, at + seg.lengths[i], seg.labels[i]});
        at += seg.lengths[i];
    }
    return out;
}

int intersection_length(const Interval& a, const Interval& b) {
    return std::max(0, std::min(a.end, b.end) - std::max(a.begin, b.begin));
}

// (iou, iod) per scored ground-truth segment.
std::vector<std::pair<double, double>> segment_overlaps(const Segmentation& pred,
                                                        const Segmentation& gt,
                                                        std::optional<int> background_id) {
    if (pred.total_frames() != gt.total_frames()) {
        throw std::invalid_argument("iou/iod: segmentations cover different frame ranges");
    }
    const std::vector<Interval> detections = intervals_of(pred);
    std::vector<std::pair<double, double>> scores;
    for (const Interval& truth : intervals_of(gt)) {
        if (background_id && truth.label == *background_id) {
            continue;
        }
        const Interval* best = nullptr;
        int best_overlap = 0;
        for (const Interval& det : detections) {
            if (det.label != truth.label) {
                continue;
            }
            int overlap = intersection_length(truth, det);
            if (overlap > best_overlap) {
                best_overlap = overlap;
                best = &det;
            }
        }
        if (best == nullptr) {
            scores.emplace_back(0.0, 0.0);
            continue;
        }
        const double inter = best_overlap;
        const double uni = truth.length() + best->length() - best_overlap;
        scores.emplace_back(inter / uni, inter / best->length());
    }
    return scores;
}

}  // namespace

double mof(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.size() != gt.size() || pred.empty()) {
        throw std::invalid_argument("mof: label streams must be non-empty and equal length");
    }
    std::int64_t correct = 0;
    for (size_t t = 0; t < pred.size(); ++t) {
        correct += pred[t] == gt[t] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double mof_bg(const std::vector<int>& pred, const std::vector<int>& gt, int background_id) {
    if (pred.size() != gt.size() || pred.empty()) {
        throw std::invalid_argument("mof-bg: label streams must be non-empty and equal length");
    }
    std::int64_t kept = 0;
    std::int64_t correct = 0;
    for (size_t t = 0; t < pred.size(); ++t) {
        if (gt[t] == background_id) {
            continue;
        }
        ++kept;
        correct += pred[t] == gt[t] ? 1 : 0;
    }
    if (kept == 0) {
        throw std::invalid_argument("mof-bg: ground truth is all background");
    }
    return static_cast<double>(correct) / static_cast<double>(kept);
}

std::pair<double, double> iou_iod(const Segmentation& pred, const Segmentation& gt,
                                  std::optional<int> background_id) {
    const std::vector<std::pair<double, double>> scores =
        segment_overlaps(pred, gt, background_id);
    if (scores.empty()) {
        throw std::invalid_argument("iou/iod: no scored ground-truth segment");
    }
    double iou = 0.0;
    double iod = 0.0;
    for (const auto& [u, d] : scores) {
        iou += u;
        iod += d;
    }
    return {iou / scores.size(), iod / scores.size()};
}

EvalReport evaluate(const std::vector<LabeledPrediction>& predictions,
                    std::optional<int> background_id) {
    if (predictions.empty()) {
        throw std::invalid_argument("evaluate: no predictions");
    }
    EvalReport report;
    std::int64_t frames = 0, frames_correct = 0;
    std::int64_t fg_frames = 0, fg_correct = 0;
    double iou_sum = 0.0, iod_sum = 0.0;
    std::int64_t segments = 0;

    for (const LabeledPrediction& p : predictions) {
        if (p.pred.size() != p.gt.size() || p.pred.empty()) {
            throw std::invalid_argument("evaluate: bad prediction for video " + p.video_id);
        }
        VideoEval video;
        video.video_id = p.video_id;
        video.mof = mof(p.pred, p.gt);
        frames += static_cast<std::int64_t>(p.pred.size());
        for (size_t t = 0; t < p.pred.size(); ++t) {
            const bool correct = p.pred[t] == p.gt[t];
            frames_correct += correct ? 1 : 0;
            if (!background_id || p.gt[t] != *background_id) {
                ++fg_frames;
                fg_correct += correct ? 1 : 0;
            }
        }
        if (background_id) {
            bool any_fg = false;
            for (int a : p.gt) {
                any_fg = any_fg || a != *background_id;
            }
            if (any_fg) {
                video.mof_bg = mof_bg(p.pred, p.gt, *background_id);
            }
        } else {
            video.mof_bg = video.mof;
        }

        const Segmentation pred_seg = segmentation_from_frame_labels(p.pred);
        const Segmentation gt_seg = segmentation_from_frame_labels(p.gt);
        const auto scores = segment_overlaps(pred_seg, gt_seg, background_id);
        if (!scores.empty()) {
            double vu = 0.0, vd = 0.0;
            for (const auto& [u, d] : scores) {
                vu += u;
                vd += d;
                iou_sum += u;
                iod_sum += d;
            }
            segments += static_cast<std::int64_t>(scores.size());
            video.iou = vu / scores.size();
            video.iod = vd / scores.size();
        }
        report.videos.push_back(std::move(video));
    }

    if (fg_frames == 0) {
        throw std::invalid_argument("evaluate: ground truth is all background");
    }
    if (segments == 0) {
        throw std::invalid_argument("evaluate: no scored ground-truth segment");
    }
    report.mof = static_cast<double>(frames_correct) / static_cast<double>(frames);
    report.mof_bg = static_cast<double>(fg_correct) / static_cast<double>(fg_frames);
    report.iou = iou_sum / static_cast<double>(segments);
    report.iod = iod_sum / static_cast<double>(segments);
    return report;
}

void write_report(std::ostream& out, const EvalReport& report) {
    auto fixed = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return std::string(buf);
    };
    out << "mof " << fixed(report.mof) << '\n';
    out << "mof_bg " << fixed(report.mof_bg) << '\n';
    out << "iou " << fixed(report.iou) << '\n';
    out << "iod " << fixed(report.iod) << '\n';
    out << "videos " << report.videos.size() << '\n';
    for (const VideoEval& v : report.videos) {
        out << "video " << v.video_id << " mof " << fixed(v.mof) << " mof_bg "
            << (v.mof_bg ? fixed(*v.mof_bg) : "-") << " iou " << (v.iou ? fixed(*v.iou) : "-")
            << " iod " << (v.iod ? fixed(*v.iod) : "-") << '\n';
    }
}

}  // namespace cdfl
