#ifndef CDFL_METRICS_HPP
#define CDFL_METRICS_HPP

#include "cdfl/core.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cdfl {

// Fraction of frames with pred == gt.
double mof(const std::vector<int>& pred, const std::vector<int>& gt);

// Mof restricted to frames whose ground truth is not background.
double mof_bg(const std::vector<int>& pred, const std::vector<int>& gt, int background_id);

// For each non-background ground-truth segment, the same-class detected
// segment with maximal overlap scores intersection/union and
// intersection/detection (zero when no same-class detection exists);
// averages are over ground-truth segments.
std::pair<double, double> iou_iod(const Segmentation& pred, const Segmentation& gt,
                                  std::optional<int> background_id);

struct VideoEval {
    std::string video_id;
    double mof = 0.0;
    std::optional<double> mof_bg;  // absent when ground truth is all background
    std::optional<double> iou;     // absent when no scored ground-truth segment exists
    std::optional<double> iod;
};

struct EvalReport {
    double mof = 0.0;
    double mof_bg = 0.0;
    double iou = 0.0;
    double iod = 0.0;
    std::vector<VideoEval> videos;
};

struct LabeledPrediction {
    std::string video_id;
    std::vector<int> pred;
    std::vector<int> gt;
};

// Dataset-level report: frame metrics pool frames across videos, segment
// metrics pool ground-truth segments across videos. Without a background id
// mof_bg equals mof and every ground-truth segment is scored.
EvalReport evaluate(const std::vector<LabeledPrediction>& predictions,
                    std::optional<int> background_id);

// Summary as machine-readable "metric value" lines followed by a per-video
// breakdown.
void write_report(std::ostream& out, const EvalReport& report);

}  // namespace cdfl

#endif
