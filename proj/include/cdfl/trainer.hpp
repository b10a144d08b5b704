#ifndef CDFL_TRAINER_HPP
#define CDFL_TRAINER_HPP

#include "cdfl/core.hpp"
#include "cdfl/hmm.hpp"
#include "cdfl/losses.hpp"
#include "cdfl/scorer.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cdfl {

// Running statistics over every pseudo ground truth produced in training;
// feeds the Poisson means and class priors of later iterations.
struct PseudoGtHistory {
    std::vector<std::int64_t> frame_count;
    std::vector<std::int64_t> segment_count;
    std::vector<std::int64_t> segment_frames;
    std::int64_t total_frames = 0;
};

PseudoGtHistory empty_history(int num_classes);
void update_history(PseudoGtHistory& history, const Segmentation& anchor);

struct TrainConfig {
    int window = 20;
    LossKind loss = LossKind::constrained();
    int iterations = 2000;
    double initial_lr = 0.01;
    // -1 drops at 60% of iterations.
    int lr_drop_iteration = -1;
    double dropped_lr = 0.001;
    std::uint64_t seed = 1;
    ScorerVariant scorer = ScorerVariant::gru;
    int hidden = 64;
    int max_segment_length = 0;
};

double learning_rate_at(const TrainConfig& cfg, int iteration);

struct ModelState {
    ScorerParams scorer;
    ClassPrior prior;
    LengthModel lengths;
    PseudoGtHistory history;
    double initial_mean_length = 1.0;  // kept for classes never observed
};

// Seeded scorer init, uniform priors, and Poisson means set to
// mean video length / mean transcript length.
ModelState init_state(const TrainConfig& cfg, const Dataset& dataset);

// Recompute priors and Poisson means from the history. Classes never
// observed keep the initial mean and receive a prior share of
// 1/(total frames + K); observed classes split the remaining mass by frame
// frequency.
void refresh_statistics(ModelState& state);

struct StepReport {
    bool skipped = false;
    std::string skip_reason;
    double loss = 0.0;
    double lr = 0.0;
    Segmentation anchor;
};

// One training iteration: score frames, decode the pseudo ground truth with
// the pre-update statistics, build the graph, take a loss gradient step, and
// only then fold the anchor into the history.
StepReport train_step(ModelState& state, const FrameSequence& video, const Transcript& transcript,
                      const TrainConfig& cfg, int iteration);

// Full loop: one uniformly sampled video per iteration; per-iteration lines
// "iteration video_id loss lr" go to `log` when given.
ModelState run_training(const Dataset& dataset, const TrainConfig& cfg,
                        std::ostream* log = nullptr);

// Segmentation: select the best transcript from the pool, anchor with the
// constrained Viterbi decode, then return the minimum-energy valid path of
// the window-augmented graph.
Segmentation segment(const ModelState& state, const FrameSequence& video,
                     const std::vector<Transcript>& transcript_pool, int window);

// Alignment: segmentation with the transcript given.
Segmentation align(const ModelState& state, const FrameSequence& video,
                   const Transcript& transcript, int window);

void save_state(std::ostream& out, const ModelState& state);
ModelState load_state(std::istream& in);

}  // namespace cdfl

#endif
