#ifndef CDFL_HMM_HPP
#define CDFL_HMM_HPP

#include "cdfl/core.hpp"

#include <utility>
#include <vector>

namespace cdfl {

// Length-K log class prior, normalized.
struct ClassPrior {
    Vector log_p;

    int num_classes() const { return static_cast<int>(log_p.size()); }
};

ClassPrior make_class_prior(Vector log_p);
ClassPrior uniform_prior(int num_classes);
// Normalizes raw probability masses (not logs) into a prior.
ClassPrior prior_from_probabilities(const Vector& p);

// Per-class Poisson means for segment lengths.
struct LengthModel {
    Vector mean_length;

    int num_classes() const { return static_cast<int>(mean_length.size()); }
};

LengthModel make_length_model(Vector mean_length);

struct ViterbiResult {
    Segmentation segmentation;
    double log_posterior = 0.0;
};

struct ViterbiOptions {
    // 0 disables the cap and keeps the decode exact over all segment lengths.
    int max_segment_length = 0;
};

// log p(x_t|a) up to a constant: log p(a|x_t) - log p(a), as a T x K matrix.
Matrix frame_log_likelihood(const FrameLogPosteriors& post, const ClassPrior& prior);

// l * log(mean) - mean - log(l!) via lgamma.
double poisson_log_pmf(int length, double mean);

// Maximizes the segmentation log-posterior subject to the transcript: the
// returned labels equal the transcript and the lengths partition all frames.
// Score = sum of frame log-likelihoods + per-segment Poisson log-pmfs (the
// constant transcript prior is dropped). Ties break toward earlier
// boundaries.
ViterbiResult constrained_viterbi(const FrameLogPosteriors& post, const ClassPrior& prior,
                                  const LengthModel& lengths, const Transcript& transcript,
                                  const ViterbiOptions& options = {});

// Decodes every distinct candidate and returns the one with the maximal
// log-posterior; ties break toward the lexicographically smaller transcript.
// Candidates longer than the video are skipped; throws if none is feasible.
std::pair<Transcript, ViterbiResult> select_transcript(const FrameLogPosteriors& post,
                                                       const ClassPrior& prior,
                                                       const LengthModel& lengths,
                                                       const std::vector<Transcript>& candidates,
                                                       const ViterbiOptions& options = {});

}  // namespace cdfl

#endif
