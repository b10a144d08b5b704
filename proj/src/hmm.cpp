#include "cdfl/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace cdfl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Floor applied to log terms inside prefix sums so that -inf posteriors
// penalize instead of producing inf - inf.
constexpr double kLogFloor = -1e30;

double logsumexp(const Vector& v) {
    double m = v.maxCoeff();
    if (!std::isfinite(m)) {
        return m;
    }
    double s = 0.0;
    for (int i = 0; i < v.size(); ++i) {
        s += std::exp(v(i) - m);
    }
    return m + std::log(s);
}

}  // namespace

ClassPrior make_class_prior(Vector log_p) {
    if (log_p.size() < 1) {
        throw std::invalid_argument("class prior: K must be >= 1");
    }
    double lse = logsumexp(log_p);
    if (!(std::abs(lse) <= 1e-6)) {
        throw std::invalid_argument("class prior: logsumexp must be 0");
    }
    return ClassPrior{std::move(log_p)};
}

ClassPrior uniform_prior(int num_classes) {
    if (num_classes < 1) {
        throw std::invalid_argument("class prior: K must be >= 1");
    }
    Vector log_p = Vector::Constant(num_classes, -std::log(static_cast<double>(num_classes)));
    return ClassPrior{std::move(log_p)};
}

ClassPrior prior_from_probabilities(const Vector& p) {
    if (p.size() < 1 || p.minCoeff() <= 0.0) {
        throw std::invalid_argument("class prior: probabilities must be positive");
    }
    double total = p.sum();
    Vector log_p(p.size());
    for (int i = 0; i < p.size(); ++i) {
        log_p(i) = std::log(p(i) / total);
    }
    return ClassPrior{std::move(log_p)};
}

LengthModel make_length_model(Vector mean_length) {
    if (mean_length.size() < 1) {
        throw std::invalid_argument("length model: K must be >= 1");
    }
    for (int i = 0; i < mean_length.size(); ++i) {
        if (!(mean_length(i) > 0.0)) {
            throw std::invalid_argument("length model: all means must be > 0");
        }
    }
    return LengthModel{std::move(mean_length)};
}

Matrix frame_log_likelihood(const FrameLogPosteriors& post, const ClassPrior& prior) {
    if (post.num_classes() != prior.num_classes()) {
        throw std::invalid_argument("frame log likelihood: class counts disagree");
    }
    return post.values.rowwise() - prior.log_p.transpose();
}

double poisson_log_pmf(int length, double mean) {
    if (mean <= 0.0) {
        throw std::invalid_argument("poisson log pmf: mean must be > 0");
    }
    if (length < 0) {
        throw std::invalid_argument("poisson log pmf: length must be >= 0");
    }
    return length * std::log(mean) - mean - std::lgamma(static_cast<double>(length) + 1.0);
}

ViterbiResult constrained_viterbi(const FrameLogPosteriors& post, const ClassPrior& prior,
                                  const LengthModel& lengths, const Transcript& transcript,
                                  const ViterbiOptions& options) {
    const int total = post.frames();
    const int n_segments = transcript.size();
    const int k = post.num_classes();
    if (prior.num_classes() != k || lengths.num_classes() != k) {
        throw std::invalid_argument("constrained viterbi: class counts disagree");
    }
    for (int a : transcript.labels) {
        if (a < 0 || a >= k) {
            throw std::invalid_argument("constrained viterbi: transcript references unknown class");
        }
    }
    if (n_segments > total) {
        throw std::invalid_argument("constrained viterbi: transcript longer than video");
    }

    const Matrix loglik = frame_log_likelihood(post, prior);

    // Prefix sums of the log-likelihood per class so any segment term is O(1).
    Matrix prefix = Matrix::Zero(total + 1, k);
    for (int t = 1; t <= total; ++t) {
        for (int a = 0; a < k; ++a) {
            prefix(t, a) = prefix(t - 1, a) + std::max(loglik(t - 1, a), kLogFloor);
        }
    }

    // Poisson log-pmf per segment index and length.
    Matrix length_score(n_segments, total + 1);
    for (int n = 0; n < n_segments; ++n) {
        double mean = lengths.mean_length(transcript.labels[n]);
        for (int l = 1; l <= total; ++l) {
            length_score(n, l) = poisson_log_pmf(l, mean);
        }
    }

    // score(n, t): best log-posterior of the first n segments over frames 1..t.
    Matrix score = Matrix::Constant(n_segments + 1, total + 1, kNegInf);
    Eigen::MatrixXi parent = Eigen::MatrixXi::Constant(n_segments + 1, total + 1, -1);
    score(0, 0) = 0.0;

    const int cap = options.max_segment_length > 0 ? options.max_segment_length : total;
    for (int n = 1; n <= n_segments; ++n) {
        const int a = transcript.labels[n - 1];
        const int t_lo = n;
        const int t_hi = total - (n_segments - n);
        for (int t = t_lo; t <= t_hi; ++t) {
            double best = kNegInf;
            int best_prev = -1;
            const int prev_lo = std::max(n - 1, t - cap);
            // ascending prev with strict improvement keeps the earliest boundary
            for (int prev = prev_lo; prev <= t - 1; ++prev) {
                if (score(n - 1, prev) == kNegInf) {
                    continue;
                }
                double cand = score(n - 1, prev) + (prefix(t, a) - prefix(prev, a)) +
                              length_score(n, t - prev);
                if (cand > best) {
                    best = cand;
                    best_prev = prev;
                }
            }
            score(n, t) = best;
            parent(n, t) = best_prev;
        }
    }

    std::vector<int> seg_lengths(n_segments, 0);
    int t = total;
    for (int n = n_segments; n >= 1; --n) {
        int prev = parent(n, t);
        if (prev < 0) {
            throw std::runtime_error("constrained viterbi: no feasible segmentation");
        }
        seg_lengths[n - 1] = t - prev;
        t = prev;
    }

    ViterbiResult result;
    result.segmentation = make_segmentation(transcript.labels, std::move(seg_lengths));
    result.log_posterior = score(n_segments, total);
    return result;
}

std::pair<Transcript, ViterbiResult> select_transcript(const FrameLogPosteriors& post,
                                                       const ClassPrior& prior,
                                                       const LengthModel& lengths,
                                                       const std::vector<Transcript>& candidates,
                                                       const ViterbiOptions& options) {
    if (candidates.empty()) {
        throw std::invalid_argument("select transcript: candidate set is empty");
    }
    std::set<std::vector<int>> seen;
    bool have_best = false;
    Transcript best_transcript;
    ViterbiResult best_result;
    for (const Transcript& candidate : candidates) {
        if (!seen.insert(candidate.labels).second) {
            continue;
        }
        if (candidate.size() > post.frames()) {
            continue;
        }
        ViterbiResult result = constrained_viterbi(post, prior, lengths, candidate, options);
        if (!have_best || result.log_posterior > best_result.log_posterior ||
            (result.log_posterior == best_result.log_posterior && candidate < best_transcript)) {
            have_best = true;
            best_transcript = candidate;
            best_result = std::move(result);
        }
    }
    if (!have_best) {
        throw std::invalid_argument("select transcript: all candidates are infeasible");
    }
    return {std::move(best_transcript), std::move(best_result)};
}

}  // namespace cdfl
