#include "cdfl/trainer.hpp"

#include "cdfl/dataset_io.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

namespace cdfl {

PseudoGtHistory empty_history(int num_classes) {
    PseudoGtHistory history;
    history.frame_count.assign(num_classes, 0);
    history.segment_count.assign(num_classes, 0);
    history.segment_frames.assign(num_classes, 0);
    return history;
}

void update_history(PseudoGtHistory& history, const Segmentation& anchor) {
    for (int i = 0; i < anchor.size(); ++i) {
        const int a = anchor.labels[i];
        if (a < 0 || a >= static_cast<int>(history.frame_count.size())) {
            throw std::invalid_argument("history update: label out of range");
        }
        history.frame_count[a] += anchor.lengths[i];
        history.segment_count[a] += 1;
        history.segment_frames[a] += anchor.lengths[i];
        history.total_frames += anchor.lengths[i];
    }
}

double learning_rate_at(const TrainConfig& cfg, int iteration) {
    int drop = cfg.lr_drop_iteration >= 0 ? cfg.lr_drop_iteration
                                          : static_cast<int>(0.6 * cfg.iterations);
    return iteration >= drop ? cfg.dropped_lr : cfg.initial_lr;
}

ModelState init_state(const TrainConfig& cfg, const Dataset& dataset) {
    if (dataset.videos.empty()) {
        throw std::invalid_argument("init state: empty dataset");
    }
    const int k = dataset.num_classes();

    double mean_frames = 0.0;
    double mean_transcript = 0.0;
    for (const VideoSample& video : dataset.videos) {
        mean_frames += video.frames.frames();
        mean_transcript += video.transcript.size();
    }
    mean_frames /= static_cast<double>(dataset.videos.size());
    mean_transcript /= static_cast<double>(dataset.videos.size());

    ModelState state;
    state.scorer = init_scorer(cfg.scorer, dataset.videos.front().frames.dim(), k, cfg.hidden,
                               cfg.seed);
    state.prior = uniform_prior(k);
    state.initial_mean_length = std::max(mean_frames / mean_transcript, 1.0);
    state.lengths = make_length_model(Vector::Constant(k, state.initial_mean_length));
    state.history = empty_history(k);
    return state;
}

void refresh_statistics(ModelState& state) {
    const int k = static_cast<int>(state.history.frame_count.size());
    const PseudoGtHistory& h = state.history;

    Vector mean_length(k);
    for (int a = 0; a < k; ++a) {
        mean_length(a) = h.segment_count[a] > 0
                             ? static_cast<double>(h.segment_frames[a]) /
                                   static_cast<double>(h.segment_count[a])
                             : state.initial_mean_length;
    }
    state.lengths = make_length_model(std::move(mean_length));

    // Unseen classes get exactly 1/(total frames + K); seen classes split the
    // remaining mass proportionally to their frame frequency.
    const double floor = 1.0 / (static_cast<double>(h.total_frames) + k);
    int unseen = 0;
    for (int a = 0; a < k; ++a) {
        unseen += h.frame_count[a] == 0 ? 1 : 0;
    }
    Vector p(k);
    const double seen_mass = 1.0 - unseen * floor;
    for (int a = 0; a < k; ++a) {
        p(a) = h.frame_count[a] == 0
                   ? floor
                   : seen_mass * static_cast<double>(h.frame_count[a]) /
                         static_cast<double>(h.total_frames);
    }
    state.prior = prior_from_probabilities(p);
}

StepReport train_step(ModelState& state, const FrameSequence& video, const Transcript& transcript,
                      const TrainConfig& cfg, int iteration) {
    StepReport report;
    report.lr = learning_rate_at(cfg, iteration);
    if (transcript.size() > video.frames()) {
        report.skipped = true;
        report.skip_reason = "transcript longer than video";
        return report;
    }

    auto [post, cache] = scorer_forward(state.scorer, video);

    ViterbiOptions vopts;
    vopts.max_segment_length = cfg.max_segment_length;
    ViterbiResult anchor = constrained_viterbi(post, state.prior, state.lengths, transcript, vopts);

    const SegGraph graph = build_graph(anchor.segmentation, post, cfg.window);
    report.loss = loss_value(graph, transcript, cfg.loss);
    const LossGradients grads = loss_backward(graph, transcript, cfg.loss);
    const ParamGradients param_grads = scorer_backward(cache, grads.d_frame);
    sgd_step(state.scorer, param_grads, report.lr);

    // The statistics refresh applies from the next iteration on; this step's
    // loss and anchor used the pre-update values.
    update_history(state.history, anchor.segmentation);
    refresh_statistics(state);

    report.anchor = std::move(anchor.segmentation);
    return report;
}

ModelState run_training(const Dataset& dataset, const TrainConfig& cfg, std::ostream* log) {
    ModelState state = init_state(cfg, dataset);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<size_t> pick(0, dataset.videos.size() - 1);
    for (int iteration = 0; iteration < cfg.iterations; ++iteration) {
        const VideoSample& video = dataset.videos[pick(rng)];
        StepReport report = train_step(state, video.frames, video.transcript, cfg, iteration);
        if (log) {
            (*log) << iteration << ' ' << video.frames.video_id << ' ';
            if (report.skipped) {
                (*log) << "skipped:" << report.skip_reason;
            } else {
                (*log) << format_double(report.loss);
            }
            (*log) << ' ' << format_double(report.lr) << '\n';
        }
    }
    return state;
}

Segmentation segment(const ModelState& state, const FrameSequence& video,
                     const std::vector<Transcript>& transcript_pool, int window) {
    auto [post, cache] = scorer_forward(state.scorer, video);
    auto [transcript, anchor] =
        select_transcript(post, state.prior, state.lengths, transcript_pool);
    const SegGraph graph = build_graph(anchor.segmentation, post, window);
    return segmentation_from_path(min_energy_valid_path(graph, transcript));
}

Segmentation align(const ModelState& state, const FrameSequence& video,
                   const Transcript& transcript, int window) {
    return segment(state, video, {transcript}, window);
}

namespace {

void write_counter_line(std::ostream& out, const char* name,
                        const std::vector<std::int64_t>& values) {
    out << name;
    for (std::int64_t v : values) {
        out << ' ' << v;
    }
    out << '\n';
}

std::vector<std::int64_t> read_counter_line(std::istream& in, const char* name, int k) {
    std::string key;
    if (!(in >> key) || key != name) {
        throw std::runtime_error(std::string("model checkpoint: expected ") + name);
    }
    std::vector<std::int64_t> values(k, 0);
    for (int a = 0; a < k; ++a) {
        if (!(in >> values[a])) {
            throw std::runtime_error(std::string("model checkpoint: truncated ") + name);
        }
    }
    return values;
}

Vector read_vector_line(std::istream& in, const char* name, int k) {
    std::string key;
    if (!(in >> key) || key != name) {
        throw std::runtime_error(std::string("model checkpoint: expected ") + name);
    }
    Vector values(k);
    for (int a = 0; a < k; ++a) {
        if (!(in >> values(a))) {
            throw std::runtime_error(std::string("model checkpoint: truncated ") + name);
        }
    }
    return values;
}

}  // namespace

void save_state(std::ostream& out, const ModelState& state) {
    const int k = state.prior.num_classes();
    out << "model-state 1\n";
    out << "classes " << k << '\n';
    out << "initial_mean_length " << format_double(state.initial_mean_length) << '\n';
    out << "mean_length";
    for (int a = 0; a < k; ++a) {
        out << ' ' << format_double(state.lengths.mean_length(a));
    }
    out << '\n';
    out << "log_prior";
    for (int a = 0; a < k; ++a) {
        out << ' ' << format_double(state.prior.log_p(a));
    }
    out << '\n';
    write_counter_line(out, "frame_count", state.history.frame_count);
    write_counter_line(out, "segment_count", state.history.segment_count);
    write_counter_line(out, "segment_frames", state.history.segment_frames);
    out << "total_frames " << state.history.total_frames << '\n';
    save_scorer(out, state.scorer);
}

ModelState load_state(std::istream& in) {
    std::string key;
    int version = 0;
    if (!(in >> key >> version) || key != "model-state" || version != 1) {
        throw std::runtime_error("model checkpoint: bad header");
    }
    int k = 0;
    if (!(in >> key >> k) || key != "classes" || k < 1) {
        throw std::runtime_error("model checkpoint: bad class count");
    }
    ModelState state;
    if (!(in >> key >> state.initial_mean_length) || key != "initial_mean_length") {
        throw std::runtime_error("model checkpoint: expected initial_mean_length");
    }
    state.lengths = make_length_model(read_vector_line(in, "mean_length", k));
    state.prior = make_class_prior(read_vector_line(in, "log_prior", k));
    state.history.frame_count = read_counter_line(in, "frame_count", k);
    state.history.segment_count = read_counter_line(in, "segment_count", k);
    state.history.segment_frames = read_counter_line(in, "segment_frames", k);
    if (!(in >> key >> state.history.total_frames) || key != "total_frames") {
        throw std::runtime_error("model checkpoint: expected total_frames");
    }
    state.scorer = load_scorer(in);
    return state;
}

}  // namespace cdfl
