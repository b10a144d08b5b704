#include "cdfl/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cdfl {

namespace fs = std::filesystem;

namespace {

std::ifstream open_for_read(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_for_write(const fs::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

std::vector<std::string> read_name_lines(const fs::path& path) {
    std::ifstream in = open_for_read(path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
            line.pop_back();
        }
        if (!line.empty()) {
            names.push_back(line);
        }
    }
    return names;
}

std::vector<int> names_to_indices(const std::vector<std::string>& names, const LabelSet& labels,
                                  const fs::path& origin) {
    std::vector<int> out;
    out.reserve(names.size());
    for (const std::string& name : names) {
        int id = labels.index_of(name);
        if (id < 0) {
            throw std::runtime_error(origin.string() + ": unknown class name '" + name + "'");
        }
        out.push_back(id);
    }
    return out;
}

std::vector<std::string> sorted_video_ids(const fs::path& dir) {
    std::vector<std::string> ids;
    for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            ids.push_back(entry.path().stem().string());
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

LabelSet load_label_set(const fs::path& mapping_file) {
    std::ifstream in = open_for_read(mapping_file);
    std::vector<std::pair<int, std::string>> entries;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        int index = 0;
        std::string name;
        if (ls >> index >> name) {
            entries.emplace_back(index, name);
        }
    }
    if (entries.empty()) {
        throw std::runtime_error(mapping_file.string() + ": no label entries");
    }
    std::sort(entries.begin(), entries.end());
    std::vector<std::string> names;
    std::optional<int> background;
    for (size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].first != static_cast<int>(i)) {
            throw std::runtime_error(mapping_file.string() + ": indices must be dense 0..K-1");
        }
        if (entries[i].second == "background") {
            background = static_cast<int>(i);
        }
        names.push_back(entries[i].second);
    }
    return make_label_set(std::move(names), background);
}

void save_label_set(const fs::path& mapping_file, const LabelSet& labels) {
    std::ofstream out = open_for_write(mapping_file);
    for (int i = 0; i < labels.size(); ++i) {
        out << i << ' ' << labels.names[i] << '\n';
    }
}

std::vector<int> load_frame_label_file(const fs::path& file, const LabelSet& labels) {
    return names_to_indices(read_name_lines(file), labels, file);
}

void save_frame_label_file(const fs::path& file, const std::vector<int>& frame_labels,
                           const LabelSet& labels) {
    std::ofstream out = open_for_write(file);
    for (int a : frame_labels) {
        if (a < 0 || a >= labels.size()) {
            throw std::invalid_argument(file.string() + ": label index out of range");
        }
        out << labels.names[a] << '\n';
    }
}

Dataset load_dataset(const fs::path& dir) {
    Dataset dataset;
    dataset.labels = load_label_set(dir / "mapping.txt");

    const fs::path features_dir = dir / "features";
    const fs::path transcripts_dir = dir / "transcripts";
    const fs::path gt_dir = dir / "groundTruth";
    if (!fs::is_directory(features_dir)) {
        throw std::runtime_error("missing directory " + features_dir.string());
    }

    for (const std::string& id : sorted_video_ids(features_dir)) {
        VideoSample sample;
        sample.frames.video_id = id;

        {
            std::ifstream in = open_for_read(features_dir / (id + ".txt"));
            std::vector<std::vector<double>> rows;
            std::string line;
            while (std::getline(in, line)) {
                std::istringstream ls(line);
                std::vector<double> row;
                double v = 0.0;
                while (ls >> v) {
                    row.push_back(v);
                }
                if (!row.empty()) {
                    rows.push_back(std::move(row));
                }
            }
            if (rows.empty()) {
                throw std::runtime_error("empty feature file for video " + id);
            }
            const size_t dim = rows.front().size();
            Matrix features(static_cast<int>(rows.size()), static_cast<int>(dim));
            for (size_t t = 0; t < rows.size(); ++t) {
                if (rows[t].size() != dim) {
                    throw std::runtime_error("ragged feature rows in video " + id);
                }
                for (size_t d = 0; d < dim; ++d) {
                    features(static_cast<int>(t), static_cast<int>(d)) = rows[t][d];
                }
            }
            sample.frames.features = std::move(features);
        }

        sample.transcript.labels = names_to_indices(
            read_name_lines(transcripts_dir / (id + ".txt")), dataset.labels,
            transcripts_dir / (id + ".txt"));

        const fs::path gt_file = gt_dir / (id + ".txt");
        if (fs::exists(gt_file)) {
            sample.ground_truth = load_frame_label_file(gt_file, dataset.labels);
        }

        dataset.videos.push_back(std::move(sample));
    }
    return dataset;
}

void save_dataset(const fs::path& dir, const Dataset& dataset) {
    fs::create_directories(dir / "features");
    fs::create_directories(dir / "transcripts");
    bool any_gt = false;
    for (const VideoSample& video : dataset.videos) {
        any_gt = any_gt || video.ground_truth.has_value();
    }
    if (any_gt) {
        fs::create_directories(dir / "groundTruth");
    }

    save_label_set(dir / "mapping.txt", dataset.labels);

    for (const VideoSample& video : dataset.videos) {
        const std::string& id = video.frames.video_id;
        {
            std::ofstream out = open_for_write(dir / "features" / (id + ".txt"));
            const Matrix& f = video.frames.features;
            for (int t = 0; t < f.rows(); ++t) {
                for (int d = 0; d < f.cols(); ++d) {
                    if (d > 0) {
                        out << ' ';
                    }
                    out << format_double(f(t, d));
                }
                out << '\n';
            }
        }
        {
            std::ofstream out = open_for_write(dir / "transcripts" / (id + ".txt"));
            for (int a : video.transcript.labels) {
                out << dataset.labels.names.at(a) << '\n';
            }
        }
        if (video.ground_truth) {
            save_frame_label_file(dir / "groundTruth" / (id + ".txt"), *video.ground_truth,
                                  dataset.labels);
        }
    }
}

std::vector<Transcript> load_transcript_pool(const fs::path& dir, const LabelSet& labels) {
    const fs::path transcripts_dir = dir / "transcripts";
    if (!fs::is_directory(transcripts_dir)) {
        throw std::runtime_error("missing directory " + transcripts_dir.string());
    }
    std::vector<Transcript> pool;
    for (const std::string& id : sorted_video_ids(transcripts_dir)) {
        const fs::path file = transcripts_dir / (id + ".txt");
        pool.push_back(make_transcript(names_to_indices(read_name_lines(file), labels, file)));
    }
    return pool;
}

}  // namespace cdfl
