#ifndef CDFL_DATASET_IO_HPP
#define CDFL_DATASET_IO_HPP

#include "cdfl/core.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace cdfl {

// Dataset directory layout:
//   mapping.txt              lines "index name"
//   features/<video>.txt     T lines, D space-separated decimal floats
//   transcripts/<video>.txt  one class name per line
//   groundTruth/<video>.txt  optional, one class name per frame line
//
// Loaders throw std::runtime_error on missing files and unparseable content,
// and leave semantic invariants (adjacent repeats, length mismatches) to
// validate_dataset so they can be reported rather than thrown.

Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);

LabelSet load_label_set(const std::filesystem::path& mapping_file);
void save_label_set(const std::filesystem::path& mapping_file, const LabelSet& labels);

// One class name per frame line; unknown names throw.
std::vector<int> load_frame_label_file(const std::filesystem::path& file, const LabelSet& labels);
void save_frame_label_file(const std::filesystem::path& file, const std::vector<int>& frame_labels,
                           const LabelSet& labels);

// All transcripts under <dir>/transcripts, sorted by video id.
std::vector<Transcript> load_transcript_pool(const std::filesystem::path& dir,
                                             const LabelSet& labels);

// Full-precision decimal rendering that round-trips a double exactly.
std::string format_double(double value);

}  // namespace cdfl

#endif
