#pragma once

#include <iosfwd>
#include <string>

#include "fimnet/sequence.hpp"

namespace fimnet {

inline constexpr int kSegmentLength = 150;
inline constexpr int kDefaultFilterWindow = 15;

// Reads the JSON-Lines sequence format: one object per frame
// {"t": <int>, "joints": {"SpineMid": [x,y,z] | null, ...}}, with an optional
// header line {"frame_rate": 30, "skeleton": "kinect25" | "pruned17"}.
// Frames are sorted by index on return. Without a header the skeleton kind is
// inferred from the joint names seen.
RawSequence parse_sequence(std::istream& in);
RawSequence parse_sequence_file(const std::string& path);

// Writes the same format (always with a header line).
void write_sequence(std::ostream& out, const RawSequence& seq);

// Fills missing frames and joints by per-axis linear interpolation between
// the nearest observed neighbors; leading/trailing gaps hold the nearest
// observed value. Every joint must be observed in at least 2 frames.
DenseSequence interpolate_missing(const RawSequence& seq);

// Sliding-window filters, applied independently per joint and axis, window
// truncated at the sequence boundaries. Window must be odd and >= 1.
DenseSequence median_filter(const DenseSequence& seq, int window);
DenseSequence moving_average(const DenseSequence& seq, int window);

// Drops the eight extremity points of the capture skeleton and reorders the
// survivors to the canonical 17-joint codes. A 17-joint input passes through
// unchanged (sets *warned if given).
DenseSequence prune_joints(const DenseSequence& seq, bool* warned = nullptr);

// Keeps the first `length` frames; shorter sequences are rejected.
CleanSequence segment(const DenseSequence& seq, int length = kSegmentLength);

struct CleaningOptions {
  int median_window = kDefaultFilterWindow;
  int average_window = kDefaultFilterWindow;
  int segment_length = kSegmentLength;
};

// interpolate -> median -> moving average -> prune -> segment.
CleanSequence clean_pipeline(const RawSequence& seq,
                             const CleaningOptions& options = {});

}  // namespace fimnet
