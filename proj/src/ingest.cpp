#include "fimnet/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fimnet/errors.hpp"

namespace fimnet {

const std::vector<std::string>& joint_names_of(SkeletonKind kind) {
  return kind == SkeletonKind::Kinect25 ? capture_joint_names() : joint_names();
}

namespace {

bool is_header_line(const nlohmann::json& obj) {
  return obj.is_object() && !obj.contains("t");
}

SkeletonKind parse_skeleton_kind(const std::string& s, long line) {
  if (s == "kinect25") return SkeletonKind::Kinect25;
  if (s == "pruned17") return SkeletonKind::Pruned17;
  throw ParseError("unknown skeleton kind \"" + s + "\"", line);
}

}  // namespace

RawSequence parse_sequence(std::istream& in) {
  RawSequence seq;
  bool kind_declared = false;
  bool saw_extremity = false;

  // Joint slots follow the capture order until the kind is known; the 17-name
  // set is a prefix of the 25-name set, so indices agree between the two.
  struct PendingFrame {
    std::int64_t index;
    std::vector<std::optional<Vec3>> joints;
  };
  std::vector<PendingFrame> frames;
  std::set<std::int64_t> seen_indices;

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;

    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
      throw ParseError("malformed JSON object", line_no);

    if (is_header_line(obj)) {
      if (line_no != 1 && !frames.empty())
        throw ParseError("header line must precede all frames", line_no);
      if (obj.contains("frame_rate")) {
        double rate = obj["frame_rate"].get<double>();
        if (!(rate > 0.0)) throw ParseError("frame_rate must be positive", line_no);
        seq.frame_rate = rate;
      }
      if (obj.contains("skeleton")) {
        seq.kind = parse_skeleton_kind(obj["skeleton"].get<std::string>(), line_no);
        kind_declared = true;
      }
      continue;
    }

    if (!obj["t"].is_number_integer())
      throw ParseError("frame index \"t\" must be an integer", line_no);
    const std::int64_t index = obj["t"].get<std::int64_t>();
    if (!seen_indices.insert(index).second) throw DuplicateFrameError(index);

    PendingFrame frame;
    frame.index = index;
    frame.joints.assign(kCaptureJointCount, std::nullopt);

    if (obj.contains("joints")) {
      if (!obj["joints"].is_object())
        throw ParseError("\"joints\" must be an object", line_no);
      for (const auto& [name, value] : obj["joints"].items()) {
        const int idx = capture_joint_index(name);
        if (idx < 0) throw UnknownJointError(name);
        if (kind_declared && seq.kind == SkeletonKind::Pruned17 && idx >= kJointCount)
          throw UnknownJointError(name + " (not in the pruned 17-joint skeleton)");
        if (idx >= kJointCount) saw_extremity = true;
        if (value.is_null()) continue;
        if (!value.is_array() || value.size() != 3)
          throw ParseError("joint \"" + name + "\" must be [x,y,z] or null", line_no);
        Vec3 p;
        for (int a = 0; a < 3; ++a) {
          if (!value[static_cast<std::size_t>(a)].is_number())
            throw ParseError("joint \"" + name + "\" has a non-numeric coordinate", line_no);
          p[static_cast<std::size_t>(a)] = value[static_cast<std::size_t>(a)].get<double>();
        }
        frame.joints[static_cast<std::size_t>(idx)] = p;
      }
    }
    frames.push_back(std::move(frame));
  }

  if (!kind_declared)
    seq.kind = saw_extremity ? SkeletonKind::Kinect25 : SkeletonKind::Pruned17;

  std::sort(frames.begin(), frames.end(),
            [](const PendingFrame& a, const PendingFrame& b) { return a.index < b.index; });

  const int j_count = seq.joint_count();
  seq.frames.reserve(frames.size());
  for (auto& f : frames) {
    RawFrame out;
    out.index = f.index;
    out.joints.assign(f.joints.begin(), f.joints.begin() + j_count);
    seq.frames.push_back(std::move(out));
  }
  return seq;
}

RawSequence parse_sequence_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sequence file: " + path);
  return parse_sequence(in);
}

void write_sequence(std::ostream& out, const RawSequence& seq) {
  nlohmann::json header;
  header["frame_rate"] = seq.frame_rate;
  header["skeleton"] = seq.kind == SkeletonKind::Kinect25 ? "kinect25" : "pruned17";
  out << header.dump() << '\n';

  const auto& names = joint_names_of(seq.kind);
  for (const auto& frame : seq.frames) {
    nlohmann::json obj;
    obj["t"] = frame.index;
    nlohmann::json joints = nlohmann::json::object();
    for (std::size_t j = 0; j < frame.joints.size(); ++j) {
      if (frame.joints[j]) {
        const Vec3& p = *frame.joints[j];
        joints[names[j]] = {p[0], p[1], p[2]};
      } else {
        joints[names[j]] = nullptr;
      }
    }
    obj["joints"] = std::move(joints);
    out << obj.dump() << '\n';
  }
}

DenseSequence interpolate_missing(const RawSequence& seq) {
  if (seq.frames.empty()) throw DataError("cannot interpolate an empty sequence");
  const int j_count = seq.joint_count();
  const auto& names = joint_names_of(seq.kind);

  const std::int64_t first = seq.frames.front().index;
  const std::int64_t last = seq.frames.back().index;
  const std::int64_t t_count64 = last - first + 1;
  const int t_count = static_cast<int>(t_count64);

  DenseSequence dense;
  dense.kind = seq.kind;
  dense.frame_rate = seq.frame_rate;
  dense.frame_count = t_count;
  dense.positions.assign(static_cast<std::size_t>(t_count) * j_count * 3, 0.0);

  // Per joint and axis: collect observations on the dense grid, then fill
  // gaps linearly and hold the nearest value past the ends.
  std::vector<std::int64_t> obs_t;
  std::vector<double> obs_v;
  for (int j = 0; j < j_count; ++j) {
    for (int axis = 0; axis < 3; ++axis) {
      obs_t.clear();
      obs_v.clear();
      for (const auto& frame : seq.frames) {
        if (frame.joints[static_cast<std::size_t>(j)]) {
          obs_t.push_back(frame.index - first);
          obs_v.push_back((*frame.joints[static_cast<std::size_t>(j)])[static_cast<std::size_t>(axis)]);
        }
      }
      if (obs_t.size() < 2) throw UninterpolatableJointError(names[static_cast<std::size_t>(j)]);

      std::size_t seg = 0;  // invariant: obs_t[seg] <= t < obs_t[seg+1] once inside
      for (int t = 0; t < t_count; ++t) {
        double value;
        if (t <= obs_t.front()) {
          value = obs_v.front();
        } else if (t >= obs_t.back()) {
          value = obs_v.back();
        } else {
          while (obs_t[seg + 1] < t) ++seg;
          const double t0 = static_cast<double>(obs_t[seg]);
          const double t1 = static_cast<double>(obs_t[seg + 1]);
          const double w = (static_cast<double>(t) - t0) / (t1 - t0);
          value = obs_v[seg] + w * (obs_v[seg + 1] - obs_v[seg]);
        }
        dense.at(t, j, axis) = value;
      }
    }
  }
  return dense;
}

namespace {

void check_window(int window) {
  if (window < 1 || window % 2 == 0)
    throw ConfigError("filter window must be odd and >= 1, got " + std::to_string(window));
}

template <class Fn>
DenseSequence apply_windowed(const DenseSequence& seq, int window, Fn&& statistic) {
  check_window(window);
  const int half = (window - 1) / 2;
  const int t_count = seq.frame_count;
  const int j_count = seq.joint_count();

  DenseSequence out = seq;
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(window));
  for (int j = 0; j < j_count; ++j) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int t = 0; t < t_count; ++t) {
        const int lo = std::max(0, t - half);
        const int hi = std::min(t_count - 1, t + half);
        buf.clear();
        for (int s = lo; s <= hi; ++s) buf.push_back(seq.at(s, j, axis));
        out.at(t, j, axis) = statistic(buf);
      }
    }
  }
  return out;
}

}  // namespace

DenseSequence median_filter(const DenseSequence& seq, int window) {
  return apply_windowed(seq, window, [](std::vector<double>& buf) {
    // lower-middle element; for the odd full-size window this is the median,
    // truncated even-size boundary windows take the lower of the two middles
    const std::size_t k = (buf.size() - 1) / 2;
    std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k), buf.end());
    return buf[k];
  });
}

DenseSequence moving_average(const DenseSequence& seq, int window) {
  return apply_windowed(seq, window, [](const std::vector<double>& buf) {
    double sum = 0.0;
    for (double v : buf) sum += v;
    return sum / static_cast<double>(buf.size());
  });
}

DenseSequence prune_joints(const DenseSequence& seq, bool* warned) {
  if (warned) *warned = false;
  if (seq.kind == SkeletonKind::Pruned17) {
    if (warned) *warned = true;
    return seq;
  }

  DenseSequence out;
  out.kind = SkeletonKind::Pruned17;
  out.frame_rate = seq.frame_rate;
  out.frame_count = seq.frame_count;
  out.positions.assign(static_cast<std::size_t>(seq.frame_count) * kJointCount * 3, 0.0);

  // The kept joints occupy the first 17 capture slots in canonical order.
  for (int t = 0; t < seq.frame_count; ++t)
    for (int j = 0; j < kJointCount; ++j)
      for (int axis = 0; axis < 3; ++axis) out.at(t, j, axis) = seq.at(t, j, axis);
  return out;
}

CleanSequence segment(const DenseSequence& seq, int length) {
  if (length < 1) throw ConfigError("segment length must be >= 1");
  if (seq.kind != SkeletonKind::Pruned17)
    throw DataError("segment expects a pruned 17-joint sequence");
  if (seq.frame_count < length) throw TooShortError(seq.frame_count, length);

  CleanSequence clean;
  clean.frame_count = length;
  clean.joint_count = kJointCount;
  clean.frame_interval = 1.0 / seq.frame_rate;
  clean.positions.assign(seq.positions.begin(),
                         seq.positions.begin() +
                             static_cast<std::ptrdiff_t>(length) * kJointCount * 3);
  return clean;
}

CleanSequence clean_pipeline(const RawSequence& seq, const CleaningOptions& options) {
  DenseSequence dense = interpolate_missing(seq);
  dense = median_filter(dense, options.median_window);
  dense = moving_average(dense, options.average_window);
  dense = prune_joints(dense);
  return segment(dense, options.segment_length);
}

}  // namespace fimnet
