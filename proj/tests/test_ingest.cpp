#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "fimnet/errors.hpp"
#include "fimnet/ingest.hpp"
#include "fimnet/rng.hpp"

using namespace fimnet;

namespace {

RawSequence parse(const std::string& text) {
  std::istringstream in(text);
  return parse_sequence(in);
}

// Dense single-joint series for filter tests.
DenseSequence series(const std::vector<double>& values) {
  DenseSequence seq;
  seq.kind = SkeletonKind::Pruned17;
  seq.frame_count = static_cast<int>(values.size());
  seq.positions.assign(static_cast<std::size_t>(seq.frame_count) * kJointCount * 3, 0.0);
  for (int t = 0; t < seq.frame_count; ++t)
    seq.at(t, 0, 0) = values[static_cast<std::size_t>(t)];
  return seq;
}

std::vector<double> axis0(const DenseSequence& seq) {
  std::vector<double> out;
  for (int t = 0; t < seq.frame_count; ++t) out.push_back(seq.at(t, 0, 0));
  return out;
}

// Brute-force window statistic; sorts a full copy rather than partitioning.
std::vector<double> window_oracle(const std::vector<double>& values, int window, bool median) {
  const int half = (window - 1) / 2;
  const int n = static_cast<int>(values.size());
  std::vector<double> out(values.size());
  for (int t = 0; t < n; ++t) {
    std::vector<double> buf;
    for (int s = std::max(0, t - half); s <= std::min(n - 1, t + half); ++s)
      buf.push_back(values[static_cast<std::size_t>(s)]);
    if (median) {
      std::sort(buf.begin(), buf.end());
      out[static_cast<std::size_t>(t)] = buf[(buf.size() - 1) / 2];
    } else {
      double sum = 0.0;
      for (double v : buf) sum += v;
      out[static_cast<std::size_t>(t)] = sum / static_cast<double>(buf.size());
    }
  }
  return out;
}

}  // namespace

TEST_CASE("parse keeps well-formed frames and sorts by index") {
  RawSequence seq = parse(
      R"({"t": 5, "joints": {"SpineMid": [1,2,3]}})"
      "\n"
      R"({"t": 3, "joints": {"SpineMid": [4,5,6]}})"
      "\n");
  REQUIRE(seq.frames.size() == 2);
  CHECK(seq.frames[0].index == 3);
  CHECK(seq.frames[1].index == 5);
  CHECK(seq.kind == SkeletonKind::Pruned17);  // no extremity joints seen
  auto& p = seq.frames[0].joints[static_cast<int>(JointId::SpineMid)];
  REQUIRE(p.has_value());
  CHECK((*p)[0] == 4.0);
}

TEST_CASE("parse rejects unknown joints, duplicates and malformed lines") {
  CHECK_THROWS_AS(parse(R"({"t": 0, "joints": {"Nose": [0,0,0]}})"), UnknownJointError);
  CHECK_THROWS_AS(parse("{\"t\": 0}\n{\"t\": 0}\n"), DuplicateFrameError);
  try {
    parse("{\"t\": 0}\nnot json at all\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("parse honors the header line") {
  RawSequence seq = parse(
      R"({"frame_rate": 25, "skeleton": "kinect25"})"
      "\n"
      R"({"t": 0, "joints": {"HandLeft": [0,0,0]}})"
      "\n");
  CHECK(seq.frame_rate == 25.0);
  CHECK(seq.kind == SkeletonKind::Kinect25);

  // a hand joint in a declared pruned17 file is unknown
  CHECK_THROWS_AS(parse(R"({"skeleton": "pruned17"})"
                        "\n"
                        R"({"t": 0, "joints": {"HandLeft": [0,0,0]}})"),
                  UnknownJointError);
}

TEST_CASE("parse infers the capture skeleton from extremity joints") {
  RawSequence seq = parse(R"({"t": 0, "joints": {"ThumbRight": [0,0,0]}})");
  CHECK(seq.kind == SkeletonKind::Kinect25);
  CHECK(seq.joint_count() == 25);
}

TEST_CASE("interpolation fills interior gaps linearly") {
  RawSequence seq;
  seq.kind = SkeletonKind::Pruned17;
  for (int t : {0, 2}) {
    RawFrame f;
    f.index = t;
    f.joints.assign(kJointCount, Vec3{0, 0, 0});
    const double v = static_cast<double>(t);
    f.joints[0] = Vec3{v, v, v};
    seq.frames.push_back(std::move(f));
  }
  DenseSequence dense = interpolate_missing(seq);
  REQUIRE(dense.frame_count == 3);
  for (int axis = 0; axis < 3; ++axis) CHECK(dense.at(1, 0, axis) == doctest::Approx(1.0));
}

TEST_CASE("interpolation is the identity on gap-free input") {
  RawSequence seq;
  seq.kind = SkeletonKind::Pruned17;
  Rng rng(5);
  for (int t = 0; t < 6; ++t) {
    RawFrame f;
    f.index = t;
    for (int j = 0; j < kJointCount; ++j)
      f.joints.push_back(Vec3{rng.uniform(), rng.uniform(), rng.uniform()});
    seq.frames.push_back(std::move(f));
  }
  DenseSequence dense = interpolate_missing(seq);
  for (int t = 0; t < 6; ++t)
    for (int j = 0; j < kJointCount; ++j)
      for (int axis = 0; axis < 3; ++axis)
        CHECK(dense.at(t, j, axis) ==
              (*seq.frames[static_cast<std::size_t>(t)].joints[static_cast<std::size_t>(j)])
                  [static_cast<std::size_t>(axis)]);
}

TEST_CASE("interpolation holds the last observation over trailing gaps") {
  // joint 1 observed only at frames 0 and 1 with value (1,0,0) at frame 1;
  // frames 2..4 exist because joint 0 is observed there
  RawSequence seq;
  seq.kind = SkeletonKind::Pruned17;
  for (int t = 0; t < 5; ++t) {
    RawFrame f;
    f.index = t;
    f.joints.assign(kJointCount, std::nullopt);
    f.joints[0] = Vec3{0, 0, 0};
    if (t == 0) f.joints[1] = Vec3{0.5, 0, 0};
    if (t == 1) f.joints[1] = Vec3{1, 0, 0};
    for (int j = 2; j < kJointCount; ++j) f.joints[static_cast<std::size_t>(j)] = Vec3{0, 0, 0};
    seq.frames.push_back(std::move(f));
  }
  DenseSequence dense = interpolate_missing(seq);

  for (int t = 2; t < 5; ++t) CHECK(dense.at(t, 1, 0) == 1.0);

  // brute-force re-interpolation oracle over the observed pairs
  for (int t = 0; t < 5; ++t) {
    double expect;
    if (t <= 0) expect = 0.5;
    else if (t >= 1) expect = 1.0;
    CHECK(dense.at(t, 1, 0) == doctest::Approx(expect));
  }
}

TEST_CASE("interpolation preserves every observed value exactly") {
  RawSequence seq;
  seq.kind = SkeletonKind::Pruned17;
  Rng rng(11);
  std::vector<std::pair<int, Vec3>> observed;
  for (int t = 0; t < 12; ++t) {
    RawFrame f;
    f.index = t;
    for (int j = 0; j < kJointCount; ++j) {
      // drop ~30% of observations but keep the books for the rest
      if (rng.uniform() < 0.3 && t > 0 && t < 11) {
        f.joints.push_back(std::nullopt);
      } else {
        Vec3 p{rng.uniform(), rng.uniform(), rng.uniform()};
        f.joints.push_back(p);
        if (j == 3) observed.emplace_back(t, p);
      }
    }
    seq.frames.push_back(std::move(f));
  }
  DenseSequence dense = interpolate_missing(seq);
  for (const auto& [t, p] : observed)
    for (int axis = 0; axis < 3; ++axis)
      CHECK(dense.at(t, 3, axis) == p[static_cast<std::size_t>(axis)]);
}

TEST_CASE("interpolation rejects joints observed fewer than twice") {
  RawSequence seq;
  seq.kind = SkeletonKind::Pruned17;
  for (int t = 0; t < 3; ++t) {
    RawFrame f;
    f.index = t;
    f.joints.assign(kJointCount, Vec3{0, 0, 0});
    if (t > 0) f.joints[4] = std::nullopt;  // Head observed once
    seq.frames.push_back(std::move(f));
  }
  CHECK_THROWS_AS(interpolate_missing(seq), UninterpolatableJointError);
}

TEST_CASE("median filter matches the frozen example") {
  DenseSequence seq = series({1, 9, 1, 1, 1});
  CHECK(axis0(median_filter(seq, 3)) == std::vector<double>{1, 1, 1, 1, 1});
}

TEST_CASE("filters leave constants unchanged and window 1 is the identity") {
  DenseSequence seq = series({2.5, 2.5, 2.5, 2.5});
  CHECK(axis0(median_filter(seq, 3)) == std::vector<double>{2.5, 2.5, 2.5, 2.5});
  CHECK(axis0(moving_average(seq, 3)) == std::vector<double>{2.5, 2.5, 2.5, 2.5});

  DenseSequence varied = series({1, 4, -2, 7});
  CHECK(axis0(median_filter(varied, 1)) == axis0(varied));
  CHECK(axis0(moving_average(varied, 1)) == axis0(varied));
}

TEST_CASE("moving average matches the frozen boundary-truncated example") {
  DenseSequence seq = series({0, 3, 6});
  auto out = axis0(moving_average(seq, 3));
  CHECK(out[0] == doctest::Approx(1.5));
  CHECK(out[1] == doctest::Approx(3.0));
  CHECK(out[2] == doctest::Approx(4.5));
}

TEST_CASE("filters reject even or non-positive windows") {
  DenseSequence seq = series({1, 2, 3});
  CHECK_THROWS_AS(median_filter(seq, 2), ConfigError);
  CHECK_THROWS_AS(median_filter(seq, 0), ConfigError);
  CHECK_THROWS_AS(moving_average(seq, 4), ConfigError);
}

TEST_CASE("filters match the brute-force oracle on random series") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int t_count = 2 + static_cast<int>(rng.uniform_int(63));
    std::vector<double> values;
    for (int t = 0; t < t_count; ++t) values.push_back(rng.uniform(-10.0, 10.0));
    const int window = 1 + 2 * static_cast<int>(rng.uniform_int(8));  // 1..15 odd

    DenseSequence seq = series(values);
    auto med = axis0(median_filter(seq, window));
    auto avg = axis0(moving_average(seq, window));
    auto med_expect = window_oracle(values, window, true);
    auto avg_expect = window_oracle(values, window, false);
    for (int t = 0; t < t_count; ++t) {
      CHECK(med[static_cast<std::size_t>(t)] == med_expect[static_cast<std::size_t>(t)]);
      CHECK(avg[static_cast<std::size_t>(t)] ==
            doctest::Approx(avg_expect[static_cast<std::size_t>(t)]).epsilon(1e-6));
    }
  }
}

TEST_CASE("pruning drops the eight extremity joints and keeps the rest") {
  DenseSequence seq;
  seq.kind = SkeletonKind::Kinect25;
  seq.frame_count = 2;
  seq.positions.resize(2 * kCaptureJointCount * 3);
  Rng rng(23);
  for (double& v : seq.positions) v = rng.uniform();

  DenseSequence pruned = prune_joints(seq);
  CHECK(pruned.joint_count() == 17);
  CHECK(kCaptureJointCount - 8 == 17);
  const int spine_mid = static_cast<int>(JointId::SpineMid);
  for (int t = 0; t < 2; ++t)
    for (int axis = 0; axis < 3; ++axis)
      CHECK(pruned.at(t, spine_mid, axis) == seq.at(t, spine_mid, axis));
}

TEST_CASE("pruning a 17-joint sequence is a warned no-op") {
  DenseSequence seq = series({1, 2, 3});
  bool warned = false;
  DenseSequence out = prune_joints(seq, &warned);
  CHECK(warned);
  CHECK(out.positions == seq.positions);
}

TEST_CASE("segmentation keeps the first frames and rejects short input") {
  DenseSequence seq;
  seq.kind = SkeletonKind::Pruned17;
  seq.frame_count = 200;
  seq.positions.resize(static_cast<std::size_t>(200) * kJointCount * 3);
  for (std::size_t i = 0; i < seq.positions.size(); ++i)
    seq.positions[i] = static_cast<double>(i);

  CleanSequence clean = segment(seq, 150);
  CHECK(clean.frame_count == 150);
  CHECK(clean.at(149, kJointCount - 1, 2) == seq.at(149, kJointCount - 1, 2));

  seq.frame_count = 149;
  seq.positions.resize(static_cast<std::size_t>(149) * kJointCount * 3);
  CHECK_THROWS_AS(segment(seq, 150), TooShortError);

  seq.frame_count = 150;
  seq.positions.resize(static_cast<std::size_t>(150) * kJointCount * 3);
  CleanSequence exact = segment(seq, 150);
  CHECK(exact.frame_count == 150);
}

TEST_CASE("cleaning pipeline is deterministic") {
  RawSequence seq;
  seq.kind = SkeletonKind::Pruned17;
  Rng rng(29);
  for (int t = 0; t < 170; ++t) {
    RawFrame f;
    f.index = t;
    for (int j = 0; j < kJointCount; ++j)
      f.joints.push_back(Vec3{rng.uniform(), rng.uniform(), rng.uniform()});
    seq.frames.push_back(std::move(f));
  }
  CleanSequence a = clean_pipeline(seq);
  CleanSequence b = clean_pipeline(seq);
  CHECK(a.positions == b.positions);
  CHECK(a.frame_count == 150);
}
