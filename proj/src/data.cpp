#include "fimnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "fimnet/errors.hpp"

namespace fimnet {

const std::vector<std::string>& known_actions() {
  static const std::vector<std::string> actions = {
      "Sit",    "Std",    "SitULE", "SitFR",  "StdFR", "SitDRR",
      "SitDLR", "StdDRR", "StdDLR", "Squat",  "Walk"};
  return actions;
}

namespace {
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}
}  // namespace

std::vector<ManifestRow> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);

  std::vector<ManifestRow> rows;
  std::string line;
  long line_no = 0;
  bool header_checked = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    for (auto& f : fields) f = trim(f);

    if (!header_checked) {
      header_checked = true;
      if (fields.size() >= 1 && fields[0] == "sequence_path") continue;  // header row
    }
    if (fields.size() != 5)
      throw ParseError("manifest row needs 5 columns, got " + std::to_string(fields.size()),
                       line_no);

    ManifestRow row;
    row.sequence_path = fields[0];
    row.subject_id = fields[1];
    row.action = fields[2];
    row.fim_item = fields[3];
    const auto& actions = known_actions();
    if (std::find(actions.begin(), actions.end(), row.action) == actions.end())
      throw ParseError("unknown action \"" + row.action + "\"", line_no);
    try {
      row.fim_score = std::stoi(fields[4]);
    } catch (...) {
      throw ParseError("fim_score is not an integer", line_no);
    }
    if (row.fim_score < 1 || row.fim_score > 7)
      throw ParseError("fim_score must be in 1..7", line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

Split stratified_split(const std::vector<int>& labels, double train_fraction,
                       std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train fraction must be in (0,1)");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [cls, idx] : by_class)
    if (idx.size() < 2)
      throw DataError("class " + std::to_string(cls) + " has fewer than 2 samples");

  Split split;
  Rng rng(derive_seed(seed, 0x73706c69ULL));
  for (const auto& [cls, idx] : by_class) {
    const double test_exact = (1.0 - train_fraction) * static_cast<double>(idx.size());
    const std::size_t test_count =
        static_cast<std::size_t>(std::floor(test_exact + 0.5));  // round half up
    auto picks = rng.sample_without_replacement(idx.size(), test_count);
    std::vector<bool> is_test(idx.size(), false);
    for (auto p : picks) is_test[p] = true;
    for (std::size_t k = 0; k < idx.size(); ++k)
      (is_test[k] ? split.test : split.train).push_back(idx[k]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

WeightedSampler::WeightedSampler(const std::vector<int>& labels, std::uint64_t seed)
    : rng_(derive_seed(seed, 0x73616d70ULL)) {
  if (labels.empty()) throw DataError("cannot sample from an empty training set");
  std::map<int, std::size_t> counts;
  for (int l : labels) counts[l] += 1;
  if (counts.size() < 2) throw DataError("training set has a single class");

  cdf_.resize(labels.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    acc += 1.0 / static_cast<double>(counts[labels[i]]);
    cdf_[i] = acc;
  }
  for (double& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

std::size_t WeightedSampler::next() {
  const double u = rng_.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<std::size_t>(std::distance(cdf_.begin(), it));
}

FeaturizedDataset featurize_manifest(const std::vector<ManifestRow>& rows,
                                     const std::string& manifest_dir,
                                     const SkeletonGraph& graph, const LabelSpec& label_spec,
                                     const CleaningOptions& cleaning, int threads) {
  FeaturizedDataset ds;
  ds.features.resize(rows.size());
  ds.labels.resize(rows.size());
  ds.ids.resize(rows.size());

  std::vector<std::string> errors(rows.size());
  auto worker = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < rows.size(); i += step) {
      try {
        std::filesystem::path p(rows[i].sequence_path);
        if (p.is_relative()) p = std::filesystem::path(manifest_dir) / p;
        RawSequence raw = parse_sequence_file(p.string());
        CleanSequence clean = clean_pipeline(raw, cleaning);
        FeatureTensor feats = assemble(clean, graph);
        ds.features[i] = feats.values.cast<float>();
        ds.labels[i] = label_spec.label_of(rows[i]);
        ds.ids[i] = rows[i].sequence_path;
      } catch (const std::exception& e) {
        errors[i] = rows[i].sequence_path + ": " + e.what();
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(rows.size())));
  if (n_threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int k = 0; k < n_threads; ++k)
      pool.emplace_back(worker, static_cast<std::size_t>(k), static_cast<std::size_t>(n_threads));
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw DataError(e);
  return ds;
}

FeaturizedDataset select(const FeaturizedDataset& all, const std::vector<std::size_t>& idx) {
  FeaturizedDataset out;
  out.features.reserve(idx.size());
  out.labels.reserve(idx.size());
  out.ids.reserve(idx.size());
  for (auto i : idx) {
    out.features.push_back(all.features[i]);
    out.labels.push_back(all.labels[i]);
    out.ids.push_back(all.ids[i]);
  }
  return out;
}

}  // namespace fimnet
