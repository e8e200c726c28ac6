#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ssed::eval {

struct ClassCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

// Segment = one frame. Counts add up across clips.
struct SegmentCounts {
  std::vector<ClassCounts> classes;

  explicit SegmentCounts(std::size_t n_events = 0) : classes(n_events) {}
  // ref and pred are N x T, row-major by class, entries 0/1.
  void accumulate(std::span<const std::uint8_t> ref, std::span<const std::uint8_t> pred, std::size_t frames);
  void merge(const SegmentCounts& other);
  friend bool operator==(const SegmentCounts&, const SegmentCounts&) = default;
};

SegmentCounts segment_counts(std::span<const std::uint8_t> ref, std::span<const std::uint8_t> pred,
                             std::size_t n_events, std::size_t frames);

// 2TP / (2TP + FP + FN) over pooled counts; 0 when the denominator is 0.
double micro_f(const SegmentCounts& counts);
// Mean per-class F, a class with no reference or predicted activity scoring 0.
double macro_f(const SegmentCounts& counts);

struct ClassScore {
  std::string label;
  ClassCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

struct ScoreReport {
  double micro_f = 0.0;
  double macro_f = 0.0;
  std::vector<ClassScore> classes;
};

ScoreReport score_report(const SegmentCounts& counts, const std::vector<std::string>& labels);
nlohmann::json to_json(const ScoreReport& report);

struct PcaResult {
  std::vector<std::array<double, 2>> points;
  std::array<double, 2> explained{};          // variance fractions of pc1, pc2
  std::array<std::vector<double>, 2> axes;    // unit principal directions
  std::vector<double> mean;
};

/// Projects mean-centred vectors onto the top two eigenvectors of their
/// sample covariance. Each axis is signed so its first nonzero coordinate is
/// positive. Needs >= 3 vectors of equal dimension >= 2.
PcaResult pca_2d(const std::vector<std::vector<double>>& vectors);

std::vector<std::vector<double>> pairwise_distances(const std::vector<std::vector<double>>& points);

struct PlotPoint {
  std::string label;
  std::string group;  // e.g. "scene" or "clip"
  double x = 0.0;
  double y = 0.0;
};

// label,group,pc1,pc2 with fixed formatting.
std::string plot_csv(const std::vector<PlotPoint>& points);
// Self-contained scatter plot; byte-identical for identical input.
std::string plot_svg(const std::vector<PlotPoint>& points, const std::string& title);
std::string distance_tsv(const std::vector<std::string>& labels, const std::vector<std::vector<double>>& d);

}  // namespace ssed::eval
