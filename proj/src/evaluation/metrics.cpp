#include "ssed/error.hpp"
#include "ssed/evaluation.hpp"

namespace ssed::eval {

namespace {

double f_score(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  const auto denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void SegmentCounts::accumulate(std::span<const std::uint8_t> ref, std::span<const std::uint8_t> pred,
                               std::size_t frames) {
  if (ref.size() != pred.size() || ref.size() != classes.size() * frames) {
    fail(Errc::shape_mismatch, "segment_counts: ref has " + std::to_string(ref.size()) + " cells, pred " +
                                   std::to_string(pred.size()) + ", expected " +
                                   std::to_string(classes.size()) + " x " + std::to_string(frames));
  }
  for (std::size_t n = 0; n < classes.size(); ++n) {
    auto& c = classes[n];
    for (std::size_t t = 0; t < frames; ++t) {
      const bool r = ref[n * frames + t] != 0;
      const bool p = pred[n * frames + t] != 0;
      c.tp += r && p;
      c.fp += !r && p;
      c.fn += r && !p;
    }
  }
}

void SegmentCounts::merge(const SegmentCounts& other) {
  if (other.classes.size() != classes.size()) fail(Errc::shape_mismatch, "segment_counts: class count differs");
  for (std::size_t n = 0; n < classes.size(); ++n) {
    classes[n].tp += other.classes[n].tp;
    classes[n].fp += other.classes[n].fp;
    classes[n].fn += other.classes[n].fn;
  }
}

SegmentCounts segment_counts(std::span<const std::uint8_t> ref, std::span<const std::uint8_t> pred,
                             std::size_t n_events, std::size_t frames) {
  SegmentCounts c(n_events);
  c.accumulate(ref, pred, frames);
  return c;
}

double micro_f(const SegmentCounts& counts) {
  ClassCounts total;
  for (const auto& c : counts.classes) {
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
  }
  return f_score(total.tp, total.fp, total.fn);
}

double macro_f(const SegmentCounts& counts) {
  if (counts.classes.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : counts.classes) sum += f_score(c.tp, c.fp, c.fn);
  return sum / static_cast<double>(counts.classes.size());
}

ScoreReport score_report(const SegmentCounts& counts, const std::vector<std::string>& labels) {
  if (labels.size() != counts.classes.size()) {
    fail(Errc::shape_mismatch, "score_report: " + std::to_string(labels.size()) + " labels for " +
                                   std::to_string(counts.classes.size()) + " classes");
  }
  ScoreReport r;
  r.micro_f = micro_f(counts);
  r.macro_f = macro_f(counts);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const auto& c = counts.classes[n];
    r.classes.push_back({labels[n], c, ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn), f_score(c.tp, c.fp, c.fn)});
  }
  return r;
}

nlohmann::json to_json(const ScoreReport& report) {
  auto classes = nlohmann::json::array();
  for (const auto& c : report.classes) {
    classes.push_back({{"label", c.label},
                       {"tp", c.counts.tp},
                       {"fp", c.counts.fp},
                       {"fn", c.counts.fn},
                       {"precision", c.precision},
                       {"recall", c.recall},
                       {"f", c.f}});
  }
  return {{"micro_f", report.micro_f}, {"macro_f", report.macro_f}, {"classes", classes}};
}

}  // namespace ssed::eval
