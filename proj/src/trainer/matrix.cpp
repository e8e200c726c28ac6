#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "ssed/error.hpp"
#include "ssed/trainer.hpp"

namespace ssed::trainer {

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

namespace {

ExperimentConfig variant_config(const ExperimentConfig& base, const Variant& v, std::size_t k) {
  auto c = base;
  c.representation = v.representation;
  c.fusion = v.fusion;
  c.seed = base.seed + k;
  c.output_dir = base.output_dir / v.name / ("seed_" + std::to_string(c.seed));
  return c;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::vector<MatrixRow> run_matrix(const ExperimentConfig& base, const std::vector<Variant>& variants,
                                  std::size_t seeds) {
  if (variants.empty()) fail(Errc::config_error, "matrix needs at least one variant");
  if (seeds == 0) fail(Errc::config_error, "matrix needs at least one seed");
  for (const auto& v : variants) variant_config(base, v, 0).validate();

  struct Task {
    std::size_t variant, seed;
  };
  std::vector<Task> tasks;
  for (std::size_t v = 0; v < variants.size(); ++v)
    for (std::size_t k = 0; k < seeds; ++k) tasks.push_back({v, k});

  std::vector<MatrixRow> rows(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    rows[v].variant = variants[v];
    rows[v].micro_f.assign(seeds, 0.0);
    rows[v].macro_f.assign(seeds, 0.0);
  }

  // Each run owns its network, optimizer and output directory; workers only
  // share the task counter and distinct result slots.
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        const auto& t = tasks[i];
        auto result = train(variant_config(base, variants[t.variant], t.seed));
        rows[t.variant].micro_f[t.seed] = result.eval_report.micro_f;
        rows[t.variant].macro_f[t.seed] = result.eval_report.macro_f;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next = tasks.size();
      }
    }
  };
  const std::size_t n_threads = std::min(base.jobs, tasks.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (auto& row : rows) {
    std::tie(row.micro_mean, row.micro_std) = mean_std(row.micro_f);
    std::tie(row.macro_mean, row.macro_std) = mean_std(row.macro_f);
  }
  write_file_atomic(base.output_dir / "matrix.tsv", matrix_tsv(rows));
  return rows;
}

std::string matrix_tsv(const std::vector<MatrixRow>& rows) {
  std::string out = "method\tscene_representation\tfed_to_sed\tseeds\tmicro_f_mean\tmicro_f_std\tmacro_f_mean\tmacro_f_std\n";
  for (const auto& r : rows) {
    std::string rep = r.variant.representation.mode == scene::SceneMode::embedding
                          ? "table:" + r.variant.representation.table.filename().string()
                          : r.variant.representation.str();
    out += r.variant.name + "\t" + rep + "\t" + model::fusion_name(r.variant.fusion) + "\t" +
           std::to_string(r.micro_f.size()) + "\t" + fixed(100.0 * r.micro_mean) + "\t" + fixed(100.0 * r.micro_std) +
           "\t" + fixed(100.0 * r.macro_mean) + "\t" + fixed(100.0 * r.macro_std) + "\n";
  }
  return out;
}

}  // namespace ssed::trainer
