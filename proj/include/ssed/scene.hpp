#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ssed::scene {

// Trim surrounding whitespace and lowercase (ASCII).
std::string normalize_label(std::string_view label);

/// Scene label -> fixed-dimension semantic vector, loaded from a TSV file:
///
///   dim<TAB>E
///   #source<TAB>bert          (optional)
///   <label><TAB>f1<TAB>...<TAB>fE
///
/// Labels are stored and compared in normalized form.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0, std::string source = {});

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  const std::string& source() const { return source_; }
  std::vector<std::string> labels() const;  // normalized, sorted
  bool contains(std::string_view label) const;

  void add(std::string_view label, std::vector<double> vector);
  // Throws absent_label naming the nearest stored labels.
  const std::vector<double>& lookup(std::string_view label) const;

  bool operator==(const EmbeddingTable&) const = default;

 private:
  std::size_t dim_;
  std::string source_;
  std::map<std::string, std::vector<double>> entries_;
};

EmbeddingTable load_table(const std::filesystem::path& path);
// 17 significant digits, so load_table(write_table(t)) == t.
void write_table(const std::filesystem::path& path, const EmbeddingTable& table);

std::size_t edit_distance(std::string_view a, std::string_view b);
std::vector<std::string> nearest_labels(const EmbeddingTable& table, std::string_view label, std::size_t k = 3);

/// Stand-in for language-model output: one N(0,1) vector per label, keyed
/// by (seed, label) so adding labels leaves existing rows unchanged.
EmbeddingTable make_fixture_table(const std::vector<std::string>& labels, std::size_t dim, std::uint64_t seed);

// Scene labels from the fixture commonly used in tests and experiments:
// the two synthetic-corpus scenes plus unseen ones.
std::vector<std::string> default_fixture_labels();

class OneHotCodebook {
 public:
  OneHotCodebook() = default;
  // Labels are normalized; duplicates after normalization are rejected.
  explicit OneHotCodebook(const std::vector<std::string>& labels);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::size_t> index(std::string_view label) const;
  // Throws unseen_scene for labels outside the codebook.
  std::vector<double> encode(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
};

enum class SceneMode { none, onehot, embedding };

struct SceneRepresentation {
  SceneMode mode = SceneMode::none;
  std::vector<double> vector;  // empty for none
};

}  // namespace ssed::scene
