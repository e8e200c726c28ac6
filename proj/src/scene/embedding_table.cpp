#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ssed/error.hpp"
#include "ssed/rng.hpp"
#include "ssed/scene.hpp"

namespace ssed::scene {

std::string normalize_label(std::string_view label) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!label.empty() && is_space(static_cast<unsigned char>(label.front()))) label.remove_prefix(1);
  while (!label.empty() && is_space(static_cast<unsigned char>(label.back()))) label.remove_suffix(1);
  std::string out(label);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

EmbeddingTable::EmbeddingTable(std::size_t dim, std::string source) : dim_(dim), source_(std::move(source)) {}

std::vector<std::string> EmbeddingTable::labels() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

bool EmbeddingTable::contains(std::string_view label) const {
  return entries_.count(normalize_label(label)) > 0;
}

void EmbeddingTable::add(std::string_view label, std::vector<double> vector) {
  auto key = normalize_label(label);
  if (key.empty()) fail(Errc::invalid_argument, "empty scene label");
  if (vector.size() != dim_) {
    fail(Errc::table_field_count, "vector for '" + key + "' has " + std::to_string(vector.size()) +
                                      " components, table dim is " + std::to_string(dim_));
  }
  if (!entries_.emplace(key, std::move(vector)).second) {
    fail(Errc::table_duplicate_label, "duplicate label '" + key + "'");
  }
}

const std::vector<double>& EmbeddingTable::lookup(std::string_view label) const {
  auto key = normalize_label(label);
  auto it = entries_.find(key);
  if (it != entries_.end()) return it->second;
  std::string hint;
  for (const auto& n : nearest_labels(*this, key)) hint += (hint.empty() ? "" : ", ") + ("'" + n + "'");
  fail(Errc::absent_label,
       "scene label '" + key + "' is not in the embedding table" + (hint.empty() ? "" : "; nearest: " + hint));
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::string> nearest_labels(const EmbeddingTable& table, std::string_view label, std::size_t k) {
  auto labels = table.labels();
  const auto key = normalize_label(label);
  std::stable_sort(labels.begin(), labels.end(), [&](const std::string& a, const std::string& b) {
    return edit_distance(key, a) < edit_distance(key, b);
  });
  if (labels.size() > k) labels.resize(k);
  return labels;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

// strtod follows the C locale, which stays in effect since nothing here
// calls setlocale; '.' is the decimal separator.
std::optional<double> parse_number(const std::string& s) {
  if (s.empty() || std::isspace(static_cast<unsigned char>(s.front()))) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

EmbeddingTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  const std::string where = path.string() + ":";
  std::string line;
  std::size_t number = 0;

  std::optional<EmbeddingTable> table;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!table) {
      auto f = split_tabs(line);
      std::size_t dim = 0;
      if (f.size() == 2 && f[0] == "dim" && !f[1].empty() &&
          std::all_of(f[1].begin(), f[1].end(), [](unsigned char c) { return std::isdigit(c); })) {
        dim = std::stoul(f[1]);
      }
      if (dim == 0) fail(Errc::table_malformed_header, where + "1: expected header 'dim<TAB><E>' with E >= 1");
      table.emplace(dim);
      continue;
    }
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f[0] == "#source") {
      if (f.size() != 2) fail(Errc::table_field_count, where + std::to_string(number) + ": malformed #source line");
      if (number != 2 || table->size() != 0) {
        fail(Errc::table_malformed_header, where + std::to_string(number) + ": #source must follow the header");
      }
      *table = EmbeddingTable(table->dim(), f[1]);
      continue;
    }
    if (f.size() != table->dim() + 1) {
      fail(Errc::table_field_count, where + std::to_string(number) + ": expected label plus " +
                                        std::to_string(table->dim()) + " values, got " +
                                        std::to_string(f.size() - 1));
    }
    std::vector<double> v(table->dim());
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto x = parse_number(f[i + 1]);
      if (!x) {
        fail(Errc::table_non_numeric, where + std::to_string(number) + ": field " + std::to_string(i + 2) +
                                          " '" + f[i + 1] + "' is not a number");
      }
      v[i] = *x;
    }
    if (table->contains(f[0])) {
      fail(Errc::table_duplicate_label,
           where + std::to_string(number) + ": duplicate label '" + normalize_label(f[0]) + "'");
    }
    try {
      table->add(f[0], std::move(v));
    } catch (const Error& e) {
      fail(e.code(), where + std::to_string(number) + ": " + e.what());
    }
  }
  if (!table) fail(Errc::table_malformed_header, where + "1: empty file, expected header 'dim<TAB><E>'");
  return std::move(*table);
}

void write_table(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ostringstream out;
  out << "dim\t" << table.dim() << '\n';
  if (!table.source().empty()) out << "#source\t" << table.source() << '\n';
  char buf[40];
  for (const auto& label : table.labels()) {
    out << label;
    for (double v : table.lookup(label)) {
      std::snprintf(buf, sizeof buf, "\t%.17g", v);
      out << buf;
    }
    out << '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) fail(Errc::io_error, "cannot write " + path.string());
  file << out.str();
}

EmbeddingTable make_fixture_table(const std::vector<std::string>& labels, std::size_t dim, std::uint64_t seed) {
  EmbeddingTable table(dim, "fixture");
  for (const auto& label : labels) {
    Rng rng(derive_seed(seed, fnv1a(normalize_label(label))));
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    table.add(label, std::move(v));
  }
  return table;
}

std::vector<std::string> default_fixture_labels() {
  return {"home", "office", "residential area", "city center", "downtown", "apartment"};
}

}  // namespace ssed::scene
