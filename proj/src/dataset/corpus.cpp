#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

#include "ssed/dataset.hpp"
#include "ssed/error.hpp"
#include "tsv.hpp"

namespace ssed::data {

EventVocabulary::EventVocabulary(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) fail(Errc::invalid_argument, "empty event label in vocabulary");
    if (!seen.insert(l).second) fail(Errc::invalid_argument, "duplicate event label '" + l + "' in vocabulary");
  }
}

std::optional<std::size_t> EventVocabulary::index(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

namespace detail {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::string strip(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(const std::string& text) {
  std::string s = strip(text);
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  return v;
}

std::vector<Line> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  std::vector<Line> lines;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (strip(text).empty() || text[0] == '#') continue;
    lines.push_back({number, text});
  }
  return lines;
}

}  // namespace detail

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::vector<EventAnnotation> load_annotations(const std::filesystem::path& path,
                                              const EventVocabulary* explicit_vocab) {
  std::vector<EventAnnotation> out;
  for (const auto& [number, text] : detail::read_lines(path)) {
    auto fields = detail::split_tabs(text);
    if (fields.size() != 3) {
      fail(Errc::malformed_row, where(path, number) + ": expected onset<TAB>offset<TAB>label, got " +
                                    std::to_string(fields.size()) + " field(s)");
    }
    auto onset = detail::parse_double(fields[0]);
    auto offset = detail::parse_double(fields[1]);
    const std::string label = detail::strip(fields[2]);
    if (!onset || !offset || label.empty()) {
      fail(Errc::malformed_row, where(path, number) + ": cannot parse row '" + text + "'");
    }
    if (*onset < 0.0 || *offset <= *onset) {
      fail(Errc::invalid_interval,
           where(path, number) + ": offset " + detail::strip(fields[1]) + " must exceed onset " +
               detail::strip(fields[0]) + " (and onset must be non-negative)");
    }
    if (explicit_vocab && !explicit_vocab->index(label)) {
      fail(Errc::unknown_label, where(path, number) + ": label '" + label + "' is not in the vocabulary");
    }
    out.push_back({*onset, *offset, label});
  }
  return out;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& meta_path, const std::filesystem::path& annotations_dir,
                   const std::optional<std::vector<std::string>>& vocabulary) {
  Corpus corpus;
  std::optional<EventVocabulary> explicit_vocab;
  if (vocabulary) explicit_vocab.emplace(*vocabulary);

  const auto base = meta_path.parent_path();
  std::map<std::string, std::size_t> first_line;
  bool first = true;
  for (const auto& [number, text] : detail::read_lines(meta_path)) {
    auto fields = detail::split_tabs(text);
    for (auto& f : fields) f = detail::strip(f);
    if (first && !fields.empty() && fields[0] == "clip_id") {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != 3 || fields[0].empty() || fields[2].empty()) {
      fail(Errc::malformed_row,
           where(meta_path, number) + ": expected clip_id<TAB>path<TAB>scene_label with non-empty id and scene");
    }
    auto [it, inserted] = first_line.emplace(fields[0], number);
    if (!inserted) {
      fail(Errc::duplicate_clip, where(meta_path, number) + ": clip_id '" + fields[0] +
                                     "' already defined on line " + std::to_string(it->second));
    }
    ClipRecord rec;
    rec.clip_id = fields[0];
    std::filesystem::path source = fields[1];
    rec.source = source.empty() || source.is_absolute() ? source : base / source;
    rec.scene_label = fields[2];

    const auto ann = annotations_dir / (rec.clip_id + ".ann");
    if (!std::filesystem::exists(ann)) {
      fail(Errc::missing_annotations, where(meta_path, number) + ": no annotation file " + ann.string());
    }
    rec.annotations = load_annotations(ann, explicit_vocab ? &*explicit_vocab : nullptr);
    corpus.clips.push_back(std::move(rec));
  }
  std::sort(corpus.clips.begin(), corpus.clips.end(),
            [](const ClipRecord& a, const ClipRecord& b) { return a.clip_id < b.clip_id; });

  if (explicit_vocab) {
    corpus.vocabulary = std::move(*explicit_vocab);
  } else {
    std::set<std::string> labels;
    for (const auto& c : corpus.clips)
      for (const auto& a : c.annotations) labels.insert(a.label);
    corpus.vocabulary = EventVocabulary({labels.begin(), labels.end()});
  }
  return corpus;
}

Corpus load_corpus_dir(const std::filesystem::path& dir) {
  std::optional<std::vector<std::string>> vocab;
  const auto vocab_path = dir / "vocab.txt";
  if (std::filesystem::exists(vocab_path)) {
    vocab.emplace();
    for (const auto& line : detail::read_lines(vocab_path)) vocab->push_back(detail::strip(line.text));
  }
  return load_corpus(dir / "meta.tsv", dir / "annotations", vocab);
}

void write_vocabulary(const std::filesystem::path& path, const EventVocabulary& vocab) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path.string());
  for (const auto& l : vocab.labels()) out << l << '\n';
}

}  // namespace ssed::data
