#include <algorithm>

#include "ssed/error.hpp"
#include "ssed/scene.hpp"

namespace ssed::scene {

OneHotCodebook::OneHotCodebook(const std::vector<std::string>& labels) {
  for (const auto& l : labels) {
    auto key = normalize_label(l);
    if (key.empty()) fail(Errc::invalid_argument, "empty scene label in one-hot codebook");
    if (std::find(labels_.begin(), labels_.end(), key) != labels_.end()) {
      fail(Errc::invalid_argument, "duplicate scene label '" + key + "' in one-hot codebook");
    }
    labels_.push_back(std::move(key));
  }
}

std::optional<std::size_t> OneHotCodebook::index(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), normalize_label(label));
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<double> OneHotCodebook::encode(std::string_view label) const {
  auto i = index(label);
  if (!i) {
    fail(Errc::unseen_scene, "scene '" + normalize_label(label) +
                                 "' was not among the training scenes; one-hot mode cannot encode unseen scenes");
  }
  std::vector<double> v(labels_.size(), 0.0);
  v[*i] = 1.0;
  return v;
}

}  // namespace ssed::scene
