#pragma once

#include <string>
#include <vector>

#include "ssed/dataset.hpp"
#include "ssed/tensor.hpp"
#include "ssed/trainer.hpp"

namespace ssed::trainer::detail {

Tensor targets_tensor(const data::FrameTargets& targets);

// Loads features for `corpus` and checks they match the network's extents.
std::vector<data::Example> load_examples(const data::Corpus& corpus, const audio::FrontendOptions& options,
                                         const model::NetworkConfig& net);

data::Corpus load_corpus_with_vocabulary(const std::filesystem::path& dir, const data::EventVocabulary& vocab);

// Clips of `corpus` belonging to `selection` under the hash split.
data::Corpus select_clips(const data::Corpus& corpus, ClipSelection selection);

std::string scene_mode_name(scene::SceneMode mode);

}  // namespace ssed::trainer::detail
