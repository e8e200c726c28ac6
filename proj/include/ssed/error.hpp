#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssed {

// Every failure raised by the library carries one of these codes so callers
// (and the CLI's single-line error output) can distinguish them.
enum class Errc {
  shape_mismatch,
  invalid_argument,
  non_scalar_backward,
  graph_cycle,
  missing_gradient,

  wav_malformed_header,
  wav_unsupported_encoding,
  wav_unsupported_bit_depth,
  wrong_sample_rate,
  feature_cache_malformed,

  io_error,
  duplicate_clip,
  invalid_interval,
  unknown_label,
  missing_annotations,
  malformed_row,
  invalid_probability,
  empty_corpus,

  table_field_count,
  table_duplicate_label,
  table_non_numeric,
  table_malformed_header,
  absent_label,
  unseen_scene,

  config_error,
  checkpoint_error,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ssed
