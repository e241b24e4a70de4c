#pragma once

#include <stdexcept>
#include <string>

namespace calib {

enum class errc {
  empty_input,
  invalid_shape,
  not_normalized,
  label_out_of_range,
  non_finite_score,
  too_many_bins,
  non_positive_temperature,
  empty_fit_set,
  degenerate_split,
  empty_subset,
  label_not_in_subset,
  bin_too_small,
  undefined_delta,
  underdetermined,
  non_positive_coordinate,
  invalid_support,
  parse_error,
  header_mismatch,
  io_error,
  invalid_argument,
};

const char* errc_name(errc code);

/// Single exception type for the whole library; carries a machine-readable code.
class CalibError : public std::runtime_error {
 public:
  CalibError(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

inline const char* errc_name(errc code) {
  switch (code) {
    case errc::empty_input: return "empty_input";
    case errc::invalid_shape: return "invalid_shape";
    case errc::not_normalized: return "not_normalized";
    case errc::label_out_of_range: return "label_out_of_range";
    case errc::non_finite_score: return "non_finite_score";
    case errc::too_many_bins: return "too_many_bins";
    case errc::non_positive_temperature: return "non_positive_temperature";
    case errc::empty_fit_set: return "empty_fit_set";
    case errc::degenerate_split: return "degenerate_split";
    case errc::empty_subset: return "empty_subset";
    case errc::label_not_in_subset: return "label_not_in_subset";
    case errc::bin_too_small: return "bin_too_small";
    case errc::undefined_delta: return "undefined_delta";
    case errc::underdetermined: return "underdetermined";
    case errc::non_positive_coordinate: return "non_positive_coordinate";
    case errc::invalid_support: return "invalid_support";
    case errc::parse_error: return "parse_error";
    case errc::header_mismatch: return "header_mismatch";
    case errc::io_error: return "io_error";
    case errc::invalid_argument: return "invalid_argument";
  }
  return "unknown";
}

}  // namespace calib
