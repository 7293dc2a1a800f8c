#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace cascade {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Failure categories surfaced by the library. The CLI maps these onto its
/// exit-code contract, so the set is part of the public interface.
enum class errc {
  index_out_of_range,
  negative_weight,
  self_loop,
  duplicate_edge,
  no_spanning_tree,
  dimension_mismatch,
  not_strongly_connected,
  no_convergence,
  unknown_model,
  invalid_box,
  bad_time_step,
  parse_error,
  io_error,
};

inline const char* to_string(errc c) {
  switch (c) {
    case errc::index_out_of_range: return "index_out_of_range";
    case errc::negative_weight: return "negative_weight";
    case errc::self_loop: return "self_loop";
    case errc::duplicate_edge: return "duplicate_edge";
    case errc::no_spanning_tree: return "no_spanning_tree";
    case errc::dimension_mismatch: return "dimension_mismatch";
    case errc::not_strongly_connected: return "not_strongly_connected";
    case errc::no_convergence: return "no_convergence";
    case errc::unknown_model: return "unknown_model";
    case errc::invalid_box: return "invalid_box";
    case errc::bad_time_step: return "bad_time_step";
    case errc::parse_error: return "parse_error";
    case errc::io_error: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace cascade
