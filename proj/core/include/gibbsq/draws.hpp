#ifndef GIBBSQ_DRAWS_HPP_
#define GIBBSQ_DRAWS_HPP_

#include "gibbsq/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gibbsq {

/// M x d matrix of posterior draws plus where they came from.
///
/// Shared by the Gibbs sampler and the baseline posteriors so that the same
/// ellipse, coverage and export code applies to all of them.
struct PosteriorDraws {
  RowMatrix draws;
  /// MH acceptance rate over the retained phase; 1 for exact samplers.
  double acceptance_rate = 1.0;
  std::string method;
  std::uint64_t data_hash = 0;
  /// Free-form key/value provenance (config values, seeds, loss spec).
  std::vector<std::pair<std::string, std::string>> provenance;
  std::vector<std::string> warnings;

  std::size_t size() const { return static_cast<std::size_t>(draws.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(draws.cols()); }
  void annotate(std::string key, std::string value) {
    provenance.emplace_back(std::move(key), std::move(value));
  }
};

}  // namespace gibbsq

#endif  // GIBBSQ_DRAWS_HPP_
