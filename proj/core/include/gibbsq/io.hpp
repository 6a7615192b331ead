#ifndef GIBBSQ_IO_HPP_
#define GIBBSQ_IO_HPP_

#include "gibbsq/calibration.hpp"
#include "gibbsq/draws.hpp"
#include "gibbsq/types.hpp"

#include <string>
#include <vector>

namespace gibbsq {

/// Numeric CSV: one row per observation, optional header row (detected when
/// the first line has a non-numeric cell). Throws InvalidArgument on ragged
/// rows, non-numeric or non-finite cells and empty input, naming the row and
/// column; IoError when the file cannot be read.
Dataset ingest_csv(const std::string& path);
/// Same as ingest_csv on in-memory text; `source` is used in messages.
Dataset parse_csv(const std::string& text, const std::string& source = "<memory>");

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);
/// Creates the directory (and parents) if needed.
void ensure_directory(const std::string& dir);

/// Rows of `m` as CSV with full double precision; header written if non-empty.
void write_matrix_csv(const std::string& path, const RowMatrix& m,
                      const std::vector<std::string>& header = {});
void write_dataset_csv(const std::string& path, const Dataset& data);

/// Draws CSV (no header, d columns) plus a `<path>.json` sidecar carrying the
/// method, acceptance rate, data hash, provenance and warnings.
void write_draws(const std::string& path, const PosteriorDraws& draws);
PosteriorDraws read_draws(const std::string& path);

/// Columns t, omega, c_hat with a header row.
void write_trajectory_csv(const std::string& path, const CalibrationState& state);

}  // namespace gibbsq

#endif  // GIBBSQ_IO_HPP_
