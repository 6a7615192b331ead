#include "gibbsq/io.hpp"

#include "gibbsq/errors.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gibbsq {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(cell.c_str(), &end);
  return end == cell.c_str() + cell.size() && errno != ERANGE;
}

std::string location(const std::string& source, std::size_t row, std::size_t col) {
  return source + ": row " + std::to_string(row) + ", column " + std::to_string(col);
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::string& source) {
  std::istringstream is(text);
  std::string line;
  std::vector<double> values;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);
    if (first_content) {
      first_content = false;
      bool numeric = true;
      double v = 0.0;
      for (const auto& c : cells) numeric = numeric && parse_number(c, v);
      width = cells.size();
      if (!numeric) continue;
    }
    if (cells.size() != width) {
      throw InvalidArgument(source + ": row " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " columns, expected " + std::to_string(width));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v = 0.0;
      if (!parse_number(cells[j], v)) {
        throw InvalidArgument(location(source, line_no, j + 1) + ": non-numeric cell '" + cells[j] + "'");
      }
      if (!std::isfinite(v)) {
        throw InvalidArgument(location(source, line_no, j + 1) + ": non-finite value '" + cells[j] + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0 || width == 0) throw InvalidArgument(source + ": no data rows");
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  std::copy(values.begin(), values.end(), m.data());
  return Dataset(std::move(m));
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError(path + ": read failed");
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir + ": cannot create directory (" + ec.message() + ")");
}

Dataset ingest_csv(const std::string& path) { return parse_csv(read_text(path), path); }

void write_matrix_csv(const std::string& path, const RowMatrix& m, const std::vector<std::string>& header) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
  if (!header.empty()) os << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
    os << '\n';
  }
  write_text(path, os.str());
}

void write_dataset_csv(const std::string& path, const Dataset& data) { write_matrix_csv(path, data.rows()); }

void write_draws(const std::string& path, const PosteriorDraws& draws) {
  write_matrix_csv(path, draws.draws);
  nlohmann::json j;
  j["method"] = draws.method;
  j["acceptance_rate"] = draws.acceptance_rate;
  j["data_hash"] = draws.data_hash;
  j["n_draws"] = draws.size();
  j["dim"] = draws.dim();
  nlohmann::json prov = nlohmann::json::object();
  for (const auto& [k, v] : draws.provenance) prov[k] = v;
  j["provenance"] = prov;
  j["warnings"] = draws.warnings;
  write_text(path + ".json", j.dump(2));
}

PosteriorDraws read_draws(const std::string& path) {
  PosteriorDraws out;
  out.draws = parse_csv(read_text(path), path).rows();
  const std::string side = path + ".json";
  if (std::filesystem::exists(side)) {
    try {
      const auto j = nlohmann::json::parse(read_text(side));
      out.method = j.value("method", "");
      out.acceptance_rate = j.value("acceptance_rate", 1.0);
      out.data_hash = j.value("data_hash", std::uint64_t{0});
      if (j.contains("provenance")) {
        for (const auto& [k, v] : j["provenance"].items()) out.annotate(k, v.get<std::string>());
      }
      if (j.contains("warnings")) out.warnings = j["warnings"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& ex) {
      throw InvalidArgument(side + ": " + ex.what());
    }
  }
  return out;
}

void write_trajectory_csv(const std::string& path, const CalibrationState& state) {
  std::ostringstream os;
  os.precision(17);
  os << "t,omega,c_hat\n";
  for (const auto& s : state.trajectory) os << s.t << ',' << s.omega << ',' << s.c_hat << '\n';
  write_text(path, os.str());
}

}  // namespace gibbsq
