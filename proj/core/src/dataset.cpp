#include "pdds/dataset.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "pdds/errors.hpp"

namespace pdds {

namespace {

std::vector<double> split_numbers(const std::string& line, std::size_t line_no) {
  std::vector<double> out;
  std::string field;
  auto flush = [&] {
    if (field.empty()) return;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != field.size()) {
      throw DataError("dataset line " + std::to_string(line_no) + ": cannot parse '" + field +
                      "'");
    }
    out.push_back(v);
    field.clear();
  };
  for (char c : line) {
    if (c == ',' || c == ';' || std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      field.push_back(c);
    }
  }
  flush();
  return out;
}

}  // namespace

Dataset parse_dataset(const std::string& text, const DatasetOptions& options) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto values = split_numbers(line, line_no);
    if (values.size() < 2) {
      throw DataError("dataset line " + std::to_string(line_no) +
                      ": need at least one feature and a label");
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw DataError("dataset line " + std::to_string(line_no) + ": expected " +
                      std::to_string(rows.front().size()) + " fields, got " +
                      std::to_string(values.size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError("dataset is empty");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(rows.front().size() - 1);
  Dataset data;
  data.features.resize(n, p);
  data.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < p; ++j) data.features(i, j) = r[static_cast<std::size_t>(j)];
    const double y = r.back();
    if (y != 0.0 && y != 1.0) {
      throw DataError("dataset row " + std::to_string(i + 1) + ": label must be 0 or 1");
    }
    data.labels[i] = y;
  }

  if (options.standardize) {
    for (Eigen::Index j = 0; j < p; ++j) {
      auto col = data.features.col(j);
      const double mean = col.mean();
      col.array() -= mean;
      const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
      // Constant columns are centred only.
      if (sd > 0.0) col /= sd;
    }
  }
  if (options.intercept) {
    Eigen::MatrixXd with(n, p + 1);
    with.col(0).setOnes();
    with.rightCols(p) = data.features;
    data.features = std::move(with);
  }
  return data;
}

Dataset load_dataset(const std::string& path, const DatasetOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), options);
}

}  // namespace pdds
