#pragma once

#include <string>

#include <Eigen/Core>

namespace pdds {

struct Dataset {
  Eigen::MatrixXd features;  // n x p
  Eigen::VectorXd labels;    // n, values in {0, 1}
};

struct DatasetOptions {
  /// Rescale every feature column to zero mean and unit variance.
  bool standardize = true;
  /// Prepend a constant column of ones after standardization.
  bool intercept = false;
};

/// Reads one observation per line, fields separated by commas and/or
/// whitespace, label in the last column. Blank lines and lines starting with
/// '#' are skipped. Throws DataError on ragged rows, non-numeric fields or
/// labels outside {0, 1}.
Dataset load_dataset(const std::string& path, const DatasetOptions& options = {});
Dataset parse_dataset(const std::string& text, const DatasetOptions& options = {});

}  // namespace pdds
