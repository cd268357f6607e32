#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dpmliv {

/// Observed data (Y, D, Z, X). Validated on construction and immutable after.
///
/// Invariants: n >= 2, every vector has length n and x has n rows, d is 0/1
/// with both values present, no non-finite entries. No intercept column is
/// stored in x; the samplers add their own.
class Dataset {
 public:
  Dataset(Eigen::VectorXd y, std::vector<std::uint8_t> d, Eigen::VectorXd z, Eigen::MatrixXd x,
          std::vector<std::string> column_names);

  std::size_t n() const noexcept { return static_cast<std::size_t>(y_.size()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(x_.cols()); }

  const Eigen::VectorXd& y() const noexcept { return y_; }
  const std::vector<std::uint8_t>& d() const noexcept { return d_; }
  const Eigen::VectorXd& z() const noexcept { return z_; }
  const Eigen::MatrixXd& x() const noexcept { return x_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }

  /// Unit indices observed under arm (0 or 1), in ascending order.
  const std::vector<std::size_t>& arm_units(int arm) const { return arm == 1 ? treated_ : control_; }
  /// Position of unit i inside arm_units(d_i).
  std::size_t arm_position(std::size_t i) const { return arm_pos_[i]; }

  /// Index of a covariate column by name; throws InvalidArgument if absent.
  std::size_t column_index(const std::string& name) const;

  /// True when z takes only the values 0 and 1 and both occur.
  bool binary_instrument() const;

  /// Dataset restricted to the given rows (order preserved). Revalidates.
  Dataset subset(const std::vector<std::size_t>& rows) const;

 private:
  Eigen::VectorXd y_;
  std::vector<std::uint8_t> d_;
  Eigen::VectorXd z_;
  Eigen::MatrixXd x_;
  std::vector<std::string> names_;
  std::vector<std::size_t> treated_, control_, arm_pos_;
};

/// Maps CSV columns to model roles.
struct Schema {
  std::string y = "y";
  std::string d = "d";
  std::string z = "z";
  /// Numeric covariates, used as-is. Empty together with `categorical`
  /// means "every column not mapped to y/d/z".
  std::vector<std::string> covariates;
  /// Categorical covariates: one-hot expanded with the first level (in
  /// sorted order) dropped.
  std::vector<std::string> categorical;
};

Schema schema_from_json_file(const std::filesystem::path& path);

/// Parses a CSV with a header row into a validated Dataset. Every failure is
/// an IngestionError naming the row and column.
Dataset load_csv(const std::filesystem::path& path, const Schema& schema = {});

/// Writes y, d, z and the covariate columns back out as CSV.
void write_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace dpmliv
