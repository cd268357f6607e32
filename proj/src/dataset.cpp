#include "dpmliv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dpmliv/error.hpp"
#include "dpmliv/text.hpp"

namespace dpmliv {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw IngestionError(msg);
}

}  // namespace

Dataset::Dataset(Eigen::VectorXd y, std::vector<std::uint8_t> d, Eigen::VectorXd z,
                 Eigen::MatrixXd x, std::vector<std::string> column_names)
    : y_(std::move(y)), d_(std::move(d)), z_(std::move(z)), x_(std::move(x)),
      names_(std::move(column_names)) {
  const auto n = static_cast<std::size_t>(y_.size());
  require(n >= 2, "dataset needs at least 2 rows");
  require(d_.size() == n, "treatment length differs from outcome length");
  require(static_cast<std::size_t>(z_.size()) == n, "instrument length differs from outcome length");
  require(static_cast<std::size_t>(x_.rows()) == n, "covariate rows differ from outcome length");
  if (names_.empty() && x_.cols() > 0) {
    for (Eigen::Index j = 0; j < x_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
  }
  require(names_.size() == static_cast<std::size_t>(x_.cols()), "column_names length differs from covariate count");

  arm_pos_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (d_[i] > 1) throw IngestionError("treatment not binary at row " + std::to_string(i + 1), i + 1, "d");
    if (!std::isfinite(y_[i])) throw IngestionError("non-finite outcome at row " + std::to_string(i + 1), i + 1, "y");
    if (!std::isfinite(z_[i])) throw IngestionError("non-finite instrument at row " + std::to_string(i + 1), i + 1, "z");
    for (Eigen::Index j = 0; j < x_.cols(); ++j) {
      if (!std::isfinite(x_(i, j)))
        throw IngestionError("non-finite covariate at row " + std::to_string(i + 1), i + 1, names_[j]);
    }
    auto& arm = d_[i] ? treated_ : control_;
    arm_pos_[i] = arm.size();
    arm.push_back(i);
  }
  if (treated_.empty()) throw IngestionError("all units are controls; need at least one treated unit", 0, "d");
  if (control_.empty()) throw IngestionError("all units are treated; need at least one control unit", 0, "d");
}

std::size_t Dataset::column_index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InvalidArgument("unknown covariate column '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

bool Dataset::binary_instrument() const {
  bool zero = false, one = false;
  for (Eigen::Index i = 0; i < z_.size(); ++i) {
    if (z_[i] == 0.0) zero = true;
    else if (z_[i] == 1.0) one = true;
    else return false;
  }
  return zero && one;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Eigen::VectorXd y(rows.size()), z(rows.size());
  Eigen::MatrixXd x(rows.size(), x_.cols());
  std::vector<std::uint8_t> d(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    y[k] = y_[rows[k]];
    z[k] = z_[rows[k]];
    d[k] = d_[rows[k]];
    x.row(k) = x_.row(rows[k]);
  }
  return Dataset(std::move(y), std::move(d), std::move(z), std::move(x), names_);
}

Schema schema_from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("schema file " + path.string() + ": " + e.what());
  }
  Schema s;
  s.y = j.value("y", s.y);
  s.d = j.value("d", s.d);
  s.z = j.value("z", s.z);
  if (j.contains("covariates")) s.covariates = j.at("covariates").get<std::vector<std::string>>();
  if (j.contains("categorical")) s.categorical = j.at("categorical").get<std::vector<std::string>>();
  return s;
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open data file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw IngestionError("empty file: header row required");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = text::split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k].empty()) throw IngestionError("empty column name in header at position " + std::to_string(k + 1));
    if (!col.emplace(header[k], k).second) throw IngestionError("duplicate column '" + header[k] + "'", 0, header[k]);
  }
  auto find = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) throw IngestionError("missing column '" + name + "'", 0, name);
    return it->second;
  };
  const std::size_t cy = find(schema.y), cd = find(schema.d), cz = find(schema.z);

  std::vector<std::string> numeric = schema.covariates;
  std::vector<std::string> categorical = schema.categorical;
  if (numeric.empty() && categorical.empty()) {
    for (const auto& h : header)
      if (h != schema.y && h != schema.d && h != schema.z) numeric.push_back(h);
  }
  std::vector<std::size_t> cnum, ccat;
  for (const auto& c : numeric) cnum.push_back(find(c));
  for (const auto& c : categorical) ccat.push_back(find(c));

  std::vector<double> ys, zs;
  std::vector<std::uint8_t> ds;
  std::vector<std::vector<double>> xnum(cnum.size());
  std::vector<std::vector<std::string>> xcat(ccat.size());

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    ++row;
    auto fields = text::split_csv_line(line);
    if (fields.size() != header.size())
      throw IngestionError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                               " fields, header has " + std::to_string(header.size()),
                           row);
    auto number = [&](std::size_t c) {
      const auto& f = fields[c];
      if (f.empty() || f == "NA" || f == "NaN" || f == "nan")
        throw IngestionError("missing value at row " + std::to_string(row) + " column '" + header[c] + "'", row,
                             header[c]);
      auto v = text::parse_double(f);
      if (!v)
        throw IngestionError("non-numeric cell '" + f + "' at row " + std::to_string(row) + " column '" +
                                 header[c] + "'",
                             row, header[c]);
      if (!std::isfinite(*v))
        throw IngestionError("non-finite cell at row " + std::to_string(row) + " column '" + header[c] + "'", row,
                             header[c]);
      return *v;
    };
    ys.push_back(number(cy));
    const double dv = number(cd);
    if (dv != 0.0 && dv != 1.0)
      throw IngestionError("treatment not binary at row " + std::to_string(row), row, header[cd]);
    ds.push_back(static_cast<std::uint8_t>(dv));
    zs.push_back(number(cz));
    for (std::size_t k = 0; k < cnum.size(); ++k) xnum[k].push_back(number(cnum[k]));
    for (std::size_t k = 0; k < ccat.size(); ++k) {
      const auto& f = fields[ccat[k]];
      if (f.empty() || f == "NA")
        throw IngestionError("missing value at row " + std::to_string(row) + " column '" + header[ccat[k]] + "'",
                             row, header[ccat[k]]);
      xcat[k].push_back(f);
    }
  }
  if (row < 2) throw IngestionError("dataset needs at least 2 rows, found " + std::to_string(row));

  std::vector<std::string> names = numeric;
  std::vector<std::vector<double>> columns = std::move(xnum);
  for (std::size_t k = 0; k < ccat.size(); ++k) {
    std::set<std::string> levels(xcat[k].begin(), xcat[k].end());
    auto it = levels.begin();
    if (it != levels.end()) ++it;  // first level is the reference
    for (; it != levels.end(); ++it) {
      std::vector<double> dummy(row);
      for (std::size_t i = 0; i < row; ++i) dummy[i] = xcat[k][i] == *it ? 1.0 : 0.0;
      names.push_back(categorical[k] + "_" + *it);
      columns.push_back(std::move(dummy));
    }
  }

  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(row));
  Eigen::VectorXd z = Eigen::Map<Eigen::VectorXd>(zs.data(), static_cast<Eigen::Index>(row));
  Eigen::MatrixXd x(row, columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (std::size_t i = 0; i < row; ++i) x(i, j) = columns[j][i];
  return Dataset(std::move(y), std::move(ds), std::move(z), std::move(x), std::move(names));
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "y,d,z";
  for (const auto& name : data.column_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << text::format_double(data.y()[i]) << ',' << int(data.d()[i]) << ',' << text::format_double(data.z()[i]);
    for (std::size_t j = 0; j < data.p(); ++j) out << ',' << text::format_double(data.x()(i, j));
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace dpmliv
