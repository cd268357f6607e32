#pragma once

#include <string>
#include <vector>

#include "dpmliv/dataset.hpp"

namespace dpmliv {

/// Conjunction of comparisons over dataset columns, e.g. "x3==1 && sex!=0".
/// Operators: == != < <= > >=. Names resolve to covariate columns, or to "z"
/// and "d" when no covariate has that name. The empty string selects every unit.
class Condition {
 public:
  Condition() = default;
  static Condition parse(const std::string& text);

  /// Indices of matching units, ascending. Throws InvalidArgument on an
  /// unknown column.
  std::vector<std::size_t> select(const Dataset& data) const;

  const std::string& text() const { return text_; }
  bool empty() const { return terms_.empty(); }

  /// Covariate names referenced by the condition.
  std::vector<std::string> columns() const;

 private:
  enum class Op { Eq, Ne, Lt, Le, Gt, Ge };
  struct Term {
    std::string column;
    Op op;
    double value;
  };
  std::string text_;
  std::vector<Term> terms_;
};

}  // namespace dpmliv
