#include "dpmliv/condition.hpp"

#include <algorithm>
#include <functional>

#include "dpmliv/error.hpp"
#include "dpmliv/text.hpp"

namespace dpmliv {

Condition Condition::parse(const std::string& text) {
  Condition c;
  c.text_ = std::string(text::trim(text));
  if (c.text_.empty()) return c;
  std::size_t start = 0;
  while (start <= c.text_.size()) {
    const auto amp = c.text_.find("&&", start);
    const std::string part(text::trim(c.text_.substr(start, amp == std::string::npos ? std::string::npos : amp - start)));
    if (part.empty()) throw InvalidArgument("condition '" + text + "': empty comparison");

    static const std::pair<const char*, Op> ops[] = {{"==", Op::Eq}, {"!=", Op::Ne}, {"<=", Op::Le},
                                                     {">=", Op::Ge}, {"<", Op::Lt},  {">", Op::Gt}};
    bool found = false;
    for (const auto& [sym, op] : ops) {
      const auto at = part.find(sym);
      if (at == std::string::npos) continue;
      Term t;
      t.column = std::string(text::trim(part.substr(0, at)));
      t.op = op;
      const std::string rhs(text::trim(part.substr(at + std::char_traits<char>::length(sym))));
      if (t.column.empty()) throw InvalidArgument("condition '" + text + "': missing column name");
      const auto v = text::parse_double(rhs);
      if (!v) throw InvalidArgument("condition '" + text + "': '" + rhs + "' is not a number");
      t.value = *v;
      c.terms_.push_back(t);
      found = true;
      break;
    }
    if (!found) throw InvalidArgument("condition '" + text + "': no comparison operator in '" + part + "'");
    if (amp == std::string::npos) break;
    start = amp + 2;
  }
  return c;
}

std::vector<std::string> Condition::columns() const {
  std::vector<std::string> out;
  for (const auto& t : terms_)
    if (std::find(out.begin(), out.end(), t.column) == out.end()) out.push_back(t.column);
  return out;
}

std::vector<std::size_t> Condition::select(const Dataset& data) const {
  const auto& names = data.column_names();
  std::vector<std::size_t> rows;
  std::vector<std::function<double(std::size_t)>> getters;
  for (const auto& t : terms_) {
    const auto it = std::find(names.begin(), names.end(), t.column);
    if (it != names.end()) {
      const auto j = static_cast<Eigen::Index>(it - names.begin());
      getters.push_back([&data, j](std::size_t i) { return data.x()(static_cast<Eigen::Index>(i), j); });
    } else if (t.column == "z") {
      getters.push_back([&data](std::size_t i) { return data.z()[static_cast<Eigen::Index>(i)]; });
    } else if (t.column == "d") {
      getters.push_back([&data](std::size_t i) { return static_cast<double>(data.d()[i]); });
    } else {
      throw InvalidArgument("condition '" + text_ + "': unknown column '" + t.column + "'");
    }
  }
  for (std::size_t i = 0; i < data.n(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < terms_.size() && ok; ++k) {
      const double v = getters[k](i), r = terms_[k].value;
      switch (terms_[k].op) {
        case Op::Eq: ok = v == r; break;
        case Op::Ne: ok = v != r; break;
        case Op::Lt: ok = v < r; break;
        case Op::Le: ok = v <= r; break;
        case Op::Gt: ok = v > r; break;
        case Op::Ge: ok = v >= r; break;
      }
    }
    if (ok) rows.push_back(i);
  }
  return rows;
}

}  // namespace dpmliv
