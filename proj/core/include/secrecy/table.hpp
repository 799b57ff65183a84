#pragma once

#include <optional>
#include <string>
#include <vector>

#include "secrecy/plan.hpp"
#include "secrecy/primitives.hpp"

namespace secrecy {

/// One party's view of a relation. A row is live when f and d are both set;
/// an absent flag counts as all ones.
struct SharedTable {
  std::vector<std::string> names;
  std::vector<SVec> cols;
  std::optional<SVec> f;
  std::optional<SVec> d;
  std::size_t rows = 0;

  int index(const std::string& name) const;  // -1 when absent
  const SVec& col(const std::string& name) const;  // throws UnknownColumn
  void add(std::string name, SVec c);
  Shape shape() const;
};

/// Opened live rows as seen by the analyst.
struct OpenedTable {
  std::vector<std::string> names;
  std::vector<std::vector<Word>> rows;
};

}  // namespace secrecy
