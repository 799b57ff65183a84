#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "secrecy/data.hpp"

namespace secrecy {

/// A query of the benchmark suite with a generator of inputs of n rows per
/// relation. Strings are hashed as CSV ingestion would hash them.
struct BenchQuery {
  std::string name;
  std::string suite;  // medical, senate or micro
  std::string sql;
  PlainDb (*data)(std::size_t n, std::uint64_t seed);
};

const std::vector<BenchQuery>& benchmark_queries();
/// Throws UnknownTable for an unknown name.
const BenchQuery& benchmark_query(const std::string& name);
std::vector<const BenchQuery*> benchmark_suite(const std::string& suite);

}  // namespace secrecy
