#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trustgnn/tensor.hpp"

namespace trustgnn::selfcheck {

using HadamardFn = std::function<nd::Tensor(const nd::Tensor&, const nd::Tensor&)>;

struct Options {
  std::uint64_t seed = 2024;
  std::size_t graphs = 200;      // random graphs in the propagation corpus
  std::size_t max_nodes = 40;
  std::size_t max_chain_length = 3;
  // Product under test in the rotation properties.
  HadamardFn hadamard = [](const nd::Tensor& x, const nd::Tensor& y) { return nd::complex_hadamard(x, y); };
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<PropertyResult> run(const Options& options);
inline std::vector<PropertyResult> run() { return run(Options{}); }

// One line per property: "PASS name  detail".
std::string format(const std::vector<PropertyResult>& results);

}  // namespace trustgnn::selfcheck
