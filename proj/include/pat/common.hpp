#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pat {

// Dense row-major matrix of doubles. Small helper, not a linear algebra
// library; the hot loops in this project are written against raw rows.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// Runs fn(i) for every i in [0, n). With jobs > 1 the range is split into
// contiguous blocks, one thread each. fn must only write state owned by its
// own index, so the result is identical for any job count.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace pat
