#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace fraudsel {

// Error taxonomy. The CLI maps these onto exit codes 1, 2 and 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

using Labels = std::vector<int>;

// n x p covariates plus n binary labels.
struct Dataset {
  Eigen::MatrixXd x;
  Labels y;
  std::vector<std::string> feature_names;

  std::size_t rows() const { return y.size(); }
  std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }
  std::size_t positives() const;

  // Throws DataError on shape mismatch, non-finite covariates or non-binary labels.
  void validate() const;

  Dataset subset(std::span<const std::size_t> rows) const;
};

// Numerically stable logistic function; never overflows.
double sigmoid(double eta);
double logit(double p);
// log(1 + exp(x)) without overflow.
double softplus(double x);

// Mean negative log-likelihood of binary labels under log-odds `margin`.
double logistic_loss(std::span<const int> y, const Eigen::VectorXd& margin);

// Runs fn(i) for i in [0, count) on up to `threads` workers. Work items are
// claimed in index order; the first exception thrown is rethrown after join.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, threads > 1 ? static_cast<std::size_t>(threads) : 1);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fraudsel
