#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "polyproc/random.hpp"

namespace polyproc {

/// Sample mean with standard error per component.
struct MCEstimate {
  Eigen::VectorXd mean;
  Eigen::VectorXd se;
  std::size_t n = 0;
};

/// Running mean / sum of squared deviations (Welford), mergeable (Chan et al.).
class MomentAccumulator {
 public:
  explicit MomentAccumulator(Eigen::Index width = 0)
      : mean_(Eigen::VectorXd::Zero(width)), m2_(Eigen::VectorXd::Zero(width)) {}

  void add(const Eigen::VectorXd& x) {
    ++n_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(x - mean_);
  }

  void merge(const MomentAccumulator& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double nt = na + nb;
    const Eigen::VectorXd delta = other.mean_ - mean_;
    mean_ += delta * (nb / nt);
    m2_ += other.m2_ + delta.cwiseProduct(delta) * (na * nb / nt);
    n_ += other.n_;
  }

  std::size_t count() const { return n_; }

  MCEstimate estimate() const {
    MCEstimate e;
    e.n = n_;
    e.mean = mean_;
    if (n_ > 1) {
      const double n = static_cast<double>(n_);
      e.se = (m2_ / (n - 1.0) / n).cwiseSqrt();
    } else {
      e.se = Eigen::VectorXd::Zero(mean_.size());
    }
    return e;
  }

 private:
  std::size_t n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

struct MCConfig {
  std::size_t n = 200000;
  std::uint64_t seed = 1;
  std::size_t block = 4096;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// Runs cfg.n draws of `draw(Rng&) -> Eigen::VectorXd` of fixed width.
/// Draws are cut into blocks; block b uses the stream derive_seed(seed, b) and
/// blocks are merged pairwise in index order, so the result does not depend on
/// the thread count. Any non-finite draw fails the run.
template <class Draw>
MCEstimate monte_carlo(const MCConfig& cfg, Eigen::Index width, Draw&& draw) {
  if (cfg.n < 2) throw std::invalid_argument("Monte Carlo needs at least two draws");
  const std::size_t block = std::max<std::size_t>(cfg.block, 1);
  const std::size_t blocks = (cfg.n + block - 1) / block;
  std::vector<MomentAccumulator> partial(blocks, MomentAccumulator(width));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> non_finite{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto run_blocks = [&]() {
    for (std::size_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) {
      Rng rng = make_rng(cfg.seed, b);
      const std::size_t count = std::min(block, cfg.n - b * block);
      MomentAccumulator& acc = partial[b];
      for (std::size_t i = 0; i < count; ++i) {
        Eigen::VectorXd x = draw(rng);
        if (x.size() != width) throw std::logic_error("draw returned the wrong width");
        if (!x.allFinite()) {
          non_finite.fetch_add(1);
          continue;
        }
        acc.add(x);
      }
    }
  };
  auto worker = [&]() {
    try {
      run_blocks();
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(blocks);
    }
  };

  unsigned threads = cfg.threads != 0 ? cfg.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  if (non_finite.load() != 0) {
    throw std::runtime_error(std::to_string(non_finite.load()) + " non-finite Monte Carlo values");
  }

  // Pairwise tree reduction in a fixed order.
  for (std::size_t stride = 1; stride < blocks; stride *= 2) {
    for (std::size_t i = 0; i + stride < blocks; i += 2 * stride) partial[i].merge(partial[i + stride]);
  }
  return partial.front().estimate();
}

}  // namespace polyproc
