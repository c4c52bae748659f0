#pragma once

#include <cmath>
#include <cstddef>

namespace autorank {

// Neumaier's variant of Kahan summation. The result does not depend on the
// platform's excess precision.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
    ++count_;
  }

  double value() const noexcept { return sum_ + comp_; }
  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return count_ == 0 ? 0.0 : value() / static_cast<double>(count_); }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
  std::size_t count_ = 0;
};

template <typename Range>
double compensated_mean(const Range& values) {
  CompensatedSum s;
  for (const double v : values) s.add(v);
  return s.mean();
}

}  // namespace autorank
