#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace agtcnsd {

using Shape = std::vector<std::size_t>;

class Tensor;

/// Reverse-mode tape. Records one backward rule per differentiable forward
/// op, in execution order. One tape per thread; distinct threads own
/// distinct tapes and never share tensors.
class Tape {
 public:
  static Tape& active();

  bool recording() const { return recording_; }
  void record(std::function<void()> rule) { rules_.push_back(std::move(rule)); }

  /// Seeds d(loss)/d(loss) = 1 and replays rules in reverse order.
  /// Gradients accumulate additively, so a value used N times receives the
  /// sum of its N per-use gradients. Call clear() before the next forward.
  void backward(const Tensor& loss);

  void clear() { rules_.clear(); }
  std::size_t size() const { return rules_.size(); }

 private:
  std::vector<std::function<void()>> rules_;
  bool recording_ = true;

  friend struct NoGradGuard;
};

/// Disables tape recording for its scope (validation / finite differences).
struct NoGradGuard {
  NoGradGuard() : prev_(Tape::active().recording_) { Tape::active().recording_ = false; }
  ~NoGradGuard() { Tape::active().recording_ = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

/// Dense row-major float64 array with an optional gradient buffer.
/// Copying a Tensor copies the handle: both copies see the same storage and
/// gradient, which is what ties parameters to the rules on the tape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor scalar(double value);
  static Tensor identity(std::size_t n);

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->data.size(); }
  /// Rank-2 helpers.
  std::size_t rows() const;
  std::size_t cols() const;

  const std::vector<double>& values() const { return impl_->data; }
  std::vector<double>& mutable_values() { return impl_->data; }
  double item() const;
  double at(std::size_t i) const { return impl_->data[i]; }
  double at2(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  const std::vector<double>& grad() const { return impl_->grad; }
  /// Gradient buffer, created zero-filled on first use.
  std::vector<double>& grad_ref();
  void zero_grad();

  /// Deep copy of values into a fresh leaf (no tape linkage, no grad).
  Tensor detached_copy() const;

 private:
  struct Impl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;

  friend class Tape;
  friend std::shared_ptr<Impl> impl_of(const Tensor&);
  std::shared_ptr<Impl> impl() const { return impl_; }

  // Fused ops outside this translation unit hook into the tape through
  // these helpers rather than reaching into Impl.
 public:
  struct Raw {
    std::shared_ptr<Impl> p;
    std::vector<double>& data() const { return p->data; }
    std::vector<double>& grad() const;  // creates zeroed buffer
    bool grad_present() const { return !p->grad.empty(); }
  };
  Raw raw() const { return Raw{impl_}; }
};

enum class Elementwise { add, subtract, multiply, relu };

/// Binary kinds accept identical shapes or a rank-1 b broadcast along the
/// last axis of a. relu ignores b.
Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b = Tensor());
Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor multiply(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Row-wise softmax, stabilized by subtracting each row's maximum.
Tensor softmax_rows(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor scale(const Tensor& a, double c);

Tensor reshape(const Tensor& a, Shape shape);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& rows);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);

}  // namespace agtcnsd
