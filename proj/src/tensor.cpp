#include "agtcnsd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace agtcnsd {

namespace {

std::size_t shape_product(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void check_positive_dims(const Shape& shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("tensor: zero dimension in shape " + shape_str(shape));
  }
}

}  // namespace

Tape& Tape::active() {
  thread_local Tape tape;
  return tape;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  }
  loss.impl()->grad.assign(1, 1.0);
  for (auto it = rules_.rbegin(); it != rules_.rend(); ++it) (*it)();
}

Tensor::Tensor(Shape shape, double fill, bool requires_grad) {
  check_positive_dims(shape);
  impl_ = std::make_shared<Impl>();
  impl_->data.assign(shape_product(shape), fill);
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  check_positive_dims(shape);
  if (shape_product(shape) != values.size()) {
    throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match " +
                                std::to_string(values.size()) + " values");
  }
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.impl_->data[i * n + i] = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw std::invalid_argument("tensor: rows() on rank " + std::to_string(rank()));
  return impl_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw std::invalid_argument("tensor: cols() on rank " + std::to_string(rank()));
  return impl_->shape[1];
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("tensor: item() on non-scalar of size " + std::to_string(size()));
  return impl_->data[0];
}

std::vector<double>& Tensor::grad_ref() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_) impl_->grad.clear();
}

Tensor Tensor::detached_copy() const {
  return Tensor(impl_->shape, impl_->data);
}

std::vector<double>& Tensor::Raw::grad() const {
  if (p->grad.empty()) p->grad.assign(p->data.size(), 0.0);
  return p->grad;
}

namespace {

// Binary broadcast modes: exact shape match, or b is a rank-1 vector
// matching a's last axis.
enum class Bcast { same, last_axis };

Bcast binary_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Bcast::same;
  if (b.rank() == 1 && !a.shape().empty() && b.shape()[0] == a.shape().back()) return Bcast::last_axis;
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                              shape_str(b.shape()) + " (need equal shapes or a last-axis vector)");
}

bool should_record(const Tensor& a) { return Tape::active().recording() && a.requires_grad(); }
bool should_record(const Tensor& a, const Tensor& b) {
  return Tape::active().recording() && (a.requires_grad() || b.requires_grad());
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  Bcast mode = binary_mode(a, b, "add");
  std::vector<double> out(a.size());
  const std::size_t last = a.shape().back();
  if (mode == Bcast::same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i % last);
  }
  Tensor z(a.shape(), std::move(out));
  if (should_record(a, b)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), br = b.raw(), zr = z.raw();
    Tape::active().record([ar, br, zr, mode, last] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& ga = ar.grad();
      auto& gb = br.grad();
      for (std::size_t i = 0; i < gz.size(); ++i) {
        ga[i] += gz[i];
        gb[mode == Bcast::same ? i : i % last] += gz[i];
      }
    });
  }
  return z;
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  Bcast mode = binary_mode(a, b, "subtract");
  std::vector<double> out(a.size());
  const std::size_t last = a.shape().back();
  if (mode == Bcast::same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i % last);
  }
  Tensor z(a.shape(), std::move(out));
  if (should_record(a, b)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), br = b.raw(), zr = z.raw();
    Tape::active().record([ar, br, zr, mode, last] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& ga = ar.grad();
      auto& gb = br.grad();
      for (std::size_t i = 0; i < gz.size(); ++i) {
        ga[i] += gz[i];
        gb[mode == Bcast::same ? i : i % last] -= gz[i];
      }
    });
  }
  return z;
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  Bcast mode = binary_mode(a, b, "multiply");
  std::vector<double> out(a.size());
  const std::size_t last = a.shape().back();
  if (mode == Bcast::same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i % last);
  }
  Tensor z(a.shape(), std::move(out));
  if (should_record(a, b)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), br = b.raw(), zr = z.raw();
    Tape::active().record([ar, br, zr, mode, last] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& ga = ar.grad();
      auto& gb = br.grad();
      for (std::size_t i = 0; i < gz.size(); ++i) {
        const std::size_t j = mode == Bcast::same ? i : i % last;
        ga[i] += gz[i] * br.data()[j];
        gb[j] += gz[i] * ar.data()[i];
      }
    });
  }
  return z;
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) > 0.0 ? a.at(i) : 0.0;
  Tensor z(a.shape(), std::move(out));
  if (should_record(a)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), zr = z.raw();
    Tape::active().record([ar, zr] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& ga = ar.grad();
      for (std::size_t i = 0; i < gz.size(); ++i) {
        if (ar.data()[i] > 0.0) ga[i] += gz[i];
      }
    });
  }
  return z;
}

Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b) {
  switch (kind) {
    case Elementwise::add: return add(a, b);
    case Elementwise::subtract: return subtract(a, b);
    case Elementwise::multiply: return multiply(a, b);
    case Elementwise::relu: return relu(a);
  }
  throw std::invalid_argument("elementwise: unknown kind");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw std::invalid_argument("matmul: expects rank-2 operands, got " + shape_str(a.shape()) + " and " +
                                shape_str(b.shape()));
  }
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimension mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  Tensor z({m, n}, std::move(out));
  if (should_record(a, b)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), br = b.raw(), zr = z.raw();
    Tape::active().record([ar, br, zr, m, k, n] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& ga = ar.grad();
      auto& gb = br.grad();
      // dA = dZ * B^T
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* gzrow = &gz[i * n];
          const double* brow = &br.data()[p * n];
          for (std::size_t j = 0; j < n; ++j) acc += gzrow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
      // dB = A^T * dZ
      for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t i = 0; i < m; ++i) {
          const double aip = ar.data()[i * k + p];
          if (aip == 0.0) continue;
          const double* gzrow = &gz[i * n];
          double* gbrow = &gb[p * n];
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * gzrow[j];
        }
      }
    });
  }
  return z;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw std::invalid_argument("transpose: expects rank-2, got " + shape_str(a.shape()));
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.at(i * n + j);
  Tensor z({n, m}, std::move(out));
  if (should_record(a)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), zr = z.raw();
    Tape::active().record([ar, zr, m, n] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& ga = ar.grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += gz[j * m + i];
    });
  }
  return z;
}

Tensor softmax_rows(const Tensor& a) {
  if (a.rank() != 2) throw std::invalid_argument("softmax_rows: expects rank-2, got " + shape_str(a.shape()));
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = &a.values()[i * n];
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      denom += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= denom;
  }
  Tensor z({m, n}, std::move(out));
  if (should_record(a)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), zr = z.raw();
    Tape::active().record([ar, zr, m, n] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      const auto& y = zr.data();
      auto& ga = ar.grad();
      for (std::size_t i = 0; i < m; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += gz[i * n + j] * y[i * n + j];
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += y[i * n + j] * (gz[i * n + j] - dot);
      }
    });
  }
  return z;
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  Tensor z({1}, {acc});
  if (should_record(a)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), zr = z.raw();
    Tape::active().record([ar, zr] {
      if (!zr.grad_present()) return;
      const double g = zr.grad()[0];
      auto& ga = ar.grad();
      for (double& v : ga) v += g;
    });
  }
  return z;
}

Tensor mean(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  const double inv = 1.0 / static_cast<double>(a.size());
  Tensor z({1}, {acc * inv});
  if (should_record(a)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), zr = z.raw();
    Tape::active().record([ar, zr, inv] {
      if (!zr.grad_present()) return;
      const double g = zr.grad()[0] * inv;
      auto& ga = ar.grad();
      for (double& v : ga) v += g;
    });
  }
  return z;
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * c;
  Tensor z(a.shape(), std::move(out));
  if (should_record(a)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), zr = z.raw();
    Tape::active().record([ar, zr, c] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& ga = ar.grad();
      for (std::size_t i = 0; i < gz.size(); ++i) ga[i] += gz[i] * c;
    });
  }
  return z;
}

Tensor reshape(const Tensor& a, Shape shape) {
  check_positive_dims(shape);
  if (shape_product(shape) != a.size()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  Tensor z(std::move(shape), a.values());
  if (should_record(a)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), zr = z.raw();
    Tape::active().record([ar, zr] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& ga = ar.grad();
      for (std::size_t i = 0; i < gz.size(); ++i) ga[i] += gz[i];
    });
  }
  return z;
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (a.rank() != 2) throw std::invalid_argument("slice_rows: expects rank-2, got " + shape_str(a.shape()));
  if (begin >= end || end > a.rows()) {
    throw std::invalid_argument("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                                ") out of bounds for " + std::to_string(a.rows()) + " rows");
  }
  const std::size_t n = a.cols();
  std::vector<double> out(a.values().begin() + static_cast<std::ptrdiff_t>(begin * n),
                          a.values().begin() + static_cast<std::ptrdiff_t>(end * n));
  Tensor z({end - begin, n}, std::move(out));
  if (should_record(a)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), zr = z.raw();
    Tape::active().record([ar, zr, begin, n] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& ga = ar.grad();
      for (std::size_t i = 0; i < gz.size(); ++i) ga[begin * n + i] += gz[i];
    });
  }
  return z;
}

Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& rows) {
  if (a.rank() != 2) throw std::invalid_argument("gather_rows: expects rank-2, got " + shape_str(a.shape()));
  const std::size_t n = a.cols();
  std::vector<double> out;
  out.reserve(rows.size() * n);
  for (std::size_t r : rows) {
    if (r >= a.rows()) throw std::invalid_argument("gather_rows: row " + std::to_string(r) + " out of bounds");
    out.insert(out.end(), a.values().begin() + static_cast<std::ptrdiff_t>(r * n),
               a.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
  }
  Tensor z({rows.size(), n}, std::move(out));
  if (should_record(a)) {
    z.set_requires_grad(true);
    auto ar = a.raw(), zr = z.raw();
    auto idx = rows;
    Tape::active().record([ar, zr, idx = std::move(idx), n] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& ga = ar.grad();
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < n; ++j) ga[idx[i] * n + j] += gz[i * n + j];
    });
  }
  return z;
}

namespace {

Tensor concat_impl(const std::vector<Tensor>& parts, bool by_rows) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  for (const Tensor& p : parts) {
    if (p.rank() != 2) throw std::invalid_argument("concat: expects rank-2 parts");
  }
  const std::size_t fixed = by_rows ? parts[0].cols() : parts[0].rows();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    const std::size_t f = by_rows ? p.cols() : p.rows();
    if (f != fixed) {
      throw std::invalid_argument(std::string("concat: mismatched ") + (by_rows ? "column" : "row") + " counts " +
                                  std::to_string(fixed) + " vs " + std::to_string(f));
    }
    total += by_rows ? p.rows() : p.cols();
  }

  Tensor z(by_rows ? Shape{total, fixed} : Shape{fixed, total});
  auto& out = z.mutable_values();
  if (by_rows) {
    std::size_t at = 0;
    for (const Tensor& p : parts) {
      std::copy(p.values().begin(), p.values().end(), out.begin() + static_cast<std::ptrdiff_t>(at));
      at += p.size();
    }
  } else {
    std::size_t col0 = 0;
    for (const Tensor& p : parts) {
      for (std::size_t i = 0; i < fixed; ++i)
        for (std::size_t j = 0; j < p.cols(); ++j) out[i * total + col0 + j] = p.at(i * p.cols() + j);
      col0 += p.cols();
    }
  }

  bool needs_grad = false;
  for (const Tensor& p : parts)
    if (p.requires_grad()) needs_grad = true;
  if (Tape::active().recording() && needs_grad) {
    z.set_requires_grad(true);
    std::vector<Tensor::Raw> raws;
    std::vector<std::size_t> extents;
    raws.reserve(parts.size());
    for (const Tensor& p : parts) {
      raws.push_back(p.raw());
      extents.push_back(by_rows ? p.rows() : p.cols());
    }
    auto zr = z.raw();
    Tape::active().record([raws = std::move(raws), extents = std::move(extents), zr, by_rows, fixed, total] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      if (by_rows) {
        std::size_t at = 0;
        for (std::size_t pi = 0; pi < raws.size(); ++pi) {
          auto& gp = raws[pi].grad();
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += gz[at + i];
          at += gp.size();
        }
      } else {
        std::size_t col0 = 0;
        for (std::size_t pi = 0; pi < raws.size(); ++pi) {
          auto& gp = raws[pi].grad();
          const std::size_t pc = extents[pi];
          for (std::size_t i = 0; i < fixed; ++i)
            for (std::size_t j = 0; j < pc; ++j) gp[i * pc + j] += gz[i * total + col0 + j];
          col0 += pc;
        }
      }
    });
  }
  return z;
}

}  // namespace

Tensor concat_rows(const std::vector<Tensor>& parts) { return concat_impl(parts, true); }
Tensor concat_cols(const std::vector<Tensor>& parts) { return concat_impl(parts, false); }

}  // namespace agtcnsd
