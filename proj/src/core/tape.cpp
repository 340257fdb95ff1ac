#include "cbm/core/tape.hpp"

#include <algorithm>
#include <cmath>

#include "cbm/core/error.hpp"
#include "cbm/core/kernels.hpp"

namespace cbm {

namespace {

std::vector<double> transpose(std::span<const double> m, std::size_t rows, std::size_t cols) {
  std::vector<double> t(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = m[r * cols + c];
  return t;
}

void add_into(std::vector<double>& dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var Tape::push(std::string_view op, Shape shape, std::vector<double> value, std::initializer_list<Var> inputs,
               std::function<void(Tape&, std::size_t)> backward) {
  bool needs = false;
  for (Var in : inputs) needs = needs || nodes_[in.id].needs_grad;
  return push(op, shape, std::move(value), needs, std::move(backward));
}

Var Tape::push(std::string_view op, Shape shape, std::vector<double> value, bool needs_grad,
               std::function<void(Tape&, std::size_t)> backward) {
  Node n;
  n.shape = shape;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.op = op;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Shape shape, std::vector<double> value) {
  require(value.size() == shape.size(), "tape: constant size does not match shape");
  return push("constant", shape, std::move(value), false, nullptr);
}

Var Tape::parameter(Shape shape, std::vector<double> value) {
  require(value.size() == shape.size(), "tape: parameter size does not match shape");
  return push("parameter", shape, std::move(value), true, nullptr);
}

void Tape::backward(Var output) {
  require(nodes_[output.id].value.size() == 1, "tape: backward needs a scalar output");
  trace_.clear();
  for (auto& n : nodes_) n.grad.assign(n.needs_grad ? n.value.size() : 0, 0.0);
  if (!nodes_[output.id].needs_grad) return;
  nodes_[output.id].grad[0] = 1.0;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    trace_.push_back(i);
    if (nodes_[i].needs_grad && nodes_[i].backward) nodes_[i].backward(*this, i);
  }
}

Var Tape::matmul(Var a, Var b) {
  const Shape sa = shape(a);
  const Shape sb = shape(b);
  require(sa.dims[2] == 1 && sb.dims[2] == 1 && sa.cols() == sb.rows(), "tape: matmul shape mismatch");
  const std::size_t m = sa.rows(), k = sa.cols(), n = sb.cols();
  std::vector<double> out(m * n);
  kernels::omp::matmul(value(a), value(b), out, m, k, n);
  return push("matmul", Shape::matrix(m, n), std::move(out), {a, b}, [a, b, m, k, n](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    if (t.nodes_[a.id].needs_grad) {
      std::vector<double> bt = transpose(t.value(b), k, n);
      std::vector<double> da(m * k);
      kernels::omp::matmul(g, bt, da, m, n, k);
      add_into(t.nodes_[a.id].grad, da);
    }
    if (t.nodes_[b.id].needs_grad) {
      std::vector<double> at = transpose(t.value(a), m, k);
      std::vector<double> db(k * n);
      kernels::omp::matmul(at, g, db, k, m, n);
      add_into(t.nodes_[b.id].grad, db);
    }
  });
}

Var Tape::add(Var a, Var b) {
  require(shape(a) == shape(b), "tape: add shape mismatch");
  std::vector<double> out = value(a);
  add_into(out, value(b));
  return push("add", shape(a), std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    if (t.nodes_[a.id].needs_grad) add_into(t.nodes_[a.id].grad, g);
    if (t.nodes_[b.id].needs_grad) add_into(t.nodes_[b.id].grad, g);
  });
}

Var Tape::sub(Var a, Var b) {
  require(shape(a) == shape(b), "tape: sub shape mismatch");
  std::vector<double> out = value(a);
  const auto& vb = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  return push("sub", shape(a), std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    if (t.nodes_[a.id].needs_grad) add_into(t.nodes_[a.id].grad, g);
    if (t.nodes_[b.id].needs_grad) {
      auto& gb = t.nodes_[b.id].grad;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  require(shape(a) == shape(b), "tape: mul shape mismatch");
  std::vector<double> out = value(a);
  const auto& vb = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  return push("mul", shape(a), std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    if (t.nodes_[a.id].needs_grad) {
      auto& ga = t.nodes_[a.id].grad;
      const auto& vb = t.value(b);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (t.nodes_[b.id].needs_grad) {
      auto& gb = t.nodes_[b.id].grad;
      const auto& va = t.value(a);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var Tape::scale(Var a, double s) {
  std::vector<double> out = value(a);
  for (double& v : out) v *= s;
  return push("scale", shape(a), std::move(out), {a}, [a, s](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    auto& ga = t.nodes_[a.id].grad;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * g[i];
  });
}

Var Tape::add_column(Var m, Var column) {
  const Shape sm = shape(m);
  require(sm.dims[2] == 1 && shape(column) == Shape::matrix(sm.rows(), 1), "tape: add_column shape mismatch");
  const std::size_t rows = sm.rows(), cols = sm.cols();
  std::vector<double> out = value(m);
  const auto& col = value(column);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += col[r];
  return push("add_column", sm, std::move(out), {m, column}, [m, column, rows, cols](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    if (t.nodes_[m.id].needs_grad) add_into(t.nodes_[m.id].grad, g);
    if (t.nodes_[column.id].needs_grad) {
      auto& gc = t.nodes_[column.id].grad;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gc[r] += g[r * cols + c];
    }
  });
}

Var Tape::scale_columns(Var m, Var row) {
  const Shape sm = shape(m);
  require(sm.dims[2] == 1 && shape(row) == Shape::matrix(1, sm.cols()), "tape: scale_columns shape mismatch");
  const std::size_t rows = sm.rows(), cols = sm.cols();
  std::vector<double> out = value(m);
  const auto& s = value(row);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] *= s[c];
  return push("scale_columns", sm, std::move(out), {m, row}, [m, row, rows, cols](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& vm = t.value(m);
    const auto& vs = t.value(row);
    if (t.nodes_[m.id].needs_grad) {
      auto& gm = t.nodes_[m.id].grad;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gm[r * cols + c] += g[r * cols + c] * vs[c];
    }
    if (t.nodes_[row.id].needs_grad) {
      auto& gs = t.nodes_[row.id].grad;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gs[c] += g[r * cols + c] * vm[r * cols + c];
    }
  });
}

Var Tape::slice_rows(Var m, std::size_t begin, std::size_t end) {
  const Shape sm = shape(m);
  require(sm.dims[2] == 1 && begin < end && end <= sm.rows(), "tape: slice_rows out of range");
  const std::size_t cols = sm.cols();
  const auto& vm = value(m);
  std::vector<double> out(vm.begin() + static_cast<long>(begin * cols), vm.begin() + static_cast<long>(end * cols));
  return push("slice_rows", Shape::matrix(end - begin, cols), std::move(out), {m},
              [m, begin, cols](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                auto& gm = t.nodes_[m.id].grad;
                for (std::size_t i = 0; i < g.size(); ++i) gm[begin * cols + i] += g[i];
              });
}

Var Tape::concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "tape: concat_rows needs at least one part");
  const std::size_t cols = shape(parts[0]).cols();
  std::size_t rows = 0;
  bool needs = false;
  std::vector<double> out;
  for (Var p : parts) {
    require(shape(p).dims[2] == 1 && shape(p).cols() == cols, "tape: concat_rows column mismatch");
    rows += shape(p).rows();
    needs = needs || nodes_[p.id].needs_grad;
    out.insert(out.end(), value(p).begin(), value(p).end());
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push("concat_rows", Shape::matrix(rows, cols), std::move(out), needs,
              [inputs](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                std::size_t offset = 0;
                for (Var p : inputs) {
                  const std::size_t n = t.value(p).size();
                  if (t.nodes_[p.id].needs_grad) {
                    auto& gp = t.nodes_[p.id].grad;
                    for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
                  }
                  offset += n;
                }
              });
}

Var Tape::sigmoid(Var a) {
  std::vector<double> out = value(a);
  for (double& v : out) v = 1.0 / (1.0 + std::exp(-v));
  return push("sigmoid", shape(a), std::move(out), {a}, [a](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& y = t.nodes_[self].value;
    auto& ga = t.nodes_[a.id].grad;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::tanh(Var a) {
  std::vector<double> out = value(a);
  for (double& v : out) v = std::tanh(v);
  return push("tanh", shape(a), std::move(out), {a}, [a](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& y = t.nodes_[self].value;
    auto& ga = t.nodes_[a.id].grad;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::relu(Var a) {
  std::vector<double> out = value(a);
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return push("relu", shape(a), std::move(out), {a}, [a](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& x = t.value(a);
    auto& ga = t.nodes_[a.id].grad;
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  });
}

Var Tape::softmax_columns(Var m) {
  const Shape sm = shape(m);
  require(sm.dims[2] == 1, "tape: softmax_columns needs a matrix");
  const std::size_t rows = sm.rows(), cols = sm.cols();
  const auto& x = value(m);
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < cols; ++c) {
    double peak = x[c];
    for (std::size_t r = 1; r < rows; ++r) peak = std::max(peak, x[r * cols + c]);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) total += (out[r * cols + c] = std::exp(x[r * cols + c] - peak));
    for (std::size_t r = 0; r < rows; ++r) out[r * cols + c] /= total;
  }
  return push("softmax_columns", sm, std::move(out), {m}, [m, rows, cols](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& y = t.nodes_[self].value;
    auto& gm = t.nodes_[m.id].grad;
    for (std::size_t c = 0; c < cols; ++c) {
      double dot = 0.0;
      for (std::size_t r = 0; r < rows; ++r) dot += g[r * cols + c] * y[r * cols + c];
      for (std::size_t r = 0; r < rows; ++r) gm[r * cols + c] += y[r * cols + c] * (g[r * cols + c] - dot);
    }
  });
}

Var Tape::softmax_cross_entropy(Var logits, std::span<const std::size_t> labels) {
  const Shape sl = shape(logits);
  const std::size_t rows = sl.rows(), cols = sl.cols();
  require(sl.dims[2] == 1 && labels.size() == cols, "tape: softmax_cross_entropy needs one label per column");
  const auto& x = value(logits);
  std::vector<double> probs(x.size());
  double loss = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    require(labels[c] < rows, "tape: label out of range");
    double peak = x[c];
    for (std::size_t r = 1; r < rows; ++r) peak = std::max(peak, x[r * cols + c]);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) total += (probs[r * cols + c] = std::exp(x[r * cols + c] - peak));
    for (std::size_t r = 0; r < rows; ++r) probs[r * cols + c] /= total;
    loss += std::log(total) + peak - x[labels[c] * cols + c];
  }
  loss /= static_cast<double>(cols);
  std::vector<std::size_t> owned(labels.begin(), labels.end());
  return push("softmax_cross_entropy", Shape::scalar(), {loss}, {logits},
              [logits, rows, cols, probs = std::move(probs), owned = std::move(owned)](Tape& t, std::size_t self) {
                const double g = t.nodes_[self].grad[0] / static_cast<double>(cols);
                auto& gl = t.nodes_[logits.id].grad;
                for (std::size_t c = 0; c < cols; ++c)
                  for (std::size_t r = 0; r < rows; ++r)
                    gl[r * cols + c] += g * (probs[r * cols + c] - (r == owned[c] ? 1.0 : 0.0));
              });
}

Var Tape::sum(Var a) {
  double total = 0.0;
  for (double v : value(a)) total += v;
  return push("sum", Shape::scalar(), {total}, {a}, [a](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad[0];
    for (double& v : t.nodes_[a.id].grad) v += g;
  });
}

Var Tape::squared_norm(Var a) {
  double total = 0.0;
  for (double v : value(a)) total += v * v;
  return push("squared_norm", Shape::scalar(), {total}, {a}, [a](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad[0];
    const auto& x = t.value(a);
    auto& ga = t.nodes_[a.id].grad;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * g * x[i];
  });
}

Var Tape::conv3x3(Var input, Var weights, Var bias) {
  const Shape si = shape(input);
  const std::size_t out_ch = shape(weights).rows();
  const kernels::ConvDims d{si.dims[0], out_ch, si.dims[1], si.dims[2]};
  require(shape(weights) == Shape::matrix(out_ch, d.in_channels * 9), "tape: conv3x3 weight shape mismatch");
  require(shape(bias) == Shape::matrix(out_ch, 1), "tape: conv3x3 bias shape mismatch");
  std::vector<double> out(out_ch * d.height * d.width);
  kernels::omp::conv3x3_forward(d, value(input), value(weights), value(bias), out);
  return push("conv3x3", Shape::tensor(out_ch, d.height, d.width), std::move(out), {input, weights, bias},
              [input, weights, bias, d](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                if (t.nodes_[input.id].needs_grad) {
                  std::vector<double> gi(d.in_channels * d.height * d.width);
                  kernels::omp::conv3x3_backward_input(d, g, t.value(weights), gi);
                  add_into(t.nodes_[input.id].grad, gi);
                }
                if (t.nodes_[weights.id].needs_grad || t.nodes_[bias.id].needs_grad) {
                  std::vector<double> gw(d.out_channels * d.in_channels * 9);
                  std::vector<double> gb(d.out_channels);
                  kernels::omp::conv3x3_backward_weights(d, t.value(input), g, gw, gb);
                  if (t.nodes_[weights.id].needs_grad) add_into(t.nodes_[weights.id].grad, gw);
                  if (t.nodes_[bias.id].needs_grad) add_into(t.nodes_[bias.id].grad, gb);
                }
              });
}

Var Tape::mean_pool2(Var input) {
  const Shape si = shape(input);
  const std::size_t c = si.dims[0], h = si.dims[1], w = si.dims[2];
  const std::size_t oh = h / 2, ow = w / 2;
  require(oh >= 1 && ow >= 1, "tape: mean_pool2 input smaller than 2x2");
  const auto& x = value(input);
  std::vector<double> out(c * oh * ow);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const std::size_t base = (ch * h + 2 * y) * w + 2 * xx;
        out[(ch * oh + y) * ow + xx] = 0.25 * (x[base] + x[base + 1] + x[base + w] + x[base + w + 1]);
      }
  return push("mean_pool2", Shape::tensor(c, oh, ow), std::move(out), {input},
              [input, c, h, w, oh, ow](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                auto& gi = t.nodes_[input.id].grad;
                for (std::size_t ch = 0; ch < c; ++ch)
                  for (std::size_t y = 0; y < oh; ++y)
                    for (std::size_t xx = 0; xx < ow; ++xx) {
                      const double v = 0.25 * g[(ch * oh + y) * ow + xx];
                      const std::size_t base = (ch * h + 2 * y) * w + 2 * xx;
                      gi[base] += v;
                      gi[base + 1] += v;
                      gi[base + w] += v;
                      gi[base + w + 1] += v;
                    }
              });
}

Var Tape::gram(Var features) {
  const Shape sf = shape(features);
  const std::size_t c = sf.dims[0];
  const std::size_t m = sf.dims[1] * sf.dims[2];
  const double norm = 1.0 / static_cast<double>(c * m);
  std::vector<double> out(c * c);
  kernels::omp::outer_product(value(features), c, m, out);
  for (double& v : out) v *= norm;
  return push("gram", Shape::matrix(c, c), std::move(out), {features}, [features, c, m, norm](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    std::vector<double> sym(c * c);
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) sym[i * c + j] = norm * (g[i * c + j] + g[j * c + i]);
    std::vector<double> gf(c * m);
    kernels::omp::matmul(sym, t.value(features), gf, c, c, m);
    add_into(t.nodes_[features.id].grad, gf);
  });
}

}  // namespace cbm
