#pragma once

// Reverse-mode gradient tape over the small primitive set the neural modules
// need: matrix products, elementwise activations, softmax, 3x3 convolution,
// 2x2 mean pooling and the Gram product.
//
// Values are dense real arrays with up to three dimensions. Matrices use
// {rows, cols, 1}; images and feature maps use {channels, height, width}.
// A Tape is single-owner; do not share one across threads.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace cbm {

struct Shape {
  std::array<std::size_t, 3> dims{1, 1, 1};

  static Shape scalar() { return {}; }
  static Shape matrix(std::size_t rows, std::size_t cols) { return {{rows, cols, 1}}; }
  static Shape tensor(std::size_t c, std::size_t h, std::size_t w) { return {{c, h, w}}; }

  std::size_t rows() const { return dims[0]; }
  std::size_t cols() const { return dims[1]; }
  std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

struct Var {
  std::size_t id = 0;
};

class Tape {
 public:
  Var constant(Shape shape, std::vector<double> value);
  Var parameter(Shape shape, std::vector<double> value);

  const Shape& shape(Var v) const { return nodes_[v.id].shape; }
  const std::vector<double>& value(Var v) const { return nodes_[v.id].value; }
  const std::vector<double>& grad(Var v) const { return nodes_[v.id].grad; }
  double scalar(Var v) const { return nodes_[v.id].value.front(); }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(output)/d(output) = 1 and replays adjoints newest-first.
  void backward(Var output);
  // Node ids in the order the last backward() visited them.
  const std::vector<std::size_t>& backward_trace() const { return trace_; }
  std::string_view op_name(Var v) const { return nodes_[v.id].op; }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  // Adds a column vector (rows×1) to every column of m.
  Var add_column(Var m, Var column);
  // Multiplies column j of m (rows×cols) by row(0, j) of a 1×cols row.
  Var scale_columns(Var m, Var row);
  Var slice_rows(Var m, std::size_t begin, std::size_t end);
  Var concat_rows(std::span<const Var> parts);

  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);

  // Softmax down each column of a matrix.
  Var softmax_columns(Var m);
  // Mean over columns of -log softmax(logits)[label, column].
  Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels);

  Var sum(Var a);
  Var squared_norm(Var a);

  // input {C,H,W}, weights {O, C*9, 1} out-channel-major, bias {O, 1, 1}.
  Var conv3x3(Var input, Var weights, Var bias);
  // 2x2 mean pooling with stride 2; odd trailing rows/columns are dropped.
  Var mean_pool2(Var input);
  // features {C,H,W} → {C,C} with G = F·Fᵀ / (C·H·W).
  Var gram(Var features);

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::function<void(Tape&, std::size_t)> backward;
    bool needs_grad = false;
    std::string_view op;
  };

  Var push(std::string_view op, Shape shape, std::vector<double> value, std::initializer_list<Var> inputs,
           std::function<void(Tape&, std::size_t)> backward);
  Var push(std::string_view op, Shape shape, std::vector<double> value, bool needs_grad,
           std::function<void(Tape&, std::size_t)> backward);
  Node& node(Var v) { return nodes_[v.id]; }

  std::vector<Node> nodes_;
  std::vector<std::size_t> trace_;
};

}  // namespace cbm
