// Copyright 2026 The shipens Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shipens/fnn.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "shipens/error.hpp"

namespace shipens {

void NetShape::validate() const {
  if (in < 1 || out < 1 || width < 1 || hidden_layers < 1) {
    throw ConfigError("network shape: dimensions and hidden layer count must be >= 1");
  }
}

std::size_t NetShape::param_count() const {
  std::size_t n = 0;
  for (int l = 0; l < layer_count(); ++l) n += static_cast<std::size_t>(fan_out(l)) * (fan_in(l) + 1);
  return n;
}

NetParams::NetParams(const NetShape& s) : shape(s), theta(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.param_count()))) {
  s.validate();
}

std::size_t NetParams::weight_offset(int layer) const {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l) off += static_cast<std::size_t>(shape.fan_out(l)) * (shape.fan_in(l) + 1);
  return off;
}

std::size_t NetParams::bias_offset(int layer) const {
  return weight_offset(layer) + static_cast<std::size_t>(shape.fan_out(layer)) * shape.fan_in(layer);
}

Eigen::Map<const Eigen::MatrixXd> NetParams::W(int layer) const {
  return {theta.data() + weight_offset(layer), shape.fan_out(layer), shape.fan_in(layer)};
}
Eigen::Map<const Eigen::VectorXd> NetParams::b(int layer) const {
  return {theta.data() + bias_offset(layer), shape.fan_out(layer)};
}
Eigen::Map<Eigen::MatrixXd> NetParams::W(int layer) {
  return {theta.data() + weight_offset(layer), shape.fan_out(layer), shape.fan_in(layer)};
}
Eigen::Map<Eigen::VectorXd> NetParams::b(int layer) {
  return {theta.data() + bias_offset(layer), shape.fan_out(layer)};
}

Eigen::MatrixXd forward(const NetParams& p, const Eigen::MatrixXd& x, Tape* tape) {
  if (x.rows() != p.shape.in) {
    throw InvalidArgument("forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                          std::to_string(p.shape.in));
  }
  if (static_cast<std::size_t>(p.theta.size()) != p.shape.param_count()) {
    throw InvalidArgument("forward: parameter vector does not match the shape");
  }
  const int layers = p.shape.layer_count();
  if (tape) {
    tape->shape = p.shape;
    tape->a.resize(static_cast<std::size_t>(layers));
    tape->a[0] = x;
  }
  Eigen::MatrixXd h = x;
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = p.W(l) * h;
    z.colwise() += p.b(l);
    if (l + 1 < layers) {
      h = z.array().tanh().matrix();
      if (tape) tape->a[static_cast<std::size_t>(l + 1)] = h;
    } else {
      h = std::move(z);
    }
  }
  return h;
}

Eigen::MatrixXd backward(const NetParams& p, const Tape& tape, const Eigen::MatrixXd& g, Eigen::VectorXd& grad) {
  const int layers = p.shape.layer_count();
  if (!(tape.shape == p.shape) || tape.a.size() != static_cast<std::size_t>(layers)) {
    throw InvalidArgument("backward: tape does not match the network");
  }
  if (g.rows() != p.shape.out || g.cols() != tape.batch()) throw InvalidArgument("backward: upstream gradient shape");
  if (grad.size() == 0) grad = Eigen::VectorXd::Zero(p.theta.size());
  if (grad.size() != p.theta.size()) throw InvalidArgument("backward: gradient buffer length");

  Eigen::MatrixXd delta = g;
  for (int l = layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd& a = tape.a[static_cast<std::size_t>(l)];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + p.weight_offset(l), p.shape.fan_out(l), p.shape.fan_in(l));
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + p.bias_offset(l), p.shape.fan_out(l));
    gw.noalias() += delta * a.transpose();
    gb += delta.rowwise().sum();
    Eigen::MatrixXd prev = p.W(l).transpose() * delta;
    if (l > 0) prev.array() *= 1.0 - a.array().square();
    delta = std::move(prev);
  }
  return delta;
}

NetParams init_params(const NetShape& shape, Rng& rng) {
  NetParams p(shape);
  for (int l = 0; l < shape.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(shape.fan_in(l)));
    std::uniform_real_distribution<double> uni(-bound, bound);
    auto w = p.W(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uni(rng);
    }
    auto b = p.b(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = uni(rng);
  }
  return p;
}

AdamState::AdamState(std::size_t n, double learning_rate)
    : m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      lr(learning_rate) {}

void adam_step(AdamState& s, Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
  if (grad.size() != theta.size() || s.m.size() != theta.size() || s.v.size() != theta.size()) {
    throw InvalidArgument("adam: length mismatch");
  }
  if (!grad.allFinite()) throw Error(ErrorKind::kTraining, "adam: non-finite gradient");
  ++s.step;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  theta.array() -= s.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.eps);
}

void save_params(const std::filesystem::path& path, const NetParams& p) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  std::fprintf(f, "shipens-net v1\nshape %d %d %d %d tanh\ncount %zu\n", p.shape.in, p.shape.hidden_layers,
               p.shape.width, p.shape.out, static_cast<std::size_t>(p.theta.size()));
  for (Eigen::Index i = 0; i < p.theta.size(); ++i) std::fprintf(f, "%.17g\n", p.theta[i]);
  if (std::fclose(f) != 0) throw IoError("error writing '" + path.string() + "'");
}

NetParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  const std::string src = path.string();
  std::string line;
  if (!std::getline(in, line) || line != "shipens-net v1") throw ParseError(src, 1, "expected 'shipens-net v1'");
  NetShape shape;
  std::string tag, act;
  if (!std::getline(in, line)) throw ParseError(src, 2, "missing shape line");
  {
    std::istringstream ss(line);
    if (!(ss >> tag >> shape.in >> shape.hidden_layers >> shape.width >> shape.out >> act) || tag != "shape" ||
        act != "tanh") {
      throw ParseError(src, 2, "bad shape line");
    }
  }
  std::size_t count = 0;
  if (!std::getline(in, line)) throw ParseError(src, 3, "missing count line");
  {
    std::istringstream ss(line);
    if (!(ss >> tag >> count) || tag != "count") throw ParseError(src, 3, "bad count line");
  }
  try {
    shape.validate();
  } catch (const ConfigError& e) {
    throw ParseError(src, 2, e.what());
  }
  if (count != shape.param_count()) throw ParseError(src, 3, "count does not match shape");
  NetParams p(shape);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw ParseError(src, i + 4, "truncated parameter list");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || ptr != line.data() + line.size()) throw ParseError(src, i + 4, "bad value");
    p.theta[static_cast<Eigen::Index>(i)] = v;
  }
  return p;
}

}  // namespace shipens
