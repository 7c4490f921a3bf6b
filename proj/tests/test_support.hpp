#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "navar/autodiff.hpp"
#include "navar/tensor.hpp"

namespace navar::testing {

using numerics::Graph;
using numerics::Tensor;
using numerics::Var;

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.values()) v = u(rng);
  return t;
}

/// |a - n| / max(|a|, |n|), with the denominator floored at 1e-6 so exact
/// zeros on both sides compare equal.
inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

/// Builds a scalar loss from leaves bound to `params`.
using LossBuilder = std::function<Var(Graph&, const std::vector<Var>&)>;

struct GradientCheck {
  double worst = 0.0;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients with central differences for every
/// element of every tensor in `params`.
inline GradientCheck check_gradients(std::vector<Tensor*> params, const LossBuilder& build,
                                     double h = 1e-5) {
  auto evaluate = [&](bool with_grad, std::vector<Tensor>* grads) {
    Graph g;
    std::vector<Var> leaves;
    for (Tensor* p : params) leaves.push_back(g.parameter(*p));
    Var loss = build(g, leaves);
    if (with_grad) {
      g.backward(loss);
      for (Var v : leaves) grads->push_back(g.grad(v));
    }
    return loss.value()[0];
  };
  std::vector<Tensor> analytic;
  evaluate(true, &analytic);

  GradientCheck result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t k = 0; k < params[p]->size(); ++k) {
      const double saved = (*params[p])[k];
      (*params[p])[k] = saved + h;
      const double up = evaluate(false, nullptr);
      (*params[p])[k] = saved - h;
      const double down = evaluate(false, nullptr);
      (*params[p])[k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      result.worst = std::max(result.worst, relative_error(analytic[p][k], numeric));
      ++result.checked;
    }
  }
  return result;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("navar_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace navar::testing
