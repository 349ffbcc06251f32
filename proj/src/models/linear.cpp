#include <cmath>
#include <numeric>

#include "fmer/error.hpp"
#include "fmer/rng.hpp"
#include "internal.hpp"

namespace fmer {

namespace detail {

namespace {

constexpr std::size_t K = kNumClasses;

// Four dot products against one row at once.
inline ClassScores dot4(const double* w, std::size_t dim, std::span<const float> x) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  const double* w1 = w + dim;
  const double* w2 = w + 2 * dim;
  const double* w3 = w + 3 * dim;
  for (std::size_t j = 0; j < dim; ++j) {
    const double v = x[j];
    s0 += w[j] * v;
    s1 += w1[j] * v;
    s2 += w2[j] * v;
    s3 += w3[j] * v;
  }
  return {s0, s1, s2, s3};
}

double squared_norm(std::span<const double> v) {
  double s = 0;
  for (const double x : v) s += x * x;
  return s;
}

}  // namespace

Standardizer Standardizer::fit(const LabeledDataset& ds) {
  Standardizer z;
  const std::size_t n = ds.size();
  z.mean.assign(ds.dim, 0.0);
  z.scale.assign(ds.dim, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = ds.row(i);
    for (std::size_t j = 0; j < ds.dim; ++j) z.mean[j] += r[j];
  }
  for (auto& m : z.mean) m /= static_cast<double>(n);
  std::vector<double> var(ds.dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = ds.row(i);
    for (std::size_t j = 0; j < ds.dim; ++j) {
      const double d = r[j] - z.mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < ds.dim; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    z.scale[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  return z;
}

void Standardizer::apply(std::span<const float> row, std::span<float> out) const {
  for (std::size_t j = 0; j < row.size(); ++j) {
    out[j] = static_cast<float>((row[j] - mean[j]) * scale[j]);
  }
}

LabeledDataset Standardizer::apply(const LabeledDataset& ds) const {
  LabeledDataset out = ds;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    apply(ds.row(i), std::span<float>(out.features.data() + i * ds.dim, ds.dim));
  }
  return out;
}

ClassScores linear_margins(const LinearParams& params, std::span<const float> row) {
  ClassScores scores;
  if (params.standardizer) {
    std::vector<float> z(row.size());
    params.standardizer->apply(row, z);
    scores = dot4(params.weights.data(), params.dim, z);
  } else {
    scores = dot4(params.weights.data(), params.dim, row);
  }
  for (std::size_t k = 0; k < K; ++k) scores[k] += params.bias[k];
  return scores;
}

// Pegasos-style subgradient descent on
//   strength/2 ||w||^2 + 1/N sum max(0, 1 - y (w . x + b))
// per class, with the bias folded in as a constant input of 1 (so it is
// penalised too). Each weight vector is kept as scale * v so the shrink step
// is O(1).
LinearParams fit_linear_svm(const LabeledDataset& ds, double strength, std::uint64_t seed,
                            int epochs) {
  if (!(strength > 0)) throw ValidationError("LSVM strength must be positive");
  if (epochs < 1) throw ValidationError("LSVM needs at least one epoch");
  const std::size_t n = ds.size();
  const std::size_t dim = ds.dim;

  std::vector<double> v(K * dim, 0.0);
  std::array<double, K> v_bias{};
  std::array<double, K> scale;
  scale.fill(1.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x15u));

  std::uint64_t step = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (const std::size_t i : order) {
      ++step;
      const auto x = ds.row(i);
      const double eta = 1.0 / (strength * static_cast<double>(step));
      const double shrink = 1.0 - 1.0 / static_cast<double>(step);
      const ClassScores raw = dot4(v.data(), dim, x);
      const int label = class_index(ds.labels[i]);
      for (std::size_t k = 0; k < K; ++k) {
        const double y = static_cast<int>(k) == label ? 1.0 : -1.0;
        const double margin = scale[k] * (raw[k] + v_bias[k]);
        double* vk = v.data() + k * dim;
        scale[k] *= shrink;
        if (scale[k] < 1e-9) {
          // fold the scale back into v (or reset it on the very first step)
          for (std::size_t j = 0; j < dim; ++j) vk[j] *= scale[k];
          v_bias[k] *= scale[k];
          scale[k] = 1.0;
        }
        if (y * margin < 1.0) {
          const double c = eta * y / scale[k];
          for (std::size_t j = 0; j < dim; ++j) vk[j] += c * x[j];
          v_bias[k] += c;
        }
      }
    }
  }

  LinearParams out;
  out.dim = dim;
  out.weights.resize(K * dim);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < dim; ++j) out.weights[k * dim + j] = scale[k] * v[k * dim + j];
    out.bias[k] = scale[k] * v_bias[k];
  }
  return out;
}

LinearParams fit_logistic(const LabeledDataset& ds, double ridge, int max_iterations,
                          double tolerance) {
  if (!(ridge > 0)) throw ValidationError("LR ridge must be positive");
  const std::size_t dim = ds.dim;
  const std::size_t size = K * dim + K;

  // FISTA with backtracking and function-value restart.
  std::vector<double> x(size, 0.0), x_prev(size, 0.0), y(size), g(size), x_new(size);
  double f_x = logistic_objective(ds, x, ridge, {});
  double lipschitz = 1.0;
  double t = 1.0;
  for (int iter = 0; iter < max_iterations; ++iter) {
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    for (std::size_t i = 0; i < size; ++i) y[i] = x[i] + beta * (x[i] - x_prev[i]);
    const double f_y = logistic_objective(ds, y, ridge, g);
    const double g2 = squared_norm(g);
    if (std::sqrt(g2) <= tolerance) {
      x = y;
      break;
    }

    lipschitz *= 0.8;
    double f_new = 0;
    for (;;) {
      for (std::size_t i = 0; i < size; ++i) x_new[i] = y[i] - g[i] / lipschitz;
      f_new = logistic_objective(ds, x_new, ridge, {});
      if (f_new <= f_y - 0.5 * g2 / lipschitz || lipschitz > 1e300) break;
      lipschitz *= 2.0;
    }

    if (f_new > f_x) {
      // momentum overshot: drop it and retry from x
      x_prev = x;
      t = 1.0;
      continue;
    }
    x_prev.swap(x);
    x.swap(x_new);
    f_x = f_new;
    t = t_next;
  }

  LinearParams out;
  out.dim = dim;
  out.weights.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(K * dim));
  for (std::size_t k = 0; k < K; ++k) out.bias[k] = x[K * dim + k];
  return out;
}

}  // namespace detail

double logistic_objective(const LabeledDataset& ds, std::span<const double> params, double ridge,
                          std::span<double> grad) {
  constexpr std::size_t K = kNumClasses;
  const std::size_t dim = ds.dim;
  const std::size_t n = ds.size();
  if (params.size() != K * dim + K) {
    throw DimensionMismatch("logistic parameter vector has wrong length");
  }
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  const double* w = params.data();
  const double* b = params.data() + K * dim;
  const double inv_n = 1.0 / static_cast<double>(n);

  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = ds.row(i);
    ClassScores z = detail::dot4(w, dim, x);
    double zmax = -INFINITY;
    for (std::size_t k = 0; k < K; ++k) {
      z[k] += b[k];
      zmax = std::max(zmax, z[k]);
    }
    double sum = 0;
    ClassScores p;
    for (std::size_t k = 0; k < K; ++k) {
      p[k] = std::exp(z[k] - zmax);
      sum += p[k];
    }
    const auto label = static_cast<std::size_t>(class_index(ds.labels[i]));
    loss += zmax + std::log(sum) - z[label];
    if (!want_grad) continue;
    for (std::size_t k = 0; k < K; ++k) {
      const double coef = (p[k] / sum - (k == label ? 1.0 : 0.0)) * inv_n;
      double* gk = grad.data() + k * dim;
      for (std::size_t j = 0; j < dim; ++j) gk[j] += coef * x[j];
      grad[K * dim + k] += coef;
    }
  }
  loss *= inv_n;

  double penalty = 0.0;
  for (std::size_t j = 0; j < K * dim; ++j) {
    penalty += w[j] * w[j];
    if (want_grad) grad[j] += ridge * w[j];
  }
  return loss + 0.5 * ridge * penalty;
}

}  // namespace fmer
