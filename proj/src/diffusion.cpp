#include "semidfl/diffusion.hpp"

#include <numbers>

namespace semidfl {

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw Error("diffusion.H must be positive");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw Error("diffusion betas must satisfy 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.betas_.assign(static_cast<std::size_t>(steps) + 1, 0.0);
  s.alpha_bars_.assign(static_cast<std::size_t>(steps) + 1, 1.0);
  for (int h = 1; h <= steps; ++h) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(h - 1) / (steps - 1);
    const double b = beta_start + frac * (beta_end - beta_start);
    s.betas_[static_cast<std::size_t>(h)] = b;
    s.alpha_bars_[static_cast<std::size_t>(h)] = s.alpha_bars_[static_cast<std::size_t>(h) - 1] * (1.0 - b);
  }
  return s;
}

double NoiseSchedule::alpha_bar(int h) const {
  if (h < 0 || h > steps()) {
    throw Error("timestep " + std::to_string(h) + " outside [0, " + std::to_string(steps()) + "]");
  }
  return alpha_bars_[static_cast<std::size_t>(h)];
}

Optimizer parse_optimizer(std::string_view s) {
  if (s == "sgd") return Optimizer::sgd;
  if (s == "adam") return Optimizer::adam;
  throw Error("unknown optimizer '" + std::string(s) + "'");
}

namespace {

std::vector<int> net_sizes(int dim, int classes, const DiffusionConfig& cfg) {
  std::vector<int> sizes{dim + classes + 1 + cfg.time_embed};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(dim);
  return sizes;
}

}  // namespace

DiffusionModel::DiffusionModel(int dim, int classes, const DiffusionConfig& cfg, std::uint64_t seed)
    : dim_(dim),
      classes_(classes),
      time_embed_(cfg.time_embed),
      schedule_(NoiseSchedule::linear(cfg.steps, cfg.beta_start, cfg.beta_end)),
      layout_(net_sizes(dim, classes, cfg)) {
  if (cfg.time_embed < 0 || cfg.time_embed % 2 != 0) {
    throw Error("diffusion.time_embed must be a non-negative even number");
  }
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(Purpose::init), 0xd1ffULL}));
  params_ = {layout_.tag("diffusion"), layout_.init(rng)};
}

void DiffusionModel::set_params(ParamVector p) {
  if (!p.combinable_with(params_)) throw Error("diffusion layout mismatch: " + p.layout);
  params_ = std::move(p);
}

Matrix DiffusionModel::net_input(const Matrix& xh, std::span<const int> cls,
                                 std::span<const int> steps) const {
  const auto n = xh.cols();
  if (xh.rows() != dim_) throw Error("diffusion input has wrong dimension");
  if (static_cast<Eigen::Index>(cls.size()) != n || static_cast<Eigen::Index>(steps.size()) != n) {
    throw Error("diffusion input: class/timestep count mismatch");
  }
  Matrix in = Matrix::Zero(layout_.input_dim(), n);
  in.topRows(dim_) = xh;
  const int half = time_embed_ / 2;
  for (Eigen::Index k = 0; k < n; ++k) {
    const int c = cls[static_cast<std::size_t>(k)];
    if (c < 0 || c > classes_) throw Error("conditioning class out of range");
    in(dim_ + c, k) = 1.0;
    // Fourier features of the normalised timestep.
    const double t = static_cast<double>(steps[static_cast<std::size_t>(k)]) / schedule_.steps();
    for (int f = 0; f < half; ++f) {
      const double w = std::numbers::pi * static_cast<double>(1 << f) * t;
      in(dim_ + classes_ + 1 + 2 * f, k) = std::sin(w);
      in(dim_ + classes_ + 2 + 2 * f, k) = std::cos(w);
    }
  }
  return in;
}

Matrix DiffusionModel::predict_noise(const Matrix& xh, std::span<const int> cls,
                                     std::span<const int> steps, MlpTape* tape) const {
  return mlp_forward(layout_, params_.values, net_input(xh, cls, steps), tape);
}

NoiseDraw draw_noise(const DiffusionModel& m, std::span<const Sample> batch, double p_uncond,
                     Rng& rng) {
  NoiseDraw d;
  const auto n = static_cast<Eigen::Index>(batch.size());
  std::uniform_int_distribution<int> step(1, m.schedule().steps());
  std::bernoulli_distribution drop(p_uncond);
  std::normal_distribution<double> normal;
  d.eps.resize(m.dim(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& s = batch[static_cast<std::size_t>(k)];
    d.steps.push_back(step(rng));
    int c = s.label.value_or(m.null_class());
    if (drop(rng)) c = m.null_class();
    d.classes.push_back(c);
    for (int i = 0; i < m.dim(); ++i) d.eps(i, k) = normal(rng);
  }
  return d;
}

namespace {

Matrix noised_batch(const NoiseSchedule& schedule, std::span<const Sample> batch, const NoiseDraw& draw) {
  Matrix xh(draw.eps.rows(), draw.eps.cols());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    xh.col(col) = forward_noise(schedule, batch[k].features, draw.steps[k], draw.eps.col(col));
  }
  return xh;
}

}  // namespace

double diffusion_objective(const NoisePredictor& predict, const NoiseSchedule& schedule,
                           std::span<const Sample> batch, const NoiseDraw& draw) {
  if (batch.empty()) throw Error("diffusion loss: empty batch");
  const Matrix xh = noised_batch(schedule, batch, draw);
  const Matrix r = predict(xh, draw.classes, draw.steps) - draw.eps;
  return r.squaredNorm() / static_cast<double>(batch.size());
}

LossGrad diffusion_loss_and_grad(const DiffusionModel& m, std::span<const Sample> batch,
                                 const NoiseDraw& draw) {
  if (batch.empty()) throw Error("diffusion loss: empty batch");
  const Matrix xh = noised_batch(m.schedule(), batch, draw);
  MlpTape tape;
  const Matrix r = m.predict_noise(xh, draw.classes, draw.steps, &tape) - draw.eps;
  const double n = static_cast<double>(batch.size());
  LossGrad out;
  out.loss = r.squaredNorm() / n;
  Matrix grad_out = (2.0 / n) * r;
  out.grad = {m.params().layout, mlp_backward(m.layout(), m.params().values, tape, grad_out)};
  return out;
}

LossGrad diffusion_loss_and_grad(const DiffusionModel& m, std::span<const Sample> batch,
                                 double p_uncond, std::uint64_t seed) {
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(Purpose::diffusion_train)}));
  return diffusion_loss_and_grad(m, batch, draw_noise(m, batch, p_uncond, rng));
}

void train_diffusion(DiffusionModel& m, std::span<const Sample> data, const DiffusionConfig& cfg,
                     AdamState& opt, std::uint64_t seed) {
  if (data.empty() || cfg.iters <= 0) return;
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(Purpose::diffusion_train)}));
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::vector<Sample> batch(static_cast<std::size_t>(cfg.batch));
  ParamVector p = m.params();
  for (int it = 0; it < cfg.iters; ++it) {
    for (auto& s : batch) s = data[pick(rng)];
    const auto draw = draw_noise(m, batch, cfg.p_uncond, rng);
    const auto lg = diffusion_loss_and_grad(m, batch, draw);
    if (cfg.optimizer == Optimizer::adam) {
      adam_step(p.values, lg.grad.values, opt, cfg.lr);
    } else {
      p.values -= cfg.lr * lg.grad.values;
    }
    m.set_params(p);
  }
}

Matrix sample_from(const DiffusionModel& m, Matrix x, std::span<const int> cls, double guidance,
                   int sample_steps) {
  const int H = m.schedule().steps();
  if (sample_steps < 1 || sample_steps > H) {
    throw Error("sample_steps must lie in [1, " + std::to_string(H) + "]");
  }
  const auto n = x.cols();
  // Conditional and unconditional branches share one forward pass.
  std::vector<int> both_cls(cls.begin(), cls.end());
  both_cls.insert(both_cls.end(), static_cast<std::size_t>(n), m.null_class());
  std::vector<int> both_steps(static_cast<std::size_t>(2 * n));
  Matrix both_x(m.dim(), 2 * n);

  for (int k = sample_steps; k >= 1; --k) {
    const int h = static_cast<int>(std::lround(static_cast<double>(k) * H / sample_steps));
    const int h_next = static_cast<int>(std::lround(static_cast<double>(k - 1) * H / sample_steps));
    Matrix eps;
    if (guidance == 0.0) {
      std::vector<int> steps(static_cast<std::size_t>(n), h);
      eps = m.predict_noise(x, cls, steps);
    } else {
      std::fill(both_steps.begin(), both_steps.end(), h);
      both_x.leftCols(n) = x;
      both_x.rightCols(n) = x;
      const Matrix e = m.predict_noise(both_x, both_cls, both_steps);
      eps = (1.0 + guidance) * e.leftCols(n) - guidance * e.rightCols(n);
    }
    const double ab = m.schedule().alpha_bar(h);
    const double ab_next = m.schedule().alpha_bar(h_next);
    const Matrix x0 = (x - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
    x = std::sqrt(ab_next) * x0 + std::sqrt(1.0 - ab_next) * eps;
  }
  return x;
}

namespace {

Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Matrix z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal(rng);
  }
  return z;
}

}  // namespace

Vector sample(const DiffusionModel& m, int c, double guidance, int sample_steps, std::uint64_t seed) {
  if (c < 0 || c >= m.classes()) throw Error("sample: class out of range");
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(Purpose::generate)}));
  const int cls[1] = {c};
  return sample_from(m, gaussian_matrix(rng, m.dim(), 1), cls, guidance, sample_steps).col(0);
}

std::vector<Sample> generate_dataset(const DiffusionModel& m, int per_class, double guidance,
                                     int sample_steps, std::uint64_t seed) {
  if (per_class < 1) throw Error("generate_dataset: per_class must be >= 1");
  std::vector<int> cls;
  for (int c = 0; c < m.classes(); ++c) cls.insert(cls.end(), static_cast<std::size_t>(per_class), c);
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(Purpose::generate)}));
  const auto n = static_cast<Eigen::Index>(cls.size());
  const Matrix x = sample_from(m, gaussian_matrix(rng, m.dim(), n), cls, guidance, sample_steps);
  std::vector<Sample> out;
  out.reserve(cls.size());
  for (Eigen::Index k = 0; k < n; ++k) out.push_back({x.col(k), cls[static_cast<std::size_t>(k)]});
  return out;
}

}  // namespace semidfl
