#include "soco_rcl/bench.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace soco::bench {

Family parse_family(const std::string& name) {
  if (name == "random-walk") return Family::random_walk;
  if (name == "sinusoid") return Family::sinusoid;
  if (name == "adversarial-spike") return Family::adversarial_spike;
  throw ConfigError("unknown family '" + name + "' (expected random-walk, sinusoid or adversarial-spike)");
}

std::string to_string(Family family) {
  switch (family) {
    case Family::random_walk: return "random-walk";
    case Family::sinusoid: return "sinusoid";
    case Family::adversarial_spike: return "adversarial-spike";
  }
  return "random-walk";
}

std::vector<DemandWindow> gen_synthetic(std::uint64_t seed, Family family, int count, int horizon, int n, double lo,
                                        double hi) {
  if (count < 0 || horizon < 1 || n < 1) throw ConfigError("synthetic data needs count >= 0, T >= 1, n >= 1");
  if (!(lo < hi)) throw ConfigError("synthetic demand bounds need lo < hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double width = hi - lo;
  auto clamp = [&](double v) { return std::clamp(v, lo, hi); };

  std::vector<DemandWindow> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    std::vector<Vector> series;
    switch (family) {
      case Family::random_walk: {
        Vector w(n);
        for (int i = 0; i < n; ++i) w[i] = lo + width * unif(rng);
        series.push_back(w);
        for (int t = 1; t <= horizon; ++t) {
          for (int i = 0; i < n; ++i) w[i] = clamp(w[i] + 0.1 * width * gauss(rng));
          series.push_back(w);
        }
        break;
      }
      case Family::sinusoid: {
        Vector phase(n), amp(n), mid(n);
        for (int i = 0; i < n; ++i) {
          phase[i] = 24.0 * unif(rng);
          amp[i] = width * (0.15 + 0.3 * unif(rng));
          mid[i] = lo + width * (0.35 + 0.3 * unif(rng));
        }
        for (int t = 0; t <= horizon; ++t) {
          Vector w(n);
          for (int i = 0; i < n; ++i) {
            const double s = std::sin(2.0 * M_PI * (t + phase[i]) / 24.0);
            w[i] = clamp(mid[i] + amp[i] * s + 0.05 * width * gauss(rng));
          }
          series.push_back(w);
        }
        break;
      }
      case Family::adversarial_spike: {
        const int offset = unif(rng) < 0.5 ? 0 : 1;
        for (int t = 0; t <= horizon; ++t) {
          Vector w(n);
          const bool high = (t + offset) % 2 == 1;
          for (int i = 0; i < n; ++i) {
            const double jitter = 0.05 * width * unif(rng);
            w[i] = high ? hi - jitter : lo + jitter;
          }
          series.push_back(w);
        }
        break;
      }
    }
    DemandWindow win;
    win.initial = series.front();
    win.demands.assign(series.begin() + 1, series.end());
    out.push_back(std::move(win));
  }
  return out;
}

Contaminated contaminate(const std::vector<ProblemInstance>& instances, double p_c, double sigma, std::uint64_t seed) {
  if (!(p_c >= 0.0 && p_c <= 1.0)) throw ConfigError("contamination fraction must lie in [0, 1]");
  if (!(sigma >= 0.0)) throw ConfigError("contamination sigma must be >= 0");
  Contaminated out{instances, {}};
  const auto count = instances.size();
  const auto k = static_cast<std::size_t>(std::floor(p_c * static_cast<double>(count) + 1e-12));
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  out.modified.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(k, count)));
  std::sort(out.modified.begin(), out.modified.end());
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i : out.modified) {
    for (auto& y : out.instances[i].contexts) {
      for (Eigen::Index j = 0; j < y.size(); ++j) y[j] = std::clamp(y[j] + sigma * noise(rng), 0.0, 1.0);
    }
  }
  return out;
}

namespace {

Matrix random_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) m(i, j) = g(rng);
  }
  return Eigen::HouseholderQR<Matrix>(m).householderQ() * Matrix::Identity(n, n);
}

Matrix random_with_norm(int n, double norm, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) a(i, j) = u(rng);
  }
  const double s = spectral_norm(a);
  return s > 0.0 ? Matrix(a * (norm / s)) : Matrix(Matrix::Identity(n, n) * norm);
}

}  // namespace

std::vector<StressCase> gen_stress_suite(std::uint64_t seed, int count, int horizon) {
  if (count < 0 || horizon < 1) throw ConfigError("stress suite needs count >= 0 and T >= 1");
  static const int dims[] = {1, 2, 4};
  static const int mems[] = {1, 2};
  static const int delays[] = {0, 1, 3};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<StressCase> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const int n = dims[k % 3];
    const int p = mems[(k / 3) % 2];
    const int q = delays[(k / 6) % 3];
    const int variant = (k / 18) % 3;

    StressCase sc;
    const bool drone = p == 1 && variant == 2;
    const double lo = (drone || unif(rng) < 0.5) ? -1.0 : 0.0;
    const double hi = 1.0;
    sc.instance.space = ActionSpace::box(n, lo, hi);

    Matrix weight = Matrix::Identity(n, n);
    if (n > 1) {
      const Matrix r = random_orthogonal(n, rng);
      Vector eig(n);
      for (int i = 0; i < n; ++i) eig[i] = 0.5 + 1.5 * unif(rng);
      weight = r * eig.asDiagonal() * r.transpose();
      weight = 0.5 * (weight + weight.transpose());
    }
    const double scale = 0.05 + 1.95 * unif(rng);
    sc.model.hitting = std::make_shared<const QuadraticTracking>(scale, weight);

    if (p == 1) {
      if (variant == 0) {
        sc.model.switching = std::make_shared<const IdentityMemory>(n);
      } else if (variant == 1) {
        sc.model.switching = LinearMemory::single(random_with_norm(n, 0.5 + 0.7 * unif(rng), rng));
      } else {
        sc.model.switching = std::make_shared<const DroneMemory>(n, 0.1 * unif(rng), 0.5 * unif(rng), 1.0);
      }
    } else {
      std::vector<Matrix> blocks{random_with_norm(n, 0.5 + 0.5 * unif(rng), rng),
                                 random_with_norm(n, 0.5 * unif(rng), rng)};
      sc.model.switching = std::make_shared<const LinearMemory>(std::move(blocks));
    }

    const double width = hi - lo;
    for (int i = 0; i < p; ++i) {
      Vector x(n);
      for (int j = 0; j < n; ++j) x[j] = lo + width * unif(rng);
      sc.instance.initial_actions.push_back(x);
    }
    Vector y(n);
    for (int j = 0; j < n; ++j) y[j] = lo + width * unif(rng);
    for (int t = 1; t <= horizon; ++t) {
      for (int j = 0; j < n; ++j) {
        y[j] = std::clamp(y[j] + 0.3 * width * gauss(rng), lo - 0.25 * width, hi + 0.25 * width);
      }
      sc.instance.contexts.push_back(y);
    }
    if (q == 0) {
      sc.schedule = DelaySchedule::no_delay(horizon);
    } else if (variant == 0) {
      sc.schedule = DelaySchedule::identical(horizon, q);
    } else {
      sc.schedule = DelaySchedule::random(horizon, q, rng());
    }
    sc.instance.validate();
    out.push_back(std::move(sc));
  }
  return out;
}

std::vector<Context> noisy_predictions(const ProblemInstance& instance, double err, std::uint64_t seed) {
  if (!(err >= 0.0)) throw ConfigError("prediction error must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-err, err);
  std::vector<Context> out;
  out.reserve(instance.contexts.size());
  for (const auto& y : instance.contexts) out.push_back(y * (1.0 + u(rng)));
  return out;
}

}  // namespace soco::bench
