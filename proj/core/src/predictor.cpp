#include "soco_rcl/predictor.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <random>

namespace soco::ml {

namespace {

enum Tensor { kW1x, kW1h, kB1, kW2x, kW2h, kB2, kWo, kBo, kWs };

void put_le(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(buf, 8);
}

double get_le(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) throw IoError("checkpoint truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

Predictor::Predictor(PredictorShape shape) : shape_(shape) {
  if (shape.n < 1 || shape.m < 1 || shape.p < 1 || shape.q < 0 || shape.hidden < 1) {
    throw ConfigError("predictor shape needs n, m, p, hidden >= 1 and q >= 0");
  }
  const int in = shape.input_dim();
  const int h = shape.hidden;
  params_ = {Matrix::Zero(h, in), Matrix::Zero(h, h), Matrix::Zero(h, 1), Matrix::Zero(h, h), Matrix::Zero(h, h),
             Matrix::Zero(h, 1), Matrix::Zero(shape.n, h), Matrix::Zero(shape.n, 1), Matrix::Zero(shape.n, in)};
}

Predictor Predictor::zeros(PredictorShape shape) { return Predictor(shape); }

Predictor::Predictor(PredictorShape shape, std::uint64_t seed) : Predictor(shape) {
  seed_ = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int k : {kW1x, kW1h, kW2x, kW2h, kWo, kWs}) {
    Matrix& w = params_[static_cast<std::size_t>(k)];
    const double fan_in = static_cast<double>(w.cols());
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng) / fan_in;
    }
  }
}

const char* Predictor::param_name(int k) {
  static const char* names[] = {"W1x", "W1h", "b1", "W2x", "W2h", "b2", "Wo", "bo", "Ws"};
  return names[k];
}

Eigen::Index Predictor::num_params() const {
  Eigen::Index s = 0;
  for (const auto& p : params_) s += p.size();
  return s;
}

Vector Predictor::flat() const {
  Vector w(num_params());
  Eigen::Index o = 0;
  for (const auto& p : params_) {
    w.segment(o, p.size()) = p.reshaped();
    o += p.size();
  }
  return w;
}

void Predictor::set_flat(const Vector& w) {
  if (w.size() != num_params()) throw DimensionError("flat parameter vector has wrong size", static_cast<int>(w.size()));
  Eigen::Index o = 0;
  for (auto& p : params_) {
    p.reshaped() = w.segment(o, p.size());
    o += p.size();
  }
}

Predictor::State Predictor::initial_state(const std::vector<ActionVector>& initial_actions) const {
  if (static_cast<int>(initial_actions.size()) != shape_.p) {
    throw DimensionError("predictor memory differs from number of initial actions", static_cast<int>(initial_actions.size()));
  }
  return State{Matrix::Zero(shape_.hidden, 1), Matrix::Zero(shape_.hidden, 1), initial_actions};
}

Matrix Predictor::encode(const State& s, int t, const std::vector<std::pair<int, Context>>& revealed) const {
  const int n = shape_.n;
  const int m = shape_.m;
  Matrix u = Matrix::Zero(shape_.input_dim(), 1);
  for (int i = 0; i < shape_.p; ++i) u.block(i * n, 0, n, 1) = s.last[static_cast<std::size_t>(shape_.p - 1 - i)];
  const int base = shape_.p * n;
  for (const auto& [tau, y] : revealed) {
    const int j = t - tau;
    if (j < 0 || j > shape_.q) throw DimensionError("revealed context outside the predictor's delay window", tau);
    if (y.size() != m) throw DimensionError("context dimension differs from predictor shape", tau);
    u(base + j * (m + 1), 0) = 1.0;
    u.block(base + j * (m + 1) + 1, 0, m, 1) = y;
  }
  return u;
}

ActionVector Predictor::step(State& s, const Matrix& u, const ActionSpace& space) const {
  const auto& w = params_;
  // Same operation order as the tape recording, so both paths agree bitwise.
  Matrix a = w[kW1x] * u;
  Matrix b = w[kW1h] * s.h1;
  Matrix z = a + b;
  z = Matrix(z + w[kB1]);
  s.h1 = z.array().tanh().matrix();
  a = w[kW2x] * s.h1;
  b = w[kW2h] * s.h2;
  z = a + b;
  z = Matrix(z + w[kB2]);
  s.h2 = z.array().tanh().matrix();
  a = w[kWo] * s.h2;
  z = a + w[kBo];
  b = w[kWs] * u;
  z = Matrix(z + b);
  const Matrix out = z.cwiseMax(space.lower).cwiseMin(space.upper);
  ActionVector x = out.col(0);
  s.last.erase(s.last.begin());
  s.last.push_back(x);
  return x;
}

std::vector<ActionVector> Predictor::forward(const ProblemInstance& instance, const DelaySchedule& schedule) const {
  PredictorAdvisor adv(*this);
  adv.reset(rcl::EpisodeInfo{instance.horizon(), instance.initial_actions, instance.space});
  std::vector<ActionVector> out;
  for (int t = 1; t <= instance.horizon(); ++t) {
    std::vector<std::pair<int, Context>> rev;
    for (int tau : schedule.revealed_at(t)) rev.emplace_back(tau, instance.context(tau));
    out.push_back(adv.advise(t, rev));
  }
  return out;
}

Predictor::Recorded Predictor::record(GradientTape& tape, const ProblemInstance& instance,
                                      const DelaySchedule& schedule) const {
  Recorded r;
  for (int k = 0; k < kNumTensors; ++k) r.params.push_back(tape.variable(params_[static_cast<std::size_t>(k)], param_name(k)));
  const auto P = [&](int k) { return r.params[static_cast<std::size_t>(k)]; };
  State s = initial_state(instance.initial_actions);
  std::vector<GradientTape::Node> last;
  for (const auto& x : instance.initial_actions) last.push_back(tape.constant(x, "x0"));
  GradientTape::Node h1 = tape.constant(s.h1, "h1_0");
  GradientTape::Node h2 = tape.constant(s.h2, "h2_0");
  const int base = shape_.p * shape_.n;
  for (int t = 1; t <= instance.horizon(); ++t) {
    std::vector<std::pair<int, Context>> rev;
    for (int tau : schedule.revealed_at(t)) rev.emplace_back(tau, instance.context(tau));
    const Matrix full = encode(s, t, rev);
    std::vector<GradientTape::Node> parts;
    for (int i = 0; i < shape_.p; ++i) parts.push_back(last[static_cast<std::size_t>(shape_.p - 1 - i)]);
    parts.push_back(tape.constant(full.bottomRows(full.rows() - base), "ctx"));
    const auto u = tape.concat(parts);
    h1 = tape.tanh(tape.add(tape.add(tape.matmul(P(kW1x), u), tape.matmul(P(kW1h), h1)), P(kB1)));
    h2 = tape.tanh(tape.add(tape.add(tape.matmul(P(kW2x), h1), tape.matmul(P(kW2h), h2)), P(kB2)));
    const auto o = tape.add(tape.add(tape.matmul(P(kWo), h2), P(kBo)), tape.matmul(P(kWs), u));
    const auto x = tape.clip(o, instance.space.lower, instance.space.upper);
    r.advice.push_back(x);
    last.erase(last.begin());
    last.push_back(x);
    s.last.erase(s.last.begin());
    s.last.push_back(tape.value(x).col(0));
  }
  return r;
}

void Predictor::save(const std::filesystem::path& path, const std::string& mode) const {
  nlohmann::json header;
  header["format"] = "soco-rcl-predictor";
  header["version"] = 1;
  header["shape"] = {{"n", shape_.n}, {"m", shape_.m}, {"p", shape_.p}, {"q", shape_.q}, {"hidden", shape_.hidden}};
  header["seed"] = seed_;
  header["mode"] = mode;
  header["layout"] = "row-major";
  header["tensors"] = nlohmann::json::array();
  for (int k = 0; k < kNumTensors; ++k) {
    const auto& p = params_[static_cast<std::size_t>(k)];
    header["tensors"].push_back({{"name", param_name(k)}, {"rows", p.rows()}, {"cols", p.cols()}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << header.dump() << "\n";
  for (const auto& p : params_) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.cols(); ++j) put_le(out, p(i, j));
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Predictor Predictor::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": missing checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": bad checkpoint header: " + e.what());
  }
  if (header.value("format", "") != "soco-rcl-predictor") throw IoError(path.string() + ": not a predictor checkpoint");
  const auto& s = header.at("shape");
  PredictorShape shape{s.at("n").get<int>(), s.at("m").get<int>(), s.at("p").get<int>(), s.at("q").get<int>(),
                       s.at("hidden").get<int>()};
  Predictor pred(shape);
  pred.seed_ = header.value("seed", std::uint64_t{0});
  const auto& tensors = header.at("tensors");
  if (tensors.size() != static_cast<std::size_t>(kNumTensors)) throw IoError(path.string() + ": wrong tensor count");
  for (int k = 0; k < kNumTensors; ++k) {
    auto& p = pred.params_[static_cast<std::size_t>(k)];
    if (tensors[static_cast<std::size_t>(k)].at("rows").get<Eigen::Index>() != p.rows() ||
        tensors[static_cast<std::size_t>(k)].at("cols").get<Eigen::Index>() != p.cols()) {
      throw IoError(path.string() + ": tensor " + param_name(k) + " has unexpected shape");
    }
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.cols(); ++j) p(i, j) = get_le(in);
    }
  }
  return pred;
}

void PredictorAdvisor::reset(const rcl::EpisodeInfo& info) {
  state_ = predictor_.initial_state(info.initial_actions);
  space_ = info.space;
  if (space_.dim() != predictor_.shape().n) throw DimensionError("action space differs from predictor output", space_.dim());
}

ActionVector PredictorAdvisor::advise(int t, const std::vector<std::pair<int, Context>>& newly_revealed) {
  const Matrix u = predictor_.encode(state_, t, newly_revealed);
  return predictor_.step(state_, u, space_);
}

}  // namespace soco::ml
