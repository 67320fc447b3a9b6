#include "fdtk/probe.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fdtk/rng.hpp"

namespace fdtk {
namespace {

void check_head(const MlpHead& head) {
  if (head.widths.size() < 2 || head.widths.back() != 1)
    throw ShapeError("head widths must be [D, hidden..., 1]");
  if (head.weights.size() != head.widths.size() - 1 || head.biases.size() != head.weights.size())
    throw ShapeError("head has inconsistent layer counts");
  for (std::size_t l = 0; l < head.weights.size(); ++l) {
    if (head.weights[l].rows() != head.widths[l + 1] || head.weights[l].cols() != head.widths[l])
      throw ShapeError("layer " + std::to_string(l) + " weight shape mismatch");
    if (head.biases[l].size() != head.widths[l + 1])
      throw ShapeError("layer " + std::to_string(l) + " bias shape mismatch");
    if (!head.weights[l].allFinite() || !head.biases[l].allFinite())
      throw DataError("non-finite parameters in layer " + std::to_string(l));
  }
}

void check_labels(std::span<const int> labels) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != 0 && labels[i] != 1)
      throw DataError("label at row " + std::to_string(i) + " is not 0/1");
}

// Activations per layer for a batch (rows = samples). activations[0] is the
// input; the last entry holds logits, not probabilities.
std::vector<Eigen::MatrixXd> forward_pass(const MlpHead& head,
                                          const Eigen::Ref<const Eigen::MatrixXd>& x) {
  std::vector<Eigen::MatrixXd> activations;
  activations.reserve(head.weights.size() + 1);
  activations.push_back(x);
  for (std::size_t l = 0; l < head.weights.size(); ++l) {
    Eigen::MatrixXd z =
        (activations.back() * head.weights[l].transpose()).rowwise() +
        head.biases[l].transpose();
    if (l + 1 < head.weights.size()) z = z.cwiseMax(0.0);
    activations.push_back(std::move(z));
  }
  return activations;
}

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Mean-BCE gradients over the batch from one forward/backward sweep.
Gradients backward_pass(const MlpHead& head, const std::vector<Eigen::MatrixXd>& activations,
                        std::span<const int> labels) {
  const auto batch = activations.front().rows();
  const std::size_t n_layers = head.weights.size();

  Gradients grads;
  grads.weights.resize(n_layers);
  grads.biases.resize(n_layers);

  // dL/dz for the logistic output under BCE is (p - y) / batch.
  Eigen::MatrixXd delta = activations.back();
  for (Eigen::Index i = 0; i < batch; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-delta(i, 0)));
    delta(i, 0) = (p - static_cast<double>(labels[static_cast<std::size_t>(i)])) /
                  static_cast<double>(batch);
  }

  for (std::size_t l = n_layers; l-- > 0;) {
    grads.weights[l] = delta.transpose() * activations[l];
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * head.weights[l];
      // Ramp derivative: 1 where the activation stayed positive, else 0.
      delta = back.cwiseProduct(
          (activations[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

}  // namespace

MlpHead init_head(int input_dim, std::span<const int> hidden, std::uint64_t seed) {
  if (input_dim < 1) throw RangeError("input dimension must be positive");
  for (int h : hidden)
    if (h < 1) throw RangeError("hidden widths must be positive");

  MlpHead head;
  head.widths.push_back(input_dim);
  head.widths.insert(head.widths.end(), hidden.begin(), hidden.end());
  head.widths.push_back(1);

  SplitMix64 rng(seed);
  for (std::size_t l = 0; l + 1 < head.widths.size(); ++l) {
    const int fan_in = head.widths[l];
    const int fan_out = head.widths[l + 1];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = a * (2.0 * rng.unit() - 1.0);
    head.weights.push_back(std::move(w));
    head.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return head;
}

Eigen::VectorXd forward_logits(const MlpHead& head, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  check_head(head);
  if (x.cols() != head.input_dim())
    throw ShapeError("input dimension " + std::to_string(x.cols()) + " does not match head " +
                     std::to_string(head.input_dim()));
  return forward_pass(head, x).back().col(0);
}

Eigen::VectorXd predict(const MlpHead& head, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  Eigen::VectorXd z = forward_logits(head, x);
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

double bce_loss(const MlpHead& head, const Eigen::Ref<const Eigen::MatrixXd>& x,
                std::span<const int> labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw ShapeError("row/label count mismatch");
  check_labels(labels);
  const Eigen::VectorXd z = forward_logits(head, x);
  // log(1 + exp(-|z|)) + max(z, 0) - z*y, the overflow-safe BCE arrangement.
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    const double yi = static_cast<double>(labels[static_cast<std::size_t>(i)]);
    loss += std::log1p(std::exp(-std::abs(zi))) + std::max(zi, 0.0) - zi * yi;
  }
  return loss / static_cast<double>(z.size());
}

MlpHead train(const LabeledEmbeddings& data, const TrainConfig& config) {
  validate(data.set);
  if (static_cast<std::size_t>(data.set.count()) != data.labels.size())
    throw ShapeError("row/label count mismatch");
  if (data.set.count() < 2) throw RangeError("training needs at least 2 samples");
  check_labels(data.labels);
  const bool has0 = std::find(data.labels.begin(), data.labels.end(), 0) != data.labels.end();
  const bool has1 = std::find(data.labels.begin(), data.labels.end(), 1) != data.labels.end();
  if (!has0 || !has1) throw DataError("training data must contain both classes");
  if (config.epochs < 0) throw RangeError("epochs must be nonnegative");
  if (config.batch < 1) throw RangeError("batch size must be positive");
  if (!(config.learning_rate > 0.0)) throw RangeError("learning rate must be positive");

  const auto n = static_cast<std::size_t>(data.set.count());

  // One stream drives init then the per-epoch shuffles.
  SplitMix64 rng(config.seed);
  MlpHead head = init_head(static_cast<int>(data.set.dim()), config.hidden, rng.next());

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch));
      const auto rows = static_cast<Eigen::Index>(stop - start);
      Eigen::MatrixXd x(rows, data.set.dim());
      std::vector<int> y(static_cast<std::size_t>(rows));
      for (Eigen::Index i = 0; i < rows; ++i) {
        const std::size_t src = order[start + static_cast<std::size_t>(i)];
        x.row(i) = data.set.data.row(static_cast<Eigen::Index>(src));
        y[static_cast<std::size_t>(i)] = data.labels[src];
      }
      const auto activations = forward_pass(head, x);
      const Gradients grads = backward_pass(head, activations, y);
      for (std::size_t l = 0; l < head.weights.size(); ++l) {
        head.weights[l] -= config.learning_rate * grads.weights[l];
        head.biases[l] -= config.learning_rate * grads.biases[l];
      }
    }
  }
  return head;
}

double evaluate(const MlpHead& head, const LabeledEmbeddings& data) {
  validate(data.set);
  if (static_cast<std::size_t>(data.set.count()) != data.labels.size())
    throw ShapeError("row/label count mismatch");
  check_labels(data.labels);

  const Eigen::VectorXd p = predict(head, data.set.data);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const int predicted = p[i] >= 0.5 ? 1 : 0;
    if (predicted == data.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(p.size());
}

double gradient_check(const MlpHead& head, const Eigen::Ref<const Eigen::MatrixXd>& x,
                      std::span<const int> labels) {
  check_head(head);
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw ShapeError("row/label count mismatch");
  check_labels(labels);

  const Gradients grads = backward_pass(head, forward_pass(head, x), labels);

  // Loss plus the active/inactive pattern of every ramp unit. Central
  // differences are only meaningful where the loss is differentiable on the
  // whole step interval, so parameters whose +/-h evaluations disagree on any
  // ramp state are excluded from the comparison.
  auto loss_and_pattern = [&](const MlpHead& h) {
    const auto activations = forward_pass(h, x);
    std::vector<bool> pattern;
    for (std::size_t l = 1; l + 1 < activations.size(); ++l)
      for (Eigen::Index i = 0; i < activations[l].size(); ++i)
        pattern.push_back(*(activations[l].data() + i) > 0.0);
    const Eigen::VectorXd z = activations.back().col(0);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double yi = static_cast<double>(labels[static_cast<std::size_t>(i)]);
      loss += std::log1p(std::exp(-std::abs(z[i]))) + std::max(z[i], 0.0) - z[i] * yi;
    }
    return std::pair(loss / static_cast<double>(z.size()), std::move(pattern));
  };

  const double h = 1e-5;
  double worst = 0.0;
  MlpHead probe = head;
  auto check_param = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const auto [up, up_pattern] = loss_and_pattern(probe);
    param = saved - h;
    const auto [down, down_pattern] = loss_and_pattern(probe);
    param = saved;
    if (up_pattern != down_pattern) return;  // kink inside the step interval
    const double fd = (up - down) / (2.0 * h);
    const double err = std::abs(analytic - fd) / std::max({1.0, std::abs(analytic), std::abs(fd)});
    worst = std::max(worst, err);
  };

  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < probe.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < probe.weights[l].cols(); ++c)
        check_param(probe.weights[l](r, c), grads.weights[l](r, c));
    for (Eigen::Index i = 0; i < probe.biases[l].size(); ++i)
      check_param(probe.biases[l](i), grads.biases[l](i));
  }
  return worst;
}

nlohmann::json head_to_json(const MlpHead& head) {
  check_head(head);
  nlohmann::json layers = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < head.weights.size(); ++l) {
    std::vector<double> flat(static_cast<std::size_t>(head.weights[l].size()));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), head.weights[l].rows(), head.weights[l].cols()) = head.weights[l];
    layers.push_back(flat);
    biases.push_back(std::vector<double>(head.biases[l].data(),
                                         head.biases[l].data() + head.biases[l].size()));
  }
  return nlohmann::json{{"widths", head.widths}, {"weights", layers}, {"biases", biases}};
}

MlpHead head_from_json(const nlohmann::json& j) {
  try {
    MlpHead head;
    head.widths = j.at("widths").get<std::vector<int>>();
    const auto& layers = j.at("weights");
    const auto& biases = j.at("biases");
    for (std::size_t l = 0; l + 1 < head.widths.size(); ++l) {
      const auto flat = layers.at(l).get<std::vector<double>>();
      const int rows = head.widths[l + 1];
      const int cols = head.widths[l];
      if (flat.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw ShapeError("layer " + std::to_string(l) + " weight count mismatch");
      Eigen::MatrixXd w(rows, cols);
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
          view(flat.data(), rows, cols);
      w = view;
      head.weights.push_back(std::move(w));
      const auto b = biases.at(l).get<std::vector<double>>();
      if (b.size() != static_cast<std::size_t>(rows))
        throw ShapeError("layer " + std::to_string(l) + " bias count mismatch");
      head.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(),
                                                              static_cast<Eigen::Index>(b.size())));
    }
    check_head(head);
    return head;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad head JSON: ") + e.what());
  }
}

void save_head(const MlpHead& head, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << head_to_json(head).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

MlpHead load_head(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return head_from_json(j);
}

std::vector<int> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty label file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "label")
    throw FormatError(path.string() + ": expected header 'label', got '" + line + "'");

  std::vector<int> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "0") labels.push_back(0);
    else if (line == "1") labels.push_back(1);
    else
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": label must be 0 or 1");
  }
  return labels;
}

}  // namespace fdtk
