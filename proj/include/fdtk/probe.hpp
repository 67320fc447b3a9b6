#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "fdtk/embedding.hpp"

namespace fdtk {

// Binary classifier over frozen embeddings: ramp hidden layers, logistic
// output. Weights are (out x in) per layer, initialized uniform in [-a, a)
// with a = sqrt(6 / (fan_in + fan_out)), drawn row-major layer by layer;
// biases start at zero.
struct MlpHead {
  std::vector<int> widths;  // [D, hidden..., 1]
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const { return widths.empty() ? 0 : widths.front(); }
};

struct LabeledEmbeddings {
  EmbeddingSet set;
  std::vector<int> labels;  // 0 or 1, one per row
};

struct TrainConfig {
  std::vector<int> hidden = {512};
  int epochs = 50;
  int batch = 32;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
};

MlpHead init_head(int input_dim, std::span<const int> hidden, std::uint64_t seed);

// Logit per row (pre-sigmoid).
Eigen::VectorXd forward_logits(const MlpHead& head, const Eigen::Ref<const Eigen::MatrixXd>& x);

// Class-1 probability per row.
Eigen::VectorXd predict(const MlpHead& head, const Eigen::Ref<const Eigen::MatrixXd>& x);

// Mean binary cross-entropy, computed from logits for stability.
double bce_loss(const MlpHead& head, const Eigen::Ref<const Eigen::MatrixXd>& x,
                std::span<const int> labels);

// Mini-batch gradient descent on BCE. One SplitMix64 stream drawn from the
// seed initializes the weights and then shuffles the row order each epoch, so
// a fixed seed fixes the whole trajectory. Zero epochs returns the freshly
// initialized head.
MlpHead train(const LabeledEmbeddings& data, const TrainConfig& config);

// Fraction of rows whose thresholded probability (p >= 0.5) matches the label.
double evaluate(const MlpHead& head, const LabeledEmbeddings& data);

// Max relative error between analytic gradients and central finite
// differences (step 1e-5) over the parameters, on the given batch. A
// parameter whose step interval flips the active state of any ramp unit is
// excluded: the loss is not differentiable there and the comparison would be
// meaningless.
double gradient_check(const MlpHead& head, const Eigen::Ref<const Eigen::MatrixXd>& x,
                      std::span<const int> labels);

nlohmann::json head_to_json(const MlpHead& head);
MlpHead head_from_json(const nlohmann::json& j);
void save_head(const MlpHead& head, const std::filesystem::path& path);
MlpHead load_head(const std::filesystem::path& path);

// labels.csv: header `label`, one 0/1 row per embedding row.
std::vector<int> load_labels(const std::filesystem::path& path);

}  // namespace fdtk
