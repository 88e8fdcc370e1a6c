#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "choicenet/core/choice_model.hpp"
#include "choicenet/core/rng.hpp"

namespace choicenet {

enum class Arch { kGasn, kRasn };

Arch parse_arch(std::string_view name);
std::string to_string(Arch arch);

// One affine map; w is out x in.
struct Layer {
  Mat w;
  Vec b;
  int in() const { return static_cast<int>(w.cols()); }
  int out() const { return static_cast<int>(w.rows()); }
};

// Product and customer encoders. Hidden layers use ReLU, the last layer of
// each encoder is linear; both end in the same latent dimension h and the
// latent utility of product i is the inner product of the two codes.
struct FeatureEncoderParams {
  std::vector<Layer> product;
  std::vector<Layer> customer;
  int latent_dim() const { return product.back().out(); }
  int product_dim() const { return product.front().in(); }
  int customer_dim() const { return customer.front().in(); }
};

// Layer stack of a gated or residual assortment network.
//
// Feature-free gasn: z_0 = S, z_l = relu(W_l z_{l-1} + b_l), logits z_L.
// Feature-free rasn: z_l = relu(W_l z_{l-1} + b_l) + z_{l-1}, logits z_L.
// gasn with encoders: z_0 = latent utilities u, then as gasn.
// rasn with encoders: z_0 = [u; S], residual blocks of width 2n, then the
// linear `head` (2n -> n) gives the logits.
struct NetworkParams {
  Arch arch = Arch::kGasn;
  int n = 0;
  bool has_no_purchase = true;
  std::vector<Layer> layers;
  std::optional<FeatureEncoderParams> enc;
  std::optional<Layer> head;

  Universe universe() const { return Universe(n, has_no_purchase); }
  int depth() const { return static_cast<int>(layers.size()); }
  bool feature_based() const { return enc.has_value(); }
  // Throws DimensionError when shapes are inconsistent or entries non-finite.
  void validate() const;
  // Every weight and bias tensor, in a fixed order.
  std::vector<std::span<double>> tensors();
  std::size_t num_params() const;
  // Same shapes, all zeros.
  NetworkParams zeros_like() const;
};

struct NetSpec {
  Arch arch = Arch::kGasn;
  int n = 0;
  bool has_no_purchase = true;
  // gasn: hidden layer widths (empty = one n -> n layer). rasn: unused.
  std::vector<int> hidden;
  // rasn: number of residual blocks.
  int blocks = 1;
  bool features = false;
  int product_dim = 0;
  int customer_dim = 0;  // 0: no customer features, the encoder sees a constant 1
  std::vector<int> product_hidden;
  std::vector<int> customer_hidden;
  int latent_dim = 1;
};

// Uniform(+-sqrt(6 / (in + out))) weights, zero biases.
NetworkParams init_network(const NetSpec& spec, Rng& rng);
void glorot_fill(Layer& layer, Rng& rng);

// Inputs for a batch of B samples.
struct BatchInput {
  Eigen::MatrixXd mask;            // n x B, 0/1
  std::vector<int> chosen;         // B entries, -1 when unknown
  Eigen::MatrixXd customer;        // d' x B (1 x B of ones when absent)
  const Mat* product = nullptr;    // n x d static features
  int size() const { return static_cast<int>(mask.cols()); }
};

BatchInput make_batch(const NetworkParams& p, const ChoiceDataset& data,
                      std::span<const std::size_t> idx);
BatchInput make_single(const NetworkParams& p, const Assortment& s, const Features& f = {},
                       int chosen = -1);

// Batched forward/backward with reusable buffers.
class NetEngine {
 public:
  // Runs the network; returns the mean cross-entropy over samples with a
  // known choice (0 if none).
  double forward(const NetworkParams& p, const BatchInput& in);
  // Gradient of the mean cross-entropy of the last forward pass, written
  // into grad (same shapes as p).
  void backward(const NetworkParams& p, NetworkParams& grad);

  const Eigen::MatrixXd& probs() const { return probs_; }
  const Eigen::MatrixXd& logits() const { return logits_; }
  // Latent utilities (n x B) of a feature-based network.
  const Eigen::MatrixXd& latent() const { return u_; }
  // Pre- and post-activation of body layer l (0-based).
  const Eigen::MatrixXd& pre(int l) const { return pre_[static_cast<std::size_t>(l)]; }
  const Eigen::MatrixXd& post(int l) const { return post_[static_cast<std::size_t>(l) + 1]; }

 private:
  struct EncTrace {
    std::vector<Eigen::MatrixXd> pre, post;  // post[0] = input
  };
  void encode(const std::vector<Layer>& layers, const Eigen::MatrixXd& x, EncTrace& t);
  void encode_back(const std::vector<Layer>& layers, const EncTrace& t, Eigen::MatrixXd d,
                   std::vector<Layer>& grad);

  const BatchInput* in_ = nullptr;
  std::vector<Eigen::MatrixXd> pre_, post_;  // post_[0] = body input
  Eigen::MatrixXd logits_, probs_, u_;
  EncTrace enc_p_, enc_c_;
};

// Single-assortment forward pass with per-layer activations.
struct ForwardTrace {
  ProbVector prob;
  std::vector<Vec> pre;   // per body layer
  std::vector<Vec> post;  // per body layer
  Vec logits;
  Vec latent;             // feature nets only
};
ForwardTrace forward_trace(const NetworkParams& p, const Assortment& s, const Features& f = {});
ProbVector forward_gasn(const NetworkParams& p, const Assortment& s);
ProbVector forward_rasn(const NetworkParams& p, const Assortment& s);
ProbVector forward_feature(const NetworkParams& p, const Assortment& s, const Features& f);

// Gradient of -log P(chosen | S) for one sample.
NetworkParams backward(const NetworkParams& p, const Assortment& s, int chosen,
                       const Features& f = {});

// Mean cross-entropy over a dataset, batched.
double network_ce(const NetworkParams& p, const ChoiceDataset& data, std::size_t batch = 1000);

class NeuralChoiceModel : public ChoiceModel {
 public:
  explicit NeuralChoiceModel(NetworkParams p);
  const Universe& universe() const override { return u_; }
  std::string kind() const override { return "network"; }
  ProbVector prob(const Assortment& s) const override;
  ProbVector prob(const Assortment& s, const Features& f) const override;
  const NetworkParams& params() const { return p_; }

 private:
  NetworkParams p_;
  Universe u_;
};

}  // namespace choicenet
