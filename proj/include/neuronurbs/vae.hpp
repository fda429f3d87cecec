#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "neuronurbs/autodiff.hpp"
#include "neuronurbs/preprocess.hpp"
#include "neuronurbs/types.hpp"

namespace nnrb {

struct VaeConfig {
  std::size_t pad_dim = 10;
  std::size_t knot_len = 10;
  std::size_t embed_dim = 64;
  std::size_t num_layers = 8;
  std::size_t num_heads = 4;
  std::size_t latent_dim = 48;
  double kl_weight = 1e-3;
  std::uint64_t seed = 0;

  std::size_t seq_len() const { return pad_dim * pad_dim; }
  void validate() const {
    if (embed_dim == 0 || num_heads == 0 || embed_dim % num_heads != 0)
      throw std::invalid_argument("vae-config: embed_dim must divide by num_heads");
    if (num_layers == 0 || latent_dim == 0)
      throw std::invalid_argument("vae-config: zero layers or latent dim");
    if (kl_weight < 0.0) throw std::invalid_argument("vae-config: negative kl weight");
  }
};

struct NurbsFeature {
  std::vector<double> z;
  std::vector<double> mu;
  std::vector<double> log_var;
};

struct LossBreakdown {
  double recon_pw = 0.0, recon_u = 0.0, recon_v = 0.0, kl = 0.0, total = 0.0;
};

struct TrainSettings {
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  double learning_rate = 1e-2;
  double momentum = 0.9;
};

// Named parameter store plus the model forward passes.
class VaeModel {
 public:
  explicit VaeModel(const VaeConfig &config);

  const VaeConfig &config() const { return cfg_; }
  std::map<std::string, ad::Tensor> &params() { return params_; }
  const std::map<std::string, ad::Tensor> &params() const { return params_; }
  std::size_t param_count() const;

  // Deterministic-mode encode (z = mu) unless eps is supplied.
  NurbsFeature encode(const PaddedBundle &bundle_model_range) const;
  NurbsFeature encode(const PaddedBundle &bundle_model_range,
                      const std::vector<double> &eps) const;

  // Decoder heads; output bundle is in model range with the mask and
  // true dims copied from `like`.
  PaddedBundle decode(const NurbsFeature &feature, const PaddedBundle &like) const;

  LossBreakdown loss(const PaddedBundle &bundle, const PaddedBundle &reconstructed,
                     const std::vector<double> &mu, const std::vector<double> &log_var) const;

  // Builds one sample's full graph on the tape and returns the total
  // loss node. Exposed for the finite-difference gradient check.
  ad::Tape::Id build_loss_graph(ad::Tape &tape, const PaddedBundle &bundle_model_range,
                                const std::vector<double> &eps,
                                LossBreakdown *breakdown = nullptr) const;

  std::vector<LossBreakdown> train(const std::vector<PaddedBundle> &corpus,
                                   const TrainSettings &settings);

  NurbsSurface reconstruct_surface(const NurbsSurface &surface) const;

 private:
  struct Forward {
    ad::Tape::Id mu, log_var, z;
  };
  Forward encode_graph(ad::Tape &tape, const PaddedBundle &bundle,
                       const std::vector<double> &eps) const;
  struct Decoded {
    ad::Tape::Id pw, knots_u, knots_v;
  };
  Decoded decode_graph(ad::Tape &tape, ad::Tape::Id z) const;

  ad::Tensor &p(const std::string &name) { return params_.at(name); }
  const ad::Tensor &p(const std::string &name) const { return params_.at(name); }

  VaeConfig cfg_;
  std::map<std::string, ad::Tensor> params_;
  std::vector<double> pos_enc_;  // (seq_len, embed_dim)
};

// Closed-form Gaussian KL to the standard normal.
double gaussian_kl(const std::vector<double> &mu, const std::vector<double> &log_var);

}  // namespace nnrb
