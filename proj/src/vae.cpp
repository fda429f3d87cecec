#include "neuronurbs/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace nnrb {

namespace {

std::vector<char> token_mask_of(const PaddedBundle &b) {
  std::vector<char> m(b.mask.size());
  for (std::size_t i = 0; i < b.mask.size(); ++i) m[i] = b.mask[i] ? 1 : 0;
  return m;
}

}  // namespace

double gaussian_kl(const std::vector<double> &mu, const std::vector<double> &log_var) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    s += mu[i] * mu[i] + std::exp(log_var[i]) - 1.0 - log_var[i];
  return 0.5 * s;
}

VaeModel::VaeModel(const VaeConfig &config) : cfg_(config) {
  cfg_.validate();
  const std::size_t e = cfg_.embed_dim, k = cfg_.knot_len, dz = cfg_.latent_dim;
  const std::size_t S = cfg_.seq_len();
  const std::size_t ffn = 4 * e;

  std::mt19937_64 rng(cfg_.seed);
  std::normal_distribution<double> dist(0.0, 0.02);

  auto weight = [&](const std::string &name, std::size_t r, std::size_t c) {
    ad::Tensor t(r, c);
    for (double &v : t.value) v = dist(rng);
    params_.emplace(name, std::move(t));
  };
  auto bias = [&](const std::string &name, std::size_t c, double fill = 0.0) {
    ad::Tensor t(1, c);
    std::fill(t.value.begin(), t.value.end(), fill);
    params_.emplace(name, std::move(t));
  };

  weight("emb_pw_w", 4, e); bias("emb_pw_b", e);
  weight("emb_u_w", k, e);  bias("emb_u_b", e);
  weight("emb_v_w", k, e);  bias("emb_v_b", e);
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    std::string pre = "layer" + std::to_string(l) + "_";
    bias(pre + "ln1_g", e, 1.0); bias(pre + "ln1_b", e);
    weight(pre + "wq", e, e); bias(pre + "bq", e);
    weight(pre + "wk", e, e); bias(pre + "bk", e);
    weight(pre + "wv", e, e); bias(pre + "bv", e);
    weight(pre + "wo", e, e); bias(pre + "bo", e);
    bias(pre + "ln2_g", e, 1.0); bias(pre + "ln2_b", e);
    weight(pre + "ffn_w1", e, ffn); bias(pre + "ffn_b1", ffn);
    weight(pre + "ffn_w2", ffn, e); bias(pre + "ffn_b2", e);
  }
  bias("final_ln_g", e, 1.0); bias("final_ln_b", e);
  weight("head_mu_w", e, dz);  bias("head_mu_b", dz);
  weight("head_lv_w", e, dz);  bias("head_lv_b", dz);

  const std::size_t hidden = 4 * e;
  weight("dec_pw_w1", dz, hidden); bias("dec_pw_b1", hidden);
  weight("dec_pw_w2", hidden, S * 4); bias("dec_pw_b2", S * 4);
  weight("dec_u_w1", dz, hidden); bias("dec_u_b1", hidden);
  weight("dec_u_w2", hidden, k); bias("dec_u_b2", k);
  weight("dec_v_w1", dz, hidden); bias("dec_v_b1", hidden);
  weight("dec_v_w2", hidden, k); bias("dec_v_b2", k);

  // interleaved sine-cosine positions over the flattened token index
  pos_enc_.assign(S * e, 0.0);
  for (std::size_t pos = 0; pos < S; ++pos)
    for (std::size_t i = 0; i < e; ++i) {
      double freq = std::pow(10000.0, -double(2 * (i / 2)) / double(e));
      double angle = double(pos) * freq;
      pos_enc_[pos * e + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
}

std::size_t VaeModel::param_count() const {
  std::size_t n = 0;
  for (const auto &[name, t] : params_) n += t.size();
  return n;
}

VaeModel::Forward VaeModel::encode_graph(ad::Tape &tape, const PaddedBundle &b,
                                         const std::vector<double> &eps) const {
  if (b.pad_dim != cfg_.pad_dim || b.knot_len != cfg_.knot_len)
    throw std::invalid_argument("vae: bundle dims do not match config");
  const std::size_t S = cfg_.seq_len(), e = cfg_.embed_dim, k = cfg_.knot_len;
  const std::size_t H = cfg_.num_heads, hd = e / H;
  auto &params = const_cast<std::map<std::string, ad::Tensor> &>(params_);
  auto leaf = [&](const std::string &name) { return tape.leaf(params.at(name)); };

  std::vector<char> mask = token_mask_of(b);
  bool any = false;
  for (char m : mask) any |= (m != 0);
  if (!any) throw std::invalid_argument("vae: all-masked bundle");

  // padded entries are forced to zero so they cannot leak into the
  // embeddings of real tokens
  std::vector<double> pw_in(S * 4, 0.0);
  for (std::size_t t = 0; t < S; ++t)
    if (mask[t])
      for (std::size_t c = 0; c < 4; ++c) pw_in[t * 4 + c] = b.p_w[t * 4 + c];
  std::vector<double> u_in(k, 0.0), v_in(k, 0.0);
  for (std::size_t i = 0; i < b.true_knot_len_u; ++i) u_in[i] = b.knots_u[i];
  for (std::size_t i = 0; i < b.true_knot_len_v; ++i) v_in[i] = b.knots_v[i];

  ad::Tape::Id x = tape.add_rowvec(tape.matmul(tape.constant(S, 4, pw_in), leaf("emb_pw_w")),
                                   leaf("emb_pw_b"));
  ad::Tape::Id ue = tape.add_rowvec(tape.matmul(tape.constant(1, k, u_in), leaf("emb_u_w")),
                                    leaf("emb_u_b"));
  ad::Tape::Id ve = tape.add_rowvec(tape.matmul(tape.constant(1, k, v_in), leaf("emb_v_w")),
                                    leaf("emb_v_b"));
  x = tape.add_rowvec(tape.add_rowvec(x, ue), ve);
  x = tape.add(x, tape.constant(S, e, pos_enc_));

  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    std::string pre = "layer" + std::to_string(l) + "_";
    ad::Tape::Id h = tape.add_rowvec(
        tape.mul_rowvec(tape.layer_norm_rows(x), leaf(pre + "ln1_g")), leaf(pre + "ln1_b"));
    ad::Tape::Id q = tape.add_rowvec(tape.matmul(h, leaf(pre + "wq")), leaf(pre + "bq"));
    ad::Tape::Id kk = tape.add_rowvec(tape.matmul(h, leaf(pre + "wk")), leaf(pre + "bk"));
    ad::Tape::Id v = tape.add_rowvec(tape.matmul(h, leaf(pre + "wv")), leaf(pre + "bv"));
    std::vector<ad::Tape::Id> heads;
    for (std::size_t hh = 0; hh < H; ++hh) {
      ad::Tape::Id qh = tape.slice_cols(q, hh * hd, hd);
      ad::Tape::Id kh = tape.slice_cols(kk, hh * hd, hd);
      ad::Tape::Id vh = tape.slice_cols(v, hh * hd, hd);
      ad::Tape::Id scores =
          tape.scale(tape.matmul(qh, tape.transpose(kh)), 1.0 / std::sqrt(double(hd)));
      ad::Tape::Id att = tape.softmax_rows(scores, mask);
      heads.push_back(tape.matmul(att, vh));
    }
    ad::Tape::Id o = tape.add_rowvec(tape.matmul(tape.concat_cols(heads), leaf(pre + "wo")),
                                     leaf(pre + "bo"));
    x = tape.add(x, o);
    ad::Tape::Id h2 = tape.add_rowvec(
        tape.mul_rowvec(tape.layer_norm_rows(x), leaf(pre + "ln2_g")), leaf(pre + "ln2_b"));
    ad::Tape::Id f = tape.add_rowvec(
        tape.matmul(tape.gelu(tape.add_rowvec(tape.matmul(h2, leaf(pre + "ffn_w1")),
                                              leaf(pre + "ffn_b1"))),
                    leaf(pre + "ffn_w2")),
        leaf(pre + "ffn_b2"));
    x = tape.add(x, f);
  }

  ad::Tape::Id xf = tape.add_rowvec(
      tape.mul_rowvec(tape.layer_norm_rows(x), leaf("final_ln_g")), leaf("final_ln_b"));
  ad::Tape::Id pooled = tape.mean_rows(xf, mask);
  ad::Tape::Id mu = tape.add_rowvec(tape.matmul(pooled, leaf("head_mu_w")), leaf("head_mu_b"));
  ad::Tape::Id lv = tape.add_rowvec(tape.matmul(pooled, leaf("head_lv_w")), leaf("head_lv_b"));

  ad::Tape::Id z = mu;
  if (!eps.empty()) {
    if (eps.size() != cfg_.latent_dim) throw std::invalid_argument("vae: eps size mismatch");
    ad::Tape::Id sigma = tape.exp_(tape.scale(lv, 0.5));
    z = tape.add(mu, tape.mul(sigma, tape.constant(1, cfg_.latent_dim, eps)));
  }
  return {mu, lv, z};
}

VaeModel::Decoded VaeModel::decode_graph(ad::Tape &tape, ad::Tape::Id z) const {
  auto &params = const_cast<std::map<std::string, ad::Tensor> &>(params_);
  auto leaf = [&](const std::string &name) { return tape.leaf(params.at(name)); };
  auto head = [&](const std::string &pre) {
    ad::Tape::Id h =
        tape.gelu(tape.add_rowvec(tape.matmul(z, leaf(pre + "_w1")), leaf(pre + "_b1")));
    return tape.tanh_(tape.add_rowvec(tape.matmul(h, leaf(pre + "_w2")), leaf(pre + "_b2")));
  };
  return {head("dec_pw"), head("dec_u"), head("dec_v")};
}

NurbsFeature VaeModel::encode(const PaddedBundle &bundle) const {
  return encode(bundle, {});
}

NurbsFeature VaeModel::encode(const PaddedBundle &bundle,
                              const std::vector<double> &eps) const {
  ad::Tape tape;
  Forward f = encode_graph(tape, bundle, eps);
  return {tape.val(f.z), tape.val(f.mu), tape.val(f.log_var)};
}

PaddedBundle VaeModel::decode(const NurbsFeature &feature, const PaddedBundle &like) const {
  if (feature.z.size() != cfg_.latent_dim)
    throw std::invalid_argument("vae: feature length != latent_dim");
  ad::Tape tape;
  ad::Tape::Id z = tape.constant(1, cfg_.latent_dim, feature.z);
  Decoded d = decode_graph(tape, z);

  PaddedBundle out = like;
  out.p_w = tape.val(d.pw);
  out.knots_u = tape.val(d.knots_u);
  out.knots_v = tape.val(d.knots_v);
  // restore the masked-entries-are-zero invariant
  for (std::size_t t = 0; t < out.mask.size(); ++t)
    if (!out.mask[t])
      for (std::size_t c = 0; c < 4; ++c) out.p_w[t * 4 + c] = 0.0;
  for (std::size_t i = out.true_knot_len_u; i < out.knot_len; ++i) out.knots_u[i] = 0.0;
  for (std::size_t i = out.true_knot_len_v; i < out.knot_len; ++i) out.knots_v[i] = 0.0;
  return out;
}

LossBreakdown VaeModel::loss(const PaddedBundle &bundle, const PaddedBundle &reconstructed,
                             const std::vector<double> &mu,
                             const std::vector<double> &log_var) const {
  LossBreakdown out;
  for (std::size_t t = 0; t < bundle.mask.size(); ++t) {
    if (!bundle.mask[t]) continue;
    for (std::size_t c = 0; c < 4; ++c) {
      double d = reconstructed.p_w[t * 4 + c] - bundle.p_w[t * 4 + c];
      out.recon_pw += d * d;
    }
  }
  for (std::size_t i = 0; i < bundle.true_knot_len_u; ++i) {
    double d = reconstructed.knots_u[i] - bundle.knots_u[i];
    out.recon_u += d * d;
  }
  for (std::size_t i = 0; i < bundle.true_knot_len_v; ++i) {
    double d = reconstructed.knots_v[i] - bundle.knots_v[i];
    out.recon_v += d * d;
  }
  out.kl = gaussian_kl(mu, log_var);
  out.total = out.recon_pw + out.recon_u + out.recon_v + cfg_.kl_weight * out.kl;
  return out;
}

ad::Tape::Id VaeModel::build_loss_graph(ad::Tape &tape, const PaddedBundle &b,
                                        const std::vector<double> &eps,
                                        LossBreakdown *breakdown) const {
  Forward f = encode_graph(tape, b, eps);
  Decoded d = decode_graph(tape, f.z);

  const std::size_t S = cfg_.seq_len(), k = cfg_.knot_len;
  std::vector<double> pw_target(S * 4, 0.0), pw_weight(S * 4, 0.0);
  for (std::size_t t = 0; t < S; ++t)
    if (b.mask[t])
      for (std::size_t c = 0; c < 4; ++c) {
        pw_target[t * 4 + c] = b.p_w[t * 4 + c];
        pw_weight[t * 4 + c] = 1.0;
      }
  std::vector<double> u_weight(k, 0.0), v_weight(k, 0.0);
  for (std::size_t i = 0; i < b.true_knot_len_u; ++i) u_weight[i] = 1.0;
  for (std::size_t i = 0; i < b.true_knot_len_v; ++i) v_weight[i] = 1.0;

  ad::Tape::Id l_pw = tape.weighted_sse(d.pw, pw_target, pw_weight);
  ad::Tape::Id l_u = tape.weighted_sse(d.knots_u, b.knots_u, u_weight);
  ad::Tape::Id l_v = tape.weighted_sse(d.knots_v, b.knots_v, v_weight);

  // 0.5 * sum(mu^2 + exp(lv) - 1 - lv)
  ad::Tape::Id mu2 = tape.mul(f.mu, f.mu);
  ad::Tape::Id ev = tape.exp_(f.log_var);
  ad::Tape::Id kl = tape.shift(
      tape.scale(tape.sub(tape.sum(tape.add(mu2, ev)), tape.sum(f.log_var)), 0.5),
      -0.5 * double(cfg_.latent_dim));
  ad::Tape::Id total =
      tape.add(tape.add(l_pw, l_u), tape.add(l_v, tape.scale(kl, cfg_.kl_weight)));

  if (breakdown) {
    breakdown->recon_pw = tape.scalar(l_pw);
    breakdown->recon_u = tape.scalar(l_u);
    breakdown->recon_v = tape.scalar(l_v);
    breakdown->kl = tape.scalar(kl);
    breakdown->total = tape.scalar(total);
  }
  return total;
}

std::vector<LossBreakdown> VaeModel::train(const std::vector<PaddedBundle> &corpus,
                                           const TrainSettings &settings) {
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");

  std::map<std::string, std::vector<double>> velocity;
  for (auto &[name, t] : params_) velocity[name].assign(t.size(), 0.0);

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<LossBreakdown> history;
  for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
    // restarted per epoch so visit order and eps draws depend only on the
    // seed; with a zero step the loss history is then exactly constant
    std::mt19937_64 rng(cfg_.seed + 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown epoch_loss;

    for (std::size_t start = 0; start < order.size(); start += settings.batch_size) {
      const std::size_t stop = std::min(order.size(), start + settings.batch_size);
      for (auto &[name, t] : params_) t.zero_grad();

      for (std::size_t idx = start; idx < stop; ++idx) {
        std::vector<double> eps(cfg_.latent_dim);
        for (double &e : eps) e = normal(rng);
        ad::Tape tape;
        LossBreakdown bd;
        ad::Tape::Id total = build_loss_graph(tape, corpus[order[idx]], eps, &bd);
        if (!std::isfinite(bd.total))
          throw std::runtime_error("train: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", sample " +
                                   std::to_string(order[idx]));
        tape.backward(total);
        epoch_loss.recon_pw += bd.recon_pw;
        epoch_loss.recon_u += bd.recon_u;
        epoch_loss.recon_v += bd.recon_v;
        epoch_loss.kl += bd.kl;
        epoch_loss.total += bd.total;
      }

      const double inv_batch = 1.0 / double(stop - start);
      for (auto &[name, t] : params_) {
        auto &vel = velocity[name];
        for (std::size_t i = 0; i < t.size(); ++i) {
          vel[i] = settings.momentum * vel[i] - settings.learning_rate * t.grad[i] * inv_batch;
          t.value[i] += vel[i];
        }
      }
    }

    const double inv_n = 1.0 / double(corpus.size());
    epoch_loss.recon_pw *= inv_n;
    epoch_loss.recon_u *= inv_n;
    epoch_loss.recon_v *= inv_n;
    epoch_loss.kl *= inv_n;
    epoch_loss.total *= inv_n;
    history.push_back(epoch_loss);
  }
  return history;
}

NurbsSurface VaeModel::reconstruct_surface(const NurbsSurface &surface) const {
  PreprocessConfig pc{cfg_.pad_dim, cfg_.knot_len};
  auto [normalized, record] = normalize(surface);
  PaddedBundle bundle = to_model_range(pack(normalized, pc));
  NurbsFeature feature = encode(bundle);
  PaddedBundle decoded = decode(feature, bundle);
  PaddedBundle repaired = post_generation_repair(from_model_range(decoded));
  return denormalize(unpack(repaired), record);
}

}  // namespace nnrb
