#include "choicenet/neural/network.hpp"

#include <cmath>
#include <numeric>

#include "choicenet/core/error.hpp"

namespace choicenet {
namespace {

using Dyn = Eigen::MatrixXd;

void check_layer(const Layer& l, const std::string& what) {
  if (l.b.size() != l.w.rows()) throw DimensionError(what + ": bias length does not match weight rows");
  if (!l.w.allFinite() || !l.b.allFinite()) throw DimensionError(what + ": non-finite parameters");
}

void check_chain(const std::vector<Layer>& layers, int in, const std::string& what) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    check_layer(layers[k], what);
    if (layers[k].in() != in) throw DimensionError(what + ": layer " + std::to_string(k) + " input width mismatch");
    in = layers[k].out();
  }
}

Layer make_layer(int out, int in) { return Layer{Mat::Zero(out, in), Vec::Zero(out)}; }

std::vector<Layer> zeros_of(const std::vector<Layer>& ls) {
  std::vector<Layer> out;
  for (const Layer& l : ls) out.push_back(make_layer(l.out(), l.in()));
  return out;
}

}  // namespace

Arch parse_arch(std::string_view name) {
  if (name == "gasn") return Arch::kGasn;
  if (name == "rasn") return Arch::kRasn;
  throw ParseError("unknown architecture '" + std::string(name) + "' (expected gasn or rasn)");
}

std::string to_string(Arch arch) { return arch == Arch::kGasn ? "gasn" : "rasn"; }

void NetworkParams::validate() const {
  if (n < 2) throw DimensionError("network universe must have at least 2 options");
  int in = n;
  if (enc) {
    if (enc->product.empty() || enc->customer.empty()) throw DimensionError("encoders need at least one layer");
    check_chain(enc->product, enc->product_dim(), "product encoder");
    check_chain(enc->customer, enc->customer_dim(), "customer encoder");
    if (enc->product.back().out() != enc->customer.back().out())
      throw DimensionError("product and customer encoders must share the latent dimension");
    if (arch == Arch::kRasn) in = 2 * n;
  }
  check_chain(layers, in, "body");
  const int out = layers.empty() ? in : layers.back().out();
  if (arch == Arch::kRasn) {
    for (const Layer& l : layers)
      if (l.in() != l.out()) throw DimensionError("residual layers must be square");
    if (enc) {
      if (!head) throw DimensionError("residual feature network needs an output head");
      check_layer(*head, "head");
      if (head->in() != 2 * n || head->out() != n) throw DimensionError("head must map 2n -> n");
    } else if (head) {
      throw DimensionError("unexpected head on a feature-free network");
    }
  } else {
    if (head) throw DimensionError("gated networks have no head");
    if (out != n) throw DimensionError("last layer must have n outputs");
  }
}

std::vector<std::span<double>> NetworkParams::tensors() {
  std::vector<std::span<double>> out;
  auto add = [&](Layer& l) {
    out.emplace_back(l.w.data(), static_cast<std::size_t>(l.w.size()));
    out.emplace_back(l.b.data(), static_cast<std::size_t>(l.b.size()));
  };
  if (enc) {
    for (Layer& l : enc->product) add(l);
    for (Layer& l : enc->customer) add(l);
  }
  for (Layer& l : layers) add(l);
  if (head) add(*head);
  return out;
}

std::size_t NetworkParams::num_params() const {
  std::size_t total = 0;
  for (auto t : const_cast<NetworkParams*>(this)->tensors()) total += t.size();
  return total;
}

NetworkParams NetworkParams::zeros_like() const {
  NetworkParams z;
  z.arch = arch;
  z.n = n;
  z.has_no_purchase = has_no_purchase;
  z.layers = zeros_of(layers);
  if (enc) z.enc = FeatureEncoderParams{zeros_of(enc->product), zeros_of(enc->customer)};
  if (head) z.head = make_layer(head->out(), head->in());
  return z;
}

void glorot_fill(Layer& layer, Rng& rng) {
  const double r = std::sqrt(6.0 / (layer.in() + layer.out()));
  std::uniform_real_distribution<double> u(-r, r);
  for (Eigen::Index i = 0; i < layer.w.size(); ++i) layer.w.data()[i] = u(rng);
  layer.b.setZero();
}

NetworkParams init_network(const NetSpec& spec, Rng& rng) {
  NetworkParams p;
  p.arch = spec.arch;
  p.n = spec.n;
  p.has_no_purchase = spec.has_no_purchase;
  auto chain = [&](std::vector<int> widths, int in) {
    std::vector<Layer> ls;
    for (int w : widths) {
      if (w < 1) throw DimensionError("layer widths must be positive");
      Layer l = make_layer(w, in);
      glorot_fill(l, rng);
      ls.push_back(std::move(l));
      in = w;
    }
    return ls;
  };
  int in = spec.n;
  if (spec.features) {
    if (spec.product_dim < 1 || spec.latent_dim < 1) throw DimensionError("feature network needs product_dim and latent_dim");
    FeatureEncoderParams enc;
    auto pw = spec.product_hidden;
    pw.push_back(spec.latent_dim);
    enc.product = chain(pw, spec.product_dim);
    auto cw = spec.customer_hidden;
    cw.push_back(spec.latent_dim);
    enc.customer = chain(cw, std::max(1, spec.customer_dim));
    p.enc = std::move(enc);
    if (spec.arch == Arch::kRasn) in = 2 * spec.n;
  }
  if (spec.arch == Arch::kGasn) {
    auto widths = spec.hidden;
    widths.push_back(spec.n);
    p.layers = chain(widths, in);
  } else {
    if (spec.blocks < 0) throw DimensionError("block count must be nonnegative");
    p.layers = chain(std::vector<int>(static_cast<std::size_t>(spec.blocks), in), in);
    if (spec.features) {
      Layer h = make_layer(spec.n, 2 * spec.n);
      glorot_fill(h, rng);
      p.head = std::move(h);
    }
  }
  p.validate();
  return p;
}

BatchInput make_batch(const NetworkParams& p, const ChoiceDataset& data, std::span<const std::size_t> idx) {
  if (data.universe.size() != p.n) throw DimensionError("dataset and network universes differ");
  BatchInput in;
  const int b = static_cast<int>(idx.size());
  in.mask.resize(p.n, b);
  in.chosen.resize(static_cast<std::size_t>(b));
  for (int k = 0; k < b; ++k) {
    const Sample& s = data.samples[idx[static_cast<std::size_t>(k)]];
    const auto& m = s.assortment.mask();
    for (int i = 0; i < p.n; ++i) in.mask(i, k) = m[static_cast<std::size_t>(i)];
    in.chosen[static_cast<std::size_t>(k)] = s.chosen;
  }
  if (p.enc) {
    if (!data.product_features) throw DimensionError("feature network needs product features");
    in.product = &*data.product_features;
    const int dc = p.enc->customer_dim();
    in.customer.resize(dc, b);
    for (int k = 0; k < b; ++k) {
      const Sample& s = data.samples[idx[static_cast<std::size_t>(k)]];
      if (s.customer.empty()) {
        if (dc != 1) throw DimensionError("network expects customer features");
        in.customer(0, k) = 1.0;
      } else {
        if (static_cast<int>(s.customer.size()) != dc) throw DimensionError("customer feature dimension mismatch");
        for (int j = 0; j < dc; ++j) in.customer(j, k) = s.customer[static_cast<std::size_t>(j)];
      }
    }
  }
  return in;
}

BatchInput make_single(const NetworkParams& p, const Assortment& s, const Features& f, int chosen) {
  if (s.size() != p.n) throw DimensionError("assortment and network universes differ");
  BatchInput in;
  in.mask.resize(p.n, 1);
  for (int i = 0; i < p.n; ++i) in.mask(i, 0) = s.contains(i) ? 1.0 : 0.0;
  in.chosen = {chosen};
  if (p.enc) {
    if (!f.product) throw DimensionError("feature network needs product features");
    in.product = f.product;
    const int dc = p.enc->customer_dim();
    in.customer.resize(dc, 1);
    if (f.customer.empty()) {
      if (dc != 1) throw DimensionError("network expects customer features");
      in.customer(0, 0) = 1.0;
    } else {
      if (static_cast<int>(f.customer.size()) != dc) throw DimensionError("customer feature dimension mismatch");
      for (int j = 0; j < dc; ++j) in.customer(j, 0) = f.customer[static_cast<std::size_t>(j)];
    }
  }
  return in;
}

void NetEngine::encode(const std::vector<Layer>& layers, const Dyn& x, EncTrace& t) {
  t.pre.resize(layers.size());
  t.post.resize(layers.size() + 1);
  t.post[0] = x;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    t.pre[k].noalias() = layers[k].w * t.post[k];
    t.pre[k].colwise() += layers[k].b;
    if (k + 1 < layers.size()) {
      t.post[k + 1] = t.pre[k].cwiseMax(0.0);
    } else {
      t.post[k + 1] = t.pre[k];
    }
  }
}

void NetEngine::encode_back(const std::vector<Layer>& layers, const EncTrace& t, Dyn d,
                            std::vector<Layer>& grad) {
  for (std::size_t k = layers.size(); k-- > 0;) {
    if (k + 1 < layers.size()) d = d.cwiseProduct((t.pre[k].array() > 0.0).cast<double>().matrix());
    grad[k].w.noalias() += d * t.post[k].transpose();
    grad[k].b += d.rowwise().sum();
    if (k > 0) d = layers[k].w.transpose() * d;
  }
}

double NetEngine::forward(const NetworkParams& p, const BatchInput& in) {
  in_ = &in;
  const int n = p.n;
  const int b = in.size();
  Dyn x0;
  if (p.enc) {
    const Mat& f = *in.product;
    if (f.rows() != n || f.cols() != p.enc->product_dim()) throw DimensionError("product feature shape mismatch");
    // One column per (sample, product); unoffered products see zero features.
    Dyn pin(f.cols(), static_cast<Eigen::Index>(n) * b);
    for (int k = 0; k < b; ++k)
      for (int i = 0; i < n; ++i) {
        if (in.mask(i, k) != 0.0) pin.col(static_cast<Eigen::Index>(k) * n + i) = f.row(i).transpose();
        else pin.col(static_cast<Eigen::Index>(k) * n + i).setZero();
      }
    encode(p.enc->product, pin, enc_p_);
    encode(p.enc->customer, in.customer, enc_c_);
    const Dyn& ep = enc_p_.post.back();
    const Dyn& ec = enc_c_.post.back();
    u_.resize(n, b);
    for (int k = 0; k < b; ++k) u_.col(k).noalias() = ep.middleCols(static_cast<Eigen::Index>(k) * n, n).transpose() * ec.col(k);
    if (p.arch == Arch::kRasn) {
      x0.resize(2 * n, b);
      x0.topRows(n) = u_;
      x0.bottomRows(n) = in.mask;
    } else {
      x0 = u_;
    }
  } else {
    x0 = in.mask;
  }
  const std::size_t depth = p.layers.size();
  pre_.resize(depth);
  post_.resize(depth + 1);
  post_[0] = std::move(x0);
  for (std::size_t l = 0; l < depth; ++l) {
    pre_[l].noalias() = p.layers[l].w * post_[l];
    pre_[l].colwise() += p.layers[l].b;
    post_[l + 1] = pre_[l].cwiseMax(0.0);
    if (p.arch == Arch::kRasn) post_[l + 1] += post_[l];
  }
  if (p.head) {
    logits_.noalias() = p.head->w * post_[depth];
    logits_.colwise() += p.head->b;
  } else {
    logits_ = post_[depth];
  }
  // Gated softmax.
  probs_.setZero(n, b);
  double loss = 0.0;
  int known = 0;
  for (int k = 0; k < b; ++k) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      if (in.mask(i, k) != 0.0) mx = std::max(mx, logits_(i, k));
    double z = 0.0;
    for (int i = 0; i < n; ++i)
      if (in.mask(i, k) != 0.0) {
        const double e = std::exp(logits_(i, k) - mx);
        probs_(i, k) = e;
        z += e;
      }
    probs_.col(k) /= z;
    const int c = in.chosen[static_cast<std::size_t>(k)];
    if (c >= 0) {
      if (in.mask(c, k) == 0.0) throw DatasetError("chosen product is not offered");
      loss -= logits_(c, k) - mx - std::log(z);
      ++known;
    }
  }
  return known > 0 ? loss / known : 0.0;
}

void NetEngine::backward(const NetworkParams& p, NetworkParams& grad) {
  if (!in_) throw InvariantError("backward called before forward");
  const BatchInput& in = *in_;
  const int n = p.n;
  const int b = in.size();
  int known = 0;
  for (int c : in.chosen) known += c >= 0;
  if (known == 0) return;
  Dyn g = probs_;
  for (int k = 0; k < b; ++k) {
    const int c = in.chosen[static_cast<std::size_t>(k)];
    if (c < 0) g.col(k).setZero();
    else g(c, k) -= 1.0;
  }
  g /= known;
  const std::size_t depth = p.layers.size();
  Dyn dz;
  if (p.head) {
    grad.head->w.noalias() += g * post_[depth].transpose();
    grad.head->b += g.rowwise().sum();
    dz = p.head->w.transpose() * g;
  } else {
    dz = std::move(g);
  }
  for (std::size_t l = depth; l-- > 0;) {
    Dyn da = dz.cwiseProduct((pre_[l].array() > 0.0).cast<double>().matrix());
    grad.layers[l].w.noalias() += da * post_[l].transpose();
    grad.layers[l].b += da.rowwise().sum();
    if (l == 0 && !p.enc) break;
    Dyn dx = p.layers[l].w.transpose() * da;
    if (p.arch == Arch::kRasn) dx += dz;
    dz = std::move(dx);
  }
  if (!p.enc) return;
  if (depth == 0 && p.arch == Arch::kGasn) throw InvariantError("gated network without layers");
  Dyn du = p.arch == Arch::kRasn ? Dyn(dz.topRows(n)) : dz;
  const Dyn& ep = enc_p_.post.back();
  const Dyn& ec = enc_c_.post.back();
  Dyn dep(ep.rows(), ep.cols());
  Dyn dec(ec.rows(), ec.cols());
  for (int k = 0; k < b; ++k) {
    dep.middleCols(static_cast<Eigen::Index>(k) * n, n).noalias() = ec.col(k) * du.col(k).transpose();
    dec.col(k).noalias() = ep.middleCols(static_cast<Eigen::Index>(k) * n, n) * du.col(k);
  }
  encode_back(p.enc->product, enc_p_, std::move(dep), grad.enc->product);
  encode_back(p.enc->customer, enc_c_, std::move(dec), grad.enc->customer);
}

ForwardTrace forward_trace(const NetworkParams& p, const Assortment& s, const Features& f) {
  NetEngine e;
  BatchInput in = make_single(p, s, f);
  e.forward(p, in);
  ForwardTrace t;
  t.prob.resize(static_cast<std::size_t>(p.n));
  for (int i = 0; i < p.n; ++i) t.prob[static_cast<std::size_t>(i)] = e.probs()(i, 0);
  for (int l = 0; l < p.depth(); ++l) {
    t.pre.push_back(e.pre(l).col(0));
    t.post.push_back(e.post(l).col(0));
  }
  t.logits = e.logits().col(0);
  if (p.enc) t.latent = e.latent().col(0);
  return t;
}

ProbVector forward_gasn(const NetworkParams& p, const Assortment& s) {
  if (p.arch != Arch::kGasn || p.enc) throw UnsupportedError("forward_gasn needs a feature-free gated network");
  return forward_trace(p, s).prob;
}

ProbVector forward_rasn(const NetworkParams& p, const Assortment& s) {
  if (p.arch != Arch::kRasn || p.enc) throw UnsupportedError("forward_rasn needs a feature-free residual network");
  return forward_trace(p, s).prob;
}

ProbVector forward_feature(const NetworkParams& p, const Assortment& s, const Features& f) {
  if (!p.enc) throw UnsupportedError("forward_feature needs a feature-based network");
  return forward_trace(p, s, f).prob;
}

NetworkParams backward(const NetworkParams& p, const Assortment& s, int chosen, const Features& f) {
  if (chosen < 0 || chosen >= p.n || !s.contains(chosen)) throw DatasetError("chosen product is not offered");
  NetEngine e;
  BatchInput in = make_single(p, s, f, chosen);
  e.forward(p, in);
  NetworkParams g = p.zeros_like();
  e.backward(p, g);
  return g;
}

double network_ce(const NetworkParams& p, const ChoiceDataset& data, std::size_t batch) {
  if (data.empty()) throw DatasetError("cross-entropy of an empty dataset");
  NetEngine e;
  std::vector<std::size_t> idx;
  double total = 0.0;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    idx.clear();
    for (std::size_t k = start; k < std::min(data.size(), start + batch); ++k) idx.push_back(k);
    BatchInput in = make_batch(p, data, idx);
    // Per-sample losses are floored like every other cross-entropy.
    e.forward(p, in);
    for (int k = 0; k < in.size(); ++k)
      total -= std::log(std::max(e.probs()(in.chosen[static_cast<std::size_t>(k)], k), kProbFloor));
  }
  return total / static_cast<double>(data.size());
}

NeuralChoiceModel::NeuralChoiceModel(NetworkParams p) : p_(std::move(p)), u_(p_.universe()) {
  p_.validate();
}

ProbVector NeuralChoiceModel::prob(const Assortment& s) const {
  if (p_.enc) throw UnsupportedError("feature network needs feature inputs");
  return forward_trace(p_, s).prob;
}

ProbVector NeuralChoiceModel::prob(const Assortment& s, const Features& f) const {
  return forward_trace(p_, s, f).prob;
}

}  // namespace choicenet
