#include "ctm/ectm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace ctm {

void EctmConfig::validate() const {
  if (k < 2) throw ValidationError("ectm: k >= 2 required, got " + std::to_string(k));
  if (embed_dim < 1) throw ValidationError("ectm: embed_dim must be >= 1");
  if (hidden < 1) throw ValidationError("ectm: hidden must be >= 1");
  if (!(lr > 0.0)) throw ValidationError("ectm: lr must be positive");
  if (epochs < 0) throw ValidationError("ectm: epochs must be >= 0");
  if (batch_size < 1) throw ValidationError("ectm: batch_size must be >= 1");
  if (lambda_beta < 0.0) throw ValidationError("ectm: lambda_beta must be >= 0");
  if (lambda_theta < 0.0) throw ValidationError("ectm: lambda_theta must be >= 0");
  if (self_train_period < 1) throw ValidationError("ectm: self_train_period must be >= 1");
  if (!(self_train_blend >= 0.0 && self_train_blend <= 1.0)) {
    throw ValidationError("ectm: self_train_blend must be in [0,1]");
  }
}

namespace {

inline double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::MatrixXd softplus_mat(const Eigen::MatrixXd& x) {
  return x.unaryExpr([](double v) { return softplus(v); });
}

Eigen::MatrixXd sigmoid_mat(const Eigen::MatrixXd& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

// rows softmax(loadings^T alpha_j): loadings is embed_dim x W
Eigen::MatrixXd topic_rows(const Eigen::MatrixXd& loadings, const Eigen::MatrixXd& alpha) {
  Eigen::MatrixXd logits = loadings.transpose() * alpha;  // W x k
  softmax_columns(logits);
  return logits.transpose();  // k x W
}

struct Forward {
  Eigen::MatrixXd X;   // V x B counts
  Eigen::MatrixXd Xn;  // V x B normalized encoder input
  Eigen::MatrixXd A1, H1, A2, H2;        // hidden x B
  Eigen::MatrixXd Mu, Lv, Delta, Theta;  // k x B
  Eigen::MatrixXd beta;        // k x V
  Eigen::MatrixXd beta_tilde;  // k x V_ref
  Eigen::MatrixXd M;           // V x B, scale * (beta^T Theta + bias)
  double scale = 1.0;
};

Forward forward_batch(const EctmModel& model, const Corpus& corpus,
                      const std::vector<int>& batch, const Eigen::MatrixXd& noise) {
  const int V = model.n_words();
  const Eigen::Index B = static_cast<Eigen::Index>(batch.size());
  if (B == 0) throw ValidationError("ectm: empty batch");
  if (noise.rows() != model.config.k || noise.cols() != B) {
    throw ValidationError("ectm: noise must be k x batch");
  }

  Forward f;
  f.X.setZero(V, B);
  for (Eigen::Index i = 0; i < B; ++i) {
    int d = batch[i];
    if (d < 0 || d >= corpus.n_docs()) {
      throw ValidationError("ectm: batch doc index out of range");
    }
    if (corpus.doc_empty(d)) {
      throw ValidationError("ectm: empty document '" + corpus.doc_ids[d] +
                            "' cannot be trained on");
    }
    for (const auto& [w, c] : corpus.docs[d]) f.X(w, i) = static_cast<double>(c);
  }
  f.Xn = f.X;
  for (Eigen::Index i = 0; i < B; ++i) f.Xn.col(i) /= f.Xn.col(i).sum();

  f.A1 = (model.enc_W1 * f.Xn).colwise() + model.enc_b1;
  f.H1 = softplus_mat(f.A1);
  f.A2 = (model.enc_W2 * f.H1).colwise() + model.enc_b2;
  f.H2 = softplus_mat(f.A2);
  f.Mu = (model.enc_Wmu * f.H2).colwise() + model.enc_bmu;
  f.Lv = (model.enc_Wlv * f.H2).colwise() + model.enc_blv;
  f.Delta = f.Mu + ((f.Lv * 0.5).array().exp() * noise.array()).matrix();
  f.Theta = f.Delta;
  softmax_columns(f.Theta);

  f.beta = topic_rows(model.rho, model.alpha);
  f.beta_tilde = topic_rows(model.rho_tilde, model.alpha);

  f.scale = model.config.normalize_recon ? 0.5 : 1.0;
  f.M = ((f.beta.transpose() * f.Theta).colwise() + model.bias_b) * f.scale;
  return f;
}

LossBreakdown loss_from_forward(const Forward& f, const EctmModel& model,
                                const ReferenceTopics& ref,
                                const Eigen::MatrixXd& theta_t,
                                const std::vector<int>& batch) {
  const double B = static_cast<double>(batch.size());
  LossBreakdown out;

  Eigen::ArrayXXd mfl = f.M.array().max(kProbFloor);
  out.neg_recon = -(f.X.array() * mfl.log()).sum() / B;

  out.kl_gauss = 0.5 *
                 (f.Lv.array().exp() + f.Mu.array().square() - 1.0 - f.Lv.array())
                     .sum() /
                 B;

  const int k = model.config.k;
  double rb = 0.0;
  for (int j = 0; j < k; ++j) {
    rb += kl_divergence(ref.beta_r.row(j).transpose(), f.beta_tilde.row(j).transpose());
  }
  out.r_beta = rb / static_cast<double>(k);

  double rt = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    rt += kl_divergence(theta_t.row(batch[i]).transpose(),
                        f.Theta.col(static_cast<Eigen::Index>(i)));
  }
  out.r_theta = rt / B;

  out.total = out.neg_recon + out.kl_gauss + model.config.lambda_beta * out.r_beta +
              model.config.lambda_theta * out.r_theta;
  return out;
}

void check_inputs(const EctmModel& model, const ReferenceTopics& ref,
                  const Eigen::MatrixXd& theta_t) {
  if (ref.k() != model.config.k) {
    throw ValidationError("ectm: reference has " + std::to_string(ref.k()) +
                          " topics, model expects " + std::to_string(model.config.k));
  }
  if (ref.vocab_size() != model.n_ref_words()) {
    throw ValidationError("ectm: reference vocabulary size mismatch");
  }
  if (theta_t.cols() != model.config.k) {
    throw ValidationError("ectm: target matrix must have k columns");
  }
}

}  // namespace

EctmModel init_model(const EctmConfig& config, const Eigen::MatrixXd& rho,
                     const Eigen::MatrixXd& rho_tilde, const Corpus& corpus) {
  config.validate();
  if (rho.rows() != config.embed_dim) {
    throw ValidationError("ectm: rho has " + std::to_string(rho.rows()) +
                          " rows, expected embed_dim " + std::to_string(config.embed_dim));
  }
  if (rho_tilde.rows() != config.embed_dim) {
    throw ValidationError("ectm: rho_tilde row count must equal embed_dim");
  }
  if (rho.cols() != corpus.n_words() || corpus.n_words() == 0) {
    throw ValidationError("ectm: rho columns must match the corpus vocabulary");
  }
  if (rho_tilde.cols() == 0) {
    throw ValidationError("ectm: rho_tilde has no columns");
  }

  EctmModel m;
  m.config = config;
  m.rho = rho;
  m.rho_tilde = rho_tilde;
  m.vocab = corpus.vocab;
  m.corpus_vocab_hash = corpus.vocab_hash();

  const int V = corpus.n_words();
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(V);
  for (int d = 0; d < corpus.n_docs(); ++d) {
    for (const auto& [w, c] : corpus.docs[d]) counts[w] += c;
  }
  m.bias_b = (counts.array() + 1.0) / (counts.sum() + static_cast<double>(V));

  Rng arng(split_seed(config.seed, "init-alpha"));
  m.alpha.resize(config.embed_dim, config.k);
  for (int r = 0; r < config.embed_dim; ++r) {
    for (int c = 0; c < config.k; ++c) m.alpha(r, c) = arng.normal(0.0, 0.02);
  }

  Rng erng(split_seed(config.seed, "init-encoder"));
  auto xavier = [&erng](Eigen::MatrixXd& w, int fan_in, int fan_out) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = erng.uniform(-limit, limit);
    }
  };
  m.enc_W1.resize(config.hidden, V);
  xavier(m.enc_W1, V, config.hidden);
  m.enc_b1 = Eigen::VectorXd::Zero(config.hidden);
  m.enc_W2.resize(config.hidden, config.hidden);
  xavier(m.enc_W2, config.hidden, config.hidden);
  m.enc_b2 = Eigen::VectorXd::Zero(config.hidden);
  m.enc_Wmu.resize(config.k, config.hidden);
  xavier(m.enc_Wmu, config.hidden, config.k);
  m.enc_bmu = Eigen::VectorXd::Zero(config.k);
  m.enc_Wlv.resize(config.k, config.hidden);
  xavier(m.enc_Wlv, config.hidden, config.k);
  m.enc_blv = Eigen::VectorXd::Zero(config.k);

  m.theta_t.resize(0, 0);
  return m;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const EctmModel& model,
                                                   const Eigen::VectorXd& x) {
  if (x.size() != model.n_words()) {
    throw ValidationError("encode: input length must equal vocabulary size");
  }
  Eigen::VectorXd h1 = softplus_mat(model.enc_W1 * x + model.enc_b1);
  Eigen::VectorXd h2 = softplus_mat(model.enc_W2 * h1 + model.enc_b2);
  return {model.enc_Wmu * h2 + model.enc_bmu, model.enc_Wlv * h2 + model.enc_blv};
}

Eigen::VectorXd sample_theta(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar,
                             const Eigen::VectorXd& noise) {
  if (mu.size() != logvar.size() || mu.size() != noise.size()) {
    throw ValidationError("sample_theta: size mismatch");
  }
  Eigen::VectorXd delta =
      mu.array() + (logvar.array() * 0.5).exp() * noise.array();
  return softmax(delta);
}

TopicMatrices topic_matrices(const EctmModel& model) {
  return {topic_rows(model.rho, model.alpha), topic_rows(model.rho_tilde, model.alpha)};
}

Eigen::VectorXd reconstruct(const Eigen::VectorXd& theta, const Eigen::MatrixXd& beta,
                            const Eigen::VectorXd& bias, bool normalize) {
  if (theta.size() != beta.rows() || bias.size() != beta.cols()) {
    throw ValidationError("reconstruct: shape mismatch");
  }
  Eigen::VectorXd m = beta.transpose() * theta + bias;
  if (normalize) m /= 2.0;
  return m.array().max(kProbFloor).log();
}

LossBreakdown loss(const EctmModel& model, const Corpus& corpus,
                   const std::vector<int>& batch, const ReferenceTopics& ref,
                   const Eigen::MatrixXd& theta_t, const Eigen::MatrixXd& noise) {
  check_inputs(model, ref, theta_t);
  Forward f = forward_batch(model, corpus, batch, noise);
  return loss_from_forward(f, model, ref, theta_t, batch);
}

Gradients gradients(const EctmModel& model, const Corpus& corpus,
                    const std::vector<int>& batch, const ReferenceTopics& ref,
                    const Eigen::MatrixXd& theta_t, const Eigen::MatrixXd& noise,
                    LossBreakdown* breakdown) {
  check_inputs(model, ref, theta_t);
  Forward f = forward_batch(model, corpus, batch, noise);
  if (breakdown != nullptr) {
    *breakdown = loss_from_forward(f, model, ref, theta_t, batch);
  }

  const double B = static_cast<double>(batch.size());
  const int k = model.config.k;
  const double lb = model.config.lambda_beta;
  const double lt = model.config.lambda_theta;

  // reconstruction path: d(-recon)/dM through the floored log
  Eigen::ArrayXXd mfl = f.M.array().max(kProbFloor);
  Eigen::ArrayXXd live = (f.M.array() > kProbFloor).cast<double>();
  Eigen::MatrixXd dMix =
      ((-f.X.array() / B) / mfl * live).matrix() * f.scale;  // V x B

  Eigen::MatrixXd dTheta = f.beta * dMix;        // k x B
  Eigen::MatrixXd dBeta = f.Theta * dMix.transpose();  // k x V

  // target-alignment path on theta
  for (size_t i = 0; i < batch.size(); ++i) {
    Eigen::Index col = static_cast<Eigen::Index>(i);
    for (int j = 0; j < k; ++j) {
      double tt = theta_t(batch[i], j);
      double th = f.Theta(j, col);
      if (tt > 0.0 && th > kProbFloor) {
        dTheta(j, col) += -(lt / B) * tt / th;
      }
    }
  }

  // softmax backward per document column
  Eigen::MatrixXd dDelta(k, f.Theta.cols());
  for (Eigen::Index c = 0; c < f.Theta.cols(); ++c) {
    double dot = f.Theta.col(c).dot(dTheta.col(c));
    dDelta.col(c) =
        (f.Theta.col(c).array() * (dTheta.col(c).array() - dot)).matrix();
  }

  Gradients g;
  Eigen::MatrixXd dMu = dDelta + f.Mu / B;
  Eigen::MatrixXd dLv =
      (dDelta.array() * noise.array() * (f.Lv * 0.5).array().exp() * 0.5).matrix() +
      ((f.Lv.array().exp() - 1.0) * (0.5 / B)).matrix();

  g.Wmu = dMu * f.H2.transpose();
  g.bmu = dMu.rowwise().sum();
  g.Wlv = dLv * f.H2.transpose();
  g.blv = dLv.rowwise().sum();

  Eigen::MatrixXd dH2 = model.enc_Wmu.transpose() * dMu + model.enc_Wlv.transpose() * dLv;
  Eigen::MatrixXd dA2 = (dH2.array() * sigmoid_mat(f.A2).array()).matrix();
  g.W2 = dA2 * f.H1.transpose();
  g.b2 = dA2.rowwise().sum();

  Eigen::MatrixXd dH1 = model.enc_W2.transpose() * dA2;
  Eigen::MatrixXd dA1 = (dH1.array() * sigmoid_mat(f.A1).array()).matrix();
  g.W1 = dA1 * f.Xn.transpose();
  g.b1 = dA1.rowwise().sum();

  // alpha through the target-vocab softmax rows
  Eigen::VectorXd rowdot = (dBeta.array() * f.beta.array()).rowwise().sum().matrix();
  Eigen::MatrixXd dS =
      (f.beta.array() * (dBeta.array().colwise() - rowdot.array())).matrix();
  g.alpha = model.rho * dS.transpose();

  // alpha through the reference-vocab rows of R_beta
  Eigen::ArrayXXd bt = f.beta_tilde.array();
  Eigen::ArrayXXd br = ref.beta_r.array();
  Eigen::ArrayXXd live_bt = (bt > kProbFloor).cast<double>();
  Eigen::ArrayXXd live_br = (br > 0.0).cast<double>();
  Eigen::ArrayXXd gtil = -(lb / static_cast<double>(k)) * br /
                          bt.max(kProbFloor) * live_bt * live_br;
  Eigen::VectorXd rowdot_t = (gtil * bt).rowwise().sum().matrix();
  Eigen::MatrixXd dSt = (bt * (gtil.colwise() - rowdot_t.array())).matrix();
  g.alpha += model.rho_tilde * dSt.transpose();

  return g;
}

void self_train_update(Eigen::MatrixXd& theta_t, const Eigen::MatrixXd& theta,
                       double blend) {
  if (theta_t.rows() != theta.rows() || theta_t.cols() != theta.cols()) {
    throw ValidationError("self_train_update: shape mismatch");
  }
  if (!(blend >= 0.0 && blend <= 1.0)) {
    throw ValidationError("self_train_update: blend must be in [0,1]");
  }
  theta_t = blend * theta_t + (1.0 - blend) * theta;
}

namespace {

struct AdamState {
  Eigen::MatrixXd m, v;
  void init(Eigen::Index rows, Eigen::Index cols) {
    m.setZero(rows, cols);
    v.setZero(rows, cols);
  }
};

template <typename P, typename G>
void adam_step(P& param, const G& grad, AdamState& st, double lr, int t) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  st.m = b1 * st.m + (1.0 - b1) * grad;
  st.v = (b2 * st.v.array() + (1.0 - b2) * grad.array().square()).matrix();
  double c1 = 1.0 - std::pow(b1, t);
  double c2 = 1.0 - std::pow(b2, t);
  param.array() -=
      lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + eps);
}

struct Snapshot {
  Eigen::MatrixXd alpha, W1, W2, Wmu, Wlv;
  Eigen::VectorXd b1, b2, bmu, blv;
  Eigen::MatrixXd theta_t;

  static Snapshot take(const EctmModel& m, const Eigen::MatrixXd& tt) {
    return {m.alpha, m.enc_W1, m.enc_W2, m.enc_Wmu, m.enc_Wlv,
            m.enc_b1, m.enc_b2, m.enc_bmu, m.enc_blv, tt};
  }
  void restore(EctmModel& m) const {
    m.alpha = alpha;
    m.enc_W1 = W1;
    m.enc_W2 = W2;
    m.enc_Wmu = Wmu;
    m.enc_Wlv = Wlv;
    m.enc_b1 = b1;
    m.enc_b2 = b2;
    m.enc_bmu = bmu;
    m.enc_blv = blv;
    m.theta_t = theta_t;
  }
};

}  // namespace

TrainResult train(EctmModel& model, const Corpus& corpus, const ReferenceTopics& ref,
                  const PriorMatrix& prior) {
  model.config.validate();
  ref.validate();
  prior.validate();
  check_inputs(model, ref, prior.theta_t);
  if (corpus.n_words() != model.n_words()) {
    throw ValidationError("train: corpus vocabulary does not match the model");
  }
  if (corpus.vocab_hash() != model.corpus_vocab_hash) {
    throw ValidationError("train: corpus vocabulary hash does not match the model");
  }
  if (prior.doc_ids.size() != corpus.doc_ids.size()) {
    throw ValidationError("train: prior covers " + std::to_string(prior.doc_ids.size()) +
                          " docs, corpus has " + std::to_string(corpus.doc_ids.size()));
  }
  for (size_t d = 0; d < prior.doc_ids.size(); ++d) {
    if (prior.doc_ids[d] != corpus.doc_ids[d]) {
      throw ValidationError("train: prior row " + std::to_string(d) + " is for doc '" +
                            prior.doc_ids[d] + "' but corpus has '" + corpus.doc_ids[d] + "'");
    }
  }
  if (prior.names != ref.names) {
    throw ValidationError("train: prior topic names do not match the reference");
  }

  std::vector<int> pool = corpus.nonempty_docs();
  if (pool.empty()) throw ValidationError("train: corpus has no non-empty documents");

  // bind the reference identity up front so a checkpoint saved after a
  // divergence abort still carries it
  model.ref_names = ref.names;
  model.ref_vocab = ref.ref_vocab;
  model.ref_vocab_hash = ref.vocab_hash();

  const auto& cfg = model.config;
  Eigen::MatrixXd theta_t = prior.theta_t;

  Rng shuffle_rng(split_seed(cfg.seed, "shuffle"));
  Rng noise_rng(split_seed(cfg.seed, "noise"));

  AdamState s_alpha, s_W1, s_b1, s_W2, s_b2, s_Wmu, s_bmu, s_Wlv, s_blv;
  s_alpha.init(model.alpha.rows(), model.alpha.cols());
  s_W1.init(model.enc_W1.rows(), model.enc_W1.cols());
  s_b1.init(model.enc_b1.size(), 1);
  s_W2.init(model.enc_W2.rows(), model.enc_W2.cols());
  s_b2.init(model.enc_b2.size(), 1);
  s_Wmu.init(model.enc_Wmu.rows(), model.enc_Wmu.cols());
  s_bmu.init(model.enc_bmu.size(), 1);
  s_Wlv.init(model.enc_Wlv.rows(), model.enc_Wlv.cols());
  s_blv.init(model.enc_blv.size(), 1);

  Snapshot last_good = Snapshot::take(model, theta_t);
  TrainResult result;
  int step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(pool);
    EpochStats stats;
    for (size_t off = 0; off < pool.size(); off += cfg.batch_size) {
      size_t hi = std::min(pool.size(), off + static_cast<size_t>(cfg.batch_size));
      std::vector<int> batch(pool.begin() + off, pool.begin() + hi);

      Eigen::MatrixXd noise(cfg.k, static_cast<Eigen::Index>(batch.size()));
      for (Eigen::Index c = 0; c < noise.cols(); ++c) {
        for (int r = 0; r < cfg.k; ++r) noise(r, c) = noise_rng.normal();
      }

      LossBreakdown lb;
      Gradients g = gradients(model, corpus, batch, ref, theta_t, noise, &lb);
      if (!std::isfinite(lb.total)) {
        last_good.restore(model);
        throw NumericalError("training diverged (non-finite loss) at epoch " +
                             std::to_string(epoch) + ", step " + std::to_string(step + 1) +
                             "; model restored to the last completed epoch");
      }

      ++step;
      adam_step(model.alpha, g.alpha, s_alpha, cfg.lr, step);
      adam_step(model.enc_W1, g.W1, s_W1, cfg.lr, step);
      adam_step(model.enc_b1, g.b1, s_b1, cfg.lr, step);
      adam_step(model.enc_W2, g.W2, s_W2, cfg.lr, step);
      adam_step(model.enc_b2, g.b2, s_b2, cfg.lr, step);
      adam_step(model.enc_Wmu, g.Wmu, s_Wmu, cfg.lr, step);
      adam_step(model.enc_bmu, g.bmu, s_bmu, cfg.lr, step);
      adam_step(model.enc_Wlv, g.Wlv, s_Wlv, cfg.lr, step);
      adam_step(model.enc_blv, g.blv, s_blv, cfg.lr, step);

      stats.mean.neg_recon += lb.neg_recon;
      stats.mean.kl_gauss += lb.kl_gauss;
      stats.mean.r_beta += lb.r_beta;
      stats.mean.r_theta += lb.r_theta;
      stats.mean.total += lb.total;
      ++stats.steps;

      if (step % cfg.self_train_period == 0) {
        Eigen::MatrixXd theta_now = infer_theta(model, corpus);
        self_train_update(theta_t, theta_now, cfg.self_train_blend);
      }
    }
    if (stats.steps > 0) {
      stats.mean.neg_recon /= stats.steps;
      stats.mean.kl_gauss /= stats.steps;
      stats.mean.r_beta /= stats.steps;
      stats.mean.r_theta /= stats.steps;
      stats.mean.total /= stats.steps;
    }
    result.history.push_back(stats);
    last_good = Snapshot::take(model, theta_t);
  }

  result.total_steps = step;
  model.theta_t = theta_t;
  return result;
}

Eigen::MatrixXd infer_theta(const EctmModel& model, const Corpus& corpus) {
  if (corpus.n_words() != model.n_words()) {
    throw ValidationError("infer_theta: corpus vocabulary does not match the model");
  }
  const int D = corpus.n_docs();
  const int k = model.config.k;
  Eigen::MatrixXd theta(D, k);
  const int chunk = 1024;
  std::vector<int> docs;
  for (int lo = 0; lo < D; lo += chunk) {
    int hi = std::min(D, lo + chunk);
    docs.clear();
    for (int d = lo; d < hi; ++d) {
      if (!corpus.doc_empty(d)) docs.push_back(d);
    }
    if (!docs.empty()) {
      Eigen::MatrixXd X(model.n_words(), static_cast<Eigen::Index>(docs.size()));
      X.setZero();
      for (size_t i = 0; i < docs.size(); ++i) {
        for (const auto& [w, c] : corpus.docs[docs[i]]) {
          X(w, static_cast<Eigen::Index>(i)) = static_cast<double>(c);
        }
        X.col(static_cast<Eigen::Index>(i)) /= X.col(static_cast<Eigen::Index>(i)).sum();
      }
      Eigen::MatrixXd H1 = softplus_mat((model.enc_W1 * X).colwise() + model.enc_b1);
      Eigen::MatrixXd H2 = softplus_mat((model.enc_W2 * H1).colwise() + model.enc_b2);
      Eigen::MatrixXd Mu = (model.enc_Wmu * H2).colwise() + model.enc_bmu;
      softmax_columns(Mu);
      for (size_t i = 0; i < docs.size(); ++i) {
        theta.row(docs[i]) = Mu.col(static_cast<Eigen::Index>(i)).transpose();
      }
    }
    for (int d = lo; d < hi; ++d) {
      if (corpus.doc_empty(d)) theta.row(d).setConstant(1.0 / static_cast<double>(k));
    }
  }
  return theta;
}

std::vector<std::vector<std::string>> top_words(const EctmModel& model, int n) {
  if (n < 1) throw ValidationError("top_words: n must be >= 1");
  if (n > model.n_words()) {
    throw ValidationError("top_words: n = " + std::to_string(n) +
                          " exceeds vocabulary size " + std::to_string(model.n_words()));
  }
  if (model.vocab.size() != static_cast<size_t>(model.n_words())) {
    throw ValidationError("top_words: model is missing its vocabulary");
  }
  Eigen::MatrixXd beta = topic_rows(model.rho, model.alpha);
  std::vector<std::vector<std::string>> out(model.config.k);
  std::vector<int> order(model.n_words());
  for (int j = 0; j < model.config.k; ++j) {
    for (int v = 0; v < model.n_words(); ++v) order[v] = v;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (beta(j, a) != beta(j, b)) return beta(j, a) > beta(j, b);
      return a < b;
    });
    out[j].reserve(n);
    for (int i = 0; i < n; ++i) out[j].push_back(model.vocab[order[i]]);
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'C', 'T', 'M', 'M', 'D', 'L', '0', '1'};

void put_bytes(std::ofstream& f, const void* p, size_t n) {
  f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void put(std::ofstream& f, T v) {
  put_bytes(f, &v, sizeof(T));
}

void put_string(std::ofstream& f, const std::string& s) {
  put<uint64_t>(f, s.size());
  put_bytes(f, s.data(), s.size());
}

void put_strings(std::ofstream& f, const std::vector<std::string>& v) {
  put<uint64_t>(f, v.size());
  for (const auto& s : v) put_string(f, s);
}

void put_matrix(std::ofstream& f, const Eigen::MatrixXd& m) {
  put<uint64_t>(f, static_cast<uint64_t>(m.rows()));
  put<uint64_t>(f, static_cast<uint64_t>(m.cols()));
  put_bytes(f, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}

void put_vector(std::ofstream& f, const Eigen::VectorXd& v) {
  put<uint64_t>(f, static_cast<uint64_t>(v.size()));
  put_bytes(f, v.data(), sizeof(double) * static_cast<size_t>(v.size()));
}

void get_bytes(std::ifstream& f, void* p, size_t n, const std::string& path) {
  f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(f.gcount()) != n) {
    throw IoError("truncated model file '" + path + "'");
  }
}

template <typename T>
T get(std::ifstream& f, const std::string& path) {
  T v;
  get_bytes(f, &v, sizeof(T), path);
  return v;
}

std::string get_string(std::ifstream& f, const std::string& path) {
  uint64_t n = get<uint64_t>(f, path);
  if (n > (1ull << 30)) throw IoError("corrupt string length in '" + path + "'");
  std::string s(n, '\0');
  if (n > 0) get_bytes(f, s.data(), n, path);
  return s;
}

std::vector<std::string> get_strings(std::ifstream& f, const std::string& path) {
  uint64_t n = get<uint64_t>(f, path);
  if (n > (1ull << 30)) throw IoError("corrupt list length in '" + path + "'");
  std::vector<std::string> v(n);
  for (auto& s : v) s = get_string(f, path);
  return v;
}

Eigen::MatrixXd get_matrix(std::ifstream& f, const std::string& path) {
  uint64_t r = get<uint64_t>(f, path);
  uint64_t c = get<uint64_t>(f, path);
  if (r > (1ull << 24) || c > (1ull << 24)) {
    throw IoError("corrupt matrix shape in '" + path + "'");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  if (m.size() > 0) {
    get_bytes(f, m.data(), sizeof(double) * static_cast<size_t>(m.size()), path);
  }
  return m;
}

Eigen::VectorXd get_evector(std::ifstream& f, const std::string& path) {
  uint64_t n = get<uint64_t>(f, path);
  if (n > (1ull << 30)) throw IoError("corrupt vector length in '" + path + "'");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  if (n > 0) get_bytes(f, v.data(), sizeof(double) * n, path);
  return v;
}

uint64_t strings_hash(const std::vector<std::string>& v) {
  uint64_t h = 14695981039346656037ull;
  for (const auto& w : v) {
    h ^= fnv1a(w);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void save_model(const EctmModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write model to '" + path + "'");
  put_bytes(f, kMagic, sizeof(kMagic));
  put<uint32_t>(f, 0x01020304u);

  const auto& c = model.config;
  put<int64_t>(f, c.k);
  put<int64_t>(f, c.embed_dim);
  put<int64_t>(f, c.hidden);
  put<int64_t>(f, c.epochs);
  put<int64_t>(f, c.batch_size);
  put<int64_t>(f, c.self_train_period);
  put<double>(f, c.lr);
  put<double>(f, c.lambda_beta);
  put<double>(f, c.lambda_theta);
  put<double>(f, c.self_train_blend);
  put<uint64_t>(f, c.seed);
  put<uint8_t>(f, c.normalize_recon ? 1 : 0);

  put_strings(f, model.vocab);
  put_strings(f, model.ref_names);
  put_strings(f, model.ref_vocab);
  put<uint64_t>(f, model.corpus_vocab_hash);
  put<uint64_t>(f, model.ref_vocab_hash);

  put_matrix(f, model.alpha);
  put_matrix(f, model.enc_W1);
  put_vector(f, model.enc_b1);
  put_matrix(f, model.enc_W2);
  put_vector(f, model.enc_b2);
  put_matrix(f, model.enc_Wmu);
  put_vector(f, model.enc_bmu);
  put_matrix(f, model.enc_Wlv);
  put_vector(f, model.enc_blv);
  put_matrix(f, model.rho);
  put_matrix(f, model.rho_tilde);
  put_vector(f, model.bias_b);
  put_matrix(f, model.theta_t);
  if (!f) throw IoError("failed writing model to '" + path + "'");
}

EctmModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read model from '" + path + "'");
  char magic[8];
  get_bytes(f, magic, sizeof(magic), path);
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("'" + path + "' is not a model checkpoint");
  }
  if (get<uint32_t>(f, path) != 0x01020304u) {
    throw IoError("'" + path + "' has mismatched byte order");
  }

  EctmModel m;
  m.config.k = static_cast<int>(get<int64_t>(f, path));
  m.config.embed_dim = static_cast<int>(get<int64_t>(f, path));
  m.config.hidden = static_cast<int>(get<int64_t>(f, path));
  m.config.epochs = static_cast<int>(get<int64_t>(f, path));
  m.config.batch_size = static_cast<int>(get<int64_t>(f, path));
  m.config.self_train_period = static_cast<int>(get<int64_t>(f, path));
  m.config.lr = get<double>(f, path);
  m.config.lambda_beta = get<double>(f, path);
  m.config.lambda_theta = get<double>(f, path);
  m.config.self_train_blend = get<double>(f, path);
  m.config.seed = get<uint64_t>(f, path);
  m.config.normalize_recon = get<uint8_t>(f, path) != 0;

  m.vocab = get_strings(f, path);
  m.ref_names = get_strings(f, path);
  m.ref_vocab = get_strings(f, path);
  m.corpus_vocab_hash = get<uint64_t>(f, path);
  m.ref_vocab_hash = get<uint64_t>(f, path);

  m.alpha = get_matrix(f, path);
  m.enc_W1 = get_matrix(f, path);
  m.enc_b1 = get_evector(f, path);
  m.enc_W2 = get_matrix(f, path);
  m.enc_b2 = get_evector(f, path);
  m.enc_Wmu = get_matrix(f, path);
  m.enc_bmu = get_evector(f, path);
  m.enc_Wlv = get_matrix(f, path);
  m.enc_blv = get_evector(f, path);
  m.rho = get_matrix(f, path);
  m.rho_tilde = get_matrix(f, path);
  m.bias_b = get_evector(f, path);
  m.theta_t = get_matrix(f, path);

  if (strings_hash(m.vocab) != m.corpus_vocab_hash) {
    throw IoError("'" + path + "': vocabulary hash mismatch, file is corrupt");
  }
  if (!m.ref_vocab.empty() && strings_hash(m.ref_vocab) != m.ref_vocab_hash) {
    throw IoError("'" + path + "': reference vocabulary hash mismatch, file is corrupt");
  }
  if (m.alpha.rows() != m.config.embed_dim || m.alpha.cols() != m.config.k ||
      m.rho.rows() != m.config.embed_dim ||
      m.rho.cols() != static_cast<Eigen::Index>(m.vocab.size()) ||
      m.rho_tilde.rows() != m.config.embed_dim ||
      m.rho_tilde.cols() != static_cast<Eigen::Index>(m.ref_vocab.size()) ||
      m.bias_b.size() != m.rho.cols()) {
    throw IoError("'" + path + "': tensor shapes disagree with the stored config");
  }
  return m;
}

}  // namespace ctm
