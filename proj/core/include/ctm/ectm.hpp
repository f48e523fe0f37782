#pragma once

#include <string>
#include <vector>

#include "ctm/common.hpp"
#include "ctm/corpus.hpp"
#include "ctm/llda.hpp"
#include "ctm/prior.hpp"

namespace ctm {

struct EctmConfig {
  int k = 0;            // topics
  int embed_dim = 300;  // must match the embedding table
  int hidden = 300;
  double lr = 0.005;
  int epochs = 150;
  int batch_size = 256;
  double lambda_beta = 20.0;
  double lambda_theta = 35.0;
  int self_train_period = 50;    // optimizer steps between target updates
  double self_train_blend = 0.5; // weight kept on the old target
  uint64_t seed = 0;
  bool normalize_recon = false;

  void validate() const;
};

struct EctmModel {
  EctmConfig config;

  Eigen::MatrixXd alpha;     // embed_dim x k, trainable
  Eigen::MatrixXd enc_W1;    // hidden x V
  Eigen::VectorXd enc_b1;
  Eigen::MatrixXd enc_W2;    // hidden x hidden
  Eigen::VectorXd enc_b2;
  Eigen::MatrixXd enc_Wmu;   // k x hidden
  Eigen::VectorXd enc_bmu;
  Eigen::MatrixXd enc_Wlv;   // k x hidden
  Eigen::VectorXd enc_blv;

  Eigen::MatrixXd rho;        // embed_dim x V, frozen
  Eigen::MatrixXd rho_tilde;  // embed_dim x V_ref, frozen
  Eigen::VectorXd bias_b;     // V, background word frequencies, sums to 1

  std::vector<std::string> vocab;
  std::vector<std::string> ref_names;
  std::vector<std::string> ref_vocab;
  uint64_t corpus_vocab_hash = 0;
  uint64_t ref_vocab_hash = 0;

  Eigen::MatrixXd theta_t;  // |D| x k, final self-training targets

  int n_words() const { return static_cast<int>(rho.cols()); }
  int n_ref_words() const { return static_cast<int>(rho_tilde.cols()); }
};

// alpha ~ N(0, 0.02^2), Xavier-uniform encoder weights, zero biases,
// bias_b = add-one smoothed corpus word frequencies
EctmModel init_model(const EctmConfig& config, const Eigen::MatrixXd& rho,
                     const Eigen::MatrixXd& rho_tilde, const Corpus& corpus);

// mu and logvar for one normalized bag of words
std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const EctmModel& model,
                                                   const Eigen::VectorXd& x);

// softmax(mu + exp(logvar/2) * noise)
Eigen::VectorXd sample_theta(const Eigen::VectorXd& mu,
                             const Eigen::VectorXd& logvar,
                             const Eigen::VectorXd& noise);

struct TopicMatrices {
  Eigen::MatrixXd beta;          // k x V, rows softmax(rho^T alpha_j)
  Eigen::MatrixXd beta_tilde_r;  // k x V_ref, same alpha through rho_tilde
};
TopicMatrices topic_matrices(const EctmModel& model);

// log(theta^T beta + bias), floored at 1e-12; normalized variant divides the
// mixture by 2 so it stays a distribution
Eigen::VectorXd reconstruct(const Eigen::VectorXd& theta,
                            const Eigen::MatrixXd& beta,
                            const Eigen::VectorXd& bias, bool normalize);

struct LossBreakdown {
  double neg_recon = 0.0;
  double kl_gauss = 0.0;
  double r_beta = 0.0;
  double r_theta = 0.0;
  double total = 0.0;
};

// batch mean of the minimization objective:
//   -recon + KL(q||N(0,I)) + lambda_beta * R_beta + lambda_theta * R_theta
// noise is the fixed k x |batch| reparameterization draw
LossBreakdown loss(const EctmModel& model, const Corpus& corpus,
                   const std::vector<int>& batch, const ReferenceTopics& ref,
                   const Eigen::MatrixXd& theta_t, const Eigen::MatrixXd& noise);

struct Gradients {
  Eigen::MatrixXd alpha, W1, W2, Wmu, Wlv;
  Eigen::VectorXd b1, b2, bmu, blv;
};

// analytic gradients of loss() w.r.t. every trainable tensor; targets theta_t
// are treated as constants
Gradients gradients(const EctmModel& model, const Corpus& corpus,
                    const std::vector<int>& batch, const ReferenceTopics& ref,
                    const Eigen::MatrixXd& theta_t, const Eigen::MatrixXd& noise,
                    LossBreakdown* breakdown = nullptr);

// theta_t <- blend * theta_t + (1 - blend) * theta
void self_train_update(Eigen::MatrixXd& theta_t, const Eigen::MatrixXd& theta,
                       double blend);

struct EpochStats {
  LossBreakdown mean;
  int steps = 0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int total_steps = 0;
};

// Adam over shuffled minibatches of the non-empty docs; every
// self_train_period steps the targets blend toward the current inference.
// Non-finite loss restores the last epoch snapshot into the model and throws
// NumericalError.
TrainResult train(EctmModel& model, const Corpus& corpus,
                  const ReferenceTopics& ref, const PriorMatrix& prior);

// mean-path document mixtures softmax(mu); empty docs get uniform rows
Eigen::MatrixXd infer_theta(const EctmModel& model, const Corpus& corpus);

// per topic, the n highest-probability words; ties broken by word id
std::vector<std::vector<std::string>> top_words(const EctmModel& model, int n);

void save_model(const EctmModel& model, const std::string& path);
EctmModel load_model(const std::string& path);

}  // namespace ctm
