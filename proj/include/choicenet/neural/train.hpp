#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "choicenet/core/error.hpp"
#include "choicenet/neural/network.hpp"

namespace choicenet {

struct TrainConfig {
  int batch = 100;
  double lr = 0.0005;
  int epochs = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  // Norm bounds: after every step each body weight matrix has max row L1
  // norm <= w_bound and each bias max |entry| <= b_bound.
  std::optional<double> w_bound;
  std::optional<double> b_bound;
  // Return the snapshot with the lowest validation loss (when validation
  // data is given); otherwise the final parameters.
  bool keep_best = true;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;  // 0 = before the first update
  double train_ce = 0.0;
  double val_ce = 0.0;  // NaN without validation data
};

struct TrainResult {
  NetworkParams params;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val = 0.0;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, std::vector<EpochLog> log)
      : Error(what), log_(std::move(log)) {}
  const std::vector<EpochLog>& log() const { return log_; }

 private:
  std::vector<EpochLog> log_;
};

// Mini-batch Adam on the mean cross-entropy. Shuffling and initialization
// follow cfg.seed only.
TrainResult train(NetworkParams init, const ChoiceDataset& train_data,
                  const ChoiceDataset* val_data, const TrainConfig& cfg);
TrainResult train(const NetSpec& spec, const ChoiceDataset& train_data,
                  const ChoiceDataset* val_data, const TrainConfig& cfg);

// Projects body layers onto the norm ball described above.
void project_params(NetworkParams& p, std::optional<double> w_bound, std::optional<double> b_bound);

}  // namespace choicenet
