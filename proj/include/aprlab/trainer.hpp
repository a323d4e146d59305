// Copyright 2026 The APRLab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aprlab/dataset.hpp"
#include "aprlab/model.hpp"

namespace aprlab {

/// One training instance: user, an interacted (positive) item, and a sampled
/// not-interacted (negative) item.
struct Triplet {
  int user = 0;
  int pos = 0;
  int neg = 0;
};

enum class FgsmNorm {
  kJoint,   // one L2 norm across the three touched blocks (default)
  kPerRow,  // each nonzero block scaled to length eps on its own
};

struct TrainSchedule {
  double eta = 0.05;    // learning rate
  int t_bpr = 100;      // epochs 1..t_bpr use the plain pairwise step
  int t_apr = 200;      // epochs t_bpr+1..t_apr add the adversarial term
  double eps = 0.0;     // perturbation budget
  double alpha = 0.0;   // adversarial regularization coefficient
  double l2 = 0.0;      // optional weight decay, off by default
  std::uint64_t seed = 0;
  FgsmNorm fgsm_norm = FgsmNorm::kJoint;
};

/// Additive noise blocks for the three rows touched by one triplet. Under
/// joint normalization the L2 norm over all three blocks is either 0 or eps.
struct Perturbation {
  std::vector<double> d_pu;
  std::vector<double> d_qi;
  std::vector<double> d_qj;
  double eps = 0.0;

  bool zero() const;
};

struct StepOutcome {
  double omega = 0.0;                // 1 - sigma(s_uij), from pre-update values
  std::optional<double> omega_adv;   // same at the perturbed parameters
};

/// Receives one event per processed triplet, in processing order.
class TrainingSink {
 public:
  virtual ~TrainingSink() = default;
  virtual void on_triplet(int epoch, double omega, std::optional<double> omega_adv,
                          int pos_item, int neg_item) = 0;
  virtual void on_epoch_end(int /*epoch*/) {}
};

class NullSink final : public TrainingSink {
 public:
  void on_triplet(int, double, std::optional<double>, int, int) override {}
};

/// One triplet per observed (user,item) pair; negatives drawn uniformly from
/// the user's non-interacted items by rejection; order shuffled.
/// Deterministic given (seed, epoch). Pairs whose user has no candidate
/// negative are skipped with a warning.
std::vector<Triplet> sample_epoch(const Dataset& train, std::uint64_t seed, int epoch);

/// -sum ln sigma(s_uij), evaluated as softplus(-s_uij) per triplet.
double bpr_loss(const FactorModel& model, std::span<const Triplet> triplets);

/// One SGD step on the pairwise loss; all right-hand sides use pre-update
/// values. Returns omega.
double bpr_step(FactorModel& model, const Triplet& t, double eta, double l2);

/// FGSM noise: eps * Gamma / ||Gamma|| where Gamma is the gradient of the
/// single-triplet loss w.r.t. the three touched rows. Zero when Gamma is.
Perturbation fgsm_perturbation(const FactorModel& model, const Triplet& t, double eps,
                               FgsmNorm norm = FgsmNorm::kJoint);

/// dot(P_u + d_pu, (Q_i + d_qi) - (Q_j + d_qj)).
double adversarial_score_diff(const FactorModel& model, const Perturbation& pert,
                              const Triplet& t);

/// One adversarially regularized step: the plain pairwise term plus alpha
/// times the term at parameters shifted by the (frozen) FGSM noise.
StepOutcome apr_step(FactorModel& model, const Triplet& t, double eta, double eps,
                     double alpha, double l2, FgsmNorm norm = FgsmNorm::kJoint);

/// Runs epochs [first_epoch, last_epoch] of the schedule against the model,
/// emitting one sink event per triplet.
void train_epochs(FactorModel& model, const Dataset& train_ds, const TrainSchedule& sched,
                  int first_epoch, int last_epoch, TrainingSink& sink);

/// Full two-phase schedule: epochs 1..t_apr.
void train(FactorModel& model, const Dataset& train_ds, const TrainSchedule& sched,
           TrainingSink& sink);

}  // namespace aprlab
