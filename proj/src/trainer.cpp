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

#include "aprlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "aprlab/errors.hpp"
#include "aprlab/numeric.hpp"

namespace aprlab {

namespace {

struct StepWorkspace {
  std::vector<double> qd;      // Q_i - Q_j
  std::vector<double> pu_pre;  // P_u before the update
  explicit StepWorkspace(int f) : qd(f), pu_pre(f) {}
};

void check_triplet(const FactorModel& m, const Triplet& t) {
  if (t.user < 0 || t.user >= m.num_users() || t.pos < 0 || t.pos >= m.num_items() ||
      t.neg < 0 || t.neg >= m.num_items()) {
    throw DataError("triplet index out of range");
  }
}

[[noreturn]] void throw_nonfinite(const char* stage, const Triplet& t, double s, double eta) {
  throw NumericalError(std::string("non-finite ") + stage + " for triplet (" +
                       std::to_string(t.user) + "," + std::to_string(t.pos) + "," +
                       std::to_string(t.neg) + "), s_uij=" + format_real(s) +
                       ", eta=" + format_real(eta) + "; lower eta/eps/alpha");
}

// Shared by the plain step and the alpha = 0 adversarial step so the two are
// bitwise identical.
void apply_bpr_update(std::span<double> pu, std::span<double> qi, std::span<double> qj,
                      std::span<const double> qd, std::span<double> pu_pre, double eta,
                      double omega, double l2, const Triplet& t, double s) {
  const int f = static_cast<int>(pu.size());
  double check = 0.0;
  for (int l = 0; l < f; ++l) {
    pu_pre[l] = pu[l];
    pu[l] += eta * (omega * qd[l] - l2 * pu[l]);
    check += pu[l];
  }
  for (int l = 0; l < f; ++l) {
    qi[l] += eta * (omega * pu_pre[l] - l2 * qi[l]);
    check += qi[l];
  }
  for (int l = 0; l < f; ++l) {
    qj[l] += eta * (-omega * pu_pre[l] - l2 * qj[l]);
    check += qj[l];
  }
  if (!std::isfinite(check)) throw_nonfinite("update", t, s, eta);
}

double bpr_core(FactorModel& m, const Triplet& t, double eta, double l2, StepWorkspace& ws) {
  auto pu = m.user_row(t.user);
  auto qi = m.item_row(t.pos);
  auto qj = m.item_row(t.neg);
  const int f = m.factors();

  double s = 0.0;
  for (int l = 0; l < f; ++l) {
    ws.qd[l] = qi[l] - qj[l];
    s += pu[l] * ws.qd[l];
  }
  if (!std::isfinite(s)) throw_nonfinite("score difference", t, s, eta);
  const double omega = logistic(-s);
  apply_bpr_update(pu, qi, qj, ws.qd, ws.pu_pre, eta, omega, l2, t, s);
  return omega;
}

// FGSM scale factors: d_pu = -c_pu*qd, d_qi = -c_q*pu, d_qj = +c_q*pu. The
// magnitude omega cancels out of eps*Gamma/||Gamma||, so the factors depend
// only on the row geometry; omega == 0 still forces the zero perturbation.
struct FgsmScales {
  double c_pu = 0.0;
  double c_q = 0.0;
};

FgsmScales fgsm_scales(double omega, double snqd, double snpu, double eps, FgsmNorm norm) {
  FgsmScales c;
  if (eps <= 0.0 || omega <= 0.0) return c;
  if (norm == FgsmNorm::kJoint) {
    const double denom2 = snqd + 2.0 * snpu;
    if (denom2 > 0.0) {
      const double scale = eps / std::sqrt(denom2);
      c.c_pu = scale;
      c.c_q = scale;
    }
  } else {
    if (snqd > 0.0) c.c_pu = eps / std::sqrt(snqd);
    if (snpu > 0.0) c.c_q = eps / std::sqrt(snpu);
  }
  return c;
}

StepOutcome apr_core(FactorModel& m, const Triplet& t, double eta, double eps, double alpha,
                     double l2, FgsmNorm norm, StepWorkspace& ws) {
  auto pu = m.user_row(t.user);
  auto qi = m.item_row(t.pos);
  auto qj = m.item_row(t.neg);
  const int f = m.factors();

  double s = 0.0, snqd = 0.0, snpu = 0.0;
  for (int l = 0; l < f; ++l) {
    ws.qd[l] = qi[l] - qj[l];
    s += pu[l] * ws.qd[l];
    snqd += ws.qd[l] * ws.qd[l];
    snpu += pu[l] * pu[l];
  }
  if (!std::isfinite(s)) throw_nonfinite("score difference", t, s, eta);
  const double omega = logistic(-s);

  const FgsmScales c = fgsm_scales(omega, snqd, snpu, eps, norm);
  // s_adv = dot(P_u + d_pu, (Q_i + d_qi) - (Q_j + d_qj)); the item blocks
  // contribute qd - 2*c_q*pu, the user block pu - c_pu*qd.
  double s_adv = 0.0;
  for (int l = 0; l < f; ++l) {
    s_adv += (pu[l] - c.c_pu * ws.qd[l]) * (ws.qd[l] - 2.0 * c.c_q * pu[l]);
  }
  const double omega_adv = logistic(-s_adv);

  if (alpha == 0.0) {
    apply_bpr_update(pu, qi, qj, ws.qd, ws.pu_pre, eta, omega, l2, t, s);
    return StepOutcome{omega, omega_adv};
  }

  const double aw = alpha * omega_adv;
  double check = 0.0;
  for (int l = 0; l < f; ++l) {
    ws.pu_pre[l] = pu[l];
    // adversarial direction for P_u: (Q_i+d_qi)-(Q_j+d_qj) = qd - 2*c_q*pu
    pu[l] += eta * (omega * ws.qd[l] + aw * (ws.qd[l] - 2.0 * c.c_q * ws.pu_pre[l]) -
                    l2 * ws.pu_pre[l]);
    check += pu[l];
  }
  for (int l = 0; l < f; ++l) {
    const double pu_adv = ws.pu_pre[l] - c.c_pu * ws.qd[l];  // P_u + d_pu
    qi[l] += eta * (omega * ws.pu_pre[l] + aw * pu_adv - l2 * qi[l]);
    check += qi[l];
  }
  for (int l = 0; l < f; ++l) {
    const double pu_adv = ws.pu_pre[l] - c.c_pu * ws.qd[l];
    qj[l] += eta * (-omega * ws.pu_pre[l] - aw * pu_adv - l2 * qj[l]);
    check += qj[l];
  }
  if (!std::isfinite(check)) throw_nonfinite("update", t, s, eta);
  return StepOutcome{omega, omega_adv};
}

}  // namespace

bool Perturbation::zero() const {
  auto all_zero = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
  };
  return all_zero(d_pu) && all_zero(d_qi) && all_zero(d_qj);
}

std::vector<Triplet> sample_epoch(const Dataset& train, std::uint64_t seed, int epoch) {
  const int n_items = train.num_items();
  std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(epoch), 0x3a9du};
  std::mt19937_64 gen(sseq);
  std::uniform_int_distribution<int> pick_item(0, n_items - 1);

  std::vector<Triplet> triplets;
  triplets.reserve(train.interactions().size());
  int skipped = 0;
  for (const Interaction& x : train.interactions()) {
    auto pos = train.positives(x.user);
    if (static_cast<int>(pos.size()) >= n_items) {
      ++skipped;
      continue;
    }
    int j = pick_item(gen);
    while (std::binary_search(pos.begin(), pos.end(), j)) j = pick_item(gen);
    triplets.push_back(Triplet{x.user, x.item, j});
  }
  if (skipped > 0) {
    std::fprintf(stderr, "warning: epoch %d skipped %d pairs whose user has no negative items\n",
                 epoch, skipped);
  }
  std::shuffle(triplets.begin(), triplets.end(), gen);
  return triplets;
}

double bpr_loss(const FactorModel& model, std::span<const Triplet> triplets) {
  if (triplets.empty()) throw DataError("bpr_loss needs at least one triplet");
  double loss = 0.0;
  for (const Triplet& t : triplets) {
    loss += softplus(-model.score_diff(t.user, t.pos, t.neg));
  }
  return loss;
}

double bpr_step(FactorModel& model, const Triplet& t, double eta, double l2) {
  check_triplet(model, t);
  StepWorkspace ws(model.factors());
  return bpr_core(model, t, eta, l2, ws);
}

Perturbation fgsm_perturbation(const FactorModel& model, const Triplet& t, double eps,
                               FgsmNorm norm) {
  check_triplet(model, t);
  if (eps < 0.0) throw DataError("eps must be >= 0");
  const int f = model.factors();
  auto pu = model.user_row(t.user);
  auto qi = model.item_row(t.pos);
  auto qj = model.item_row(t.neg);

  std::vector<double> qd(f);
  double s = 0.0, snqd = 0.0, snpu = 0.0;
  for (int l = 0; l < f; ++l) {
    qd[l] = qi[l] - qj[l];
    s += pu[l] * qd[l];
    snqd += qd[l] * qd[l];
    snpu += pu[l] * pu[l];
  }
  const double omega = logistic(-s);
  const FgsmScales c = fgsm_scales(omega, snqd, snpu, eps, norm);

  Perturbation pert;
  pert.eps = eps;
  pert.d_pu.resize(f);
  pert.d_qi.resize(f);
  pert.d_qj.resize(f);
  for (int l = 0; l < f; ++l) {
    pert.d_pu[l] = -c.c_pu * qd[l];
    pert.d_qi[l] = -c.c_q * pu[l];
    pert.d_qj[l] = c.c_q * pu[l];
  }
  return pert;
}

double adversarial_score_diff(const FactorModel& model, const Perturbation& pert,
                              const Triplet& t) {
  check_triplet(model, t);
  const int f = model.factors();
  if (static_cast<int>(pert.d_pu.size()) != f) throw DataError("perturbation size mismatch");
  auto pu = model.user_row(t.user);
  auto qi = model.item_row(t.pos);
  auto qj = model.item_row(t.neg);
  double s = 0.0;
  for (int l = 0; l < f; ++l) {
    s += (pu[l] + pert.d_pu[l]) * ((qi[l] + pert.d_qi[l]) - (qj[l] + pert.d_qj[l]));
  }
  return s;
}

StepOutcome apr_step(FactorModel& model, const Triplet& t, double eta, double eps, double alpha,
                     double l2, FgsmNorm norm) {
  check_triplet(model, t);
  StepWorkspace ws(model.factors());
  return apr_core(model, t, eta, eps, alpha, l2, norm, ws);
}

void train_epochs(FactorModel& model, const Dataset& train_ds, const TrainSchedule& sched,
                  int first_epoch, int last_epoch, TrainingSink& sink) {
  if (model.num_users() != train_ds.num_users() || model.num_items() != train_ds.num_items()) {
    throw DataError("model dimensions do not match dataset");
  }
  if (sched.t_bpr < 1 || sched.t_apr < sched.t_bpr) {
    throw DataError("schedule needs t_apr >= t_bpr >= 1");
  }
  if (sched.eta <= 0.0 || sched.eps < 0.0 || sched.alpha < 0.0 || sched.l2 < 0.0) {
    throw DataError("schedule needs eta > 0 and eps, alpha, l2 >= 0");
  }
  if (first_epoch < 1 || last_epoch > sched.t_apr) throw DataError("epoch range out of schedule");

  StepWorkspace ws(model.factors());
  for (int t = first_epoch; t <= last_epoch; ++t) {
    auto triplets = sample_epoch(train_ds, sched.seed, t);
    if (t <= sched.t_bpr) {
      for (const Triplet& x : triplets) {
        const double omega = bpr_core(model, x, sched.eta, sched.l2, ws);
        sink.on_triplet(t, omega, std::nullopt, x.pos, x.neg);
      }
    } else {
      for (const Triplet& x : triplets) {
        const StepOutcome o =
            apr_core(model, x, sched.eta, sched.eps, sched.alpha, sched.l2, sched.fgsm_norm, ws);
        sink.on_triplet(t, o.omega, o.omega_adv, x.pos, x.neg);
      }
    }
    sink.on_epoch_end(t);
  }
}

void train(FactorModel& model, const Dataset& train_ds, const TrainSchedule& sched,
           TrainingSink& sink) {
  train_epochs(model, train_ds, sched, 1, sched.t_apr, sink);
}

}  // namespace aprlab
