#include "groves/vcg.hpp"

#include <stdexcept>

namespace groves {

double h_vcg(const AuctionInstance& instance, int excluded) {
  if (instance.num_players() < 2)
    throw std::invalid_argument("h_vcg: needs at least two bidders");
  if (excluded < 0 || excluded >= instance.num_players())
    throw std::invalid_argument("h_vcg: excluded player out of range");
  return allocate(instance.without_player(excluded)).welfare();
}

double groves_payment(const AuctionInstance& instance, int player,
                      double h_value) {
  if (player < 0 || player >= instance.num_players())
    throw std::invalid_argument("groves_payment: player out of range");
  const Allocation efficient = allocate(instance);
  double others = 0.0;
  for (int j = 0; j < instance.num_players(); ++j)
    if (j != player) others += efficient.realized_value[j];
  return h_value - others;
}

MechanismOutcome vcg_outcome(const AuctionInstance& instance) {
  if (instance.num_players() < 2)
    throw std::invalid_argument("vcg_outcome: needs at least two bidders");
  const int n = instance.num_players();
  MechanismOutcome outcome;
  outcome.allocation = allocate(instance);
  const double welfare = outcome.allocation.welfare();
  outcome.payments.resize(n);
  outcome.utilities.resize(n);
  for (int i = 0; i < n; ++i) {
    const double others = welfare - outcome.allocation.realized_value[i];
    outcome.payments[i] = h_vcg(instance, i) - others;
    outcome.utilities[i] =
        outcome.allocation.realized_value[i] - outcome.payments[i];
    outcome.budget += outcome.payments[i];
  }
  return outcome;
}

MechanismOutcome outcome_for_payments(const AuctionInstance& instance,
                                      std::vector<double> payments) {
  if (static_cast<int>(payments.size()) != instance.num_players())
    throw std::invalid_argument(
        "outcome_for_payments: payment vector length mismatch");
  MechanismOutcome outcome;
  outcome.allocation = allocate(instance);
  outcome.payments = std::move(payments);
  outcome.utilities.resize(instance.num_players());
  for (int i = 0; i < instance.num_players(); ++i) {
    outcome.utilities[i] =
        outcome.allocation.realized_value[i] - outcome.payments[i];
    outcome.budget += outcome.payments[i];
  }
  return outcome;
}

}  // namespace groves
