#pragma once

#include <vector>

#include "groves/auction.hpp"

namespace groves {

struct MechanismOutcome {
  Allocation allocation;
  std::vector<double> payments;
  std::vector<double> utilities;  // realized value minus payment
  double budget = 0.0;            // sum of payments
};

// Welfare the remaining bidders obtain when `excluded` is removed from the
// auction entirely. Reads nothing from the excluded player's profile, which
// is what keeps any payment built on it truthful.
double h_vcg(const AuctionInstance& instance, int excluded);

// Groves payment t_i = h_value - sum over j != i of player j's realized
// value at the efficient allocation of `instance`.
double groves_payment(const AuctionInstance& instance, int player,
                      double h_value);

// Efficient allocation plus Clarke-pivot payments, utilities and budget.
MechanismOutcome vcg_outcome(const AuctionInstance& instance);

// Assembles the outcome record for externally supplied payments.
MechanismOutcome outcome_for_payments(const AuctionInstance& instance,
                                      std::vector<double> payments);

}  // namespace groves
