#pragma once

// Pallet stacking: bins are placed in arrival order on whichever side
// currently carries less weight (ties go left), and any bin that arrives
// right-side up is flipped first.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "interocept/error.hpp"

namespace interocept {

enum class BinOrientation { RightSideUp, UpsideDown };
enum class PalletSide { Left, Right };

struct BinSpec {
  std::string id;
  double weight_kg = 0.0;
  BinOrientation orientation = BinOrientation::UpsideDown;
};

struct Placement {
  std::string bin_id;
  PalletSide side = PalletSide::Left;
  bool flip_applied = false;
  int order = 0;
};

struct StackPlan {
  std::vector<Placement> placements;
  double balance_kg = 0.0;  // |left - right| after the last bin
};

inline StackPlan plan_stack(std::span<const BinSpec> bins) {
  if (bins.empty()) throw Error(ErrorCode::EmptyBins, "no bins to stack");
  StackPlan plan;
  double left = 0.0;
  double right = 0.0;
  int order = 0;
  for (const auto& bin : bins) {
    if (!(bin.weight_kg > 0.0) || !std::isfinite(bin.weight_kg)) {
      throw Error(ErrorCode::InvalidArgument, "bin " + bin.id + " weight must be > 0");
    }
    const PalletSide side = left <= right ? PalletSide::Left : PalletSide::Right;
    (side == PalletSide::Left ? left : right) += bin.weight_kg;
    plan.placements.push_back(
        {bin.id, side, bin.orientation == BinOrientation::RightSideUp, order++});
  }
  plan.balance_kg = std::abs(left - right);
  return plan;
}

}  // namespace interocept
