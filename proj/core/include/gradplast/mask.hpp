#pragma once

#include <cstdint>
#include <vector>

#include "gradplast/fields.hpp"
#include "gradplast/grid.hpp"

namespace gradplast {

/// Micro-hard boundary mask: p x n = 0 encoded componentwise.
///
/// On a face with outer normal along axis a, the two row components
/// tangential to the face (column indices c != a) are constrained to zero,
/// for every matrix row. Edge and corner nodes take the union of the
/// adjacent face constraints, which constrains all three columns.
class TangentialMask {
public:
  explicit TangentialMask(const Grid& g);

  /// True when column component c is constrained at the node.
  bool constrained(std::size_t node, int c) const {
    return (flags_[node] >> c) & 1u;
  }

  /// Zero all constrained components in place; idempotent.
  void apply(MatrixField& f) const;

  /// Same action on the p-block of an internal-state field.
  void apply_p_block(StateField& z) const;

  std::size_t constrained_slot_count() const { return constrained_slots_; }
  std::size_t nodes() const { return flags_.size(); }

private:
  std::vector<std::uint8_t> flags_; // bit c set = column c constrained
  std::size_t constrained_slots_ = 0;
};

} // namespace gradplast
