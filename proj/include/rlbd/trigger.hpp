#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rlbd/rng.hpp"

namespace rlbd {

// Additive observation patch. Values live in [-1, 1] and are added to the
// observation pixels before clamping back into [0, 1].
struct Trigger {
  int row = 0;
  int col = 0;
  int rows = 0;
  int cols = 0;
  std::vector<double> patch;          // row-major, rows * cols values
  std::string provenance = "manual";  // manual | tuned-mi | tuned-ce
  std::uint64_t tuning_seed = 0;

  double at(int r, int c) const { return patch[r * cols + c]; }
  void set(int r, int c, double v) { patch[r * cols + c] = v; }

  // Shape/range checks; throws std::invalid_argument.
  void validate() const;
};

Trigger make_uniform_trigger(int row, int col, int rows, int cols,
                             double value);

// Random patch with per-cell sign * U(magnitude_lo, magnitude_hi): keeps the
// patch visibly contrasted while randomizing sign and strength.
Trigger random_trigger(int row, int col, int rows, int cols, Rng& rng,
                       double magnitude_lo = 0.5, double magnitude_hi = 1.0);

// Plain-text serialization, exact decimal round-trip.
void write_trigger(const Trigger& t, const std::string& path);
Trigger read_trigger(const std::string& path);

}  // namespace rlbd
