#pragma once

#include <optional>
#include <string>
#include <vector>

#include "modfus/daffus.hpp"
#include "modfus/schedule.hpp"
#include "modfus/unet.hpp"

namespace modfus {

struct Checkpoint {
  UNetParams<float> params;
  int epoch = 0;  // completed training epochs
  ScheduleKind schedule_kind = ScheduleKind::Cosine;
  int total_steps = 100;
  std::optional<Heads> heads;
  std::vector<std::string> class_names;  // set alongside heads
};

// File format: "MODFUSCK", u16 LE version (=1), u32 LE JSON header length,
// JSON header (config, diffusion settings, epoch, named shape table, optional
// heads section), then raw LE float32 tensors in header order.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);  // throws FormatError

}  // namespace modfus
