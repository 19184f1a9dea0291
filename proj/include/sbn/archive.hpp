#pragma once

#include <optional>
#include <string>

#include "sbn/model.hpp"
#include "sbn/trainer.hpp"

namespace sbn {

/// Versioned JSON archive: self-describing architecture and normalizer
/// statistics as plain fields, weights as one base64 blob of
/// little-endian float64 in canonical layer order, guarded by a CRC-32.
/// Round-trips reproduce forecasts bit-exactly.
std::string serialize_model(const SbnModel& model, const TrainConfig* train_cfg = nullptr);

SbnModel parse_model(const std::string& text);

void save_model(const SbnModel& model, const std::string& path,
                const TrainConfig* train_cfg = nullptr);

SbnModel load_model(const std::string& path);

} // namespace sbn
