#pragma once

namespace tempcov {

inline constexpr const char* kVersionString = "1.0.0";

// Version stamped into every serialized artifact (models, scenarios, reports).
inline constexpr int kFormatVersion = 1;

}  // namespace tempcov
