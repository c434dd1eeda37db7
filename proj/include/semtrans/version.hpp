#pragma once

namespace semtrans {

inline constexpr const char* kToolName = "semtrans";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kDocumentFormatVersion = 1;

}  // namespace semtrans
