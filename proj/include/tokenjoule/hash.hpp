// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace tokenjoule {

/// SHA-256 digest of `data` as a lowercase hex string.
std::string sha256_hex(std::string_view data);

/// Seconds elapsed on the process-wide monotonic clock. Unaffected by
/// system clock adjustments; the epoch is the first call in the process.
double mono_now_s();

/// Current wall-clock time as an ISO-8601 UTC string (second resolution).
std::string utc_now_iso8601();

}  // namespace tokenjoule
