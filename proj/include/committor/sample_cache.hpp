#pragma once

#include <string>
#include <vector>

#include "committor/sde.hpp"
#include "committor/vec_math.hpp"

namespace committor {

// TransitionSample cache. Binary layout (little-endian):
//   magic "CMTSAMP1" | u32 version | u32 dimension | u64 count |
//   records of (x: d doubles, x_delta: d doubles, indicator: u8)
void save_samples(const std::vector<TransitionSample>& samples, const std::string& path);
std::vector<TransitionSample> load_samples(const std::string& path);

// CSV fallback: header, then one row per record (x..., x_delta..., indicator).
void save_samples_csv(const std::vector<TransitionSample>& samples, const std::string& path);
std::vector<TransitionSample> load_samples_csv(const std::string& path);

// Point pools (boundary measures, validation sets). Binary layout:
//   magic "CMTPNTS1" | u32 version | u32 dimension | u64 count | d doubles each
void save_points(const std::vector<Vec>& points, const std::string& path);
std::vector<Vec> load_points(const std::string& path);

}  // namespace committor
