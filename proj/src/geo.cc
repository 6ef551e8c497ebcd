// Copyright 2026 The CampusTrace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "campustrace/geo.h"

#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace campustrace {

bool IsValid(const GeoPoint& p) {
  return p.lat_deg >= -90.0 && p.lat_deg <= 90.0 && p.lon_deg >= -180.0 &&
         p.lon_deg <= 180.0;
}

double HaversineKm(const GeoPoint& p1, const GeoPoint& p2) {
  const double lat1 = p1.lat_deg * kDegToRad;
  const double lat2 = p2.lat_deg * kDegToRad;
  // Absolute deltas keep the result bit-identical under argument swap.
  const double dlat = std::fabs(p2.lat_deg - p1.lat_deg) * kDegToRad;
  const double dlon = std::fabs(p2.lon_deg - p1.lon_deg) * kDegToRad;

  const double sin_dlat = std::sin(dlat / 2.0);
  const double sin_dlon = std::sin(dlon / 2.0);
  const double cos_product = std::cos(lat1) * std::cos(lat2);
  double a = sin_dlat * sin_dlat + cos_product * sin_dlon * sin_dlon;
  // Rounding can push `a` a hair past 1 for antipodal pairs.
  if (a > 1.0) a = 1.0;
  const double c = 2.0 * std::atan2(std::sqrt(a), std::sqrt(1.0 - a));
  return kEarthRadiusKm * c;
}

double EquirectKm(const GeoPoint& p1, const GeoPoint& p2) {
  double dlon_deg = std::fabs(p2.lon_deg - p1.lon_deg);
  if (dlon_deg > 180.0) dlon_deg = 360.0 - dlon_deg;
  const double mean_lat = (p1.lat_deg + p2.lat_deg) / 2.0 * kDegToRad;
  const double x = dlon_deg * kDegToRad * std::cos(mean_lat);
  const double y = std::fabs(p2.lat_deg - p1.lat_deg) * kDegToRad;
  return kEarthRadiusKm * std::sqrt(x * x + y * y);
}

absl::StatusOr<bool> WithinThresholdM(const GeoPoint& p1, const GeoPoint& p2,
                                      double threshold_m) {
  if (!(threshold_m > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("threshold_m must be positive, got ", threshold_m));
  }
  return HaversineKm(p1, p2) * 1000.0 <= threshold_m;
}

GeoPoint OffsetNorth(const GeoPoint& p, double meters) {
  return GeoPoint{p.lat_deg + meters / kMetersPerDegreeLat, p.lon_deg};
}

}  // namespace campustrace
