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

#ifndef CAMPUSTRACE_GEO_H_
#define CAMPUSTRACE_GEO_H_

#include <numbers>

#include "absl/status/statusor.h"

namespace campustrace {

// Spherical Earth. Every distance in the project is measured on this sphere.
inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;

// Meters spanned by one degree of latitude on the sphere.
inline constexpr double kMetersPerDegreeLat =
    kEarthRadiusKm * 1000.0 * kDegToRad;

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// Latitude in [-90, 90] and longitude in [-180, 180], NaN rejected.
bool IsValid(const GeoPoint& p);

// Great-circle distance on the sphere (atan2 form). Inputs are degrees.
double HaversineKm(const GeoPoint& p1, const GeoPoint& p2);

// Flat-earth Pythagorean approximation using the mean latitude. Only meant
// for short separations; used as a cheap pre-filter. The longitude delta is
// wrapped into [-180, 180] so points either side of the antimeridian stay
// close.
double EquirectKm(const GeoPoint& p1, const GeoPoint& p2);

// True iff the haversine separation is at most `threshold_m` meters.
// Returns InvalidArgument for a non-positive threshold.
absl::StatusOr<bool> WithinThresholdM(const GeoPoint& p1, const GeoPoint& p2,
                                      double threshold_m);

// Point due north of `p` by `meters` along its meridian. Inverse of the
// haversine along a meridian; handy for building fixtures with known spacing.
GeoPoint OffsetNorth(const GeoPoint& p, double meters);

}  // namespace campustrace

#endif  // CAMPUSTRACE_GEO_H_
