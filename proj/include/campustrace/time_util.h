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

#ifndef CAMPUSTRACE_TIME_UTIL_H_
#define CAMPUSTRACE_TIME_UTIL_H_

#include <string>
#include "absl/strings/string_view.h"

#include "absl/status/statusor.h"
#include "absl/time/time.h"

namespace campustrace {

// "2022-04-14T00:00:00Z", with ".mmm" inserted only when the instant has a
// non-zero millisecond part.
std::string FormatIsoUtc(absl::Time t);

// "2022-04-14"
std::string FormatDateUtc(absl::Time t);

// "08:15:00"
std::string FormatTimeOfDayUtc(absl::Time t);

// RFC 3339 with optional fractional seconds and any offset.
absl::StatusOr<absl::Time> ParseIsoTime(absl::string_view text);

// Combines "YYYY-MM-DD" and "HH:MM[:SS]" as a UTC instant.
absl::StatusOr<absl::Time> ParseDateAndTime(absl::string_view date,
                                            absl::string_view time_of_day);

}  // namespace campustrace

#endif  // CAMPUSTRACE_TIME_UTIL_H_
