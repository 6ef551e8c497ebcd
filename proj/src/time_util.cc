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

#include "campustrace/time_util.h"

#include <string>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace campustrace {

std::string FormatIsoUtc(absl::Time t) {
  const int64_t ms = absl::ToUnixMillis(t);
  const char* format = (ms % 1000 == 0) ? "%Y-%m-%d%ET%H:%M:%SZ"
                                        : "%Y-%m-%d%ET%H:%M:%E3SZ";
  return absl::FormatTime(format, t, absl::UTCTimeZone());
}

std::string FormatDateUtc(absl::Time t) {
  return absl::FormatTime("%Y-%m-%d", t, absl::UTCTimeZone());
}

std::string FormatTimeOfDayUtc(absl::Time t) {
  return absl::FormatTime("%H:%M:%S", t, absl::UTCTimeZone());
}

absl::StatusOr<absl::Time> ParseIsoTime(absl::string_view text) {
  absl::Time t;
  std::string err;
  if (!absl::ParseTime(absl::RFC3339_full, text, &t, &err)) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad RFC 3339 time '", text, "': ", err));
  }
  return t;
}

absl::StatusOr<absl::Time> ParseDateAndTime(absl::string_view date,
                                            absl::string_view time_of_day) {
  std::string tod(time_of_day);
  if (tod.size() == 5) tod += ":00";
  const std::string joined = absl::StrCat(date, "T", tod, "Z");
  absl::Time t;
  std::string err;
  if (!absl::ParseTime("%Y-%m-%d%ET%H:%M:%SZ", joined, absl::UTCTimeZone(), &t,
                       &err)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "bad start date/time '", date, " ", time_of_day, "': ", err));
  }
  return t;
}

}  // namespace campustrace
