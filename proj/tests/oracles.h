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

// Independent reference implementations used only by tests. None of them
// shares code with the library beyond plain data types.

#ifndef CAMPUSTRACE_TESTS_ORACLES_H_
#define CAMPUSTRACE_TESTS_ORACLES_H_

#include <algorithm>
#include <array>
#include <cctype>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "campustrace/geo.h"
#include "campustrace/proximity.h"
#include "campustrace/trajectory_store.h"

namespace campustrace::oracle {

inline constexpr double kPi = 3.14159265358979323846;

// Central angle from 3D unit vectors, atan2(|a x b|, a . b).
inline double GreatCircleKm(const GeoPoint& p, const GeoPoint& q) {
  const auto unit = [](const GeoPoint& g) {
    const double lat = g.lat_deg * kPi / 180.0;
    const double lon = g.lon_deg * kPi / 180.0;
    return std::array<double, 3>{std::cos(lat) * std::cos(lon),
                                 std::cos(lat) * std::sin(lon), std::sin(lat)};
  };
  const auto a = unit(p);
  const auto b = unit(q);
  const double cx = a[1] * b[2] - a[2] * b[1];
  const double cy = a[2] * b[0] - a[0] * b[2];
  const double cz = a[0] * b[1] - a[1] * b[0];
  const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return 6371.0 * std::atan2(cross, dot);
}

struct OracleEvent {
  UserId user_a;
  UserId user_b;
  int64_t tick_start = 0;
  int64_t tick_end = 0;
  double min_distance_m = 0.0;
  double mean_distance_m = 0.0;
};

// Every pair, every tick, no pruning: runs of in-contact ticks whose span
// (tick_end - tick_start) * step reaches the interval.
inline std::vector<OracleEvent> NaiveDetect(std::span<const ResampledTrack> tracks,
                                            double distance_m, int64_t interval_s) {
  std::vector<OracleEvent> out;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    for (std::size_t j = i + 1; j < tracks.size(); ++j) {
      const ResampledTrack* a = &tracks[i];
      const ResampledTrack* b = &tracks[j];
      if (b->user_id < a->user_id) std::swap(a, b);
      const int64_t step = a->step_s;
      std::vector<double> run;
      int64_t run_start = -1;
      const auto close_run = [&](int64_t last) {
        if (run_start >= 0 && (last - run_start) * step >= interval_s) {
          OracleEvent e{a->user_id, b->user_id, run_start, last, run[0], 0.0};
          double sum = 0.0;
          for (double d : run) {
            e.min_distance_m = std::min(e.min_distance_m, d);
            sum += d;
          }
          e.mean_distance_m = sum / static_cast<double>(run.size());
          out.push_back(e);
        }
        run.clear();
        run_start = -1;
      };
      const auto n = static_cast<int64_t>(std::min(a->size(), b->size()));
      for (int64_t k = 0; k < n; ++k) {
        const auto& pa = a->positions[static_cast<std::size_t>(k)];
        const auto& pb = b->positions[static_cast<std::size_t>(k)];
        const std::optional<double> d =
            (pa && pb) ? std::optional<double>(HaversineKm(*pa, *pb) * 1000.0)
                       : std::nullopt;
        if (d && *d <= distance_m) {
          if (run_start < 0) run_start = k;
          run.push_back(*d);
        } else {
          close_run(k - 1);
        }
      }
      close_run(n - 1);
    }
  }
  std::sort(out.begin(), out.end(), [](const OracleEvent& x, const OracleEvent& y) {
    return std::tie(x.tick_start, x.user_a, x.user_b) <
           std::tie(y.tick_start, y.user_a, y.user_b);
  });
  return out;
}

struct TimedEdge {
  UserId a;
  UserId b;
  int64_t t = 0;
};

// Minimum hops over every chain index -> ... -> u whose edge times strictly
// increase, by exhaustive depth-first enumeration of simple paths.
inline std::map<UserId, int> EnumerateLevels(const UserId& index,
                                             std::span<const TimedEdge> edges,
                                             int max_level) {
  std::map<UserId, int> best;
  std::set<UserId> on_path = {index};
  std::function<void(const UserId&, int64_t, int)> walk =
      [&](const UserId& at, int64_t after, int depth) {
        if (depth == max_level) return;
        for (const TimedEdge& e : edges) {
          if (e.t <= after) continue;
          const UserId* next = nullptr;
          if (e.a == at) next = &e.b;
          if (e.b == at) next = &e.a;
          if (next == nullptr || on_path.count(*next)) continue;
          const auto it = best.find(*next);
          if (it == best.end() || it->second > depth + 1) best[*next] = depth + 1;
          on_path.insert(*next);
          walk(*next, e.t, depth + 1);
          on_path.erase(*next);
        }
      };
  walk(index, INT64_MIN, 0);
  return best;
}

// Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.
inline double Bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Minimal XML reader for structural checks: elements, attributes, text.
struct XmlNode {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::vector<XmlNode> children;
  std::string text;

  const XmlNode* Child(const std::string& n) const {
    for (const XmlNode& c : children) {
      if (c.name == n) return &c;
    }
    return nullptr;
  }
};

// Returns nullopt when the document is not well formed.
inline std::optional<XmlNode> ParseXml(const std::string& doc) {
  std::size_t i = 0;
  const auto skip_ws = [&] {
    while (i < doc.size() && std::isspace(static_cast<unsigned char>(doc[i]))) ++i;
  };
  const auto starts = [&](const char* s) { return doc.compare(i, std::strlen(s), s) == 0; };
  skip_ws();
  if (starts("<?xml")) {
    const auto end = doc.find("?>", i);
    if (end == std::string::npos) return std::nullopt;
    i = end + 2;
  }
  std::function<std::optional<XmlNode>()> element = [&]() -> std::optional<XmlNode> {
    skip_ws();
    if (i >= doc.size() || doc[i] != '<') return std::nullopt;
    ++i;
    XmlNode node;
    while (i < doc.size() && (std::isalnum(static_cast<unsigned char>(doc[i])) ||
                              doc[i] == ':' || doc[i] == '_' || doc[i] == '-')) {
      node.name += doc[i++];
    }
    if (node.name.empty()) return std::nullopt;
    for (;;) {
      skip_ws();
      if (i >= doc.size()) return std::nullopt;
      if (starts("/>")) {
        i += 2;
        return node;
      }
      if (doc[i] == '>') {
        ++i;
        break;
      }
      std::string key;
      while (i < doc.size() && doc[i] != '=' && !std::isspace(static_cast<unsigned char>(doc[i]))) {
        key += doc[i++];
      }
      skip_ws();
      if (i >= doc.size() || doc[i] != '=') return std::nullopt;
      ++i;
      skip_ws();
      if (i >= doc.size() || doc[i] != '"') return std::nullopt;
      const auto close = doc.find('"', i + 1);
      if (close == std::string::npos) return std::nullopt;
      node.attrs[key] = doc.substr(i + 1, close - i - 1);
      i = close + 1;
    }
    for (;;) {
      if (i >= doc.size()) return std::nullopt;
      if (starts("</")) {
        i += 2;
        const auto close = doc.find('>', i);
        if (close == std::string::npos || doc.substr(i, close - i) != node.name) {
          return std::nullopt;
        }
        i = close + 1;
        return node;
      }
      if (doc[i] == '<') {
        auto child = element();
        if (!child) return std::nullopt;
        node.children.push_back(std::move(*child));
      } else {
        if (doc[i] == '&') {
          static const char* kEntities[] = {"&amp;", "&lt;", "&gt;", "&quot;", "&apos;"};
          bool known = false;
          for (const char* ent : kEntities) known = known || starts(ent);
          if (!known) return std::nullopt;
        }
        node.text += doc[i++];
      }
    }
  };
  auto root = element();
  skip_ws();
  if (!root || i != doc.size()) return std::nullopt;
  return root;
}

// Checks the subset of the KML 2.2 schema the exporter uses: namespace, a
// single Document, Folder/Placemark nesting, the element order
// name < TimeSpan < geometry inside a Placemark, begin < end inside a
// TimeSpan, and lon,lat[,alt] tuples within range (at least two for a
// LineString). Returns an empty string when valid, otherwise the problem.
inline std::string CheckKml22(const std::string& doc) {
  const auto root = ParseXml(doc);
  if (!root) return "not well-formed XML";
  if (root->name != "kml") return "root element is not kml";
  if (root->attrs.count("xmlns") == 0 ||
      root->attrs.at("xmlns") != "http://www.opengis.net/kml/2.2") {
    return "missing KML 2.2 namespace";
  }
  if (root->children.size() != 1 || root->children[0].name != "Document") {
    return "kml must contain exactly one Document";
  }
  const auto check_coords = [](const std::string& text, std::size_t min_tuples) -> std::string {
    std::size_t tuples = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
      if (pos >= text.size()) break;
      std::size_t end = pos;
      while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
      const std::string tuple = text.substr(pos, end - pos);
      double lon = 0, lat = 0;
      if (std::sscanf(tuple.c_str(), "%lf,%lf", &lon, &lat) != 2) return "bad coordinate tuple";
      if (lon < -180 || lon > 180 || lat < -90 || lat > 90) return "coordinate out of range";
      ++tuples;
      pos = end;
    }
    if (tuples < min_tuples) return "too few coordinate tuples";
    return "";
  };
  std::function<std::string(const XmlNode&)> feature = [&](const XmlNode& n) -> std::string {
    static const std::vector<std::string> kOrder = {"name", "TimeSpan", "Point",
                                                    "LineString", "Placemark", "Folder"};
    int last = -1;
    int geometries = 0;
    for (const XmlNode& c : n.children) {
      const auto it = std::find(kOrder.begin(), kOrder.end(), c.name);
      if (it == kOrder.end()) return "unexpected element " + c.name + " in " + n.name;
      const int rank = static_cast<int>(it - kOrder.begin());
      const bool container_child = c.name == "Placemark" || c.name == "Folder";
      if (n.name == "Placemark" && container_child) return "Placemark cannot nest features";
      if (n.name != "Placemark" && (c.name == "Point" || c.name == "LineString" ||
                                    c.name == "TimeSpan")) {
        return c.name + " outside a Placemark";
      }
      if (!container_child && rank < last) return "element order violated in " + n.name;
      if (!container_child) last = rank;
      if (c.name == "Point" || c.name == "LineString") {
        ++geometries;
        const XmlNode* coords = c.Child("coordinates");
        if (coords == nullptr || c.children.size() != 1) return c.name + " needs coordinates";
        const std::string err = check_coords(coords->text, c.name == "Point" ? 1 : 2);
        if (!err.empty()) return err;
        if (c.name == "Point" && check_coords(coords->text, 2).empty()) {
          return "Point with several tuples";
        }
      }
      if (c.name == "TimeSpan") {
        if (c.children.size() > 2) return "bad TimeSpan";
        if (c.children.size() == 2 &&
            !(c.children[0].name == "begin" && c.children[1].name == "end")) {
          return "TimeSpan children out of order";
        }
      }
      if (container_child) {
        const std::string err = feature(c);
        if (!err.empty()) return err;
      }
    }
    if (n.name == "Placemark" && geometries != 1) return "Placemark needs one geometry";
    return "";
  };
  return feature(root->children[0]);
}

}  // namespace campustrace::oracle

#endif  // CAMPUSTRACE_TESTS_ORACLES_H_
