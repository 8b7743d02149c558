// Copyright 2026 The crdr Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRDR_CONFIG_HPP_
#define CRDR_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crdr {

// Flat `key = value` text configuration. Lines starting with '#' are
// comments. Keys are kept sorted so ToText() is canonical.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  // Throws FormatError on malformed lines.
  static KeyValueConfig Parse(std::string_view text);
  static KeyValueConfig Load(const std::string& path);

  std::string ToText() const;

  bool Has(const std::string& key) const { return values_.count(key) != 0; }
  void Set(const std::string& key, std::string value);
  // Applies "key=value" overrides.
  void Merge(const KeyValueConfig& other);

  std::optional<std::string> Find(const std::string& key) const;
  std::string GetString(const std::string& key, const std::string& fallback) const;
  // The numeric getters throw FormatError on unparsable values.
  std::int64_t GetInt(const std::string& key, std::int64_t fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  std::vector<double> GetDoubleList(const std::string& key,
                                    const std::vector<double>& fallback) const;
  std::vector<std::int64_t> GetIntList(
      const std::string& key, const std::vector<std::int64_t>& fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string FormatDouble(double v);
std::string JoinDoubles(const std::vector<double>& v);
std::string JoinInts(const std::vector<std::int64_t>& v);

// 64-bit FNV-1a, used as the config digest in checkpoints.
std::uint64_t Fnv1a64(std::string_view data);

}  // namespace crdr

#endif  // CRDR_CONFIG_HPP_
