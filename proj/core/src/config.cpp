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

#include "crdr/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "crdr/error.hpp"

namespace crdr {
namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> SplitCommas(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string_view t = Trim(item);
    if (!t.empty()) parts.emplace_back(t);
  }
  return parts;
}

double ParseDouble(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw FormatError("config key '" + key + "': '" + text +
                      "' is not a number");
  }
}

std::int64_t ParseInt(const std::string& key, const std::string& text) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("config key '" + key + "': '" + text +
                      "' is not an integer");
  }
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::Parse(std::string_view text) {
  KeyValueConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = Trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string_view key = Trim(line.substr(0, eq));
    if (key.empty()) {
      throw FormatError("config line " + std::to_string(line_no) + ": empty key");
    }
    config.values_[std::string(key)] = std::string(Trim(line.substr(eq + 1)));
  }
  return config;
}

KeyValueConfig KeyValueConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

std::string KeyValueConfig::ToText() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

void KeyValueConfig::Set(const std::string& key, std::string value) {
  values_[key] = std::move(value);
}

void KeyValueConfig::Merge(const KeyValueConfig& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::optional<std::string> KeyValueConfig::Find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::GetString(const std::string& key,
                                      const std::string& fallback) const {
  return Find(key).value_or(fallback);
}

std::int64_t KeyValueConfig::GetInt(const std::string& key,
                                    std::int64_t fallback) const {
  const auto v = Find(key);
  return v ? ParseInt(key, *v) : fallback;
}

double KeyValueConfig::GetDouble(const std::string& key, double fallback) const {
  const auto v = Find(key);
  return v ? ParseDouble(key, *v) : fallback;
}

std::vector<double> KeyValueConfig::GetDoubleList(
    const std::string& key, const std::vector<double>& fallback) const {
  const auto v = Find(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const std::string& part : SplitCommas(*v)) out.push_back(ParseDouble(key, part));
  return out;
}

std::vector<std::int64_t> KeyValueConfig::GetIntList(
    const std::string& key, const std::vector<std::int64_t>& fallback) const {
  const auto v = Find(key);
  if (!v) return fallback;
  std::vector<std::int64_t> out;
  for (const std::string& part : SplitCommas(*v)) out.push_back(ParseInt(key, part));
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string JoinDoubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += FormatDouble(v[i]);
  }
  return out;
}

std::string JoinInts(const std::vector<std::int64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::uint64_t Fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace crdr
