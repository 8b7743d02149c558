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

#include "crdr/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "crdr/error.hpp"

namespace crdr {
namespace {

constexpr char kMagic[8] = {'C', 'R', 'D', 'R', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename T>
  void Put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
    }
  }
  void PutString(const std::string& s) {
    Put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void PutRaw(const void* p, std::size_t n) {
    out_.append(static_cast<const char*>(p), n);
  }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <typename T>
  T Get() {
    Need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::string GetString() {
    const auto n = Get<std::uint32_t>();
    Need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  const char* GetRaw(std::size_t n) {
    Need(n);
    const char* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void Need(std::size_t n) const {
    if (n > in_.size() - pos_) throw FormatError("checkpoint is truncated");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

std::uint8_t DtypeCode(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat: return 0;
    case torch::kDouble: return 1;
    case torch::kLong: return 2;
    default: throw FormatError("unsupported tensor dtype in checkpoint");
  }
}

torch::ScalarType DtypeFromCode(std::uint8_t c) {
  switch (c) {
    case 0: return torch::kFloat;
    case 1: return torch::kDouble;
    case 2: return torch::kLong;
    default: throw FormatError("unknown dtype code in checkpoint");
  }
}

}  // namespace

std::string TensorArchive::Serialize() const {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint raw payloads assume a little-endian host");
  Writer w;
  w.PutRaw(kMagic, sizeof(kMagic));
  w.Put<std::uint32_t>(kCheckpointVersion);
  w.Put<std::uint64_t>(digest());
  w.PutString(config.ToText());
  w.PutString(state.ToText());
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(arrays.size()));
  for (const auto& [name, tensor] : arrays) {
    const auto t = tensor.detach().contiguous();
    w.PutString(name);
    w.Put<std::uint8_t>(DtypeCode(t.scalar_type()));
    w.Put<std::uint8_t>(static_cast<std::uint8_t>(t.dim()));
    for (const auto d : t.sizes()) w.Put<std::int64_t>(d);
    w.PutRaw(t.data_ptr(), t.numel() * t.element_size());
  }
  return std::move(w.str());
}

void TensorArchive::Save(const std::string& path) const {
  const std::string bytes = Serialize();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot write checkpoint " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("failed writing checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw FormatError("cannot move checkpoint into place at " + path);
  }
}

TensorArchive TensorArchive::Deserialize(const std::string& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.GetRaw(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const auto version = r.Get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto digest = r.Get<std::uint64_t>();
  TensorArchive archive;
  archive.config = KeyValueConfig::Parse(r.GetString());
  archive.state = KeyValueConfig::Parse(r.GetString());
  if (archive.digest() != digest) {
    throw FormatError("checkpoint config digest mismatch");
  }
  const auto count = r.Get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.GetString();
    const auto dtype = DtypeFromCode(r.Get<std::uint8_t>());
    const auto rank = r.Get<std::uint8_t>();
    std::vector<std::int64_t> dims(rank);
    std::int64_t numel = 1;
    for (auto& d : dims) {
      d = r.Get<std::int64_t>();
      if (d < 0 || (d > 0 && numel > (std::int64_t{1} << 40) / d)) {
        throw FormatError("checkpoint array '" + name + "' has a bad shape");
      }
      numel *= d;
    }
    auto t = torch::empty(dims, dtype);
    const std::size_t n = static_cast<std::size_t>(numel) * t.element_size();
    std::memcpy(t.data_ptr(), r.GetRaw(n), n);
    archive.arrays.emplace(std::move(name), std::move(t));
  }
  if (!r.done()) throw FormatError("checkpoint has trailing bytes");
  return archive;
}

TensorArchive TensorArchive::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Deserialize(ss.str());
}

void StoreParameters(const torch::nn::Module& module, TensorArchive& archive,
                     const std::string& prefix) {
  for (const auto& item : module.named_parameters()) {
    archive.arrays[prefix + item.key()] = item.value().detach().clone();
  }
  for (const auto& item : module.named_buffers()) {
    archive.arrays[prefix + item.key()] = item.value().detach().clone();
  }
}

void LoadParameters(torch::nn::Module& module, const TensorArchive& archive,
                    const std::string& prefix) {
  torch::NoGradGuard no_grad;
  auto load = [&](const std::string& name, torch::Tensor& target) {
    const auto it = archive.arrays.find(prefix + name);
    if (it == archive.arrays.end()) {
      throw FormatError("checkpoint is missing array '" + prefix + name + "'");
    }
    if (it->second.sizes() != target.sizes()) {
      throw CompatibilityError("checkpoint array '" + prefix + name +
                               "' has an incompatible shape");
    }
    target.copy_(it->second);
  };
  for (auto& item : module.named_parameters()) load(item.key(), item.value());
  for (auto& item : module.named_buffers()) load(item.key(), item.value());
}

}  // namespace crdr
