// Copyright 2026 The MPE Toolkit Authors.
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

#include "mpe/autograd/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "mpe/base/error.h"

namespace mpe::ag {
namespace {

constexpr char kMagic[8] = {'M', 'P', 'E', 'C', 'K', 'P', 'T', '\0'};

template <typename U>
void Put(std::ostream &out, U value) {
  char bytes[sizeof(U)];
  std::memcpy(bytes, &value, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
  out.write(bytes, sizeof(U));
}

void PutFloats(std::ostream &out, const std::vector<float> &values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char *>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float v : values) Put(out, v);
  }
}

class Reader {
 public:
  Reader(std::istream &in, const std::string &path) : in_(in), path_(path) {}

  template <typename U>
  U Get() {
    char bytes[sizeof(U)];
    Read(bytes, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
    U value;
    std::memcpy(&value, bytes, sizeof(U));
    return value;
  }

  std::string GetString() {
    const uint32_t n = Get<uint32_t>();
    std::string s(n, '\0');
    Read(s.data(), n);
    return s;
  }

  std::vector<float> GetFloats(int64_t n) {
    if (n < 0) Fail("negative element count");
    std::vector<float> values(static_cast<size_t>(n));
    Read(reinterpret_cast<char *>(values.data()), values.size() * sizeof(float));
    if constexpr (std::endian::native == std::endian::big) {
      for (float &v : values) {
        auto *b = reinterpret_cast<char *>(&v);
        std::reverse(b, b + sizeof(float));
      }
    }
    return values;
  }

  void Read(char *dst, size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) Fail("truncated checkpoint");
  }

  [[noreturn]] void Fail(const std::string &msg) {
    throw Error(ErrorCode::kParse, path_ + ": " + msg);
  }

 private:
  std::istream &in_;
  const std::string &path_;
};

}  // namespace

Checkpoint CaptureCheckpoint(const std::vector<NamedParameter<float>> &params,
                             const AdamW<float> *optimizer, std::string metadata) {
  Checkpoint c;
  c.metadata = std::move(metadata);
  for (const auto &p : params) c.tensors.push_back({p.name, p.tensor.shape(), p.tensor.values()});
  if (optimizer) {
    c.optimizer = OptimizerSnapshot{optimizer->step(), optimizer->first_moments(),
                                    optimizer->second_moments()};
  }
  return c;
}

void RestoreParameters(const Checkpoint &checkpoint, const std::vector<NamedParameter<float>> &params) {
  std::map<std::string, const CheckpointTensor *> by_name;
  for (const auto &t : checkpoint.tensors) by_name[t.name] = &t;
  for (const auto &p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      throw Error(ErrorCode::kNotFound, "checkpoint has no parameter '" + p.name + "'");
    }
    if (it->second->shape != p.tensor.shape()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "parameter '" + p.name + "' has shape " + ShapeString(p.tensor.shape()) +
                      " but the checkpoint holds " + ShapeString(it->second->shape));
    }
    Tensor<float> t = p.tensor;
    t.values() = it->second->values;
  }
}

void RestoreOptimizer(const Checkpoint &checkpoint, AdamW<float> &optimizer) {
  if (!checkpoint.optimizer) {
    throw Error(ErrorCode::kNotFound, "checkpoint carries no optimizer state");
  }
  const auto &s = *checkpoint.optimizer;
  optimizer.LoadState(s.step, s.first_moments, s.second_moments);
}

void WriteCheckpoint(const std::string &path, const Checkpoint &checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  Put<uint32_t>(out, kCheckpointVersion);
  Put<uint32_t>(out, static_cast<uint32_t>(checkpoint.metadata.size()));
  out.write(checkpoint.metadata.data(), static_cast<std::streamsize>(checkpoint.metadata.size()));
  Put<uint32_t>(out, static_cast<uint32_t>(checkpoint.tensors.size()));
  for (const auto &t : checkpoint.tensors) {
    if (static_cast<int64_t>(t.values.size()) != NumElements(t.shape)) {
      throw Error(ErrorCode::kInvalidArgument, "tensor '" + t.name + "' does not match its shape");
    }
    Put<uint32_t>(out, static_cast<uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    Put<uint32_t>(out, static_cast<uint32_t>(t.shape.size()));
    for (int64_t d : t.shape) Put<int64_t>(out, d);
    PutFloats(out, t.values);
  }
  Put<uint8_t>(out, checkpoint.optimizer ? 1 : 0);
  if (checkpoint.optimizer) {
    const auto &s = *checkpoint.optimizer;
    if (s.first_moments.size() != checkpoint.tensors.size() ||
        s.second_moments.size() != checkpoint.tensors.size()) {
      throw Error(ErrorCode::kInvalidArgument, "optimizer state does not match the tensors");
    }
    Put<int64_t>(out, s.step);
    for (size_t i = 0; i < checkpoint.tensors.size(); ++i) {
      if (s.first_moments[i].size() != checkpoint.tensors[i].values.size() ||
          s.second_moments[i].size() != checkpoint.tensors[i].values.size()) {
        throw Error(ErrorCode::kInvalidArgument, "optimizer state does not match the tensors");
      }
      PutFloats(out, s.first_moments[i]);
      PutFloats(out, s.second_moments[i]);
    }
  }
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);
}

Checkpoint ReadCheckpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path);
  Reader r(in, path);
  char magic[8];
  r.Read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.Fail("not a checkpoint file");
  const uint32_t version = r.Get<uint32_t>();
  if (version != kCheckpointVersion) {
    r.Fail("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.metadata = r.GetString();
  const uint32_t count = r.Get<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    t.name = r.GetString();
    const uint32_t rank = r.Get<uint32_t>();
    if (rank > 16) r.Fail("implausible rank for '" + t.name + "'");
    for (uint32_t k = 0; k < rank; ++k) {
      const int64_t d = r.Get<int64_t>();
      if (d < 0) r.Fail("negative dimension in '" + t.name + "'");
      t.shape.push_back(d);
    }
    t.values = r.GetFloats(NumElements(t.shape));
    c.tensors.push_back(std::move(t));
  }
  const uint8_t has_optimizer = r.Get<uint8_t>();
  if (has_optimizer > 1) r.Fail("bad optimizer flag");
  if (has_optimizer) {
    OptimizerSnapshot s;
    s.step = r.Get<int64_t>();
    for (const auto &t : c.tensors) {
      s.first_moments.push_back(r.GetFloats(static_cast<int64_t>(t.values.size())));
      s.second_moments.push_back(r.GetFloats(static_cast<int64_t>(t.values.size())));
    }
    c.optimizer = std::move(s);
  }
  if (in.peek() != std::char_traits<char>::eof()) r.Fail("trailing bytes");
  return c;
}

}  // namespace mpe::ag
