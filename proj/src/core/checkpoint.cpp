/*
 * Copyright 2026 The posesynth Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "core/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

namespace posesynth {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

std::size_t Container::Record::count() const {
  return bytes.size() / (dtype == DType::F32 ? sizeof(float) : sizeof(double));
}

namespace {

template <typename T>
Container::Record make_record(Container::DType dt, std::vector<std::int64_t> dims, std::span<const T> values) {
  std::int64_t n = 1;
  for (auto d : dims) n *= d;
  if (n != static_cast<std::int64_t>(values.size()))
    throw InvalidInput("container record dims do not match value count");
  Container::Record r;
  r.dtype = dt;
  r.dims = std::move(dims);
  r.bytes.resize(values.size_bytes());
  std::memcpy(r.bytes.data(), values.data(), values.size_bytes());
  return r;
}

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    const char* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::size_t end, std::string origin)
      : buf_(buf), end_(end), origin_(std::move(origin)) {}

  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }
  [[nodiscard]] std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw DecodeError(origin_ + ": truncated checkpoint");
  }
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string origin_;
};

constexpr char kMagic[8] = {'P', 'S', 'Y', 'N', 'C', 'K', 'P', 'T'};

}  // namespace

void Container::put(const std::string& name, std::vector<std::int64_t> dims, std::span<const float> values) {
  records_[name] = make_record(DType::F32, std::move(dims), values);
}

void Container::put(const std::string& name, std::vector<std::int64_t> dims, std::span<const double> values) {
  records_[name] = make_record(DType::F64, std::move(dims), values);
}

const Container::Record& Container::at(const std::string& name) const {
  auto it = records_.find(name);
  if (it == records_.end()) throw InvalidInput("container has no record '" + name + "'");
  return it->second;
}

template <typename T>
std::vector<T> Container::get(const std::string& name, std::size_t expected_count) const {
  const Record& r = at(name);
  const std::size_t n = r.count();
  if (expected_count != 0 && n != expected_count)
    throw InvalidInput("record '" + name + "' has " + std::to_string(n) + " values, expected " +
                       std::to_string(expected_count));
  std::vector<T> out(n);
  if (r.dtype == DType::F32) {
    std::vector<float> tmp(n);
    std::memcpy(tmp.data(), r.bytes.data(), r.bytes.size());
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<T>(tmp[i]);
  } else {
    std::vector<double> tmp(n);
    std::memcpy(tmp.data(), r.bytes.data(), r.bytes.size());
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<T>(tmp[i]);
  }
  return out;
}

template std::vector<float> Container::get<float>(const std::string&, std::size_t) const;
template std::vector<double> Container::get<double>(const std::string&, std::size_t) const;

void Container::save(const std::filesystem::path& path) const {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.pod<std::uint32_t>(kCheckpointFormatVersion);
  w.str(kind);
  w.str(fingerprint);
  w.str(metadata.dump());
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(records_.size()));
  for (const auto& [name, r] : records_) {
    w.str(name);
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(r.dtype));
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(r.dims.size()));
    for (auto d : r.dims) w.pod<std::int64_t>(d);
    w.pod<std::uint64_t>(r.bytes.size());
    w.raw(r.bytes.data(), r.bytes.size());
  }
  const std::uint64_t sum = fnv1a64(w.buffer());
  w.pod<std::uint64_t>(sum);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw IoError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Container Container::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string origin = path.string();
  if (buf.size() < sizeof(kMagic) + 8 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw DecodeError(origin + ": not a posesynth checkpoint");
  const std::size_t body = buf.size() - sizeof(std::uint64_t);
  std::uint64_t stored = 0;
  std::memcpy(&stored, buf.data() + body, sizeof(stored));
  if (stored != fnv1a64(std::string_view(buf.data(), body))) throw DecodeError(origin + ": checksum mismatch");

  Reader r(buf, body, origin);
  char magic[8];
  r.raw(magic, sizeof(magic));
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointFormatVersion)
    throw DecodeError(origin + ": unsupported checkpoint format version " + std::to_string(version));
  Container c;
  c.kind = r.str();
  c.fingerprint = r.str();
  try {
    c.metadata = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(origin + ": bad metadata: " + e.what());
  }
  const auto count = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    Record rec;
    const auto dt = r.pod<std::uint8_t>();
    if (dt != 1 && dt != 2) throw DecodeError(origin + ": record '" + name + "' has unknown dtype");
    rec.dtype = static_cast<DType>(dt);
    const auto rank = r.pod<std::uint32_t>();
    if (rank > 8) throw DecodeError(origin + ": record '" + name + "' has implausible rank");
    std::int64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      rec.dims.push_back(r.pod<std::int64_t>());
      n *= rec.dims.back();
    }
    const auto nbytes = r.pod<std::uint64_t>();
    const std::size_t elem = rec.dtype == DType::F32 ? 4 : 8;
    if (n < 0 || nbytes != static_cast<std::uint64_t>(n) * elem)
      throw DecodeError(origin + ": record '" + name + "' size does not match its dims");
    rec.bytes.resize(nbytes);
    r.raw(rec.bytes.data(), nbytes);
    c.records_[std::move(name)] = std::move(rec);
  }
  if (r.pos() != body) throw DecodeError(origin + ": trailing bytes in checkpoint");
  return c;
}

}  // namespace posesynth
