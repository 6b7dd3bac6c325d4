#include "dualcube/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "binio.hpp"

namespace dualcube {

namespace {

void put_string(std::ostream& out, const std::string& s) {
  binio::put<std::uint32_t>(out, std::uint32_t(s.size()));
  out.write(s.data(), std::streamsize(s.size()));
}

std::string get_string(binio::Reader& r, const char* what) {
  const auto len = r.get<std::uint32_t>(what);
  if (len > (1u << 20)) throw FormatError(std::string("implausible length for ") + what, r.offset() - 4);
  return r.bytes(len, what);
}

}  // namespace

const TensorD* CheckpointData::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const std::string& path, const CheckpointData& data) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp);
    out.write("DCCK", 4);
    binio::put<std::uint32_t>(out, kCheckpointVersion);
    binio::put<std::uint32_t>(out, std::uint32_t(data.header.size()));
    for (const auto& [k, v] : data.header) {
      put_string(out, k);
      put_string(out, v);
    }
    binio::put<std::uint32_t>(out, std::uint32_t(data.tensors.size()));
    for (const auto& [name, t] : data.tensors) {
      put_string(out, name);
      binio::put<std::uint32_t>(out, 4);
      const Shape& s = t.shape();
      for (int d : {s.n, s.c, s.h, s.w}) binio::put<std::uint32_t>(out, std::uint32_t(d));
      for (Index i = 0; i < t.size(); ++i) binio::put<double>(out, t[i]);
    }
    if (!out) throw CheckpointError("failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  binio::Reader r(in);
  if (r.bytes(4, "magic") != "DCCK") throw FormatError("not a DCCK checkpoint", 0);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version", 4);
  CheckpointData data;
  const auto entries = r.get<std::uint32_t>("header count");
  for (std::uint32_t i = 0; i < entries; ++i) {
    std::string k = get_string(r, "header key");
    data.header[k] = get_string(r, "header value");
  }
  const auto count = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = get_string(r, "tensor name");
    const auto rank = r.get<std::uint32_t>("rank");
    if (rank != 4) throw FormatError("tensor rank must be 4", r.offset() - 4);
    Shape s;
    s.n = int(r.get<std::uint32_t>("extent"));
    s.c = int(r.get<std::uint32_t>("extent"));
    s.h = int(r.get<std::uint32_t>("extent"));
    s.w = int(r.get<std::uint32_t>("extent"));
    TensorD t(s);
    for (Index j = 0; j < t.size(); ++j) t[j] = r.get<double>("tensor values");
    data.tensors.emplace_back(std::move(name), std::move(t));
  }
  return data;
}

}  // namespace dualcube
