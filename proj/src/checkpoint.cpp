/**
 * Copyright 2026 The dermnet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "dermnet/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dermnet/error.hpp"

namespace derm::nn {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'N', 'N'};

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

std::string tensor_name(const char* group, std::size_t layer, const char* part) {
  return std::string(group) + "." + std::to_string(layer) + "." + part;
}

void append_params(Container& c, const char* group, const Parameters& params) {
  for (std::size_t l = 0; l < params.size(); ++l) {
    if (params[l].empty()) continue;
    c.tensors.push_back({tensor_name(group, l, "weight"), params[l].weight});
    c.tensors.push_back({tensor_name(group, l, "bias"), params[l].bias});
  }
}

void take_params(const Container& c, const char* group, Parameters& params) {
  for (std::size_t l = 0; l < params.size(); ++l) {
    if (params[l].empty()) continue;
    for (auto [part, target] : {std::pair{"weight", &params[l].weight}, std::pair{"bias", &params[l].bias}}) {
      const std::string name = tensor_name(group, l, part);
      auto it = std::find_if(c.tensors.begin(), c.tensors.end(), [&](const NamedTensor& t) { return t.name == name; });
      if (it == c.tensors.end()) fail(ErrorCode::CorruptHeader, "checkpoint lacks tensor " + name);
      if (it->tensor.shape() != target->shape()) {
        fail(ErrorCode::CorruptHeader, "tensor " + name + " has shape " + to_string(it->tensor.shape()) +
                                           ", model expects " + to_string(target->shape()));
      }
      *target = it->tensor;
    }
  }
}

}  // namespace

std::string encode_container(const Container& c) {
  nlohmann::json header = c.meta;
  header["dtype"] = "f32";
  header["tensors"] = nlohmann::json::array();
  for (const auto& t : c.tensors) header["tensors"].push_back({{"name", t.name}, {"shape", t.tensor.shape()}});
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  put_u16(out, kContainerVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& t : c.tensors) {
    for (double v : t.tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

Container decode_container(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) fail(ErrorCode::BadMagic, "not a DCNN container");
  if (bytes.size() < 10) fail(ErrorCode::CorruptHeader, "container header is truncated");
  const auto version = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[4]) |
                                                  (static_cast<unsigned char>(bytes[5]) << 8));
  if (version != kContainerVersion) {
    fail(ErrorCode::VersionMismatch, "container version " + std::to_string(version) + ", expected " + std::to_string(kContainerVersion));
  }
  const std::uint32_t header_len = get_u32(bytes, 6);
  if (bytes.size() < 10 + static_cast<std::size_t>(header_len)) fail(ErrorCode::CorruptHeader, "header length exceeds file size");

  Container c;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(10, header_len));
    if (header.value("dtype", "") != "f32") fail(ErrorCode::CorruptHeader, "unsupported dtype");
    for (const auto& entry : header.at("tensors")) {
      c.tensors.push_back({entry.at("name").get<std::string>(), Tensor(entry.at("shape").get<Shape>())});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptHeader, e.what());
  }
  header.erase("tensors");
  header.erase("dtype");
  c.meta = std::move(header);

  std::size_t at = 10 + header_len;
  std::size_t needed = 0;
  for (const auto& t : c.tensors) needed += t.tensor.size() * 4;
  if (bytes.size() - at < needed) {
    fail(ErrorCode::TruncatedPayload, "payload has " + std::to_string(bytes.size() - at) + " bytes, header declares " + std::to_string(needed));
  }
  if (bytes.size() - at > needed) fail(ErrorCode::CorruptHeader, "trailing bytes after payload");
  for (auto& t : c.tensors) {
    for (double& v : t.tensor.data()) {
      v = static_cast<double>(std::bit_cast<float>(get_u32(bytes, at)));
      at += 4;
    }
  }
  return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::string bytes = encode_container(c);
  // Write then rename so readers never observe a half-written file.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_container(ss.str());
}

Container checkpoint_to_container(const Checkpoint& ckpt) {
  Container c;
  c.meta["kind"] = "checkpoint";
  c.meta["spec"] = format_model_spec(ckpt.spec);
  c.meta["seed"] = ckpt.seed;
  c.meta["epoch"] = ckpt.epoch;
  c.meta["iteration"] = ckpt.iteration;
  c.meta["best_val_loss"] = std::isfinite(ckpt.best_val_loss) ? nlohmann::json(ckpt.best_val_loss) : nlohmann::json(nullptr);
  c.meta["adam"] = {{"t", ckpt.adam.t},
                    {"lr", ckpt.adam.hyper.lr},
                    {"beta1", ckpt.adam.hyper.beta1},
                    {"beta2", ckpt.adam.hyper.beta2},
                    {"eps", ckpt.adam.hyper.eps}};
  append_params(c, "param", ckpt.params);
  if (!ckpt.adam.m.empty()) {
    append_params(c, "adam_m", ckpt.adam.m);
    append_params(c, "adam_v", ckpt.adam.v);
  }
  return c;
}

Checkpoint checkpoint_from_container(const Container& c) {
  Checkpoint ckpt;
  try {
    if (c.meta.value("kind", "") != "checkpoint") fail(ErrorCode::CorruptHeader, "container is not a checkpoint");
    try {
      ckpt.spec = parse_model_spec(c.meta.at("spec").get<std::string>());
    } catch (const Error& e) {
      fail(ErrorCode::CorruptHeader, std::string("embedded model spec: ") + e.what());
    }
    ckpt.seed = c.meta.at("seed").get<std::uint64_t>();
    ckpt.epoch = c.meta.at("epoch").get<std::uint64_t>();
    ckpt.iteration = c.meta.at("iteration").get<std::uint64_t>();
    const auto& best = c.meta.at("best_val_loss");
    ckpt.best_val_loss = best.is_null() ? std::numeric_limits<double>::infinity() : best.get<double>();
    const auto& adam = c.meta.at("adam");
    ckpt.adam.t = adam.at("t").get<std::uint64_t>();
    ckpt.adam.hyper = {adam.at("lr").get<double>(), adam.at("beta1").get<double>(), adam.at("beta2").get<double>(),
                       adam.at("eps").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptHeader, e.what());
  }
  ckpt.params = init_params(ckpt.spec, 0);
  take_params(c, "param", ckpt.params);
  ckpt.adam.m = zeros_like(ckpt.params);
  ckpt.adam.v = zeros_like(ckpt.params);
  const bool has_moments = std::any_of(c.tensors.begin(), c.tensors.end(),
                                       [](const NamedTensor& t) { return t.name.rfind("adam_m.", 0) == 0; });
  if (has_moments) {
    take_params(c, "adam_m", ckpt.adam.m);
    take_params(c, "adam_v", ckpt.adam.v);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_container(path, checkpoint_to_container(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_container(read_container(path)); }

void save_image_tensor(const std::filesystem::path& path, const ImageBuffer& img, const std::string& image_id) {
  Container c;
  c.meta["kind"] = "image";
  c.meta["image_id"] = image_id;
  c.tensors.push_back({"image", Tensor({img.height(), img.width(), img.channels()},
                                       std::vector<double>(img.data().begin(), img.data().end()))});
  write_container(path, c);
}

ImageBuffer load_image_tensor(const std::filesystem::path& path) {
  Container c = read_container(path);
  if (c.meta.value("kind", "") != "image" || c.tensors.size() != 1 || c.tensors[0].tensor.rank() != 3) {
    fail(ErrorCode::CorruptHeader, path.string() + " is not an image tensor");
  }
  const Tensor& t = c.tensors[0].tensor;
  return ImageBuffer(t.dim(0), t.dim(1), t.dim(2), std::vector<double>(t.data().begin(), t.data().end()));
}

}  // namespace derm::nn
