#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "eegfuse/errors.hpp"
#include "eegfuse/tensor.hpp"
#include "eegfuse/tensor_io.hpp"

namespace eegfuse {

// Ordered key=value pairs, used for checkpoint config files.
using KvList = std::vector<std::pair<std::string, std::string>>;

inline void write_kv_file(const std::string& path, const KvList& kv) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& [key, value] : kv) out << key << "=" << value << "\n";
}

inline KvList read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  KvList kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path + ": expected key=value, got '" + line + "'");
    kv.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return kv;
}

template <typename T>
struct ParamEntry {
  std::string name;
  TensorT<T> value;
  bool trainable{true};
};

// Flat ordered collection of named model parameters and state buffers.
// Insertion order is the persistence order, so checkpoints round-trip
// byte-stably.
template <typename T>
class ParamStore {
 public:
  size_t add(const std::string& name, TensorT<T> value, bool trainable = true) {
    if (find(name) != npos)
      throw ValidationError("duplicate parameter name: " + name);
    entries_.push_back(ParamEntry<T>{name, std::move(value), trainable});
    return entries_.size() - 1;
  }

  size_t size() const { return entries_.size(); }
  ParamEntry<T>& entry(size_t i) { return entries_.at(i); }
  const ParamEntry<T>& entry(size_t i) const { return entries_.at(i); }

  size_t find(const std::string& name) const {
    for (size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].name == name) return i;
    return npos;
  }

  TensorT<T>& value(const std::string& name) {
    const size_t i = find(name);
    if (i == npos) throw ValidationError("unknown parameter: " + name);
    return entries_[i].value;
  }
  const TensorT<T>& value(const std::string& name) const {
    return const_cast<ParamStore*>(this)->value(name);
  }

  size_t total_scalars() const {
    size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  static constexpr size_t npos = static_cast<size_t>(-1);

 private:
  std::vector<ParamEntry<T>> entries_;
};

namespace detail {

inline std::string param_file_name(size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "param_%03zu.nft", index);
  return buf;
}

inline std::string dims_field(const std::vector<size_t>& shape) {
  if (shape.empty()) return "-";
  std::string s;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

inline std::vector<size_t> parse_dims_field(const std::string& field,
                                            const std::string& where) {
  if (field == "-") return {};
  std::vector<size_t> dims;
  std::stringstream ss(field);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      dims.push_back(std::stoull(part));
    } catch (const std::exception&) {
      throw FormatError(where + ": bad dims field '" + field + "'");
    }
  }
  if (dims.empty()) throw FormatError(where + ": bad dims field '" + field + "'");
  return dims;
}

}  // namespace detail

// A checkpoint is a directory: manifest.txt lists every parameter (index,
// name, trainable flag, dims), each tensor lives in its own param_NNN.nft
// file (always stored as f64), and config.txt carries the key=value
// configuration needed to rebuild the owning model.
template <typename T>
void save_checkpoint(const ParamStore<T>& store, const std::string& dir,
                     const KvList& config) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir);

  std::ofstream manifest(dir + "/manifest.txt", std::ios::trunc);
  if (!manifest) throw IoError("cannot write " + dir + "/manifest.txt");
  for (size_t i = 0; i < store.size(); ++i) {
    const ParamEntry<T>& e = store.entry(i);
    manifest << i << "\t" << e.name << "\t" << (e.trainable ? 1 : 0) << "\t"
             << detail::dims_field(e.value.shape) << "\n";
    save_tensor(e.value.template cast<double>(), dir + "/" + detail::param_file_name(i),
                DType::f64);
  }
  manifest.close();
  write_kv_file(dir + "/config.txt", config);
}

template <typename T>
ParamStore<T> load_checkpoint(const std::string& dir, KvList* config_out = nullptr) {
  const std::string manifest_path = dir + "/manifest.txt";
  std::ifstream manifest(manifest_path);
  if (!manifest) throw IoError("cannot read " + manifest_path);

  ParamStore<T> store;
  std::string line;
  size_t expect = 0;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string idx_s, name, trainable_s, dims_s;
    if (!std::getline(ss, idx_s, '\t') || !std::getline(ss, name, '\t') ||
        !std::getline(ss, trainable_s, '\t') || !std::getline(ss, dims_s))
      throw FormatError(manifest_path + ": malformed line '" + line + "'");
    size_t idx = 0;
    try {
      idx = std::stoull(idx_s);
    } catch (const std::exception&) {
      throw FormatError(manifest_path + ": bad index '" + idx_s + "'");
    }
    if (idx != expect)
      throw FormatError(manifest_path + ": index " + idx_s + " out of order");
    if (trainable_s != "0" && trainable_s != "1")
      throw FormatError(manifest_path + ": bad trainable flag '" + trainable_s + "'");
    const std::vector<size_t> dims =
        detail::parse_dims_field(dims_s, manifest_path);

    Tensor value = load_tensor(dir + "/" + detail::param_file_name(idx));
    if (value.shape != dims)
      throw FormatError(manifest_path + ": " + name + " dims " +
                        detail::dims_field(value.shape) +
                        " disagree with manifest " + dims_s);
    store.add(name, value.template cast<T>(), trainable_s == "1");
    ++expect;
  }
  if (config_out) *config_out = read_kv_file(dir + "/config.txt");
  return store;
}

}  // namespace eegfuse
