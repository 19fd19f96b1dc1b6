#pragma once

#include "hopqa/nn.hpp"
#include "hopqa/textproc.hpp"

#include <map>
#include <string>

namespace hopqa {

// Flat "key = value" manifest stored next to every checkpoint's parameters.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  void save(const std::string& path) const;
  static Manifest load(const std::string& path);

 private:
  std::map<std::string, std::string> entries_;
};

// Checkpoint directory layout: manifest.txt, params.bin, vocab.txt.
void save_checkpoint(const std::string& dir, const Manifest& manifest, const nn::ParamSet& params,
                     const Vocab& vocab);
Manifest load_manifest(const std::string& dir);
Vocab load_checkpoint_vocab(const std::string& dir);
void load_checkpoint_params(const std::string& dir, nn::ParamSet& params);

}  // namespace hopqa
