#include "hopqa/checkpoint.hpp"

#include "hopqa/error.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hopqa {

namespace fs = std::filesystem;

void Manifest::set(const std::string& key, double value) {
  std::ostringstream s;
  s << std::setprecision(17) << value;
  entries_[key] = s.str();
}

void Manifest::set(const std::string& key, long long value) { entries_[key] = std::to_string(value); }

const std::string& Manifest::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ParseError("manifest is missing key '" + key + "'");
  return it->second;
}

double Manifest::get_double(const std::string& key) const { return std::stod(get(key)); }
long long Manifest::get_int(const std::string& key) const { return std::stoll(get(key)); }
bool Manifest::get_bool(const std::string& key) const { return get(key) == "true"; }

void Manifest::save(const std::string& path) const {
  std::ofstream out(path);
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
  if (!out) throw Error("cannot write " + path);
}

Manifest Manifest::load(const std::string& path) {
  if (!fs::exists(path)) throw MissingArtifactError(path);
  std::ifstream in(path);
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find(" = ");
    if (eq == std::string::npos) throw ParseError(path + ": malformed manifest line '" + line + "'");
    m.set(line.substr(0, eq), line.substr(eq + 3));
  }
  return m;
}

void save_checkpoint(const std::string& dir, const Manifest& manifest, const nn::ParamSet& params,
                     const Vocab& vocab) {
  fs::create_directories(dir);
  manifest.save((fs::path(dir) / "manifest.txt").string());
  {
    std::ofstream out(fs::path(dir) / "params.bin", std::ios::binary);
    params.save(out);
  }
  std::ofstream vout(fs::path(dir) / "vocab.txt");
  vocab.save(vout);
}

Manifest load_manifest(const std::string& dir) { return Manifest::load((fs::path(dir) / "manifest.txt").string()); }

Vocab load_checkpoint_vocab(const std::string& dir) {
  auto path = fs::path(dir) / "vocab.txt";
  if (!fs::exists(path)) throw MissingArtifactError(path.string());
  std::ifstream in(path);
  return Vocab::load(in);
}

void load_checkpoint_params(const std::string& dir, nn::ParamSet& params) {
  auto path = fs::path(dir) / "params.bin";
  if (!fs::exists(path)) throw MissingArtifactError(path.string());
  std::ifstream in(path, std::ios::binary);
  params.load(in);
}

}  // namespace hopqa
