#include "app/manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "xirl/common/bytes.hpp"
#include "xirl/common/errors.hpp"

namespace xirl::app {
namespace {

namespace fs = std::filesystem;

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("sha256 update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw Error("sha256 final failed");
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

nlohmann::json describe(const std::string& path) {
  nlohmann::json j = {{"path", path}};
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
      const auto fname = entry.path().filename();
      if (fname == "run_manifest.json" || fname == "resolved_config.json") continue;  // provenance, not data
      if (entry.is_regular_file()) files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    Sha256 h;
    for (const auto& f : files) {
      const std::string rel = fs::relative(f, path).generic_string();
      const std::string digest = sha256_file(f);
      h.update(rel.data(), rel.size());
      h.update(digest.data(), digest.size());
    }
    j["sha256"] = h.hex();
    j["files"] = files.size();
  } else if (fs::is_regular_file(path, ec)) {
    j["sha256"] = sha256_file(path);
    j["bytes"] = fs::file_size(path);
  } else {
    j["sha256"] = nullptr;
  }
  return j;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)), started_(utc_timestamp()) {}

void RunManifest::set_config(const nlohmann::json& resolved) { config_ = resolved; }
void RunManifest::add_input(const std::string& path) { inputs_.push_back(path); }
void RunManifest::add_output(const std::string& path) { outputs_.push_back(path); }
void RunManifest::set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }

void RunManifest::write(const std::string& dir) const {
  fs::create_directories(dir);
  nlohmann::json j;
  j["command"] = command_;
  j["argv"] = argv_;
  j["started"] = started_;
  j["finished"] = utc_timestamp();
  if (!config_.is_null()) {
    const std::string text = config_.dump(2) + "\n";
    const std::string cfg_path = (fs::path(dir) / "resolved_config.json").string();
    write_file_bytes(cfg_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    j["config_sha256"] = sha256_hex(text);
    j["config"] = config_;
  }
  j["inputs"] = nlohmann::json::array();
  for (const auto& p : inputs_) j["inputs"].push_back(describe(p));
  j["outputs"] = nlohmann::json::array();
  for (const auto& p : outputs_) j["outputs"].push_back(describe(p));
  for (const auto& [k, v] : extra_.items()) j[k] = v;
  const std::string text = j.dump(2) + "\n";
  write_file_bytes((fs::path(dir) / "run_manifest.json").string(),
                   std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace xirl::app
