#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace xirl::app {

/// Hex SHA-256 of a byte string or a file.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

/// Provenance record written next to every command's outputs.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  void set_config(const nlohmann::json& resolved);
  /// Files are hashed when the manifest is written; directories are walked.
  void add_input(const std::string& path);
  void add_output(const std::string& path);
  void set(const std::string& key, nlohmann::json value);

  /// Writes `<dir>/run_manifest.json` and the resolved config beside it.
  void write(const std::string& dir) const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  nlohmann::json config_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  nlohmann::json extra_ = nlohmann::json::object();
  std::string started_;
};

std::string utc_timestamp();

}  // namespace xirl::app
