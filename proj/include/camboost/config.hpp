#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace camboost {

/// Flat key=value run configuration. Every key has a registered default;
/// unknown keys are rejected. Later assignments win.
class RunConfig {
 public:
  RunConfig();

  /// Parses "key=value" lines; '#' starts a comment.
  void merge_file(const std::filesystem::path& path);
  void merge_text(const std::string& text, const std::string& origin);
  void set(const std::string& key, const std::string& value);
  /// Keys explicitly assigned by a file, override or set().
  bool is_set(const std::string& key) const;

  std::string get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::size_t> get_sizes(const std::string& key) const;

  /// All keys with their resolved values, sorted by key.
  std::string resolved_text() const;
  void write_resolved(const std::filesystem::path& path) const;

  static const std::map<std::string, std::string>& defaults();

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

}  // namespace camboost
