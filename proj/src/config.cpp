#include "camboost/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "camboost/error.hpp"

namespace camboost {

const std::map<std::string, std::string>& RunConfig::defaults() {
  static const std::map<std::string, std::string> kDefaults = {
      {"seed", "0"},
      {"out", "out"},
      {"data_dir", ""},
      // synthetic data
      {"classes", "6"},
      {"height", "32"},
      {"width", "32"},
      {"n_train", "2000"},
      {"n_test", "500"},
      {"blob_min", "6"},
      {"blob_max", "10"},
      {"min_positives", "1"},
      {"max_positives", "3"},
      {"jitter", "2"},
      {"noise", "0.3"},
      {"labels", "single"},
      // network
      {"conv_channels", "16,32"},
      {"kernel", "3"},
      {"head_bias", "true"},
      // training
      {"epochs", "10"},
      {"batch", "8"},
      {"lr", "2e-3"},
      {"head_lr_mult", "10"},
      {"full_labels", "false"},
      {"boost_train", "false"},
      {"boost_infer", "false"},
      {"alpha", "5"},
      {"beta", "0"},
      {"skip_boost_positiveless", "true"},
      {"val_fraction", "0.2"},
      {"ll", "none"},
      {"delta_rel", ""},
      {"warmup", "1"},
      {"exclude_observed_negatives", "false"},
      // eval / explain
      {"checkpoint", ""},
      {"checkpoint_a", ""},
      {"checkpoint_b", ""},
      {"fraction", "0.05"},
      {"cam_exports", "4"},
      // sweep
      {"alphas", "1,2,3,5,8,12"},
      {"betas", "-0.2,0,0.2"},
      {"sweep_ll", "ct"},
  };
  return kDefaults;
}

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!values_.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
  explicit_[key] = true;
}

bool RunConfig::is_set(const std::string& key) const { return explicit_.contains(key); }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path.string());
}

std::string RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "' has invalid value '" + text + "'");
  }
  return value;
}

double parse_double(const std::string& key, const std::string& text) {
  // The process never calls setlocale, so strtod reads '.' decimals.
  if (text.empty()) throw ConfigError("config key '" + key + "' is empty");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    throw ConfigError("config key '" + key + "' has invalid value '" + text + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

double RunConfig::get_double(const std::string& key) const { return parse_double(key, get(key)); }

std::int64_t RunConfig::get_int(const std::string& key) const { return parse_number<std::int64_t>(key, get(key)); }

std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_number<std::uint64_t>(key, get(key)); }

std::size_t RunConfig::get_size(const std::string& key) const { return parse_number<std::size_t>(key, get(key)); }

bool RunConfig::get_bool(const std::string& key) const {
  const auto v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_list(get(key))) out.push_back(parse_double(key, s));
  return out;
}

std::vector<std::size_t> RunConfig::get_sizes(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& s : split_list(get(key))) out.push_back(parse_number<std::size_t>(key, s));
  return out;
}

std::string RunConfig::resolved_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << '=' << v << '\n';
  return os.str();
}

void RunConfig::write_resolved(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << resolved_text();
}

}  // namespace camboost
