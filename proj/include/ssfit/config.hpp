#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ssfit {

// Flat `key = value` configuration with `#` comments. Values keep their source
// text so serialize() round-trips losslessly; numeric parsing always uses `.`
// decimals regardless of locale.
class Config {
public:
  Config() = default;

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_real(const std::string& key) const;
  double get_real(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_reals(const std::string& key) const;  // comma separated

  void set(const std::string& key, const std::string& value);
  void set_real(const std::string& key, double value);
  void set_int(const std::string& key, long value);

  // Canonical form: sorted keys, one `key = value` per line.
  std::string serialize() const;

  // FNV-1a over the canonical serialization, as a fixed-width hex string.
  std::string hash() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

private:
  std::string lookup(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

// Locale-independent float/int parsing helpers shared by the table readers.
double parse_real(const std::string& text, const std::string& context);
long parse_int(const std::string& text, const std::string& context);
std::string format_real(double value);  // shortest round-trip representation

}  // namespace ssfit
