#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fracwave {

/// A 1-D profile on the unit coordinate xi in [0, 1]:
///   zero | <number> | const:v | sin:k[:amp] | cos:k[:amp] | linear:v0:v1
/// sin:k means amp * sin(k pi xi); spatial profiles use xi = (x - a)/(b - a),
/// temporal ones xi = t / T.
struct Profile {
  std::string text;
  std::function<double(double)> fn;

  double operator()(double xi) const { return fn(xi); }
};

/// Throws ConfigError naming `field` on malformed input.
Profile parse_profile(const std::string& text, const std::string& field);

enum class ExperimentKind {
  Forward,
  Picard,
  EnergyCheck,
  FracCheck,
  CarlemanCheck,
  TraceCheck,
  InvertSource,
  InvertInitial,
  Probe
};

ExperimentKind parse_kind(const std::string& text);
std::string to_string(ExperimentKind kind);

/// Sectioned key/value run configuration (INI). Sections keep file order.
class RunConfig {
 public:
  using Section = std::vector<std::pair<std::string, std::string>>;

  static RunConfig parse(const std::string& text, const std::string& origin = "<config>");
  static RunConfig load(const std::filesystem::path& path);

  ExperimentKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  /// The seed exactly as written in the file.
  const std::string& seed_text() const { return seed_text_; }
  const std::string& origin() const { return origin_; }

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key) const;
  std::vector<double> get_list(const std::string& section, const std::string& key,
                               const std::vector<double>& fallback) const;
  Profile get_profile(const std::string& section, const std::string& key, const std::string& fallback) const;

  /// Adds or replaces a value, then re-validates the [run] section.
  void set(const std::string& section, const std::string& key, const std::string& value);

  const std::vector<std::pair<std::string, Section>>& sections() const { return sections_; }

  /// Canonical INI text of the configuration.
  std::string serialize() const;

 private:
  void refresh_run_section();
  const std::string* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& why) const;

  std::vector<std::pair<std::string, Section>> sections_;
  ExperimentKind kind_ = ExperimentKind::Forward;
  std::uint64_t seed_ = 0;
  std::string seed_text_ = "0";
  std::string origin_;
};

}  // namespace fracwave
