#include "fracwave/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fracwave/error.hpp"

namespace fracwave {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::optional<double> to_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

double number_or_throw(const std::string& s, const std::string& field) {
  const auto v = to_double(s);
  if (!v) throw ConfigError("field '" + field + "': expected a number, got '" + s + "'");
  return *v;
}

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::Forward, "forward"},
    {ExperimentKind::Picard, "picard"},
    {ExperimentKind::EnergyCheck, "energy-check"},
    {ExperimentKind::FracCheck, "frac-check"},
    {ExperimentKind::CarlemanCheck, "carleman-check"},
    {ExperimentKind::TraceCheck, "trace-check"},
    {ExperimentKind::InvertSource, "invert-source"},
    {ExperimentKind::InvertInitial, "invert-initial"},
    {ExperimentKind::Probe, "probe"},
};

}  // namespace

Profile parse_profile(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  const auto parts = split(t, ':');
  const std::string& head = parts.empty() ? t : parts[0];
  auto arg = [&](std::size_t i, std::optional<double> fallback = std::nullopt) {
    if (i < parts.size()) return number_or_throw(parts[i], field);
    if (fallback) return *fallback;
    throw ConfigError("field '" + field + "': profile '" + t + "' needs " + std::to_string(i) + " argument(s)");
  };
  auto arity = [&](std::size_t lo, std::size_t hi) {
    if (parts.size() < lo + 1 || parts.size() > hi + 1) {
      throw ConfigError("field '" + field + "': wrong number of arguments in profile '" + t + "'");
    }
  };
  Profile p;
  p.text = t;
  if (t == "zero") {
    p.fn = [](double) { return 0.0; };
  } else if (const auto v = to_double(t)) {
    const double c = *v;
    p.fn = [c](double) { return c; };
  } else if (head == "const") {
    arity(1, 1);
    const double c = arg(1);
    p.fn = [c](double) { return c; };
  } else if (head == "sin" || head == "cos") {
    arity(1, 2);
    const double k = arg(1);
    const double amp = arg(2, 1.0);
    if (head == "sin") {
      p.fn = [k, amp](double xi) { return amp * std::sin(k * std::numbers::pi * xi); };
    } else {
      p.fn = [k, amp](double xi) { return amp * std::cos(k * std::numbers::pi * xi); };
    }
  } else if (head == "linear") {
    arity(2, 2);
    const double v0 = arg(1);
    const double v1 = arg(2);
    p.fn = [v0, v1](double xi) { return v0 + (v1 - v0) * xi; };
  } else {
    throw ConfigError("field '" + field + "': unknown profile '" + t +
                      "' (expected zero, a number, const:v, sin:k[:amp], cos:k[:amp] or linear:v0:v1)");
  }
  return p;
}

ExperimentKind parse_kind(const std::string& text) {
  for (const auto& k : kKinds) {
    if (text == k.name) return k.kind;
  }
  throw ConfigError("field '[run] kind': unknown experiment kind '" + text + "'");
}

std::string to_string(ExperimentKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream msg;
    msg << origin << ":" << e.line() << ": " << e.message();
    throw ConfigError(msg.str());
  }
  RunConfig cfg;
  cfg.origin_ = origin;
  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty()) {
      throw ConfigError(origin + ": key '" + name + "' appears outside any section");
    }
    Section entries;
    for (const auto& [key, value] : section) entries.emplace_back(key, trim(value.data()));
    cfg.sections_.emplace_back(name, std::move(entries));
  }
  cfg.refresh_run_section();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path.string());
}

void RunConfig::refresh_run_section() {
  kind_ = parse_kind(get_string("run", "kind"));
  seed_text_ = get_string("run", "seed", "0");
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(seed_text_.data(), seed_text_.data() + seed_text_.size(), seed);
  if (ec != std::errc() || ptr != seed_text_.data() + seed_text_.size()) {
    fail("run", "seed", "expected an unsigned 64-bit integer, got '" + seed_text_ + "'");
  }
  seed_ = seed;
}

const std::string* RunConfig::find(const std::string& section, const std::string& key) const {
  for (const auto& [name, entries] : sections_) {
    if (name != section) continue;
    for (const auto& [k, v] : entries) {
      if (k == key) return &v;
    }
  }
  return nullptr;
}

void RunConfig::fail(const std::string& section, const std::string& key, const std::string& why) const {
  throw ConfigError(origin_ + ": field '[" + section + "] " + key + "': " + why);
}

bool RunConfig::has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

bool RunConfig::has_section(const std::string& section) const {
  for (const auto& [name, entries] : sections_) {
    if (name == section) return true;
  }
  return false;
}

std::string RunConfig::get_string(const std::string& section, const std::string& key) const {
  const std::string* v = find(section, key);
  if (!v) {
    throw ConfigError(origin_ + ": missing key '" + key + "' in section [" + section + "]");
  }
  return *v;
}

std::string RunConfig::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

double RunConfig::get_double(const std::string& section, const std::string& key) const {
  const std::string s = get_string(section, key);
  const auto v = to_double(s);
  if (!v) fail(section, key, "expected a number, got '" + s + "'");
  return *v;
}

double RunConfig::get_double(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

int RunConfig::get_int(const std::string& section, const std::string& key) const {
  const std::string s = get_string(section, key);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(section, key, "expected an integer, got '" + s + "'");
  return v;
}

int RunConfig::get_int(const std::string& section, const std::string& key, int fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

std::vector<double> RunConfig::get_list(const std::string& section, const std::string& key) const {
  const std::string s = get_string(section, key);
  std::vector<double> out;
  for (const auto& part : split(s, ',')) {
    const auto v = to_double(part);
    if (!v) fail(section, key, "expected a comma-separated list of numbers, got '" + s + "'");
    out.push_back(*v);
  }
  if (out.empty()) fail(section, key, "list is empty");
  return out;
}

std::vector<double> RunConfig::get_list(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const {
  return has(section, key) ? get_list(section, key) : fallback;
}

Profile RunConfig::get_profile(const std::string& section, const std::string& key, const std::string& fallback) const {
  try {
    return parse_profile(get_string(section, key, fallback), "[" + section + "] " + key);
  } catch (const ConfigError& e) {
    throw ConfigError(origin_ + ": " + e.what());
  }
}

void RunConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  auto it = std::find_if(sections_.begin(), sections_.end(), [&](const auto& s) { return s.first == section; });
  if (it == sections_.end()) {
    sections_.emplace_back(section, Section{});
    it = std::prev(sections_.end());
  }
  auto entry = std::find_if(it->second.begin(), it->second.end(), [&](const auto& kv) { return kv.first == key; });
  if (entry == it->second.end()) {
    it->second.emplace_back(key, value);
  } else {
    entry->second = value;
  }
  refresh_run_section();
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [name, entries] : sections_) {
    if (!first) out << "\n";
    first = false;
    out << "[" << name << "]\n";
    for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
  }
  return out.str();
}

}  // namespace fracwave
