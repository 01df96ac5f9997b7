#include "sea/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>

#include "sea/fsutil.hpp"

namespace sea {

namespace fs = std::filesystem;

namespace {

using Kind = ConfigError::Kind;

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_comment(std::string_view line) {
  if (!line.empty() && (line.front() == '#' || line.front() == ';')) return {};
  // Inline comments need whitespace before '#' so regex lines keep their '#'s.
  size_t pos = line.find(" #");
  if (pos == std::string_view::npos) pos = line.find("\t#");
  return std::string(line.substr(0, pos));
}

bool parse_bool(const std::string& v, int line, const char* key) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(Kind::BadValue, line, std::string(key) + " expects a boolean, got '" + v + "'");
}

std::uint64_t parse_bytes(const std::string& v, int line, const char* key) {
  if (v.empty()) throw ConfigError(Kind::BadValue, line, std::string(key) + " is empty");
  size_t idx = 0;
  std::uint64_t n = 0;
  try {
    n = std::stoull(v, &idx);
  } catch (const std::exception&) {
    throw ConfigError(Kind::BadValue, line, std::string(key) + ": bad number '" + v + "'");
  }
  std::string suffix = trim(v.substr(idx));
  std::uint64_t mult = 1;
  if (suffix == "" || suffix == "B") mult = 1;
  else if (suffix == "K" || suffix == "KiB") mult = 1ull << 10;
  else if (suffix == "M" || suffix == "MiB") mult = 1ull << 20;
  else if (suffix == "G" || suffix == "GiB") mult = 1ull << 30;
  else if (suffix == "T" || suffix == "TiB") mult = 1ull << 40;
  else
    throw ConfigError(Kind::BadValue, line, std::string(key) + ": bad size suffix '" + suffix + "'");
  return n * mult;
}

std::optional<LogLevel> parse_level(const std::string& v) {
  if (v == "off") return LogLevel::off;
  if (v == "error") return LogLevel::error;
  if (v == "info") return LogLevel::info;
  if (v == "debug") return LogLevel::debug;
  return std::nullopt;
}

const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::off: return "off";
    case LogLevel::error: return "error";
    case LogLevel::info: return "info";
    case LogLevel::debug: return "debug";
  }
  return "info";
}

std::vector<std::string> components(const fs::path& p) {
  std::vector<std::string> out;
  for (const auto& c : p.lexically_normal()) {
    std::string s = c.generic_string();
    if (s.empty() || s == "/") continue;
    out.push_back(s);
  }
  return out;
}

// True when a == b or one path is a directory prefix of the other.
bool paths_overlap(const fs::path& a, const fs::path& b) {
  auto ca = components(a);
  auto cb = components(b);
  size_t n = std::min(ca.size(), cb.size());
  for (size_t i = 0; i < n; ++i)
    if (ca[i] != cb[i]) return false;
  return true;
}

struct RawTier {
  int line = 0;  // line of the [tier.N] header
  std::map<std::string, std::pair<std::string, int>> kv;
};

}  // namespace

SeaConfig parse_config(const std::string& text) {
  SeaConfig cfg;
  bool mount_seen = false;
  std::map<int, RawTier> tiers;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::string section;  // "", "sea", or "tier.N"
  int tier_idx = -1;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(Kind::BadValue, line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section == "sea") {
        tier_idx = -1;
      } else if (section.rfind("tier.", 0) == 0) {
        std::string num = section.substr(5);
        try {
          size_t idx = 0;
          tier_idx = std::stoi(num, &idx);
          if (idx != num.size() || tier_idx < 0) throw std::invalid_argument(num);
        } catch (const std::exception&) {
          throw ConfigError(Kind::BadValue, line_no, "bad tier index in [" + section + "]");
        }
        if (tiers.count(tier_idx))
          throw ConfigError(Kind::DuplicatePriority, line_no,
                            "tier priority " + std::to_string(tier_idx) + " declared twice");
        tiers[tier_idx].line = line_no;
      } else {
        throw ConfigError(Kind::UnknownKey, line_no, "unknown section [" + section + "]");
      }
      continue;
    }

    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(Kind::BadValue, line_no, "expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));

    if (section == "sea") {
      if (key == "mount") {
        cfg.mount_dir = val;
        mount_seen = true;
        if (!cfg.mount_dir.is_absolute())
          throw ConfigError(Kind::BadValue, line_no, "mount must be an absolute path");
      } else if (key == "flush_interval") {
        cfg.flush_interval =
            std::chrono::milliseconds(parse_bytes(val, line_no, "flush_interval"));
      } else if (key == "stability_ms") {
        cfg.stability_window =
            std::chrono::milliseconds(parse_bytes(val, line_no, "stability_ms"));
      } else if (key == "log_level") {
        auto lv = parse_level(val);
        if (!lv) throw ConfigError(Kind::BadValue, line_no, "unknown log_level '" + val + "'");
        cfg.log_level = *lv;
      } else if (key == "stats_path") {
        cfg.stats_path = val;
      } else {
        throw ConfigError(Kind::UnknownKey, line_no, "unknown key '" + key + "' in [sea]");
      }
    } else if (tier_idx >= 0) {
      auto& t = tiers[tier_idx];
      if (key != "root" && key != "writable" && key != "capacity_hint" && key != "persistent")
        throw ConfigError(Kind::UnknownKey, line_no,
                          "unknown key '" + key + "' in [" + section + "]");
      t.kv[key] = {val, line_no};
    } else {
      throw ConfigError(Kind::UnknownKey, line_no, "key '" + key + "' outside any section");
    }
  }

  if (!mount_seen) throw ConfigError(Kind::MissingMount, 0, "no mount declared in [sea]");
  if (tiers.empty()) throw ConfigError(Kind::BadValue, 0, "no [tier.N] sections declared");

  // Priorities must be contiguous from 0.
  int expect = 0;
  for (const auto& [prio, _] : tiers) {
    if (prio != expect)
      throw ConfigError(Kind::BadValue, tiers.begin()->second.line,
                        "tier priorities must be contiguous from 0; missing tier." +
                            std::to_string(expect));
    ++expect;
  }

  for (const auto& [prio, raw_tier] : tiers) {
    TierSpec t;
    t.priority = prio;
    auto get = [&](const char* key) -> std::optional<std::pair<std::string, int>> {
      auto it = raw_tier.kv.find(key);
      if (it == raw_tier.kv.end()) return std::nullopt;
      return it->second;
    };
    auto root = get("root");
    if (!root)
      throw ConfigError(Kind::BadValue, raw_tier.line,
                        "[tier." + std::to_string(prio) + "] has no root");
    t.root = root->first;
    if (!t.root.is_absolute())
      throw ConfigError(Kind::BadValue, root->second, "tier root must be an absolute path");
    if (auto w = get("writable")) t.writable = parse_bool(w->first, w->second, "writable");
    if (auto c = get("capacity_hint"))
      t.capacity_hint = parse_bytes(c->first, c->second, "capacity_hint");
    if (auto p = get("persistent")) t.persistent = parse_bool(p->first, p->second, "persistent");
    cfg.tiers.push_back(std::move(t));
  }

  // Persistent tier: exactly one, and it must rank last.
  int n_persistent = 0;
  for (const auto& t : cfg.tiers) n_persistent += t.persistent ? 1 : 0;
  if (n_persistent == 0)
    throw ConfigError(Kind::MissingPersistent, 0, "no tier is marked persistent");
  if (n_persistent > 1)
    throw ConfigError(Kind::DuplicatePersistent, 0, "more than one tier is marked persistent");
  if (!cfg.tiers.back().persistent)
    throw ConfigError(Kind::BadValue, 0,
                      "the persistent tier must hold the largest priority value");

  if (std::none_of(cfg.tiers.begin(), cfg.tiers.end(), [](const TierSpec& t) { return t.writable; }))
    throw ConfigError(Kind::NoWritableTier, 0, "no tier is writable");

  // Existence checks.
  if (!fs::is_directory(cfg.mount_dir))
    throw ConfigError(Kind::NonexistentDirectory, 0,
                      "mount directory does not exist: " + cfg.mount_dir.string());
  for (const auto& t : cfg.tiers)
    if (!fs::is_directory(t.root))
      throw ConfigError(Kind::NonexistentDirectory, 0,
                        "tier." + std::to_string(t.priority) +
                            " root does not exist: " + t.root.string());

  // No nesting between the mountpoint and any tier root, nor between tiers.
  for (const auto& t : cfg.tiers) {
    if (paths_overlap(cfg.mount_dir, t.root))
      throw ConfigError(Kind::NestedMount, 0,
                        "mount " + cfg.mount_dir.string() + " overlaps tier." +
                            std::to_string(t.priority) + " root " + t.root.string());
    for (const auto& u : cfg.tiers)
      if (t.priority < u.priority && paths_overlap(t.root, u.root))
        throw ConfigError(Kind::NestedMount, 0,
                          "tier." + std::to_string(t.priority) + " root overlaps tier." +
                              std::to_string(u.priority) + " root");
  }

  return cfg;
}

std::string serialize_config(const SeaConfig& config) {
  std::ostringstream out;
  out << "[sea]\n";
  out << "mount = " << config.mount_dir.string() << "\n";
  out << "flush_interval = " << config.flush_interval.count() << "\n";
  out << "stability_ms = " << config.stability_window.count() << "\n";
  out << "log_level = " << level_name(config.log_level) << "\n";
  if (!config.stats_path.empty()) out << "stats_path = " << config.stats_path.string() << "\n";
  for (const auto& t : config.tiers) {
    out << "\n[tier." << t.priority << "]\n";
    out << "root = " << t.root.string() << "\n";
    out << "writable = " << (t.writable ? "true" : "false") << "\n";
    if (t.capacity_hint) out << "capacity_hint = " << t.capacity_hint << "\n";
    out << "persistent = " << (t.persistent ? "true" : "false") << "\n";
  }
  return out.str();
}

SeaConfig load_config(const fs::path& file) {
  std::error_code ec;
  if (!fs::is_regular_file(file, ec))
    throw ConfigError(Kind::Io, 0, "config file not found: " + file.string());
  SeaConfig cfg = parse_config(read_text_file(file));
  cfg.config_dir = fs::absolute(file).parent_path();
  return cfg;
}

fs::path default_config_path() {
  if (const char* env = std::getenv("SEA_CONFIG"); env && *env) return env;
  return fs::path("./sea.ini");
}

std::vector<CompiledPattern> parse_policy_file(const std::string& text) {
  std::vector<CompiledPattern> out;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    try {
      out.push_back({std::regex(line, std::regex::ECMAScript | std::regex::optimize), line});
    } catch (const std::regex_error& e) {
      throw ConfigError(Kind::BadPattern, line_no,
                        std::string("bad pattern '") + line + "': " + e.what());
    }
  }
  return out;
}

PolicyRules load_policies(const fs::path& dir) {
  PolicyRules rules;
  auto load_one = [&](const char* name, std::vector<CompiledPattern>& dst) {
    fs::path p = dir / name;
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) return;
    try {
      dst = parse_policy_file(read_text_file(p));
    } catch (ConfigError& e) {
      // Re-throw with the file identity attached; never skip silently.
      throw ConfigError(e.kind, e.line, std::string(name) + ": " + e.what());
    }
  };
  load_one(kFlushListName, rules.flush);
  load_one(kEvictListName, rules.evict);
  load_one(kPrefetchListName, rules.prefetch);
  return rules;
}

namespace {
bool any_match(const std::string& path, const std::vector<CompiledPattern>& pats) {
  for (const auto& p : pats)
    if (std::regex_match(path, p.re)) return true;
  return false;
}
}  // namespace

Classified classify(const std::string& logical_path, const PolicyRules& rules) {
  Classified result;
  bool flush = any_match(logical_path, rules.flush);
  bool evict = any_match(logical_path, rules.evict);
  if (flush && evict) result.action = Disposition::Move;
  else if (flush) result.action = Disposition::Flush;
  else if (evict) result.action = Disposition::Evict;
  result.prefetch = any_match(logical_path, rules.prefetch);
  return result;
}

const char* disposition_name(Disposition d) {
  switch (d) {
    case Disposition::None: return "none";
    case Disposition::Flush: return "flush";
    case Disposition::Evict: return "evict";
    case Disposition::Move: return "move";
  }
  return "none";
}

}  // namespace sea
