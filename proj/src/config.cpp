#include "semidfl/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>

namespace semidfl {

ConfigError::ConfigError(const std::string& source, int line, const std::string& msg)
    : Error(line > 0 ? source + ":" + std::to_string(line) + ": " + msg : source + ": " + msg),
      line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_list(std::string_view v) {
  std::string s = trim(v);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw Error("unterminated list '" + s + "'");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(std::string_view(s).substr(start, comma - start)));
    if (out.back().empty()) throw Error("empty list element in '" + std::string(v) + "'");
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error("expected a number, got '" + std::string(s) + "'");
  return v;
}

long long to_integer(std::string_view s) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error("expected an integer, got '" + std::string(s) + "'");
  return v;
}

int to_int(std::string_view s) {
  const auto v = to_integer(s);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw Error("integer out of range: '" + std::string(s) + "'");
  }
  return static_cast<int>(v);
}

std::uint64_t to_seed(std::string_view s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error("expected a non-negative integer, got '" + std::string(s) + "'");
  return v;
}

std::vector<int> to_int_list(std::string_view s) {
  std::vector<int> out;
  for (const auto& e : split_list(s)) out.push_back(to_int(e));
  return out;
}

std::vector<double> to_double_list(std::string_view s) {
  std::vector<double> out;
  for (const auto& e : split_list(s)) out.push_back(to_double(e));
  return out;
}

std::vector<Role> to_roles(std::string_view s) {
  std::vector<Role> out;
  for (const auto& e : split_list(s)) out.push_back(parse_role(e));
  return out;
}

std::vector<Edge> to_edges(std::string_view s) {
  std::vector<Edge> out;
  for (const auto& e : split_list(s)) {
    const auto dash = e.find('-');
    if (dash == std::string::npos) throw Error("edge '" + e + "' must be written as a-b");
    out.emplace_back(to_int(trim(e.substr(0, dash))), to_int(trim(e.substr(dash + 1))));
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["seed"] = [](auto& c, const auto& v) { c.run.seed = to_seed(v); };
    t["rounds"] = [](auto& c, const auto& v) { c.run.rounds = to_int(v); };
    t["method"] = [](auto& c, const auto& v) { apply_variant(c.run, v); };
    t["repeats"] = [](auto& c, const auto& v) { c.run.repeats = to_int(v); };
    t["jobs"] = [](auto& c, const auto& v) { c.run.jobs = to_int(v); };
    t["test_fraction"] = [](auto& c, const auto& v) { c.run.test_fraction = to_double(v); };

    t["topology.preset"] = [](auto& c, const auto& v) { c.run.topology.preset = v; };
    t["topology.roles"] = [](auto& c, const auto& v) {
      c.run.topology.preset.clear();
      c.run.topology.roles = to_roles(v);
    };
    t["topology.edges"] = [](auto& c, const auto& v) {
      c.run.topology.preset.clear();
      c.run.topology.edges = to_edges(v);
    };

    t["dataset.kind"] = [](auto& c, const auto& v) { c.run.dataset.kind = parse_dataset_kind(v); };
    t["dataset.n"] = [](auto& c, const auto& v) { c.run.dataset.n = to_int(v); };
    t["dataset.dim"] = [](auto& c, const auto& v) { c.run.dataset.dim = to_int(v); };
    t["dataset.classes"] = [](auto& c, const auto& v) { c.run.dataset.classes = to_int(v); };
    t["dataset.separation"] = [](auto& c, const auto& v) { c.run.dataset.separation = to_double(v); };
    t["dataset.noise"] = [](auto& c, const auto& v) { c.run.dataset.noise = to_double(v); };
    t["dataset.path"] = [](auto& c, const auto& v) { c.run.dataset.path = v; };

    t["partition.alpha"] = [](auto& c, const auto& v) { c.run.alpha = to_double(v); };
    t["partition.r"] = [](auto& c, const auto& v) { c.run.labeled_ratio = to_double(v); };

    t["augment.sigma"] = [](auto& c, const auto& v) { c.run.augment.sigma = to_double(v); };
    t["augment.image_side"] = [](auto& c, const auto& v) { c.run.augment.image_side = to_int(v); };
    t["augment.max_shift"] = [](auto& c, const auto& v) { c.run.augment.max_shift = to_int(v); };

    t["model.hidden_sizes"] = [](auto& c, const auto& v) { c.run.hidden = to_int_list(v); };
    t["train.epochs"] = [](auto& c, const auto& v) { c.run.train.epochs = to_int(v); };
    t["train.batch"] = [](auto& c, const auto& v) { c.run.train.batch = to_int(v); };
    t["train.lr"] = [](auto& c, const auto& v) { c.run.train.lr = to_double(v); };

    t["diffusion.H"] = [](auto& c, const auto& v) { c.run.diffusion.steps = to_int(v); };
    t["diffusion.beta_start"] = [](auto& c, const auto& v) { c.run.diffusion.beta_start = to_double(v); };
    t["diffusion.beta_end"] = [](auto& c, const auto& v) { c.run.diffusion.beta_end = to_double(v); };
    t["diffusion.hidden_sizes"] = [](auto& c, const auto& v) { c.run.diffusion.hidden = to_int_list(v); };
    t["diffusion.time_embed"] = [](auto& c, const auto& v) { c.run.diffusion.time_embed = to_int(v); };
    t["diffusion.p_uncond"] = [](auto& c, const auto& v) { c.run.diffusion.p_uncond = to_double(v); };
    t["diffusion.guidance"] = [](auto& c, const auto& v) { c.run.diffusion.guidance = to_double(v); };
    t["diffusion.sample_steps"] = [](auto& c, const auto& v) { c.run.diffusion.sample_steps = to_int(v); };
    t["diffusion.lr"] = [](auto& c, const auto& v) { c.run.diffusion.lr = to_double(v); };
    t["diffusion.iters"] = [](auto& c, const auto& v) { c.run.diffusion.iters = to_int(v); };
    t["diffusion.batch"] = [](auto& c, const auto& v) { c.run.diffusion.batch = to_int(v); };
    t["diffusion.optimizer"] = [](auto& c, const auto& v) { c.run.diffusion.optimizer = parse_optimizer(v); };
    t["diffusion.warmup_R"] = [](auto& c, const auto& v) { c.run.warmup_rounds = to_int(v); };
    t["diffusion.gen_per_period"] = [](auto& c, const auto& v) { c.run.gen_per_period = to_int(v); };
    t["diffusion.gen_period_rounds"] = [](auto& c, const auto& v) { c.run.gen_period_rounds = to_int(v); };
    t["diffusion.val_size"] = [](auto& c, const auto& v) { c.run.val_size = to_int(v); };

    t["pl.mode"] = [](auto& c, const auto& v) { c.run.pl.mode = parse_pl_mode(v); };
    t["pl.K"] = [](auto& c, const auto& v) { c.run.pl.K = to_int(v); };
    t["pl.Z"] = [](auto& c, const auto& v) { c.run.pl.Z = to_double(v); };
    t["pl.tau"] = [](auto& c, const auto& v) { c.run.pl.tau = to_double(v); };

    t["mixup.mode"] = [](auto& c, const auto& v) { c.run.mix.mode = parse_mix_mode(v); };
    t["mixup.beta"] = [](auto& c, const auto& v) {
      const auto b = to_double_list(v);
      if (b.size() != 2) throw Error("mixup.beta takes two values [a, b]");
      c.run.mix.beta_a = b[0];
      c.run.mix.beta_b = b[1];
    };
    t["mixup.pairs_per_round"] = [](auto& c, const auto& v) { c.run.mix.pairs_per_round = to_int(v); };
    t["mixup.pairing"] = [](auto& c, const auto& v) { c.run.mix.pairing = parse_pairing(v); };

    t["agg.mode"] = [](auto& c, const auto& v) { c.run.agg = parse_agg_mode(v); };
    t["agg.val_size"] = t["diffusion.val_size"];

    t["sweep.alpha"] = [](auto& c, const auto& v) { c.sweep.alphas = to_double_list(v); };
    t["sweep.r"] = [](auto& c, const auto& v) { c.sweep.ratios = to_double_list(v); };
    t["sweep.method"] = [](auto& c, const auto& v) {
      c.sweep.methods = split_list(v);
      for (const auto& m : c.sweep.methods) {
        if (!is_variant(m)) throw Error("unknown method/variant '" + m + "'");
      }
    };
    t["sweep.seeds"] = [](auto& c, const auto& v) {
      c.sweep.seeds.clear();
      for (const auto& e : split_list(v)) c.sweep.seeds.push_back(to_seed(e));
    };
    return t;
  }();
  return table;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  ExperimentConfig cfg;
  std::map<std::string, int> seen;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, line_no, "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section == "run") section.clear();
      if (!section.empty() && std::none_of(setters().begin(), setters().end(), [&](const auto& kv) {
            return kv.first.rfind(section + ".", 0) == 0;
          })) {
        throw ConfigError(source, line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line_no, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line_no, "missing key");
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = setters().find(full);
    if (it == setters().end()) throw ConfigError(source, line_no, "unknown key '" + full + "'");
    const std::string canonical = full == "agg.val_size" ? "diffusion.val_size" : full;
    if (seen.count(canonical)) {
      throw ConfigError(source, line_no, "duplicate key '" + full + "' (first set on line " +
                                             std::to_string(seen[canonical]) + ")");
    }
    seen[canonical] = line_no;
    if (value.empty()) throw ConfigError(source, line_no, "empty value for '" + full + "'");
    try {
      it->second(cfg, full == "dataset.kind" || full == "pl.mode" || full == "mixup.mode" ||
                                  full == "agg.mode" || full == "method"
                          ? lower(value)
                          : value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(source, line_no, full + ": " + e.what());
    }
  }

  try {
    validate(cfg.run);
  } catch (const std::exception& e) {
    // Point at the key the message names, when it was set explicitly.
    const std::string msg = e.what();
    int line = 0;
    for (const auto& [key, l] : seen) {
      const auto section = key.substr(0, key.find('.'));
      if (msg.rfind(key + " ", 0) == 0 || (section == "topology" && msg.rfind("topology:", 0) == 0)) {
        line = std::max(line, l);
      }
    }
    throw ConfigError(source, line, msg);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  return parse_config(in, path.string());
}

}  // namespace semidfl
