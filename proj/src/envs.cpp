#include "nvmdp/envs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

namespace nvmdp {

using json = nlohmann::json;

RewardScheme reward_scheme_from_string(const std::string& name) {
  if (name == "deterministic") return RewardScheme::deterministic;
  if (name == "r-lvn") return RewardScheme::lvn;
  if (name == "r-svn") return RewardScheme::svn;
  throw ValidationError("unknown reward scheme '" + name +
                        "' (expected deterministic, r-lvn or r-svn)");
}

DiscountScheme discount_scheme_from_string(const std::string& name) {
  if (name == "dr-0") return DiscountScheme::dr0;
  if (name == "dr-1") return DiscountScheme::dr1;
  if (name == "dr-2") return DiscountScheme::dr2;
  if (name == "dr-3") return DiscountScheme::dr3;
  throw ValidationError("unknown discount scheme '" + name +
                        "' (expected dr-0, dr-1, dr-2 or dr-3)");
}

std::string to_string(RewardScheme s) {
  switch (s) {
    case RewardScheme::deterministic: return "deterministic";
    case RewardScheme::lvn: return "r-lvn";
    case RewardScheme::svn: return "r-svn";
  }
  return "?";
}

std::string to_string(DiscountScheme s) {
  switch (s) {
    case DiscountScheme::dr0: return "dr-0";
    case DiscountScheme::dr1: return "dr-1";
    case DiscountScheme::dr2: return "dr-2";
    case DiscountScheme::dr3: return "dr-3";
  }
  return "?";
}

std::vector<int> GridworldSpec::discount_boost_states() const {
  return {cell_index(3, 1), cell_index(4, 2)};
}

int GridworldSpec::wind_shift(int x, int t) const {
  if (!windy) return 0;
  const int phase = t % 6;
  if (x == 5 && phase != 0) return 2;
  if (x == 6 && (phase == 0 || phase == 5)) return 3;
  if (x == 7 && phase != 5) return 4;
  return 0;
}

int GridworldSpec::next_state(int s, int a, int t) const {
  auto [x, y] = cell_xy(s);
  x = std::max(1, x - wind_shift(x, t));
  switch (a) {
    case 0: y = std::min(height, y + 1); break;  // up
    case 1: y = std::max(1, y - 1); break;       // down
    case 2: x = std::max(1, x - 1); break;       // left
    case 3: x = std::min(width, x + 1); break;   // right
    default: throw ValidationError("gridworld action index out of range");
  }
  return cell_index(x, y);
}

double GridworldSpec::noise_sigma() const {
  switch (reward_scheme) {
    case RewardScheme::deterministic: return 0.0;
    // Chosen so the central 90% of observed rewards spans [-15, -5] for the
    // large-variance scheme and [-11, -9] for the small-variance one.
    case RewardScheme::lvn: return 3.0398;
    case RewardScheme::svn: return 0.6080;
  }
  return 0.0;
}

double GridworldSpec::gamma(int t1, int s_next) const {
  const bool boosted =
      s_next == cell_index(3, 1) || s_next == cell_index(4, 2);
  switch (discount_scheme) {
    case DiscountScheme::dr0:
      return 0.999;
    case DiscountScheme::dr1:
      return boosted ? 1.02 : 0.999;
    case DiscountScheme::dr2:
      // Same boost as dr-1 but only on transitions taken before epoch 50.
      return (boosted && t1 - 1 < 50) ? 1.02 : 0.999;
    case DiscountScheme::dr3:
      return (boosted && t1 - 1 < 50) ? 1.05 : 0.999;
  }
  return 0.999;
}

TabularNvmdp build_gridworld(const GridworldSpec& spec) {
  NvmdpDef def;
  def.num_states = spec.num_states();
  def.num_actions = spec.num_actions();
  def.horizon = spec.horizon;
  def.reward_bound = 10.0;
  def.transition = [spec](int t, int s, int a) {
    std::vector<double> row(static_cast<size_t>(spec.num_states()), 0.0);
    row[static_cast<size_t>(spec.next_state(s, a, t))] = 1.0;
    return row;
  };
  def.mean_reward = [](int, int, int, int) { return -10.0; };
  def.discount = [spec](int t1, int, int, int s2) { return spec.gamma(t1, s2); };
  const double sigma = spec.noise_sigma();
  if (sigma > 0.0) {
    def.reward_sampler = [sigma](int, int, int, int, Rng& rng) {
      return rng.gaussian(-10.0, sigma);
    };
  }
  def.start_states.assign(static_cast<size_t>(spec.num_states()), 0.0);
  def.start_states[static_cast<size_t>(spec.start_state())] = 1.0;
  def.terminal_states = {spec.target_state()};
  return TabularNvmdp(def);
}

TabularNvmdp build_tricky_gridworld(RewardScheme reward, DiscountScheme discount) {
  GridworldSpec spec;
  spec.reward_scheme = reward;
  spec.discount_scheme = discount;
  return build_gridworld(spec);
}

TabularNvmdp build_vanilla_gridworld() {
  GridworldSpec spec;
  spec.windy = false;
  spec.reward_scheme = RewardScheme::deterministic;
  spec.discount_scheme = DiscountScheme::dr0;
  return build_gridworld(spec);
}

namespace {

// Dense per-quantity table loaded from JSON, with presence tracking so a
// missing (t, s, a) entry surfaces as a clear error instead of silent zeros.
struct LoadedTable {
  int horizon = 0, S = 0, A = 0;
  int period = 0;  // 0 means non-periodic
  std::vector<double> data;
  std::vector<char> filled;

  int slot(int t) const { return period > 0 ? t % period : t; }
  size_t idx(int t, int s, int a) const {
    return ((static_cast<size_t>(slot(t)) * S + s) * A + a) * S;
  }
  bool has(int t, int s, int a) const {
    return filled[(static_cast<size_t>(slot(t)) * S + s) * A + a] != 0;
  }
};

double to_finite_double(const json& v, const char* what) {
  if (!v.is_number()) throw ValidationError(std::string(what) + " must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(std::string(what) + " must be finite");
  return d;
}

LoadedTable parse_table(const json& node, const char* name, int horizon, int S, int A,
                        bool is_probability) {
  LoadedTable tab;
  tab.horizon = horizon;
  tab.S = S;
  tab.A = A;

  const json* entries = &node;
  if (node.is_object()) {
    if (!node.contains("periodic")) {
      throw ValidationError(std::string(name) +
                            " must be an entry array or a {\"periodic\": ...} object");
    }
    const json& per = node.at("periodic");
    tab.period = per.at("period").get<int>();
    if (tab.period <= 0) {
      throw ValidationError(std::string(name) + ": period must be positive");
    }
    entries = &per.at("tables");
  }
  if (!entries->is_array()) {
    throw ValidationError(std::string(name) + " entries must form an array");
  }

  const int slots = tab.period > 0 ? std::min(tab.period, horizon) : horizon;
  tab.data.assign(static_cast<size_t>(slots) * S * A * S, 0.0);
  tab.filled.assign(static_cast<size_t>(slots) * S * A, 0);

  for (const json& e : *entries) {
    int t = e.at("t").get<int>();
    int s = e.at("s").get<int>();
    int a = e.at("a").get<int>();
    const int t_max = tab.period > 0 ? tab.period : horizon;
    if (t < 0 || t >= t_max || s < 0 || s >= S || a < 0 || a >= A) {
      std::ostringstream os;
      os << name << " entry (t=" << t << ", s=" << s << ", a=" << a
         << ") is out of range";
      throw ValidationError(os.str());
    }
    if (t >= slots) continue;  // periodic table longer than the horizon
    const json& vals = e.contains("values") ? e.at("values") : e.at("probs");
    if (!vals.is_array() || static_cast<int>(vals.size()) != S) {
      std::ostringstream os;
      os << name << " entry (t=" << t << ", s=" << s << ", a=" << a
         << ") needs exactly " << S << " values";
      throw ValidationError(os.str());
    }
    double* row = &tab.data[tab.idx(t, s, a)];
    for (int s2 = 0; s2 < S; ++s2) row[s2] = to_finite_double(vals[s2], name);
    tab.filled[(static_cast<size_t>(t) * S + s) * A + a] = 1;

    if (is_probability) {
      double sum = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        if (row[s2] < 0.0) {
          std::ostringstream os;
          os << name << " row (t=" << t << ", s=" << s << ", a=" << a
             << ") has a negative entry";
          throw ValidationError(os.str());
        }
        sum += row[s2];
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        std::ostringstream os;
        os << name << " row (t=" << t << ", s=" << s << ", a=" << a
           << ") sums to " << sum << ", outside the 1e-9 tolerance";
        throw ValidationError(os.str());
      }
      // Renormalize here so the model constructor's tighter check passes.
      for (int s2 = 0; s2 < S; ++s2) row[s2] /= sum;
    }
  }
  return tab;
}

}  // namespace

TabularNvmdp load_nvmdp_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + path + ": " + e.what());
  }

  try {
    NvmdpDef def;
    def.num_states = doc.at("num_states").get<int>();
    def.num_actions = doc.at("num_actions").get<int>();
    def.horizon = doc.at("horizon").get<int>();
    if (def.num_states <= 0 || def.num_actions <= 0 || def.horizon <= 0) {
      throw ValidationError("num_states, num_actions and horizon must be positive");
    }
    const int S = def.num_states, A = def.num_actions, H = def.horizon;

    const json& start = doc.at("start");
    if (start.is_number_integer()) {
      int s0 = start.get<int>();
      if (s0 < 0 || s0 >= S) throw ValidationError("start state index out of range");
      def.start_states.assign(static_cast<size_t>(S), 0.0);
      def.start_states[static_cast<size_t>(s0)] = 1.0;
    } else if (start.is_array() && static_cast<int>(start.size()) == S) {
      double sum = 0.0;
      for (const json& v : start) {
        double d = to_finite_double(v, "start");
        if (d < 0.0) throw ValidationError("start distribution has a negative entry");
        def.start_states.push_back(d);
        sum += d;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("start distribution does not sum to 1 within 1e-9");
      }
      for (double& d : def.start_states) d /= sum;
    } else {
      throw ValidationError("start must be a state index or a length-num_states array");
    }

    if (doc.contains("terminals")) {
      for (const json& v : doc.at("terminals")) {
        def.terminal_states.push_back(v.get<int>());
      }
    }

    auto trans = std::make_shared<LoadedTable>(
        parse_table(doc.at("transitions"), "transitions", H, S, A, true));
    auto rew = std::make_shared<LoadedTable>(
        parse_table(doc.at("rewards"), "rewards", H, S, A, false));
    auto disc = std::make_shared<LoadedTable>(
        parse_table(doc.at("discounts"), "discounts", H, S, A, false));

    double rb = 0.0;
    for (double r : rew->data) rb = std::max(rb, std::abs(r));
    def.reward_bound = rb;

    auto require = [](const LoadedTable& tab, const char* name, int t, int s, int a) {
      if (!tab.has(t, s, a)) {
        std::ostringstream os;
        os << "missing " << name << " entry for (t=" << t << ", s=" << s
           << ", a=" << a << ")";
        throw ValidationError(os.str());
      }
    };
    def.transition = [trans, require, S](int t, int s, int a) {
      require(*trans, "transitions", t, s, a);
      const double* row = &trans->data[trans->idx(t, s, a)];
      return std::vector<double>(row, row + S);
    };
    def.mean_reward = [rew, require](int t, int s, int a, int s2) {
      require(*rew, "rewards", t, s, a);
      return rew->data[rew->idx(t, s, a) + s2];
    };
    // The discounts table is indexed by the epoch the transition is taken
    // at, so gamma_{t+1} lives in slot t.
    def.discount = [disc, require](int t1, int s, int a, int s2) {
      require(*disc, "discounts", t1 - 1, s, a);
      return disc->data[disc->idx(t1 - 1, s, a) + s2];
    };
    return TabularNvmdp(def);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model document: ") + e.what());
  }
}

std::string nvmdp_to_json(const TabularNvmdp& model) {
  const int S = model.num_states(), A = model.num_actions(), H = model.horizon();
  json doc;
  doc["num_states"] = S;
  doc["num_actions"] = A;
  doc["horizon"] = H;
  doc["start"] = model.start_distribution();
  doc["terminals"] = model.terminal_states();

  json trans = json::array(), rew = json::array(), disc = json::array();
  for (int t = 0; t < H; ++t) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        json base{{"t", t}, {"s", s}, {"a", a}};
        json tr = base, re = base, di = base;
        std::vector<double> p(S), r(S), g(S);
        for (int s2 = 0; s2 < S; ++s2) {
          p[static_cast<size_t>(s2)] = model.transition(t, s, a, s2);
          r[static_cast<size_t>(s2)] = model.mean_reward(t, s, a, s2);
          g[static_cast<size_t>(s2)] = model.discount(t + 1, s, a, s2);
        }
        tr["probs"] = p;
        re["values"] = r;
        di["values"] = g;
        trans.push_back(std::move(tr));
        rew.push_back(std::move(re));
        disc.push_back(std::move(di));
      }
    }
  }
  doc["transitions"] = std::move(trans);
  doc["rewards"] = std::move(rew);
  doc["discounts"] = std::move(disc);
  return doc.dump();
}

void dump_nvmdp_json(const TabularNvmdp& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << nvmdp_to_json(model) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

namespace {

void dirichlet_row(Rng& rng, double* row, int n) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform01();
    row[i] = -std::log1p(-u);  // unit exponential
    sum += row[i];
  }
  if (sum <= 0.0) {
    for (int i = 0; i < n; ++i) row[i] = 1.0 / n;
    return;
  }
  for (int i = 0; i < n; ++i) row[i] /= sum;
}

TabularNvmdp random_instance(Rng& rng, int S, int A, int H, double gamma_max,
                             bool stationary) {
  if (S <= 0 || A <= 0 || H <= 0) {
    throw ValidationError("random instance dimensions must be positive");
  }
  if (!(gamma_max >= 0.0)) throw ValidationError("gamma_max must be nonnegative");

  const int slices = stationary ? 1 : H;
  auto trans = std::make_shared<std::vector<double>>(
      static_cast<size_t>(slices) * S * A * S);
  auto rew = std::make_shared<std::vector<double>>(trans->size());
  auto disc = std::make_shared<std::vector<double>>(trans->size());

  for (int t = 0; t < slices; ++t) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const size_t base = ((static_cast<size_t>(t) * S + s) * A + a) * S;
        dirichlet_row(rng, trans->data() + base, S);
        for (int s2 = 0; s2 < S; ++s2) {
          (*rew)[base + s2] = 2.0 * rng.uniform01() - 1.0;
          (*disc)[base + s2] = gamma_max * rng.uniform01();
        }
      }
    }
  }
  std::vector<double> start(static_cast<size_t>(S));
  dirichlet_row(rng, start.data(), S);

  auto cell = [S, A, slices](int t, int s, int a) {
    const int slot = slices == 1 ? 0 : t;
    return ((static_cast<size_t>(slot) * S + s) * A + a) * S;
  };

  NvmdpDef def;
  def.num_states = S;
  def.num_actions = A;
  def.horizon = H;
  def.reward_bound = 1.0;
  def.transition = [trans, cell, S](int t, int s, int a) {
    const double* row = trans->data() + cell(t, s, a);
    return std::vector<double>(row, row + S);
  };
  def.mean_reward = [rew, cell](int t, int s, int a, int s2) {
    return (*rew)[cell(t, s, a) + s2];
  };
  def.discount = [disc, cell](int t1, int s, int a, int s2) {
    return (*disc)[cell(t1 - 1, s, a) + s2];
  };
  def.start_states = std::move(start);
  return TabularNvmdp(def);
}

}  // namespace

TabularNvmdp random_nvmdp(Rng& rng, int num_states, int num_actions, int horizon,
                          double gamma_max) {
  return random_instance(rng, num_states, num_actions, horizon, gamma_max, false);
}

TabularNvmdp random_stationary_nvmdp(Rng& rng, int num_states, int num_actions,
                                     int horizon, double gamma_max) {
  return random_instance(rng, num_states, num_actions, horizon, gamma_max, true);
}

}  // namespace nvmdp
