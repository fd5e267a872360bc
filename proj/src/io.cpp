#include "declab/io.hpp"

#include <fstream>

#include "declab/errors.hpp"
#include "declab/tolerances.hpp"

namespace declab {

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_json(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

namespace {

template <class T>
T get_field(const Json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw ValidationError(std::string(what) + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string(what) + ": bad field '" + key + "': " + e.what());
  }
}

std::string partition_label(const GameInstance& inst) {
  if (!inst.theta.empty()) return "product";
  return "custom";
}

}  // namespace

Json game_to_json(const GameInstance& inst) {
  const FiniteGame& g = inst.game;
  Json j;
  j["models"] = g.model_ids();
  j["policies"] = g.policy_ids();
  j["observations"] = g.observation_ids();
  Json obs = Json::array(), value = Json::array();
  for (std::size_t m = 0; m < g.num_models(); ++m) {
    Json per_model = Json::array(), values = Json::array();
    for (std::size_t pi = 0; pi < g.num_policies(); ++pi) {
      per_model.push_back(g.obs_vec(m, pi));
      values.push_back(g.value(m, pi));
    }
    obs.push_back(per_model);
    value.push_back(values);
  }
  j["obs_dist"] = obs;
  j["value"] = value;
  if (inst.scheme.num_subsets() > 0) {
    Json subsets = Json::array();
    for (const auto& phi : inst.scheme.subsets()) {
      Json s = Json::array();
      for (const Element& e : phi) s.push_back({e.model, e.policy});
      subsets.push_back(s);
    }
    Json part{{"kind", partition_label(inst)}, {"subsets", subsets}};
    if (!inst.theta.empty()) part["theta"] = inst.theta;
    j["partitions"] = part;
  }
  if (!inst.kind.empty()) j["kind"] = inst.kind;
  return j;
}

GameInstance game_from_json(const Json& j) {
  const char* what = "game";
  auto models = get_field<std::vector<std::string>>(j, "models", what);
  auto policies = get_field<std::vector<std::string>>(j, "policies", what);
  auto observations = get_field<std::vector<std::string>>(j, "observations", what);
  auto obs = get_field<std::vector<std::vector<Vec>>>(j, "obs_dist", what);
  auto value = get_field<std::vector<Vec>>(j, "value", what);
  if (obs.size() != models.size() || value.size() != models.size()) {
    throw ValidationError("game: tables do not match the model list");
  }
  Vec flat_obs, flat_value;
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (obs[m].size() != policies.size() || value[m].size() != policies.size()) {
      throw ValidationError("game: tables do not match the policy list", {m});
    }
    for (std::size_t pi = 0; pi < policies.size(); ++pi) {
      if (obs[m][pi].size() != observations.size()) {
        throw ValidationError("game: obs_dist row has wrong length", {m, pi});
      }
      flat_obs.insert(flat_obs.end(), obs[m][pi].begin(), obs[m][pi].end());
    }
    flat_value.insert(flat_value.end(), value[m].begin(), value[m].end());
  }
  GameInstance inst;
  inst.kind = j.value("kind", std::string());
  inst.game = FiniteGame(std::move(models), std::move(policies), std::move(observations),
                         std::move(flat_obs), std::move(flat_value),
                         default_tolerances().prob_row_sum_load);
  if (!j.contains("partitions")) return inst;
  const Json& part = j.at("partitions");
  const std::string kind = get_field<std::string>(part, "kind", "partitions");
  if (kind == "product") {
    inst.theta = get_field<std::vector<std::vector<std::size_t>>>(part, "theta", "partitions");
    inst.scheme = make_product_partitions(inst.game, inst.theta);
  } else if (kind == "custom") {
    std::vector<std::vector<Element>> subsets;
    for (const auto& s : get_field<std::vector<std::vector<std::array<std::size_t, 2>>>>(
             part, "subsets", "partitions")) {
      std::vector<Element> phi;
      for (const auto& e : s) phi.push_back({e[0], e[1]});
      subsets.push_back(std::move(phi));
    }
    inst.scheme = PartitionScheme(inst.game, std::move(subsets));
  } else {
    inst.scheme = make_standard_partitions(inst.game, parse_partition_kind(kind));
  }
  return inst;
}

Json transition_to_json(const Transition& P) {
  return {{"S", P.S}, {"A", P.A}, {"H", P.H}, {"s1", P.s1}, {"P", P.P}};
}

Transition transition_from_json(const Json& j) {
  const char* what = "transition";
  Transition P{get_field<std::size_t>(j, "S", what), get_field<std::size_t>(j, "A", what),
               get_field<std::size_t>(j, "H", what), j.value("s1", std::size_t{0}),
               get_field<Vec>(j, "P", what)};
  P.validate(default_tolerances().prob_row_sum_load);
  return P;
}

Json reward_to_json(const Reward& R) { return R.R; }

Reward reward_from_json(const Json& j, std::size_t S, std::size_t A, std::size_t H) {
  Reward R{S, A, H, j.get<Vec>()};
  R.validate();
  return R;
}

Json mdp_to_json(const TabularMDP& mdp) {
  Json j = transition_to_json(mdp.transition);
  j["R"] = reward_to_json(mdp.reward);
  return j;
}

TabularMDP mdp_from_json(const Json& j) {
  TabularMDP mdp;
  mdp.transition = transition_from_json(j);
  if (!j.contains("R")) throw ValidationError("mdp: missing field 'R'");
  mdp.reward = reward_from_json(j.at("R"), mdp.S(), mdp.A(), mdp.H());
  mdp.validate(default_tolerances().prob_row_sum_load);
  return mdp;
}

Json family_to_json(const HybridFamily& family) {
  if (family.transitions.empty()) throw ValidationError("family: no transitions");
  const Transition& t0 = family.transitions.front();
  Json j{{"S", t0.S}, {"A", t0.A}, {"H", t0.H}, {"s1", t0.s1}};
  Json ts = Json::array(), rs = Json::array(), ps = Json::array();
  for (const auto& t : family.transitions) ts.push_back(t.P);
  for (const auto& r : family.rewards) rs.push_back(r.R);
  for (const auto& p : family.policies) ps.push_back(p.prob);
  j["transitions"] = ts;
  j["rewards"] = rs;
  j["policies"] = ps;
  return j;
}

HybridFamily family_from_json(const Json& j) {
  const char* what = "family";
  const auto S = get_field<std::size_t>(j, "S", what);
  const auto A = get_field<std::size_t>(j, "A", what);
  const auto H = get_field<std::size_t>(j, "H", what);
  const auto s1 = j.value("s1", std::size_t{0});
  HybridFamily family;
  for (auto& p : get_field<std::vector<Vec>>(j, "transitions", what)) {
    family.transitions.push_back(Transition{S, A, H, s1, std::move(p)});
  }
  for (auto& r : get_field<std::vector<Vec>>(j, "rewards", what)) {
    family.rewards.push_back(Reward{S, A, H, std::move(r)});
  }
  for (auto& p : get_field<std::vector<Vec>>(j, "policies", what)) {
    family.policies.push_back(StagePolicy{S, A, H, std::move(p)});
  }
  family.validate();
  return family;
}

Json adversary_to_json(const AdversarySpec& spec) {
  return {{"kind", to_string(spec.kind)},
          {"grid", spec.grid},
          {"schedule", spec.schedule},
          {"weights", spec.weights},
          {"seed", spec.seed}};
}

AdversarySpec adversary_from_json(const Json& j) {
  AdversarySpec spec;
  spec.kind = parse_adversary_kind(j.value("kind", std::string("iid")));
  spec.grid = j.value("grid", std::vector<std::size_t>{});
  spec.schedule = j.value("schedule", std::vector<std::size_t>{});
  spec.weights = j.value("weights", Vec{});
  spec.seed = j.value("seed", std::uint64_t{0});
  return spec;
}

Json saddle_options_to_json(const SaddleOptions& options) {
  std::string method = "cutting_plane";
  if (options.method == SaddleMethod::extragradient) method = "extragradient";
  if (options.method == SaddleMethod::mwu) method = "mwu";
  if (options.method == SaddleMethod::best_response) method = "best_response";
  return {{"tol", options.tol},
          {"max_iters", options.max_iters},
          {"method", method},
          {"step_scale", options.step_scale},
          {"refine_iters", options.refine_iters}};
}

SaddleOptions saddle_options_from_json(const Json& j) {
  SaddleOptions options;
  options.tol = j.value("tol", options.tol);
  options.max_iters = j.value("max_iters", options.max_iters);
  if (j.contains("method")) options.method = parse_saddle_method(j.at("method").get<std::string>());
  options.step_scale = j.value("step_scale", options.step_scale);
  options.refine_iters = j.value("refine_iters", options.refine_iters);
  return options;
}

Json solution_to_json(const SaddleSolution& sol) {
  return {{"p", sol.p},         {"nu", sol.nu},   {"value", sol.value},
          {"lower", sol.lower}, {"upper", sol.upper}, {"gap", sol.gap},
          {"iters", sol.iters}, {"converged", sol.converged}};
}

Json report_to_json(const ComplexityReport& report) {
  Json checks = Json::array();
  for (const LemmaCheck& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"lhs", c.lhs},
                      {"rhs", c.rhs},
                      {"tolerance", c.tolerance},
                      {"passed", c.passed}});
  }
  return {{"eta", report.eta},
          {"dec_kl", report.dec_kl},
          {"dec_kl_phi", report.dec_kl_phi},
          {"maxmin_air", report.maxmin_air},
          {"c_phi", report.c_phi},
          {"dec_convexified", report.dec_convexified},
          {"gaps",
           {{"dec_kl", report.gap_dec_kl},
            {"dec_kl_phi", report.gap_dec_kl_phi},
            {"maxmin_air", report.gap_maxmin_air},
            {"dec_convexified", report.gap_convexified}}},
          {"closure_depth", report.closure_depth},
          {"checks", checks},
          {"passed", report.passed()}};
}

}  // namespace declab
