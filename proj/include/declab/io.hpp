#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "declab/complexity.hpp"
#include "declab/embedding.hpp"
#include "declab/environments.hpp"
#include "declab/instances.hpp"
#include "declab/mdp.hpp"
#include "declab/saddle.hpp"

namespace declab {

using Json = nlohmann::json;

Json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const Json& j);

// {models, policies, observations, obs_dist[m][π][o], value[m][π], partitions{kind, subsets,
// theta}}. Rows are checked at the load tolerance.
Json game_to_json(const GameInstance& inst);
GameInstance game_from_json(const Json& j);

Json transition_to_json(const Transition& P);
Transition transition_from_json(const Json& j);
Json reward_to_json(const Reward& R);
Reward reward_from_json(const Json& j, std::size_t S, std::size_t A, std::size_t H);
Json mdp_to_json(const TabularMDP& mdp);
TabularMDP mdp_from_json(const Json& j);

// {S, A, H, s1, transitions[flat P], rewards[flat R], policies[flat π]}
Json family_to_json(const HybridFamily& family);
HybridFamily family_from_json(const Json& j);

Json adversary_to_json(const AdversarySpec& spec);
AdversarySpec adversary_from_json(const Json& j);

Json saddle_options_to_json(const SaddleOptions& options);
SaddleOptions saddle_options_from_json(const Json& j);

Json solution_to_json(const SaddleSolution& sol);
Json report_to_json(const ComplexityReport& report);

}  // namespace declab
