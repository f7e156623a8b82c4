#ifndef SFRL_SERIALIZE_HPP
#define SFRL_SERIALIZE_HPP

#include <string>

#include "sfrl/clustering.hpp"
#include "sfrl/envs.hpp"
#include "sfrl/mdp.hpp"
#include "sfrl/representation.hpp"

// nlohmann/json ships as the single header json.hpp in vendor/.
#include "json.hpp"

namespace sfrl {

using Json = nlohmann::json;

Json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const Json& j);

Json representation_to_json(const StateRepresentation& phi);
StateRepresentation representation_from_json(const Json& j);

Json lam_to_json(const Lam& lam);
Lam lam_from_json(const Json& j);

Json lsfm_to_json(const Lsfm& lsfm);
Lsfm lsfm_from_json(const Json& j);

Json error_report_to_json(const ErrorReport& report);
std::string error_report_csv_header();
std::string error_report_csv_row(const ErrorReport& report);

Json abstraction_to_json(const DiscreteAbstraction& abs);
DiscreteAbstraction abstraction_from_json(const Json& j);

// Checkpoint bundling a representation with its model.
struct Checkpoint {
    StateRepresentation phi;
    Lam lam;
    Lsfm lsfm;
    bool has_lam = false;
    bool has_lsfm = false;
    double gamma = 0.9;
};
Json checkpoint_to_json(const Checkpoint& cp);
Checkpoint checkpoint_from_json(const Json& j);

std::string dataset_to_csv(const TransitionDataset& dataset);
TransitionDataset dataset_from_csv(const std::string& text);

// Grid task from a JSON map file: {"map": [lines], "slip": x, "gamma": g,
// "goal_reward": 1.0, "puddle_reward": -1.0}.
EnvTask grid_task_from_json(const Json& j);

// Writes to a temporary file in the same directory, then renames.
void atomic_write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Formats a double with shortest round-trippable decimal representation.
std::string format_double(double value);

}  // namespace sfrl

#endif
