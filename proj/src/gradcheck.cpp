#include "fimnet/gradcheck.hpp"

#include <json.hpp>

namespace fimnet {

std::string GradReport::to_json() const {
  nlohmann::json j;
  j["epsilon"] = epsilon;
  j["tolerance"] = tolerance;
  j["pass"] = pass;
  j["groups"] = nlohmann::json::array();
  for (const auto& g : groups) {
    j["groups"].push_back({{"name", g.name},
                           {"max_rel_error", g.max_rel_error},
                           {"coordinates_checked", g.coordinates_checked},
                           {"coordinates_skipped", g.coordinates_skipped},
                           {"pass", g.pass}});
  }
  return j.dump(2);
}

}  // namespace fimnet
