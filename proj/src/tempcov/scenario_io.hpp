#pragma once

#include <string>

#include "tempcov/synthetic.hpp"

namespace tempcov {

// Directory layout: period_{t}/{train,val,test}.csv (t 1-based, header
// x1..xp), truth/period_{t}.dlr.json raw-space covariances, truth/labels.csv
// (T x p parent indices, 1-based), scenario.json with the generation
// parameters.  Round-trips exactly.
void write_scenario(const ScenarioDataset& scenario, const std::string& dir);
ScenarioDataset read_scenario(const std::string& dir);

}  // namespace tempcov
