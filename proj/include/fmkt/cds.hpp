#pragma once

#include <vector>

#include "fmkt/cps.hpp"
#include "fmkt/market.hpp"

namespace fmkt {

struct CdsSpec {
  ScenarioTree tree;
  std::vector<double> rates;    // r_0..r_T
  std::vector<bool> defaulted;  // per node; absorbing along paths
  double delta = 0.0;           // loss given default, paid at default
  double kappa_ask = 0.0;
  double kappa_bid = 0.0;
  Measure pricing;              // quote-generating measure
};

// Validates absorption and the spread ordering; throws ValidationError.
CdsSpec make_cds_spec(ScenarioTree tree, std::vector<double> rates, std::vector<bool> defaulted,
                      double delta, double kappa_ask, double kappa_bid,
                      std::optional<Measure> pricing = std::nullopt);

// {"delta","kappaAsk","kappaBid","tree":{...,"rates"?},"defaultNodes":[..],
//  "pricingProbs":{nodeId: conditional probability}}
CdsSpec cds_spec_from_json(const nlohmann::json& doc);

// Undiscounted dividend increment of a CDS paying spread kappa:
// delta on the default date, -kappa while alive, 0 afterwards.
double cds_increment(const CdsSpec& spec, NodeId n, double kappa);

MarketModel make_cds_market(const CdsSpec& spec);

// Throws PreconditionError unless kappa_bid <= kappa <= kappa_ask.
ConsistentPricingSystem make_cds_cps(const CdsSpec& spec, double kappa);

}  // namespace fmkt
