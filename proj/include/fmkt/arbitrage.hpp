#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fmkt/cone.hpp"
#include "fmkt/portfolio.hpp"

namespace fmkt {

struct ArbitrageCertificate {
  TradingStrategy strategy;
  std::vector<NodeId> leaves;       // tree leaves() order
  std::vector<double> leaf_values;  // discounted terminal values
  double margin = 0.0;              // largest leaf value
};

struct RiskNeutralMeasure {
  std::vector<NodeId> leaves;
  std::vector<double> q;  // absolute leaf probabilities
  double epsilon = 0.0;   // smallest leaf probability
  Measure measure;
};

struct ConeArbitrage {
  std::vector<double> x;
  std::vector<double> payoff;
  double objective = 0.0;
};

// max sum(Gx) s.t. Gx >= 0, Ex = 0, x >= 0, sum(Gx) <= 1. Returns the
// maximizer when the optimum exceeds tol. Extra payoff columns take part.
std::optional<ConeArbitrage> find_cone_arbitrage(const ConeLP& cone, double tol = kDefaultTolerance);

std::optional<ArbitrageCertificate> check_no_arbitrage(const MarketModel& m, int t = 0,
                                                       double tol = kDefaultTolerance);

// max eps s.t. G'q + E'mu <= 0, q >= eps, sum q = 1.
std::optional<RiskNeutralMeasure> find_risk_neutral_measure(const MarketModel& m, int t = 0);

struct RiskNeutralCheck {
  bool ok = true;
  std::string violation;  // empty when ok
  double value = 0.0;     // offending expectation or residual
  explicit operator bool() const noexcept { return ok; }
};

// q: absolute leaf probabilities in leaves() order.
RiskNeutralCheck verify_risk_neutral(const MarketModel& m, const std::vector<double>& q,
                                     double tol = kDefaultTolerance);

struct EfficientFrictionCheck {
  bool ef = true;
  std::optional<NodeVector> violation;  // nonzero psi with F(psi) = 0
  std::string where;
  explicit operator bool() const noexcept { return ef; }
};

// Throws PreconditionError if the market admits arbitrage.
EfficientFrictionCheck check_efficient_friction(const MarketModel& m, double tol = kDefaultTolerance);
// Same search on an arbitrary cone; extra columns count as positions.
EfficientFrictionCheck efficient_friction_on_cone(const ConeLP& cone, double tol = kDefaultTolerance);

nlohmann::json certificate_to_json(const MarketModel& m, const ArbitrageCertificate& c);
nlohmann::json measure_to_json(const MarketModel& m, const RiskNeutralMeasure& q);
// Reads {"q": {leafId: p}} into leaves() order.
std::vector<double> leaf_probabilities_from_json(const ScenarioTree& tree, const nlohmann::json& doc);

}  // namespace fmkt
