// fmkt: command-line front end for the scenario-tree market library.
//
// Exit codes: 0 success, 1 input/validation/precondition error, 2 solver failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fmkt/arbitrage.hpp"
#include "fmkt/cds.hpp"
#include "fmkt/cone.hpp"
#include "fmkt/cps.hpp"
#include "fmkt/errors.hpp"
#include "fmkt/hedging.hpp"
#include "json.hpp"

using nlohmann::json;
using namespace fmkt;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

// Round every floating value to 12 significant digits.
void round_numbers(json& j) {
  if (j.is_number_float()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", j.get<double>());
    double v = std::strtod(buf, nullptr);
    if (v == 0.0) v = 0.0;
    j = v;
  } else if (j.is_structured()) {
    for (auto& e : j) round_numbers(e);
  }
}

void emit(json j) {
  round_numbers(j);
  std::cout << j.dump(2) << "\n";
}

double tolerance() {
  if (const char* s = std::getenv("FMKT_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0' || !(v > 0.0) || !std::isfinite(v)) {
      throw InputError(std::string("FMKT_TOL must be a positive number, got ") + s);
    }
    return v;
  }
  return kDefaultTolerance;
}

MarketModel load_market(const std::string& path) { return MarketModel::from_json(read_json(path)); }

void check_time(const MarketModel& m, int t) {
  if (t < 0 || t >= m.tree().horizon()) {
    throw InputError("--t must lie in 0.." + std::to_string(m.tree().horizon() - 1));
  }
}

json leaf_map(const ScenarioTree& tree, const std::vector<NodeId>& leaves, const std::vector<double>& v) {
  json o = json::object();
  for (std::size_t i = 0; i < leaves.size(); ++i) o[tree.name(leaves[i])] = v[i];
  return o;
}

struct Args {
  std::string market, second, out, qfile, side, dump;
  int t = 0;
  double w = 0.0;
  bool dual = false;
  bool verbose = false;
};

int run(CLI::App& app, const Args& a) {
  const double tol = tolerance();
  auto note = [&](const std::string& msg) {
    if (a.verbose) std::cerr << msg << "\n";
  };

  if (app.got_subcommand("validate")) {
    const MarketModel m = load_market(a.market);
    note("valid market: horizon " + std::to_string(m.tree().horizon()) + ", " +
         std::to_string(m.tree().size()) + " nodes, " + std::to_string(m.num_securities()) +
         " securities");
    emit({{"ok", true},
          {"horizon", m.tree().horizon()},
          {"nodes", m.tree().size()},
          {"leaves", m.tree().leaves().size()},
          {"securities", m.num_securities()}});
    return 0;
  }

  if (app.got_subcommand("verify")) {
    const MarketModel m = load_market(a.market);
    const TradingStrategy phi = strategy_from_json(m, read_json(a.second));
    const auto sf = is_self_financing(m, phi, tol);
    const NodeVector v = value_process(m, phi);
    json values = json::object();
    for (NodeId n = 0; n < m.tree().size(); ++n) values[m.tree().name(n)] = v(n, 0);
    json out{{"selfFinancing", sf.ok}, {"values", values}};
    if (!sf.ok) {
      out["node"] = m.tree().name(*sf.node);
      out["residual"] = sf.residual;
    }
    note(sf.ok ? "strategy is self-financing" : "self-financing fails at node " + m.tree().name(*sf.node));
    emit(out);
    return 0;
  }

  if (app.got_subcommand("arb")) {
    const MarketModel m = load_market(a.market);
    check_time(m, a.t);
    if (!a.dump.empty()) {
      std::ofstream os(a.dump);
      if (!os) throw InputError("cannot write " + a.dump);
      os << build_cone(m, a.t).to_text();
    }
    const auto cert = check_no_arbitrage(m, a.t, tol);
    if (!cert) {
      note("no arbitrage from t=" + std::to_string(a.t));
      emit({{"arbitrage", false}});
    } else {
      note("arbitrage found, margin " + std::to_string(cert->margin));
      emit({{"arbitrage", true}, {"certificate", certificate_to_json(m, *cert)}});
    }
    return 0;
  }

  if (app.got_subcommand("rn")) {
    const MarketModel m = load_market(a.market);
    check_time(m, a.t);
    const auto q = find_risk_neutral_measure(m, a.t);
    if (!q) {
      note("no risk-neutral measure");
      emit({{"exists", false}});
    } else {
      json out = measure_to_json(m, *q);
      out["exists"] = true;
      note("risk-neutral measure with smallest leaf probability " + std::to_string(q->epsilon));
      emit(out);
    }
    return 0;
  }

  if (app.got_subcommand("ef")) {
    const MarketModel m = load_market(a.market);
    const auto ef = check_efficient_friction(m, tol);
    json out{{"ef", ef.ef}};
    if (!ef.ef) {
      TradingStrategy phi = complete_cash_leg(m, *ef.violation, 0.0);
      out["violation"] = strategy_to_json(m, phi)["strategy"];
      out["where"] = ef.where;
    }
    note(ef.ef ? "efficient friction holds" : "efficient friction fails at " + ef.where);
    emit(out);
    return 0;
  }

  if (app.got_subcommand("cps-verify")) {
    const MarketModel m = load_market(a.market);
    const ConsistentPricingSystem c = cps_from_json(m, read_json(a.second));
    const CpsReport rep = verify_cps(m, c, tol);
    json checks = json::array();
    for (const auto& it : rep.items) {
      json e{{"name", it.name}, {"ok", it.ok}};
      if (!it.ok) {
        e["node"] = it.node;
        e["residual"] = it.residual;
      }
      checks.push_back(e);
      note(it.name + ": " + (it.ok ? "pass" : "fail at node " + it.node));
    }
    emit({{"ok", rep.ok()}, {"checks", checks}});
    return 0;
  }

  if (app.got_subcommand("cps-build")) {
    const MarketModel m = load_market(a.market);
    std::vector<double> q;
    if (!a.qfile.empty()) {
      q = leaf_probabilities_from_json(m.tree(), read_json(a.qfile));
    } else {
      const auto rn = find_risk_neutral_measure(m, 0);
      if (!rn) throw PreconditionError("market has no risk-neutral measure");
      q = rn->q;
    }
    const CpsConstruction c = build_cps_from_rn(m, q);
    json out = cps_to_json(m, c.cps);
    json lam = json::object();
    for (NodeId n = 0; n < m.tree().size(); ++n) {
      if (m.tree().is_leaf(n)) continue;
      lam[m.tree().name(n)] = std::vector<double>(c.lambda.at(n).begin(), c.lambda.at(n).end());
    }
    out["lambda"] = lam;
    note("consistent pricing system built");
    emit(out);
    return 0;
  }

  if (app.got_subcommand("price")) {
    const MarketModel m = load_market(a.market);
    check_time(m, a.t);
    const DerivativeContract d = derivative_from_json(m.tree(), read_json(a.second));
    const HedgeOptions opt{false, tol};
    const bool ask = a.side == "ask";
    const PriceBounds b = ask ? superhedge_ask(m, d, a.t, opt) : subhedge_bid(m, d, a.t, opt);
    json prices = json::object(), hedges = json::object();
    for (const NodePrice& np : b.nodes) {
      prices[m.tree().name(np.node)] = np.price;
      json legs = json::object();
      for (NodeId n = 0; n < m.tree().size(); ++n) {
        if (m.tree().is_leaf(n) || !m.tree().is_descendant(n, np.node)) continue;
        legs[m.tree().name(n)] = std::vector<double>(np.hedge.at(n).begin(), np.hedge.at(n).end());
      }
      hedges[m.tree().name(np.node)] = legs;
      note(std::string(ask ? "ask" : "bid") + " at " + m.tree().name(np.node) + ": " +
           std::to_string(np.price));
    }
    json out{{"t", a.t}, {"side", a.side}, {"prices", prices}, {"hedges", hedges}};
    if (a.dual) {
      const PriceBounds db = dual_price_bound(m, d, a.t, ask ? PriceSide::Ask : PriceSide::Bid,
                                              {true, tol});
      json dual = json::object();
      for (const NodePrice& np : db.nodes) {
        dual[m.tree().name(np.node)] = {{"bound", np.price},
                                        {"measure", leaf_map(m.tree(), np.leaves, np.measure)}};
      }
      out["dual"] = dual;
    }
    emit(out);
    return 0;
  }

  if (app.got_subcommand("cds-gen")) {
    const CdsSpec spec = cds_spec_from_json(read_json(a.market));
    const MarketModel m = make_cds_market(spec);
    json doc = m.to_json();
    round_numbers(doc);
    std::ofstream os(a.out);
    if (!os) throw InputError("cannot write " + a.out);
    os << doc.dump(2) << "\n";
    note("CDS market written to " + a.out);
    emit({{"out", a.out},
          {"ask", m.ask(m.tree().root(), 0)},
          {"bid", m.bid(m.tree().root(), 0)}});
    return 0;
  }

  if (app.got_subcommand("extended-arb")) {
    const MarketModel m = load_market(a.market);
    check_time(m, a.t);
    const DerivativeContract d = derivative_from_json(m.tree(), read_json(a.second));
    const std::vector<double> w(m.tree().nodes_at(a.t).size(), a.w);
    const auto cert = extended_cone_check(m, d, a.t, w, a.side == "a" ? ExtendedSide::A : ExtendedSide::B, tol);
    if (!cert) {
      note("no arbitrage in the extended market");
      emit({{"arbitrage", false}});
      return 0;
    }
    json xi = json::object();
    const auto roots = m.tree().nodes_at(a.t);
    for (std::size_t i = 0; i < roots.size(); ++i) xi[m.tree().name(roots[i])] = cert->xi[i];
    json c = strategy_to_json(m, cert->strategy);
    c["xi"] = xi;
    c["leafValues"] = leaf_map(m.tree(), cert->leaves, cert->leaf_values);
    c["margin"] = cert->margin;
    note("arbitrage in the extended market, margin " + std::to_string(cert->margin));
    emit({{"arbitrage", true}, {"certificate", c}});
    return 0;
  }

  throw InputError("no subcommand given");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arbitrage, pricing-system and hedging analysis for scenario-tree markets"};
  app.require_subcommand(1);
  Args a;
  app.add_flag("-v,--verbose", a.verbose, "Write a summary to stderr");

  auto* validate = app.add_subcommand("validate", "Load and validate a market document");
  validate->add_option("market", a.market)->required();

  auto* verify = app.add_subcommand("verify", "Value process and self-financing check of a strategy");
  verify->add_option("market", a.market)->required();
  verify->add_option("strategy", a.second)->required();

  auto* arb = app.add_subcommand("arb", "Search for an arbitrage strategy");
  arb->add_option("market", a.market)->required();
  arb->add_option("--t", a.t, "Start time")->capture_default_str();
  arb->add_option("--dump-cone", a.dump, "Write the cone matrices as text");

  auto* rn = app.add_subcommand("rn", "Search for a risk-neutral measure");
  rn->add_option("market", a.market)->required();
  rn->add_option("--t", a.t, "Start time")->capture_default_str();

  auto* ef = app.add_subcommand("ef", "Check the efficient friction assumption");
  ef->add_option("market", a.market)->required();

  auto* cpsv = app.add_subcommand("cps-verify", "Verify a consistent pricing system");
  cpsv->add_option("market", a.market)->required();
  cpsv->add_option("cps", a.second)->required();

  auto* cpsb = app.add_subcommand("cps-build", "Build a consistent pricing system from a risk-neutral measure");
  cpsb->add_option("market", a.market)->required();
  cpsb->add_option("--q", a.qfile, "Measure document (default: search for one)");

  auto* price = app.add_subcommand("price", "Superhedging ask or subhedging bid price");
  price->add_option("market", a.market)->required();
  price->add_option("derivative", a.second)->required();
  price->add_option("--t", a.t, "Pricing time")->capture_default_str();
  price->add_option("--side", a.side)->required()->check(CLI::IsMember({"ask", "bid"}));
  price->add_flag("--dual", a.dual, "Also report the dual bound and its measure");

  auto* cds = app.add_subcommand("cds-gen", "Generate a CDS market document");
  cds->add_option("spec", a.market)->required();
  cds->add_option("--out", a.out)->required();

  auto* ext = app.add_subcommand("extended-arb", "Arbitrage check with the derivative traded at w");
  ext->add_option("market", a.market)->required();
  ext->add_option("derivative", a.second)->required();
  ext->add_option("--t", a.t, "Start time")->capture_default_str();
  ext->add_option("--w", a.w)->required();
  ext->add_option("--side", a.side)->required()->check(CLI::IsMember({"a", "b"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    return run(app, a);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  }
}
