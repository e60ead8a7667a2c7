// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fmkt/arbitrage.hpp"
#include "fmkt/cds.hpp"
#include "fmkt/cps.hpp"
#include "fmkt/errors.hpp"
#include "fmkt/hedging.hpp"
#include "support/random_markets.hpp"

using namespace fmkt;
using namespace fmkt::testing;

namespace {

// Pinned tolerances.
constexpr double kFixtureTol = 1e-9;
constexpr double kMeasureTol = 1e-7;
constexpr double kDualityRel = 1e-7;
constexpr double kCpsTol = 1e-9;
constexpr double kLambdaSlack = 1e-12;
constexpr double kCombineTol = 1e-9;
constexpr double kCdsTol = 1e-12;
constexpr double kSnellTol = 1e-9;
constexpr double kGridStep = 1e-3;
constexpr double kGridPriceTol = 2e-3;
constexpr double kThresholdGap = 1e-3;
constexpr double kFftapSeconds = 60.0;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); }

std::vector<std::vector<double>> fftap_measures;
std::vector<MarketModel> fftap_markets;

void criterion1() {
  Rng rng(1001);
  const int count = 1200;
  int disagreements = 0, arb = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < count; ++k) {
    auto m = random_market(rng);
    const bool has_cert = check_no_arbitrage(m).has_value();
    auto rn = find_risk_neutral_measure(m);
    if (has_cert == rn.has_value()) ++disagreements;
    if (has_cert) ++arb;
    if (rn) {
      fftap_measures.push_back(rn->q);
      fftap_markets.push_back(std::move(m));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream d;
  d << count << " markets, " << arb << " with arbitrage, " << disagreements << " disagreements, " << fmt("%.2f", secs)
    << " s";
  report(1, disagreements == 0 && secs < kFftapSeconds, "FFTAP equivalence", d.str());
}

// Scalar-strategy payoff per leaf in a one-period, one-security market.
std::vector<double> grid_payoff(const MarketModel& m, double psi) {
  std::vector<double> f;
  const auto& d = m.discounted();
  for (NodeId l : m.tree().leaves()) {
    f.push_back(psi >= 0 ? psi * (d.bid(l, 0) + d.div_ask(l, 0) - d.ask(0, 0))
                         : psi * (d.ask(l, 0) + d.div_bid(l, 0) - d.bid(0, 0)));
  }
  return f;
}

void criterion2() {
  Rng rng(2002);
  const int count = 320;
  int verdict_mismatch = 0, priced = 0;
  double worst = 0.0;
  const int steps = static_cast<int>(std::lround(10.0 / kGridStep));
  for (int k = 0; k < count; ++k) {
    auto m = random_one_period(rng);
    const auto leaves = m.tree().leaves();
    std::vector<double> S;
    DerivativeContract d{"grid", NodeVector(m.tree().size(), 1)};
    for (NodeId l : leaves) S.push_back(d.cashflows(l) = uniform(rng, 0.0, 1.0));

    bool grid_arb = false;
    double ask = 1e300, bid = -1e300;
    for (int i = -steps; i <= steps; ++i) {
      const double psi = i * kGridStep;
      const auto f = grid_payoff(m, psi);
      const double lo = *std::min_element(f.begin(), f.end()), hi = *std::max_element(f.begin(), f.end());
      if (lo >= 0.0 && hi > 0.0) grid_arb = true;
      double w = -1e300, b = 1e300;
      for (std::size_t l = 0; l < f.size(); ++l) {
        w = std::max(w, S[l] - f[l]);
        b = std::min(b, S[l] + f[l]);
      }
      ask = std::min(ask, w);
      bid = std::max(bid, b);
    }
    const bool lp_arb = check_no_arbitrage(m).has_value();
    if (lp_arb != grid_arb) ++verdict_mismatch;
    if (lp_arb) continue;
    ++priced;
    worst = std::max(worst, std::abs(superhedge_ask(m, d, 0).nodes[0].price - ask));
    worst = std::max(worst, std::abs(subhedge_bid(m, d, 0).nodes[0].price - bid));
  }
  std::ostringstream d;
  d << count << " markets, " << verdict_mismatch << " verdict mismatches, " << priced
    << " priced, worst price gap " << fmt("%.3g", worst);
  report(2, verdict_mismatch == 0 && priced >= 200 && worst <= kGridPriceTol, "grid oracle", d.str());
}

void criterion3() {
  auto m = load_fixture_market("tree1.json");
  auto d = derivative_from_json(m.tree(), read_fixture("digital_up.json"));
  const double ask = superhedge_ask(m, d, 0).nodes[0].price;
  const double bid = subhedge_bid(m, d, 0).nodes[0].price;
  const auto up = dual_price_bound(m, d, 0, PriceSide::Ask).nodes[0];
  const auto lo = dual_price_bound(m, d, 0, PriceSide::Bid).nodes[0];
  const bool ok = std::abs(ask - 0.75) <= kFixtureTol && std::abs(bid - 0.25) <= kFixtureTol &&
                  std::abs(up.measure[0] - 0.75) <= kMeasureTol && std::abs(lo.measure[0] - 0.25) <= kMeasureTol &&
                  std::abs(up.price - 0.75) <= kMeasureTol && std::abs(lo.price - 0.25) <= kMeasureTol;
  std::ostringstream s;
  s << "ask " << fmt("%.12g", ask) << ", bid " << fmt("%.12g", bid) << ", q_up range [" << fmt("%.12g", lo.measure[0])
    << ", " << fmt("%.12g", up.measure[0]) << "]";
  report(3, ok, "TREE1 digital fixture", s.str());
}

void criterion4() {
  Rng rng(4004);
  const int count = 520;
  int bad = 0;
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    auto na = random_na_market(rng, {}, coin(rng, 0.5));
    const auto& m = na.market;
    auto d = random_derivative(rng, m, -2.0, 2.0);
    const int t = std::uniform_int_distribution<int>(0, m.tree().horizon() - 1)(rng);
    auto pa = superhedge_ask(m, d, t), da = dual_price_bound(m, d, t, PriceSide::Ask);
    auto pb = subhedge_bid(m, d, t), db = dual_price_bound(m, d, t, PriceSide::Bid);
    bool ok = true;
    for (std::size_t i = 0; i < pa.nodes.size(); ++i) {
      const double ga = rel_gap(pa.nodes[i].price, da.nodes[i].price);
      const double gb = rel_gap(pb.nodes[i].price, db.nodes[i].price);
      worst = std::max({worst, ga, gb});
      ok = ok && ga <= kDualityRel && gb <= kDualityRel;
    }
    if (!ok) ++bad;
  }
  std::ostringstream s;
  s << count << " triples, " << bad << " failures, worst relative gap " << fmt("%.3g", worst);
  report(4, bad == 0, "superhedging duality", s.str());
}

void criterion5() {
  Rng rng(5005);
  const int count = 320;
  int bad = 0;
  double lmin = 1.0, lmax = 0.0;
  for (int k = 0; k < count; ++k) {
    auto na = random_na_market(rng, {}, true);
    auto rn = find_risk_neutral_measure(na.market);
    if (!rn) {
      ++bad;
      continue;
    }
    try {
      auto c = build_cps_from_rn(na.market, rn->q);
      bool ok = verify_cps(na.market, c.cps, kCpsTol).ok();
      const auto& t = na.market.tree();
      for (NodeId n = 0; n < t.size(); ++n) {
        if (t.is_leaf(n)) continue;
        for (std::size_t j = 0; j < na.market.num_securities(); ++j) {
          const double l = c.lambda(n, j);
          lmin = std::min(lmin, l);
          lmax = std::max(lmax, l);
          ok = ok && l >= -kLambdaSlack && l <= 1.0 + kLambdaSlack;
        }
      }
      if (!ok) ++bad;
    } catch (const std::exception&) {
      ++bad;
    }
  }
  std::ostringstream s;
  s << count << " markets, " << bad << " failures, lambda range [" << fmt("%.6g", lmin) << ", " << fmt("%.6g", lmax)
    << "]";
  report(5, bad == 0, "CPS construction", s.str());
}

int run_cli(const std::string& args) {
  const int rc = std::system((std::string(FMKT_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return rc;
}

void criterion6() {
  Rng rng(6006);
  const int count = 400;
  int verified = 0, bad = 0;
  for (int k = 0; k < count; ++k) {
    auto na = random_na_market(rng, {}, coin(rng, 0.5));
    if (!verify_cps(na.market, na.cps).ok()) continue;
    ++verified;
    if (check_no_arbitrage(na.market)) ++bad;
  }
  int cds = 0;
  const auto dir = std::filesystem::temp_directory_path() / "fmkt_acceptance";
  std::filesystem::create_directories(dir);
  auto base = read_fixture("cds1_spec.json");
  for (double kb : {0.0, 0.02, 0.04, 0.06}) {
    for (double ka : {0.0, 0.03, 0.06, 0.09, 0.12}) {
      if (ka < kb) continue;
      base["kappaAsk"] = ka;
      base["kappaBid"] = kb;
      const auto spec_path = dir / "spec.json", out_path = dir / "market.json";
      std::ofstream(spec_path) << base.dump();
      if (run_cli("cds-gen " + spec_path.string() + " --out " + out_path.string()) != 0) {
        ++bad;
        continue;
      }
      auto m = MarketModel::from_json(nlohmann::json::parse(std::ifstream(out_path)));
      auto spec = cds_spec_from_json(base);
      if (!verify_cps(m, make_cds_cps(spec, 0.5 * (ka + kb))).ok()) {
        ++bad;
        continue;
      }
      ++cds;
      if (check_no_arbitrage(m)) ++bad;
    }
  }
  std::ostringstream s;
  s << verified << " random markets and " << cds << " cds-gen markets with verified CPS, " << bad << " failures";
  report(6, bad == 0 && verified > 0 && cds > 0, "CPS implies NA", s.str());
}

void criterion7() {
  Rng rng(7007);
  const int count = 600;
  int bad = 0, same_sign = 0, same_sign_bad = 0;
  for (int k = 0; k < count; ++k) {
    auto m = random_market(rng);
    const auto a = random_holdings(rng, m);
    NodeVector b;
    const bool scaled = k % 3 == 0;
    if (scaled) {
      b = a;
      const double c = uniform(rng, 0.1, 3.0);
      for (double& v : b.raw()) v *= c;
    } else {
      b = random_holdings(rng, m);
    }
    const auto phi = complete_cash_leg(m, a, 0.0), psi = complete_cash_leg(m, b, 0.0);
    const auto th = combine(m, phi, psi);
    // Netting at time 0 can only save money, so V_0(theta) <= 0.
    const double v0 = value_process(m, th)(0);
    bool ok = is_self_financing(m, th).ok && v0 <= kCombineTol;
    const auto& t = m.tree();
    for (NodeId n = 0; n < t.size(); ++n) {
      if (t.is_leaf(n)) continue;
      ok = ok && th.cash(n) >= phi.cash(n) + psi.cash(n) - kCombineTol;
    }
    const auto vt = discounted_value_process(m, th), vp = discounted_value_process(m, phi),
               vq = discounted_value_process(m, psi);
    bool equal = std::abs(v0) <= kCombineTol;
    for (NodeId l : t.leaves()) {
      ok = ok && vt(l) >= vp(l) + vq(l) - kCombineTol;
      equal = equal && std::abs(vt(l) - vp(l) - vq(l)) <= kCombineTol;
    }
    if (!ok) ++bad;
    if (scaled) {
      ++same_sign;
      if (!equal) ++same_sign_bad;
    }
  }
  std::ostringstream s;
  s << count << " pairs, " << bad << " violations; " << same_sign << " same-sign pairs, " << same_sign_bad
    << " without equality";
  report(7, bad == 0 && same_sign_bad == 0, "combination superadditivity", s.str());
}

void criterion8() {
  auto spec = cds_spec_from_json(read_fixture("cds1_spec.json"));
  auto m = make_cds_market(spec);
  const double ask = m.discounted().ask(0, 0), bid = m.discounted().bid(0, 0);
  const double mid = make_cds_cps(spec, 0.05).P(0, 0);
  const bool ok =
      std::abs(ask - 0.0456) <= kCdsTol && std::abs(bid - 0.0114) <= kCdsTol && std::abs(mid - 0.0285) <= kCdsTol;
  std::ostringstream s;
  s << "ask " << fmt("%.15g", ask) << ", bid " << fmt("%.15g", bid) << ", P0(0.05) " << fmt("%.15g", mid);
  report(8, ok, "CDS fixture", s.str());
}

void criterion9() {
  int bad = 0;
  for (std::size_t k = 0; k < fftap_markets.size(); ++k) {
    const auto& m = fftap_markets[k];
    const auto& q = fftap_measures[k];
    const auto e = snell_envelopes(m, q);
    const auto mq = Measure::from_leaf_probabilities(m.tree(), q);
    const auto& t = m.tree();
    bool ok = true;
    for (NodeId n = 0; n < t.size(); ++n) {
      for (std::size_t j = 0; j < m.num_securities(); ++j) {
        ok = ok && e.Xb(n, j) <= e.Xa(n, j) + kSnellTol;
        if (t.is_leaf(n)) continue;
        const double eb = expect_children(t, mq, n, [&](NodeId c) { return e.Xb(c, j); });
        const double ea = expect_children(t, mq, n, [&](NodeId c) { return e.Xa(c, j); });
        ok = ok && eb <= e.Xb(n, j) + kSnellTol && ea >= e.Xa(n, j) - kSnellTol;
      }
    }
    if (!ok) ++bad;
  }
  std::ostringstream s;
  s << fftap_markets.size() << " measures, " << bad << " failures";
  report(9, bad == 0 && !fftap_markets.empty(), "Snell envelope properties", s.str());
}

void criterion10() {
  auto m = load_fixture_market("tree1.json");
  auto d = derivative_from_json(m.tree(), read_fixture("digital_up.json"));
  const bool below = extended_cone_check(m, d, 0, {0.75 - kThresholdGap}, ExtendedSide::B).has_value();
  const bool above = extended_cone_check(m, d, 0, {0.75 + kThresholdGap}, ExtendedSide::B).has_value();
  std::ostringstream s;
  s << "w=0.749 " << (below ? "certificate" : "none") << ", w=0.751 " << (above ? "certificate" : "none");
  report(10, !below && above, "extended-cone threshold", s.str());
}

}  // namespace

int main() {
  const std::pair<int, void (*)()> steps[] = {{1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
                                              {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8},
                                              {9, criterion9}, {10, criterion10}};
  for (const auto& [id, fn] : steps) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, "exception", e.what());
    }
  }
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
