#include "fmkt/market.hpp"

#include <cmath>

#include "fmkt/errors.hpp"

namespace fmkt {

namespace {

using Kind = ValidationError::Kind;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void require_finite(double v, const std::string& node, const char* field) {
  if (!std::isfinite(v)) {
    throw ValidationError(Kind::Malformed, node,
                          std::string("non-finite ") + field + " at node " + node);
  }
}

}  // namespace

Quotes make_quotes(const ScenarioTree& tree, std::size_t n) {
  return {NodeVector(tree.size(), n), NodeVector(tree.size(), n), NodeVector(tree.size(), n),
          NodeVector(tree.size(), n)};
}

MarketModel MarketModel::build(ScenarioTree tree, std::vector<double> rates,
                               std::vector<std::string> names, Quotes quotes) {
  const std::size_t T = static_cast<std::size_t>(tree.horizon());
  if (rates.size() != T + 1) {
    throw ValidationError(Kind::ShapeMismatch, "",
                          "expected " + std::to_string(T + 1) + " rates, got " +
                              std::to_string(rates.size()));
  }
  for (std::size_t t = 0; t <= T; ++t) {
    if (!std::isfinite(rates[t])) {
      throw ValidationError(Kind::Malformed, "", "non-finite rate at time " + std::to_string(t));
    }
    if (rates[t] < 0.0) {
      throw ValidationError(Kind::NegativeRate, "",
                            "negative rate " + num(rates[t]) + " at time " + std::to_string(t));
    }
  }
  const std::size_t N = names.size();
  for (const NodeVector* v : {&quotes.ask, &quotes.bid, &quotes.div_ask, &quotes.div_bid}) {
    if (v->nodes() != tree.size() || v->width() != N) {
      throw ValidationError(Kind::ShapeMismatch, "", "quote arrays do not match tree and securities");
    }
  }
  for (NodeId n = 0; n < tree.size(); ++n) {
    const std::string& id = tree.name(n);
    for (std::size_t j = 0; j < N; ++j) {
      require_finite(quotes.ask(n, j), id, "ask");
      require_finite(quotes.bid(n, j), id, "bid");
      require_finite(quotes.div_ask(n, j), id, "dAsk");
      require_finite(quotes.div_bid(n, j), id, "dBid");
      if (quotes.bid(n, j) > quotes.ask(n, j)) {
        throw ValidationError(Kind::BidAboveAsk, id,
                              "bid exceeds ask at node " + id + " for security " + names[j] +
                                  " (" + num(quotes.bid(n, j)) + " > " + num(quotes.ask(n, j)) + ")");
      }
      if (n == tree.root()) {
        if (quotes.div_ask(n, j) != 0.0 || quotes.div_bid(n, j) != 0.0) {
          throw ValidationError(Kind::UnexpectedDividend, id,
                                "dividend increment given at time-0 node " + id);
        }
      } else if (quotes.div_ask(n, j) > quotes.div_bid(n, j)) {
        throw ValidationError(Kind::DividendAskAboveBid, id,
                              "dividend ask exceeds dividend bid at node " + id + " for security " +
                                  names[j]);
      }
    }
  }

  MarketModel m;
  m.savings_.resize(T + 1);
  double b = 1.0;
  for (std::size_t t = 0; t <= T; ++t) {
    b *= 1.0 + rates[t];
    m.savings_[t] = b;
  }
  m.disc_ = quotes;
  for (NodeId n = 0; n < tree.size(); ++n) {
    const double B = m.savings_[static_cast<std::size_t>(tree.time(n))];
    for (std::size_t j = 0; j < N; ++j) {
      m.disc_.ask(n, j) /= B;
      m.disc_.bid(n, j) /= B;
      m.disc_.div_ask(n, j) /= B;
      m.disc_.div_bid(n, j) /= B;
    }
  }
  m.tree_ = std::move(tree);
  m.rates_ = std::move(rates);
  m.names_ = std::move(names);
  m.raw_ = std::move(quotes);
  return m;
}

MarketModel MarketModel::from_json(const nlohmann::json& doc) {
  ScenarioTree tree = ScenarioTree::from_json(doc);
  try {
    std::vector<double> rates;
    if (doc.contains("rates")) {
      rates = doc["rates"].get<std::vector<double>>();
    } else {
      rates.assign(static_cast<std::size_t>(tree.horizon()) + 1, 0.0);
    }
    std::vector<std::string> names;
    const nlohmann::json secs = doc.value("securities", nlohmann::json::array());
    if (!secs.is_array()) {
      throw ValidationError(Kind::Malformed, "", "\"securities\" must be an array");
    }
    for (std::size_t j = 0; j < secs.size(); ++j) {
      names.push_back(secs[j].value("name", "security " + std::to_string(j + 1)));
    }
    Quotes q = make_quotes(tree, names.size());
    for (std::size_t j = 0; j < secs.size(); ++j) {
      const auto& quotes = secs[j].at("quotes");
      for (NodeId n = 0; n < tree.size(); ++n) {
        const std::string& id = tree.name(n);
        if (!quotes.contains(id)) {
          throw ValidationError(Kind::MissingQuote, id,
                                "missing quote for security " + names[j] + " at node " + id);
        }
        const auto& e = quotes[id];
        if (!e.contains("ask") || !e.contains("bid")) {
          throw ValidationError(Kind::MissingQuote, id,
                                "missing ask/bid for security " + names[j] + " at node " + id);
        }
        q.ask(n, j) = e["ask"].get<double>();
        q.bid(n, j) = e["bid"].get<double>();
        const bool has_div = e.contains("dAsk") || e.contains("dBid");
        if (tree.time(n) == 0) {
          if (has_div) {
            throw ValidationError(Kind::UnexpectedDividend, id,
                                  "dividend increment given at time-0 node " + id);
          }
        } else {
          if (!e.contains("dAsk") || !e.contains("dBid")) {
            throw ValidationError(Kind::MissingQuote, id,
                                  "missing dAsk/dBid for security " + names[j] + " at node " + id);
          }
          q.div_ask(n, j) = e["dAsk"].get<double>();
          q.div_bid(n, j) = e["dBid"].get<double>();
        }
      }
      for (const auto& [id, _] : quotes.items()) {
        if (!tree.find(id)) {
          throw ValidationError(Kind::Malformed, id, "quote for unknown node " + id);
        }
      }
    }
    return build(std::move(tree), std::move(rates), std::move(names), std::move(q));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(Kind::Malformed, "", std::string("malformed market document: ") + e.what());
  }
}

nlohmann::json MarketModel::to_json() const {
  nlohmann::json doc;
  tree_.to_json(doc);
  doc["rates"] = rates_;
  nlohmann::json secs = nlohmann::json::array();
  for (std::size_t j = 0; j < names_.size(); ++j) {
    nlohmann::json quotes = nlohmann::json::object();
    for (NodeId n = 0; n < tree_.size(); ++n) {
      nlohmann::json e;
      e["ask"] = raw_.ask(n, j);
      e["bid"] = raw_.bid(n, j);
      if (tree_.time(n) > 0) {
        e["dAsk"] = raw_.div_ask(n, j);
        e["dBid"] = raw_.div_bid(n, j);
      }
      quotes[tree_.name(n)] = std::move(e);
    }
    secs.push_back({{"name", names_[j]}, {"quotes", std::move(quotes)}});
  }
  doc["securities"] = std::move(secs);
  return doc;
}

DiscountedQuotes discounted_quotes(const MarketModel& m) { return m.discounted(); }

}  // namespace fmkt
