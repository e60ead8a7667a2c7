#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fmkt/cps.hpp"
#include "support/random_markets.hpp"

namespace fs = std::filesystem;
using namespace fmkt::testing;

namespace {

struct Run {
  int code = -1;
  std::string out;
  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Run run(const std::string& args) {
  const std::string cmd = std::string(FMKT_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string fixture(const char* name) { return std::string(FMKT_FIXTURES) + "/" + name; }

fs::path scratch(const char* name) {
  fs::path dir = fs::temp_directory_path() / ("fmkt_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST(Cli, Validate) {
  auto r = run("validate " + fixture("tree1.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.json()["ok"], true);
}

TEST(Cli, ValidationFailureExitsOne) {
  auto doc = read_fixture("tree1.json");
  doc["securities"][0]["quotes"]["n0"]["bid"] = 10.5;
  auto p = scratch("bad.json");
  write(p, doc.dump());
  EXPECT_EQ(run("validate " + p.string()).code, 1);
  EXPECT_EQ(run("validate " + scratch("missing.json").string()).code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
}

TEST(Cli, ArbitrageCertificate) {
  auto r = run("arb " + fixture("treearb.json"));
  EXPECT_EQ(r.code, 0);
  auto j = r.json();
  EXPECT_EQ(j["arbitrage"], true);
  EXPECT_DOUBLE_EQ(j["certificate"]["strategy"]["n0"]["risky"][0].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["certificate"]["leafValues"]["n_u"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["certificate"]["leafValues"]["n_d"].get<double>(), 0.5);
  EXPECT_EQ(run("arb " + fixture("tree1.json")).json()["arbitrage"], false);
}

TEST(Cli, PriceDigital) {
  auto r = run("price " + fixture("tree1.json") + " " + fixture("digital_up.json") + " --t 0 --side ask");
  EXPECT_EQ(r.code, 0);
  EXPECT_DOUBLE_EQ(r.json()["prices"]["n0"].get<double>(), 0.75);
  auto b = run("price " + fixture("tree1.json") + " " + fixture("digital_up.json") + " --side bid --dual");
  EXPECT_DOUBLE_EQ(b.json()["prices"]["n0"].get<double>(), 0.25);
  EXPECT_DOUBLE_EQ(b.json()["dual"]["n0"]["bound"].get<double>(), 0.25);
}

TEST(Cli, ExtendedArbitrage) {
  const std::string base = "extended-arb " + fixture("tree1.json") + " " + fixture("digital_up.json") + " --side b --w ";
  EXPECT_EQ(run(base + "0.5").json()["arbitrage"], false);
  EXPECT_EQ(run(base + "0.9").json()["arbitrage"], true);
}

TEST(Cli, CdsGenRoundTrip) {
  auto out = scratch("cds.json");
  EXPECT_EQ(run("cds-gen " + fixture("cds1_spec.json") + " --out " + out.string()).code, 0);
  EXPECT_EQ(run("validate " + out.string()).code, 0);
  auto m = fmkt::MarketModel::from_json(nlohmann::json::parse(std::ifstream(out)));
  EXPECT_NEAR(m.ask(0, 0), 0.0456, 1e-12);
  EXPECT_EQ(run("arb " + out.string()).json()["arbitrage"], false);
}

TEST(Cli, RnFeedsCpsBuild) {
  auto rn = run("rn " + fixture("tree1.json"));
  ASSERT_EQ(rn.code, 0);
  auto q = scratch("q.json");
  write(q, rn.out);
  auto built = run("cps-build " + fixture("tree1.json") + " --q " + q.string());
  ASSERT_EQ(built.code, 0);
  auto cps = scratch("cps.json");
  write(cps, built.out);
  auto v = run("cps-verify " + fixture("tree1.json") + " " + cps.string());
  EXPECT_EQ(v.code, 0);
  EXPECT_EQ(v.json()["ok"], true);
}

TEST(Cli, CpsBuildNeedsZeroDividendSpread) {
  EXPECT_EQ(run("cps-build " + fixture("cds1.json")).code, 1);
}

TEST(Cli, EfficientFriction) {
  auto r = run("ef " + fixture("tree1.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.json()["ef"], true);
  EXPECT_EQ(run("ef " + fixture("treearb.json")).code, 1);
}

TEST(Cli, Deterministic) {
  Rng rng(401);
  for (int rep = 0; rep < 5; ++rep) {
    auto m = random_market(rng);
    auto p = scratch("det.json");
    write(p, m.to_json().dump());
    for (const char* cmd : {"arb ", "rn "}) {
      auto a = run(cmd + p.string()), b = run(cmd + p.string());
      EXPECT_EQ(a.out, b.out);
      EXPECT_EQ(a.code, 0);
    }
  }
}

TEST(Cli, TwelveSignificantDigits) {
  auto r = run("arb " + fixture("treearb.json") + " --t 0");
  EXPECT_EQ(r.out.find("0.50000000000"), std::string::npos);
  auto out = scratch("cds12.json");
  run("cds-gen " + fixture("cds1_spec.json") + " --out " + out.string());
  std::ifstream in(out);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(text.find("0.045599999"), std::string::npos);
}
